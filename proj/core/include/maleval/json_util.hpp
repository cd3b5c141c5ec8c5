#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace maleval {

using json = nlohmann::json;

/// Canonical serialization: keys in lexicographic order (nlohmann default),
/// two-space indent, trailing newline. Re-emitting a loaded document is
/// byte-stable.
std::string canonical_dump(const json& doc);

/// One object per line, no indentation, trailing newline after each line.
std::string canonical_dump_jsonl(const std::vector<json>& lines);

json read_json_file(const std::filesystem::path& path);
std::vector<json> read_jsonl_file(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);

/// Write-temp-then-rename so concurrent readers never observe a torn file.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

void write_json_file(const std::filesystem::path& path, const json& doc);
void write_jsonl_file(const std::filesystem::path& path, const std::vector<json>& lines);

}  // namespace maleval
