#include "maleval/json_util.hpp"

#include <fstream>
#include <sstream>

#include "maleval/errors.hpp"

namespace maleval {

std::string canonical_dump(const json& doc) {
  return doc.dump(2) + "\n";
}

std::string canonical_dump_jsonl(const std::vector<json>& lines) {
  std::string out;
  for (const auto& line : lines) {
    out += line.dump();
    out += '\n';
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    raise(ErrorKind::MissingFile, path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json read_json_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) {
    raise(ErrorKind::SchemaViolation, path.string() + ": invalid JSON");
  }
  return doc;
}

std::vector<json> read_jsonl_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  std::vector<json> lines;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) {
      continue;
    }
    json doc = json::parse(line, nullptr, false);
    if (doc.is_discarded()) {
      raise(ErrorKind::SchemaViolation,
            path.string() + ":" + std::to_string(lineno) + ": invalid JSON line");
    }
    lines.push_back(std::move(doc));
  }
  return lines;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      raise(ErrorKind::MissingFile, "cannot write " + tmp.string());
    }
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

void write_json_file(const std::filesystem::path& path, const json& doc) {
  write_text_atomic(path, canonical_dump(doc));
}

void write_jsonl_file(const std::filesystem::path& path, const std::vector<json>& lines) {
  write_text_atomic(path, canonical_dump_jsonl(lines));
}

}  // namespace maleval
