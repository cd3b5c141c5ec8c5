#pragma once

#include <cstdio>
#include <string>
#include <vector>

namespace maleval {

/// Fixed two-decimal formatting used for every percent column, keeping CSV
/// and table output byte-stable across platforms.
inline std::string fmt2(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", value);
  return buf;
}

inline std::string fmt_precise(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", value);
  return buf;
}

inline std::string csv_quote(const std::string& field) {
  bool needs_quote = field.find_first_of(",\"\n") != std::string::npos;
  if (!needs_quote) {
    return field;
  }
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') {
      out += '"';
    }
    out += c;
  }
  out += '"';
  return out;
}

class CsvBuilder {
 public:
  void row(const std::vector<std::string>& fields) {
    std::string line;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i > 0) {
        line += ',';
      }
      line += csv_quote(fields[i]);
    }
    line += '\n';
    text_ += line;
  }

  const std::string& str() const { return text_; }

 private:
  std::string text_;
};

}  // namespace maleval
