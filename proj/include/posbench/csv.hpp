#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace posbench::csv {

// Fields written by this project never contain commas, quotes or newlines
// (labels are validated identifiers), so no quoting is needed.
inline std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      break;
    }
    out.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline std::string join(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += fields[i];
  }
  return out;
}

}  // namespace posbench::csv
