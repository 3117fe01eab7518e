#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "smallgroup/errors.hpp"

namespace smallgroup {

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      return out;
    }
    out.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::uint64_t parse_u64(std::string_view s, const char* what) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError(std::string("expected unsigned integer for ") + what + ", got '" +
                      std::string(s) + "'");
  return v;
}

inline std::vector<std::uint64_t> parse_u64_list(std::string_view s, const char* what) {
  std::vector<std::uint64_t> out;
  if (s.empty()) return out;
  for (const auto& part : split(s, ',')) out.push_back(parse_u64(part, what));
  return out;
}

// Overflow-checked product; 0 means "would overflow" is never valid input here.
inline bool mul_overflows_u64(std::uint64_t a, std::uint64_t b) {
  if (a == 0 || b == 0) return false;
  return a > UINT64_MAX / b;
}

}  // namespace smallgroup
