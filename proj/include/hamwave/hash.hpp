// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hamwave {

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

/// Shortest round-trip decimal form of a double (deterministic across runs).
inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// Hash of a flat key=value configuration. Keys are sorted first, so the hash
/// does not depend on the order in which entries were added.
class ConfigHasher {
public:
  void add(std::string key, std::string value) { items_.emplace_back(std::move(key), std::move(value)); }
  void add(std::string key, double value) { add(std::move(key), format_double(value)); }
  void add(std::string key, std::int64_t value) { add(std::move(key), std::to_string(value)); }
  void add(std::string key, std::uint64_t value) { add(std::move(key), std::to_string(value)); }
  void add(std::string key, std::int32_t value) { add(std::move(key), std::to_string(value)); }

  std::uint64_t hash() const {
    auto items = items_;
    std::sort(items.begin(), items.end());
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& [k, v] : items) {
      h = fnv1a64(k, h);
      h = fnv1a64("=", h);
      h = fnv1a64(v, h);
      h = fnv1a64("\n", h);
    }
    return h;
  }

private:
  std::vector<std::pair<std::string, std::string>> items_;
};

}  // namespace hamwave
