#pragma once

#include <string>
#include <utility>
#include <vector>

#include "retrospect/rng.hpp"

namespace retrospect::envs::detail {

template <typename T>
void shuffle(std::vector<T>& items, CounterRng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[rng.index(i)]);
  }
}

template <typename T>
const T& pick(const std::vector<T>& items, CounterRng& rng) {
  return items[rng.index(items.size())];
}

inline std::string task_id(char prefix, int index) {
  std::string digits = std::to_string(index);
  while (digits.size() < 3) digits.insert(digits.begin(), '0');
  return std::string(1, prefix) + digits;
}

inline std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace retrospect::envs::detail
