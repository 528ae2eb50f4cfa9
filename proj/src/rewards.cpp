#include "retrospect/rewards.hpp"

#include <algorithm>
#include <cctype>
#include <map>

namespace retrospect::rewards {

namespace {

bool is_stopword(std::string_view token) {
  return std::find(kStopwords.begin(), kStopwords.end(), token) != kStopwords.end();
}

}  // namespace

std::vector<std::string> normalize_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty() && !is_stopword(current)) tokens.push_back(current);
    current.clear();
  };
  for (char raw : text) {
    const auto c = static_cast<unsigned char>(raw);
    if (std::isspace(c)) {
      flush();
    } else if (!std::ispunct(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  flush();
  return tokens;
}

double f1_reward(std::string_view generated, std::string_view gold) {
  const auto gen = normalize_tokens(generated);
  const auto ref = normalize_tokens(gold);
  if (gen.empty() || ref.empty()) return 0.0;

  std::map<std::string_view, int> gold_counts;
  for (const auto& t : ref) ++gold_counts[t];
  int common = 0;
  for (const auto& t : gen) {
    auto it = gold_counts.find(t);
    if (it != gold_counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  if (common == 0) return 0.0;
  const double precision = static_cast<double>(common) / static_cast<double>(gen.size());
  const double recall = static_cast<double>(common) / static_cast<double>(ref.size());
  return 2.0 * precision * recall / (precision + recall);
}

double binary_reward(bool goal_satisfied) { return goal_satisfied ? 1.0 : 0.0; }

double type_match(std::string_view target_type, std::string_view choice_type) {
  const auto a = normalize_tokens(target_type);
  const auto b = normalize_tokens(choice_type);
  for (const auto& t : a) {
    if (std::find(b.begin(), b.end(), t) != b.end()) return 1.0;
  }
  return 0.0;
}

double shop_reward(const ShopTarget& target, const ShopChoice& choice) {
  auto overlap = [](const std::set<std::string>& u, const std::set<std::string>& y) {
    std::size_t n = 0;
    for (const auto& s : u) n += y.count(s);
    return n;
  };
  const double matched = static_cast<double>(overlap(target.attributes, choice.attributes) +
                                             overlap(target.options, choice.options)) +
                         (choice.price <= target.price_limit ? 1.0 : 0.0);
  const double total =
      static_cast<double>(target.attributes.size() + target.options.size()) + 1.0;
  return type_match(target.type_text, choice.type_text) * matched / total;
}

}  // namespace retrospect::rewards
