#pragma once

#include <array>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace retrospect::rewards {

// The fixed stopword list removed before token matching. Thirty common
// English function words; changing it changes every F1 value.
inline constexpr std::array<std::string_view, 30> kStopwords = {
    "a",    "an",   "the",  "and",  "or",   "of",  "to",  "in",   "on",   "at",
    "for",  "with", "by",   "from", "is",   "are", "was", "were", "be",   "been",
    "it",   "its",  "this", "that", "as",   "but", "not", "no",   "do",   "does",
};

// Lowercase, delete ASCII punctuation, split on whitespace, drop stopwords.
std::vector<std::string> normalize_tokens(std::string_view text);

// Token-multiset F1 between a generated answer and the gold answer.
double f1_reward(std::string_view generated, std::string_view gold);

double binary_reward(bool goal_satisfied);

struct ShopTarget {
  std::set<std::string> attributes;  // U_att
  std::set<std::string> options;     // U_opt
  double price_limit = 0.0;          // u_price
  std::string type_text;
};

struct ShopChoice {
  std::set<std::string> attributes;  // Y_att
  std::set<std::string> options;     // Y_opt
  double price = 0.0;                // y_price
  std::string type_text;
};

// 1 when the normalized product types share at least one token.
double type_match(std::string_view target_type, std::string_view choice_type);

// r_type * (|U_att & Y_att| + |U_opt & Y_opt| + [y_price <= u_price])
//        / (|U_att| + |U_opt| + 1)
double shop_reward(const ShopTarget& target, const ShopChoice& choice);

}  // namespace retrospect::rewards
