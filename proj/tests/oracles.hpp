#pragma once

// Reference implementations written independently of the library, used as
// oracles by the unit tests and the acceptance suite.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>
#include <vector>

namespace oracle {

inline const std::vector<std::string>& stopwords() {
  static const std::vector<std::string> words = {
      "a",  "an", "the", "and", "or",   "of",   "to",   "in",   "on",  "at",
      "for", "with", "by", "from", "is", "are", "was", "were", "be", "been",
      "it", "its", "this", "that", "as", "but", "not", "no", "do", "does"};
  return words;
}

// Lowercase, drop punctuation characters, split on whitespace, drop
// stopwords.
inline std::vector<std::string> tokens(const std::string& text) {
  std::string cleaned;
  for (unsigned char c : text) {
    if (std::ispunct(c)) continue;
    cleaned.push_back(std::isspace(c) ? ' ' : static_cast<char>(std::tolower(c)));
  }
  std::vector<std::string> out;
  std::string word;
  for (char c : cleaned + " ") {
    if (c != ' ') {
      word.push_back(c);
      continue;
    }
    if (!word.empty()) {
      const auto& sw = stopwords();
      if (std::find(sw.begin(), sw.end(), word) == sw.end()) out.push_back(word);
      word.clear();
    }
  }
  return out;
}

// Multiset intersection size by sorting both sides and walking them.
inline int common_count(std::vector<std::string> a, std::vector<std::string> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  int n = 0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++n;
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return n;
}

inline double f1(const std::string& generated, const std::string& gold) {
  const auto g = tokens(generated);
  const auto r = tokens(gold);
  if (g.empty() || r.empty()) return 0.0;
  const int common = common_count(g, r);
  if (common == 0) return 0.0;
  // 2PR / (P + R) with P = c/|g|, R = c/|r| simplifies to 2c / (|g| + |r|).
  return 2.0 * common / static_cast<double>(g.size() + r.size());
}

// Term-by-term evaluation with element-by-element set intersections.
inline double shop(const std::vector<std::string>& u_att, const std::vector<std::string>& u_opt, double u_price,
                   const std::string& u_type, const std::vector<std::string>& y_att,
                   const std::vector<std::string>& y_opt, double y_price, const std::string& y_type) {
  auto overlap = [](const std::vector<std::string>& u, const std::vector<std::string>& y) {
    int n = 0;
    for (const auto& a : u) {
      for (const auto& b : y) {
        if (a == b) {
          ++n;
          break;
        }
      }
    }
    return n;
  };
  const bool type_ok = common_count(tokens(u_type), tokens(y_type)) >= 1;
  if (!type_ok) return 0.0;
  const double num = overlap(u_att, y_att) + overlap(u_opt, y_opt) + (y_price <= u_price ? 1 : 0);
  const double den = static_cast<double>(u_att.size() + u_opt.size()) + 1.0;
  return num / den;
}

inline double relative_error(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-8});
  return std::abs(a - b) / scale;
}

// Max relative error between two vectors, scaled by the larger norm.
inline double vector_relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    na = std::max(na, std::abs(a[i]));
    nb = std::max(nb, std::abs(b[i]));
  }
  return diff / std::max({na, nb, 1e-8});
}

}  // namespace oracle
