#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "retrospect/retro.hpp"
#include "retrospect/rlhf.hpp"

namespace retrospect {

inline constexpr int kDefaultBestOfN = 4;

struct ScoredDraw {
  int response_id = 0;
  double score = 0.0;
};

struct BestOfN {
  int response_id = 0;
  std::string response_text;
  double score = 0.0;
  std::vector<ScoredDraw> draws;  // in draw order
};

// Draw 0 uses `seed` itself and draw j > 0 uses derive_seed({seed, j}), so
// n = 1 is exactly one sample_response call. The draw with
// the highest reward-model score wins, ties going to the smallest id.
BestOfN best_of_n(const RetroPolicy& policy, const RewardModel& rm, const ReflectionPrompt& prompt,
                  const TemplateLibrary& library, int n, double temperature, std::uint64_t seed);

}  // namespace retrospect
