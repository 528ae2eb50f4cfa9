#pragma once

#include <array>
#include <cstddef>
#include <string_view>

namespace retrospect {

// Indicator features of failure signals read off a rendered reflection
// prompt. Each failure mode lights up its own signal; bias terms cover the
// constant and the environment.
enum Feature : std::size_t {
  kBias,
  kReturnZero,
  kReturnPartial,
  kRepeatedAction,
  kTruncated,
  kWrongTarget,        // searched/took/bought something the task did not ask for
  kPrematureTerminal,  // ended the episode before every sub-goal was done
  kSkippedInspection,  // never looked inside/up what was found
  kOptionMismatch,     // selected an option the task did not request
  kInvalidAction,
  kEnvHouse,
  kEnvShop,
  kFeatureCount,
};

using FeatureVector = std::array<double, kFeatureCount>;

std::string_view feature_name(std::size_t feature);

// Pure function of the prompt text.
FeatureVector extract_features(std::string_view prompt_text);

}  // namespace retrospect
