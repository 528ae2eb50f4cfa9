#pragma once

// Shared fixtures for the unit tests and the acceptance suite.

#include <vector>

#include "retrospect/features.hpp"
#include "retrospect/retro.hpp"
#include "retrospect/rlhf.hpp"
#include "retrospect/rng.hpp"

namespace fixture {

using namespace retrospect;

// A handful of distinct contexts: bias plus one failure signal each.
inline std::vector<FeatureVector> contexts() {
  std::vector<FeatureVector> out;
  for (std::size_t f : {kReturnZero, kRepeatedAction, kWrongTarget, kPrematureTerminal, kSkippedInspection}) {
    FeatureVector phi{};
    phi[kBias] = 1.0;
    phi[f] = 1.0;
    out.push_back(phi);
  }
  return out;
}

// Reward model scoring `margin` for template `target` in every context and 0
// otherwise.
inline RewardModel favoring(int target, double margin, std::size_t num_templates = 8) {
  std::vector<double> w(kFeatureCount * num_templates, 0.0);
  w[kBias * num_templates + static_cast<std::size_t>(target)] = margin;
  return RewardModel(std::move(w), num_templates);
}

inline double mean_prob(const RetroPolicy& policy, int target) {
  const auto ctx = contexts();
  double sum = 0.0;
  for (const auto& phi : ctx) sum += policy_probs(policy, phi)[static_cast<std::size_t>(target)];
  return sum / static_cast<double>(ctx.size());
}

inline double mean_kl(const RetroPolicy& policy) {
  const auto ctx = contexts();
  double sum = 0.0;
  for (const auto& phi : ctx) sum += kl_to_reference(policy, phi);
  return sum / static_cast<double>(ctx.size());
}

struct BanditRun {
  RetroPolicy policy;
  std::vector<double> target_prob;  // after each step, averaged over contexts
};

// On-policy bandit: every step samples a fresh batch at temperature 1 from
// the current policy and takes one ppo_step.
inline BanditRun run_bandit(const RewardModel& rm, int target, const PpoConfig& cfg, int steps, std::uint64_t seed,
                            std::size_t num_templates = 8) {
  const auto ctx = contexts();
  BanditRun run{RetroPolicy(num_templates), {}};
  for (int s = 0; s < steps; ++s) {
    std::vector<PpoSample> batch;
    for (int b = 0; b < cfg.batch_size; ++b) {
      const FeatureVector& phi = ctx[static_cast<std::size_t>(b) % ctx.size()];
      const std::uint64_t draw_seed =
          derive_seed({seed, static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(b)});
      const TemplateDraw d = sample_template(run.policy, phi, 1.0, draw_seed);
      batch.push_back({phi, d.response_id, d.logprob});
    }
    run.policy = ppo_step(run.policy, rm, std::span<const PpoSample>(batch), cfg).policy;
    run.target_prob.push_back(mean_prob(run.policy, target));
  }
  return run;
}

}  // namespace fixture
