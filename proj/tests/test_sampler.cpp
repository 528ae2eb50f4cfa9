#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "retrospect/actor.hpp"
#include "retrospect/envs.hpp"
#include "retrospect/sampler.hpp"

using namespace retrospect;

namespace {

constexpr std::size_t K = 8;

ReflectionPrompt some_prompt() {
  const auto env = envs::make_environment("synthqa", 1);
  const TaskSpec& task = env->task("q002");
  return build_reflection_prompt(envs::rollout(*env, task, ScriptedActor(), {}));
}

// Scores template k as ranks[k] in every context.
RewardModel ranked(const std::vector<double>& ranks) {
  std::vector<double> w(kFeatureCount * K, 0.0);
  for (std::size_t k = 0; k < K; ++k) w[kBias * K + k] = ranks[k];
  return RewardModel(w, K);
}

}  // namespace

TEST(BestOfN, SingleDrawIsOneSampleResponse) {
  const auto prompt = some_prompt();
  const TemplateLibrary lib = TemplateLibrary::standard();
  CounterRng rng(1);
  std::vector<double> theta(kFeatureCount * K);
  for (auto& v : theta) v = rng.uniform() - 0.5;
  const RetroPolicy policy(theta, K);
  const RewardModel rm = ranked({3, 1, 4, 1, 5, 9, 2, 6});
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const BestOfN b = best_of_n(policy, rm, prompt, lib, 1, 0.9, seed);
    const SampledResponse s = sample_response(policy, prompt, lib, 0.9, seed);
    EXPECT_EQ(b.response_id, s.response_id);
    EXPECT_EQ(b.response_text, s.response_text);
    ASSERT_EQ(b.draws.size(), 1u);
  }
}

TEST(BestOfN, ReturnsTheMaximumScoreAmongDraws) {
  const auto prompt = some_prompt();
  const TemplateLibrary lib = TemplateLibrary::standard();
  const RetroPolicy policy(K);
  const RewardModel rm = ranked({0.3, -1.0, 0.7, 0.1, 2.0, -0.5, 0.7, 1.1});
  const FeatureVector phi = extract_features(prompt.rendered);
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const BestOfN b = best_of_n(policy, rm, prompt, lib, 4, 0.9, seed);
    ASSERT_EQ(b.draws.size(), 4u);
    // Re-derive the draws independently from the documented seed schedule.
    double best = -1e300;
    int best_id = -1;
    for (int j = 0; j < 4; ++j) {
      const std::uint64_t s = j == 0 ? seed : derive_seed({seed, static_cast<std::uint64_t>(j)});
      const int id = sample_template(policy, phi, 0.9, s).response_id;
      EXPECT_EQ(b.draws[static_cast<std::size_t>(j)].response_id, id);
      const double score = rm.score(phi, id);
      EXPECT_LE(score, b.score);
      if (score > best || (score == best && id < best_id)) {
        best = score;
        best_id = id;
      }
    }
    EXPECT_EQ(b.response_id, best_id);
    EXPECT_EQ(b.score, best);
    EXPECT_EQ(b.score, rm.score(phi, b.response_id));
  }
}

TEST(BestOfN, TiesGoToTheSmallerId) {
  const auto prompt = some_prompt();
  const TemplateLibrary lib = TemplateLibrary::standard();
  const RetroPolicy policy(K);
  // Templates 2 and 6 share the top score.
  const RewardModel rm = ranked({0, 0, 1, 0, 0, 0, 1, 0});
  int both_drawn = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const BestOfN b = best_of_n(policy, rm, prompt, lib, 8, 1.0, seed);
    bool saw2 = false, saw6 = false;
    for (const auto& d : b.draws) {
      saw2 = saw2 || d.response_id == 2;
      saw6 = saw6 || d.response_id == 6;
    }
    if (saw2 && saw6) {
      ++both_drawn;
      EXPECT_EQ(b.response_id, 2);
    }
    EXPECT_EQ(best_of_n(policy, rm, prompt, lib, 8, 1.0, seed).response_id, b.response_id);
  }
  EXPECT_GT(both_drawn, 100);
}

// With a uniform policy the top template is missed by all n draws with
// probability (7/8)^n, so its frequency over 1000 seeds should sit near
// 1 - (7/8)^n and approach 1 as n grows.
TEST(BestOfN, TopTemplateFrequencyApproachesOne) {
  const auto prompt = some_prompt();
  const TemplateLibrary lib = TemplateLibrary::standard();
  const RetroPolicy policy(K);
  const RewardModel rm = ranked({1, 2, 3, 4, 5, 6, 8, 7});
  double prev = 0.0;
  for (int n : {1, 4, 8, 32, 64}) {
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) hits += best_of_n(policy, rm, prompt, lib, n, 2.0, seed).response_id == 6;
    const double freq = hits / 1000.0;
    const double expected = 1.0 - std::pow(7.0 / 8.0, n);
    const double sigma = std::sqrt(expected * (1.0 - expected) / 1000.0);
    EXPECT_NEAR(freq, expected, 4.0 * sigma + 1e-3) << n;
    EXPECT_GE(freq, prev);
    prev = freq;
  }
  EXPECT_GT(prev, 0.99);
}

TEST(BestOfN, RejectsBadArguments) {
  const auto prompt = some_prompt();
  const TemplateLibrary lib = TemplateLibrary::standard();
  const RetroPolicy policy(K);
  const RewardModel rm(K);
  EXPECT_THROW(best_of_n(policy, rm, prompt, lib, 0, 0.9, 1), Error);
  try {
    best_of_n(policy, rm, prompt, lib, 2, 0.0, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidTemperature);
  }
}
