#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <set>

#include "oracles.hpp"
#include "retrospect/actor.hpp"
#include "retrospect/envs.hpp"
#include "retrospect/features.hpp"
#include "retrospect/retro.hpp"
#include "retrospect/rng.hpp"

using namespace retrospect;

namespace {

constexpr std::size_t K = 8;

std::vector<Trajectory> failed_trials(std::string_view env_id) {
  const auto env = envs::make_environment(env_id, 1);
  const ScriptedActor actor;
  std::vector<Trajectory> out;
  for (const auto& task : env->tasks("train")) {
    Trajectory t = envs::rollout(*env, task, actor, {});
    if (!t.success) out.push_back(std::move(t));
  }
  return out;
}

std::vector<double> random_theta(CounterRng& rng, double scale) {
  std::vector<double> theta(kFeatureCount * K);
  for (auto& v : theta) v = (rng.uniform() - 0.5) * 2.0 * scale;
  return theta;
}

FeatureVector random_features(CounterRng& rng) {
  FeatureVector phi{};
  phi[kBias] = 1.0;
  for (std::size_t f = 1; f < kFeatureCount; ++f) phi[f] = rng.index(2) ? 1.0 : 0.0;
  return phi;
}

FeatureVector bias_only() {
  FeatureVector phi{};
  phi[kBias] = 1.0;
  return phi;
}

}  // namespace

TEST(ReflectionPrompt, ContainsEveryActionAndTheReturn) {
  for (std::string_view id : envs::kEnvironmentIds) {
    for (const auto& t : failed_trials(id)) {
      const ReflectionPrompt p = build_reflection_prompt(t);
      for (const auto& s : t.steps) EXPECT_NE(p.rendered.find(s.action_text), std::string::npos);
      EXPECT_NE(p.rendered.find("Episode return: " + format_number(t.episode_return)), std::string::npos);
      EXPECT_EQ(p.env_id, t.env_id);
      EXPECT_EQ(build_reflection_prompt(t).rendered, p.rendered);
    }
  }
}

TEST(ReflectionPrompt, DistinctTrajectoriesGiveDistinctPrompts) {
  const auto trials = failed_trials("synthqa");
  ASSERT_GE(trials.size(), 2u);
  std::set<std::string> seen;
  for (const auto& t : trials) EXPECT_TRUE(seen.insert(build_reflection_prompt(t).rendered).second) << t.task_id;
}

TEST(ReflectionPrompt, SuccessIsNotAFailure) {
  const auto env = envs::make_environment("synthqa", 1);
  const Trajectory ok = envs::rollout(*env, env->task("q001"), ScriptedActor(), {});
  ASSERT_TRUE(ok.success);
  try {
    build_reflection_prompt(ok);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNotAFailure);
  }
}

TEST(Features, PureFunctionOfPromptText) {
  for (std::string_view id : envs::kEnvironmentIds) {
    for (const auto& t : failed_trials(id)) {
      const std::string text = build_reflection_prompt(t).rendered;
      const FeatureVector a = extract_features(text);
      const FeatureVector b = extract_features(std::string(text));
      EXPECT_EQ(a, b);
      EXPECT_EQ(a[kBias], 1.0);
      for (double v : a) EXPECT_TRUE(v == 0.0 || v == 1.0);
      EXPECT_EQ(a[kEnvHouse], id == "synthhouse" ? 1.0 : 0.0);
      EXPECT_EQ(a[kEnvShop], id == "synthshop" ? 1.0 : 0.0);
    }
  }
}

TEST(Features, FailureModesLightDistinctSignals) {
  const auto env = envs::make_environment("synthqa", 1);
  const ScriptedActor actor;
  std::map<FailureMode, std::set<FeatureVector>> seen;
  for (const auto& task : env->tasks("train")) {
    const Trajectory t = envs::rollout(*env, task, actor, {});
    if (!t.success) seen[task.failure_mode].insert(extract_features(build_reflection_prompt(t).rendered));
  }
  ASSERT_EQ(seen.size(), 4u);
  for (const auto& [m1, s1] : seen) {
    for (const auto& [m2, s2] : seen) {
      if (m1 == m2) continue;
      for (const auto& v : s1) EXPECT_EQ(s2.count(v), 0u) << to_string(m1) << " / " << to_string(m2);
    }
  }
}

TEST(Policy, ZeroThetaIsUniform) {
  const RetroPolicy policy(K);
  CounterRng rng(1);
  for (int i = 0; i < 20; ++i) {
    for (double p : policy_probs(policy, random_features(rng))) EXPECT_NEAR(p, 1.0 / K, 1e-15);
  }
}

TEST(Policy, LargeWeightsConcentrateOnArgmax) {
  std::vector<double> theta(kFeatureCount * K, 0.0);
  RetroPolicy probe(K);
  theta[probe.index(kBias, 3)] = 50.0;
  const RetroPolicy policy(theta, K);
  const auto p = policy_probs(policy, bias_only());
  EXPECT_GT(p[3], 0.99);
}

TEST(Policy, ProbabilitiesArePositiveNormalizedAndReproducible) {
  CounterRng rng(7);
  for (int i = 0; i < 200; ++i) {
    const RetroPolicy policy(random_theta(rng, 20.0), K);
    const FeatureVector phi = random_features(rng);
    const auto p = policy_probs(policy, phi);
    double sum = 0.0;
    for (double v : p) {
      EXPECT_GT(v, 0.0);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
    EXPECT_EQ(policy_probs(policy, phi), p);
  }
}

TEST(Policy, MatchesDirectSoftmax) {
  CounterRng rng(8);
  for (int i = 0; i < 50; ++i) {
    const auto theta = random_theta(rng, 3.0);
    const RetroPolicy policy(theta, K);
    const FeatureVector phi = random_features(rng);
    std::vector<double> z(K, 0.0);
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      for (std::size_t k = 0; k < K; ++k) z[k] += phi[f] * theta[f * K + k];
    }
    double norm = 0.0;
    for (double v : z) norm += std::exp(v);
    const auto p = policy_probs(policy, phi);
    for (std::size_t k = 0; k < K; ++k) EXPECT_NEAR(p[k], std::exp(z[k]) / norm, 1e-12);
  }
}

TEST(Policy, NonFiniteThetaIsANumericalError) {
  std::vector<double> theta(kFeatureCount * K, 0.0);
  theta[5] = std::numeric_limits<double>::quiet_NaN();
  const RetroPolicy policy(theta, K);
  try {
    policy_probs(policy, bias_only());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNumericalError);
  }
}

TEST(Policy, WrongShapeIsRejected) {
  EXPECT_THROW(RetroPolicy(std::vector<double>(5, 0.0), K), Error);
}

TEST(Policy, ReferenceIsFrozen) {
  CounterRng rng(3);
  const auto ref = random_theta(rng, 1.0);
  RetroPolicy policy(ref, K);
  policy.set_theta(random_theta(rng, 1.0));
  EXPECT_EQ(std::vector<double>(policy.reference_theta().begin(), policy.reference_theta().end()), ref);
  const RetroPolicy next = policy.with_theta(random_theta(rng, 1.0));
  EXPECT_EQ(std::vector<double>(next.reference_theta().begin(), next.reference_theta().end()), ref);
}

TEST(Gradient, LogProbMatchesCentralDifferences) {
  CounterRng rng(4242);
  const double h = 1e-5;
  for (int trial = 0; trial < 50; ++trial) {
    auto theta = random_theta(rng, 2.0);
    const FeatureVector phi = random_features(rng);
    const int y = static_cast<int>(rng.index(K));
    const auto analytic = grad_log_prob(RetroPolicy(theta, K), phi, y);
    std::vector<double> numeric(theta.size());
    for (std::size_t j = 0; j < theta.size(); ++j) {
      const double keep = theta[j];
      theta[j] = keep + h;
      const double up = log_prob(RetroPolicy(theta, K), phi, y);
      theta[j] = keep - h;
      const double down = log_prob(RetroPolicy(theta, K), phi, y);
      theta[j] = keep;
      numeric[j] = (up - down) / (2.0 * h);
    }
    EXPECT_LT(oracle::vector_relative_error(analytic, numeric), 1e-4) << trial;
  }
}

TEST(Sampling, SeededDrawsRepeat) {
  CounterRng rng(5);
  const RetroPolicy policy(random_theta(rng, 1.0), K);
  const auto prompt = build_reflection_prompt(failed_trials("synthqa").front());
  const TemplateLibrary lib = TemplateLibrary::standard();
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto a = sample_response(policy, prompt, lib, 0.9, seed);
    const auto b = sample_response(policy, prompt, lib, 0.9, seed);
    EXPECT_EQ(a.response_id, b.response_id);
    EXPECT_EQ(a.response_text, b.response_text);
    EXPECT_EQ(a.logprob, b.logprob);
    EXPECT_TRUE(lib.matches(a.response_text, a.response_id));
  }
}

TEST(Sampling, LogProbIsAtTheSamplingTemperature) {
  CounterRng rng(6);
  const RetroPolicy policy(random_theta(rng, 1.5), K);
  const FeatureVector phi = random_features(rng);
  for (double t : {0.5, 0.9, 1.0, 2.0}) {
    const auto logits = template_logits(policy.theta(), K, phi);
    double norm = 0.0;
    for (double z : logits) norm += std::exp(z / t);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const TemplateDraw d = sample_template(policy, phi, t, seed);
      EXPECT_NEAR(d.logprob, logits[d.response_id] / t - std::log(norm), 1e-12);
    }
  }
}

// Each count is Binomial(n, 1/K); 3 sigma = 3 sqrt(n p (1 - p)).
TEST(Sampling, UniformPolicyFrequenciesWithinThreeSigma) {
  const RetroPolicy policy(K);
  const FeatureVector phi = bias_only();
  const int n = 10000;
  std::vector<int> counts(K, 0);
  for (int i = 0; i < n; ++i) ++counts[sample_template(policy, phi, 0.9, derive_seed({77, static_cast<std::uint64_t>(i)})).response_id];
  const double p = 1.0 / K;
  const double sigma = std::sqrt(n * p * (1.0 - p));
  for (int c : counts) EXPECT_LT(std::abs(c - n * p), 3.0 * sigma) << c;
}

// With logit gap 12 at T = 0.9 the argmax mass is 1 / (1 + 7 e^{-12/0.9}) > 0.9999.
TEST(Sampling, NearDegeneratePolicyPicksArgmax) {
  std::vector<double> theta(kFeatureCount * K, 0.0);
  theta[RetroPolicy(K).index(kBias, 6)] = 12.0;
  const RetroPolicy policy(theta, K);
  int hits = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) hits += sample_template(policy, bias_only(), 0.9, derive_seed({5, static_cast<std::uint64_t>(i)})).response_id == 6;
  EXPECT_GT(static_cast<double>(hits) / n, 0.99);
}

TEST(Sampling, NonPositiveTemperatureRejected) {
  const RetroPolicy policy(K);
  for (double t : {0.0, -1.0, std::numeric_limits<double>::quiet_NaN()}) {
    try {
      sample_template(policy, bias_only(), t, 1);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kInvalidTemperature);
    }
  }
}

TEST(Kl, ZeroAtReference) {
  CounterRng rng(9);
  const RetroPolicy policy(random_theta(rng, 4.0), K);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(kl_to_reference(policy, random_features(rng)), 0.0);
}

TEST(Kl, PositiveWhenDistributionsDiffer) {
  CounterRng rng(10);
  for (int i = 0; i < 100; ++i) {
    const RetroPolicy policy(random_theta(rng, 2.0), random_theta(rng, 2.0), K);
    EXPECT_GT(kl_to_reference(policy, random_features(rng)), 0.0);
  }
}

TEST(Kl, TwoTemplateHandCase) {
  std::vector<double> theta(kFeatureCount * 2, 0.0);
  theta[kBias * 2 + 0] = std::log(3.0);  // softmax(log 3, 0) = (0.75, 0.25)
  const RetroPolicy policy(theta, std::vector<double>(theta.size(), 0.0), 2);
  const double expected = 0.75 * std::log(1.5) + 0.25 * std::log(0.5);
  EXPECT_NEAR(kl_to_reference(policy, bias_only()), expected, 1e-12);
  EXPECT_NEAR(expected, 0.1308, 5e-5);
}

TEST(Checkpoint, PolicyRoundTripsBitExact) {
  CounterRng rng(12);
  const RetroPolicy policy(random_theta(rng, 3.0), random_theta(rng, 3.0), K);
  const auto path = std::filesystem::temp_directory_path() / "retro_policy_roundtrip.ckpt";
  save_policy(policy, path.string());
  const RetroPolicy back = load_policy(path.string());
  EXPECT_TRUE(std::equal(back.theta().begin(), back.theta().end(), policy.theta().begin()));
  EXPECT_TRUE(std::equal(back.reference_theta().begin(), back.reference_theta().end(), policy.reference_theta().begin()));
  EXPECT_EQ(policy_to_text(back), policy_to_text(policy));
  std::filesystem::remove(path);
  try {
    load_policy(path.string());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kCheckpointMissing);
  }
}
