#include "retrospect/rlhf.hpp"

#include <algorithm>
#include <cmath>

#include "retrospect/checkpoint.hpp"

namespace retrospect {

namespace {

void add_scaled(std::vector<double>& into, std::span<const double> g, double scale) {
  for (std::size_t i = 0; i < into.size(); ++i) into[i] += scale * g[i];
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// log(1 + exp(-z)) without overflow.
double softplus_neg(double z) { return z > 0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

RewardModel::RewardModel(std::size_t num_templates)
    : RewardModel(std::vector<double>(kFeatureCount * num_templates, 0.0), num_templates) {}

RewardModel::RewardModel(std::vector<double> w, std::size_t num_templates)
    : num_templates_(num_templates), w_(std::move(w)) {
  if (num_templates_ == 0 || w_.size() != kFeatureCount * num_templates_) {
    throw Error(ErrorKind::kInvalidArgument, "reward weights must have F x K entries");
  }
  if (!all_finite(w_)) throw Error(ErrorKind::kNumericalError, "reward weights are not finite");
}

double RewardModel::score(const FeatureVector& features, int response_id) const {
  if (response_id < 0 || static_cast<std::size_t>(response_id) >= num_templates_) {
    throw Error(ErrorKind::kInvalidArgument, "response id " + std::to_string(response_id) + " out of range");
  }
  double s = 0.0;
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    s += features[f] * w_[f * num_templates_ + static_cast<std::size_t>(response_id)];
  }
  return s;
}

double RewardModel::score(std::string_view instruction, int response_id) const {
  return score(extract_features(instruction), response_id);
}

void save_reward_model(const RewardModel& rm, const std::string& path) {
  Checkpoint cp;
  cp.kind = "reward-model";
  cp.rows = kFeatureCount;
  cp.cols = rm.num_templates();
  cp.arrays.emplace_back("w", std::vector<double>(rm.weights().begin(), rm.weights().end()));
  save_checkpoint(cp, path);
}

RewardModel load_reward_model(const std::string& path) {
  const Checkpoint cp = load_checkpoint(path);
  if (cp.kind != "reward-model" || cp.rows != kFeatureCount) {
    throw Error(ErrorKind::kParse, path + " is not a reward-model checkpoint");
  }
  return RewardModel(cp.array("w"), cp.cols);
}

std::vector<FeaturizedPair> featurize(std::span<const PreferencePair> pairs) {
  std::vector<FeaturizedPair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back({extract_features(p.instruction), p.accepted_id, p.rejected_id});
  return out;
}

double pairwise_loss(const RewardModel& rm, std::span<const FeaturizedPair> pairs) {
  if (pairs.empty()) return 0.0;
  double total = 0.0;
  for (const auto& p : pairs) total += softplus_neg(rm.score(p.features, p.accepted) - rm.score(p.features, p.rejected));
  return total / static_cast<double>(pairs.size());
}

std::vector<double> pairwise_loss_grad(const RewardModel& rm, std::span<const FeaturizedPair> pairs) {
  const std::size_t K = rm.num_templates();
  std::vector<double> grad(kFeatureCount * K, 0.0);
  if (pairs.empty()) return grad;
  const double inv_n = 1.0 / static_cast<double>(pairs.size());
  for (const auto& p : pairs) {
    const double margin = rm.score(p.features, p.accepted) - rm.score(p.features, p.rejected);
    // d/dmargin of -log sigmoid(margin) is -sigmoid(-margin).
    const double coeff = -sigmoid(-margin) * inv_n;
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      if (p.features[f] == 0.0) continue;
      grad[f * K + static_cast<std::size_t>(p.accepted)] += coeff * p.features[f];
      grad[f * K + static_cast<std::size_t>(p.rejected)] -= coeff * p.features[f];
    }
  }
  return grad;
}

double pairwise_accuracy(const RewardModel& rm, std::span<const FeaturizedPair> pairs) {
  if (pairs.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& p : pairs) {
    if (rm.score(p.features, p.accepted) > rm.score(p.features, p.rejected)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(pairs.size());
}

RewardFit fit_reward_model(std::span<const PreferencePair> pairs, std::size_t num_templates, double lr,
                           int steps) {
  if (pairs.empty()) throw Error(ErrorKind::kEmptyBuffer, "no preference pairs to fit");
  if (!(lr > 0.0) || steps < 0) throw Error(ErrorKind::kInvalidArgument, "reward model lr/steps");
  const auto data = featurize(pairs);
  std::vector<double> w(kFeatureCount * num_templates, 0.0);
  for (int s = 0; s < steps; ++s) {
    const auto g = pairwise_loss_grad(RewardModel(w, num_templates), data);
    add_scaled(w, g, -lr);
  }
  RewardModel model(std::move(w), num_templates);
  const double loss = pairwise_loss(model, data);
  const double accuracy = pairwise_accuracy(model, data);
  return {std::move(model), loss, accuracy};
}

double sft_loss(const RetroPolicy& policy, std::span<const ReflectionRecord> records) {
  if (records.empty()) return 0.0;
  double total = 0.0;
  for (const auto& r : records) total -= log_prob(policy, extract_features(r.instruction), r.response_id);
  return total / static_cast<double>(records.size());
}

RetroPolicy sft_warm_start(const RetroPolicy& policy, std::span<const ReflectionRecord> positives, int epochs,
                           double lr) {
  if (positives.empty()) throw Error(ErrorKind::kContaminatedSftSet, "no positive-rating records");
  for (const auto& r : positives) {
    if (!(r.rating > 0.0)) {
      throw Error(ErrorKind::kContaminatedSftSet,
                  r.task_id + " trial " + std::to_string(r.trial_index) + " has rating " + format_number(r.rating));
    }
  }
  std::vector<FeatureVector> features;
  features.reserve(positives.size());
  for (const auto& r : positives) features.push_back(extract_features(r.instruction));

  RetroPolicy current = policy;
  const double inv_n = 1.0 / static_cast<double>(positives.size());
  for (int e = 0; e < epochs; ++e) {
    std::vector<double> theta(current.theta().begin(), current.theta().end());
    for (std::size_t i = 0; i < positives.size(); ++i) {
      add_scaled(theta, grad_log_prob(current, features[i], positives[i].response_id), lr * inv_n);
    }
    current.set_theta(std::move(theta));
  }
  return current;
}

void PpoConfig::validate() const {
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) throw Error(ErrorKind::kInvalidArgument, "clip_epsilon not in (0, 1)");
  if (!(beta_kl >= 0.0)) throw Error(ErrorKind::kInvalidArgument, "beta_kl must be >= 0");
  if (!(learning_rate > 0.0)) throw Error(ErrorKind::kInvalidArgument, "learning_rate must be > 0");
  if (ppo_epochs < 1 || batch_size < 1 || max_steps < 0) {
    throw Error(ErrorKind::kInvalidArgument, "ppo_epochs, batch_size must be >= 1 and max_steps >= 0");
  }
}

std::vector<PpoSample> samples_from_records(std::span<const ReflectionRecord> records) {
  std::vector<PpoSample> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back({extract_features(r.instruction), r.response_id, r.behavior_logprob});
  return out;
}

std::vector<double> ppo_advantages(const RetroPolicy& policy, const RewardModel& rm,
                                   std::span<const PpoSample> batch, double beta) {
  std::vector<double> adv(batch.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& s = batch[i];
    const double log_ratio =
        log_prob(policy, s.features, s.response_id) - reference_log_prob(policy, s.features, s.response_id);
    adv[i] = rm.score(s.features, s.response_id) - beta * log_ratio;
    mean += adv[i];
  }
  if (!batch.empty()) mean /= static_cast<double>(batch.size());
  for (auto& a : adv) a -= mean;
  return adv;
}

double ppo_surrogate(const RetroPolicy& policy, std::span<const PpoSample> batch,
                     std::span<const double> advantages, double clip_epsilon) {
  if (batch.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& s = batch[i];
    const double rho = std::exp(log_prob(policy, s.features, s.response_id) - s.old_logprob);
    const double clipped = std::clamp(rho, 1.0 - clip_epsilon, 1.0 + clip_epsilon);
    total += std::min(rho * advantages[i], clipped * advantages[i]);
  }
  return total / static_cast<double>(batch.size());
}

std::vector<double> ppo_surrogate_grad(const RetroPolicy& policy, std::span<const PpoSample> batch,
                                       std::span<const double> advantages, double clip_epsilon) {
  std::vector<double> grad(policy.num_parameters(), 0.0);
  if (batch.empty()) return grad;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& s = batch[i];
    const double rho = std::exp(log_prob(policy, s.features, s.response_id) - s.old_logprob);
    const double clipped = std::clamp(rho, 1.0 - clip_epsilon, 1.0 + clip_epsilon);
    // The clipped branch is constant in theta.
    if (clipped * advantages[i] < rho * advantages[i]) continue;
    add_scaled(grad, grad_log_prob(policy, s.features, s.response_id), rho * advantages[i] * inv_n);
  }
  return grad;
}

namespace {

PpoDiagnostics diagnose(const RetroPolicy& policy, const RewardModel& rm, std::span<const PpoSample> batch,
                        std::span<const double> advantages, double clip_epsilon) {
  PpoDiagnostics d;
  if (batch.empty()) return d;
  double ratio = 0.0, kl = 0.0, score = 0.0;
  std::size_t clipped = 0;
  for (const auto& s : batch) {
    const double rho = std::exp(log_prob(policy, s.features, s.response_id) - s.old_logprob);
    ratio += rho;
    if (rho < 1.0 - clip_epsilon || rho > 1.0 + clip_epsilon) ++clipped;
    kl += kl_to_reference(policy, s.features);
    score += rm.score(s.features, s.response_id);
  }
  const double n = static_cast<double>(batch.size());
  d.mean_ratio = ratio / n;
  d.mean_kl = kl / n;
  d.mean_score = score / n;
  d.clipped_fraction = static_cast<double>(clipped) / n;
  d.surrogate = ppo_surrogate(policy, batch, advantages, clip_epsilon);
  return d;
}

}  // namespace

PpoResult ppo_step(const RetroPolicy& policy, const RewardModel& rm, std::span<const PpoSample> batch,
                   const PpoConfig& cfg) {
  cfg.validate();
  if (batch.empty()) throw Error(ErrorKind::kEmptyBuffer, "empty PPO batch");
  if (rm.num_templates() != policy.num_templates()) {
    throw Error(ErrorKind::kInvalidArgument, "reward model and policy disagree on K");
  }
  const auto advantages = ppo_advantages(policy, rm, batch, cfg.beta_kl);
  RetroPolicy current = policy;
  for (int e = 0; e < cfg.ppo_epochs; ++e) {
    const auto g = ppo_surrogate_grad(current, batch, advantages, cfg.clip_epsilon);
    std::vector<double> theta(current.theta().begin(), current.theta().end());
    add_scaled(theta, g, cfg.learning_rate);
    if (!all_finite(theta)) {
      throw PpoNumericalError("non-finite parameters in PPO epoch " + std::to_string(e),
                              diagnose(policy, rm, batch, advantages, cfg.clip_epsilon));
    }
    current.set_theta(std::move(theta));
  }
  PpoDiagnostics d = diagnose(current, rm, batch, advantages, cfg.clip_epsilon);
  if (!std::isfinite(d.surrogate)) throw PpoNumericalError("non-finite surrogate", d);
  return {std::move(current), d};
}

PpoResult ppo_step(const RetroPolicy& policy, const RewardModel& rm, std::span<const ReflectionRecord> batch,
                   const PpoConfig& cfg) {
  const auto samples = samples_from_records(batch);
  return ppo_step(policy, rm, std::span<const PpoSample>(samples), cfg);
}

}  // namespace retrospect
