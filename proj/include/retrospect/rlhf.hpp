#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "retrospect/core.hpp"
#include "retrospect/features.hpp"
#include "retrospect/retro.hpp"

namespace retrospect {

// r(x, y) = w . psi(x, y) over the policy's feature space.
class RewardModel {
 public:
  explicit RewardModel(std::size_t num_templates);
  RewardModel(std::vector<double> w, std::size_t num_templates);

  std::size_t num_templates() const { return num_templates_; }
  std::span<const double> weights() const { return w_; }

  double score(const FeatureVector& features, int response_id) const;
  double score(std::string_view instruction, int response_id) const;

 private:
  std::size_t num_templates_;
  std::vector<double> w_;
};

void save_reward_model(const RewardModel& rm, const std::string& path);
RewardModel load_reward_model(const std::string& path);

struct FeaturizedPair {
  FeatureVector features;
  int accepted = 0;
  int rejected = 0;
};

std::vector<FeaturizedPair> featurize(std::span<const PreferencePair> pairs);

// Mean of -log sigmoid(r(x, y+) - r(x, y-)).
double pairwise_loss(const RewardModel& rm, std::span<const FeaturizedPair> pairs);
std::vector<double> pairwise_loss_grad(const RewardModel& rm, std::span<const FeaturizedPair> pairs);
double pairwise_accuracy(const RewardModel& rm, std::span<const FeaturizedPair> pairs);

struct RewardFit {
  RewardModel model;
  double loss = 0.0;
  double accuracy = 0.0;
};

// Full-batch gradient descent from w = 0. kEmptyBuffer without pairs.
RewardFit fit_reward_model(std::span<const PreferencePair> pairs, std::size_t num_templates, double lr,
                           int steps);

// Mean of -log pi(y|x) over the records.
double sft_loss(const RetroPolicy& policy, std::span<const ReflectionRecord> records);

// Full-batch gradient ascent on sum log pi(y|x), one step per epoch.
// kContaminatedSftSet when the set is empty or holds a rating <= 0. The
// returned policy keeps the input's reference.
RetroPolicy sft_warm_start(const RetroPolicy& policy, std::span<const ReflectionRecord> positives, int epochs,
                           double lr);

struct PpoConfig {
  double learning_rate = 1.4e-2;  // 1.4e-5 for the full-size model
  int ppo_epochs = 4;
  double clip_epsilon = 0.2;
  double beta_kl = 0.2;
  int batch_size = 64;
  int max_steps = 200;

  void validate() const;
};

struct PpoSample {
  FeatureVector features;
  int response_id = 0;
  double old_logprob = 0.0;  // log pi_old(y|x) at temperature 1
};

std::vector<PpoSample> samples_from_records(std::span<const ReflectionRecord> records);

struct PpoDiagnostics {
  double mean_ratio = 1.0;
  double mean_kl = 0.0;
  double surrogate = 0.0;
  double mean_score = 0.0;
  double clipped_fraction = 0.0;
};

class PpoNumericalError : public Error {
 public:
  PpoNumericalError(const std::string& message, PpoDiagnostics diagnostics)
      : Error(ErrorKind::kNumericalError, message), diagnostics_(diagnostics) {}
  const PpoDiagnostics& diagnostics() const { return diagnostics_; }

 private:
  PpoDiagnostics diagnostics_;
};

// A_i = r(x_i, y_i) - beta * (log pi(y_i|x_i) - log pi_ref(y_i|x_i)) - mean.
std::vector<double> ppo_advantages(const RetroPolicy& policy, const RewardModel& rm,
                                   std::span<const PpoSample> batch, double beta);

// Mean of min(rho A, clip(rho, 1 - eps, 1 + eps) A), rho = pi(y|x) / pi_old(y|x).
double ppo_surrogate(const RetroPolicy& policy, std::span<const PpoSample> batch,
                     std::span<const double> advantages, double clip_epsilon);
std::vector<double> ppo_surrogate_grad(const RetroPolicy& policy, std::span<const PpoSample> batch,
                                       std::span<const double> advantages, double clip_epsilon);

struct PpoResult {
  RetroPolicy policy;
  PpoDiagnostics diagnostics;
};

// Advantages are computed once at the incoming parameters, then ppo_epochs
// full-batch ascent steps are taken on the clipped surrogate.
PpoResult ppo_step(const RetroPolicy& policy, const RewardModel& rm, std::span<const PpoSample> batch,
                   const PpoConfig& cfg);
PpoResult ppo_step(const RetroPolicy& policy, const RewardModel& rm, std::span<const ReflectionRecord> batch,
                   const PpoConfig& cfg);

}  // namespace retrospect
