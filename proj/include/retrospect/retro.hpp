#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "retrospect/core.hpp"
#include "retrospect/features.hpp"
#include "retrospect/templates.hpp"

namespace retrospect {

inline constexpr double kCollectionTemperature = 0.9;

// Reflection instruction x for one failed trial.
struct ReflectionPrompt {
  std::string env_id;
  std::string trajectory_render;
  std::string return_text;
  std::string instruction_text;
  std::string rendered;
  SlotValues slots;  // entities the templates can quote
};

// kNotAFailure for successful trajectories.
ReflectionPrompt build_reflection_prompt(const Trajectory& trajectory);

// Conditional categorical policy over K templates with logits
// theta^T (phi(x) (x) onehot(k)), i.e. logit_k = sum_f phi_f(x) theta[f, k].
// theta is stored row-major as F x K. The reference copy is fixed at
// construction and anchors the KL penalty.
class RetroPolicy {
 public:
  explicit RetroPolicy(std::size_t num_templates);
  RetroPolicy(std::vector<double> theta, std::size_t num_templates);
  RetroPolicy(std::vector<double> theta, std::vector<double> reference_theta, std::size_t num_templates);

  std::size_t num_features() const { return kFeatureCount; }
  std::size_t num_templates() const { return num_templates_; }
  std::size_t num_parameters() const { return theta_.size(); }

  std::span<const double> theta() const { return theta_; }
  std::span<const double> reference_theta() const { return reference_; }

  void set_theta(std::vector<double> theta);

  // New policy with the given parameters and this policy's reference.
  RetroPolicy with_theta(std::vector<double> theta) const;

  std::size_t index(std::size_t feature, std::size_t template_id) const {
    return feature * num_templates_ + template_id;
  }

 private:
  std::size_t num_templates_;
  std::vector<double> theta_;
  std::vector<double> reference_;
};

std::vector<double> template_logits(std::span<const double> theta, std::size_t num_templates,
                                    const FeatureVector& features);

// Numerically stable softmax of logits / temperature.
std::vector<double> softmax(std::span<const double> logits, double temperature = 1.0);

std::vector<double> policy_probs(const RetroPolicy& policy, const FeatureVector& features);
std::vector<double> policy_probs(const RetroPolicy& policy, const ReflectionPrompt& prompt);
std::vector<double> reference_probs(const RetroPolicy& policy, const FeatureVector& features);

double log_prob(const RetroPolicy& policy, const FeatureVector& features, int response_id);
double reference_log_prob(const RetroPolicy& policy, const FeatureVector& features, int response_id);

// d log pi(y|x) / d theta, flattened like theta.
std::vector<double> grad_log_prob(const RetroPolicy& policy, const FeatureVector& features, int response_id);

struct SampledResponse {
  int response_id = 0;
  std::string response_text;
  double logprob = 0.0;  // at the sampling temperature
};

struct TemplateDraw {
  int response_id = 0;
  double logprob = 0.0;
};

// Inverse-CDF draw from softmax(logits / temperature) using one counter-based
// uniform derived from rng_seed. Log-probability is at the sampling
// temperature.
TemplateDraw sample_template(const RetroPolicy& policy, const FeatureVector& features, double temperature,
                             std::uint64_t rng_seed);

// sample_template on the prompt's features, rendered through the library.
SampledResponse sample_response(const RetroPolicy& policy, const ReflectionPrompt& prompt,
                                const TemplateLibrary& library, double temperature, std::uint64_t rng_seed);

double kl_to_reference(const RetroPolicy& policy, const FeatureVector& features);
double kl_to_reference(const RetroPolicy& policy, const ReflectionPrompt& prompt);

// Checkpoint: versioned header followed by one value per line (%.17g).
void save_policy(const RetroPolicy& policy, const std::string& path);
RetroPolicy load_policy(const std::string& path);
std::string policy_to_text(const RetroPolicy& policy);

}  // namespace retrospect
