#include "retrospect/retro.hpp"

#include <algorithm>
#include <cmath>

#include "retrospect/actor.hpp"
#include "retrospect/checkpoint.hpp"
#include "retrospect/rng.hpp"

namespace retrospect {

namespace {

constexpr const char* kInstruction =
    "Review the failed attempt below. Name the mistake that cost the most reward and state one "
    "concrete change for the next attempt.";

void require_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(ErrorKind::kNumericalError, std::string(what) + " is not finite");
  }
}

}  // namespace

ReflectionPrompt build_reflection_prompt(const Trajectory& trajectory) {
  if (trajectory.success) {
    throw Error(ErrorKind::kNotAFailure, "trial " + std::to_string(trajectory.trial_index) + " of " +
                                             trajectory.task_id + " succeeded");
  }
  ReflectionPrompt prompt;
  prompt.env_id = trajectory.env_id;
  prompt.instruction_text = kInstruction;
  prompt.return_text = format_number(trajectory.episode_return);
  for (const auto& step : trajectory.steps) prompt.trajectory_render += render_step(step);
  prompt.trajectory_render += "Final observation: " + trajectory.final_observation + "\n";
  prompt.trajectory_render += std::string("Terminated: ") + (trajectory.terminated ? "yes" : "no") + "\n";

  prompt.rendered = prompt.instruction_text + "\nEnvironment: " + trajectory.env_id + "\nTask: " +
                    trajectory.goal_text + "\nTrajectory:\n" + prompt.trajectory_render +
                    "Episode return: " + prompt.return_text + "\nReflection:";

  if (!trajectory.steps.empty()) {
    prompt.slots.first_action = trajectory.steps.front().action_text;
    prompt.slots.last_action = trajectory.steps.back().action_text;
  }
  prompt.slots.return_text = prompt.return_text;
  return prompt;
}

RetroPolicy::RetroPolicy(std::size_t num_templates)
    : RetroPolicy(std::vector<double>(kFeatureCount * num_templates, 0.0), num_templates) {}

RetroPolicy::RetroPolicy(std::vector<double> theta, std::size_t num_templates)
    : num_templates_(num_templates), theta_(std::move(theta)), reference_(theta_) {
  if (num_templates_ == 0 || theta_.size() != kFeatureCount * num_templates_) {
    throw Error(ErrorKind::kInvalidArgument, "theta must have F x K entries");
  }
}

RetroPolicy::RetroPolicy(std::vector<double> theta, std::vector<double> reference_theta,
                         std::size_t num_templates)
    : num_templates_(num_templates), theta_(std::move(theta)), reference_(std::move(reference_theta)) {
  if (num_templates_ == 0 || theta_.size() != kFeatureCount * num_templates_ ||
      reference_.size() != theta_.size()) {
    throw Error(ErrorKind::kInvalidArgument, "theta and reference must have F x K entries");
  }
}

void RetroPolicy::set_theta(std::vector<double> theta) {
  if (theta.size() != theta_.size()) throw Error(ErrorKind::kInvalidArgument, "theta size mismatch");
  theta_ = std::move(theta);
}

RetroPolicy RetroPolicy::with_theta(std::vector<double> theta) const {
  RetroPolicy copy = *this;
  copy.set_theta(std::move(theta));
  return copy;
}

std::vector<double> template_logits(std::span<const double> theta, std::size_t num_templates,
                                    const FeatureVector& features) {
  std::vector<double> logits(num_templates, 0.0);
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    if (features[f] == 0.0) continue;
    for (std::size_t k = 0; k < num_templates; ++k) logits[k] += features[f] * theta[f * num_templates + k];
  }
  return logits;
}

std::vector<double> softmax(std::span<const double> logits, double temperature) {
  std::vector<double> probs(logits.size());
  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    probs[k] = std::exp((logits[k] - top) / temperature);
    total += probs[k];
  }
  for (auto& p : probs) p /= total;
  return probs;
}

namespace {

std::vector<double> log_softmax(std::span<const double> logits) {
  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double l : logits) total += std::exp(l - top);
  const double log_z = top + std::log(total);
  std::vector<double> out(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k) out[k] = logits[k] - log_z;
  return out;
}

void check_response(const RetroPolicy& policy, int response_id) {
  if (response_id < 0 || static_cast<std::size_t>(response_id) >= policy.num_templates()) {
    throw Error(ErrorKind::kInvalidArgument, "response id " + std::to_string(response_id) + " out of range");
  }
}

}  // namespace

std::vector<double> policy_probs(const RetroPolicy& policy, const FeatureVector& features) {
  require_finite(policy.theta(), "theta");
  return softmax(template_logits(policy.theta(), policy.num_templates(), features));
}

std::vector<double> policy_probs(const RetroPolicy& policy, const ReflectionPrompt& prompt) {
  return policy_probs(policy, extract_features(prompt.rendered));
}

std::vector<double> reference_probs(const RetroPolicy& policy, const FeatureVector& features) {
  return softmax(template_logits(policy.reference_theta(), policy.num_templates(), features));
}

double log_prob(const RetroPolicy& policy, const FeatureVector& features, int response_id) {
  check_response(policy, response_id);
  require_finite(policy.theta(), "theta");
  return log_softmax(template_logits(policy.theta(), policy.num_templates(), features))
      [static_cast<std::size_t>(response_id)];
}

double reference_log_prob(const RetroPolicy& policy, const FeatureVector& features, int response_id) {
  check_response(policy, response_id);
  return log_softmax(template_logits(policy.reference_theta(), policy.num_templates(), features))
      [static_cast<std::size_t>(response_id)];
}

std::vector<double> grad_log_prob(const RetroPolicy& policy, const FeatureVector& features, int response_id) {
  check_response(policy, response_id);
  const auto probs = policy_probs(policy, features);
  const std::size_t K = policy.num_templates();
  std::vector<double> grad(policy.num_parameters(), 0.0);
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    if (features[f] == 0.0) continue;
    for (std::size_t k = 0; k < K; ++k) {
      const double indicator = static_cast<int>(k) == response_id ? 1.0 : 0.0;
      grad[f * K + k] = features[f] * (indicator - probs[k]);
    }
  }
  return grad;
}

TemplateDraw sample_template(const RetroPolicy& policy, const FeatureVector& features, double temperature,
                             std::uint64_t rng_seed) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw Error(ErrorKind::kInvalidTemperature, "temperature must be positive, got " + format_number(temperature));
  }
  require_finite(policy.theta(), "theta");
  const auto logits = template_logits(policy.theta(), policy.num_templates(), features);
  const auto probs = softmax(logits, temperature);

  CounterRng rng(rng_seed);
  const double u = rng.uniform();
  std::size_t chosen = probs.size() - 1;
  double cumulative = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    cumulative += probs[k];
    if (u < cumulative) {
      chosen = k;
      break;
    }
  }
  std::vector<double> scaled(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k) scaled[k] = logits[k] / temperature;
  return {static_cast<int>(chosen), log_softmax(scaled)[chosen]};
}

SampledResponse sample_response(const RetroPolicy& policy, const ReflectionPrompt& prompt,
                                const TemplateLibrary& library, double temperature, std::uint64_t rng_seed) {
  if (library.size() != policy.num_templates()) {
    throw Error(ErrorKind::kInvalidArgument, "library and policy disagree on K");
  }
  const TemplateDraw draw = sample_template(policy, extract_features(prompt.rendered), temperature, rng_seed);
  return {draw.response_id, library.render(draw.response_id, prompt.slots), draw.logprob};
}

double kl_to_reference(const RetroPolicy& policy, const FeatureVector& features) {
  require_finite(policy.theta(), "theta");
  const auto log_p = log_softmax(template_logits(policy.theta(), policy.num_templates(), features));
  const auto log_q = log_softmax(template_logits(policy.reference_theta(), policy.num_templates(), features));
  double kl = 0.0;
  for (std::size_t k = 0; k < log_p.size(); ++k) kl += std::exp(log_p[k]) * (log_p[k] - log_q[k]);
  return std::max(kl, 0.0);
}

double kl_to_reference(const RetroPolicy& policy, const ReflectionPrompt& prompt) {
  return kl_to_reference(policy, extract_features(prompt.rendered));
}

std::string policy_to_text(const RetroPolicy& policy) {
  Checkpoint cp;
  cp.kind = "retro-policy";
  cp.rows = policy.num_features();
  cp.cols = policy.num_templates();
  cp.arrays.emplace_back("theta", std::vector<double>(policy.theta().begin(), policy.theta().end()));
  cp.arrays.emplace_back("reference",
                         std::vector<double>(policy.reference_theta().begin(), policy.reference_theta().end()));
  return checkpoint_to_text(cp);
}

void save_policy(const RetroPolicy& policy, const std::string& path) {
  save_checkpoint(checkpoint_from_text(policy_to_text(policy)), path);
}

RetroPolicy load_policy(const std::string& path) {
  const Checkpoint cp = load_checkpoint(path);
  if (cp.kind != "retro-policy" || cp.rows != kFeatureCount) {
    throw Error(ErrorKind::kParse, path + " is not a retrospective policy checkpoint");
  }
  return RetroPolicy(cp.array("theta"), cp.array("reference"), cp.cols);
}

}  // namespace retrospect
