#include "retrospect/sampler.hpp"

#include "retrospect/rng.hpp"

namespace retrospect {

BestOfN best_of_n(const RetroPolicy& policy, const RewardModel& rm, const ReflectionPrompt& prompt,
                  const TemplateLibrary& library, int n, double temperature, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorKind::kInvalidArgument, "best-of-n needs n >= 1");
  const FeatureVector features = extract_features(prompt.rendered);
  BestOfN best;
  for (int j = 0; j < n; ++j) {
    const std::uint64_t draw_seed = j == 0 ? seed : derive_seed({seed, static_cast<std::uint64_t>(j)});
    const SampledResponse draw = sample_response(policy, prompt, library, temperature, draw_seed);
    const double score = rm.score(features, draw.response_id);
    best.draws.push_back({draw.response_id, score});
    const bool better = j == 0 || score > best.score || (score == best.score && draw.response_id < best.response_id);
    if (better) {
      best.response_id = draw.response_id;
      best.response_text = draw.response_text;
      best.score = score;
    }
  }
  return best;
}

}  // namespace retrospect
