#include "tierfed/client.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace tierfed {

ImportanceWeights compute_importance_weights(
    const LabeledDataset& eval_split, const std::vector<ParamVector>& tier_models,
    const ModelSpec& spec) {
  if (tier_models.empty())
    throw std::invalid_argument("importance weights: no tier models");
  if (eval_split.size() == 0)
    throw std::invalid_argument("importance weights: empty evaluation split");
  ImportanceWeights w;
  w.per_tier.reserve(tier_models.size());
  for (const auto& model : tier_models)
    w.per_tier.push_back(accuracy(spec, model, eval_split));
  return w;
}

PreferenceBids build_preference_bids(int client_id, const ImportanceWeights& weights,
                                     const BidPolicy& policy,
                                     const std::vector<double>& mean_net_reward_per_tier,
                                     double bid_amount, std::mt19937_64& rng) {
  const int k_count = static_cast<int>(weights.per_tier.size());
  PreferenceBids bids;
  bids.client_id = client_id;
  bids.bid_amount = bid_amount;

  if (policy.mode == BidMode::random_choice) {
    bids.tiers.push_back(static_cast<int>(rng() % static_cast<std::uint64_t>(k_count)));
    return bids;
  }

  std::vector<double> reward_scaled(k_count, 0.5);
  if (!mean_net_reward_per_tier.empty()) {
    if (static_cast<int>(mean_net_reward_per_tier.size()) != k_count)
      throw std::invalid_argument("preference bids: reward history length mismatch");
    const auto [lo, hi] = std::minmax_element(mean_net_reward_per_tier.begin(),
                                              mean_net_reward_per_tier.end());
    if (*hi > *lo) {
      for (int k = 0; k < k_count; ++k)
        reward_scaled[k] = (mean_net_reward_per_tier[k] - *lo) / (*hi - *lo);
    }
  }

  std::vector<int> above;
  for (int k = 0; k < k_count; ++k)
    if (weights.per_tier[k] > policy.threshold) above.push_back(k);

  if (above.empty()) {
    // A client must stay schedulable; bid for the best tier anyway.
    int best = static_cast<int>(std::max_element(weights.per_tier.begin(),
                                                 weights.per_tier.end()) -
                                weights.per_tier.begin());
    bids.tiers.push_back(best);
    return bids;
  }

  std::stable_sort(above.begin(), above.end(), [&](int a, int b) {
    double sa = weights.per_tier[a] * (1.0 + 0.5 * reward_scaled[a]);
    double sb = weights.per_tier[b] * (1.0 + 0.5 * reward_scaled[b]);
    if (sa != sb) return sa > sb;
    return a < b;
  });
  bids.tiers = std::move(above);
  return bids;
}

PersonalizedModel build_personalized_model(int client_id,
                                           const ImportanceWeights& weights,
                                           const std::vector<ParamVector>& tier_models,
                                           double threshold) {
  const std::size_t k_count = weights.per_tier.size();
  if (k_count == 0 || tier_models.size() != k_count)
    throw std::invalid_argument("personalized model: weight/model count mismatch");

  std::vector<double> masked(k_count, 0.0);
  bool any_above = false;
  for (std::size_t k = 0; k < k_count; ++k) {
    if (weights.per_tier[k] > threshold) {
      masked[k] = weights.per_tier[k];
      any_above = true;
    }
  }
  if (!any_above) masked = weights.per_tier;

  const double total = std::accumulate(masked.begin(), masked.end(), 0.0);
  if (total <= 0.0) throw std::runtime_error("personalized model: no informative tier");

  PersonalizedModel personalized;
  personalized.client_id = client_id;
  personalized.mixing_weights.resize(k_count);
  personalized.params = ParamVector(std::vector<double>(tier_models.front().dim(), 0.0));
  for (std::size_t k = 0; k < k_count; ++k) {
    const double w = masked[k] / total;
    personalized.mixing_weights[k] = w;
    if (tier_models[k].dim() != personalized.params.dim())
      throw std::invalid_argument("personalized model: tier model dimension mismatch");
    for (std::size_t j = 0; j < personalized.params.dim(); ++j)
      personalized.params.values[j] += w * tier_models[k].values[j];
  }
  check_finite(personalized.params, "build_personalized_model");
  return personalized;
}

}  // namespace tierfed
