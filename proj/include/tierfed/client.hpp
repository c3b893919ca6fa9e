#pragma once

#include <random>
#include <vector>

#include "tierfed/data.hpp"
#include "tierfed/model.hpp"

namespace tierfed {

// Per-tier importance weights: the fraction of a local evaluation split each
// tier-level model predicts correctly. Clients compute these twice per
// round, on the training split (feeds the bids the server sees) and on the
// private goal split (feeds personalization, never leaves the client).
struct ImportanceWeights {
  std::vector<double> per_tier;
};

struct PreferenceBids {
  int client_id = 0;
  std::vector<int> tiers;  // ranked, best first; empty when not bidding
  double bid_amount = 0.0;
};

enum class BidMode { incentive, random_choice };

struct BidPolicy {
  BidMode mode = BidMode::incentive;
  double threshold = 0.5;  // importance-weight cutoff T_h
};

// One-shot mixture of tier models: client id, mixed parameters, and the
// normalized per-tier mixing weights actually used.
struct PersonalizedModel {
  int client_id = 0;
  ParamVector params;
  std::vector<double> mixing_weights;
};

ImportanceWeights compute_importance_weights(
    const LabeledDataset& eval_split, const std::vector<ParamVector>& tier_models,
    const ModelSpec& spec);

// Incentive mode keeps every tier above the threshold, ranked by importance
// weight blended with realized rewards: score = u_k * (1 + 0.5 * r_k) with
// r_k the client's mean per-round net reward in tier k min-max scaled to
// [0,1] across tiers. No tier above threshold falls back to the argmax.
// Random mode bids for one uniformly random tier.
PreferenceBids build_preference_bids(int client_id, const ImportanceWeights& weights,
                                     const BidPolicy& policy,
                                     const std::vector<double>& mean_net_reward_per_tier,
                                     double bid_amount, std::mt19937_64& rng);

// Convex mixture of tier models weighted by the importance weights masked
// to tiers above the threshold (all tiers when none pass), normalized to
// sum 1. No gradient steps, no access to raw features. Throws when every
// weight is zero ("no informative tier").
PersonalizedModel build_personalized_model(int client_id,
                                           const ImportanceWeights& weights,
                                           const std::vector<ParamVector>& tier_models,
                                           double threshold);

}  // namespace tierfed
