#pragma once

#include <cstdint>
#include <vector>

#include "tierfed/data.hpp"
#include "tierfed/model.hpp"

namespace tierfed {

enum class ShapleyVariant { unnormalized, normalized };

struct ClientUpdate {
  int client_id = 0;
  ParamVector params;
  double weight = 0.0;  // aggregation weight, typically n_i / n
};

struct ShapleyReport {
  int round = 0;
  int tier_id = 0;
  ShapleyVariant variant = ShapleyVariant::normalized;
  std::vector<std::pair<int, double>> values;  // (client_id, psi), ascending id
};

// Gradient-based contribution estimate: one gradient of the evaluation loss
// at the aggregate, then a dot product per client.
//   unnormalized: psi_i = -g . (w_i * P_i)
//   normalized:   psi_i = -g . (w_i * (P_i - P_agg))
// The aggregate must match the given updates under the chosen variant
// (checked to 1e-9 per coordinate).
ShapleyReport estimate_shapley(const ParamVector& aggregate,
                               const std::vector<ClientUpdate>& updates,
                               const LabeledDataset& eval, const ModelSpec& spec,
                               ShapleyVariant variant, int round = 0, int tier = 0);

// Exact Shapley values by subset enumeration (guarded at 12 clients). The
// coalition value is v(C) = L(prev_model) - L(aggregate of C's updates),
// with the empty coalition evaluated at the zero vector for unnormalized
// aggregation and at prev_model (no update applied) for normalized.
std::vector<double> exact_shapley(const std::vector<ClientUpdate>& updates,
                                  const ParamVector& prev_model,
                                  const LabeledDataset& eval, const ModelSpec& spec,
                                  ShapleyVariant variant);

// Aggregate of a client-update subset under a variant; exposed for the
// enumeration oracle's self-checks.
ParamVector aggregate_subset(const std::vector<ClientUpdate>& updates,
                             std::uint32_t mask, ShapleyVariant variant,
                             const ParamVector& prev_model);

struct TierAccuracyRecord {
  int tier_id = 0;
  int round = 0;
  double acc_round = 0.0;
  double acc_max = 0.0;  // running max including this round
};

// Mean member-local accuracy for the round; acc_max carries the running
// maximum forward. prior_max is the maximum over earlier rounds (0 before
// the first record).
TierAccuracyRecord record_tier_accuracy(int tier_id, int round,
                                        const std::vector<double>& member_accuracies,
                                        double prior_max);

struct F1Profile {
  int client_id = 0;
  std::vector<double> per_class_f1;
  bool responded = true;
};

// Per-class F1 of a model on an evaluation set (0 when a class never
// appears as either prediction or truth).
std::vector<double> per_class_f1(const ModelSpec& spec, const ParamVector& params,
                                 const LabeledDataset& eval);

// Pre-training tier assignment: keep the ceil(C/2) classes whose F1 varies
// most across responding clients, cluster responders on those coordinates
// with seeded k-means, and place non-responders uniformly at random.
// Returns a tier index per profile entry. Fewer responders than k means
// everyone is placed randomly.
std::vector<int> pretraining_tiering(const std::vector<F1Profile>& profiles,
                                     int num_tiers, std::uint64_t seed);

}  // namespace tierfed
