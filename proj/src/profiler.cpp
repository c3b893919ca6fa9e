#include "tierfed/profiler.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "tierfed/kmeans.hpp"
#include "tierfed/rng.hpp"

namespace tierfed {

namespace {

constexpr int kMaxExactClients = 12;

void check_updates(const std::vector<ClientUpdate>& updates) {
  if (updates.empty()) throw std::invalid_argument("shapley: no updates");
  const std::size_t dim = updates.front().params.dim();
  for (const auto& u : updates)
    if (u.params.dim() != dim)
      throw std::invalid_argument("shapley: update dimension mismatch");
}

}  // namespace

ShapleyReport estimate_shapley(const ParamVector& aggregate,
                               const std::vector<ClientUpdate>& updates,
                               const LabeledDataset& eval, const ModelSpec& spec,
                               ShapleyVariant variant, int round, int tier) {
  check_updates(updates);
  if (eval.size() == 0) throw std::invalid_argument("shapley: empty evaluation set");

  // The aggregate has to be the one produced from these very updates.
  const std::size_t dim = aggregate.dim();
  std::vector<double> recomputed(dim, 0.0);
  double total_weight = 0.0;
  for (const auto& u : updates) {
    if (u.params.dim() != dim)
      throw std::invalid_argument("shapley: aggregate dimension mismatch");
    for (std::size_t j = 0; j < dim; ++j)
      recomputed[j] += u.weight * u.params.values[j];
    total_weight += u.weight;
  }
  if (variant == ShapleyVariant::normalized) {
    if (total_weight <= 0.0)
      throw std::invalid_argument("shapley: weights sum to zero");
    for (double& v : recomputed) v /= total_weight;
  }
  for (std::size_t j = 0; j < dim; ++j) {
    if (std::abs(recomputed[j] - aggregate.values[j]) > 1e-9)
      throw std::invalid_argument(
          "shapley: aggregate does not match updates under this variant");
  }

  const ParamVector grad = gradient(spec, aggregate, eval);

  ShapleyReport report;
  report.round = round;
  report.tier_id = tier;
  report.variant = variant;
  report.values.reserve(updates.size());
  for (const auto& u : updates) {
    double psi = 0.0;
    if (variant == ShapleyVariant::unnormalized) {
      for (std::size_t j = 0; j < dim; ++j)
        psi -= grad.values[j] * (u.weight * u.params.values[j]);
    } else {
      for (std::size_t j = 0; j < dim; ++j)
        psi -= grad.values[j] * (u.weight * (u.params.values[j] - aggregate.values[j]));
    }
    report.values.emplace_back(u.client_id, psi);
  }
  std::sort(report.values.begin(), report.values.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return report;
}

ParamVector aggregate_subset(const std::vector<ClientUpdate>& updates,
                             std::uint32_t mask, ShapleyVariant variant,
                             const ParamVector& prev_model) {
  const std::size_t dim = updates.front().params.dim();
  if (mask == 0) {
    if (variant == ShapleyVariant::unnormalized)
      return ParamVector(std::vector<double>(dim, 0.0));
    return prev_model;  // nobody contributes, model stays put
  }
  ParamVector out(std::vector<double>(dim, 0.0));
  double total_weight = 0.0;
  for (std::size_t m = 0; m < updates.size(); ++m) {
    if (!(mask & (1u << m))) continue;
    for (std::size_t j = 0; j < dim; ++j)
      out.values[j] += updates[m].weight * updates[m].params.values[j];
    total_weight += updates[m].weight;
  }
  if (variant == ShapleyVariant::normalized) {
    if (total_weight <= 0.0)
      throw std::invalid_argument("shapley: subset weights sum to zero");
    for (double& v : out.values) v /= total_weight;
  }
  return out;
}

std::vector<double> exact_shapley(const std::vector<ClientUpdate>& updates,
                                  const ParamVector& prev_model,
                                  const LabeledDataset& eval, const ModelSpec& spec,
                                  ShapleyVariant variant) {
  check_updates(updates);
  const int m_count = static_cast<int>(updates.size());
  if (m_count > kMaxExactClients)
    throw std::invalid_argument(
        "exact shapley enumerates subsets; limited to " +
        std::to_string(kMaxExactClients) +
        " clients, use estimate_shapley beyond that");

  const double prev_loss = loss(spec, prev_model, eval);
  const std::uint32_t subsets = 1u << m_count;
  std::vector<double> value(subsets);
  for (std::uint32_t mask = 0; mask < subsets; ++mask) {
    ParamVector agg = aggregate_subset(updates, mask, variant, prev_model);
    value[mask] = prev_loss - loss(spec, agg, eval);
  }

  std::vector<double> factorial(m_count + 1, 1.0);
  for (int i = 1; i <= m_count; ++i) factorial[i] = factorial[i - 1] * i;

  std::vector<double> shapley(m_count, 0.0);
  for (int m = 0; m < m_count; ++m) {
    for (std::uint32_t mask = 0; mask < subsets; ++mask) {
      if (mask & (1u << m)) continue;
      const int s = std::popcount(mask);
      const double coeff =
          factorial[s] * factorial[m_count - 1 - s] / factorial[m_count];
      shapley[m] += coeff * (value[mask | (1u << m)] - value[mask]);
    }
  }
  return shapley;
}

TierAccuracyRecord record_tier_accuracy(int tier_id, int round,
                                        const std::vector<double>& member_accuracies,
                                        double prior_max) {
  if (member_accuracies.empty())
    throw std::invalid_argument("tier accuracy: no member evaluations");
  const double mean =
      std::accumulate(member_accuracies.begin(), member_accuracies.end(), 0.0) /
      static_cast<double>(member_accuracies.size());
  TierAccuracyRecord record;
  record.tier_id = tier_id;
  record.round = round;
  record.acc_round = mean;
  record.acc_max = std::max(prior_max, mean);
  return record;
}

std::vector<double> per_class_f1(const ModelSpec& spec, const ParamVector& params,
                                 const LabeledDataset& eval) {
  if (spec.kind != ModelKind::softmax)
    throw std::invalid_argument("per-class F1 requires a classifier");
  std::vector<int> tp(spec.num_classes, 0), fp(spec.num_classes, 0),
      fn(spec.num_classes, 0);
  for (std::size_t i = 0; i < eval.size(); ++i) {
    const int predicted = predict_class(spec, params, eval.row(i));
    const int truth = eval.labels[i];
    if (predicted == truth) {
      tp[truth] += 1;
    } else {
      fp[predicted] += 1;
      fn[truth] += 1;
    }
  }
  std::vector<double> f1(spec.num_classes, 0.0);
  for (int c = 0; c < spec.num_classes; ++c) {
    const int denom = 2 * tp[c] + fp[c] + fn[c];
    f1[c] = denom == 0 ? 0.0 : 2.0 * tp[c] / static_cast<double>(denom);
  }
  return f1;
}

std::vector<int> pretraining_tiering(const std::vector<F1Profile>& profiles,
                                     int num_tiers, std::uint64_t seed) {
  if (num_tiers < 1) throw std::invalid_argument("tiering: num_tiers must be >= 1");
  if (profiles.empty()) return {};

  std::vector<int> assignment(profiles.size(), -1);
  std::vector<std::size_t> responders;
  for (std::size_t i = 0; i < profiles.size(); ++i)
    if (profiles[i].responded) responders.push_back(i);

  auto rng = make_rng(derive_seed(seed, "pretraining.random-assignment"));
  auto assign_random = [&](std::size_t idx) {
    assignment[idx] = static_cast<int>(rng() % static_cast<std::uint64_t>(num_tiers));
  };

  if (static_cast<int>(responders.size()) < num_tiers) {
    for (std::size_t i = 0; i < profiles.size(); ++i) assign_random(i);
    return assignment;
  }

  const int c_count = static_cast<int>(profiles[responders.front()].per_class_f1.size());
  // Across-client variance per class, highest first.
  std::vector<std::pair<double, int>> variance(c_count);
  for (int c = 0; c < c_count; ++c) {
    double mean = 0.0;
    for (std::size_t i : responders) mean += profiles[i].per_class_f1[c];
    mean /= static_cast<double>(responders.size());
    double var = 0.0;
    for (std::size_t i : responders) {
      const double d = profiles[i].per_class_f1[c] - mean;
      var += d * d;
    }
    variance[c] = {var / static_cast<double>(responders.size()), c};
  }
  std::stable_sort(variance.begin(), variance.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  const int keep = (c_count + 1) / 2;
  std::vector<int> selected_classes;
  for (int r = 0; r < keep; ++r) selected_classes.push_back(variance[r].second);
  std::sort(selected_classes.begin(), selected_classes.end());

  std::vector<std::vector<double>> points;
  points.reserve(responders.size());
  for (std::size_t i : responders) {
    std::vector<double> p;
    p.reserve(selected_classes.size());
    for (int c : selected_classes) p.push_back(profiles[i].per_class_f1[c]);
    points.push_back(std::move(p));
  }
  const auto clusters = kmeans(points, num_tiers, derive_seed(seed, "pretraining.kmeans"));
  for (std::size_t r = 0; r < responders.size(); ++r)
    assignment[responders[r]] = clusters.assignment[r];

  for (std::size_t i = 0; i < profiles.size(); ++i)
    if (assignment[i] < 0) assign_random(i);
  return assignment;
}

}  // namespace tierfed
