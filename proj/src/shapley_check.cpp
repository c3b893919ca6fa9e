#include <algorithm>
#include <cmath>

#include "tierfed/checks.hpp"
#include "tierfed/profiler.hpp"
#include "tierfed/rng.hpp"
#include "tierfed/stats.hpp"

namespace tierfed {

namespace {

struct Instance {
  ModelSpec spec;
  ParamVector prev_model;
  std::vector<ClientUpdate> updates;  // params = prev + h * direction
  std::vector<ParamVector> directions;
  LabeledDataset eval;
  ShapleyVariant variant = ShapleyVariant::normalized;
};

// Random coalition instance shaped like a round in progress: the previous
// model undershoots the evaluation optimum (a partially trained model), so
// the loss improves monotonically along the aggregation path and the
// evaluation gradient is informative. Client updates perturb the previous
// model; aggregation weights come from moderately spread sample sizes.
Instance make_instance(int index, int num_clients, double h, ModelKind kind,
                       ShapleyVariant variant, std::uint64_t seed) {
  auto rng = make_rng(derive_seed(seed, "shapley-instance", index));
  std::normal_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  Instance inst;
  inst.variant = variant;
  if (kind == ModelKind::scalar_mean) {
    inst.spec = {ModelKind::scalar_mean, 0, 0};
    const double center = (uniform(rng) < 0.5 ? -1.0 : 1.0) * (0.8 + 0.7 * uniform(rng));
    for (int i = 0; i < 50; ++i)
      inst.eval.append_target_point(center + unit(rng));
    inst.prev_model = ParamVector({center * (0.3 + 0.4 * uniform(rng))});
  } else {
    inst.spec = {ModelKind::softmax, 3, 3};
    inst.eval.feature_dim = 3;
    std::vector<std::vector<double>> centers(3, std::vector<double>(3));
    for (auto& c : centers)
      for (double& v : c) v = 2.0 * unit(rng);
    std::vector<double> x(3);
    for (int c = 0; c < 3; ++c) {
      for (int i = 0; i < 20; ++i) {
        for (int j = 0; j < 3; ++j) x[j] = centers[c][j] + unit(rng);
        inst.eval.append_class_point(x, c);
      }
    }
    inst.prev_model = train_local(inst.spec, zeros(inst.spec), inst.eval, 2, 0.5,
                                  static_cast<int>(inst.eval.size()),
                                  derive_seed(seed, "shapley-pretrain", index));
  }

  std::vector<double> sizes(num_clients);
  double total = 0.0;
  for (double& s : sizes) {
    s = 100.0 + std::floor(uniform(rng) * 101.0);
    total += s;
  }
  const std::size_t dim = inst.prev_model.dim();
  for (int m = 0; m < num_clients; ++m) {
    ParamVector direction{std::vector<double>(dim)};
    for (double& v : direction.values) v = unit(rng);
    ClientUpdate u;
    u.client_id = m;
    u.weight = sizes[m] / total;
    u.params = inst.prev_model;
    for (std::size_t j = 0; j < dim; ++j)
      u.params.values[j] += h * direction.values[j];
    inst.updates.push_back(std::move(u));
    inst.directions.push_back(std::move(direction));
  }
  return inst;
}

ParamVector instance_aggregate(const Instance& inst) {
  const std::size_t dim = inst.prev_model.dim();
  ParamVector agg(std::vector<double>(dim, 0.0));
  double total = 0.0;
  for (const auto& u : inst.updates) {
    for (std::size_t j = 0; j < dim; ++j)
      agg.values[j] += u.weight * u.params.values[j];
    total += u.weight;
  }
  if (inst.variant == ShapleyVariant::normalized)
    for (double& v : agg.values) v /= total;
  return agg;
}

void rescale_instance(Instance& inst, double h) {
  const std::size_t dim = inst.prev_model.dim();
  for (std::size_t m = 0; m < inst.updates.size(); ++m)
    for (std::size_t j = 0; j < dim; ++j)
      inst.updates[m].params.values[j] =
          inst.prev_model.values[j] + h * inst.directions[m].values[j];
}

struct GapSums {
  double abs_gap = 0.0;
  double abs_exact = 0.0;
};

// First-order scaling is checked against the true marginal loss reduction:
// the loss evaluated at the model with client i's weighted update taken
// out, minus the loss at the aggregate. That is the quantity the gradient
// estimate Taylor-approximates, so the relative gap shrinks linearly in
// the perturbation size. The enumerated Shapley (and even the exact
// renormalized leave-one-out value) differ from the estimate at first
// order through coalition-size factors, independent of h.
GapSums instance_gaps(const Instance& inst) {
  const ParamVector agg = instance_aggregate(inst);
  const auto report = estimate_shapley(agg, inst.updates, inst.eval, inst.spec,
                                       inst.variant);
  const double full_loss = loss(inst.spec, agg, inst.eval);
  GapSums sums;
  for (std::size_t m = 0; m < inst.updates.size(); ++m) {
    ParamVector marginal = agg;
    for (std::size_t j = 0; j < agg.dim(); ++j) {
      const double delta =
          inst.variant == ShapleyVariant::unnormalized
              ? inst.updates[m].weight * inst.updates[m].params.values[j]
              : inst.updates[m].weight *
                    (inst.updates[m].params.values[j] - agg.values[j]);
      marginal.values[j] -= delta;
    }
    const double exact = loss(inst.spec, marginal, inst.eval) - full_loss;
    sums.abs_gap += std::abs(report.values[m].second - exact);
    sums.abs_exact += std::abs(exact);
  }
  return sums;
}

}  // namespace

nlohmann::json ShapleyCheckReport::to_json() const {
  return nlohmann::json{{"instances", instances},
                        {"kendall_tau", kendall_tau},
                        {"kendall_tau_normalized", kendall_tau_normalized},
                        {"kendall_tau_unnormalized", kendall_tau_unnormalized},
                        {"max_identity_gap", max_identity_gap},
                        {"gap_ratio_coarse", gap_ratio_coarse},
                        {"gap_ratio_fine", gap_ratio_fine},
                        {"improvement_factor", improvement_factor},
                        {"rank_pass", rank_pass},
                        {"identity_pass", identity_pass},
                        {"taylor_pass", taylor_pass},
                        {"pass", pass}};
}

ShapleyCheckReport run_shapley_check(const ShapleyCheckConfig& config) {
  ShapleyCheckReport report;
  report.instances = config.instances;

  KendallAccumulator kendall;
  KendallAccumulator kendall_by_variant[2];
  double worst_identity = 0.0;

  for (int i = 0; i < config.instances; ++i) {
    const int span = config.max_clients - config.min_clients + 1;
    const int m = config.min_clients + i % span;
    const ModelKind kind = (i / span) % 2 == 0 ? ModelKind::scalar_mean
                                               : ModelKind::softmax;
    const ShapleyVariant variant =
        i % 2 == 0 ? ShapleyVariant::normalized : ShapleyVariant::unnormalized;
    Instance inst = make_instance(i, m, config.rank_perturbation, kind, variant,
                                  config.seed);
    const ParamVector agg = instance_aggregate(inst);
    const auto estimated = estimate_shapley(agg, inst.updates, inst.eval,
                                            inst.spec, variant);
    const auto exact = exact_shapley(inst.updates, inst.prev_model, inst.eval,
                                     inst.spec, variant);
    std::vector<double> est_values;
    est_values.reserve(exact.size());
    for (const auto& [client, psi] : estimated.values) est_values.push_back(psi);
    kendall.add_group(est_values, exact);
    kendall_by_variant[variant == ShapleyVariant::normalized ? 0 : 1].add_group(
        est_values, exact);

    if (variant == ShapleyVariant::unnormalized) {
      // Pairwise-sum identity, with the joint first-order value computed
      // through its own route: gradient at the aggregate dotted with the
      // weighted update sum.
      const ParamVector grad = gradient(inst.spec, agg, inst.eval);
      for (std::size_t a = 0; a < inst.updates.size(); ++a) {
        for (std::size_t b = a + 1; b < inst.updates.size(); ++b) {
          double joint = 0.0;
          for (std::size_t j = 0; j < grad.dim(); ++j)
            joint -= grad.values[j] *
                     (inst.updates[a].weight * inst.updates[a].params.values[j] +
                      inst.updates[b].weight * inst.updates[b].params.values[j]);
          const double gap =
              std::abs(joint - (est_values[a] + est_values[b]));
          worst_identity = std::max(worst_identity, gap);
        }
      }
    }
  }
  report.kendall_tau = kendall.tau();
  report.kendall_tau_normalized = kendall_by_variant[0].tau();
  report.kendall_tau_unnormalized = kendall_by_variant[1].tau();
  report.max_identity_gap = worst_identity;
  report.rank_pass = report.kendall_tau >= config.min_kendall_tau;
  report.identity_pass = worst_identity <= config.max_identity_gap;

  // First-order scaling: the same instances evaluated at two perturbation
  // sizes; the relative gap should shrink linearly in h.
  GapSums coarse, fine;
  for (int i = 0; i < config.taylor_instances; ++i) {
    const int span = config.max_clients - config.min_clients + 1;
    const int m = config.min_clients + i % span;
    const ModelKind kind = i % 2 == 0 ? ModelKind::scalar_mean : ModelKind::softmax;
    Instance inst = make_instance(10000 + i, m, config.h_coarse, kind,
                                  ShapleyVariant::normalized, config.seed);
    GapSums g = instance_gaps(inst);
    coarse.abs_gap += g.abs_gap;
    coarse.abs_exact += g.abs_exact;
    rescale_instance(inst, config.h_fine);
    g = instance_gaps(inst);
    fine.abs_gap += g.abs_gap;
    fine.abs_exact += g.abs_exact;
  }
  report.gap_ratio_coarse = coarse.abs_gap / coarse.abs_exact;
  report.gap_ratio_fine = fine.abs_gap / fine.abs_exact;
  report.improvement_factor = report.gap_ratio_coarse / report.gap_ratio_fine;
  report.taylor_pass = report.improvement_factor >= config.min_improvement &&
                       report.improvement_factor <= config.max_improvement;

  report.pass = report.rank_pass && report.identity_pass && report.taylor_pass;
  return report;
}

}  // namespace tierfed
