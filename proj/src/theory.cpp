#include "tierfed/theory.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "tierfed/rng.hpp"

namespace tierfed {

bool TheoryScenario::equal_samples() const {
  if (samples_per_client.empty()) return true;
  for (int n : samples_per_client)
    if (n != samples_per_client.front()) return false;
  return true;
}

void TheoryScenario::validate() const {
  if (tier1_clients < 1)
    throw std::invalid_argument("theory: tier1 needs at least one client");
  if (tier2_clients < 0)
    throw std::invalid_argument("theory: tier2_clients must be >= 0");
  if (!samples_per_client.empty() &&
      static_cast<int>(samples_per_client.size()) != num_clients())
    throw std::invalid_argument("theory: samples_per_client length mismatch");
  for (int c = 0; c < num_clients(); ++c)
    if (samples_of(c) < 1)
      throw std::invalid_argument("theory: every client needs >= 1 sample");
  if (sigma_sq <= 0.0) throw std::invalid_argument("theory: sigma_sq must be > 0");
  if (tau_sq < 0.0) throw std::invalid_argument("theory: tau_sq must be >= 0");
  if (replications < 1)
    throw std::invalid_argument("theory: replications must be >= 1");
  if (target_client < 0 || target_client >= tier1_clients)
    throw std::invalid_argument("theory: target client must be in tier 1");
}

EstimatorErrors closed_form_errors(const TheoryScenario& s, int client_index) {
  s.validate();
  if (client_index < 0 || client_index >= s.tier1_clients)
    throw std::invalid_argument("theory: closed forms cover tier-1 clients");

  const int m = s.num_clients();
  double n_total = 0.0, n_tier1 = 0.0;
  for (int c = 0; c < m; ++c) {
    n_total += s.samples_of(c);
    if (c < s.tier1_clients) n_tier1 += s.samples_of(c);
  }
  const double n_i = s.samples_of(client_index);
  const double beta_gap = s.beta2 - s.beta1;

  EstimatorErrors e;
  e.local = s.sigma_sq / n_i;

  double bias = 0.0;
  double variance = 0.0;
  for (int j = 0; j < m; ++j) {
    const double n_j = s.samples_of(j);
    const double share = n_j / n_total;
    if (j >= s.tier1_clients) bias += share * beta_gap;
    if (j == client_index) {
      variance += share * share * (s.sigma_sq / n_j);
    } else {
      variance += share * share * (s.sigma_sq / n_j + 2.0 * s.tau_sq);
    }
  }
  e.fl = bias * bias + variance;

  double tier_variance = 0.0;
  for (int j = 0; j < s.tier1_clients; ++j) {
    const double n_j = s.samples_of(j);
    const double share = n_j / n_tier1;
    if (j == client_index) {
      tier_variance += share * share * (s.sigma_sq / n_j);
    } else {
      tier_variance += share * share * (s.sigma_sq / n_j + 2.0 * s.tau_sq);
    }
  }
  e.tier = tier_variance;
  return e;
}

double gain_threshold(const TheoryScenario& s) {
  s.validate();
  if (!s.equal_samples())
    throw std::invalid_argument(
        "theory: the gain threshold is derived for equal sample sizes");
  return s.tier1_clients * s.sigma_sq / (2.0 * s.samples_of(0));
}

MonteCarloErrors monte_carlo_errors(const TheoryScenario& s) {
  s.validate();
  const int m = s.num_clients();
  double n_total = 0.0, n_tier1 = 0.0;
  for (int c = 0; c < m; ++c) {
    n_total += s.samples_of(c);
    if (c < s.tier1_clients) n_tier1 += s.samples_of(c);
  }
  const double beta_gap = s.beta2 - s.beta1;
  const double sigma = std::sqrt(s.sigma_sq);
  const double tau = std::sqrt(s.tau_sq);
  const double cross_sd = std::sqrt(2.0 * s.tau_sq);

  double sum_local = 0.0, sumsq_local = 0.0;
  double sum_fl = 0.0, sumsq_fl = 0.0;
  double sum_tier = 0.0, sumsq_tier = 0.0;

  for (int rep = 0; rep < s.replications; ++rep) {
    auto rng = make_rng(derive_seed(s.seed, "theory-rep", rep));
    std::normal_distribution<double> unit(0.0, 1.0);

    const double mu_target = s.beta1 + tau * unit(rng);
    double fl_acc = 0.0, tier_acc = 0.0, local_mean = 0.0;
    for (int j = 0; j < m; ++j) {
      double mu_j;
      if (j == s.target_client) {
        mu_j = mu_target;
      } else if (j < s.tier1_clients) {
        mu_j = mu_target + cross_sd * unit(rng);
      } else {
        mu_j = mu_target + beta_gap + cross_sd * unit(rng);
      }
      const int n_j = s.samples_of(j);
      double sample_sum = 0.0;
      for (int t = 0; t < n_j; ++t) sample_sum += mu_j + sigma * unit(rng);
      const double sample_mean = sample_sum / n_j;
      fl_acc += (n_j / n_total) * sample_mean;
      if (j < s.tier1_clients) tier_acc += (n_j / n_tier1) * sample_mean;
      if (j == s.target_client) local_mean = sample_mean;
    }

    const double err_local = (local_mean - mu_target) * (local_mean - mu_target);
    const double err_fl = (fl_acc - mu_target) * (fl_acc - mu_target);
    const double err_tier = (tier_acc - mu_target) * (tier_acc - mu_target);
    sum_local += err_local;
    sumsq_local += err_local * err_local;
    sum_fl += err_fl;
    sumsq_fl += err_fl * err_fl;
    sum_tier += err_tier;
    sumsq_tier += err_tier * err_tier;
  }

  const double reps = static_cast<double>(s.replications);
  auto standard_error = [&](double sum, double sumsq) {
    if (s.replications < 2) return std::numeric_limits<double>::quiet_NaN();
    const double mean = sum / reps;
    const double var = std::max(0.0, sumsq / reps - mean * mean) * reps / (reps - 1.0);
    return std::sqrt(var / reps);
  };

  MonteCarloErrors out;
  out.replications = s.replications;
  out.mean = {sum_local / reps, sum_fl / reps, sum_tier / reps};
  out.standard_error = {standard_error(sum_local, sumsq_local),
                        standard_error(sum_fl, sumsq_fl),
                        standard_error(sum_tier, sumsq_tier)};
  return out;
}

nlohmann::json scenario_to_json(const TheoryScenario& s) {
  return nlohmann::json{
      {"tier1_clients", s.tier1_clients}, {"tier2_clients", s.tier2_clients},
      {"common_samples", s.common_samples}, {"sigma_sq", s.sigma_sq},
      {"tau_sq", s.tau_sq},               {"beta1", s.beta1},
      {"beta2", s.beta2},                 {"replications", s.replications},
      {"seed", s.seed},                   {"target_client", s.target_client}};
}

}  // namespace tierfed
