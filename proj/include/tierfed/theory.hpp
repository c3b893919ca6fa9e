#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

namespace tierfed {

// Two-tier Gaussian mean-estimation scenario. Client means sit tau^2 around
// their tier root (beta1 for tier 1, beta2 for tier 2); observations have
// variance sigma_sq. samples_per_client may be a single shared n0 (empty
// vector means every client observes common_samples points).
struct TheoryScenario {
  int tier1_clients = 10;
  int tier2_clients = 10;
  int common_samples = 5;
  std::vector<int> samples_per_client;  // optional override, tier 1 then tier 2
  double sigma_sq = 1.0;
  double tau_sq = 0.0;
  double beta1 = 0.0;
  double beta2 = 0.0;
  int replications = 1000;
  std::uint64_t seed = 0;
  int target_client = 0;  // index within tier 1

  int num_clients() const { return tier1_clients + tier2_clients; }
  int samples_of(int client) const {
    return samples_per_client.empty() ? common_samples
                                      : samples_per_client.at(client);
  }
  bool equal_samples() const;
  void validate() const;
};

struct EstimatorErrors {
  double local = 0.0;
  double fl = 0.0;
  double tier = 0.0;
};

// Closed-form mean squared errors of the three estimators for a tier-1
// client: local sample mean, all-client federated mean, and the tier-1
// mean, conditional on the client's own true mean.
EstimatorErrors closed_form_errors(const TheoryScenario& s, int client_index);

// Largest within-tier variance at which the tier estimator still beats
// local training: tau^2 < m1 sigma^2 / (2 n0). Requires equal sample
// sizes, the regime the formula is derived in.
double gain_threshold(const TheoryScenario& s);

struct MonteCarloErrors {
  EstimatorErrors mean;
  EstimatorErrors standard_error;  // NaN entries when replications == 1
  int replications = 0;
};

// Simulates the conditional generative model directly: the target client's
// mean is redrawn each replication, same-tier means sit 2 tau^2 around it,
// cross-tier means are shifted by beta2 - beta1, then every client draws
// its observations and the three estimators are scored against the target
// client's true mean.
MonteCarloErrors monte_carlo_errors(const TheoryScenario& s);

nlohmann::json scenario_to_json(const TheoryScenario& s);

}  // namespace tierfed
