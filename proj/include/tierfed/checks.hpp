#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "tierfed/theory.hpp"

namespace tierfed {

// Estimated-versus-exact contribution study: random coalition instances,
// pooled rank agreement, the pairwise-sum identity on unnormalized
// instances, and the first-order error scaling in the perturbation size.
struct ShapleyCheckConfig {
  int instances = 200;
  int min_clients = 2;
  int max_clients = 6;
  double rank_perturbation = 0.05;
  double h_coarse = 1e-2;
  double h_fine = 1e-3;
  int taylor_instances = 60;
  double min_kendall_tau = 0.8;
  double max_identity_gap = 1e-9;
  double min_improvement = 3.0;
  double max_improvement = 30.0;
  std::uint64_t seed = 1;
};

struct ShapleyCheckReport {
  int instances = 0;
  double kendall_tau = 0.0;
  double kendall_tau_normalized = 0.0;
  double kendall_tau_unnormalized = 0.0;
  double max_identity_gap = 0.0;
  double gap_ratio_coarse = 0.0;  // sum |est-exact| / sum |exact|
  double gap_ratio_fine = 0.0;
  double improvement_factor = 0.0;
  bool rank_pass = false;
  bool identity_pass = false;
  bool taylor_pass = false;
  bool pass = false;

  nlohmann::json to_json() const;
};

ShapleyCheckReport run_shapley_check(const ShapleyCheckConfig& config);

// Appendix-grid verification of the closed-form estimator errors plus the
// personalization-gain crossover scan.
struct TheoryCheckConfig {
  std::vector<int> tier_sizes{5, 10};    // m1 = m2
  std::vector<int> sample_sizes{5, 20};  // n0
  std::vector<double> tau_sq_grid{0.0, 0.1, 0.5, 1.5};
  std::vector<double> beta_gaps{0.0, 5.0};
  double sigma_sq = 1.0;
  int replications = 100000;
  int min_replications = 1000;
  int scan_tier_size = 10;
  int scan_sample_size = 5;
  std::vector<double> scan_tau_sq{0.0, 0.3, 0.6, 0.9, 1.2, 1.5, 1.8};
  std::uint64_t seed = 7;
};

struct TheoryCheckReport {
  int cells = 0;
  int failures = 0;
  bool underpowered = false;
  bool crossover_bracketed = false;
  double critical_tau_sq = 0.0;
  double crossover_cell_lo = 0.0;
  double crossover_cell_hi = 0.0;
  bool pass = false;
  nlohmann::json details;

  nlohmann::json to_json() const;
};

TheoryCheckReport run_theory_check(const TheoryCheckConfig& config);

}  // namespace tierfed
