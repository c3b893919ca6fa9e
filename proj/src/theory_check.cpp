#include <cmath>

#include "tierfed/checks.hpp"
#include "tierfed/rng.hpp"

namespace tierfed {

nlohmann::json TheoryCheckReport::to_json() const {
  nlohmann::json j{{"cells", cells},
                   {"failures", failures},
                   {"underpowered", underpowered},
                   {"crossover_bracketed", crossover_bracketed},
                   {"critical_tau_sq", critical_tau_sq},
                   {"crossover_cell", {crossover_cell_lo, crossover_cell_hi}},
                   {"pass", pass}};
  j["details"] = details;
  return j;
}

TheoryCheckReport run_theory_check(const TheoryCheckConfig& config) {
  TheoryCheckReport report;
  report.details = nlohmann::json::array();

  if (config.replications < config.min_replications) {
    report.underpowered = true;
    report.pass = false;
    return report;
  }

  // Grid cells: empirical errors within three standard errors of the
  // closed forms for all three estimators.
  int cell_index = 0;
  for (int m1 : config.tier_sizes) {
    for (int n0 : config.sample_sizes) {
      for (double tau_sq : config.tau_sq_grid) {
        for (double gap : config.beta_gaps) {
          TheoryScenario s;
          s.tier1_clients = m1;
          s.tier2_clients = m1;
          s.common_samples = n0;
          s.sigma_sq = config.sigma_sq;
          s.tau_sq = tau_sq;
          s.beta1 = 0.0;
          s.beta2 = gap;
          s.replications = config.replications;
          s.seed = derive_seed(config.seed, "theory-cell", cell_index);
          ++cell_index;

          const auto closed = closed_form_errors(s, s.target_client);
          const auto mc = monte_carlo_errors(s);
          const bool ok_local =
              std::abs(mc.mean.local - closed.local) <= 3.0 * mc.standard_error.local;
          const bool ok_fl =
              std::abs(mc.mean.fl - closed.fl) <= 3.0 * mc.standard_error.fl;
          const bool ok_tier =
              std::abs(mc.mean.tier - closed.tier) <= 3.0 * mc.standard_error.tier;
          report.cells += 1;
          if (!(ok_local && ok_fl && ok_tier)) report.failures += 1;

          report.details.push_back(nlohmann::json{
              {"scenario", scenario_to_json(s)},
              {"closed", {closed.local, closed.fl, closed.tier}},
              {"empirical", {mc.mean.local, mc.mean.fl, mc.mean.tier}},
              {"standard_error",
               {mc.standard_error.local, mc.standard_error.fl, mc.standard_error.tier}},
              {"pass", ok_local && ok_fl && ok_tier}});
        }
      }
    }
  }

  // Crossover scan: the sign of (tier error - local error) flips exactly at
  // the gain threshold in the closed forms, and the Monte-Carlo flip must
  // land in the same grid cell.
  {
    TheoryScenario base;
    base.tier1_clients = config.scan_tier_size;
    base.tier2_clients = config.scan_tier_size;
    base.common_samples = config.scan_sample_size;
    base.sigma_sq = config.sigma_sq;
    base.replications = config.replications;
    report.critical_tau_sq = gain_threshold(base);

    int closed_flip = -1;
    int mc_flip = -1;
    double prev_closed = 0.0, prev_mc = 0.0;
    nlohmann::json scan = nlohmann::json::array();
    for (std::size_t i = 0; i < config.scan_tau_sq.size(); ++i) {
      TheoryScenario s = base;
      s.tau_sq = config.scan_tau_sq[i];
      s.seed = derive_seed(config.seed, "theory-scan", i);
      const auto closed = closed_form_errors(s, 0);
      const auto mc = monte_carlo_errors(s);
      const double closed_diff = closed.tier - closed.local;
      const double mc_diff = mc.mean.tier - mc.mean.local;
      scan.push_back(nlohmann::json{{"tau_sq", s.tau_sq},
                                    {"closed_diff", closed_diff},
                                    {"empirical_diff", mc_diff}});
      if (i > 0) {
        if (closed_flip < 0 && prev_closed < 0.0 && closed_diff >= 0.0)
          closed_flip = static_cast<int>(i) - 1;
        if (mc_flip < 0 && prev_mc < 0.0 && mc_diff >= 0.0)
          mc_flip = static_cast<int>(i) - 1;
      }
      prev_closed = closed_diff;
      prev_mc = mc_diff;
    }
    report.details.push_back(nlohmann::json{{"crossover_scan", scan}});

    if (closed_flip >= 0) {
      report.crossover_cell_lo = config.scan_tau_sq[closed_flip];
      report.crossover_cell_hi = config.scan_tau_sq[closed_flip + 1];
      const bool critical_inside =
          report.critical_tau_sq >= report.crossover_cell_lo &&
          report.critical_tau_sq <= report.crossover_cell_hi;
      report.crossover_bracketed = critical_inside && mc_flip == closed_flip;
    }
  }

  report.pass = report.failures == 0 && report.crossover_bracketed &&
                !report.underpowered;
  return report;
}

}  // namespace tierfed
