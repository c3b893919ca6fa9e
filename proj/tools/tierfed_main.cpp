#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tierfed/checks.hpp"
#include "tierfed/config.hpp"
#include "tierfed/properties.hpp"
#include "tierfed/rng.hpp"
#include "tierfed/trace.hpp"

namespace {

using namespace tierfed;

std::string default_out_dir(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("TIERFED_OUT"); env && *env) return env;
  return "out";
}

void write_json(const std::string& dir, const char* name, const nlohmann::json& j) {
  std::filesystem::create_directories(dir);
  std::ofstream out((std::filesystem::path(dir) / name).string());
  out << j.dump(2) << "\n";
}

void print_verdicts(const std::vector<PropertyVerdict>& verdicts) {
  std::printf("%-26s %-10s %-12s %-12s %s\n", "property", "verdict", "statistic",
              "threshold", "scope");
  for (const auto& v : verdicts) {
    std::printf("%-26s %-10s %-12.4f %-12.4f %s\n", v.name.c_str(),
                !v.conclusive ? "inconclusive" : (v.pass ? "pass" : "FAIL"),
                v.statistic, v.threshold, v.scope.c_str());
  }
}

int cmd_run(const std::string& config_path, const std::string& out_flag,
            const std::vector<std::string>& overrides,
            std::optional<std::uint64_t> seed) {
  RunConfig config;
  try {
    config = load_run_config(config_path, overrides, seed);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  }
  const std::string out = default_out_dir(out_flag);
  RunResult result = run(config);
  nlohmann::json summary = build_summary(config, result);
  const auto verdicts = check_all_properties(result.trace);
  for (const auto& v : verdicts) summary["verdicts"].push_back(v.to_json());
  write_run_artifacts(out, result.trace, summary);
  print_verdicts(verdicts);
  std::printf("run complete: %d rounds, mean personalized accuracy %.4f -> %s\n",
              trace_round_count(result.trace), result.mean_personalized_accuracy,
              out.c_str());
  if (result.aborted) {
    std::fprintf(stderr, "run aborted: %s (partial trace retained)\n",
                 result.abort_message.c_str());
    return 1;
  }
  return 0;
}

int cmd_shapley_check(const std::string& out_flag, ShapleyCheckConfig config) {
  if (config.max_clients > 12 || config.min_clients < 1 ||
      config.min_clients > config.max_clients) {
    std::fprintf(stderr,
                 "shapley-check: instance sizes must stay within 1..12 clients "
                 "(exact enumeration)\n");
    return 2;
  }
  const auto report = run_shapley_check(config);
  write_json(default_out_dir(out_flag), "shapley_report.json", report.to_json());
  std::printf("kendall_tau=%.4f identity_gap=%.3g improvement=%.2f [%s]\n",
              report.kendall_tau, report.max_identity_gap,
              report.improvement_factor, report.pass ? "pass" : "FAIL");
  return report.pass ? 0 : 1;
}

int cmd_theory_check(const std::string& out_flag, TheoryCheckConfig config) {
  const auto report = run_theory_check(config);
  write_json(default_out_dir(out_flag), "theory_report.json", report.to_json());
  if (report.underpowered) {
    std::fprintf(stderr, "theory-check: underpowered (replications < %d)\n",
                 config.min_replications);
    return 3;
  }
  std::printf("cells=%d failures=%d crossover=[%.3g,%.3g] critical=%.3g [%s]\n",
              report.cells, report.failures, report.crossover_cell_lo,
              report.crossover_cell_hi, report.critical_tau_sq,
              report.pass ? "pass" : "FAIL");
  if (!report.crossover_bracketed) {
    std::fprintf(stderr, "theory-check: crossover not bracketed by the tau_sq grid\n");
    return 3;
  }
  return report.failures == 0 ? 0 : 1;
}

// Accuracy of each final tier model on each source distribution, with the
// dominant distribution marked.
int cmd_report(const std::string& run_dir, const std::string& run_b,
               const std::string& out_flag) {
  const std::string out = default_out_dir(out_flag);
  nlohmann::json summary;
  try {
    summary = load_summary(run_dir);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "report: %s\n", e.what());
    return 2;
  }
  RunConfig config;
  try {
    config = parse_run_config(summary.at("config"));
  } catch (const std::exception& e) {
    std::fprintf(stderr, "report: summary config invalid: %s\n", e.what());
    return 2;
  }
  if (config.population.type != PopulationType::mixture) {
    std::fprintf(stderr, "report: tier dominance needs a mixture population\n");
    return 2;
  }
  const auto& spec = config.population.mixture;
  std::vector<ParamVector> models;
  for (const auto& m : summary.at("final_tier_models"))
    models.push_back(ParamVector(m.get<std::vector<double>>()));

  std::filesystem::create_directories(out);
  {
    std::ofstream csv((std::filesystem::path(out) / "tier_dominance.csv").string());
    csv << "tier";
    for (int s = 0; s < spec.num_distributions; ++s) csv << ",dist_" << s;
    csv << ",dominates\n";
    for (std::size_t tier = 0; tier < models.size(); ++tier) {
      csv << tier;
      int best = 0;
      double best_acc = -1.0;
      std::vector<double> accs(spec.num_distributions);
      for (int s = 0; s < spec.num_distributions; ++s) {
        const auto holdout = sample_distribution_holdout(
            spec, s, 500, derive_seed(config.seed, "report-holdout", s));
        accs[s] = accuracy(config.model, models[tier], holdout);
        if (accs[s] > best_acc) {
          best_acc = accs[s];
          best = s;
        }
      }
      for (double a : accs) csv << ',' << format_double(a);
      csv << ',' << best << "\n";
    }
  }

  if (!run_b.empty()) {
    nlohmann::json summary_b;
    try {
      summary_b = load_summary(run_b);
    } catch (const std::exception& e) {
      std::fprintf(stderr, "report: %s\n", e.what());
      return 2;
    }
    const auto trace_a = load_run_trace(run_dir);
    const auto trace_b = load_run_trace(run_b);
    const double acc_a = summary.at("mean_personalized_accuracy").get<double>();
    const double acc_b = summary_b.at("mean_personalized_accuracy").get<double>();
    const double purity_a = check_tier_purity(trace_a).statistic;
    const double purity_b = check_tier_purity(trace_b).statistic;
    std::ofstream csv((std::filesystem::path(out) / "ablation_delta.csv").string());
    csv << "metric,run_a,run_b,delta\n";
    csv << "mean_personalized_accuracy," << format_double(acc_a) << ','
        << format_double(acc_b) << ',' << format_double(acc_a - acc_b) << "\n";
    csv << "tier_purity," << format_double(purity_a) << ','
        << format_double(purity_b) << ',' << format_double(purity_a - purity_b)
        << "\n";
  }
  std::printf("report written to %s\n", out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tier-based personalized federated learning simulator with a "
               "token incentive economy"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;

  auto* run_cmd = app.add_subcommand("run", "execute a simulation run");
  run_cmd->add_option("--config", config_path, "config file (JSON)")->required();
  run_cmd->add_option("--out", out_dir, "output directory");
  run_cmd->add_option("--set", overrides,
                      "dotted config override, e.g. selection.merit_count=10");
  run_cmd->add_option("--seed", seed, "root seed override");

  ShapleyCheckConfig shapley_config;
  auto* shapley_cmd = app.add_subcommand(
      "shapley-check", "verify the contribution estimator against the exact oracle");
  shapley_cmd->add_option("--out", out_dir, "output directory");
  shapley_cmd->add_option("--instances", shapley_config.instances, "instance count");
  shapley_cmd->add_option("--min-clients", shapley_config.min_clients,
                          "smallest coalition");
  shapley_cmd->add_option("--max-clients", shapley_config.max_clients,
                          "largest coalition (<= 12)");
  shapley_cmd->add_option("--seed", shapley_config.seed, "instance seed");

  TheoryCheckConfig theory_config;
  auto* theory_cmd = app.add_subcommand(
      "theory-check", "verify the closed-form estimator errors by Monte Carlo");
  theory_cmd->add_option("--out", out_dir, "output directory");
  theory_cmd->add_option("--replications", theory_config.replications,
                         "Monte-Carlo replications per cell");
  theory_cmd->add_option("--scan-tau-sq", theory_config.scan_tau_sq,
                         "tau_sq grid for the crossover scan");
  theory_cmd->add_option("--seed", theory_config.seed, "simulation seed");

  std::string run_dir, run_b_dir;
  auto* report_cmd = app.add_subcommand(
      "report", "derive dominance and ablation tables from run outputs");
  report_cmd->add_option("--run", run_dir, "run output directory")->required();
  report_cmd->add_option("--run-b", run_b_dir,
                         "second run directory for the ablation delta");
  report_cmd->add_option("--out", out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return cmd_run(config_path, out_dir, overrides, seed);
    if (shapley_cmd->parsed()) return cmd_shapley_check(out_dir, shapley_config);
    if (theory_cmd->parsed()) return cmd_theory_check(out_dir, theory_config);
    if (report_cmd->parsed()) return cmd_report(run_dir, run_b_dir, out_dir);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
