// Acceptance suite: one line per criterion, nonzero exit on any failure.
// Runs the estimator-versus-oracle studies, the closed-form verification,
// and the pinned simulation scenarios end to end.

#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "tierfed/checks.hpp"
#include "tierfed/config.hpp"
#include "tierfed/orchestrator.hpp"
#include "tierfed/properties.hpp"
#include "tierfed/rng.hpp"

using namespace tierfed;

namespace {

int g_failures = 0;

void report(int criterion, const char* name, bool pass, const std::string& detail,
            double seconds, double limit_seconds) {
  const bool in_time = seconds <= limit_seconds;
  if (!pass || !in_time) ++g_failures;
  std::printf("%s  criterion-%d  %-22s %s (%.1fs/%.0fs)\n",
              pass && in_time ? "PASS" : "FAIL", criterion, name, detail.c_str(),
              seconds, limit_seconds);
  std::fflush(stdout);
}

class Timer {
 public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

// The shared 10:90 population every simulation criterion runs on.
RunConfig base_config(std::uint64_t seed) {
  RunConfig config = default_run_config();
  config.seed = seed;
  config.population.mixture.partition = PartitionKind::ratio;
  config.population.mixture.ratio_a = 10;
  config.population.mixture.ratio_b = 90;
  config.population.mixture.num_clients = 50;
  config.population.mixture.feature_dim = 6;
  config.population.mixture.classes_per_distribution = 2;
  config.population.mixture.train_samples_per_client = 200;
  config.population.mixture.test_samples_per_client = 100;
  config.population.mixture.center_scale = 2.0;
  config.population.mixture.cluster_stddev = 1.25;
  config.population.mixture.seed = derive_seed(seed, "population");
  config.model = {ModelKind::softmax, 6, 4};
  config.training = {2, 0.05, 32};
  config.incentive = {1.0, 0.5, 0.2, 100.0};
  config.selection = {22, 3, 2};
  config.bids = {BidMode::incentive, 0.5};
  config.server_eval_samples = 200;
  return config;
}

double mean_of_vec(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

PropertyVerdict verdict_of(const std::vector<PropertyVerdict>& verdicts,
                           const char* name) {
  for (const auto& v : verdicts)
    if (v.name == name) return v;
  return {};
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

}  // namespace

int main() {
  const auto work_dir =
      std::filesystem::temp_directory_path() / "tierfed_acceptance";
  std::filesystem::remove_all(work_dir);
  std::filesystem::create_directories(work_dir);

  // Criteria 1 and 2: contribution estimator against the exact oracles.
  {
    Timer timer;
    const ShapleyCheckReport shapley = run_shapley_check(ShapleyCheckConfig{});
    const double elapsed = timer.seconds();
    report(1, "shapley-oracle",
           shapley.rank_pass && shapley.identity_pass,
           fmt("kendall_tau=%.3f (>=0.8), pairwise_identity_gap=%.2g (<=1e-9), "
               "instances=%d",
               shapley.kendall_tau, shapley.max_identity_gap, shapley.instances),
           elapsed, 60.0);
    report(2, "first-order-scaling", shapley.taylor_pass,
           fmt("gap_ratio %.2g -> %.2g, improvement=%.1f (in [3,30])",
               shapley.gap_ratio_coarse, shapley.gap_ratio_fine,
               shapley.improvement_factor),
           elapsed, 30.0);
  }

  // Criterion 3: closed-form estimator errors and the gain crossover.
  {
    Timer timer;
    const TheoryCheckReport theory = run_theory_check(TheoryCheckConfig{});
    report(3, "estimator-theory",
           theory.failures == 0 && theory.crossover_bracketed && !theory.underpowered,
           fmt("cells=%d failures=%d crossover in [%.2g,%.2g] around %.2g, "
               "replications=100000",
               theory.cells, theory.failures, theory.crossover_cell_lo,
               theory.crossover_cell_hi, theory.critical_tau_sq),
           timer.seconds(), 300.0);
  }

  // The pinned incentive run shared by criteria 4, 5 and 8.
  const RunConfig main_config = base_config(42);
  Timer main_timer;
  RunResult main_run = run(main_config);
  const double main_seconds = main_timer.seconds();
  const auto main_verdicts = check_all_properties(main_run.trace);

  // Criterion 4: exact token conservation, round by round, no overdrafts.
  {
    Timer timer;
    bool ok = !main_run.aborted && trace_round_count(main_run.trace) == 100;
    Millitokens minted = 0;
    for (const auto& e : main_run.trace.journal)
      if (e.type == EntryType::mint) minted += e.amount;
    const Millitokens expected =
        static_cast<Millitokens>(50) * to_millitokens(100.0);
    ok = ok && minted == expected;

    // Per-round balances from the trace plus carried pools.
    std::vector<Millitokens> balances(100, 0), carry(100, 0);
    std::vector<bool> negative(100, false);
    for (const auto& row : main_run.trace.clients) {
      balances[row.round] += row.balance;
      if (row.balance < 0) negative[row.round] = true;
    }
    for (const auto& row : main_run.trace.rounds) carry[row.round] += row.carry;
    int bad_rounds = 0;
    for (int r = 0; r < 100; ++r)
      if (balances[r] + carry[r] != minted || negative[r]) ++bad_rounds;
    ok = ok && bad_rounds == 0;
    report(4, "token-conservation", ok,
           fmt("100 rounds x 50 clients, minted=%lld mt, violating_rounds=%d, "
               "negative_balances=none",
               static_cast<long long>(minted), bad_rounds),
           main_seconds + timer.seconds(), 600.0);
  }

  // Criterion 5: tier recovery; purity and own-versus-cross dominance.
  {
    Timer timer;
    const auto purity = verdict_of(main_verdicts, "tier_purity");
    double min_gap = 1.0;
    bool distinct = true;
    std::vector<int> dominated;
    for (int tier = 0; tier < 2; ++tier) {
      double own = -1.0, cross = 2.0;
      int best = -1;
      std::vector<double> accs(2);
      for (int dist = 0; dist < 2; ++dist) {
        const auto holdout = sample_distribution_holdout(
            main_config.population.mixture, dist, 500,
            derive_seed(main_config.seed, "acceptance-holdout", tier, dist));
        accs[dist] = accuracy(main_config.model, main_run.tier_models[tier], holdout);
      }
      best = accs[0] >= accs[1] ? 0 : 1;
      own = accs[best];
      cross = accs[1 - best];
      min_gap = std::min(min_gap, own - cross);
      for (int seen : dominated) distinct = distinct && seen != best;
      dominated.push_back(best);
    }
    const bool ok = purity.conclusive && purity.statistic >= 0.9 &&
                    min_gap >= 0.15 && distinct;
    report(5, "tier-recovery", ok,
           fmt("final-10 purity=%.3f (>=0.9), min own-vs-cross gap=%.1f points "
               "(>=15), distinct dominance=%s",
               purity.statistic, 100.0 * min_gap, distinct ? "yes" : "no"),
           main_seconds + timer.seconds(), 600.0);
  }

  // Criterion 6: incentive ablation, paired seeds, under-capacity selection.
  RunConfig ablation_config = base_config(6);
  ablation_config.rounds = 60;
  ablation_config.selection = {13, 2, 2};
  RunResult ablation_random;
  {
    Timer timer;
    RunConfig random_config = ablation_config;
    random_config.bids.mode = BidMode::random_choice;
    const RunResult incentive = run(ablation_config);
    ablation_random = run(random_config);
    const double purity_incentive =
        check_tier_purity(incentive.trace).statistic;
    const double purity_random =
        check_tier_purity(ablation_random.trace).statistic;
    const double acc_gap = incentive.mean_personalized_accuracy -
                           ablation_random.mean_personalized_accuracy;
    const double purity_gap = purity_incentive - purity_random;
    report(6, "incentive-ablation", acc_gap >= 0.05 && purity_gap >= 0.2,
           fmt("personalized accuracy %.3f vs %.3f (gap %.1f points, >=5), "
               "purity %.3f vs %.3f (gap %.2f, >=0.2)",
               incentive.mean_personalized_accuracy,
               ablation_random.mean_personalized_accuracy, 100.0 * acc_gap,
               purity_incentive, purity_random, purity_gap),
           timer.seconds(), 1200.0);
  }

  // Criterion 7: baseline ordering on the inverse-test population.
  {
    Timer timer;
    RunConfig inverse_config = base_config(42);
    inverse_config.rounds = 40;
    inverse_config.population.mixture.inverse_test = true;
    const RunResult pifl = run(inverse_config);
    const double global = mean_of_vec(
        run_baseline(inverse_config, BaselineKind::global_fedavg));
    const double local = mean_of_vec(
        run_baseline(inverse_config, BaselineKind::local_only));
    const double personalized = pifl.mean_personalized_accuracy;
    const bool ok = personalized > global && global > local && personalized >= local;
    report(7, "baseline-ordering", ok,
           fmt("personalized=%.3f > global=%.3f > local=%.3f", personalized,
               global, local),
           timer.seconds(), 600.0);
  }

  // Criterion 8: rationality checks pass by default and fail when forced.
  {
    Timer timer;
    const auto ir = verdict_of(main_verdicts, "individual_rationality");
    const auto gr = verdict_of(main_verdicts, "group_rationality");

    // Adversarial individual rationality: a single-sample evaluation split
    // turns contribution estimates into noise, so payout ranks decouple
    // from merit and frequent top-half contributors can lose tokens.
    RunConfig ir_adversarial = base_config(1);
    ir_adversarial.rounds = 60;
    ir_adversarial.selection = {13, 2, 2};
    ir_adversarial.bids.mode = BidMode::random_choice;
    ir_adversarial.server_eval_samples = 1;
    ir_adversarial.incentive.max_reimbursable_fraction = 0.0;
    const RunResult ir_run = run(ir_adversarial);
    const auto ir_bad = check_individual_rationality(ir_run.trace);

    // Adversarial group rationality: the random-bid ablation run.
    const auto gr_bad = check_group_rationality(ablation_random.trace);

    const bool ok = ir.conclusive && ir.pass && gr.conclusive && gr.pass &&
                    ir_bad.conclusive && !ir_bad.pass && gr_bad.conclusive &&
                    !gr_bad.pass;
    report(8, "rationality-properties", ok,
           fmt("default IR=%.4f GR=%.3f both pass; adversarial IR=%.4f GR=%.3f "
               "both fail",
               ir.statistic, gr.statistic, ir_bad.statistic, gr_bad.statistic),
           timer.seconds(), 600.0);
  }

  // Criterion 9: byte-identical artifacts from two CLI runs of one config.
  {
    Timer timer;
    const auto config_path = work_dir / "determinism.json";
    {
      RunConfig small = base_config(7);
      small.rounds = 10;
      small.population.mixture.num_clients = 20;
      small.selection = {8, 2, 2};
      std::ofstream out(config_path);
      out << run_config_to_json(small).dump(2) << "\n";
    }
    const auto dir_a = work_dir / "det_a";
    const auto dir_b = work_dir / "det_b";
    int rc = 0;
    for (const auto& dir : {dir_a, dir_b}) {
      const std::string command = std::string(TIERFED_CLI_PATH) + " run --config " +
                                  config_path.string() + " --out " + dir.string() +
                                  " > /dev/null 2>&1";
      rc |= std::system(command.c_str());
    }
    bool identical = rc == 0;
    std::string mismatch;
    for (const char* name : {"rounds.csv", "selections.csv", "clients.csv",
                             "shapley.csv", "ledger.csv", "personalized_cdf.csv",
                             "summary.json"}) {
      const auto a = slurp(dir_a / name);
      const auto b = slurp(dir_b / name);
      if (a.empty() || a != b) {
        identical = false;
        mismatch = name;
      }
    }
    report(9, "replay-determinism", identical,
           identical ? "two cli runs, 7 artifacts byte-identical"
                     : "mismatch in " + mismatch,
           timer.seconds(), 120.0);
  }

  if (g_failures > 0) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all acceptance criteria satisfied\n");
  return 0;
}
