#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tierfed/scheduler.hpp"
#include "tierfed/token.hpp"

namespace tierfed {

struct TierRoundRow {
  int round = 0;
  int tier = 0;
  int selected = 0;
  double acc_round = 0.0;
  double acc_max = 0.0;
  double delta_util = 0.0;
  double theta = 0.0;
  Millitokens payments = 0;
  Millitokens reimbursement = 0;
  Millitokens rewards = 0;
  Millitokens carry = 0;
  std::string model_hash;
};

struct SelectionRow {
  int round = 0;
  int tier = 0;
  int client = 0;
  PickKind provenance = PickKind::initial;
};

struct ClientRoundRow {
  int round = 0;
  int client = 0;
  int ground_truth_tier = 0;
  int selected_tier = -1;  // -1 when not selected this round
  int bid_tier = -1;       // top-ranked bid submitted for the next round
  bool has_psi = false;
  double psi = 0.0;
  Millitokens payment = 0;
  Millitokens reimbursement = 0;
  Millitokens reward = 0;
  Millitokens balance = 0;
  double personalized_accuracy = 0.0;
  std::vector<double> upsilon;  // bid-side importance weights, one per tier
};

struct ShapleyRow {
  int round = 0;
  int tier = 0;
  int client = 0;
  double psi = 0.0;
  ShapleyVariant variant = ShapleyVariant::normalized;
};

// Everything a run emits; the property checks are pure functions of this.
struct RunTrace {
  int num_tiers = 0;
  std::vector<TierRoundRow> rounds;
  std::vector<SelectionRow> selections;
  std::vector<ClientRoundRow> clients;
  std::vector<ShapleyRow> shapley;
  std::vector<JournalEntry> journal;
};

int trace_round_count(const RunTrace& trace);

// Stable column orders; golden-tested.
std::string rounds_csv_header();
std::string selections_csv_header();
std::string clients_csv_header(int num_tiers);
std::string shapley_csv_header();
std::string ledger_csv_header();
std::string personalized_cdf_csv_header();

// Writes rounds.csv, selections.csv, clients.csv, shapley.csv, ledger.csv,
// personalized_cdf.csv and summary.json under `dir` (created if needed).
// Output is byte-deterministic for equal traces and summaries.
void write_run_artifacts(const std::string& dir, const RunTrace& trace,
                         const nlohmann::json& summary);

// Rebuilds a RunTrace from a run directory (the offline path for the
// property checks and the report command).
RunTrace load_run_trace(const std::string& dir);

nlohmann::json load_summary(const std::string& dir);

std::string format_double(double v);

}  // namespace tierfed
