#include "tierfed/trace.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tierfed {

namespace {

std::string mt_to_tokens_str(Millitokens amount) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%lld.%03lld",
                static_cast<long long>(amount / 1000),
                static_cast<long long>(std::abs(amount % 1000)));
  // Negative amounts with zero integer part need the sign restored.
  if (amount < 0 && amount / 1000 == 0) return std::string("-") + buf;
  return buf;
}

Millitokens tokens_str_to_mt(const std::string& s) {
  return to_millitokens(std::stod(s));
}

EntryType entry_type_from_name(const std::string& name) {
  for (EntryType t : {EntryType::mint, EntryType::payment, EntryType::reimbursement,
                      EntryType::reward, EntryType::carry, EntryType::refusal}) {
    if (name == entry_type_name(t)) return t;
  }
  throw std::runtime_error("unknown ledger entry type: " + name);
}

PickKind pick_kind_from_name(const std::string& name) {
  for (PickKind k : {PickKind::initial, PickKind::merit, PickKind::random_fill}) {
    if (name == pick_kind_name(k)) return k;
  }
  throw std::runtime_error("unknown selection provenance: " + name);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

std::vector<std::vector<std::string>> read_csv(const std::string& path,
                                               std::string* header = nullptr) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty csv: " + path);
  if (header) *header = line;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    rows.push_back(split_csv_line(line));
  }
  return rows;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

int trace_round_count(const RunTrace& trace) {
  int max_round = -1;
  for (const auto& r : trace.rounds) max_round = std::max(max_round, r.round);
  return max_round + 1;
}

std::string rounds_csv_header() {
  return "round,tier,selected,acc_round,acc_max,delta_util,theta,payments,"
         "reimbursement,rewards,carry,model_hash";
}

std::string selections_csv_header() { return "round,tier,client,provenance"; }

std::string clients_csv_header(int num_tiers) {
  std::string h =
      "round,client,ground_truth_tier,selected_tier,bid_tier,psi,payment,"
      "reimbursement,reward,balance,personalized_accuracy";
  for (int k = 0; k < num_tiers; ++k) h += ",u_" + std::to_string(k);
  return h;
}

std::string shapley_csv_header() { return "round,tier,client,psi,variant"; }

std::string ledger_csv_header() { return "round,type,client,amount,tier"; }

std::string personalized_cdf_csv_header() {
  return "rank,client,personalized_accuracy";
}

void write_run_artifacts(const std::string& dir, const RunTrace& trace,
                         const nlohmann::json& summary) {
  std::filesystem::create_directories(dir);
  const auto path = [&](const char* name) {
    return (std::filesystem::path(dir) / name).string();
  };

  {
    std::ofstream out(path("rounds.csv"));
    out << rounds_csv_header() << "\n";
    for (const auto& r : trace.rounds) {
      out << r.round << ',' << r.tier << ',' << r.selected << ','
          << format_double(r.acc_round) << ',' << format_double(r.acc_max) << ','
          << format_double(r.delta_util) << ',' << format_double(r.theta) << ','
          << mt_to_tokens_str(r.payments) << ',' << mt_to_tokens_str(r.reimbursement)
          << ',' << mt_to_tokens_str(r.rewards) << ',' << mt_to_tokens_str(r.carry)
          << ',' << r.model_hash << "\n";
    }
  }
  {
    std::ofstream out(path("selections.csv"));
    out << selections_csv_header() << "\n";
    for (const auto& s : trace.selections) {
      out << s.round << ',' << s.tier << ',' << s.client << ','
          << pick_kind_name(s.provenance) << "\n";
    }
  }
  {
    std::ofstream out(path("clients.csv"));
    out << clients_csv_header(trace.num_tiers) << "\n";
    for (const auto& c : trace.clients) {
      out << c.round << ',' << c.client << ',' << c.ground_truth_tier << ','
          << c.selected_tier << ',' << c.bid_tier << ','
          << (c.has_psi ? format_double(c.psi) : std::string()) << ','
          << mt_to_tokens_str(c.payment) << ',' << mt_to_tokens_str(c.reimbursement)
          << ',' << mt_to_tokens_str(c.reward) << ',' << mt_to_tokens_str(c.balance)
          << ',' << format_double(c.personalized_accuracy);
      for (double u : c.upsilon) out << ',' << format_double(u);
      out << "\n";
    }
  }
  {
    std::ofstream out(path("shapley.csv"));
    out << shapley_csv_header() << "\n";
    for (const auto& s : trace.shapley) {
      out << s.round << ',' << s.tier << ',' << s.client << ','
          << format_double(s.psi) << ','
          << (s.variant == ShapleyVariant::normalized ? "normalized" : "unnormalized")
          << "\n";
    }
  }
  {
    std::ofstream out(path("ledger.csv"));
    out << ledger_csv_header() << "\n";
    for (const auto& e : trace.journal) {
      out << e.round << ',' << entry_type_name(e.type) << ',' << e.client_id << ','
          << mt_to_tokens_str(e.amount) << ',' << e.tier_id << "\n";
    }
  }
  {
    // Final-round personalized accuracies, sorted ascending (CDF order).
    const int last_round = trace_round_count(trace) - 1;
    std::vector<std::pair<double, int>> accs;
    for (const auto& c : trace.clients)
      if (c.round == last_round) accs.push_back({c.personalized_accuracy, c.client});
    std::stable_sort(accs.begin(), accs.end());
    std::ofstream out(path("personalized_cdf.csv"));
    out << personalized_cdf_csv_header() << "\n";
    for (std::size_t i = 0; i < accs.size(); ++i) {
      out << (i + 1) << ',' << accs[i].second << ',' << format_double(accs[i].first)
          << "\n";
    }
  }
  {
    std::ofstream out(path("summary.json"));
    out << summary.dump(2) << "\n";
  }
}

RunTrace load_run_trace(const std::string& dir) {
  const auto path = [&](const char* name) {
    return (std::filesystem::path(dir) / name).string();
  };
  RunTrace trace;

  for (const auto& f : read_csv(path("rounds.csv"))) {
    TierRoundRow r;
    r.round = std::stoi(f.at(0));
    r.tier = std::stoi(f.at(1));
    r.selected = std::stoi(f.at(2));
    r.acc_round = std::stod(f.at(3));
    r.acc_max = std::stod(f.at(4));
    r.delta_util = std::stod(f.at(5));
    r.theta = std::stod(f.at(6));
    r.payments = tokens_str_to_mt(f.at(7));
    r.reimbursement = tokens_str_to_mt(f.at(8));
    r.rewards = tokens_str_to_mt(f.at(9));
    r.carry = tokens_str_to_mt(f.at(10));
    r.model_hash = f.at(11);
    trace.rounds.push_back(std::move(r));
    trace.num_tiers = std::max(trace.num_tiers, r.tier + 1);
  }
  for (const auto& f : read_csv(path("selections.csv"))) {
    SelectionRow s;
    s.round = std::stoi(f.at(0));
    s.tier = std::stoi(f.at(1));
    s.client = std::stoi(f.at(2));
    s.provenance = pick_kind_from_name(f.at(3));
    trace.selections.push_back(s);
  }
  {
    std::string header;
    const auto rows = read_csv(path("clients.csv"), &header);
    const int fixed = 11;
    const auto cols = split_csv_line(header);
    const int tiers = static_cast<int>(cols.size()) - fixed;
    for (const auto& f : rows) {
      ClientRoundRow c;
      c.round = std::stoi(f.at(0));
      c.client = std::stoi(f.at(1));
      c.ground_truth_tier = std::stoi(f.at(2));
      c.selected_tier = std::stoi(f.at(3));
      c.bid_tier = std::stoi(f.at(4));
      c.has_psi = !f.at(5).empty();
      c.psi = c.has_psi ? std::stod(f.at(5)) : 0.0;
      c.payment = tokens_str_to_mt(f.at(6));
      c.reimbursement = tokens_str_to_mt(f.at(7));
      c.reward = tokens_str_to_mt(f.at(8));
      c.balance = tokens_str_to_mt(f.at(9));
      c.personalized_accuracy = std::stod(f.at(10));
      for (int k = 0; k < tiers; ++k) c.upsilon.push_back(std::stod(f.at(fixed + k)));
      trace.clients.push_back(std::move(c));
    }
  }
  for (const auto& f : read_csv(path("shapley.csv"))) {
    ShapleyRow s;
    s.round = std::stoi(f.at(0));
    s.tier = std::stoi(f.at(1));
    s.client = std::stoi(f.at(2));
    s.psi = std::stod(f.at(3));
    s.variant = f.at(4) == "normalized" ? ShapleyVariant::normalized
                                        : ShapleyVariant::unnormalized;
    trace.shapley.push_back(s);
  }
  for (const auto& f : read_csv(path("ledger.csv"))) {
    JournalEntry e;
    e.round = std::stoi(f.at(0));
    e.type = entry_type_from_name(f.at(1));
    e.client_id = std::stoi(f.at(2));
    e.amount = tokens_str_to_mt(f.at(3));
    e.tier_id = std::stoi(f.at(4));
    trace.journal.push_back(e);
  }
  return trace;
}

nlohmann::json load_summary(const std::string& dir) {
  std::ifstream in((std::filesystem::path(dir) / "summary.json").string());
  if (!in) throw std::runtime_error("cannot open summary.json in " + dir);
  return nlohmann::json::parse(in);
}

}  // namespace tierfed
