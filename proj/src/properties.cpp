#include "tierfed/properties.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "tierfed/stats.hpp"

namespace tierfed {

namespace {

bool participated(const ClientRoundRow& row) {
  return row.selected_tier >= 0 && row.payment > 0;
}

}  // namespace

nlohmann::json PropertyVerdict::to_json() const {
  return nlohmann::json{{"name", name},       {"scope", scope},
                        {"statistic", statistic}, {"threshold", threshold},
                        {"pass", pass},       {"conclusive", conclusive}};
}

PropertyVerdict check_individual_rationality(const RunTrace& trace, int min_rounds) {
  PropertyVerdict verdict;
  verdict.name = "individual_rationality";
  verdict.threshold = 0.0;

  const int rounds = trace_round_count(trace);
  if (rounds < min_rounds) {
    verdict.scope = "rounds=" + std::to_string(rounds) + " (needs " +
                    std::to_string(min_rounds) + ")";
    return verdict;  // inconclusive
  }

  // Contribution rank position within each (round, tier) provider group.
  std::map<std::pair<int, int>, std::vector<const ClientRoundRow*>> groups;
  for (const auto& row : trace.clients)
    if (participated(row) && row.has_psi)
      groups[{row.round, row.selected_tier}].push_back(&row);

  struct ClientStats {
    int participations = 0;
    int top_half = 0;
    Millitokens net = 0;
  };
  std::map<int, ClientStats> stats;
  for (auto& [key, rows] : groups) {
    std::stable_sort(rows.begin(), rows.end(),
                     [](const ClientRoundRow* a, const ClientRoundRow* b) {
                       if (a->psi != b->psi) return a->psi < b->psi;
                       return a->client < b->client;
                     });
    const int n = static_cast<int>(rows.size());
    for (int i = 0; i < n; ++i) {
      auto& s = stats[rows[i]->client];
      s.participations += 1;
      if (i + 1 > n / 2.0) s.top_half += 1;
      s.net += rows[i]->reward + rows[i]->reimbursement - rows[i]->payment;
    }
  }

  int cohort = 0;
  double worst = 0.0;
  bool first = true;
  for (const auto& [client, s] : stats) {
    if (s.participations < 1) continue;
    if (static_cast<double>(s.top_half) / s.participations < 0.6) continue;
    ++cohort;
    const double mean_net = to_tokens(s.net) / s.participations;
    if (first || mean_net < worst) {
      worst = mean_net;
      first = false;
    }
  }

  verdict.scope = "rounds=" + std::to_string(rounds) +
                  " cohort=" + std::to_string(cohort);
  if (cohort == 0) return verdict;  // inconclusive
  verdict.conclusive = true;
  verdict.statistic = worst;
  verdict.pass = worst >= 0.0;
  return verdict;
}

PropertyVerdict check_group_rationality(const RunTrace& trace, int min_pairs) {
  PropertyVerdict verdict;
  verdict.name = "group_rationality";
  verdict.threshold = 0.5;

  struct PairStats {
    double upsilon_sum = 0.0;
    Millitokens net = 0;
    int rounds = 0;
  };
  std::map<std::pair<int, int>, PairStats> pairs;  // (client, tier)
  for (const auto& row : trace.clients) {
    if (!participated(row)) continue;
    auto& p = pairs[{row.client, row.selected_tier}];
    p.upsilon_sum += row.upsilon.at(row.selected_tier);
    p.net += row.reward + row.reimbursement - row.payment;
    p.rounds += 1;
  }

  std::map<int, int> tiers_per_client;
  for (const auto& [key, p] : pairs) tiers_per_client[key.first] += 1;

  std::vector<double> similarity;
  std::vector<double> reward;
  int multi_tier_clients = 0;
  for (const auto& [client, count] : tiers_per_client)
    if (count >= 2) ++multi_tier_clients;
  for (const auto& [key, p] : pairs) {
    if (tiers_per_client[key.first] < 2) continue;
    similarity.push_back(p.upsilon_sum / p.rounds);
    reward.push_back(to_tokens(p.net) / p.rounds);
  }

  verdict.scope = "multi_tier_clients=" + std::to_string(multi_tier_clients) +
                  " observations=" + std::to_string(similarity.size());
  if (multi_tier_clients == 0 ||
      static_cast<int>(similarity.size()) < min_pairs)
    return verdict;  // inconclusive
  verdict.conclusive = true;
  verdict.statistic = spearman(similarity, reward);
  verdict.pass = verdict.statistic >= verdict.threshold;
  return verdict;
}

PropertyVerdict check_tier_purity(const RunTrace& trace, double threshold) {
  PropertyVerdict verdict;
  verdict.name = "tier_purity";
  verdict.threshold = threshold;

  const int rounds = trace_round_count(trace);
  const int window_start = std::max(0, rounds - 10);
  std::map<std::pair<int, int>, std::map<int, int>> membership;  // cell -> label counts
  for (const auto& row : trace.clients) {
    if (row.round < window_start || row.selected_tier < 0) continue;
    membership[{row.round, row.selected_tier}][row.ground_truth_tier] += 1;
  }
  if (membership.empty()) {
    verdict.scope = "rounds=" + std::to_string(rounds) + " cells=0";
    return verdict;  // inconclusive
  }
  double total = 0.0;
  for (const auto& [cell, counts] : membership) {
    int n = 0, best = 0;
    for (const auto& [label, count] : counts) {
      n += count;
      best = std::max(best, count);
    }
    total += static_cast<double>(best) / n;
  }
  verdict.statistic = total / static_cast<double>(membership.size());
  verdict.scope = "rounds=[" + std::to_string(window_start) + "," +
                  std::to_string(rounds - 1) + "] cells=" +
                  std::to_string(membership.size());
  verdict.conclusive = true;
  verdict.pass = verdict.statistic >= threshold;
  return verdict;
}

std::vector<PropertyVerdict> check_all_properties(const RunTrace& trace) {
  return {check_individual_rationality(trace), check_group_rationality(trace),
          check_tier_purity(trace)};
}

}  // namespace tierfed
