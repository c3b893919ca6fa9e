#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tierfed/trace.hpp"

namespace tierfed {

// Verdict of one cross-cutting property, a pure function of trace rows so
// it can be recomputed offline from the run directory.
struct PropertyVerdict {
  std::string name;
  std::string scope;
  double statistic = 0.0;
  double threshold = 0.0;
  bool pass = false;
  bool conclusive = false;

  nlohmann::json to_json() const;
};

// Individual rationality: clients whose contribution ranks in the top half
// of their tier in at least 60% of their participations must not lose
// tokens on average (reward + reimbursement - payment per participated
// round). The statistic is the worst such client's mean net, in tokens.
PropertyVerdict check_individual_rationality(const RunTrace& trace,
                                             int min_rounds = 30);

// Group rationality: across (client, tier) pairs of clients observed in at
// least two tiers, the Spearman correlation between mean bid-side
// importance weight and mean net reward must reach 0.5.
PropertyVerdict check_group_rationality(const RunTrace& trace, int min_pairs = 10);

// Tier purity over the final ten rounds: mean over (round, tier) cells of
// the dominant ground-truth share among that round's providers.
PropertyVerdict check_tier_purity(const RunTrace& trace, double threshold = 0.9);

std::vector<PropertyVerdict> check_all_properties(const RunTrace& trace);

}  // namespace tierfed
