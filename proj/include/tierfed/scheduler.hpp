#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "tierfed/client.hpp"

namespace tierfed {

struct SelectionConfig {
  int merit_count = 1;   // N_p per tier
  int random_count = 0;  // N_r per tier
  int num_tiers = 1;

  void validate() const;
};

enum class PickKind { initial, merit, random_fill };

const char* pick_kind_name(PickKind kind);

struct SelectionResult {
  std::vector<std::vector<int>> rosters;           // one list per tier, disjoint
  std::vector<std::vector<PickKind>> provenance;   // parallel to rosters
};

// Latest contribution estimate per (tier, client).
using ContributionIndex = std::map<std::pair<int, int>, double>;

// Round 0 partitions the available clients uniformly at random across
// tiers (capped at merit_count + random_count each). Later rounds group
// candidates by their top-ranked bid, sort each group by latest
// contribution in that tier (unscored clients below all scored ones, by
// id), take merit_count, then draw random_count from the clients not yet
// selected anywhere. A tier with no candidates is filled entirely from the
// random draw. `eligible` filters clients the token manager would refuse.
SelectionResult select_clients(int round, const std::vector<PreferenceBids>& bids,
                               const ContributionIndex& contributions,
                               const std::vector<int>& available,
                               const SelectionConfig& config,
                               const std::function<bool(int)>& eligible,
                               std::uint64_t seed);

}  // namespace tierfed
