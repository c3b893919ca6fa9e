#include "tierfed/scheduler.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

#include "tierfed/rng.hpp"

namespace tierfed {

void SelectionConfig::validate() const {
  if (merit_count < 0 || random_count < 0)
    throw std::invalid_argument("selection: counts must be >= 0");
  if (merit_count + random_count < 1)
    throw std::invalid_argument("selection: need at least one slot per tier");
  if (num_tiers < 1)
    throw std::invalid_argument("selection: num_tiers must be >= 1");
}

const char* pick_kind_name(PickKind kind) {
  switch (kind) {
    case PickKind::initial: return "initial";
    case PickKind::merit: return "merit";
    case PickKind::random_fill: return "random";
  }
  return "unknown";
}

SelectionResult select_clients(int round, const std::vector<PreferenceBids>& bids,
                               const ContributionIndex& contributions,
                               const std::vector<int>& available,
                               const SelectionConfig& config,
                               const std::function<bool(int)>& eligible,
                               std::uint64_t seed) {
  config.validate();
  if (available.empty())
    throw std::invalid_argument("selection: no available clients");

  const int quota = config.merit_count + config.random_count;
  SelectionResult result;
  result.rosters.assign(config.num_tiers, {});
  result.provenance.assign(config.num_tiers, {});

  std::vector<int> pool;
  for (int c : available)
    if (!eligible || eligible(c)) pool.push_back(c);
  std::sort(pool.begin(), pool.end());

  auto rng = make_rng(derive_seed(seed, "select", static_cast<std::uint64_t>(round)));

  if (round == 0) {
    // Uniform random partition; roster sizes differ by at most one.
    fisher_yates(pool, rng);
    for (std::size_t i = 0; i < pool.size(); ++i) {
      const int tier = static_cast<int>(i % config.num_tiers);
      if (static_cast<int>(result.rosters[tier].size()) >= quota) continue;
      result.rosters[tier].push_back(pool[i]);
      result.provenance[tier].push_back(PickKind::initial);
    }
    for (auto& roster : result.rosters) std::sort(roster.begin(), roster.end());
    return result;
  }

  std::unordered_set<int> taken;

  // Candidates grouped by their top-ranked bid.
  std::vector<std::vector<int>> candidates(config.num_tiers);
  {
    std::unordered_set<int> in_pool(pool.begin(), pool.end());
    for (const auto& bid : bids) {
      if (bid.tiers.empty()) continue;
      if (!in_pool.count(bid.client_id)) continue;
      const int top = bid.tiers.front();
      if (top < 0 || top >= config.num_tiers)
        throw std::invalid_argument("selection: bid for unknown tier");
      candidates[top].push_back(bid.client_id);
    }
  }

  std::vector<bool> needs_fill(config.num_tiers, false);
  for (int tier = 0; tier < config.num_tiers; ++tier) {
    auto& group = candidates[tier];
    std::sort(group.begin(), group.end());
    std::stable_sort(group.begin(), group.end(), [&](int a, int b) {
      const auto ia = contributions.find({tier, a});
      const auto ib = contributions.find({tier, b});
      const bool sa = ia != contributions.end();
      const bool sb = ib != contributions.end();
      if (sa != sb) return sa;  // scored clients above unscored
      if (sa && ia->second != ib->second) return ia->second > ib->second;
      return a < b;
    });
    if (group.empty()) {
      needs_fill[tier] = true;
      continue;
    }
    for (int c : group) {
      if (static_cast<int>(result.rosters[tier].size()) >= config.merit_count) break;
      result.rosters[tier].push_back(c);
      result.provenance[tier].push_back(PickKind::merit);
      taken.insert(c);
    }
  }

  // Random exploration slots, drawn from everyone not yet selected.
  std::vector<int> remaining;
  for (int c : pool)
    if (!taken.count(c)) remaining.push_back(c);
  fisher_yates(remaining, rng);
  std::size_t next = 0;
  for (int tier = 0; tier < config.num_tiers; ++tier) {
    const int want = needs_fill[tier] ? quota : config.random_count;
    for (int r = 0; r < want && next < remaining.size(); ++r) {
      result.rosters[tier].push_back(remaining[next]);
      result.provenance[tier].push_back(PickKind::random_fill);
      taken.insert(remaining[next]);
      ++next;
    }
  }
  return result;
}

}  // namespace tierfed
