#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tierfed/profiler.hpp"

namespace tierfed {

// Token amounts are fixed-point integers (millitokens) so conservation is
// exact: sum of balances plus pools equals the initial mint at all times.
using Millitokens = std::int64_t;

Millitokens to_millitokens(double tokens);
double to_tokens(Millitokens amount);

enum class EntryType { mint, payment, reimbursement, reward, carry, refusal };

const char* entry_type_name(EntryType type);

struct JournalEntry {
  int round = 0;
  EntryType type = EntryType::mint;
  int client_id = -1;  // -1 when the entry is not about one client
  int tier_id = -1;
  Millitokens amount = 0;
};

struct IncentiveParams {
  double bid_amount = 1.0;                // tokens paid per selected round
  double max_reimbursable_fraction = 0.5; // eta in [0,1]
  double accuracy_saturation = 0.2;       // gamma in (0,1]
  double initial_balance = 100.0;         // tokens minted per client

  void validate() const;
};

// Participation counts per (tier, client), the reward tie-breaker.
struct ParticipationRecord {
  std::map<std::pair<int, int>, int> rounds;

  int count(int tier, int client) const {
    auto it = rounds.find({tier, client});
    return it == rounds.end() ? 0 : it->second;
  }
  void bump(int tier, int client) { rounds[{tier, client}] += 1; }
};

struct RewardShare {
  int client_id = 0;
  int rank = 0;  // 1..n ascending by contribution
  Millitokens amount = 0;
};

// Single-owner ledger. Payments feed per-tier pools; reimbursement and
// rewards drain a tier's pool back to that round's providers, so each tier
// round is zero-sum and conservation holds by construction.
class TokenLedger {
 public:
  TokenLedger(int num_clients, Millitokens initial_balance);

  Millitokens balance(int client) const { return balances_.at(client); }
  Millitokens tier_pool(int tier) const;
  Millitokens pool_total() const;
  Millitokens total_minted() const { return minted_; }
  int num_clients() const { return static_cast<int>(balances_.size()); }
  const std::vector<JournalEntry>& journal() const { return journal_; }
  bool conserved() const;

  struct PaymentOutcome {
    std::vector<int> paid;
    std::vector<int> dropped;  // insufficient balance, never overdrawn
  };
  PaymentOutcome collect_payments(int round, int tier,
                                  const std::vector<int>& selected,
                                  Millitokens bid_amount);

  // Equal refund of `amount` to this round's payers; any indivisible
  // remainder stays in the tier pool for the reward phase.
  void reimburse(int round, int tier, const std::vector<int>& payers,
                 Millitokens amount);

  // Pays the tier pool out by rank: client with rank a gets a/beta of the
  // pool, beta = n(n+1)/2, rounded half-even with the residual assigned to
  // the top rank. Ranked providers come in ascending rank order.
  std::vector<RewardShare> pay_rewards(int round, int tier,
                                       const std::vector<int>& ranked_clients);

  void note_carry(int round, int tier);

 private:
  void credit(int client, Millitokens amount);
  std::vector<Millitokens> balances_;
  std::map<int, Millitokens> tier_pools_;
  Millitokens minted_ = 0;
  std::vector<JournalEntry> journal_;
};

struct Reimbursement {
  double delta_util = 0.0;
  double theta = 0.0;
  Millitokens amount = 0;
};

// delta_util = max(0, (acc_round - prior_max) / prior_max), zero when no
// prior max exists; theta = eta * (gamma - min(gamma, delta_util)) / gamma;
// amount = round(tier_pool * theta).
Reimbursement compute_reimbursement(double acc_round, double prior_acc_max,
                                    const IncentiveParams& params,
                                    Millitokens tier_pool);

// Ascending contribution order: lowest psi first, ties broken by fewer
// participations first, then by lower client id. Rank i+1 goes to
// position i of the result.
std::vector<int> rank_providers(const std::vector<std::pair<int, double>>& psi,
                                const ParticipationRecord& participation,
                                int tier);

// Full reward step for one tier: rank this round's providers by the
// Shapley report and pay the tier pool out. Zero providers with tokens in
// the pool carries the pool forward (journaled).
std::vector<RewardShare> distribute_rewards(TokenLedger& ledger, int round,
                                            int tier, const ShapleyReport& report,
                                            const ParticipationRecord& participation);

}  // namespace tierfed
