#include "tierfed/token.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tierfed {

Millitokens to_millitokens(double tokens) {
  return static_cast<Millitokens>(std::llround(tokens * 1000.0));
}

double to_tokens(Millitokens amount) { return static_cast<double>(amount) / 1000.0; }

const char* entry_type_name(EntryType type) {
  switch (type) {
    case EntryType::mint: return "mint";
    case EntryType::payment: return "payment";
    case EntryType::reimbursement: return "reimbursement";
    case EntryType::reward: return "reward";
    case EntryType::carry: return "carry";
    case EntryType::refusal: return "refusal";
  }
  return "unknown";
}

void IncentiveParams::validate() const {
  if (bid_amount <= 0.0)
    throw std::invalid_argument("incentive: bid_amount must be > 0");
  if (max_reimbursable_fraction < 0.0 || max_reimbursable_fraction > 1.0)
    throw std::invalid_argument("incentive: max_reimbursable_fraction must be in [0,1]");
  if (accuracy_saturation <= 0.0 || accuracy_saturation > 1.0)
    throw std::invalid_argument("incentive: accuracy_saturation must be in (0,1]");
  if (initial_balance < 0.0)
    throw std::invalid_argument("incentive: initial_balance must be >= 0");
}

TokenLedger::TokenLedger(int num_clients, Millitokens initial_balance) {
  if (num_clients < 1) throw std::invalid_argument("ledger: need at least one client");
  if (initial_balance < 0) throw std::invalid_argument("ledger: negative initial balance");
  balances_.assign(num_clients, initial_balance);
  minted_ = static_cast<Millitokens>(num_clients) * initial_balance;
  for (int c = 0; c < num_clients; ++c)
    journal_.push_back({0, EntryType::mint, c, -1, initial_balance});
}

Millitokens TokenLedger::tier_pool(int tier) const {
  auto it = tier_pools_.find(tier);
  return it == tier_pools_.end() ? 0 : it->second;
}

Millitokens TokenLedger::pool_total() const {
  Millitokens total = 0;
  for (const auto& [tier, amount] : tier_pools_) total += amount;
  return total;
}

bool TokenLedger::conserved() const {
  Millitokens total = pool_total();
  for (Millitokens b : balances_) {
    if (b < 0) return false;
    total += b;
  }
  return total == minted_;
}

void TokenLedger::credit(int client, Millitokens amount) {
  balances_.at(client) += amount;
}

TokenLedger::PaymentOutcome TokenLedger::collect_payments(
    int round, int tier, const std::vector<int>& selected, Millitokens bid_amount) {
  if (bid_amount < 0) throw std::invalid_argument("ledger: negative bid amount");
  PaymentOutcome outcome;
  for (int client : selected) {
    if (balances_.at(client) < bid_amount) {
      outcome.dropped.push_back(client);
      journal_.push_back({round, EntryType::refusal, client, tier, 0});
      continue;
    }
    balances_[client] -= bid_amount;
    tier_pools_[tier] += bid_amount;
    journal_.push_back({round, EntryType::payment, client, tier, bid_amount});
    outcome.paid.push_back(client);
  }
  return outcome;
}

void TokenLedger::reimburse(int round, int tier, const std::vector<int>& payers,
                            Millitokens amount) {
  if (amount <= 0 || payers.empty()) return;
  Millitokens& pool = tier_pools_[tier];
  if (amount > pool) throw std::runtime_error("ledger: reimbursement exceeds tier pool");
  const Millitokens share = amount / static_cast<Millitokens>(payers.size());
  if (share <= 0) return;  // remainder stays for the reward phase
  for (int client : payers) {
    pool -= share;
    credit(client, share);
    journal_.push_back({round, EntryType::reimbursement, client, tier, share});
  }
}

std::vector<RewardShare> TokenLedger::pay_rewards(
    int round, int tier, const std::vector<int>& ranked_clients) {
  std::vector<RewardShare> shares;
  Millitokens& pool = tier_pools_[tier];
  if (ranked_clients.empty()) {
    if (pool > 0) note_carry(round, tier);
    return shares;
  }
  const int n = static_cast<int>(ranked_clients.size());
  const double beta = n * (n + 1) / 2.0;
  const Millitokens total = pool;
  Millitokens distributed = 0;
  shares.resize(n);
  for (int i = 0; i < n; ++i) {
    const int rank = i + 1;
    Millitokens amount;
    if (i == n - 1) {
      amount = total - distributed;  // residual to the top rank
    } else {
      const double exact = static_cast<double>(total) * rank / beta;
      amount = static_cast<Millitokens>(std::nearbyint(exact));
    }
    distributed += amount;
    pool -= amount;
    credit(ranked_clients[i], amount);
    journal_.push_back({round, EntryType::reward, ranked_clients[i], tier, amount});
    shares[i] = {ranked_clients[i], rank, amount};
  }
  return shares;
}

void TokenLedger::note_carry(int round, int tier) {
  journal_.push_back({round, EntryType::carry, -1, tier, tier_pool(tier)});
}

Reimbursement compute_reimbursement(double acc_round, double prior_acc_max,
                                    const IncentiveParams& params,
                                    Millitokens tier_pool) {
  params.validate();
  Reimbursement r;
  r.delta_util = prior_acc_max > 0.0
                     ? std::max(0.0, (acc_round - prior_acc_max) / prior_acc_max)
                     : 0.0;
  const double gamma = params.accuracy_saturation;
  r.theta = params.max_reimbursable_fraction *
            (gamma - std::min(gamma, r.delta_util)) / gamma;
  r.amount = static_cast<Millitokens>(
      std::nearbyint(static_cast<double>(tier_pool) * r.theta));
  return r;
}

std::vector<int> rank_providers(const std::vector<std::pair<int, double>>& psi,
                                const ParticipationRecord& participation,
                                int tier) {
  std::vector<std::pair<int, double>> order = psi;
  std::stable_sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second < b.second;
    const int pa = participation.count(tier, a.first);
    const int pb = participation.count(tier, b.first);
    if (pa != pb) return pa < pb;
    return a.first < b.first;
  });
  std::vector<int> ranked;
  ranked.reserve(order.size());
  for (const auto& [client, value] : order) ranked.push_back(client);
  return ranked;
}

std::vector<RewardShare> distribute_rewards(TokenLedger& ledger, int round,
                                            int tier, const ShapleyReport& report,
                                            const ParticipationRecord& participation) {
  const auto ranked = rank_providers(report.values, participation, tier);
  return ledger.pay_rewards(round, tier, ranked);
}

}  // namespace tierfed
