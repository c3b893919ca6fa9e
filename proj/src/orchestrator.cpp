#include "tierfed/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "tierfed/rng.hpp"

namespace tierfed {

namespace {

// Deterministic parallel map: slot i always receives fn(i), whatever the
// execution order.
void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> workers;
  workers.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    workers.emplace_back([&, t]() {
      for (int i = t; i < n; i += threads) fn(i);
    });
  }
  for (auto& w : workers) w.join();
}

struct RewardHistory {
  std::vector<Millitokens> net_sum;  // per tier
  std::vector<int> rounds;

  explicit RewardHistory(int tiers) : net_sum(tiers, 0), rounds(tiers, 0) {}
  std::vector<double> mean_tokens() const {
    std::vector<double> out(net_sum.size(), 0.0);
    for (std::size_t k = 0; k < net_sum.size(); ++k)
      if (rounds[k] > 0) out[k] = to_tokens(net_sum[k]) / rounds[k];
    return out;
  }
};

// Server-held evaluation split for a tier round, sampled from declared
// training distributions. The tier's identity is taken from its bidders
// (the clients asking to train there), not from the round's roster: random
// exploration picks would otherwise pull the evaluation toward their own
// data and the contribution estimate would pay dissimilar updates most.
// Private test data never feeds any server-side module.
LabeledDataset server_eval_split(const RunConfig& config,
                                 const std::vector<ClientDataset>& population,
                                 const std::vector<int>& roster,
                                 const std::vector<int>& candidates, int round,
                                 int tier) {
  const std::uint64_t seed =
      derive_seed(config.seed, "server-eval", static_cast<std::uint64_t>(round),
                  static_cast<std::uint64_t>(tier));
  if (config.population.type == PopulationType::mixture) {
    const auto& spec = config.population.mixture;
    const std::vector<int>& basis = candidates.empty() ? roster : candidates;
    std::vector<double> mix(spec.num_distributions, 0.0);
    for (int c : basis)
      for (int s = 0; s < spec.num_distributions; ++s)
        mix[s] += population[c].true_mixture[s];
    for (double& v : mix) v /= static_cast<double>(basis.size());
    if (!candidates.empty()) {
      // Sharpen to the dominant declared distribution once the tier has an
      // identity of its own.
      const int dominant = static_cast<int>(
          std::max_element(mix.begin(), mix.end()) - mix.begin());
      std::fill(mix.begin(), mix.end(), 0.0);
      mix[dominant] = 1.0;
    }
    return sample_mixture_dataset(spec, mix, config.server_eval_samples, seed);
  }
  // Gaussian population: draw from per-member normals fitted to the
  // declared (training) observations.
  auto rng = make_rng(seed);
  LabeledDataset eval;
  for (int t = 0; t < config.server_eval_samples; ++t) {
    const int member = roster[rng() % roster.size()];
    const auto& z = population[member].train.targets;
    const double mean = std::accumulate(z.begin(), z.end(), 0.0) / z.size();
    double var = 0.0;
    for (double v : z) var += (v - mean) * (v - mean);
    var = z.size() > 1 ? var / (z.size() - 1) : 1.0;
    std::normal_distribution<double> fitted(mean, std::sqrt(std::max(var, 1e-12)));
    eval.append_target_point(fitted(rng));
  }
  return eval;
}

}  // namespace

void TrainParams::validate() const {
  if (epochs < 0) throw std::invalid_argument("training: epochs must be >= 0");
  if (learning_rate <= 0.0)
    throw std::invalid_argument("training: learning_rate must be > 0");
  if (batch_size < 1) throw std::invalid_argument("training: batch_size must be >= 1");
}

void RunConfig::validate() const {
  if (rounds < 1) throw std::invalid_argument("run: rounds must be >= 1");
  if (pretrain_rounds < 0)
    throw std::invalid_argument("run: pretrain_rounds must be >= 0");
  if (pretrain_rounds >= rounds && pretrain_rounds > 0)
    throw std::invalid_argument("run: pretrain_rounds must be < rounds");
  if (threads < 1) throw std::invalid_argument("run: threads must be >= 1");
  if (server_eval_samples < 1)
    throw std::invalid_argument("run: server_eval_samples must be >= 1");
  model.validate();
  population.validate();
  training.validate();
  incentive.validate();
  selection.validate();
  if (bids.threshold < 0.0 || bids.threshold > 1.0)
    throw std::invalid_argument("bids: threshold must be in [0,1]");

  if (population.type == PopulationType::mixture) {
    if (model.kind != ModelKind::softmax)
      throw std::invalid_argument("model: mixture populations train the softmax model");
    if (model.feature_dim != population.mixture.feature_dim)
      throw std::invalid_argument("model: feature_dim must match population.feature_dim");
    if (model.num_classes != population.mixture.total_classes())
      throw std::invalid_argument(
          "model: num_classes must equal population distributions x classes");
  } else {
    if (model.kind != ModelKind::scalar_mean)
      throw std::invalid_argument("model: gaussian populations train the scalar_mean model");
    if (pretrain_rounds > 0)
      throw std::invalid_argument(
          "run: pretraining needs per-class F1 scores, use a mixture population");
  }
}

PretrainResult run_pretraining(const RunConfig& config,
                               const std::vector<ClientDataset>& population) {
  if (config.pretrain_rounds < 1)
    throw std::invalid_argument("pretraining: pretrain_rounds must be >= 1");
  const int n = static_cast<int>(population.size());

  PretrainResult result;
  result.local_models.assign(n, zeros(config.model));
  parallel_for(n, config.threads, [&](int c) {
    ParamVector params = zeros(config.model);
    for (int r = 0; r < config.pretrain_rounds; ++r) {
      params = train_local(config.model, std::move(params), population[c].train,
                           config.training.epochs, config.training.learning_rate,
                           config.training.batch_size,
                           derive_seed(config.seed, "pretrain", r, c));
    }
    result.local_models[c] = std::move(params);
  });

  // Server IID evaluation split across all distributions.
  const auto& spec = config.population.mixture;
  std::vector<double> uniform(spec.num_distributions,
                              1.0 / spec.num_distributions);
  const LabeledDataset iid_eval = sample_mixture_dataset(
      spec, uniform, config.server_eval_samples,
      derive_seed(config.seed, "pretrain-eval"));

  result.profiles.resize(n);
  for (int c = 0; c < n; ++c) {
    auto rng = make_rng(derive_seed(config.seed, "latency", c));
    std::exponential_distribution<double> latency(1.0);
    F1Profile profile;
    profile.client_id = c;
    profile.responded = latency(rng) <= config.pretrain_response_threshold;
    profile.per_class_f1 =
        per_class_f1(config.model, result.local_models[c], iid_eval);
    result.profiles[c] = std::move(profile);
  }
  result.assignment = pretraining_tiering(result.profiles, config.selection.num_tiers,
                                          derive_seed(config.seed, "tiering"));
  return result;
}

RunResult run(const RunConfig& config) {
  config.validate();
  const auto population = config.population.generate();
  const int n = static_cast<int>(population.size());
  const int k_tiers = config.selection.num_tiers;
  const Millitokens bid_mt = to_millitokens(config.incentive.bid_amount);

  RunResult result;
  result.trace.num_tiers = k_tiers;
  result.tier_models.assign(k_tiers, zeros(config.model));
  result.personalized_accuracy.assign(n, 0.0);

  TokenLedger ledger(n, to_millitokens(config.incentive.initial_balance));
  ParticipationRecord participation;
  ContributionIndex contributions;
  std::vector<double> prior_acc_max(k_tiers, 0.0);
  std::vector<PreferenceBids> bids;
  std::vector<RewardHistory> history(n, RewardHistory(k_tiers));

  PretrainResult pretrain;
  const int first_tier_round = config.pretrain_rounds;
  if (config.pretrain_rounds > 0) pretrain = run_pretraining(config, population);

  std::vector<int> available(n);
  std::iota(available.begin(), available.end(), 0);

  for (int round = 0; round < config.rounds; ++round) {
    try {
      if (round < first_tier_round) {
        // Pre-training round: clients only train privately; no tiers yet.
        for (int c = 0; c < n; ++c) {
          ClientRoundRow row;
          row.round = round;
          row.client = c;
          row.ground_truth_tier = population[c].ground_truth_tier;
          row.balance = ledger.balance(c);
          row.personalized_accuracy =
              round + 1 == first_tier_round
                  ? accuracy(config.model, pretrain.local_models[c], population[c].test)
                  : 0.0;
          row.upsilon.assign(k_tiers, 0.0);
          result.trace.clients.push_back(std::move(row));
        }
        continue;
      }

      // 1. Selection.
      SelectionResult selection;
      const auto affordable = [&](int c) { return ledger.balance(c) >= bid_mt; };
      if (round == first_tier_round && config.pretrain_rounds > 0) {
        // Initial tiers come from the pre-training profiles.
        selection.rosters.assign(k_tiers, {});
        selection.provenance.assign(k_tiers, {});
        const int quota = config.selection.merit_count + config.selection.random_count;
        for (int c = 0; c < n; ++c) {
          const int tier = pretrain.assignment[c];
          if (!affordable(c)) continue;
          if (static_cast<int>(selection.rosters[tier].size()) >= quota) continue;
          selection.rosters[tier].push_back(c);
          selection.provenance[tier].push_back(PickKind::initial);
        }
      } else {
        selection = select_clients(round, bids, contributions, available,
                                   config.selection, affordable, config.seed);
      }

      // 2. Payments (consumer side of every selected client).
      std::vector<std::vector<int>> payers(k_tiers);
      std::vector<Millitokens> payments(k_tiers, 0);
      for (int k = 0; k < k_tiers; ++k) {
        auto outcome = ledger.collect_payments(round, k, selection.rosters[k], bid_mt);
        if (!outcome.dropped.empty()) {
          // Selection is filtered on affordability, so drops mean a logic
          // error upstream; keep the roster consistent anyway.
          std::vector<int> kept;
          std::vector<PickKind> kept_prov;
          for (std::size_t i = 0; i < selection.rosters[k].size(); ++i) {
            const int c = selection.rosters[k][i];
            if (std::find(outcome.dropped.begin(), outcome.dropped.end(), c) ==
                outcome.dropped.end()) {
              kept.push_back(c);
              kept_prov.push_back(selection.provenance[k][i]);
            }
          }
          selection.rosters[k] = std::move(kept);
          selection.provenance[k] = std::move(kept_prov);
        }
        payers[k] = outcome.paid;
        payments[k] = static_cast<Millitokens>(outcome.paid.size()) * bid_mt;
        for (std::size_t i = 0; i < selection.rosters[k].size(); ++i) {
          result.trace.selections.push_back(
              {round, k, selection.rosters[k][i], selection.provenance[k][i]});
        }
      }

      // 3+4. Local training on the tier model, then per-tier aggregation.
      std::vector<std::vector<ClientUpdate>> updates(k_tiers);
      for (int k = 0; k < k_tiers; ++k) {
        std::vector<int> roster = selection.rosters[k];
        std::sort(roster.begin(), roster.end());
        updates[k].resize(roster.size());
        parallel_for(static_cast<int>(roster.size()), config.threads, [&](int i) {
          const int c = roster[i];
          ClientUpdate u;
          u.client_id = c;
          u.params = train_local(config.model, result.tier_models[k],
                                 population[c].train, config.training.epochs,
                                 config.training.learning_rate,
                                 config.training.batch_size,
                                 derive_seed(config.seed, "train", round, c));
          updates[k][i] = std::move(u);
        });
        double total_samples = 0.0;
        for (const auto& u : updates[k])
          total_samples += static_cast<double>(population[u.client_id].train.size());
        for (auto& u : updates[k])
          u.weight = static_cast<double>(population[u.client_id].train.size()) /
                     total_samples;
        if (!updates[k].empty()) {
          std::vector<std::pair<ParamVector, double>> weighted;
          weighted.reserve(updates[k].size());
          for (const auto& u : updates[k]) weighted.push_back({u.params, u.weight});
          result.tier_models[k] = fedavg(weighted);
        }
      }

      // 5. Profiling: tier accuracy and contribution estimates.
      std::vector<Millitokens> reimbursed(k_tiers, 0);
      std::vector<Millitokens> rewarded(k_tiers, 0);
      std::vector<std::map<int, Millitokens>> client_reward(k_tiers);
      std::vector<std::map<int, Millitokens>> client_reimb(k_tiers);
      std::vector<ShapleyReport> reports(k_tiers);
      for (int k = 0; k < k_tiers; ++k) {
        TierRoundRow row;
        row.round = round;
        row.tier = k;
        row.selected = static_cast<int>(selection.rosters[k].size());
        row.payments = payments[k];
        if (!selection.rosters[k].empty()) {
          std::vector<double> member_acc;
          member_acc.reserve(selection.rosters[k].size());
          for (int c : selection.rosters[k])
            member_acc.push_back(
                accuracy(config.model, result.tier_models[k], population[c].train));
          const auto record =
              record_tier_accuracy(k, round, member_acc, prior_acc_max[k]);
          std::vector<int> candidates;
          for (const auto& bid : bids)
            if (!bid.tiers.empty() && bid.tiers.front() == k)
              candidates.push_back(bid.client_id);
          const auto eval = server_eval_split(config, population,
                                              selection.rosters[k], candidates,
                                              round, k);
          reports[k] = estimate_shapley(result.tier_models[k], updates[k], eval,
                                        config.model, config.shapley_variant,
                                        round, k);
          for (const auto& [client, psi] : reports[k].values) {
            contributions[{k, client}] = psi;
            result.trace.shapley.push_back({round, k, client, psi,
                                            config.shapley_variant});
          }

          // 6. Reimbursement then rank-based rewards.
          const auto reimb = compute_reimbursement(record.acc_round, prior_acc_max[k],
                                                   config.incentive, ledger.tier_pool(k));
          ledger.reimburse(round, k, payers[k], reimb.amount);
          if (!payers[k].empty() && reimb.amount > 0) {
            const Millitokens share =
                reimb.amount / static_cast<Millitokens>(payers[k].size());
            for (int c : payers[k]) client_reimb[k][c] = share;
            reimbursed[k] = share * static_cast<Millitokens>(payers[k].size());
          }
          const auto shares = distribute_rewards(ledger, round, k, reports[k],
                                                 participation);
          for (const auto& s : shares) {
            client_reward[k][s.client_id] = s.amount;
            rewarded[k] += s.amount;
          }
          for (int c : selection.rosters[k]) participation.bump(k, c);

          prior_acc_max[k] = record.acc_max;
          row.acc_round = record.acc_round;
          row.acc_max = record.acc_max;
          row.delta_util = reimb.delta_util;
          row.theta = reimb.theta;
          row.reimbursement = reimbursed[k];
          row.rewards = rewarded[k];
        } else {
          row.acc_max = prior_acc_max[k];
          if (ledger.tier_pool(k) > 0) ledger.note_carry(round, k);
        }
        row.carry = ledger.tier_pool(k);
        row.model_hash = param_hash(result.tier_models[k]);
        result.trace.rounds.push_back(std::move(row));
      }

      if (!ledger.conserved())
        throw std::runtime_error("token conservation violated");

      // Net outcome per provider feeds the bid preference blending.
      for (int k = 0; k < k_tiers; ++k) {
        for (int c : payers[k]) {
          Millitokens net = -bid_mt;
          if (auto it = client_reward[k].find(c); it != client_reward[k].end())
            net += it->second;
          if (auto it = client_reimb[k].find(c); it != client_reimb[k].end())
            net += it->second;
          history[c].net_sum[k] += net;
          history[c].rounds[k] += 1;
        }
      }

      // 7. Client step: importance weights, one-shot personalization on the
      // private goal split, next-round bids from the training split.
      std::vector<ClientRoundRow> rows(n);
      std::vector<PreferenceBids> next_bids(n);
      parallel_for(n, config.threads, [&](int c) {
        const auto upsilon_bid = compute_importance_weights(
            population[c].train, result.tier_models, config.model);
        const auto upsilon_goal = compute_importance_weights(
            population[c].test, result.tier_models, config.model);
        double personalized_acc;
        try {
          const auto personalized = build_personalized_model(
              c, upsilon_goal, result.tier_models, config.bids.threshold);
          personalized_acc =
              accuracy(config.model, personalized.params, population[c].test);
        } catch (const std::runtime_error&) {
          // No informative tier yet; fall back to the uniform mixture.
          std::vector<std::pair<ParamVector, double>> equal;
          for (const auto& m : result.tier_models) equal.push_back({m, 1.0});
          personalized_acc =
              accuracy(config.model, fedavg(equal), population[c].test);
        }
        auto bid_rng = make_rng(derive_seed(config.seed, "bids", round, c));
        next_bids[c] = build_preference_bids(c, upsilon_bid, config.bids,
                                             history[c].mean_tokens(),
                                             config.incentive.bid_amount, bid_rng);

        ClientRoundRow row;
        row.round = round;
        row.client = c;
        row.ground_truth_tier = population[c].ground_truth_tier;
        row.upsilon = upsilon_bid.per_tier;
        row.personalized_accuracy = personalized_acc;
        row.bid_tier = next_bids[c].tiers.empty() ? -1 : next_bids[c].tiers.front();
        rows[c] = std::move(row);
      });
      for (int k = 0; k < k_tiers; ++k) {
        for (int c : selection.rosters[k]) rows[c].selected_tier = k;
        for (int c : payers[k]) rows[c].payment = bid_mt;
        for (const auto& [c, amount] : client_reward[k]) rows[c].reward = amount;
        for (const auto& [c, amount] : client_reimb[k]) rows[c].reimbursement = amount;
        for (const auto& [c, psi] : reports[k].values) {
          rows[c].has_psi = true;
          rows[c].psi = psi;
        }
      }
      for (int c = 0; c < n; ++c) {
        rows[c].balance = ledger.balance(c);
        result.personalized_accuracy[c] = rows[c].personalized_accuracy;
        result.trace.clients.push_back(std::move(rows[c]));
      }
      bids = std::move(next_bids);
    } catch (const std::exception& e) {
      result.aborted = true;
      result.abort_message =
          "round " + std::to_string(round) + " aborted: " + e.what();
      break;
    }
  }

  result.trace.journal = ledger.journal();
  result.mean_personalized_accuracy =
      std::accumulate(result.personalized_accuracy.begin(),
                      result.personalized_accuracy.end(), 0.0) /
      std::max<std::size_t>(1, result.personalized_accuracy.size());
  return result;
}

std::vector<double> run_baseline(const RunConfig& config, BaselineKind kind) {
  config.validate();
  const auto population = config.population.generate();
  const int n = static_cast<int>(population.size());
  std::vector<double> acc(n, 0.0);

  if (kind == BaselineKind::local_only) {
    parallel_for(n, config.threads, [&](int c) {
      ParamVector params = zeros(config.model);
      for (int round = 0; round < config.rounds; ++round) {
        params = train_local(config.model, std::move(params), population[c].train,
                             config.training.epochs, config.training.learning_rate,
                             config.training.batch_size,
                             derive_seed(config.seed, "baseline-local", round, c));
      }
      acc[c] = accuracy(config.model, params, population[c].test);
    });
    return acc;
  }

  // Single global model, every client participates each round. Training
  // seeds match the main loop so a one-tier full-participation run reduces
  // to exactly this baseline.
  ParamVector global = zeros(config.model);
  double total_samples = 0.0;
  for (const auto& c : population)
    total_samples += static_cast<double>(c.train.size());
  for (int round = 0; round < config.rounds; ++round) {
    std::vector<std::pair<ParamVector, double>> weighted(n);
    parallel_for(n, config.threads, [&](int c) {
      weighted[c] = {train_local(config.model, global, population[c].train,
                                 config.training.epochs, config.training.learning_rate,
                                 config.training.batch_size,
                                 derive_seed(config.seed, "train", round, c)),
                     static_cast<double>(population[c].train.size()) / total_samples};
    });
    global = fedavg(weighted);
  }
  for (int c = 0; c < n; ++c)
    acc[c] = accuracy(config.model, global, population[c].test);
  return acc;
}

}  // namespace tierfed
