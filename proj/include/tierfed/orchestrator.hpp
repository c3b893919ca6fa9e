#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tierfed/client.hpp"
#include "tierfed/population_config.hpp"
#include "tierfed/profiler.hpp"
#include "tierfed/scheduler.hpp"
#include "tierfed/synth_data.hpp"
#include "tierfed/token.hpp"
#include "tierfed/trace.hpp"

namespace tierfed {

struct TrainParams {
  int epochs = 2;
  double learning_rate = 0.05;
  int batch_size = 32;

  void validate() const;
};

struct RunConfig {
  int rounds = 10;
  int pretrain_rounds = 0;
  std::uint64_t seed = 0;
  int threads = 1;
  ShapleyVariant shapley_variant = ShapleyVariant::normalized;
  int server_eval_samples = 200;
  double pretrain_response_threshold = 1e18;  // effectively "everyone replies"

  ModelSpec model;
  PopulationConfig population;
  TrainParams training;
  IncentiveParams incentive;
  SelectionConfig selection;
  BidPolicy bids;

  void validate() const;
};

struct RunResult {
  RunTrace trace;
  std::vector<ParamVector> tier_models;
  std::vector<double> personalized_accuracy;  // final round, by client id
  double mean_personalized_accuracy = 0.0;
  bool aborted = false;
  std::string abort_message;
};

// The full round loop: selection, payments, local training, per-tier
// aggregation, contribution and accuracy profiling, reimbursement, rewards,
// then the client-side step (importance weights, one-shot personalization,
// next-round bids). Deterministic for a given config. A module error aborts
// the run cleanly with the partial trace retained.
RunResult run(const RunConfig& config);

struct PretrainResult {
  std::vector<int> assignment;  // tier per client
  std::vector<F1Profile> profiles;
  std::vector<ParamVector> local_models;
};

// Pre-training phase: every client trains a private model from scratch for
// pretrain_rounds rounds; per-class F1 on a server IID split feeds k-means
// tiering. Clients whose simulated response latency exceeds the threshold
// are placed randomly.
PretrainResult run_pretraining(const RunConfig& config,
                               const std::vector<ClientDataset>& population);

enum class BaselineKind { local_only, global_fedavg };

// Comparison baselines. local_only trains each client privately for the
// configured number of rounds; global_fedavg trains one model with every
// client participating each round (the single-tier degenerate protocol).
// Returns per-client test accuracy.
std::vector<double> run_baseline(const RunConfig& config, BaselineKind kind);

}  // namespace tierfed
