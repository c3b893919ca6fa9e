#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "tierfed/data.hpp"

namespace tierfed {

enum class PartitionKind { ratio, linear, random_mixture };

// Client population for mixture-classification runs. Each source
// distribution owns a disjoint block of classes_per_distribution labels,
// but block j of every distribution shares one Gaussian feature cluster
// (the upper/lower-case letter situation: same shapes, different labels).
// A model trained on one distribution therefore mispredicts the others,
// which is what makes tier separation measurable.
struct MixtureSpec {
  int num_distributions = 2;  // S
  PartitionKind partition = PartitionKind::ratio;
  int ratio_a = 10;  // ratio partition a:b, a + b == 100
  int ratio_b = 90;
  int num_clients = 100;
  int train_samples_per_client = 200;
  int test_samples_per_client = 100;
  int feature_dim = 6;
  int classes_per_distribution = 2;
  bool inverse_test = false;
  double center_scale = 3.0;
  double cluster_stddev = 1.0;
  std::uint64_t seed = 0;

  int total_classes() const { return num_distributions * classes_per_distribution; }
  void validate() const;
};

// Two-tier Gaussian mean-estimation population: per-tier root means beta1
// and beta2, client means drawn with variance tau_sq, observations with
// variance sigma_sq.
struct GaussianPopulationSpec {
  int tier1_clients = 10;
  int tier2_clients = 10;
  double beta1 = 0.0;
  double beta2 = 0.0;
  double tau_sq = 0.0;
  double sigma_sq = 1.0;
  int samples_per_client = 5;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ClientDataset {
  int client_id = 0;
  LabeledDataset train;
  LabeledDataset test;
  std::vector<double> true_mixture;  // per-distribution train fractions, sum 1
  int ground_truth_tier = 0;         // dominant source distribution
  double true_mean = 0.0;            // gaussian populations only
};

std::vector<ClientDataset> generate_mixture_population(const MixtureSpec& spec);
std::vector<ClientDataset> generate_gaussian_population(const GaussianPopulationSpec& spec);

// Train-side mixture of one client under the spec's partition rule.
std::vector<double> partition_mixture(const MixtureSpec& spec, int client_id);

// Complement mixture used for inverse test sets: (1 - m_s) / (S - 1).
std::vector<double> inverse_mixture(const std::vector<double>& mixture);

// Server-side sampling from declared mixtures (profiler evaluation splits,
// IID pre-training evaluation, report holdouts). Uses the same class
// clusters as the population, seeded independently of client data.
LabeledDataset sample_mixture_dataset(const MixtureSpec& spec,
                                      const std::vector<double>& mixture,
                                      int num_samples, std::uint64_t seed);

// Pure holdout for one source distribution.
LabeledDataset sample_distribution_holdout(const MixtureSpec& spec,
                                           int distribution, int num_samples,
                                           std::uint64_t seed);

// Replayable JSON layout: client_id, mixture, feature/label arrays.
nlohmann::json population_to_json(const std::vector<ClientDataset>& population);
std::vector<ClientDataset> population_from_json(const nlohmann::json& j);

}  // namespace tierfed
