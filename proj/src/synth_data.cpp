#include "tierfed/synth_data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "tierfed/rng.hpp"

namespace tierfed {

namespace {

// One Gaussian feature cluster per class block, shared across distributions.
std::vector<std::vector<double>> class_centers(const MixtureSpec& spec) {
  auto rng = make_rng(derive_seed(spec.seed, "population.centers"));
  std::normal_distribution<double> normal(0.0, spec.center_scale);
  std::vector<std::vector<double>> centers;
  const double min_gap = 3.0 * spec.cluster_stddev;
  while (static_cast<int>(centers.size()) < spec.classes_per_distribution) {
    std::vector<double> c(spec.feature_dim);
    for (double& v : c) v = normal(rng);
    bool ok = true;
    for (const auto& prev : centers) {
      double d2 = 0.0;
      for (int j = 0; j < spec.feature_dim; ++j)
        d2 += (c[j] - prev[j]) * (c[j] - prev[j]);
      if (d2 < min_gap * min_gap) {
        ok = false;
        break;
      }
    }
    if (ok) centers.push_back(std::move(c));
  }
  return centers;
}

// Largest-remainder integer split of n across the mixture.
std::vector<int> mixture_counts(const std::vector<double>& mixture, int n) {
  const int s_count = static_cast<int>(mixture.size());
  std::vector<int> counts(s_count);
  std::vector<std::pair<double, int>> fractional(s_count);
  int assigned = 0;
  for (int s = 0; s < s_count; ++s) {
    double exact = mixture[s] * n;
    counts[s] = static_cast<int>(std::floor(exact));
    assigned += counts[s];
    fractional[s] = {exact - counts[s], s};
  }
  std::stable_sort(fractional.begin(), fractional.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (int r = 0; r < n - assigned; ++r) counts[fractional[r].second] += 1;
  return counts;
}

LabeledDataset draw_mixture(const MixtureSpec& spec,
                            const std::vector<std::vector<double>>& centers,
                            const std::vector<double>& mixture, int n,
                            std::mt19937_64& rng) {
  LabeledDataset out;
  out.feature_dim = spec.feature_dim;
  std::normal_distribution<double> noise(0.0, spec.cluster_stddev);
  const auto counts = mixture_counts(mixture, n);
  std::vector<double> x(spec.feature_dim);
  for (int s = 0; s < spec.num_distributions; ++s) {
    for (int t = 0; t < counts[s]; ++t) {
      const int block = t % spec.classes_per_distribution;
      for (int j = 0; j < spec.feature_dim; ++j)
        x[j] = centers[block][j] + noise(rng);
      out.append_class_point(x, s * spec.classes_per_distribution + block);
    }
  }
  return out;
}

int argmax_index(const std::vector<double>& v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

void MixtureSpec::validate() const {
  if (num_distributions < 2)
    throw std::invalid_argument("population: num_distributions must be >= 2");
  if (num_clients < 1)
    throw std::invalid_argument("population: num_clients must be >= 1");
  if (train_samples_per_client < 1 || test_samples_per_client < 1)
    throw std::invalid_argument("population: samples per client must be >= 1");
  if (feature_dim < 1)
    throw std::invalid_argument("population: feature_dim must be >= 1");
  if (classes_per_distribution < 1)
    throw std::invalid_argument("population: classes_per_distribution must be >= 1");
  if (partition == PartitionKind::ratio) {
    if (num_distributions != 2)
      throw std::invalid_argument("population: ratio partition requires 2 distributions");
    if (ratio_a + ratio_b != 100 || ratio_a < 0 || ratio_b < 0)
      throw std::invalid_argument("population: ratio a:b must be nonnegative with a+b=100");
  }
  if (partition == PartitionKind::linear && num_distributions != 2)
    throw std::invalid_argument("population: linear partition requires 2 distributions");
  if (cluster_stddev <= 0.0 || center_scale <= 0.0)
    throw std::invalid_argument("population: cluster geometry must be positive");
}

void GaussianPopulationSpec::validate() const {
  if (tier1_clients < 0 || tier2_clients < 0 || tier1_clients + tier2_clients < 1)
    throw std::invalid_argument("gaussian population: need at least one client");
  if (tau_sq < 0.0) throw std::invalid_argument("gaussian population: tau_sq must be >= 0");
  if (sigma_sq <= 0.0) throw std::invalid_argument("gaussian population: sigma_sq must be > 0");
  if (samples_per_client < 1)
    throw std::invalid_argument("gaussian population: samples_per_client must be >= 1");
}

std::vector<double> partition_mixture(const MixtureSpec& spec, int client_id) {
  const int n = spec.num_clients;
  switch (spec.partition) {
    case PartitionKind::ratio: {
      double major = spec.ratio_b / 100.0;
      double minor = spec.ratio_a / 100.0;
      // First half majors on distribution 0, second half on distribution 1.
      if (client_id < (n + 1) / 2) return {major, minor};
      return {minor, major};
    }
    case PartitionKind::linear: {
      // (0.5 + k)% from distribution 0 when n = 100; same endpoints for
      // other n: 0.5% at k=0 up to 99.5% at k=n-1.
      double pct = n == 1 ? 50.0 : 0.5 + 99.0 * client_id / (n - 1);
      return {pct / 100.0, 1.0 - pct / 100.0};
    }
    case PartitionKind::random_mixture: {
      auto rng = make_rng(derive_seed(spec.seed, "population.mixture-cuts",
                                      static_cast<std::uint64_t>(client_id)));
      std::uniform_real_distribution<double> uniform(0.0, 1.0);
      std::vector<double> cuts(spec.num_distributions - 1);
      for (double& c : cuts) c = uniform(rng);
      std::sort(cuts.begin(), cuts.end());
      std::vector<double> mix(spec.num_distributions);
      double prev = 0.0;
      for (int s = 0; s + 1 < spec.num_distributions; ++s) {
        mix[s] = cuts[s] - prev;
        prev = cuts[s];
      }
      mix[spec.num_distributions - 1] = 1.0 - prev;
      return mix;
    }
  }
  throw std::logic_error("unknown partition kind");
}

std::vector<double> inverse_mixture(const std::vector<double>& mixture) {
  const double s_count = static_cast<double>(mixture.size());
  std::vector<double> inv(mixture.size());
  for (std::size_t s = 0; s < mixture.size(); ++s)
    inv[s] = (1.0 - mixture[s]) / (s_count - 1.0);
  return inv;
}

std::vector<ClientDataset> generate_mixture_population(const MixtureSpec& spec) {
  spec.validate();
  const auto centers = class_centers(spec);
  std::vector<ClientDataset> population;
  population.reserve(spec.num_clients);
  for (int id = 0; id < spec.num_clients; ++id) {
    ClientDataset client;
    client.client_id = id;
    client.true_mixture = partition_mixture(spec, id);
    client.ground_truth_tier = argmax_index(client.true_mixture);

    auto train_rng = make_rng(derive_seed(spec.seed, "population.client-train",
                                          static_cast<std::uint64_t>(id)));
    client.train = draw_mixture(spec, centers, client.true_mixture,
                                spec.train_samples_per_client, train_rng);

    const auto test_mix = spec.inverse_test ? inverse_mixture(client.true_mixture)
                                            : client.true_mixture;
    auto test_rng = make_rng(derive_seed(spec.seed, "population.client-test",
                                         static_cast<std::uint64_t>(id)));
    client.test = draw_mixture(spec, centers, test_mix,
                               spec.test_samples_per_client, test_rng);
    population.push_back(std::move(client));
  }
  return population;
}

std::vector<ClientDataset> generate_gaussian_population(
    const GaussianPopulationSpec& spec) {
  spec.validate();
  std::vector<ClientDataset> population;
  const int total = spec.tier1_clients + spec.tier2_clients;
  population.reserve(total);
  for (int id = 0; id < total; ++id) {
    const int tier = id < spec.tier1_clients ? 0 : 1;
    const double beta = tier == 0 ? spec.beta1 : spec.beta2;
    auto rng = make_rng(derive_seed(spec.seed, "population.gaussian-client",
                                    static_cast<std::uint64_t>(id)));
    std::normal_distribution<double> mean_draw(beta, std::sqrt(spec.tau_sq));
    ClientDataset client;
    client.client_id = id;
    client.ground_truth_tier = tier;
    client.true_mean = spec.tau_sq > 0.0 ? mean_draw(rng) : beta;
    client.true_mixture = tier == 0 ? std::vector<double>{1.0, 0.0}
                                    : std::vector<double>{0.0, 1.0};
    std::normal_distribution<double> obs(client.true_mean, std::sqrt(spec.sigma_sq));
    for (int t = 0; t < spec.samples_per_client; ++t)
      client.train.append_target_point(obs(rng));
    for (int t = 0; t < spec.samples_per_client; ++t)
      client.test.append_target_point(obs(rng));
    population.push_back(std::move(client));
  }
  return population;
}

LabeledDataset sample_mixture_dataset(const MixtureSpec& spec,
                                      const std::vector<double>& mixture,
                                      int num_samples, std::uint64_t seed) {
  if (static_cast<int>(mixture.size()) != spec.num_distributions)
    throw std::invalid_argument("sample_mixture_dataset: mixture length mismatch");
  const auto centers = class_centers(spec);
  auto rng = make_rng(seed);
  return draw_mixture(spec, centers, mixture, num_samples, rng);
}

LabeledDataset sample_distribution_holdout(const MixtureSpec& spec,
                                           int distribution, int num_samples,
                                           std::uint64_t seed) {
  std::vector<double> mixture(spec.num_distributions, 0.0);
  mixture.at(distribution) = 1.0;
  return sample_mixture_dataset(spec, mixture, num_samples, seed);
}

nlohmann::json population_to_json(const std::vector<ClientDataset>& population) {
  nlohmann::json clients = nlohmann::json::array();
  for (const auto& c : population) {
    nlohmann::json jc;
    jc["client_id"] = c.client_id;
    jc["mixture"] = c.true_mixture;
    jc["ground_truth_tier"] = c.ground_truth_tier;
    jc["true_mean"] = c.true_mean;
    for (const char* split : {"train", "test"}) {
      const LabeledDataset& d = std::string(split) == "train" ? c.train : c.test;
      nlohmann::json jd;
      jd["feature_dim"] = d.feature_dim;
      jd["features"] = d.features;
      jd["labels"] = d.labels;
      jd["targets"] = d.targets;
      jc[split] = std::move(jd);
    }
    clients.push_back(std::move(jc));
  }
  return nlohmann::json{{"clients", std::move(clients)}};
}

std::vector<ClientDataset> population_from_json(const nlohmann::json& j) {
  std::vector<ClientDataset> population;
  for (const auto& jc : j.at("clients")) {
    ClientDataset c;
    c.client_id = jc.at("client_id").get<int>();
    c.true_mixture = jc.at("mixture").get<std::vector<double>>();
    c.ground_truth_tier = jc.at("ground_truth_tier").get<int>();
    c.true_mean = jc.at("true_mean").get<double>();
    for (const char* split : {"train", "test"}) {
      LabeledDataset& d = std::string(split) == "train" ? c.train : c.test;
      const auto& jd = jc.at(split);
      d.feature_dim = jd.at("feature_dim").get<int>();
      d.features = jd.at("features").get<std::vector<double>>();
      d.labels = jd.at("labels").get<std::vector<int>>();
      d.targets = jd.at("targets").get<std::vector<double>>();
    }
    population.push_back(std::move(c));
  }
  return population;
}

}  // namespace tierfed
