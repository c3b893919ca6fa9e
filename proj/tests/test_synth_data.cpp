#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <numeric>

#include "tierfed/synth_data.hpp"

using namespace tierfed;

namespace {

MixtureSpec ratio_spec(int clients = 100) {
  MixtureSpec spec;
  spec.partition = PartitionKind::ratio;
  spec.ratio_a = 10;
  spec.ratio_b = 90;
  spec.num_clients = clients;
  spec.seed = 31;
  return spec;
}

}  // namespace

TEST_CASE("ratio 10:90 splits the population into two mixture groups") {
  const auto population = generate_mixture_population(ratio_spec());
  REQUIRE(population.size() == 100);
  CHECK(population[0].true_mixture == std::vector<double>{0.9, 0.1});
  CHECK(population[49].true_mixture == std::vector<double>{0.9, 0.1});
  CHECK(population[50].true_mixture == std::vector<double>{0.1, 0.9});
  CHECK(population[0].ground_truth_tier == 0);
  CHECK(population[50].ground_truth_tier == 1);
}

TEST_CASE("linear partition matches the 100-client endpoints") {
  MixtureSpec spec = ratio_spec();
  spec.partition = PartitionKind::linear;
  CHECK(partition_mixture(spec, 0)[0] == doctest::Approx(0.005));
  CHECK(partition_mixture(spec, 99)[0] == doctest::Approx(0.995));
  CHECK(partition_mixture(spec, 42)[0] == doctest::Approx((0.5 + 42.0) / 100.0));
}

TEST_CASE("random partition mixtures are simplex points") {
  MixtureSpec spec = ratio_spec();
  spec.partition = PartitionKind::random_mixture;
  spec.num_distributions = 4;
  spec.classes_per_distribution = 1;
  for (int k : {0, 7, 63}) {
    const auto mix = partition_mixture(spec, k);
    REQUIRE(mix.size() == 4);
    double total = 0.0;
    for (double m : mix) {
      CHECK(m >= 0.0);
      CHECK(m <= 1.0);
      total += m;
    }
    CHECK(total == doctest::Approx(1.0));
  }
}

TEST_CASE("inverse mixture is the normalized complement") {
  CHECK(inverse_mixture({0.9, 0.1}) == std::vector<double>{doctest::Approx(0.1), doctest::Approx(0.9)});
  const auto inv = inverse_mixture({0.5, 0.25, 0.25});
  CHECK(inv[0] == doctest::Approx(0.25));
  CHECK(inv[1] == doctest::Approx(0.375));
  CHECK(std::accumulate(inv.begin(), inv.end(), 0.0) == doctest::Approx(1.0));
}

TEST_CASE("same seed reproduces the population bit for bit") {
  const auto a = generate_mixture_population(ratio_spec(20));
  const auto b = generate_mixture_population(ratio_spec(20));
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].train.features == b[i].train.features);
    CHECK(a[i].train.labels == b[i].train.labels);
    CHECK(a[i].test.features == b[i].test.features);
  }
}

TEST_CASE("empirical source fractions match the declared mixture") {
  MixtureSpec spec = ratio_spec(10);
  spec.train_samples_per_client = 200;
  const auto population = generate_mixture_population(spec);
  for (const auto& client : population) {
    std::vector<double> fraction(spec.num_distributions, 0.0);
    for (int label : client.train.labels)
      fraction[label / spec.classes_per_distribution] += 1.0;
    for (double& f : fraction) f /= client.train.labels.size();
    for (int s = 0; s < spec.num_distributions; ++s)
      CHECK(std::abs(fraction[s] - client.true_mixture[s]) <=
            1.0 / spec.train_samples_per_client + 1e-9);
  }
}

TEST_CASE("inverse test flag complements the test mixture exactly") {
  MixtureSpec spec = ratio_spec(4);
  spec.inverse_test = true;
  spec.test_samples_per_client = 100;
  const auto population = generate_mixture_population(spec);
  // Client 0 trains 90:10, so its test split must be 10:90.
  std::vector<double> fraction(2, 0.0);
  for (int label : population[0].test.labels)
    fraction[label / spec.classes_per_distribution] += 1.0;
  CHECK(fraction[0] / 100.0 == doctest::Approx(0.1).epsilon(0.02));
}

TEST_CASE("four-distribution mode splits classes into quarters") {
  MixtureSpec spec = ratio_spec(8);
  spec.partition = PartitionKind::random_mixture;
  spec.num_distributions = 4;
  spec.classes_per_distribution = 2;
  const auto population = generate_mixture_population(spec);
  CHECK(spec.total_classes() == 8);
  int max_label = 0;
  for (const auto& c : population)
    for (int label : c.train.labels) max_label = std::max(max_label, label);
  CHECK(max_label <= 7);
}

TEST_CASE("ratio partition requires two distributions") {
  MixtureSpec spec = ratio_spec();
  spec.num_distributions = 3;
  CHECK_THROWS_AS(generate_mixture_population(spec), std::invalid_argument);
  spec = ratio_spec();
  spec.ratio_a = 20;  // 20 + 90 != 100
  CHECK_THROWS_AS(generate_mixture_population(spec), std::invalid_argument);
}

TEST_CASE("zero within-tier variance pins every mean to the root") {
  GaussianPopulationSpec spec;
  spec.tier1_clients = 5;
  spec.tier2_clients = 5;
  spec.beta1 = -2.0;
  spec.beta2 = 3.0;
  spec.tau_sq = 0.0;
  spec.seed = 4;
  const auto population = generate_gaussian_population(spec);
  for (const auto& c : population)
    CHECK(c.true_mean == (c.ground_truth_tier == 0 ? -2.0 : 3.0));
}

TEST_CASE("a single-tier gaussian population is allowed") {
  GaussianPopulationSpec spec;
  spec.tier1_clients = 10;
  spec.tier2_clients = 0;
  const auto population = generate_gaussian_population(spec);
  CHECK(population.size() == 10);
  for (const auto& c : population) CHECK(c.ground_truth_tier == 0);
}

TEST_CASE("drawn tier means concentrate around the root mean") {
  GaussianPopulationSpec spec;
  spec.tier1_clients = 40;
  spec.tier2_clients = 40;
  spec.beta1 = 0.0;
  spec.beta2 = 5.0;
  spec.tau_sq = 0.01;
  spec.seed = 77;
  const auto population = generate_gaussian_population(spec);
  double mean1 = 0.0;
  for (int i = 0; i < 40; ++i) mean1 += population[i].true_mean;
  mean1 /= 40.0;
  CHECK(std::abs(mean1 - 0.0) <= 3.0 * std::sqrt(0.01) / std::sqrt(40.0));
}

TEST_CASE("population json layout round-trips") {
  const auto population = generate_mixture_population(ratio_spec(3));
  const auto j = population_to_json(population);
  const auto back = population_from_json(j);
  REQUIRE(back.size() == population.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].client_id == population[i].client_id);
    CHECK(back[i].true_mixture == population[i].true_mixture);
    CHECK(back[i].train.features == population[i].train.features);
    CHECK(back[i].train.labels == population[i].train.labels);
    CHECK(back[i].ground_truth_tier == population[i].ground_truth_tier);
  }
}

TEST_CASE("distribution holdout carries only that distribution's labels") {
  MixtureSpec spec = ratio_spec();
  const auto holdout = sample_distribution_holdout(spec, 1, 50, 9);
  for (int label : holdout.labels) {
    CHECK(label >= spec.classes_per_distribution);
    CHECK(label < 2 * spec.classes_per_distribution);
  }
}
