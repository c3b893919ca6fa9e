#include <doctest.h>

#include <stdexcept>

#include "tierfed/client.hpp"
#include "tierfed/rng.hpp"

using namespace tierfed;

namespace {

const ModelSpec kScalar{ModelKind::scalar_mean, 0, 0};

// 90 targets near zero and 10 far away: the zero model scores 0.9.
LabeledDataset ninety_ten() {
  LabeledDataset d;
  for (int i = 0; i < 90; ++i) d.append_target_point(0.0);
  for (int i = 0; i < 10; ++i) d.append_target_point(5.0);
  return d;
}

}  // namespace

TEST_CASE("importance weight is the tier model's local accuracy") {
  const auto d = ninety_ten();
  const auto w = compute_importance_weights(d, {ParamVector({0.0})}, kScalar);
  REQUIRE(w.per_tier.size() == 1);
  CHECK(w.per_tier[0] == doctest::Approx(0.9));
}

TEST_CASE("a model with no correct predictions gets weight zero") {
  LabeledDataset d;
  for (int i = 0; i < 10; ++i) d.append_target_point(10.0);
  const auto w = compute_importance_weights(d, {ParamVector({0.0})}, kScalar);
  CHECK(w.per_tier[0] == 0.0);
}

TEST_CASE("identical tier models get identical weights") {
  const auto d = ninety_ten();
  const auto w = compute_importance_weights(
      d, {ParamVector({0.0}), ParamVector({0.0})}, kScalar);
  CHECK(w.per_tier[0] == w.per_tier[1]);
}

TEST_CASE("bids keep tiers above the threshold") {
  auto rng = make_rng(1);
  const auto bids = build_preference_bids(7, {{0.9, 0.1}}, {BidMode::incentive, 0.5},
                                          {}, 1.0, rng);
  CHECK(bids.client_id == 7);
  CHECK(bids.tiers == std::vector<int>{0});
}

TEST_CASE("bids order tiers by importance weight when history is empty") {
  auto rng = make_rng(1);
  const auto bids = build_preference_bids(0, {{0.6, 0.7}}, {BidMode::incentive, 0.5},
                                          {}, 1.0, rng);
  CHECK(bids.tiers == std::vector<int>{1, 0});
}

TEST_CASE("no tier above the threshold falls back to the argmax") {
  auto rng = make_rng(1);
  const auto bids = build_preference_bids(0, {{0.2, 0.3}}, {BidMode::incentive, 0.5},
                                          {}, 1.0, rng);
  CHECK(bids.tiers == std::vector<int>{1});
}

TEST_CASE("reward history can reorder close importance weights") {
  auto rng = make_rng(1);
  // Tier 0 pays much better; with near-tied weights it should rank first.
  const auto bids = build_preference_bids(0, {{0.68, 0.7}}, {BidMode::incentive, 0.5},
                                          {0.9, -0.5}, 1.0, rng);
  CHECK(bids.tiers == std::vector<int>{0, 1});
}

TEST_CASE("random policy bids for one uniformly drawn tier") {
  auto rng = make_rng(123);
  for (int i = 0; i < 20; ++i) {
    const auto bids = build_preference_bids(0, {{0.5, 0.5, 0.5}},
                                            {BidMode::random_choice, 0.5}, {}, 1.0,
                                            rng);
    REQUIRE(bids.tiers.size() == 1);
    CHECK(bids.tiers[0] >= 0);
    CHECK(bids.tiers[0] < 3);
  }
}

TEST_CASE("personalization follows the importance-weight mixture") {
  const std::vector<ParamVector> models = {ParamVector({0.0}), ParamVector({10.0})};
  // Pure weight on one tier reproduces that tier's parameters.
  auto p = build_personalized_model(0, {{1.0, 0.0}}, models, 0.0);
  CHECK(p.params.values[0] == doctest::Approx(0.0));

  // Equal weights give the midpoint.
  p = build_personalized_model(0, {{0.5, 0.5}},
                               {ParamVector({0.0}), ParamVector({2.0})}, 0.0);
  CHECK(p.params.values[0] == doctest::Approx(1.0));

  // 0.9/0.1 with both above threshold zero.
  p = build_personalized_model(0, {{0.9, 0.1}}, models, 0.0);
  CHECK(p.params.values[0] == doctest::Approx(1.0));
  CHECK(p.mixing_weights[0] == doctest::Approx(0.9));
}

TEST_CASE("scaling importance weights leaves the mixture unchanged") {
  const std::vector<ParamVector> models = {ParamVector({1.0, 2.0}),
                                           ParamVector({-3.0, 0.5})};
  const auto a = build_personalized_model(0, {{0.8, 0.4}}, models, 0.0);
  const auto b = build_personalized_model(0, {{0.4, 0.2}}, models, 0.0);
  for (std::size_t j = 0; j < a.params.dim(); ++j)
    CHECK(a.params.values[j] == doctest::Approx(b.params.values[j]));
}

TEST_CASE("threshold masks low-weight tiers out of the mixture") {
  const std::vector<ParamVector> models = {ParamVector({0.0}), ParamVector({10.0})};
  const auto p = build_personalized_model(0, {{0.9, 0.2}}, models, 0.5);
  CHECK(p.params.values[0] == doctest::Approx(0.0));
  CHECK(p.mixing_weights == std::vector<double>{1.0, 0.0});
}

TEST_CASE("all-zero importance weights are an error") {
  CHECK_THROWS_WITH_AS(
      build_personalized_model(0, {{0.0, 0.0}},
                               {ParamVector({0.0}), ParamVector({1.0})}, 0.5),
      doctest::Contains("no informative tier"), std::runtime_error);
}
