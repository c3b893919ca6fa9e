#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <random>

#include "tierfed/model.hpp"
#include "tierfed/rng.hpp"

using namespace tierfed;

namespace {

const ModelSpec kScalar{ModelKind::scalar_mean, 0, 0};

LabeledDataset targets(std::initializer_list<double> zs) {
  LabeledDataset d;
  for (double z : zs) d.append_target_point(z);
  return d;
}

LabeledDataset random_classification(int n, int dim, int classes,
                                     std::mt19937_64& rng) {
  LabeledDataset d;
  d.feature_dim = dim;
  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<double> x(dim);
  for (int i = 0; i < n; ++i) {
    for (double& v : x) v = unit(rng);
    d.append_class_point(x, static_cast<int>(rng() % classes));
  }
  return d;
}

// Central finite differences, the independent oracle for gradients.
ParamVector fd_gradient(const ModelSpec& spec, const ParamVector& params,
                        const LabeledDataset& data, double h = 1e-5) {
  ParamVector g{std::vector<double>(params.dim(), 0.0)};
  for (std::size_t j = 0; j < params.dim(); ++j) {
    ParamVector lo = params, hi = params;
    lo.values[j] -= h;
    hi.values[j] += h;
    g.values[j] = (loss(spec, hi, data) - loss(spec, lo, data)) / (2.0 * h);
  }
  return g;
}

double rel_gap(const ParamVector& a, const ParamVector& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < a.dim(); ++j) {
    num += (a.values[j] - b.values[j]) * (a.values[j] - b.values[j]);
    den += b.values[j] * b.values[j];
  }
  return std::sqrt(num) / std::max(1e-12, std::sqrt(den));
}

}  // namespace

TEST_CASE("scalar mean loss is the mean squared error") {
  CHECK(loss(kScalar, ParamVector({0.0}), targets({0.0})) == doctest::Approx(0.0));
  CHECK(loss(kScalar, ParamVector({1.0}), targets({0.0, 2.0})) ==
        doctest::Approx(1.0));
  auto rng = make_rng(7);
  std::normal_distribution<double> unit(0.0, 1.0);
  LabeledDataset d;
  for (int i = 0; i < 17; ++i) d.append_target_point(unit(rng));
  const double mu = 0.3;
  double mse = 0.0;
  for (double z : d.targets) mse += (mu - z) * (mu - z);
  mse /= static_cast<double>(d.size());
  CHECK(loss(kScalar, ParamVector({mu}), d) == doctest::Approx(mse));
}

TEST_CASE("softmax loss with uniform logits is log of class count") {
  const ModelSpec spec{ModelKind::softmax, 2, 2};
  LabeledDataset d;
  d.feature_dim = 2;
  d.append_class_point({0.4, -1.2}, 1);
  CHECK(loss(spec, zeros(spec), d) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("loss rejects dimension mismatches with a named message") {
  CHECK_THROWS_WITH_AS(loss(kScalar, ParamVector({0.0, 1.0}), targets({0.0})),
                       doctest::Contains("expected 1"), std::invalid_argument);
  CHECK_THROWS_AS(loss(kScalar, ParamVector({0.0}), LabeledDataset{}),
                  std::invalid_argument);
}

TEST_CASE("scalar gradient matches the analytic derivative") {
  CHECK(gradient(kScalar, ParamVector({1.0}), targets({0.0})).values[0] ==
        doctest::Approx(2.0));
  CHECK(gradient(kScalar, ParamVector({1.0}), targets({0.0, 2.0})).values[0] ==
        doctest::Approx(0.0));
}

TEST_CASE("softmax gradient matches central finite differences") {
  auto rng = make_rng(11);
  const ModelSpec spec{ModelKind::softmax, 3, 3};
  const auto data = random_classification(3, 3, 3, rng);
  std::normal_distribution<double> unit(0.0, 1.0);
  ParamVector params{std::vector<double>(spec.param_dim())};
  for (double& v : params.values) v = 0.4 * unit(rng);
  CHECK(rel_gap(gradient(spec, params, data), fd_gradient(spec, params, data)) <
        1e-6);
}

TEST_CASE("gradient equals finite differences on 100 random instances") {
  auto rng = make_rng(2024);
  std::normal_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    if (i % 2 == 0) {
      LabeledDataset d;
      const int n = 2 + static_cast<int>(rng() % 20);
      for (int t = 0; t < n; ++t) d.append_target_point(unit(rng) * 2.0);
      ParamVector p({unit(rng)});
      CHECK(rel_gap(gradient(kScalar, p, d), fd_gradient(kScalar, p, d)) < 1e-6);
    } else {
      const int dim = 1 + static_cast<int>(rng() % 4);
      const int classes = 2 + static_cast<int>(rng() % 3);
      const ModelSpec spec{ModelKind::softmax, dim, classes};
      const auto d = random_classification(5 + static_cast<int>(rng() % 10), dim,
                                           classes, rng);
      ParamVector p{std::vector<double>(spec.param_dim())};
      for (double& v : p.values) v = 0.5 * unit(rng);
      CHECK(rel_gap(gradient(spec, p, d), fd_gradient(spec, p, d)) < 1e-6);
    }
  }
}

TEST_CASE("local training converges to the sample mean") {
  const auto d = targets({0.0, 2.0});
  const auto trained = train_local(kScalar, ParamVector({5.0}), d, 200, 0.1, 8, 3);
  CHECK(std::abs(trained.values[0] - 1.0) < 1e-3);
}

TEST_CASE("zero epochs leaves parameters untouched") {
  const auto p = train_local(kScalar, ParamVector({5.0}), targets({0.0}), 0, 0.1, 1, 3);
  CHECK(p.values[0] == 5.0);
}

TEST_CASE("training loss decreases on a separable classification set") {
  const ModelSpec spec{ModelKind::softmax, 2, 2};
  LabeledDataset d;
  d.feature_dim = 2;
  auto rng = make_rng(5);
  std::normal_distribution<double> unit(0.0, 0.3);
  for (int i = 0; i < 40; ++i) {
    const int label = i % 2;
    const double cx = label == 0 ? -2.0 : 2.0;
    d.append_class_point({cx + unit(rng), unit(rng)}, label);
  }
  ParamVector p = zeros(spec);
  double prev = loss(spec, p, d);
  for (int epoch = 0; epoch < 5; ++epoch) {
    p = train_local(spec, p, d, 1, 0.1, 8, derive_seed(9, "epoch-seed", epoch));
    const double now = loss(spec, p, d);
    CHECK(now < prev);
    prev = now;
  }
}

TEST_CASE("training is bit-reproducible for a fixed seed") {
  auto rng = make_rng(7);
  const ModelSpec spec{ModelKind::softmax, 3, 4};
  const auto d = random_classification(30, 3, 4, rng);
  const auto a = train_local(spec, zeros(spec), d, 3, 0.05, 8, 1234);
  const auto b = train_local(spec, zeros(spec), d, 3, 0.05, 8, 1234);
  CHECK(a.values == b.values);
  const auto c = train_local(spec, zeros(spec), d, 3, 0.05, 8, 1235);
  CHECK(a.values != c.values);
}

TEST_CASE("fedavg examples and errors") {
  const auto mid = fedavg({{ParamVector({0.0}), 1.0}, {ParamVector({2.0}), 1.0}});
  CHECK(mid.values[0] == doctest::Approx(1.0));
  const auto single = fedavg({{ParamVector({3.5}), 2.0}});
  CHECK(single.values[0] == doctest::Approx(3.5));
  const auto weighted = fedavg({{ParamVector({0.0}), 1.0}, {ParamVector({4.0}), 3.0}});
  CHECK(weighted.values[0] == doctest::Approx(3.0));

  CHECK_THROWS_AS(fedavg({}), std::invalid_argument);
  CHECK_THROWS_AS(fedavg({{ParamVector({0.0}), 1.0}, {ParamVector({0.0, 1.0}), 1.0}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(fedavg({{ParamVector({0.0}), 0.0}, {ParamVector({1.0}), 0.0}}),
                  std::invalid_argument);
}

TEST_CASE("fedavg is permutation invariant and idempotent") {
  std::vector<std::pair<ParamVector, double>> updates = {
      {ParamVector({1.0, -2.0}), 0.2},
      {ParamVector({0.5, 3.0}), 1.3},
      {ParamVector({-1.0, 0.0}), 0.7}};
  const auto a = fedavg(updates);
  std::swap(updates[0], updates[2]);
  const auto b = fedavg(updates);
  for (std::size_t j = 0; j < a.dim(); ++j)
    CHECK(a.values[j] == doctest::Approx(b.values[j]).epsilon(1e-12));

  const auto fixed = fedavg({{a, 1.0}, {a, 2.0}, {a, 0.5}});
  for (std::size_t j = 0; j < a.dim(); ++j)
    CHECK(fixed.values[j] == doctest::Approx(a.values[j]));
}

TEST_CASE("loss is nonnegative across random models") {
  auto rng = make_rng(99);
  std::normal_distribution<double> unit(0.0, 2.0);
  for (int i = 0; i < 25; ++i) {
    LabeledDataset d;
    for (int t = 0; t < 5; ++t) d.append_target_point(unit(rng));
    CHECK(loss(kScalar, ParamVector({unit(rng)}), d) >= 0.0);
  }
}

TEST_CASE("scalar accuracy counts unit-tolerance hits") {
  const auto d = targets({0.0, 0.5, 3.0, -2.0});
  CHECK(accuracy(kScalar, ParamVector({0.0}), d) == doctest::Approx(0.5));
}
