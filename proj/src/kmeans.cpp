#include "tierfed/kmeans.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "tierfed/rng.hpp"

namespace tierfed {

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double d2 = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) d2 += (a[j] - b[j]) * (a[j] - b[j]);
  return d2;
}

}  // namespace

KMeansResult kmeans(const std::vector<std::vector<double>>& points, int k,
                    std::uint64_t seed, int max_iterations) {
  if (k < 1) throw std::invalid_argument("kmeans: k must be >= 1");
  if (points.empty()) throw std::invalid_argument("kmeans: no points");
  const std::size_t n = points.size();
  const std::size_t dim = points.front().size();
  auto rng = make_rng(seed);

  // k-means++ seeding.
  std::vector<std::vector<double>> centers;
  centers.push_back(points[rng() % n]);
  std::vector<double> d2(n);
  while (static_cast<int>(centers.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::max();
      for (const auto& c : centers) best = std::min(best, sq_dist(points[i], c));
      d2[i] = best;
      total += best;
    }
    if (total <= 0.0) {
      // All remaining points coincide with existing centers.
      centers.push_back(points[rng() % n]);
      continue;
    }
    std::uniform_real_distribution<double> uniform(0.0, total);
    double target = uniform(rng);
    std::size_t pick = n - 1;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += d2[i];
      if (acc >= target) {
        pick = i;
        break;
      }
    }
    centers.push_back(points[pick]);
  }

  KMeansResult result;
  result.assignment.assign(n, 0);
  int iter = 0;
  for (; iter < max_iterations; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::max();
      for (int c = 0; c < k; ++c) {
        double d = sq_dist(points[i], centers[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (result.assignment[i] != best) {
        result.assignment[i] = best;
        changed = true;
      }
    }

    std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
    std::vector<int> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      counts[result.assignment[i]] += 1;
      for (std::size_t j = 0; j < dim; ++j)
        sums[result.assignment[i]][j] += points[i][j];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        // Repair: move the point farthest from its center into this cluster.
        std::size_t far = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
          double d = sq_dist(points[i], centers[result.assignment[i]]);
          if (d > far_d && counts[result.assignment[i]] > 1) {
            far_d = d;
            far = i;
          }
        }
        counts[result.assignment[far]] -= 1;
        for (std::size_t j = 0; j < dim; ++j)
          sums[result.assignment[far]][j] -= points[far][j];
        result.assignment[far] = c;
        counts[c] = 1;
        sums[c] = points[far];
        changed = true;
      }
      for (std::size_t j = 0; j < dim; ++j) centers[c][j] = sums[c][j] / counts[c];
    }
    if (!changed && iter > 0) break;
  }
  result.centers = std::move(centers);
  result.iterations = iter;
  return result;
}

}  // namespace tierfed
