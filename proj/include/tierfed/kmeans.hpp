#pragma once

#include <cstdint>
#include <vector>

namespace tierfed {

struct KMeansResult {
  std::vector<int> assignment;
  std::vector<std::vector<double>> centers;
  int iterations = 0;
};

// Lloyd's algorithm with k-means++ seeding. Runs to convergence or
// max_iterations. Empty clusters are repaired by stealing the point
// farthest from its current center.
KMeansResult kmeans(const std::vector<std::vector<double>>& points, int k,
                    std::uint64_t seed, int max_iterations = 100);

}  // namespace tierfed
