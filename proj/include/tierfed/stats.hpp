#pragma once

#include <vector>

namespace tierfed {

double mean_of(const std::vector<double>& v);
double sample_stddev(const std::vector<double>& v);

// Spearman rank correlation with average ranks for ties. Needs at least
// two points and nonzero variance on both sides; returns 0 otherwise.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

// Kendall tau-a accumulated across independent groups: concordant minus
// discordant over all within-group pairs (ties count toward the
// denominator only).
struct KendallAccumulator {
  long long concordant = 0;
  long long discordant = 0;
  long long pairs = 0;

  void add_group(const std::vector<double>& a, const std::vector<double>& b);
  double tau() const;
};

}  // namespace tierfed
