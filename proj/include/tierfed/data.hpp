#pragma once

#include <cstddef>
#include <vector>

namespace tierfed {

// A labeled dataset for either task family. Classification points carry an
// integer label in `labels`; mean-estimation points carry a real target in
// `targets`. Exactly one of the two is populated. Features are row-major,
// feature_dim columns per point (feature_dim == 0 for mean estimation).
struct LabeledDataset {
  int feature_dim = 0;
  std::vector<double> features;
  std::vector<int> labels;
  std::vector<double> targets;

  std::size_t size() const {
    return labels.empty() ? targets.size() : labels.size();
  }
  bool is_classification() const { return !labels.empty(); }

  const double* row(std::size_t i) const {
    return features.data() + i * static_cast<std::size_t>(feature_dim);
  }

  void append_class_point(const std::vector<double>& x, int label) {
    features.insert(features.end(), x.begin(), x.end());
    labels.push_back(label);
  }
  void append_target_point(double z) { targets.push_back(z); }
};

}  // namespace tierfed
