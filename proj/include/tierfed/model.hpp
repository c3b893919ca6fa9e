#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tierfed/data.hpp"

namespace tierfed {

enum class ModelKind { scalar_mean, softmax };

// Shape of a trainable model. scalar_mean is a single location parameter
// trained with squared error; softmax is a linear multinomial classifier
// with a bias column folded into the parameter vector.
struct ModelSpec {
  ModelKind kind = ModelKind::scalar_mean;
  int feature_dim = 0;
  int num_classes = 0;

  int param_dim() const {
    return kind == ModelKind::scalar_mean ? 1 : (feature_dim + 1) * num_classes;
  }
  void validate() const;
};

// Flat parameter vector shared by every model family. Dimension is fixed by
// the ModelSpec; every operation leaves all entries finite.
struct ParamVector {
  std::vector<double> values;

  ParamVector() = default;
  explicit ParamVector(std::vector<double> v) : values(std::move(v)) {}

  std::size_t dim() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
};

ParamVector zeros(const ModelSpec& spec);
double dot(const ParamVector& a, const ParamVector& b);
void check_finite(const ParamVector& p, const char* where);

// Mean prediction loss over a dataset: squared error (mu - z)^2 for
// scalar_mean, cross-entropy for softmax. Softmax probabilities use
// max-subtraction and are clamped at 1e-12 before the log.
double loss(const ModelSpec& spec, const ParamVector& params,
            const LabeledDataset& data);

// Mean gradient of `loss` over the dataset, same dimension as params.
ParamVector gradient(const ModelSpec& spec, const ParamVector& params,
                     const LabeledDataset& data);

// Mini-batch SGD for `epochs` passes. Batch order is a Fisher-Yates shuffle
// keyed by (rng_seed, epoch), so results are bit-reproducible. batch_size
// larger than the dataset degrades to full-batch.
ParamVector train_local(const ModelSpec& spec, ParamVector params,
                        const LabeledDataset& data, int epochs, double lr,
                        int batch_size, std::uint64_t rng_seed);

// Normalized convex combination sum(w_m * P_m) / sum(w_m). Weights default
// to sample-size fractions at the call sites.
ParamVector fedavg(const std::vector<std::pair<ParamVector, double>>& updates);

// Predicted class for one feature row (softmax only); ties break low.
int predict_class(const ModelSpec& spec, const ParamVector& params,
                  const double* x);

// Fraction of points predicted correctly. For softmax this is ordinary
// classification accuracy. For scalar_mean a point counts as correct when
// |mu - z| <= 1, the counting analogue of accuracy for the mean task.
double accuracy(const ModelSpec& spec, const ParamVector& params,
                const LabeledDataset& data);

// FNV-1a hash of the raw parameter bytes, for trace rows.
std::string param_hash(const ParamVector& params);

// Global evaluation counters, used by tests that pin the cost profile of
// gradient-based estimators (one gradient, no retraining).
struct EvalCounters {
  long long loss_evals = 0;
  long long gradient_evals = 0;
};
EvalCounters eval_counters();
void reset_eval_counters();

}  // namespace tierfed
