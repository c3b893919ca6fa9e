#include "tierfed/model.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <numeric>
#include <stdexcept>

#include "tierfed/rng.hpp"

namespace tierfed {

namespace {

std::atomic<long long> g_loss_evals{0};
std::atomic<long long> g_gradient_evals{0};

void check_dims(const ModelSpec& spec, const ParamVector& params,
                const LabeledDataset& data) {
  if (static_cast<int>(params.dim()) != spec.param_dim()) {
    throw std::invalid_argument(
        "parameter dimension mismatch: expected " +
        std::to_string(spec.param_dim()) + ", got " +
        std::to_string(params.dim()));
  }
  if (data.size() == 0) throw std::invalid_argument("dataset is empty");
  if (spec.kind == ModelKind::softmax) {
    if (!data.is_classification())
      throw std::invalid_argument("softmax model needs class labels");
    if (data.feature_dim != spec.feature_dim) {
      throw std::invalid_argument(
          "feature dimension mismatch: expected " +
          std::to_string(spec.feature_dim) + ", got " +
          std::to_string(data.feature_dim));
    }
  } else if (data.is_classification()) {
    throw std::invalid_argument("scalar_mean model needs real targets");
  }
}

// Class-c probabilities for one row, max-subtracted, written into probs.
void softmax_probs(const ModelSpec& spec, const ParamVector& params,
                   const double* x, std::vector<double>& probs) {
  const int d = spec.feature_dim;
  const int c_count = spec.num_classes;
  probs.resize(c_count);
  double max_logit = -1e300;
  for (int c = 0; c < c_count; ++c) {
    const double* w = params.values.data() + c * (d + 1);
    double z = w[d];  // bias
    for (int j = 0; j < d; ++j) z += w[j] * x[j];
    probs[c] = z;
    max_logit = std::max(max_logit, z);
  }
  double total = 0.0;
  for (int c = 0; c < c_count; ++c) {
    probs[c] = std::exp(probs[c] - max_logit);
    total += probs[c];
  }
  for (int c = 0; c < c_count; ++c) probs[c] /= total;
}

}  // namespace

void ModelSpec::validate() const {
  if (kind == ModelKind::scalar_mean) {
    if (feature_dim != 0)
      throw std::invalid_argument("scalar_mean requires feature_dim = 0");
  } else {
    if (feature_dim < 1)
      throw std::invalid_argument("softmax requires feature_dim >= 1");
    if (num_classes < 2)
      throw std::invalid_argument("softmax requires num_classes >= 2");
  }
}

ParamVector zeros(const ModelSpec& spec) {
  return ParamVector(std::vector<double>(spec.param_dim(), 0.0));
}

double dot(const ParamVector& a, const ParamVector& b) {
  if (a.dim() != b.dim())
    throw std::invalid_argument("dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) s += a.values[i] * b.values[i];
  return s;
}

void check_finite(const ParamVector& p, const char* where) {
  for (double v : p.values) {
    if (!std::isfinite(v))
      throw std::runtime_error(std::string("non-finite parameter after ") + where);
  }
}

double loss(const ModelSpec& spec, const ParamVector& params,
            const LabeledDataset& data) {
  check_dims(spec, params, data);
  g_loss_evals.fetch_add(1, std::memory_order_relaxed);
  const std::size_t n = data.size();
  double total = 0.0;
  if (spec.kind == ModelKind::scalar_mean) {
    const double mu = params[0];
    for (double z : data.targets) total += (mu - z) * (mu - z);
  } else {
    std::vector<double> probs;
    for (std::size_t i = 0; i < n; ++i) {
      softmax_probs(spec, params, data.row(i), probs);
      double p = std::max(probs[data.labels[i]], 1e-12);
      total += -std::log(p);
    }
  }
  return total / static_cast<double>(n);
}

ParamVector gradient(const ModelSpec& spec, const ParamVector& params,
                     const LabeledDataset& data) {
  check_dims(spec, params, data);
  g_gradient_evals.fetch_add(1, std::memory_order_relaxed);
  const std::size_t n = data.size();
  ParamVector g = ParamVector(std::vector<double>(params.dim(), 0.0));
  if (spec.kind == ModelKind::scalar_mean) {
    const double mu = params[0];
    double s = 0.0;
    for (double z : data.targets) s += 2.0 * (mu - z);
    g[0] = s / static_cast<double>(n);
  } else {
    const int d = spec.feature_dim;
    std::vector<double> probs;
    for (std::size_t i = 0; i < n; ++i) {
      const double* x = data.row(i);
      softmax_probs(spec, params, x, probs);
      for (int c = 0; c < spec.num_classes; ++c) {
        double coeff = probs[c] - (data.labels[i] == c ? 1.0 : 0.0);
        double* gc = g.values.data() + c * (d + 1);
        for (int j = 0; j < d; ++j) gc[j] += coeff * x[j];
        gc[d] += coeff;
      }
    }
    for (double& v : g.values) v /= static_cast<double>(n);
  }
  return g;
}

ParamVector train_local(const ModelSpec& spec, ParamVector params,
                        const LabeledDataset& data, int epochs, double lr,
                        int batch_size, std::uint64_t rng_seed) {
  check_dims(spec, params, data);
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (lr <= 0.0) throw std::invalid_argument("learning rate must be > 0");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");

  const std::size_t n = data.size();
  const std::size_t bs = std::min<std::size_t>(batch_size, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  LabeledDataset batch;
  batch.feature_dim = data.feature_dim;
  for (int e = 0; e < epochs; ++e) {
    auto rng = make_rng(derive_seed(rng_seed, "epoch", static_cast<std::uint64_t>(e)));
    fisher_yates(order, rng);
    for (std::size_t start = 0; start < n; start += bs) {
      const std::size_t end = std::min(start + bs, n);
      batch.features.clear();
      batch.labels.clear();
      batch.targets.clear();
      for (std::size_t k = start; k < end; ++k) {
        std::size_t i = order[k];
        if (spec.kind == ModelKind::softmax) {
          batch.features.insert(batch.features.end(), data.row(i),
                                data.row(i) + data.feature_dim);
          batch.labels.push_back(data.labels[i]);
        } else {
          batch.targets.push_back(data.targets[i]);
        }
      }
      ParamVector g = gradient(spec, params, batch);
      for (std::size_t j = 0; j < params.dim(); ++j)
        params.values[j] -= lr * g.values[j];
    }
  }
  check_finite(params, "train_local");
  return params;
}

ParamVector fedavg(const std::vector<std::pair<ParamVector, double>>& updates) {
  if (updates.empty()) throw std::invalid_argument("fedavg: no updates");
  const std::size_t dim = updates.front().first.dim();
  double total_weight = 0.0;
  for (const auto& [p, w] : updates) {
    if (p.dim() != dim) throw std::invalid_argument("fedavg: dimension mismatch");
    if (w < 0.0) throw std::invalid_argument("fedavg: negative weight");
    total_weight += w;
  }
  if (total_weight <= 0.0)
    throw std::invalid_argument("fedavg: weights sum to zero");
  ParamVector out(std::vector<double>(dim, 0.0));
  for (const auto& [p, w] : updates) {
    const double lam = w / total_weight;
    for (std::size_t j = 0; j < dim; ++j) out.values[j] += lam * p.values[j];
  }
  check_finite(out, "fedavg");
  return out;
}

int predict_class(const ModelSpec& spec, const ParamVector& params,
                  const double* x) {
  const int d = spec.feature_dim;
  int best = 0;
  double best_logit = -1e300;
  for (int c = 0; c < spec.num_classes; ++c) {
    const double* w = params.values.data() + c * (d + 1);
    double z = w[d];
    for (int j = 0; j < d; ++j) z += w[j] * x[j];
    if (z > best_logit) {
      best_logit = z;
      best = c;
    }
  }
  return best;
}

double accuracy(const ModelSpec& spec, const ParamVector& params,
                const LabeledDataset& data) {
  check_dims(spec, params, data);
  const std::size_t n = data.size();
  std::size_t correct = 0;
  if (spec.kind == ModelKind::scalar_mean) {
    for (double z : data.targets)
      if (std::abs(params[0] - z) <= 1.0) ++correct;
  } else {
    for (std::size_t i = 0; i < n; ++i)
      if (predict_class(spec, params, data.row(i)) == data.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

std::string param_hash(const ParamVector& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : params.values) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof(double));
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 0x100000001b3ULL;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

EvalCounters eval_counters() {
  return EvalCounters{g_loss_evals.load(), g_gradient_evals.load()};
}

void reset_eval_counters() {
  g_loss_evals.store(0);
  g_gradient_evals.store(0);
}

}  // namespace tierfed
