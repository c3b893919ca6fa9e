#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tierfed/checks.hpp"
#include "tierfed/config.hpp"
#include "tierfed/properties.hpp"
#include "tierfed/theory.hpp"

namespace py = pybind11;
using namespace tierfed;

namespace {

ModelSpec make_spec(const std::string& kind, int feature_dim, int num_classes) {
  ModelSpec spec;
  if (kind == "scalar_mean") {
    spec = {ModelKind::scalar_mean, 0, 0};
  } else if (kind == "softmax") {
    spec = {ModelKind::softmax, feature_dim, num_classes};
  } else {
    throw std::invalid_argument("kind must be scalar_mean or softmax");
  }
  spec.validate();
  return spec;
}

LabeledDataset classification_dataset(const std::vector<std::vector<double>>& features,
                                      const std::vector<int>& labels) {
  if (features.size() != labels.size())
    throw std::invalid_argument("features and labels differ in length");
  LabeledDataset data;
  if (!features.empty()) data.feature_dim = static_cast<int>(features.front().size());
  for (std::size_t i = 0; i < features.size(); ++i)
    data.append_class_point(features[i], labels[i]);
  return data;
}

LabeledDataset regression_dataset(const std::vector<double>& targets) {
  LabeledDataset data;
  data.targets = targets;
  return data;
}

ShapleyVariant parse_variant(const std::string& name) {
  if (name == "normalized") return ShapleyVariant::normalized;
  if (name == "unnormalized") return ShapleyVariant::unnormalized;
  throw std::invalid_argument("variant must be normalized or unnormalized");
}

std::vector<ClientUpdate> parse_updates(
    const std::vector<std::tuple<int, std::vector<double>, double>>& raw) {
  std::vector<ClientUpdate> updates;
  updates.reserve(raw.size());
  for (const auto& [id, params, weight] : raw)
    updates.push_back({id, ParamVector(params), weight});
  return updates;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "Tier-based personalized federated learning simulator with a token "
      "incentive economy: models, contribution estimates, the token ledger "
      "round loop, and the mean-estimation theory tools.";

  py::class_<ModelSpec>(m, "ModelSpec")
      .def(py::init(&make_spec), py::arg("kind"), py::arg("feature_dim") = 0,
           py::arg("num_classes") = 0)
      .def_property_readonly("param_dim", &ModelSpec::param_dim);

  py::class_<LabeledDataset>(m, "Dataset")
      .def_static("classification", &classification_dataset, py::arg("features"),
                  py::arg("labels"))
      .def_static("regression", &regression_dataset, py::arg("targets"))
      .def_property_readonly("size", [](const LabeledDataset& d) { return d.size(); });

  m.def(
      "loss",
      [](const ModelSpec& spec, const std::vector<double>& params,
         const LabeledDataset& data) {
        return loss(spec, ParamVector(params), data);
      },
      py::arg("spec"), py::arg("params"), py::arg("data"));
  m.def(
      "gradient",
      [](const ModelSpec& spec, const std::vector<double>& params,
         const LabeledDataset& data) {
        return gradient(spec, ParamVector(params), data).values;
      },
      py::arg("spec"), py::arg("params"), py::arg("data"));
  m.def(
      "train_local",
      [](const ModelSpec& spec, const std::vector<double>& params,
         const LabeledDataset& data, int epochs, double lr, int batch_size,
         std::uint64_t seed) {
        return train_local(spec, ParamVector(params), data, epochs, lr, batch_size,
                           seed)
            .values;
      },
      py::arg("spec"), py::arg("params"), py::arg("data"), py::arg("epochs"),
      py::arg("lr"), py::arg("batch_size"), py::arg("seed"));
  m.def(
      "fedavg",
      [](const std::vector<std::pair<std::vector<double>, double>>& updates) {
        std::vector<std::pair<ParamVector, double>> typed;
        typed.reserve(updates.size());
        for (const auto& [params, weight] : updates)
          typed.push_back({ParamVector(params), weight});
        return fedavg(typed).values;
      },
      py::arg("updates"));
  m.def(
      "accuracy",
      [](const ModelSpec& spec, const std::vector<double>& params,
         const LabeledDataset& data) {
        return accuracy(spec, ParamVector(params), data);
      },
      py::arg("spec"), py::arg("params"), py::arg("data"));

  m.def(
      "estimate_shapley",
      [](const std::vector<double>& aggregate,
         const std::vector<std::tuple<int, std::vector<double>, double>>& updates,
         const LabeledDataset& eval, const ModelSpec& spec,
         const std::string& variant) {
        const auto report = estimate_shapley(ParamVector(aggregate),
                                             parse_updates(updates), eval, spec,
                                             parse_variant(variant));
        return report.values;
      },
      py::arg("aggregate"), py::arg("updates"), py::arg("eval"), py::arg("spec"),
      py::arg("variant") = "normalized");
  m.def(
      "exact_shapley",
      [](const std::vector<std::tuple<int, std::vector<double>, double>>& updates,
         const std::vector<double>& prev_model, const LabeledDataset& eval,
         const ModelSpec& spec, const std::string& variant) {
        return exact_shapley(parse_updates(updates), ParamVector(prev_model), eval,
                             spec, parse_variant(variant));
      },
      py::arg("updates"), py::arg("prev_model"), py::arg("eval"), py::arg("spec"),
      py::arg("variant") = "normalized");

  py::class_<TheoryScenario>(m, "TheoryScenario")
      .def(py::init([](int tier1_clients, int tier2_clients, int samples, double sigma_sq,
                       double tau_sq, double beta1, double beta2, int replications,
                       std::uint64_t seed) {
             TheoryScenario s;
             s.tier1_clients = tier1_clients;
             s.tier2_clients = tier2_clients;
             s.common_samples = samples;
             s.sigma_sq = sigma_sq;
             s.tau_sq = tau_sq;
             s.beta1 = beta1;
             s.beta2 = beta2;
             s.replications = replications;
             s.seed = seed;
             s.validate();
             return s;
           }),
           py::arg("tier1_clients"), py::arg("tier2_clients"), py::arg("samples"),
           py::arg("sigma_sq") = 1.0, py::arg("tau_sq") = 0.0, py::arg("beta1") = 0.0,
           py::arg("beta2") = 0.0, py::arg("replications") = 1000,
           py::arg("seed") = 0);

  m.def(
      "closed_form_errors",
      [](const TheoryScenario& s, int client_index) {
        const auto e = closed_form_errors(s, client_index);
        return py::make_tuple(e.local, e.fl, e.tier);
      },
      py::arg("scenario"), py::arg("client_index") = 0);
  m.def("gain_threshold", &gain_threshold, py::arg("scenario"));
  m.def(
      "monte_carlo_errors",
      [](const TheoryScenario& s) {
        const auto mc = monte_carlo_errors(s);
        py::dict out;
        out["mean"] = py::make_tuple(mc.mean.local, mc.mean.fl, mc.mean.tier);
        out["standard_error"] =
            py::make_tuple(mc.standard_error.local, mc.standard_error.fl,
                           mc.standard_error.tier);
        out["replications"] = mc.replications;
        return out;
      },
      py::arg("scenario"));

  m.def(
      "generate_population_json",
      [](const std::string& spec_json) {
        const auto j = nlohmann::json::parse(spec_json);
        nlohmann::json doc{{"population", j}, {"run", {{"seed", j.value("seed", 0)}}}};
        const RunConfig config = parse_run_config(doc);
        return population_to_json(config.population.generate()).dump();
      },
      py::arg("spec_json"),
      "Generate a client population from a population config JSON string and "
      "return the replayable JSON layout.");

  m.def(
      "run_simulation",
      [](const std::string& config_json, const std::string& out_dir) {
        const RunConfig config = parse_run_config(nlohmann::json::parse(config_json));
        RunResult result = run(config);
        nlohmann::json summary = build_summary(config, result);
        for (const auto& v : check_all_properties(result.trace))
          summary["verdicts"].push_back(v.to_json());
        if (!out_dir.empty()) write_run_artifacts(out_dir, result.trace, summary);
        return summary.dump();
      },
      py::arg("config_json"), py::arg("out_dir") = "",
      "Run the simulator for a config JSON string; optionally write the trace "
      "artifacts; returns the summary JSON.");
  m.def(
      "run_baseline",
      [](const std::string& config_json, const std::string& kind) {
        const RunConfig config = parse_run_config(nlohmann::json::parse(config_json));
        if (kind == "local_only")
          return run_baseline(config, BaselineKind::local_only);
        if (kind == "global_fedavg")
          return run_baseline(config, BaselineKind::global_fedavg);
        throw std::invalid_argument("kind must be local_only or global_fedavg");
      },
      py::arg("config_json"), py::arg("kind"));

  m.def(
      "run_shapley_check",
      [](int instances, std::uint64_t seed) {
        ShapleyCheckConfig config;
        config.instances = instances;
        config.seed = seed;
        return run_shapley_check(config).to_json().dump();
      },
      py::arg("instances") = 200, py::arg("seed") = 1);
  m.def(
      "run_theory_check",
      [](int replications, std::uint64_t seed) {
        TheoryCheckConfig config;
        config.replications = replications;
        config.seed = seed;
        return run_theory_check(config).to_json().dump();
      },
      py::arg("replications") = 100000, py::arg("seed") = 7);
}
