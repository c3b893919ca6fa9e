#include "tierfed/config.hpp"

#include <fstream>
#include <set>

#include "tierfed/rng.hpp"

namespace tierfed {

namespace {

class Section {
 public:
  Section(nlohmann::json j, std::string path)
      : json_(std::move(j)), path_(std::move(path)) {
    if (!json_.is_object()) throw ConfigError(path_, "must be an object");
  }

  bool has(const std::string& key) const { return json_.contains(key); }

  template <typename T>
  T get(const std::string& key, T fallback) const {
    if (!json_.contains(key)) return fallback;
    return read<T>(key);
  }

  template <typename T>
  T require(const std::string& key) const {
    if (!json_.contains(key)) throw ConfigError(field(key), "missing required key");
    return read<T>(key);
  }

  void allow_only(std::set<std::string> keys) const {
    for (const auto& [key, value] : json_.items()) {
      if (!keys.count(key)) throw ConfigError(field(key), "unknown key");
    }
  }

  std::string field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  template <typename T>
  T read(const std::string& key) const {
    try {
      return json_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(field(key), "wrong type");
    }
  }

  nlohmann::json json_;
  std::string path_;
};

nlohmann::json object_or_empty(const nlohmann::json& j, const std::string& key) {
  if (!j.contains(key)) return nlohmann::json::object();
  return j.at(key);
}

PartitionKind parse_partition(const std::string& name, const std::string& field) {
  if (name == "ratio") return PartitionKind::ratio;
  if (name == "linear") return PartitionKind::linear;
  if (name == "random") return PartitionKind::random_mixture;
  throw ConfigError(field, "expected one of ratio|linear|random");
}

const char* partition_name(PartitionKind kind) {
  switch (kind) {
    case PartitionKind::ratio: return "ratio";
    case PartitionKind::linear: return "linear";
    case PartitionKind::random_mixture: return "random";
  }
  return "ratio";
}

}  // namespace

RunConfig default_run_config() {
  RunConfig config;
  config.rounds = 30;
  config.seed = 42;
  config.model = {ModelKind::softmax, 6, 4};
  config.population.type = PopulationType::mixture;
  config.population.mixture = MixtureSpec{};
  config.population.mixture.num_clients = 50;
  config.selection = {22, 3, 2};
  config.bids.threshold = 0.5;
  return config;
}

RunConfig parse_run_config(const nlohmann::json& document) {
  Section root(document, "");
  root.allow_only({"run", "model", "population", "training", "incentive",
                   "selection", "bids"});
  RunConfig config;

  {
    Section run(object_or_empty(document, "run"), "run");
    run.allow_only({"rounds", "pretrain_rounds", "seed", "threads",
                    "shapley_variant", "server_eval_samples",
                    "pretrain_response_threshold"});
    config.rounds = run.get<int>("rounds", 30);
    config.pretrain_rounds = run.get<int>("pretrain_rounds", 0);
    config.seed = run.get<std::uint64_t>("seed", 42);
    config.threads = run.get<int>("threads", 1);
    config.server_eval_samples = run.get<int>("server_eval_samples", 200);
    config.pretrain_response_threshold =
        run.get<double>("pretrain_response_threshold", 1e18);
    const std::string variant = run.get<std::string>("shapley_variant", "normalized");
    if (variant == "normalized") {
      config.shapley_variant = ShapleyVariant::normalized;
    } else if (variant == "unnormalized") {
      config.shapley_variant = ShapleyVariant::unnormalized;
    } else {
      throw ConfigError("run.shapley_variant",
                        "expected normalized|unnormalized");
    }
  }
  {
    Section population(object_or_empty(document, "population"), "population");
    const std::string type = population.get<std::string>("type", "mixture");
    if (type == "mixture") {
      population.allow_only({"type", "num_distributions", "partition", "ratio_a",
                             "ratio_b", "num_clients", "train_samples_per_client",
                             "test_samples_per_client", "feature_dim",
                             "classes_per_distribution", "inverse_test",
                             "center_scale", "cluster_stddev"});
      config.population.type = PopulationType::mixture;
      MixtureSpec& m = config.population.mixture;
      m.num_distributions = population.get<int>("num_distributions", 2);
      m.partition = parse_partition(population.get<std::string>("partition", "ratio"),
                                    "population.partition");
      m.ratio_a = population.get<int>("ratio_a", 10);
      m.ratio_b = population.get<int>("ratio_b", 90);
      m.num_clients = population.get<int>("num_clients", 50);
      m.train_samples_per_client = population.get<int>("train_samples_per_client", 200);
      m.test_samples_per_client = population.get<int>("test_samples_per_client", 100);
      m.feature_dim = population.get<int>("feature_dim", 6);
      m.classes_per_distribution = population.get<int>("classes_per_distribution", 2);
      m.inverse_test = population.get<bool>("inverse_test", false);
      m.center_scale = population.get<double>("center_scale", 3.0);
      m.cluster_stddev = population.get<double>("cluster_stddev", 1.0);
      m.seed = derive_seed(config.seed, "population");
    } else if (type == "gaussian") {
      population.allow_only({"type", "tier1_clients", "tier2_clients", "beta1",
                             "beta2", "tau_sq", "sigma_sq", "samples_per_client"});
      config.population.type = PopulationType::gaussian;
      GaussianPopulationSpec& g = config.population.gaussian;
      g.tier1_clients = population.get<int>("tier1_clients", 10);
      g.tier2_clients = population.get<int>("tier2_clients", 10);
      g.beta1 = population.get<double>("beta1", 0.0);
      g.beta2 = population.get<double>("beta2", 5.0);
      g.tau_sq = population.get<double>("tau_sq", 0.1);
      g.sigma_sq = population.get<double>("sigma_sq", 1.0);
      g.samples_per_client = population.get<int>("samples_per_client", 20);
      g.seed = derive_seed(config.seed, "population");
    } else {
      throw ConfigError("population.type", "expected mixture|gaussian");
    }
  }
  {
    Section model(object_or_empty(document, "model"), "model");
    model.allow_only({"kind", "feature_dim", "num_classes"});
    const bool mixture = config.population.type == PopulationType::mixture;
    const std::string kind =
        model.get<std::string>("kind", mixture ? "softmax" : "scalar_mean");
    if (kind == "softmax") {
      config.model.kind = ModelKind::softmax;
      config.model.feature_dim =
          model.get<int>("feature_dim", config.population.mixture.feature_dim);
      config.model.num_classes =
          model.get<int>("num_classes", config.population.mixture.total_classes());
    } else if (kind == "scalar_mean") {
      config.model = {ModelKind::scalar_mean, 0, 0};
    } else {
      throw ConfigError("model.kind", "expected softmax|scalar_mean");
    }
  }
  {
    Section training(object_or_empty(document, "training"), "training");
    training.allow_only({"epochs", "learning_rate", "batch_size"});
    config.training.epochs = training.get<int>("epochs", 2);
    config.training.learning_rate = training.get<double>("learning_rate", 0.05);
    config.training.batch_size = training.get<int>("batch_size", 32);
  }
  {
    Section incentive(object_or_empty(document, "incentive"), "incentive");
    incentive.allow_only({"bid_amount", "max_reimbursable_fraction",
                          "accuracy_saturation", "initial_balance"});
    config.incentive.bid_amount = incentive.get<double>("bid_amount", 1.0);
    config.incentive.max_reimbursable_fraction =
        incentive.get<double>("max_reimbursable_fraction", 0.5);
    config.incentive.accuracy_saturation =
        incentive.get<double>("accuracy_saturation", 0.2);
    config.incentive.initial_balance = incentive.get<double>("initial_balance", 100.0);
  }
  {
    Section selection(object_or_empty(document, "selection"), "selection");
    selection.allow_only({"merit_count", "random_count", "num_tiers"});
    config.selection.merit_count = selection.get<int>("merit_count", 22);
    config.selection.random_count = selection.get<int>("random_count", 3);
    config.selection.num_tiers = selection.get<int>("num_tiers", 2);
  }
  {
    Section bids(object_or_empty(document, "bids"), "bids");
    bids.allow_only({"mode", "threshold"});
    const std::string mode = bids.get<std::string>("mode", "incentive");
    if (mode == "incentive") {
      config.bids.mode = BidMode::incentive;
    } else if (mode == "random") {
      config.bids.mode = BidMode::random_choice;
    } else {
      throw ConfigError("bids.mode", "expected incentive|random");
    }
    config.bids.threshold =
        bids.get<double>("threshold", 1.0 / config.selection.num_tiers);
  }

  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    // Module validation messages already lead with the field area.
    throw ConfigError("config", e.what());
  }
  return config;
}

nlohmann::json run_config_to_json(const RunConfig& config) {
  nlohmann::json j;
  j["run"] = {{"rounds", config.rounds},
              {"pretrain_rounds", config.pretrain_rounds},
              {"seed", config.seed},
              {"threads", config.threads},
              {"shapley_variant", config.shapley_variant == ShapleyVariant::normalized
                                      ? "normalized"
                                      : "unnormalized"},
              {"server_eval_samples", config.server_eval_samples},
              {"pretrain_response_threshold", config.pretrain_response_threshold}};
  if (config.population.type == PopulationType::mixture) {
    const MixtureSpec& m = config.population.mixture;
    j["population"] = {{"type", "mixture"},
                       {"num_distributions", m.num_distributions},
                       {"partition", partition_name(m.partition)},
                       {"ratio_a", m.ratio_a},
                       {"ratio_b", m.ratio_b},
                       {"num_clients", m.num_clients},
                       {"train_samples_per_client", m.train_samples_per_client},
                       {"test_samples_per_client", m.test_samples_per_client},
                       {"feature_dim", m.feature_dim},
                       {"classes_per_distribution", m.classes_per_distribution},
                       {"inverse_test", m.inverse_test},
                       {"center_scale", m.center_scale},
                       {"cluster_stddev", m.cluster_stddev}};
  } else {
    const GaussianPopulationSpec& g = config.population.gaussian;
    j["population"] = {{"type", "gaussian"},
                       {"tier1_clients", g.tier1_clients},
                       {"tier2_clients", g.tier2_clients},
                       {"beta1", g.beta1},
                       {"beta2", g.beta2},
                       {"tau_sq", g.tau_sq},
                       {"sigma_sq", g.sigma_sq},
                       {"samples_per_client", g.samples_per_client}};
  }
  j["model"] = {{"kind", config.model.kind == ModelKind::softmax ? "softmax"
                                                                 : "scalar_mean"},
                {"feature_dim", config.model.feature_dim},
                {"num_classes", config.model.num_classes}};
  j["training"] = {{"epochs", config.training.epochs},
                   {"learning_rate", config.training.learning_rate},
                   {"batch_size", config.training.batch_size}};
  j["incentive"] = {
      {"bid_amount", config.incentive.bid_amount},
      {"max_reimbursable_fraction", config.incentive.max_reimbursable_fraction},
      {"accuracy_saturation", config.incentive.accuracy_saturation},
      {"initial_balance", config.incentive.initial_balance}};
  j["selection"] = {{"merit_count", config.selection.merit_count},
                    {"random_count", config.selection.random_count},
                    {"num_tiers", config.selection.num_tiers}};
  j["bids"] = {{"mode", config.bids.mode == BidMode::incentive ? "incentive"
                                                               : "random"},
               {"threshold", config.bids.threshold}};
  return j;
}

void apply_override(nlohmann::json& document, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError(assignment, "override must look like section.key=value");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);

  nlohmann::json value;
  try {
    value = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception&) {
    value = text;  // plain string
  }

  nlohmann::json* node = &document;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot - start);
    if (key.empty()) throw ConfigError(path, "empty key in override path");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

RunConfig load_run_config(const std::string& path,
                          const std::vector<std::string>& overrides,
                          std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open config file");
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  nlohmann::json document;
  try {
    document = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < e.byte && i < text.size(); ++i)
      if (text[i] == '\n') ++line;
    throw ConfigError(path + ":" + std::to_string(line), e.what());
  }
  for (const auto& assignment : overrides) apply_override(document, assignment);
  if (seed_override) document["run"]["seed"] = *seed_override;
  return parse_run_config(document);
}

nlohmann::json build_summary(const RunConfig& config, const RunResult& result) {
  nlohmann::json summary;
  summary["config"] = run_config_to_json(config);
  summary["round_count"] = trace_round_count(result.trace);
  summary["num_clients"] = config.population.num_clients();
  summary["seed"] = config.seed;
  summary["aborted"] = result.aborted;
  if (result.aborted) summary["abort_message"] = result.abort_message;
  summary["mean_personalized_accuracy"] = result.mean_personalized_accuracy;

  nlohmann::json models = nlohmann::json::array();
  for (const auto& m : result.tier_models) models.push_back(m.values);
  summary["final_tier_models"] = std::move(models);

  Millitokens minted = 0;
  Millitokens final_pool = 0;
  for (const auto& e : result.trace.journal)
    if (e.type == EntryType::mint) minted += e.amount;
  if (!result.trace.rounds.empty()) {
    const int last = result.trace.rounds.back().round;
    for (const auto& r : result.trace.rounds)
      if (r.round == last) final_pool += r.carry;
  }
  summary["ledger"] = {{"minted_tokens", to_tokens(minted)},
                       {"final_pool_tokens", to_tokens(final_pool)}};
  summary["verdicts"] = nlohmann::json::array();
  return summary;
}

}  // namespace tierfed
