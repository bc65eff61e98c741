#include "ibg/config.hpp"

#include <set>

#include "ibg/error.hpp"

namespace ibg {

using nlohmann::ordered_json;

RunConfig default_run_config() { return RunConfig{}; }

void apply_preset(RunConfig& cfg, const std::string& name) {
  if (name == "abide-like") {
    cfg.train.beta = 0.8;
    cfg.train.beta_hetero = 0.5;
  } else if (name == "adhd-like") {
    cfg.train.beta = 1.0;
    cfg.train.beta_hetero = 0.8;
  } else {
    throw ValidationError("unknown preset '" + name + "' (expected abide-like or adhd-like)");
  }
  cfg.preset = name;
}

namespace {

void expect_keys(const ordered_json& j, const std::string& where,
                 const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ValidationError("config: '" + where + "' must be an object");
  for (const auto& [key, _] : j.items()) {
    if (allowed.count(key) == 0) {
      throw ValidationError("config: unknown key '" + where + "." + key + "'");
    }
  }
}

template <typename T>
void read_into(const ordered_json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

RunConfig config_from_json(const ordered_json& j) {
  RunConfig cfg;
  expect_keys(j, "", {"schema_version", "preset", "seed", "jobs", "connectome", "popgraph",
                      "model", "train"});
  if (j.contains("schema_version") && j.at("schema_version").get<int>() != kSchemaVersion) {
    throw ValidationError("config: unsupported schema_version");
  }
  if (j.contains("preset") && !j.at("preset").get<std::string>().empty()) {
    apply_preset(cfg, j.at("preset").get<std::string>());
  }
  read_into(j, "seed", cfg.seed);
  read_into(j, "jobs", cfg.jobs);

  if (j.contains("connectome")) {
    const auto& c = j.at("connectome");
    expect_keys(c, "connectome", {"keep_fraction", "clamp_eps", "feature_mode"});
    read_into(c, "keep_fraction", cfg.connectome.keep_fraction);
    read_into(c, "clamp_eps", cfg.connectome.clamp_eps);
    if (c.contains("feature_mode")) {
      const std::string mode = c.at("feature_mode").get<std::string>();
      if (mode == "fc-profile") {
        cfg.connectome.feature_mode = FeatureMode::FcProfile;
      } else if (mode == "timeseries") {
        cfg.connectome.feature_mode = FeatureMode::RawTimeseries;
      } else {
        throw ValidationError("config: feature_mode must be fc-profile or timeseries");
      }
    }
  }

  if (j.contains("popgraph")) {
    const auto& p = j.at("popgraph");
    expect_keys(p, "popgraph", {"tau_age", "sigma_age", "distance", "sigma_sim"});
    read_into(p, "tau_age", cfg.popgraph.compat.tau_age);
    read_into(p, "sigma_age", cfg.popgraph.compat.sigma_age);
    if (p.contains("distance")) {
      const std::string d = p.at("distance").get<std::string>();
      if (d == "euclidean") {
        cfg.popgraph.metric = DistanceMetric::Euclidean;
      } else if (d == "cosine") {
        cfg.popgraph.metric = DistanceMetric::Cosine;
      } else {
        throw ValidationError("config: distance must be euclidean or cosine");
      }
    }
    if (p.contains("sigma_sim") && !p.at("sigma_sim").is_null()) {
      cfg.popgraph.sigma_sim_override = p.at("sigma_sim").get<double>();
    }
  }

  if (j.contains("model")) {
    const auto& m = j.at("model");
    expect_keys(m, "model",
                {"embed_dim", "biomarker_dim", "gat_dim", "attention_dim", "hetero_dim",
                 "leaky_slope"});
    read_into(m, "embed_dim", cfg.model.embed_dim);
    read_into(m, "biomarker_dim", cfg.model.biomarker_dim);
    read_into(m, "gat_dim", cfg.model.gat_dim);
    read_into(m, "attention_dim", cfg.model.attention_dim);
    read_into(m, "hetero_dim", cfg.model.hetero_dim);
    read_into(m, "leaky_slope", cfg.model.leaky_slope);
  }

  if (j.contains("train")) {
    const auto& t = j.at("train");
    expect_keys(t, "train",
                {"lr", "weight_decay", "max_epochs", "patience", "dropout", "edge_dropout",
                 "beta", "beta_hetero", "weight_ib", "weight_hetero", "weight_struct",
                 "weight_sparse", "weight_mi", "warmup_epochs", "graph_refresh", "folds",
                 "dv_inner_steps", "dv_lr", "dv_hidden", "disable_global_attention",
                 "infer_sampling"});
    read_into(t, "lr", cfg.train.lr);
    read_into(t, "weight_decay", cfg.train.weight_decay);
    read_into(t, "max_epochs", cfg.train.max_epochs);
    read_into(t, "patience", cfg.train.patience);
    read_into(t, "dropout", cfg.train.dropout);
    read_into(t, "edge_dropout", cfg.train.edge_dropout);
    read_into(t, "beta", cfg.train.beta);
    read_into(t, "beta_hetero", cfg.train.beta_hetero);
    read_into(t, "weight_ib", cfg.train.weights.ib);
    read_into(t, "weight_hetero", cfg.train.weights.hetero);
    read_into(t, "weight_struct", cfg.train.weights.structural);
    read_into(t, "weight_sparse", cfg.train.weights.sparsity);
    read_into(t, "weight_mi", cfg.train.weights.mi);
    read_into(t, "warmup_epochs", cfg.train.warmup_epochs);
    read_into(t, "graph_refresh", cfg.train.graph_refresh);
    read_into(t, "folds", cfg.train.folds);
    read_into(t, "dv_inner_steps", cfg.train.dv_inner_steps);
    read_into(t, "dv_lr", cfg.train.dv_lr);
    read_into(t, "dv_hidden", cfg.train.dv_hidden);
    read_into(t, "disable_global_attention", cfg.train.disable_global_attention);
    read_into(t, "infer_sampling", cfg.train.infer_sampling);
  }

  validate_config(cfg);
  return cfg;
}

nlohmann::ordered_json config_to_json(const RunConfig& cfg) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["preset"] = cfg.preset;
  j["seed"] = cfg.seed;
  j["jobs"] = cfg.jobs;
  j["connectome"] = {
      {"keep_fraction", cfg.connectome.keep_fraction},
      {"clamp_eps", cfg.connectome.clamp_eps},
      {"feature_mode",
       cfg.connectome.feature_mode == FeatureMode::FcProfile ? "fc-profile" : "timeseries"},
  };
  j["popgraph"] = {
      {"tau_age", cfg.popgraph.compat.tau_age},
      {"sigma_age", cfg.popgraph.compat.sigma_age},
      {"distance", cfg.popgraph.metric == DistanceMetric::Euclidean ? "euclidean" : "cosine"},
      {"sigma_sim",
       cfg.popgraph.sigma_sim_override ? ordered_json(*cfg.popgraph.sigma_sim_override)
                                       : ordered_json(nullptr)},
  };
  j["model"] = {
      {"embed_dim", cfg.model.embed_dim},       {"biomarker_dim", cfg.model.biomarker_dim},
      {"gat_dim", cfg.model.gat_dim},           {"attention_dim", cfg.model.attention_dim},
      {"hetero_dim", cfg.model.hetero_dim},     {"leaky_slope", cfg.model.leaky_slope},
  };
  j["train"] = {
      {"lr", cfg.train.lr},
      {"weight_decay", cfg.train.weight_decay},
      {"max_epochs", cfg.train.max_epochs},
      {"patience", cfg.train.patience},
      {"dropout", cfg.train.dropout},
      {"edge_dropout", cfg.train.edge_dropout},
      {"beta", cfg.train.beta},
      {"beta_hetero", cfg.train.beta_hetero},
      {"weight_ib", cfg.train.weights.ib},
      {"weight_hetero", cfg.train.weights.hetero},
      {"weight_struct", cfg.train.weights.structural},
      {"weight_sparse", cfg.train.weights.sparsity},
      {"weight_mi", cfg.train.weights.mi},
      {"warmup_epochs", cfg.train.warmup_epochs},
      {"graph_refresh", cfg.train.graph_refresh},
      {"folds", cfg.train.folds},
      {"dv_inner_steps", cfg.train.dv_inner_steps},
      {"dv_lr", cfg.train.dv_lr},
      {"dv_hidden", cfg.train.dv_hidden},
      {"disable_global_attention", cfg.train.disable_global_attention},
      {"infer_sampling", cfg.train.infer_sampling},
  };
  return j;
}

void validate_config(const RunConfig& cfg) {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw ValidationError(std::string("config: ") + name + " must be positive");
  };
  auto nonneg = [](double v, const char* name) {
    if (v < 0.0) throw ValidationError(std::string("config: ") + name + " must be >= 0");
  };
  positive(cfg.connectome.keep_fraction, "connectome.keep_fraction");
  if (cfg.connectome.keep_fraction > 1.0) {
    throw ValidationError("config: connectome.keep_fraction must be in (0, 1]");
  }
  positive(cfg.connectome.clamp_eps, "connectome.clamp_eps");
  positive(cfg.popgraph.compat.tau_age, "popgraph.tau_age");
  positive(cfg.popgraph.compat.sigma_age, "popgraph.sigma_age");
  nonneg(cfg.train.lr, "train.lr");  // lr 0 is legal: the optimizer step is the identity
  nonneg(cfg.train.weight_decay, "train.weight_decay");
  if (cfg.train.max_epochs < 1) throw ValidationError("config: train.max_epochs must be >= 1");
  if (cfg.train.patience < 1) throw ValidationError("config: train.patience must be >= 1");
  if (cfg.train.dropout < 0.0 || cfg.train.dropout >= 1.0 || cfg.train.edge_dropout < 0.0 ||
      cfg.train.edge_dropout >= 1.0) {
    throw ValidationError("config: dropout rates must be in [0, 1)");
  }
  nonneg(cfg.train.beta, "train.beta");
  nonneg(cfg.train.beta_hetero, "train.beta_hetero");
  nonneg(cfg.train.weights.ib, "train.weight_ib");
  nonneg(cfg.train.weights.hetero, "train.weight_hetero");
  nonneg(cfg.train.weights.structural, "train.weight_struct");
  nonneg(cfg.train.weights.sparsity, "train.weight_sparse");
  nonneg(cfg.train.weights.mi, "train.weight_mi");
  if (cfg.train.warmup_epochs < 1) {
    throw ValidationError("config: train.warmup_epochs must be >= 1");
  }
  if (cfg.train.graph_refresh < 1) {
    throw ValidationError("config: train.graph_refresh must be >= 1");
  }
  if (cfg.train.folds < 2) throw ValidationError("config: train.folds must be >= 2");
  if (cfg.train.dv_inner_steps < 0) {
    throw ValidationError("config: train.dv_inner_steps must be >= 0");
  }
  positive(cfg.train.dv_lr, "train.dv_lr");
  if (cfg.model.biomarker_dim < 2) {
    throw ValidationError("config: model.biomarker_dim must be >= 2");
  }
  if (cfg.model.attention_dim < 2) {
    throw ValidationError("config: model.attention_dim must be >= 2");
  }
  if (cfg.model.hetero_dim < 2) throw ValidationError("config: model.hetero_dim must be >= 2");
  if (cfg.jobs < 1) throw ValidationError("config: jobs must be >= 1");
}

}  // namespace ibg
