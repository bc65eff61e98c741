#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"

#include "ibg/connectome.hpp"
#include "ibg/popgraph.hpp"

namespace ibg {

inline constexpr int kSchemaVersion = 1;

struct ModelDims {
  std::size_t embed_dim = 64;      // d
  std::size_t biomarker_dim = 32;  // d_T
  std::size_t gat_dim = 64;        // path representation width
  std::size_t attention_dim = 16;  // d_att
  std::size_t hetero_dim = 32;     // d_H
  double leaky_slope = 0.2;
};

struct LossWeights {
  double ib = 1.0;       // zeta, subject-level bottleneck
  double hetero = 1.0;   // omega, population objective
  double structural = 0.1;
  double sparsity = 0.01;
  double mi = 0.1;
};

struct TrainSettings {
  double lr = 0.01;
  double weight_decay = 5e-3;
  int max_epochs = 300;
  int patience = 30;
  double dropout = 0.5;
  double edge_dropout = 0.5;
  double beta = 0.8;         // subject-level compression weight
  double beta_hetero = 0.5;  // population-level compression weight
  LossWeights weights;
  int warmup_epochs = 50;
  int graph_refresh = 50;
  int folds = 10;
  int dv_inner_steps = 5;
  double dv_lr = 1e-3;
  std::size_t dv_hidden = 32;
  bool disable_global_attention = false;  // forces the attention mix to 0
  bool infer_sampling = false;            // sample instead of mean at inference
};

struct RunConfig {
  std::string preset;  // empty, "abide-like", or "adhd-like"
  std::uint64_t seed = 7;
  int jobs = 1;
  ConnectomeConfig connectome;
  PopGraphConfig popgraph;
  ModelDims model;
  TrainSettings train;
};

RunConfig default_run_config();

// Named beta presets; throws ValidationError on unknown names.
void apply_preset(RunConfig& cfg, const std::string& name);

// Strict parse: unknown keys are rejected, all values validated.
RunConfig config_from_json(const nlohmann::ordered_json& j);

// Fully explicit echo; reloading it reproduces the run.
nlohmann::ordered_json config_to_json(const RunConfig& cfg);

void validate_config(const RunConfig& cfg);

}  // namespace ibg
