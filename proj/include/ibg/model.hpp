#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "ibg/config.hpp"
#include "ibg/connectome.hpp"
#include "ibg/graphformer.hpp"
#include "ibg/hetero.hpp"
#include "ibg/popgraph.hpp"
#include "ibg/wl.hpp"

namespace ibg {

// One subject's model-ready inputs.
struct SubjectData {
  std::string id;
  int label = 0;
  Tensor features;   // |V| x F
  Tensor adjacency;  // |V| x |V| sparsified, nonnegative, zero diagonal
};

struct CohortData {
  std::vector<SubjectData> subjects;
  std::vector<Demographics> demos;
  std::vector<std::string> roi_names;
  Tensor demo_features;  // N x demo_dim, built by encode_demographics
  std::size_t n_sites = 0;
  double age_min = 0.0, age_max = 0.0;

  std::size_t size() const { return subjects.size(); }
  std::vector<int> labels() const;
  std::vector<std::string> ids() const;
};

// one-hot site/sex/handedness plus min-max scaled age; missing fields are
// zeros (age midpoint)
Tensor encode_demographics(const std::vector<Demographics>& demos, std::size_t n_sites,
                           double age_min, double age_max);

// Fills demo_features / n_sites / age range from the cohort's own statistics.
void finalize_cohort(CohortData& cohort);

// Population-graph state rebuilt on the refresh schedule; adjacencies, S and
// the MI estimates enter the loss as constants.
struct PopulationState {
  MetaPathGraphSet graphs;
  wl::EquivalenceMatrix equivalence;
  std::array<double, 4> mi{};
  bool ready = false;
};

struct Model {
  ModelDims dims;
  std::size_t feature_dim = 0;
  std::size_t demo_dim = 0;
  ad::ParamSet params;
  GraphFormerParams gf;
  SubjectEncoderParams subject_enc;
  std::array<GatParams, 4> gat;
  MetaPathAttentionParams att;
  PopulationEncoderParams pop_enc;
  std::array<std::unique_ptr<DvEstimator>, 4> dv;

  static std::unique_ptr<Model> create(const ModelDims& dims, std::size_t feature_dim,
                                       std::size_t demo_dim, const TrainSettings& train,
                                       std::uint64_t seed);

  std::vector<Tensor> snapshot_values() const;
  void restore_values(const std::vector<Tensor>& snap);
};

// Per-epoch stochastic inputs; empty containers mean "inference mode" /
// "no dropout".
struct NoiseBank {
  std::vector<Tensor> subject_eps;     // per subject, 1 x d_T
  Tensor population_eps;               // N x d_H
  std::vector<Tensor> z0_masks;        // per subject, |V| x d
  std::vector<Tensor> pooled_masks;    // per subject, 1 x d
  std::vector<Tensor> adjacencies;     // per subject, post edge-dropout
  bool train_mode = false;
};

NoiseBank make_train_noise(const CohortData& cohort, const ModelDims& dims, double dropout,
                           double edge_dropout, Rng& rng);
NoiseBank make_infer_noise();  // all-empty: mean encodings, no dropout

// Individual stage: per-subject encodings, the stacked biomarker matrix, and
// (when a population state is given) the per-path GAT representations.
struct StageOne {
  std::vector<SubjectEncoding> subjects;
  ad::Var reps;  // N x d_T
  std::array<ad::Var, 4> z_paths;
  bool has_paths = false;
};

StageOne forward_individual(ad::Tape& t, Model& m, const CohortData& cohort,
                            const NoiseBank& bank, const PopulationState* pop,
                            const TrainSettings& train);

struct LossVars {
  ad::Var total;
  ad::Var cls;            // final-classifier cross-entropy
  ad::Var subject_ib;     // mean over masked subjects of nll + beta kl
  ad::Var subject_kl;     // mean masked subject KL (reported)
  ad::Var population_ib;  // nll + beta_H kl over masked nodes
  ad::Var population_kl;
  ad::Var structural, sparsity, mi_weighted;
  ad::Var alpha;       // 1 x 4 when phase 2, invalid in warm-up
  ad::Var pop_logits;  // N x 2 when phase 2
  bool has_population = false;
};

// Warm-up objective: biomarker-head cross-entropy + zeta * subject IB loss.
LossVars build_warmup_loss(ad::Tape& t, Model& m, const StageOne& s1,
                           const std::vector<int>& labels,
                           const std::vector<std::uint8_t>& mask, const TrainSettings& train);

// Full objective on top of a completed StageOne.
LossVars finish_total_loss(ad::Tape& t, Model& m, const StageOne& s1, const CohortData& cohort,
                           const PopulationState& pop, const NoiseBank& bank,
                           const std::vector<int>& labels,
                           const std::vector<std::uint8_t>& mask, const TrainSettings& train);

// Convenience single-shot builder (grad checks, evaluation).
LossVars build_total_loss(ad::Tape& t, Model& m, const CohortData& cohort,
                          const PopulationState& pop, const NoiseBank& bank,
                          const std::vector<int>& labels, const std::vector<std::uint8_t>& mask,
                          const TrainSettings& train);

// Deterministic inference pass.
struct InferenceResult {
  std::vector<BiomarkerRep> reps;
  Tensor rep_matrix;            // N x d_T
  Tensor z_h;                   // N x gat_dim
  Tensor scores;                // N x 1, P(class 1) from the population head
  std::array<double, 4> alpha{};
};

// Biomarker means only (used for population-graph construction).
std::vector<BiomarkerRep> infer_biomarkers(Model& m, const CohortData& cohort,
                                           const TrainSettings& train);
Tensor rep_matrix_of(const std::vector<BiomarkerRep>& reps);

// Full pass including the population head; pop must be ready.
// zero_path, when in [0,4), ablates that meta-path's adjacency.
// sample_rng enables reparameterized sampling at inference when the
// infer_sampling flag is set; the default is the posterior mean.
InferenceResult infer(Model& m, const CohortData& cohort, const PopulationState& pop,
                      const TrainSettings& train, int zero_path = -1,
                      Rng* sample_rng = nullptr);

// Rebuild meta-path graphs + equivalence from current biomarker means.
PopulationState build_population_state(Model& m, const CohortData& cohort,
                                       const PopGraphConfig& pg, const TrainSettings& train);

}  // namespace ibg
