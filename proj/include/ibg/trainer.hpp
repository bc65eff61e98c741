#pragma once

#include <array>
#include <memory>
#include <vector>

#include "ibg/config.hpp"
#include "ibg/metrics.hpp"
#include "ibg/model.hpp"

namespace ibg {

// Eq-style composite: L_cls + zeta * L_ib + omega * L_hg.
double total_loss(double l_cls, double l_ib, double l_hg, double zeta, double omega);

struct EpochRecord {
  int epoch = 0;
  int phase = 1;
  double total = 0.0, cls = 0.0;
  double subject_ib = 0.0, subject_kl = 0.0;
  double population_ib = 0.0, population_kl = 0.0;
  double structural = 0.0, sparsity = 0.0, mi_weighted = 0.0;
  std::array<double, 4> alpha{};
  std::array<double, 4> mi{};
  double val_loss = 0.0;
};

struct TrainOutcome {
  std::unique_ptr<Model> model;
  PopulationState pop;
  std::vector<EpochRecord> history;
  int best_epoch = -1;
};

// Two-phase training: warm-up on the subject objective, then the full
// composite with population graphs rebuilt every graph_refresh epochs.
// Early stopping monitors the validation loss of the final phase and
// restores the best checkpoint (parameters and population state).
TrainOutcome train_model(const CohortData& cohort, const RunConfig& cfg,
                         const std::vector<std::uint8_t>& train_mask,
                         const std::vector<std::uint8_t>& val_mask, std::uint64_t seed);

struct FoldMetrics {
  int fold = 0;
  Metrics test;
};

struct CvOutcome {
  std::vector<FoldMetrics> folds;
  Metrics mean, stddev;
};

// Stratified k-fold cross-validation; folds run independently (cfg.jobs
// worker threads) and aggregate in fold order.
CvOutcome cross_validate(const CohortData& cohort, const RunConfig& cfg);

}  // namespace ibg
