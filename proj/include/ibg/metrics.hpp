#pragma once

#include <cstdint>
#include <vector>

namespace ibg {

struct Metrics {
  double acc = 0.0;
  double auc = 0.0;
  double f1 = 0.0;
};

// scores are P(class 1); ACC thresholds at 0.5 (argmax of the two-class
// head), AUC is the Mann-Whitney rank statistic with half credit for ties,
// F1 is computed on the positive class. Throws if the mask covers a single
// class (AUC undefined).
Metrics compute_metrics(const std::vector<double>& scores, const std::vector<int>& labels,
                        const std::vector<std::uint8_t>& mask);

struct FoldAssignment {
  std::vector<std::uint8_t> train, val, test;
};

// Stratified k folds with an (k-2):1:1 train/val/test rotation; fold i tests
// on chunk i and validates on chunk i+1. Class counts per chunk differ by at
// most one.
std::vector<FoldAssignment> stratified_kfold(const std::vector<int>& labels, int k,
                                             std::uint64_t seed);

// Single stratified split with the given validation fraction (no test set);
// used for the canonical full-cohort fit.
FoldAssignment stratified_holdout(const std::vector<int>& labels, double val_fraction,
                                  std::uint64_t seed);

}  // namespace ibg
