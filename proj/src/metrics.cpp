#include "ibg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ibg/error.hpp"
#include "ibg/rng.hpp"

namespace ibg {

Metrics compute_metrics(const std::vector<double>& scores, const std::vector<int>& labels,
                        const std::vector<std::uint8_t>& mask) {
  if (scores.size() != labels.size() || mask.size() != labels.size()) {
    throw ValidationError("compute_metrics: misaligned inputs");
  }
  std::size_t pos = 0, neg = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!mask[i]) continue;
    (labels[i] == 1 ? pos : neg) += 1;
  }
  if (pos == 0 || neg == 0) {
    throw ValidationError("compute_metrics: mask covers a single class, AUC undefined");
  }

  std::size_t correct = 0, total = 0;
  std::size_t tp = 0, fp = 0, fn = 0;
  double auc_pairs = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!mask[i]) continue;
    ++total;
    const int pred = scores[i] > 0.5 ? 1 : 0;
    if (pred == labels[i]) ++correct;
    if (pred == 1 && labels[i] == 1) ++tp;
    if (pred == 1 && labels[i] == 0) ++fp;
    if (pred == 0 && labels[i] == 1) ++fn;
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (!mask[j] || labels[j] != 0) continue;
      if (scores[i] > scores[j]) {
        auc_pairs += 1.0;
      } else if (scores[i] == scores[j]) {
        auc_pairs += 0.5;
      }
    }
  }

  Metrics m;
  m.acc = static_cast<double>(correct) / static_cast<double>(total);
  m.auc = auc_pairs / (static_cast<double>(pos) * static_cast<double>(neg));
  const double denom_p = static_cast<double>(tp + fp);
  const double denom_r = static_cast<double>(tp + fn);
  if (tp == 0) {
    m.f1 = 0.0;
  } else {
    const double precision = static_cast<double>(tp) / denom_p;
    const double recall = static_cast<double>(tp) / denom_r;
    m.f1 = 2.0 * precision * recall / (precision + recall);
  }
  return m;
}

namespace {

// per-class shuffled index chunks, sizes differing by at most one
std::vector<std::vector<std::size_t>> stratified_chunks(const std::vector<int>& labels, int k,
                                                        std::uint64_t seed) {
  std::vector<std::size_t> class0, class1;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) {
      class1.push_back(i);
    } else {
      class0.push_back(i);
    }
  }
  if (class0.size() < static_cast<std::size_t>(k) || class1.size() < static_cast<std::size_t>(k)) {
    throw ValidationError("stratified_kfold: a class has fewer members than folds (" +
                          std::to_string(class0.size()) + "/" + std::to_string(class1.size()) +
                          " vs k=" + std::to_string(k) + ")");
  }
  Rng r0(mix_seed(seed, 0xf01dULL));
  Rng r1(mix_seed(seed, 0xf01d + 1ULL));
  r0.shuffle(class0);
  r1.shuffle(class1);

  std::vector<std::vector<std::size_t>> chunks(k);
  for (std::size_t i = 0; i < class0.size(); ++i) chunks[i % k].push_back(class0[i]);
  for (std::size_t i = 0; i < class1.size(); ++i) chunks[i % k].push_back(class1[i]);
  return chunks;
}

}  // namespace

std::vector<FoldAssignment> stratified_kfold(const std::vector<int>& labels, int k,
                                             std::uint64_t seed) {
  if (k < 3) throw ValidationError("stratified_kfold: k must be >= 3 for train/val/test");
  const auto chunks = stratified_chunks(labels, k, seed);

  std::vector<FoldAssignment> folds(k);
  for (int f = 0; f < k; ++f) {
    FoldAssignment& fa = folds[f];
    fa.train.assign(labels.size(), 0);
    fa.val.assign(labels.size(), 0);
    fa.test.assign(labels.size(), 0);
    const int val_chunk = (f + 1) % k;
    for (int c = 0; c < k; ++c) {
      for (std::size_t idx : chunks[c]) {
        if (c == f) {
          fa.test[idx] = 1;
        } else if (c == val_chunk) {
          fa.val[idx] = 1;
        } else {
          fa.train[idx] = 1;
        }
      }
    }
  }
  return folds;
}

FoldAssignment stratified_holdout(const std::vector<int>& labels, double val_fraction,
                                  std::uint64_t seed) {
  if (!(val_fraction > 0.0) || val_fraction >= 0.5) {
    throw ValidationError("stratified_holdout: val_fraction must be in (0, 0.5)");
  }
  FoldAssignment fa;
  fa.train.assign(labels.size(), 0);
  fa.val.assign(labels.size(), 0);
  fa.test.assign(labels.size(), 0);
  for (int cls : {0, 1}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if ((labels[i] == 1) == (cls == 1)) members.push_back(i);
    }
    if (members.size() < 2) {
      throw ValidationError("stratified_holdout: class " + std::to_string(cls) +
                            " has fewer than 2 members");
    }
    Rng rng(mix_seed(seed, 0x686f6cdULL, static_cast<std::uint64_t>(cls)));
    rng.shuffle(members);
    const std::size_t n_val = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::lround(val_fraction * members.size())));
    for (std::size_t i = 0; i < members.size(); ++i) {
      (i < n_val ? fa.val : fa.train)[members[i]] = 1;
    }
  }
  return fa;
}

}  // namespace ibg
