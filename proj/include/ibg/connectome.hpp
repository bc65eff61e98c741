#pragma once

#include <string>
#include <vector>

#include "ibg/tensor.hpp"

namespace ibg {

// Per-subject ROI signals: one row per ROI, one column per sample.
struct TimeSeries {
  std::string subject_id;
  Tensor data;  // |V| x T

  std::size_t roi_count() const { return data.rows(); }
  std::size_t length() const { return data.cols(); }

  // Rejects |V| < 2, T < 3, non-finite values, and constant rows.
  void validate() const;
};

// Symmetric Fisher-z matrix, zero diagonal.
struct ConnectivityMatrix {
  Tensor values;  // |V| x |V|
};

enum class FeatureMode { FcProfile, RawTimeseries };

struct ConnectomeConfig {
  double keep_fraction = 0.2;
  double clamp_eps = 1e-5;
  FeatureMode feature_mode = FeatureMode::FcProfile;
};

// Sparsified nonnegative adjacency plus node features for the encoder.
struct BrainGraph {
  std::string subject_id;
  Tensor adjacency;      // |V| x |V|, symmetric, nonnegative, zero diagonal
  Tensor node_features;  // |V| x F
  std::vector<std::string> roi_names;
};

// Pearson correlation matrix of the ROI rows; diagonal 1.
Tensor pearson_fc(const TimeSeries& ts);

// arctanh with clamping to +-(1 - clamp_eps); diagonal forced to 0.
ConnectivityMatrix fisher_z(const Tensor& corr, double clamp_eps);

// Keeps the ceil(keep_fraction * |E+|) largest positive off-diagonal weights,
// zeroes everything else. Output stays symmetric.
Tensor sparsify_topk_positive(const ConnectivityMatrix& cm, double keep_fraction);

BrainGraph build_brain_graph(const TimeSeries& ts, const ConnectomeConfig& config);

}  // namespace ibg
