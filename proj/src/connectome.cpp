#include "ibg/connectome.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "ibg/error.hpp"

namespace ibg {

namespace {

// row means and centered sum-of-squares, two-pass
void row_stats(const Tensor& data, std::vector<double>& mean, std::vector<double>& ss) {
  const std::size_t v = data.rows(), t = data.cols();
  mean.assign(v, 0.0);
  ss.assign(v, 0.0);
  for (std::size_t i = 0; i < v; ++i) {
    double m = 0.0;
    for (std::size_t j = 0; j < t; ++j) m += data(i, j);
    m /= static_cast<double>(t);
    mean[i] = m;
    double s = 0.0;
    for (std::size_t j = 0; j < t; ++j) {
      const double d = data(i, j) - m;
      s += d * d;
    }
    ss[i] = s;
  }
}

}  // namespace

void TimeSeries::validate() const {
  if (roi_count() < 2) {
    throw ValidationError("time series '" + subject_id + "': needs >= 2 ROIs, got " +
                          std::to_string(roi_count()));
  }
  if (length() < 3) {
    throw ValidationError("time series '" + subject_id + "': needs >= 3 samples, got " +
                          std::to_string(length()));
  }
  if (!data.all_finite()) {
    throw ValidationError("time series '" + subject_id + "': non-finite sample");
  }
  std::vector<double> mean, ss;
  row_stats(data, mean, ss);
  for (std::size_t i = 0; i < ss.size(); ++i) {
    if (ss[i] < 1e-30) {
      throw ValidationError("time series '" + subject_id + "': ROI " + std::to_string(i) +
                            " has zero variance");
    }
  }
}

Tensor pearson_fc(const TimeSeries& ts) {
  ts.validate();
  const std::size_t v = ts.roi_count(), t = ts.length();
  std::vector<double> mean, ss;
  row_stats(ts.data, mean, ss);

  Tensor corr(v, v);
  for (std::size_t i = 0; i < v; ++i) {
    corr(i, i) = 1.0;
    for (std::size_t j = i + 1; j < v; ++j) {
      double cov = 0.0;
      for (std::size_t k = 0; k < t; ++k) {
        cov += (ts.data(i, k) - mean[i]) * (ts.data(j, k) - mean[j]);
      }
      double r = cov / std::sqrt(ss[i] * ss[j]);
      r = std::clamp(r, -1.0, 1.0);
      corr(i, j) = r;
      corr(j, i) = r;
    }
  }
  return corr;
}

ConnectivityMatrix fisher_z(const Tensor& corr, double clamp_eps) {
  if (corr.rows() != corr.cols()) {
    throw ShapeError("fisher_z: matrix must be square, got " + corr.shape_str());
  }
  if (!(clamp_eps > 0.0) || clamp_eps > 1e-3) {
    throw ValidationError("fisher_z: clamp_eps must be in (0, 1e-3]");
  }
  const double hi = 1.0 - clamp_eps;
  ConnectivityMatrix cm;
  cm.values = Tensor(corr.rows(), corr.cols());
  for (std::size_t i = 0; i < corr.rows(); ++i) {
    for (std::size_t j = 0; j < corr.cols(); ++j) {
      if (i == j) continue;
      const double r = corr(i, j);
      if (r < -1.0 || r > 1.0) {
        throw ValidationError("fisher_z: correlation out of [-1,1] at (" + std::to_string(i) +
                              "," + std::to_string(j) + ")");
      }
      cm.values(i, j) = std::atanh(std::clamp(r, -hi, hi));
    }
  }
  return cm;
}

Tensor sparsify_topk_positive(const ConnectivityMatrix& cm, double keep_fraction) {
  if (!(keep_fraction > 0.0) || keep_fraction > 1.0) {
    throw ValidationError("sparsify: keep_fraction must be in (0, 1]");
  }
  const Tensor& z = cm.values;
  const std::size_t v = z.rows();

  // positive upper-triangle edges sorted by weight; (i,j) as a stable tiebreak
  std::vector<std::tuple<double, std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < v; ++i) {
    for (std::size_t j = i + 1; j < v; ++j) {
      if (z(i, j) > 0.0) edges.emplace_back(z(i, j), i, j);
    }
  }
  if (edges.empty()) {
    throw ValidationError("sparsify: no positive edges, graph would be empty");
  }
  std::sort(edges.begin(), edges.end(), [](const auto& a, const auto& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
    if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) < std::get<1>(b);
    return std::get<2>(a) < std::get<2>(b);
  });

  const std::size_t keep = static_cast<std::size_t>(
      std::ceil(keep_fraction * static_cast<double>(edges.size())));
  Tensor adj(v, v);
  for (std::size_t e = 0; e < keep && e < edges.size(); ++e) {
    const auto& [w, i, j] = edges[e];
    adj(i, j) = w;
    adj(j, i) = w;
  }
  return adj;
}

BrainGraph build_brain_graph(const TimeSeries& ts, const ConnectomeConfig& config) {
  const Tensor corr = pearson_fc(ts);
  const ConnectivityMatrix cm = fisher_z(corr, config.clamp_eps);

  BrainGraph g;
  g.subject_id = ts.subject_id;
  g.adjacency = sparsify_topk_positive(cm, config.keep_fraction);
  g.node_features = (config.feature_mode == FeatureMode::FcProfile) ? cm.values : ts.data;
  g.roi_names.reserve(ts.roi_count());
  for (std::size_t i = 0; i < ts.roi_count(); ++i) {
    g.roi_names.push_back("ROI_" + std::to_string(i));
  }
  return g;
}

}  // namespace ibg
