#include "ibg/popgraph.hpp"

#include <algorithm>
#include <cmath>

#include "ibg/error.hpp"

namespace ibg {

void Demographics::validate(const std::string& subject_id) const {
  if (site && *site < 0) throw ValidationError("subject '" + subject_id + "': negative site id");
  if (sex && *sex < 0) throw ValidationError("subject '" + subject_id + "': negative sex id");
  if (handedness && *handedness < 0) {
    throw ValidationError("subject '" + subject_id + "': negative handedness id");
  }
  if (age && !(*age > 0.0)) {
    throw ValidationError("subject '" + subject_id + "': age must be positive");
  }
}

namespace {

struct MissingField {};

double categorical_gate(const std::optional<int>& a, const std::optional<int>& b) {
  if (!a || !b) throw MissingField{};
  return (*a == *b) ? 1.0 : 0.0;
}

}  // namespace

double demographic_compatibility(const Demographics& a, const Demographics& b,
                                 Relation relation, const CompatibilityConfig& config) {
  try {
    switch (relation) {
      case Relation::Site:
        return categorical_gate(a.site, b.site);
      case Relation::Sex:
        return categorical_gate(a.sex, b.sex);
      case Relation::Hand:
        return categorical_gate(a.handedness, b.handedness);
      case Relation::Age: {
        if (!a.age || !b.age) throw MissingField{};
        const double gap = std::abs(*a.age - *b.age);
        if (gap > config.tau_age) return 0.0;
        return std::exp(-(gap * gap) / (2.0 * config.sigma_age * config.sigma_age));
      }
    }
  } catch (const MissingField&) {
    throw ValidationError(std::string("demographic_compatibility: missing '") +
                          kRelationNames[static_cast<std::size_t>(relation)] + "' field");
  }
  throw ValidationError("demographic_compatibility: unknown relation");
}

double biomarker_distance(const Tensor& ti, const Tensor& tj, DistanceMetric metric) {
  if (!ti.same_shape(tj)) {
    throw ShapeError("biomarker_distance: " + ti.shape_str() + " vs " + tj.shape_str());
  }
  if (metric == DistanceMetric::Euclidean) {
    double s = 0.0;
    for (std::size_t k = 0; k < ti.size(); ++k) {
      const double d = ti[k] - tj[k];
      s += d * d;
    }
    return std::sqrt(s);
  }
  // cosine distance, with zero vectors treated as maximally distant
  double dot = 0.0, ni = 0.0, nj = 0.0;
  for (std::size_t k = 0; k < ti.size(); ++k) {
    dot += ti[k] * tj[k];
    ni += ti[k] * ti[k];
    nj += tj[k] * tj[k];
  }
  if (ni < 1e-300 || nj < 1e-300) return 1.0;
  return 1.0 - dot / std::sqrt(ni * nj);
}

double biomarker_similarity(const Tensor& ti, const Tensor& tj, double sigma_sim,
                            DistanceMetric metric) {
  if (!(sigma_sim > 0.0)) throw ValidationError("biomarker_similarity: sigma_sim must be > 0");
  const double d = biomarker_distance(ti, tj, metric);
  return std::exp(-(d * d) / (2.0 * sigma_sim * sigma_sim));
}

namespace {

Tensor rep_row(const Tensor& reps, std::size_t i) {
  Tensor r(1, reps.cols());
  for (std::size_t j = 0; j < reps.cols(); ++j) r(0, j) = reps(i, j);
  return r;
}

}  // namespace

MetaPathGraphSet build_metapath_graphs(const Tensor& reps,
                                       const std::vector<Demographics>& demos,
                                       const std::vector<std::string>& subject_order,
                                       const PopGraphConfig& config) {
  const std::size_t n = reps.rows();
  if (demos.size() != n || subject_order.size() != n) {
    throw ValidationError("build_metapath_graphs: reps/demos/order misaligned");
  }

  std::vector<Tensor> rows;
  rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) rows.push_back(rep_row(reps, i));

  // pairwise distances once; also feeds the median bandwidth heuristic
  Tensor dist(n, n);
  std::vector<double> upper;
  upper.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = biomarker_distance(rows[i], rows[j], config.metric);
      dist(i, j) = d;
      dist(j, i) = d;
      upper.push_back(d);
    }
  }

  double sigma_sim;
  if (config.sigma_sim_override) {
    sigma_sim = *config.sigma_sim_override;
    if (!(sigma_sim > 0.0)) throw ValidationError("sigma_sim override must be > 0");
  } else {
    std::sort(upper.begin(), upper.end());
    const double median = upper.empty() ? 0.0
                          : (upper.size() % 2 == 1)
                              ? upper[upper.size() / 2]
                              : 0.5 * (upper[upper.size() / 2 - 1] + upper[upper.size() / 2]);
    sigma_sim = median > 1e-12 ? median : 1.0;  // degenerate cohort: all reps identical
  }

  MetaPathGraphSet out;
  out.subject_order = subject_order;
  out.sigma_sim = sigma_sim;
  out.metric = config.metric;

  const double inv_two_sigma2 = 1.0 / (2.0 * sigma_sim * sigma_sim);
  for (std::size_t k = 0; k < 4; ++k) {
    const auto relation = static_cast<Relation>(k);
    Tensor a(n, n);
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        double gate;
        try {
          gate = demographic_compatibility(demos[i], demos[j], relation, config.compat);
        } catch (const ValidationError&) {
          gate = 0.0;  // missing field: no edge without evidence
        }
        if (gate == 0.0) continue;
        const double sim = std::exp(-dist(i, j) * dist(i, j) * inv_two_sigma2);
        const double w = sim * gate;
        a(i, j) = w;
        a(j, i) = w;
        if (w > 0.0) any = true;
      }
    }
    out.all_zero[k] = !any;
    out.adjacencies[k] = std::move(a);
  }
  return out;
}

}  // namespace ibg
