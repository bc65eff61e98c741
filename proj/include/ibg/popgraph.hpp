#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "ibg/tensor.hpp"

namespace ibg {

// Meta-path relations, in fixed order everywhere.
enum class Relation : std::size_t { Site = 0, Sex = 1, Age = 2, Hand = 3 };
inline constexpr std::array<const char*, 4> kRelationNames = {"site", "sex", "age", "hand"};

struct Demographics {
  std::optional<int> site;
  std::optional<int> sex;
  std::optional<double> age;
  std::optional<int> handedness;

  void validate(const std::string& subject_id) const;
};

struct CompatibilityConfig {
  double tau_age = 2.0;    // years; no age edge beyond this gap
  double sigma_age = 1.0;  // years; kernel bandwidth inside the window
};

enum class DistanceMetric { Euclidean, Cosine };

struct PopGraphConfig {
  CompatibilityConfig compat;
  DistanceMetric metric = DistanceMetric::Euclidean;
  std::optional<double> sigma_sim_override;  // default: median pairwise distance
};

// Four N x N meta-path adjacencies over the cohort.
struct MetaPathGraphSet {
  std::array<Tensor, 4> adjacencies;
  std::vector<std::string> subject_order;
  double sigma_sim = 1.0;
  DistanceMetric metric = DistanceMetric::Euclidean;
  std::array<bool, 4> all_zero{};  // flagged, not fatal
};

// Eq-9-style gate: categorical equality, or a Gaussian age kernel inside a
// hard window. Throws if either side is missing the field.
double demographic_compatibility(const Demographics& a, const Demographics& b,
                                 Relation relation, const CompatibilityConfig& config);

double biomarker_distance(const Tensor& ti, const Tensor& tj, DistanceMetric metric);

// exp(-dist^2 / (2 sigma_sim^2))
double biomarker_similarity(const Tensor& ti, const Tensor& tj, double sigma_sim,
                            DistanceMetric metric);

// reps: N x d_T matrix, one biomarker vector per row, aligned with demos.
MetaPathGraphSet build_metapath_graphs(const Tensor& reps,
                                       const std::vector<Demographics>& demos,
                                       const std::vector<std::string>& subject_order,
                                       const PopGraphConfig& config);

}  // namespace ibg
