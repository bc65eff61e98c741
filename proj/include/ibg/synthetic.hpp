#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ibg/connectome.hpp"
#include "ibg/popgraph.hpp"

namespace ibg {

struct SyntheticCohortSpec {
  std::size_t n_subjects = 120;
  std::size_t n_rois = 90;
  std::size_t n_planted_rois = 10;
  double effect_size = 1.5;  // coupling strength of the planted factor
  std::size_t series_length = 150;
  std::size_t n_factors = 5;  // shared latent background factors
  std::size_t n_sites = 4;
  double demo_skew = 0.2;  // class-dependent shift of the sex proportion
  std::uint64_t seed = 7;

  void validate() const;
};

struct SyntheticCohort {
  std::vector<TimeSeries> series;
  std::vector<Demographics> demos;
  std::vector<int> labels;
  std::vector<std::string> ids;
  std::vector<std::size_t> planted_rois;
};

// Latent-factor BOLD-like signals; class-1 subjects receive an extra shared
// factor over the planted ROIs with loading effect_size, producing elevated
// functional connectivity on all planted pairs.
SyntheticCohort generate_synthetic_cohort(const SyntheticCohortSpec& spec);

// Mean FC difference (class1 - class0) over the planted ROI pairs; the
// empirical effect check used by the generator's tests.
double planted_edge_fc_difference(const SyntheticCohort& cohort);

}  // namespace ibg
