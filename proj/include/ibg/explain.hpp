#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "ibg/model.hpp"

namespace ibg {

struct BiomarkerScore {
  std::size_t roi = 0;
  double score = 0.0;  // normalized importance, all scores sum to 1
};

// Occlusion attribution: for each ROI, zero its integrated node embedding
// before pooling and measure the symmetric KL shift of the subject encoding
// distribution, averaged over subjects. Returned in descending score order.
std::vector<BiomarkerScore> explain_biomarkers(Model& m, const CohortData& cohort,
                                               const TrainSettings& train);

// 0.5 (KL(p||q) + KL(q||p)) between diagonal Gaussians.
double symmetric_gauss_kl(const Tensor& mu_p, const Tensor& sigma_p, const Tensor& mu_q,
                          const Tensor& sigma_q);

struct AttentionReport {
  std::array<double, 4> alpha{};
  std::array<double, 4> mi{};
  wl::EquivalenceMatrix equivalence;
  double base_acc = 0.0;
  std::array<double, 4> ablation_delta{};  // accuracy drop when the path is zeroed
};

AttentionReport explain_attention(Model& m, const CohortData& cohort, const PopulationState& pop,
                                  const TrainSettings& train);

}  // namespace ibg
