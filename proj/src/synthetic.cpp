#include "ibg/synthetic.hpp"

#include <algorithm>
#include <numeric>

#include "ibg/error.hpp"
#include "ibg/rng.hpp"

namespace ibg {

void SyntheticCohortSpec::validate() const {
  if (n_subjects < 4) throw ValidationError("synthetic: need >= 4 subjects");
  if (n_rois < 2) throw ValidationError("synthetic: need >= 2 ROIs");
  if (n_planted_rois >= n_rois) {
    throw ValidationError("synthetic: n_planted_rois (" + std::to_string(n_planted_rois) +
                          ") must be < n_rois (" + std::to_string(n_rois) + ")");
  }
  if (n_planted_rois < 2) throw ValidationError("synthetic: need >= 2 planted ROIs");
  if (effect_size < 0.0) throw ValidationError("synthetic: effect_size must be >= 0");
  if (series_length < 3) throw ValidationError("synthetic: series_length must be >= 3");
  if (n_factors < 1) throw ValidationError("synthetic: n_factors must be >= 1");
  if (n_sites < 1) throw ValidationError("synthetic: n_sites must be >= 1");
  if (demo_skew < 0.0 || demo_skew > 1.0) {
    throw ValidationError("synthetic: demo_skew must be in [0, 1]");
  }
}

SyntheticCohort generate_synthetic_cohort(const SyntheticCohortSpec& spec) {
  spec.validate();
  Rng rng(mix_seed(spec.seed, 0x73796eULL));

  SyntheticCohort cohort;
  const std::size_t n = spec.n_subjects;
  const std::size_t v = spec.n_rois;
  const std::size_t t = spec.series_length;

  // planted ROI set: a random draw without replacement
  std::vector<std::size_t> roi_order(v);
  std::iota(roi_order.begin(), roi_order.end(), std::size_t{0});
  rng.shuffle(roi_order);
  cohort.planted_rois.assign(roi_order.begin(),
                             roi_order.begin() + static_cast<long>(spec.n_planted_rois));
  std::sort(cohort.planted_rois.begin(), cohort.planted_rois.end());
  std::vector<std::uint8_t> is_planted(v, 0);
  for (std::size_t r : cohort.planted_rois) is_planted[r] = 1;

  // background loadings shared by the whole cohort
  Tensor loadings(v, spec.n_factors);
  for (std::size_t i = 0; i < loadings.size(); ++i) loadings[i] = rng.normal(0.0, 0.5);

  // balanced labels in a shuffled subject order
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = (i < n / 2) ? 0 : 1;
  rng.shuffle(labels);

  for (std::size_t s = 0; s < n; ++s) {
    const int label = labels[s];

    Tensor factors(spec.n_factors, t);
    for (std::size_t i = 0; i < factors.size(); ++i) factors[i] = rng.normal();
    std::vector<double> planted_factor(t);
    for (std::size_t i = 0; i < t; ++i) planted_factor[i] = rng.normal();

    TimeSeries ts;
    ts.subject_id = "sub_" + std::to_string(s);
    ts.data = Tensor(v, t);
    for (std::size_t r = 0; r < v; ++r) {
      const double couple = (label == 1 && is_planted[r]) ? spec.effect_size : 0.0;
      for (std::size_t i = 0; i < t; ++i) {
        double x = rng.normal();  // ROI-local noise
        for (std::size_t f = 0; f < spec.n_factors; ++f) x += loadings(r, f) * factors(f, i);
        x += couple * planted_factor[i];
        ts.data(r, i) = x;
      }
    }

    Demographics d;
    d.site = static_cast<int>(rng.below(spec.n_sites));
    const double p_male = (label == 1) ? 0.5 + spec.demo_skew / 2.0 : 0.5 - spec.demo_skew / 2.0;
    d.sex = rng.bernoulli(p_male) ? 1 : 0;
    d.age = std::max(4.0, rng.normal(12.0, 3.0));
    d.handedness = rng.bernoulli(0.9) ? 0 : 1;

    cohort.series.push_back(std::move(ts));
    cohort.demos.push_back(d);
    cohort.labels.push_back(label);
    cohort.ids.push_back("sub_" + std::to_string(s));
  }
  return cohort;
}

double planted_edge_fc_difference(const SyntheticCohort& cohort) {
  const auto& planted = cohort.planted_rois;
  if (planted.size() < 2) throw ValidationError("planted_edge_fc_difference: needs >= 2 ROIs");

  double sum1 = 0.0, sum0 = 0.0;
  std::size_t n1 = 0, n0 = 0;
  for (std::size_t s = 0; s < cohort.series.size(); ++s) {
    const Tensor corr = pearson_fc(cohort.series[s]);
    double acc = 0.0;
    std::size_t cnt = 0;
    for (std::size_t a = 0; a < planted.size(); ++a) {
      for (std::size_t b = a + 1; b < planted.size(); ++b) {
        acc += corr(planted[a], planted[b]);
        ++cnt;
      }
    }
    const double mean_edge = acc / static_cast<double>(cnt);
    if (cohort.labels[s] == 1) {
      sum1 += mean_edge;
      ++n1;
    } else {
      sum0 += mean_edge;
      ++n0;
    }
  }
  if (n0 == 0 || n1 == 0) throw ValidationError("planted_edge_fc_difference: single class");
  return sum1 / static_cast<double>(n1) - sum0 / static_cast<double>(n0);
}

}  // namespace ibg
