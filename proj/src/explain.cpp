#include "ibg/explain.hpp"

#include <algorithm>
#include <cmath>

#include "ibg/error.hpp"

namespace ibg {

double symmetric_gauss_kl(const Tensor& mu_p, const Tensor& sigma_p, const Tensor& mu_q,
                          const Tensor& sigma_q) {
  if (!mu_p.same_shape(mu_q) || !mu_p.same_shape(sigma_p) || !mu_p.same_shape(sigma_q)) {
    throw ShapeError("symmetric_gauss_kl: shape mismatch");
  }
  auto kl = [](const Tensor& mp, const Tensor& sp, const Tensor& mq, const Tensor& sq) {
    double acc = 0.0;
    for (std::size_t i = 0; i < mp.size(); ++i) {
      const double vp = sp[i] * sp[i];
      const double vq = sq[i] * sq[i];
      const double dm = mp[i] - mq[i];
      acc += std::log(sq[i] / sp[i]) + (vp + dm * dm) / (2.0 * vq) - 0.5;
    }
    return acc;
  };
  return 0.5 * (kl(mu_p, sigma_p, mu_q, sigma_q) + kl(mu_q, sigma_q, mu_p, sigma_p));
}

std::vector<BiomarkerScore> explain_biomarkers(Model& m, const CohortData& cohort,
                                               const TrainSettings& train) {
  const std::size_t v = cohort.subjects.at(0).features.rows();
  std::vector<double> scores(v, 0.0);

  ad::Tape t;
  NoiseBank bank = make_infer_noise();
  StageOne s1 = forward_individual(t, m, cohort, bank, nullptr, train);

  for (std::size_t s = 0; s < cohort.size(); ++s) {
    const Tensor z_o = s1.subjects[s].z_o.value();
    const Tensor pooled = s1.subjects[s].pooled.value();
    const Tensor base_mu = s1.subjects[s].mu.value();
    const Tensor base_sigma = s1.subjects[s].sigma.value();
    const double inv_v = 1.0 / static_cast<double>(v);

    for (std::size_t r = 0; r < v; ++r) {
      Tensor occluded = pooled;
      for (std::size_t j = 0; j < pooled.cols(); ++j) occluded(0, j) -= z_o(r, j) * inv_v;
      const Tensor mu_r = apply_values(m.subject_enc.mu_net, occluded);
      Tensor logvar_r = apply_values(m.subject_enc.logvar_net, occluded);
      Tensor sigma_r(1, logvar_r.cols());
      for (std::size_t j = 0; j < logvar_r.cols(); ++j) {
        sigma_r(0, j) = std::exp(0.5 * logvar_r(0, j));
      }
      scores[r] += symmetric_gauss_kl(base_mu, base_sigma, mu_r, sigma_r);
    }
  }

  double total = 0.0;
  for (double x : scores) total += x;
  if (!(total > 1e-300)) {
    throw ValidationError("explain_biomarkers: degenerate scores (untrained model?)");
  }

  std::vector<BiomarkerScore> out(v);
  for (std::size_t r = 0; r < v; ++r) out[r] = {r, scores[r] / total};
  std::sort(out.begin(), out.end(), [](const BiomarkerScore& a, const BiomarkerScore& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.roi < b.roi;
  });
  return out;
}

namespace {

double masked_accuracy(const Tensor& scores, const std::vector<int>& labels) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int pred = scores(i, 0) > 0.5 ? 1 : 0;
    if (pred == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

}  // namespace

AttentionReport explain_attention(Model& m, const CohortData& cohort, const PopulationState& pop,
                                  const TrainSettings& train) {
  const std::vector<int> labels = cohort.labels();

  AttentionReport rep;
  rep.equivalence = pop.equivalence;
  for (std::size_t k = 0; k < 4; ++k) rep.mi[k] = std::max(0.0, pop.mi[k]);

  InferenceResult base = infer(m, cohort, pop, train);
  rep.alpha = base.alpha;
  rep.base_acc = masked_accuracy(base.scores, labels);

  for (int k = 0; k < 4; ++k) {
    InferenceResult ablated = infer(m, cohort, pop, train, k);
    rep.ablation_delta[static_cast<std::size_t>(k)] =
        rep.base_acc - masked_accuracy(ablated.scores, labels);
  }
  return rep;
}

}  // namespace ibg
