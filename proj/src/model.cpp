#include "ibg/model.hpp"

#include <algorithm>
#include <cmath>

#include "ibg/error.hpp"

namespace ibg {

using ad::Var;

std::vector<int> CohortData::labels() const {
  std::vector<int> out;
  out.reserve(subjects.size());
  for (const auto& s : subjects) out.push_back(s.label);
  return out;
}

std::vector<std::string> CohortData::ids() const {
  std::vector<std::string> out;
  out.reserve(subjects.size());
  for (const auto& s : subjects) out.push_back(s.id);
  return out;
}

Tensor encode_demographics(const std::vector<Demographics>& demos, std::size_t n_sites,
                           double age_min, double age_max) {
  const std::size_t n = demos.size();
  const std::size_t dim = n_sites + 2 + 2 + 1;
  Tensor out(n, dim);
  const double age_span = age_max - age_min;
  for (std::size_t i = 0; i < n; ++i) {
    const Demographics& d = demos[i];
    if (d.site && static_cast<std::size_t>(*d.site) < n_sites) {
      out(i, static_cast<std::size_t>(*d.site)) = 1.0;
    }
    if (d.sex && *d.sex < 2) out(i, n_sites + static_cast<std::size_t>(*d.sex)) = 1.0;
    if (d.handedness && *d.handedness < 2) {
      out(i, n_sites + 2 + static_cast<std::size_t>(*d.handedness)) = 1.0;
    }
    double age_scaled = 0.5;
    if (d.age && age_span > 1e-12) age_scaled = (*d.age - age_min) / age_span;
    out(i, dim - 1) = age_scaled;
  }
  return out;
}

void finalize_cohort(CohortData& cohort) {
  int max_site = -1;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& d : cohort.demos) {
    if (d.site) max_site = std::max(max_site, *d.site);
    if (d.age) {
      lo = std::min(lo, *d.age);
      hi = std::max(hi, *d.age);
    }
  }
  cohort.n_sites = static_cast<std::size_t>(max_site + 1);
  if (cohort.n_sites == 0) cohort.n_sites = 1;
  cohort.age_min = std::isfinite(lo) ? lo : 0.0;
  cohort.age_max = std::isfinite(hi) ? hi : 0.0;
  cohort.demo_features =
      encode_demographics(cohort.demos, cohort.n_sites, cohort.age_min, cohort.age_max);
}

std::unique_ptr<Model> Model::create(const ModelDims& dims, std::size_t feature_dim,
                                     std::size_t demo_dim, const TrainSettings& train,
                                     std::uint64_t seed) {
  auto m = std::make_unique<Model>();
  m->dims = dims;
  m->feature_dim = feature_dim;
  m->demo_dim = demo_dim;

  GraphFormerConfig gf_cfg;
  gf_cfg.feature_dim = feature_dim;
  gf_cfg.embed_dim = dims.embed_dim;
  gf_cfg.biomarker_dim = dims.biomarker_dim;

  HeteroConfig h_cfg;
  h_cfg.biomarker_dim = dims.biomarker_dim;
  h_cfg.gat_dim = dims.gat_dim;
  h_cfg.attention_dim = dims.attention_dim;
  h_cfg.hetero_dim = dims.hetero_dim;
  h_cfg.demo_dim = demo_dim;
  h_cfg.leaky_slope = dims.leaky_slope;

  Rng rng(mix_seed(seed, 0x6d6f64656cULL));
  m->gf = make_graphformer_params(m->params, gf_cfg, rng);
  m->subject_enc = make_subject_encoder_params(m->params, gf_cfg, rng);
  m->gat = make_gat_params(m->params, h_cfg, rng);
  m->att = make_attention_params(m->params, h_cfg, rng);
  m->pop_enc = make_population_encoder_params(m->params, h_cfg, rng);

  for (std::size_t k = 0; k < 4; ++k) {
    Rng dv_rng(mix_seed(seed, 0x6476ULL, k));
    m->dv[k] = std::make_unique<DvEstimator>(dims.biomarker_dim, dims.gat_dim, train.dv_hidden,
                                             train.dv_lr, dv_rng);
  }
  return m;
}

std::vector<Tensor> Model::snapshot_values() const {
  std::vector<Tensor> out;
  for (const auto& p : params.owned()) out.push_back(p->value);
  return out;
}

void Model::restore_values(const std::vector<Tensor>& snap) {
  const auto& owned = params.owned();
  if (snap.size() != owned.size()) throw ValidationError("restore: snapshot size mismatch");
  for (std::size_t i = 0; i < snap.size(); ++i) owned[i]->value = snap[i];
}

NoiseBank make_train_noise(const CohortData& cohort, const ModelDims& dims, double dropout,
                           double edge_dropout, Rng& rng) {
  NoiseBank bank;
  bank.train_mode = true;
  const std::size_t n = cohort.size();
  bank.subject_eps.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Tensor eps(1, dims.biomarker_dim);
    for (std::size_t j = 0; j < eps.size(); ++j) eps[j] = rng.normal();
    bank.subject_eps.push_back(std::move(eps));
  }
  bank.population_eps = Tensor(n, dims.hetero_dim);
  for (std::size_t j = 0; j < bank.population_eps.size(); ++j) {
    bank.population_eps[j] = rng.normal();
  }
  if (dropout > 0.0) {
    bank.z0_masks.reserve(n);
    bank.pooled_masks.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t v = cohort.subjects[i].features.rows();
      bank.z0_masks.push_back(ad::make_dropout_mask(v, dims.embed_dim, dropout, rng));
      bank.pooled_masks.push_back(ad::make_dropout_mask(1, dims.embed_dim, dropout, rng));
    }
  }
  if (edge_dropout > 0.0) {
    bank.adjacencies.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Tensor& a = cohort.subjects[i].adjacency;
      Tensor dropped = a;
      for (std::size_t r = 0; r < a.rows(); ++r) {
        for (std::size_t c = r + 1; c < a.cols(); ++c) {
          if (a(r, c) > 0.0 && rng.bernoulli(edge_dropout)) {
            dropped(r, c) = 0.0;
            dropped(c, r) = 0.0;
          }
        }
      }
      bank.adjacencies.push_back(std::move(dropped));
    }
  }
  return bank;
}

NoiseBank make_infer_noise() { return NoiseBank{}; }

StageOne forward_individual(ad::Tape& t, Model& m, const CohortData& cohort,
                            const NoiseBank& bank, const PopulationState* pop,
                            const TrainSettings& train) {
  StageOne s1;
  const std::size_t n = cohort.size();
  s1.subjects.reserve(n);

  std::vector<Var> rep_rows;
  rep_rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    SubjectForwardOptions opt;
    if (bank.train_mode) opt.noise = &bank.subject_eps[i];
    if (!bank.z0_masks.empty()) opt.z0_dropout_mask = &bank.z0_masks[i];
    if (!bank.pooled_masks.empty()) opt.pooled_dropout_mask = &bank.pooled_masks[i];
    if (train.disable_global_attention) opt.forced_lambda = 0.0;
    const Tensor& adj =
        bank.adjacencies.empty() ? cohort.subjects[i].adjacency : bank.adjacencies[i];
    SubjectEncoding enc = graphformer_forward(t, m.gf, m.subject_enc,
                                              cohort.subjects[i].features, adj, opt);
    rep_rows.push_back(enc.rep);
    s1.subjects.push_back(std::move(enc));
  }
  s1.reps = ad::stack_rows(rep_rows);

  if (pop != nullptr && pop->ready) {
    for (std::size_t k = 0; k < 4; ++k) {
      s1.z_paths[k] = gat_layer(t, m.gat[k], s1.reps, pop->graphs.adjacencies[k]);
    }
    s1.has_paths = true;
  }
  return s1;
}

namespace {

// masked mean of per-subject scalar Vars
Var masked_scalar_mean(ad::Tape& t, const std::vector<Var>& xs,
                       const std::vector<std::uint8_t>& mask) {
  Var acc;
  std::size_t count = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!mask[i]) continue;
    acc = (count == 0) ? xs[i] : ad::add(acc, xs[i]);
    ++count;
  }
  if (count == 0) throw ValidationError("loss: empty labeled set");
  (void)t;
  return ad::scale(acc, 1.0 / static_cast<double>(count));
}

struct SubjectLossTerms {
  Var ib_mean;   // mean nll + beta kl
  Var nll_mean;  // mean nll
  Var kl_mean;   // mean kl
};

SubjectLossTerms subject_losses(ad::Tape& t, const StageOne& s1, const std::vector<int>& labels,
                                const std::vector<std::uint8_t>& mask, double beta) {
  std::vector<Var> nlls, kls;
  for (std::size_t i = 0; i < s1.subjects.size(); ++i) {
    if (!mask[i]) continue;
    SubjectLossVars slv = subject_ib_loss(t, s1.subjects[i], labels[i], beta);
    nlls.push_back(slv.nll);
    kls.push_back(slv.kl);
  }
  const std::vector<std::uint8_t> dense(nlls.size(), 1);
  SubjectLossTerms out;
  out.nll_mean = masked_scalar_mean(t, nlls, dense);
  out.kl_mean = masked_scalar_mean(t, kls, dense);
  out.ib_mean = ad::add(out.nll_mean, ad::scale(out.kl_mean, beta));
  return out;
}

}  // namespace

LossVars build_warmup_loss(ad::Tape& t, Model& m, const StageOne& s1,
                           const std::vector<int>& labels,
                           const std::vector<std::uint8_t>& mask, const TrainSettings& train) {
  (void)m;
  SubjectLossTerms terms = subject_losses(t, s1, labels, mask, train.beta);
  LossVars lv;
  lv.cls = terms.nll_mean;  // biomarker head carries classification in warm-up
  lv.subject_ib = terms.ib_mean;
  lv.subject_kl = terms.kl_mean;
  lv.total = ad::add(lv.cls, ad::scale(lv.subject_ib, train.weights.ib));
  lv.has_population = false;
  return lv;
}

LossVars finish_total_loss(ad::Tape& t, Model& m, const StageOne& s1, const CohortData& cohort,
                           const PopulationState& pop, const NoiseBank& bank,
                           const std::vector<int>& labels,
                           const std::vector<std::uint8_t>& mask, const TrainSettings& train) {
  if (!s1.has_paths) throw ValidationError("finish_total_loss: stage one lacks GAT paths");

  MetaPathAttentionResult att =
      metapath_attention(t, m.att, s1.z_paths, pop.equivalence, pop.mi, train.beta_hetero);
  Var z_h = aggregate(t, s1.z_paths, att.alpha);

  const Tensor* pop_noise = bank.train_mode ? &bank.population_eps : nullptr;
  PopulationEncoding pe = population_encode(t, m.pop_enc, z_h, cohort.demo_features, pop_noise);
  PopulationLossVars plv = population_ib_loss(t, pe, labels, mask, train.beta_hetero);
  RegularizerVars reg = regularizers(t, s1.z_paths, pop.equivalence, att.alpha, pop.mi);
  Var l_hg = hg_loss(t, plv.total, reg, train.weights.structural, train.weights.sparsity,
                     train.weights.mi);

  SubjectLossTerms terms = subject_losses(t, s1, labels, mask, train.beta);

  LossVars lv;
  lv.cls = plv.nll;
  lv.subject_ib = terms.ib_mean;
  lv.subject_kl = terms.kl_mean;
  lv.population_ib = plv.total;
  lv.population_kl = plv.kl;
  lv.structural = reg.structural;
  lv.sparsity = reg.sparsity;
  lv.mi_weighted = reg.mi_weighted;
  lv.alpha = att.alpha;
  lv.pop_logits = pe.logits;
  lv.has_population = true;
  lv.total = ad::add(ad::add(lv.cls, ad::scale(lv.subject_ib, train.weights.ib)),
                     ad::scale(l_hg, train.weights.hetero));
  return lv;
}

LossVars build_total_loss(ad::Tape& t, Model& m, const CohortData& cohort,
                          const PopulationState& pop, const NoiseBank& bank,
                          const std::vector<int>& labels, const std::vector<std::uint8_t>& mask,
                          const TrainSettings& train) {
  StageOne s1 = forward_individual(t, m, cohort, bank, &pop, train);
  return finish_total_loss(t, m, s1, cohort, pop, bank, labels, mask, train);
}

std::vector<BiomarkerRep> infer_biomarkers(Model& m, const CohortData& cohort,
                                           const TrainSettings& train) {
  ad::Tape t;
  NoiseBank bank = make_infer_noise();
  StageOne s1 = forward_individual(t, m, cohort, bank, nullptr, train);
  std::vector<BiomarkerRep> out;
  out.reserve(cohort.size());
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    BiomarkerRep r;
    r.subject_id = cohort.subjects[i].id;
    r.rep = s1.subjects[i].rep.value();
    r.mu = s1.subjects[i].mu.value();
    r.sigma = s1.subjects[i].sigma.value();
    out.push_back(std::move(r));
  }
  return out;
}

Tensor rep_matrix_of(const std::vector<BiomarkerRep>& reps) {
  if (reps.empty()) throw ValidationError("rep_matrix_of: empty");
  Tensor m(reps.size(), reps.front().rep.cols());
  for (std::size_t i = 0; i < reps.size(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = reps[i].rep(0, j);
  }
  return m;
}

InferenceResult infer(Model& m, const CohortData& cohort, const PopulationState& pop,
                      const TrainSettings& train, int zero_path, Rng* sample_rng) {
  if (!pop.ready) throw ValidationError("infer: population state not built");
  ad::Tape t;
  NoiseBank bank = make_infer_noise();
  if (train.infer_sampling && sample_rng != nullptr) {
    // sampled representations, but no dropout
    bank = make_train_noise(cohort, m.dims, 0.0, 0.0, *sample_rng);
  }

  StageOne s1;
  {
    // forward with optional path ablation: zeroed adjacency keeps self-loops
    s1 = forward_individual(t, m, cohort, bank, nullptr, train);
    for (std::size_t k = 0; k < 4; ++k) {
      const Tensor& adj = (static_cast<int>(k) == zero_path)
                              ? Tensor(cohort.size(), cohort.size())
                              : pop.graphs.adjacencies[k];
      s1.z_paths[k] = gat_layer(t, m.gat[k], s1.reps, adj);
    }
    s1.has_paths = true;
  }

  MetaPathAttentionResult att =
      metapath_attention(t, m.att, s1.z_paths, pop.equivalence, pop.mi, train.beta_hetero);
  Var z_h = aggregate(t, s1.z_paths, att.alpha);
  PopulationEncoding pe = population_encode(t, m.pop_enc, z_h, cohort.demo_features,
                                            bank.train_mode ? &bank.population_eps : nullptr);

  InferenceResult out;
  out.reps.reserve(cohort.size());
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    BiomarkerRep r;
    r.subject_id = cohort.subjects[i].id;
    r.rep = s1.subjects[i].rep.value();
    r.mu = s1.subjects[i].mu.value();
    r.sigma = s1.subjects[i].sigma.value();
    out.reps.push_back(std::move(r));
  }
  out.rep_matrix = s1.reps.value();
  out.z_h = z_h.value();

  const Tensor& logits = pe.logits.value();
  out.scores = Tensor(cohort.size(), 1);
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    const double a = logits(i, 0), b = logits(i, 1);
    const double mx = std::max(a, b);
    const double ea = std::exp(a - mx), eb = std::exp(b - mx);
    out.scores(i, 0) = eb / (ea + eb);
  }
  for (std::size_t k = 0; k < 4; ++k) out.alpha[k] = att.alpha.value()(0, k);
  return out;
}

PopulationState build_population_state(Model& m, const CohortData& cohort,
                                       const PopGraphConfig& pg, const TrainSettings& train) {
  PopulationState st;
  const std::vector<BiomarkerRep> reps = infer_biomarkers(m, cohort, train);
  st.graphs = build_metapath_graphs(rep_matrix_of(reps), cohort.demos, cohort.ids(), pg);
  st.equivalence = wl::build_equivalence_matrix(st.graphs.adjacencies);
  st.mi = {0.0, 0.0, 0.0, 0.0};
  st.ready = true;
  return st;
}

}  // namespace ibg
