#include "ibg/hetero.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ibg/error.hpp"
#include "ibg/variational.hpp"

namespace ibg {

using ad::Var;

std::array<GatParams, 4> make_gat_params(ad::ParamSet& ps, const HeteroConfig& cfg, Rng& rng) {
  std::array<GatParams, 4> out;
  for (std::size_t k = 0; k < 4; ++k) {
    const std::string base = "gat." + std::to_string(k);
    out[k].w = &ps.create_glorot(base + ".w", cfg.biomarker_dim, cfg.gat_dim, rng);
    out[k].attn_src = &ps.create_glorot(base + ".attn_src", cfg.gat_dim, 1, rng);
    out[k].attn_dst = &ps.create_glorot(base + ".attn_dst", cfg.gat_dim, 1, rng);
    out[k].leaky_slope = cfg.leaky_slope;
  }
  return out;
}

MetaPathAttentionParams make_attention_params(ad::ParamSet& ps, const HeteroConfig& cfg,
                                              Rng& rng) {
  MetaPathAttentionParams p;
  p.u = &ps.create_glorot("att.u", cfg.attention_dim, 1, rng);
  p.w_att = &ps.create_glorot("att.w", cfg.gat_dim, cfg.attention_dim, rng);
  p.b_att = &ps.create("att.b", 1, cfg.attention_dim);
  return p;
}

PopulationEncoderParams make_population_encoder_params(ad::ParamSet& ps,
                                                       const HeteroConfig& cfg, Rng& rng) {
  PopulationEncoderParams p;
  const std::size_t in = cfg.gat_dim + cfg.demo_dim;
  p.mu_net = make_mlp2(ps, "pop.mu", in, cfg.gat_dim, cfg.hetero_dim, rng);
  p.logvar_net = make_mlp2(ps, "pop.logvar", in, cfg.gat_dim, cfg.hetero_dim, rng);
  p.classifier = make_affine(ps, "pop.classifier", cfg.hetero_dim, 2, rng);
  return p;
}

Var gat_layer(ad::Tape& t, const GatParams& p, Var reps, const Tensor& adjacency) {
  const std::size_t n = reps.value().rows();
  if (adjacency.rows() != n || adjacency.cols() != n) {
    throw ShapeError("gat_layer: adjacency " + adjacency.shape_str() + " vs reps " +
                     reps.value().shape_str());
  }

  Var f = ad::matmul(reps, t.param(*p.w));            // N x d
  Var s_src = ad::matmul(f, t.param(*p.attn_src));    // N x 1
  Var s_dst = ad::matmul(f, t.param(*p.attn_dst));    // N x 1

  // e_ij = s_src(i) + s_dst(j) via rank-1 broadcasts
  Var e = ad::add(ad::matmul(s_src, t.constant(Tensor::ones(1, n))),
                  ad::matmul(t.constant(Tensor::ones(n, 1)), ad::transpose(s_dst)));
  e = ad::leaky_relu(e, p.leaky_slope);

  Tensor mask(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    mask(i, i) = 1.0;  // self-loop keeps every neighborhood nonempty
    for (std::size_t j = 0; j < n; ++j) {
      if (adjacency(i, j) > 0.0) mask(i, j) = 1.0;
    }
  }
  Var att = ad::masked_row_softmax(e, mask);
  return ad::tanh(ad::matmul(att, f));
}

DvEstimator::DvEstimator(std::size_t rep_dim, std::size_t path_dim, std::size_t hidden,
                         double lr, Rng& rng) {
  net_ = make_mlp2(params_, "dv", rep_dim + path_dim, hidden, 1, rng, ad::Hidden::Relu);
  ad::Adam::Settings s;
  s.lr = lr;
  s.weight_decay = 1e-3;  // keeps the witness from memorizing small batches
  opt_ = std::make_unique<ad::Adam>(params_.all(), s);
}

Var DvEstimator::bound(ad::Tape& t, const Tensor& reps, const Tensor& z,
                       const std::vector<std::size_t>& perm) {
  const std::size_t n = reps.rows();
  if (z.rows() != n || perm.size() != n) {
    throw ShapeError("dv bound: misaligned inputs");
  }
  Tensor joint(n, reps.cols() + z.cols());
  Tensor marg(n, reps.cols() + z.cols());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < reps.cols(); ++j) {
      joint(i, j) = reps(i, j);
      marg(i, j) = reps(i, j);
    }
    for (std::size_t j = 0; j < z.cols(); ++j) {
      joint(i, reps.cols() + j) = z(i, j);
      marg(i, reps.cols() + j) = z(perm[i], j);
    }
  }
  Var sj = apply(t, net_, t.constant(joint));  // N x 1
  Var sm = apply(t, net_, t.constant(marg));
  // log-mean-exp with max subtraction; the max enters as a constant, which
  // leaves the gradient intact
  double mx = sm.value()[0];
  for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, sm.value()[i]);
  Var lme = ad::offset(ad::log(ad::mean_all(ad::exp(ad::offset(sm, -mx)))), mx);
  return ad::sub(ad::mean_all(sj), lme);
}

double DvEstimator::estimate(const Tensor& reps, const Tensor& z,
                             const std::vector<std::size_t>& perm) {
  ad::Tape t;
  return bound(t, reps, z, perm).value().scalar_value();
}

double DvEstimator::train_and_estimate(const Tensor& reps, const Tensor& z, int inner_steps,
                                       Rng& rng) {
  const std::size_t n = reps.rows();
  if (n < 8) {
    throw ValidationError("dv_mi_estimate: need >= 8 samples, got " + std::to_string(n));
  }
  for (int s = 0; s < inner_steps; ++s) {
    ad::Tape t;
    Var dv = bound(t, reps, z, rng.derangement(n));
    Var loss = ad::scale(dv, -1.0);  // ascend the bound
    params_.zero_grads();
    t.backward(loss);
    opt_->step();
  }
  // average a few fresh shuffles; a single draw is noisy at small N
  double acc = 0.0;
  const int draws = 8;
  for (int s = 0; s < draws; ++s) acc += estimate(reps, z, rng.derangement(n));
  return acc / draws;
}

MetaPathAttentionResult metapath_attention(ad::Tape& t, const MetaPathAttentionParams& p,
                                           const std::array<ad::Var, 4>& z_paths,
                                           const wl::EquivalenceMatrix& s,
                                           const std::array<double, 4>& mi,
                                           double beta_hetero) {
  std::array<Var, 4> raw;
  for (std::size_t k = 0; k < 4; ++k) {
    Var z_mean = ad::mean_axis0(z_paths[k]);  // 1 x d
    Var score = ad::matmul(ad::tanh(ad::affine(z_mean, t.param(*p.w_att), t.param(*p.b_att))),
                           t.param(*p.u));  // 1 x 1
    const double mi_k = std::max(0.0, mi[k]);
    raw[k] = ad::scale(score, std::exp(-beta_hetero * mi_k));
  }

  // class-mean replacement: every member of a WL-equivalence class shares
  // one score node, making the final weights exactly equal
  std::array<Var, 4> constrained;
  std::array<bool, 4> done{};
  for (std::size_t k = 0; k < 4; ++k) {
    if (done[k]) continue;
    std::vector<std::size_t> members;
    for (std::size_t j = 0; j < 4; ++j) {
      if (s.at(k, j)) members.push_back(j);
    }
    Var acc = raw[members[0]];
    for (std::size_t m = 1; m < members.size(); ++m) acc = ad::add(acc, raw[members[m]]);
    Var mean = ad::scale(acc, 1.0 / static_cast<double>(members.size()));
    for (std::size_t j : members) {
      constrained[j] = mean;
      done[j] = true;
    }
  }

  MetaPathAttentionResult out;
  out.scores = constrained;
  out.alpha = ad::row_softmax(
      ad::stack_scalars({constrained[0], constrained[1], constrained[2], constrained[3]}));
  return out;
}

Var aggregate(ad::Tape& t, const std::array<ad::Var, 4>& z_paths, Var alpha) {
  (void)t;
  const Tensor& av = alpha.value();
  if (av.rows() != 1 || av.cols() != 4) {
    throw ShapeError("aggregate: alpha must be 1x4, got " + av.shape_str());
  }
  Var out;
  for (std::size_t k = 0; k < 4; ++k) {
    Var term = ad::mul_scalar(z_paths[k], ad::entry(alpha, 0, k));
    out = (k == 0) ? term : ad::add(out, term);
  }
  return out;
}

PopulationEncoding population_encode(ad::Tape& t, const PopulationEncoderParams& p, Var z_h,
                                     const Tensor& demo, const Tensor* noise) {
  if (demo.rows() != z_h.value().rows()) {
    throw ShapeError("population_encode: demo " + demo.shape_str() + " vs z_h " +
                     z_h.value().shape_str());
  }
  Var input = ad::concat_cols(z_h, t.constant(demo));
  PopulationEncoding e;
  e.mu = apply(t, p.mu_net, input);
  e.logvar = apply(t, p.logvar_net, input);
  e.sigma = ad::exp(ad::scale(e.logvar, 0.5));
  e.z = (noise != nullptr) ? ad::reparam_with_noise(e.mu, e.sigma, *noise) : e.mu;
  e.logits = apply(t, p.classifier, e.z);
  return e;
}

PopulationLossVars population_ib_loss(ad::Tape& t, const PopulationEncoding& enc,
                                      const std::vector<int>& labels,
                                      const std::vector<std::uint8_t>& mask,
                                      double beta_hetero) {
  (void)t;
  PopulationLossVars out;
  out.nll = ad::cross_entropy_with_logits(enc.logits, labels, mask);
  out.kl = ad::masked_mean_rows(ad::gauss_kl_per_row(enc.mu, enc.logvar), mask);
  out.total = ad::add(out.nll, ad::scale(out.kl, beta_hetero));
  return out;
}

RegularizerVars regularizers(ad::Tape& t, const std::array<ad::Var, 4>& z_paths,
                             const wl::EquivalenceMatrix& s, Var alpha,
                             const std::array<double, 4>& mi) {
  RegularizerVars out;

  Var structural = t.constant(Tensor::scalar(0.0));
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      if (i == j || !s.at(i, j)) continue;
      Var diff = ad::sub(z_paths[i], z_paths[j]);
      structural = ad::add(structural, ad::sum_all(ad::mul(diff, diff)));
    }
  }
  out.structural = structural;

  out.sparsity = ad::sum_all(ad::abs(alpha));

  Var mi_sum = t.constant(Tensor::scalar(0.0));
  for (std::size_t k = 0; k < 4; ++k) {
    mi_sum = ad::add(mi_sum, ad::scale(ad::entry(alpha, 0, k), std::max(0.0, mi[k])));
  }
  out.mi_weighted = mi_sum;
  return out;
}

Var hg_loss(ad::Tape& t, Var population_ib, const RegularizerVars& reg, double mu, double kappa,
            double eta) {
  (void)t;
  Var out = population_ib;
  out = ad::add(out, ad::scale(reg.structural, mu));
  out = ad::add(out, ad::scale(reg.sparsity, kappa));
  out = ad::add(out, ad::scale(reg.mi_weighted, eta));
  return out;
}

}  // namespace ibg
