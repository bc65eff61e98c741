#include "ibg/graphformer.hpp"

#include <cmath>

#include "ibg/error.hpp"
#include "ibg/variational.hpp"

namespace ibg {

using ad::Var;

GraphFormerParams make_graphformer_params(ad::ParamSet& ps, const GraphFormerConfig& cfg,
                                          Rng& rng) {
  GraphFormerParams p;
  p.f_i = make_affine(ps, "gf.f_i", cfg.feature_dim, cfg.embed_dim, rng);
  p.f_q = make_affine(ps, "gf.f_q", cfg.embed_dim, cfg.embed_dim, rng);
  p.f_k = make_affine(ps, "gf.f_k", cfg.embed_dim, cfg.embed_dim, rng);
  p.f_v = make_affine(ps, "gf.f_v", cfg.embed_dim, cfg.embed_dim, rng);
  p.lambda_raw = &ps.create_scalar("gf.lambda_raw", 0.0);  // sigmoid(0) = 0.5
  p.gamma_raw = &ps.create_scalar("gf.gamma_raw", 0.0);
  p.w_gnn = &ps.create_glorot("gf.w_gnn", cfg.embed_dim, cfg.embed_dim, rng);
  return p;
}

SubjectEncoderParams make_subject_encoder_params(ad::ParamSet& ps, const GraphFormerConfig& cfg,
                                                 Rng& rng) {
  SubjectEncoderParams p;
  p.mu_net = make_mlp2(ps, "enc.mu", cfg.embed_dim, cfg.embed_dim, cfg.biomarker_dim, rng);
  p.logvar_net = make_mlp2(ps, "enc.logvar", cfg.embed_dim, cfg.embed_dim, cfg.biomarker_dim, rng);
  p.classifier = make_affine(ps, "enc.classifier", cfg.biomarker_dim, 2, rng);
  return p;
}

Var project_features(ad::Tape& t, const GraphFormerParams& p, Var x) {
  return apply(t, p.f_i, x);
}

Var global_attention(ad::Tape& t, const GraphFormerParams& p, Var z0,
                     std::optional<double> forced_lambda) {
  const std::size_t n = z0.value().rows();
  const double inv_n = 1.0 / static_cast<double>(n);

  Var q = apply(t, p.f_q, z0);
  Var k = apply(t, p.f_k, z0);
  Var v = apply(t, p.f_v, z0);

  Var qn = ad::frobenius_norm(q);
  Var kn = ad::frobenius_norm(k);
  if (qn.value().scalar_value() <= 0.0 || kn.value().scalar_value() <= 0.0) {
    throw NumericError("global_attention: degenerate projection (zero Frobenius norm)");
  }
  Var qt = ad::div_scalar(q, qn);
  Var kt = ad::div_scalar(k, kn);

  // kernelized order: K~^T V and K~^T e are d x d / d x 1 products
  Var ktv = ad::matmul(ad::transpose(kt), v);
  Var bracket = ad::add(v, ad::scale(ad::matmul(qt, ktv), inv_n));

  Var kte = ad::matmul(ad::transpose(kt), t.constant(Tensor::ones(n, 1)));
  Var nvec = ad::offset(ad::scale(ad::matmul(qt, kte), inv_n), 1.0);
  nvec = ad::clamp_magnitude_min(nvec, 1e-6);

  Var attended = ad::div_colvec(bracket, nvec);

  if (forced_lambda) {
    const double lam = *forced_lambda;
    if (lam == 0.0) return z0;
    return ad::add(ad::scale(attended, lam), ad::scale(z0, 1.0 - lam));
  }
  Var lambda = ad::sigmoid(t.param(*p.lambda_raw));
  Var one_minus = ad::offset(ad::scale(lambda, -1.0), 1.0);
  return ad::add(ad::mul_scalar(attended, lambda), ad::mul_scalar(z0, one_minus));
}

Tensor gcn_operator(const Tensor& adjacency) {
  if (adjacency.rows() != adjacency.cols()) {
    throw ShapeError("gcn_operator: adjacency must be square, got " + adjacency.shape_str());
  }
  const std::size_t n = adjacency.rows();
  Tensor tilde = adjacency;
  for (std::size_t i = 0; i < n; ++i) {
    if (tilde(i, i) != 0.0) throw ValidationError("gcn_operator: adjacency diagonal must be zero");
    tilde(i, i) = 1.0;
  }
  std::vector<double> dinv(n);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (tilde(i, j) < 0.0) throw ValidationError("gcn_operator: negative edge weight");
      deg += tilde(i, j);
    }
    dinv[i] = 1.0 / std::sqrt(deg);  // self-loop keeps deg >= 1
  }
  Tensor s(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) s(i, j) = dinv[i] * tilde(i, j) * dinv[j];
  }
  return s;
}

Var residual_gnn(ad::Tape& t, const GraphFormerParams& p, Var z0, const Tensor& adjacency) {
  Var op = t.constant(gcn_operator(adjacency));
  return ad::relu(ad::matmul(op, ad::matmul(z0, t.param(*p.w_gnn))));
}

Var integrate(ad::Tape& t, const GraphFormerParams& p, Var z, Var gnn_out,
              std::optional<double> forced_gamma) {
  if (!z.value().same_shape(gnn_out.value())) {
    throw ShapeError("integrate: " + z.value().shape_str() + " vs " +
                     gnn_out.value().shape_str());
  }
  if (forced_gamma) {
    const double g = *forced_gamma;
    return ad::add(ad::scale(z, 1.0 - g), ad::scale(gnn_out, g));
  }
  Var gamma = ad::sigmoid(t.param(*p.gamma_raw));
  Var one_minus = ad::offset(ad::scale(gamma, -1.0), 1.0);
  return ad::add(ad::mul_scalar(z, one_minus), ad::mul_scalar(gnn_out, gamma));
}

SubjectEncoding encode_subject(ad::Tape& t, const SubjectEncoderParams& p, Var z_o,
                               const Tensor* noise, const Tensor* pooled_dropout_mask) {
  SubjectEncoding e;
  e.z_o = z_o;
  e.pooled = ad::mean_axis0(z_o);
  if (pooled_dropout_mask != nullptr) {
    e.pooled = ad::mul(e.pooled, t.constant(*pooled_dropout_mask));
  }
  e.mu = apply(t, p.mu_net, e.pooled);
  e.logvar = apply(t, p.logvar_net, e.pooled);
  e.sigma = ad::exp(ad::scale(e.logvar, 0.5));
  e.rep = (noise != nullptr) ? ad::reparam_with_noise(e.mu, e.sigma, *noise) : e.mu;
  e.logits = apply(t, p.classifier, e.rep);
  return e;
}

SubjectLossVars subject_ib_loss(ad::Tape& t, const SubjectEncoding& enc, int label,
                                double beta) {
  (void)t;
  SubjectLossVars out;
  out.nll = ad::cross_entropy_with_logits(enc.logits, {label}, {1});
  Var kl_rows = ad::gauss_kl_per_row(enc.mu, enc.logvar);
  out.kl = ad::entry(kl_rows, 0, 0);
  out.total = ad::add(out.nll, ad::scale(out.kl, beta));
  return out;
}

SubjectEncoding graphformer_forward(ad::Tape& t, const GraphFormerParams& p,
                                    const SubjectEncoderParams& enc_params,
                                    const Tensor& node_features, const Tensor& adjacency,
                                    const SubjectForwardOptions& opt) {
  Var x = t.constant(node_features);
  Var z0 = project_features(t, p, x);
  if (opt.z0_dropout_mask != nullptr) {
    z0 = ad::mul(z0, t.constant(*opt.z0_dropout_mask));
  }
  Var z = global_attention(t, p, z0, opt.forced_lambda);
  Var g = residual_gnn(t, p, z0, adjacency);
  Var z_o = integrate(t, p, z, g, opt.forced_gamma);
  return encode_subject(t, enc_params, z_o, opt.noise, opt.pooled_dropout_mask);
}

}  // namespace ibg
