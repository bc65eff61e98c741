#pragma once

#include <optional>
#include <string>

#include "ibg/nn.hpp"
#include "ibg/tensor.hpp"

namespace ibg {

struct GraphFormerConfig {
  std::size_t feature_dim = 0;   // F, from the brain graphs
  std::size_t embed_dim = 64;    // d
  std::size_t biomarker_dim = 32;  // d_T
};

// Projection, global-attention and residual-GNN weights. lambda/gamma are
// stored unconstrained and squashed through a sigmoid so the mixing stays a
// convex combination.
struct GraphFormerParams {
  ad::Affine f_i, f_q, f_k, f_v;
  ad::Parameter* lambda_raw = nullptr;
  ad::Parameter* gamma_raw = nullptr;
  ad::Parameter* w_gnn = nullptr;
};

// Gaussian encoder over pooled node features plus the biomarker classifier.
struct SubjectEncoderParams {
  ad::Mlp2 mu_net, logvar_net;
  ad::Affine classifier;
};

GraphFormerParams make_graphformer_params(ad::ParamSet& ps, const GraphFormerConfig& cfg,
                                          Rng& rng);
SubjectEncoderParams make_subject_encoder_params(ad::ParamSet& ps, const GraphFormerConfig& cfg,
                                                 Rng& rng);

// Z0 = f_I(X)
ad::Var project_features(ad::Tape& t, const GraphFormerParams& p, ad::Var x);

// Kernelized global attention with Frobenius-normalized Q/K, degree-style
// normalization, and the lambda residual mix. forced_lambda pins the
// effective mixing weight (used by the ablation switch and tests).
ad::Var global_attention(ad::Tape& t, const GraphFormerParams& p, ad::Var z0,
                         std::optional<double> forced_lambda = std::nullopt);

// D^-1/2 (A+I) D^-1/2, the propagation operator of the residual GNN.
Tensor gcn_operator(const Tensor& adjacency);

ad::Var residual_gnn(ad::Tape& t, const GraphFormerParams& p, ad::Var z0,
                     const Tensor& adjacency);

// Z_O = (1-gamma) Z + gamma gnn_out
ad::Var integrate(ad::Tape& t, const GraphFormerParams& p, ad::Var z, ad::Var gnn_out,
                  std::optional<double> forced_gamma = std::nullopt);

struct SubjectEncoding {
  ad::Var z_o;     // |V| x d integrated node embeddings
  ad::Var pooled;  // 1 x d
  ad::Var mu, logvar, sigma, rep;  // 1 x d_T; rep sampled (train) or mu (infer)
  ad::Var logits;  // 1 x 2
};

// Node-mean pooling, Gaussian encoding, optional reparameterized sample.
// noise == nullptr selects the mean (inference).
SubjectEncoding encode_subject(ad::Tape& t, const SubjectEncoderParams& p, ad::Var z_o,
                               const Tensor* noise,
                               const Tensor* pooled_dropout_mask = nullptr);

struct SubjectLossVars {
  ad::Var total;  // nll + beta * kl
  ad::Var nll;
  ad::Var kl;
};

SubjectLossVars subject_ib_loss(ad::Tape& t, const SubjectEncoding& enc, int label, double beta);

// Full per-subject pipeline; dropout masks are optional (training only).
struct SubjectForwardOptions {
  const Tensor* noise = nullptr;              // d_T reparameterization draw
  const Tensor* z0_dropout_mask = nullptr;    // |V| x d
  const Tensor* pooled_dropout_mask = nullptr;  // 1 x d
  std::optional<double> forced_lambda;
  std::optional<double> forced_gamma;
};

SubjectEncoding graphformer_forward(ad::Tape& t, const GraphFormerParams& p,
                                    const SubjectEncoderParams& enc_params,
                                    const Tensor& node_features, const Tensor& adjacency,
                                    const SubjectForwardOptions& opt);

// Per-subject compressed representation with its encoder parameters.
struct BiomarkerRep {
  std::string subject_id;
  Tensor rep;    // 1 x d_T
  Tensor mu;     // 1 x d_T
  Tensor sigma;  // 1 x d_T
};

}  // namespace ibg
