#pragma once

#include <array>
#include <memory>
#include <vector>

#include "ibg/nn.hpp"
#include "ibg/optim.hpp"
#include "ibg/wl.hpp"

namespace ibg {

struct HeteroConfig {
  std::size_t biomarker_dim = 32;  // d_T, GAT input width
  std::size_t gat_dim = 64;        // d, path representation width
  std::size_t attention_dim = 16;  // d_att
  std::size_t hetero_dim = 32;     // d_H
  std::size_t demo_dim = 0;        // encoded demographic vector width
  double leaky_slope = 0.2;
  double beta_hetero = 0.5;
  std::size_t dv_hidden = 32;
  double dv_lr = 1e-3;
  int dv_inner_steps = 5;
};

// One single-head GAT per meta-path: linear node transform + additive
// attention split into source/target halves.
struct GatParams {
  ad::Parameter* w = nullptr;       // d_T x d
  ad::Parameter* attn_src = nullptr;  // d x 1
  ad::Parameter* attn_dst = nullptr;  // d x 1
  double leaky_slope = 0.2;
};

struct MetaPathAttentionParams {
  ad::Parameter* u = nullptr;      // d_att x 1
  ad::Parameter* w_att = nullptr;  // d x d_att
  ad::Parameter* b_att = nullptr;  // 1 x d_att
};

struct PopulationEncoderParams {
  ad::Mlp2 mu_net, logvar_net;  // (d + demo) -> d -> d_H
  ad::Affine classifier;        // d_H -> 2
};

std::array<GatParams, 4> make_gat_params(ad::ParamSet& ps, const HeteroConfig& cfg, Rng& rng);
MetaPathAttentionParams make_attention_params(ad::ParamSet& ps, const HeteroConfig& cfg,
                                              Rng& rng);
PopulationEncoderParams make_population_encoder_params(ad::ParamSet& ps,
                                                       const HeteroConfig& cfg, Rng& rng);

// Masked single-head attention over A_k edges plus self-loops; tanh output.
ad::Var gat_layer(ad::Tape& t, const GatParams& p, ad::Var reps, const Tensor& adjacency);

// Donsker-Varadhan mutual-information estimator with its own discriminator
// and optimizer; inputs are detached value snapshots.
class DvEstimator {
 public:
  DvEstimator(std::size_t rep_dim, std::size_t path_dim, std::size_t hidden, double lr,
              Rng& rng);

  // DV bound mean(psi(t_i, z_i)) - log mean exp(psi(t_i, z_perm(i))) for a
  // given marginal shuffle; no training.
  double estimate(const Tensor& reps, const Tensor& z, const std::vector<std::size_t>& perm);

  // inner_steps gradient ascents on the bound with fresh shuffles, then one
  // estimate with a final fresh shuffle.
  double train_and_estimate(const Tensor& reps, const Tensor& z, int inner_steps, Rng& rng);

  ad::ParamSet& params() { return params_; }

 private:
  ad::Var bound(ad::Tape& t, const Tensor& reps, const Tensor& z,
                const std::vector<std::size_t>& perm);

  ad::ParamSet params_;
  ad::Mlp2 net_;
  std::unique_ptr<ad::Adam> opt_;
};

struct MetaPathAttentionResult {
  ad::Var alpha;                   // 1 x 4, on the simplex
  std::array<ad::Var, 4> scores;   // constrained pre-softmax scores
};

// Algorithm-style scoring: u^T tanh(W_att z_mean + b_att) * exp(-beta_H I_k),
// class-mean replacement over WL-equivalent meta-paths, then softmax.
// mi entries are treated as measured constants and clamped at 0.
MetaPathAttentionResult metapath_attention(ad::Tape& t, const MetaPathAttentionParams& p,
                                           const std::array<ad::Var, 4>& z_paths,
                                           const wl::EquivalenceMatrix& s,
                                           const std::array<double, 4>& mi,
                                           double beta_hetero);

ad::Var aggregate(ad::Tape& t, const std::array<ad::Var, 4>& z_paths, ad::Var alpha);

struct PopulationEncoding {
  ad::Var mu, logvar, sigma, z;  // N x d_H
  ad::Var logits;                // N x 2
};

// Gaussian encoding of (Z_H row, demographic vector); noise == nullptr
// selects the mean.
PopulationEncoding population_encode(ad::Tape& t, const PopulationEncoderParams& p, ad::Var z_h,
                                     const Tensor& demo, const Tensor* noise);

struct PopulationLossVars {
  ad::Var total;  // nll + beta_H * kl
  ad::Var nll;
  ad::Var kl;
};

PopulationLossVars population_ib_loss(ad::Tape& t, const PopulationEncoding& enc,
                                      const std::vector<int>& labels,
                                      const std::vector<std::uint8_t>& mask,
                                      double beta_hetero);

struct RegularizerVars {
  ad::Var structural;  // sum_{ij} S_ij ||Z_i - Z_j||_F^2
  ad::Var sparsity;    // ||alpha||_1
  ad::Var mi_weighted;  // sum_k alpha_k I_k
};

RegularizerVars regularizers(ad::Tape& t, const std::array<ad::Var, 4>& z_paths,
                             const wl::EquivalenceMatrix& s, ad::Var alpha,
                             const std::array<double, 4>& mi);

// L_HG = L_pop_ib + mu L_struct + kappa L_sparse + eta L_MI
ad::Var hg_loss(ad::Tape& t, ad::Var population_ib, const RegularizerVars& reg, double mu,
                double kappa, double eta);

}  // namespace ibg
