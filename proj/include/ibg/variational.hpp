#pragma once

#include "ibg/ops.hpp"
#include "ibg/rng.hpp"
#include "ibg/tape.hpp"

namespace ibg {

// Closed-form KL( N(mu, diag sigma^2) || N(0, I) ).
// Throws on nonpositive sigma entries.
double kl_diag_to_standard(const Tensor& mu, const Tensor& sigma);

// mu + sigma .* eps with eps ~ N(0, I); plain-math version.
Tensor reparam_sample(const Tensor& mu, const Tensor& sigma, Rng& rng);

namespace ad {

// Tape version: differentiable w.r.t. mu and sigma; eps is drawn from rng
// and enters as a constant.
Var reparam_sample(Var mu, Var sigma, Rng& rng);

// Same but with pre-drawn noise, for frozen-noise evaluation.
Var reparam_with_noise(Var mu, Var sigma, const Tensor& eps);

}  // namespace ad

}  // namespace ibg
