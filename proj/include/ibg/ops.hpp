#pragma once

#include <cstdint>
#include <vector>

#include "ibg/tape.hpp"

// Differentiable primitives. Every function records one node with a local
// adjoint rule; composites live with their modules.
namespace ibg::ad {

Var matmul(Var a, Var b);
Var transpose(Var a);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);          // elementwise
Var scale(Var a, double c);     // a * c
Var offset(Var a, double c);    // a + c

Var mul_scalar(Var a, Var s);   // s is 1x1
Var div_scalar(Var a, Var s);
Var add_rowvec(Var a, Var b);   // b is 1xC, broadcast over rows
Var div_colvec(Var a, Var n);   // row i divided by n(i,0)

Var row_softmax(Var a);
// mask entries of 0 receive probability 0; every row needs >= 1 allowed entry
Var masked_row_softmax(Var a, const Tensor& mask);

Var tanh(Var a);
Var sigmoid(Var a);
Var relu(Var a);
Var leaky_relu(Var a, double slope);
Var exp(Var a);
Var log(Var a);
Var abs(Var a);

Var mean_axis0(Var a);  // 1xC column means
Var mean_all(Var a);
Var sum_all(Var a);
Var frobenius_norm(Var a);

Var concat_cols(Var a, Var b);
Var stack_scalars(const std::vector<Var>& xs);  // 1xK from K scalars
Var stack_rows(const std::vector<Var>& rows);   // NxC from N row vectors
Var entry(Var a, std::size_t i, std::size_t j);

// identity except entries with |x| < eps are pushed to +-eps (zero to +eps);
// gradient passes through unclamped entries only
Var clamp_magnitude_min(Var a, double eps);

// mean over masked rows of -log softmax(logits)[label]; logits NxK
Var cross_entropy_with_logits(Var logits, const std::vector<int>& labels,
                              const std::vector<std::uint8_t>& mask);

// per-row KL( N(mu, diag exp(logvar)) || N(0, I) ), shape Nx1
Var gauss_kl_per_row(Var mu, Var logvar);

Var masked_mean_rows(Var v, const std::vector<std::uint8_t>& mask);  // v is Nx1

// --- composites ---
Var affine(Var x, Var w, Var b);  // x*w + b-row
Var dot(Var a, Var b);            // sum(a . b)

}  // namespace ibg::ad
