#include "ibg/variational.hpp"

#include <cmath>
#include <string>

#include "ibg/error.hpp"

namespace ibg {

double kl_diag_to_standard(const Tensor& mu, const Tensor& sigma) {
  if (!mu.same_shape(sigma)) {
    throw ShapeError("kl_diag_to_standard: " + mu.shape_str() + " vs " + sigma.shape_str());
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double s = sigma[i];
    if (s <= 0.0) {
      throw ValidationError("kl_diag_to_standard: nonpositive sigma at entry " +
                            std::to_string(i));
    }
    kl += 0.5 * (mu[i] * mu[i] + s * s - 1.0 - 2.0 * std::log(s));
  }
  return kl;
}

Tensor reparam_sample(const Tensor& mu, const Tensor& sigma, Rng& rng) {
  if (!mu.same_shape(sigma)) {
    throw ShapeError("reparam_sample: " + mu.shape_str() + " vs " + sigma.shape_str());
  }
  Tensor out(mu.rows(), mu.cols());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (sigma[i] <= 0.0) {
      throw ValidationError("reparam_sample: nonpositive sigma at entry " + std::to_string(i));
    }
    out[i] = mu[i] + sigma[i] * rng.normal();
  }
  return out;
}

namespace ad {

Var reparam_with_noise(Var mu, Var sigma, const Tensor& eps) {
  const Tensor& sv = sigma.value();
  for (std::size_t i = 0; i < sv.size(); ++i) {
    if (sv[i] <= 0.0) {
      throw ValidationError("reparam_sample: nonpositive sigma at entry " + std::to_string(i));
    }
  }
  Tape& t = *mu.tape();
  return add(mu, mul(sigma, t.constant(eps)));
}

Var reparam_sample(Var mu, Var sigma, Rng& rng) {
  const Tensor& mv = mu.value();
  Tensor eps(mv.rows(), mv.cols());
  for (std::size_t i = 0; i < eps.size(); ++i) eps[i] = rng.normal();
  return reparam_with_noise(mu, sigma, eps);
}

}  // namespace ad

}  // namespace ibg
