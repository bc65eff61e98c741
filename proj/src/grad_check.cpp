#include "ibg/grad_check.hpp"

#include <cmath>

#include "ibg/error.hpp"

namespace ibg::ad {

double grad_check(const std::function<Var(Tape&)>& build_loss,
                  const std::vector<Parameter*>& params, double step) {
  if (!(step > 0.0) || step > 1e-3) {
    throw ValidationError("grad_check: step must be in (0, 1e-3]");
  }

  for (Parameter* p : params) p->zero_grad();
  {
    Tape tape;
    Var loss = build_loss(tape);
    tape.backward(loss);
  }

  auto eval = [&](void) -> double {
    Tape tape;
    const double v = build_loss(tape).value().scalar_value();
    if (!std::isfinite(v)) throw NumericError("grad_check: non-finite loss at perturbed point");
    return v;
  };

  double worst = 0.0;
  for (Parameter* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double orig = p->value[i];
      p->value[i] = orig + step;
      const double fp = eval();
      p->value[i] = orig - step;
      const double fm = eval();
      p->value[i] = orig;
      const double cd = (fp - fm) / (2.0 * step);
      const double an = p->grad[i];
      const double denom = std::max({std::abs(an), std::abs(cd), 1e-8});
      worst = std::max(worst, std::abs(an - cd) / denom);
    }
  }
  return worst;
}

}  // namespace ibg::ad
