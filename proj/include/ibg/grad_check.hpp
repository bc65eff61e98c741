#pragma once

#include <functional>
#include <vector>

#include "ibg/tape.hpp"

namespace ibg::ad {

// Central-difference check of d(loss)/d(params). The builder must construct
// the loss deterministically from the current parameter values (any noise
// frozen by the caller). Returns the max over all parameter entries of
//   |analytic - cd| / max(|analytic|, |cd|, 1e-8).
double grad_check(const std::function<Var(Tape&)>& build_loss,
                  const std::vector<Parameter*>& params, double step);

}  // namespace ibg::ad
