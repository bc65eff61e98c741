#include "ibg/optim.hpp"

#include <cmath>

namespace ibg::ad {

Adam::Adam(std::vector<Parameter*> params, Settings s) : params_(std::move(params)), s_(s) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (Parameter* p : params_) {
    m_.emplace_back(p->value.rows(), p->value.cols());
    v_.emplace_back(p->value.rows(), p->value.cols());
  }
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(s_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(s_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Parameter& p = *params_[k];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i] + s_.weight_decay * p.value[i];
      m_[k][i] = s_.beta1 * m_[k][i] + (1.0 - s_.beta1) * g;
      v_[k][i] = s_.beta2 * v_[k][i] + (1.0 - s_.beta2) * g * g;
      const double mhat = m_[k][i] / bc1;
      const double vhat = v_[k][i] / bc2;
      p.value[i] -= s_.lr * mhat / (std::sqrt(vhat) + s_.eps);
    }
  }
}

}  // namespace ibg::ad
