#include "ibg/nn.hpp"

#include <algorithm>
#include <cmath>

#include "ibg/error.hpp"

namespace ibg::ad {

Parameter& ParamSet::create(const std::string& name, std::size_t rows, std::size_t cols) {
  if (index_.count(name) != 0) {
    throw ValidationError("parameter name '" + name + "' already exists");
  }
  params_.push_back(std::make_unique<Parameter>(name, Tensor(rows, cols)));
  index_[name] = params_.size() - 1;
  return *params_.back();
}

Parameter& ParamSet::create_glorot(const std::string& name, std::size_t rows, std::size_t cols,
                                   Rng& rng) {
  Parameter& p = create(name, rows, cols);
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  for (std::size_t i = 0; i < p.value.size(); ++i) p.value[i] = rng.uniform(-limit, limit);
  return p;
}

Parameter& ParamSet::create_scalar(const std::string& name, double value) {
  Parameter& p = create(name, 1, 1);
  p.value[0] = value;
  return p;
}

Parameter* ParamSet::find(const std::string& name) {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : params_[it->second].get();
}

std::vector<Parameter*> ParamSet::all() const {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

void ParamSet::zero_grads() {
  for (const auto& p : params_) p->zero_grad();
}

std::size_t ParamSet::entry_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

Affine make_affine(ParamSet& ps, const std::string& name, std::size_t in, std::size_t out,
                   Rng& rng) {
  Affine a;
  a.w = &ps.create_glorot(name + ".w", in, out, rng);
  a.b = &ps.create(name + ".b", 1, out);
  return a;
}

Var apply(Tape& t, const Affine& a, Var x) {
  return affine(x, t.param(*a.w), t.param(*a.b));
}

Tensor apply_values(const Affine& a, const Tensor& x) {
  Tensor y = matmul_values(x, a.w->value);
  for (std::size_t i = 0; i < y.rows(); ++i) {
    for (std::size_t j = 0; j < y.cols(); ++j) y(i, j) += a.b->value(0, j);
  }
  return y;
}

Mlp2 make_mlp2(ParamSet& ps, const std::string& name, std::size_t in, std::size_t hidden,
               std::size_t out, Rng& rng, Hidden act) {
  Mlp2 m;
  m.l1 = make_affine(ps, name + ".l1", in, hidden, rng);
  m.l2 = make_affine(ps, name + ".l2", hidden, out, rng);
  m.hidden = act;
  return m;
}

Var apply(Tape& t, const Mlp2& m, Var x) {
  Var h = apply(t, m.l1, x);
  h = (m.hidden == Hidden::Tanh) ? tanh(h) : relu(h);
  return apply(t, m.l2, h);
}

Tensor apply_values(const Mlp2& m, const Tensor& x) {
  Tensor h = apply_values(m.l1, x);
  for (std::size_t i = 0; i < h.size(); ++i) {
    h[i] = (m.hidden == Hidden::Tanh) ? std::tanh(h[i]) : std::max(0.0, h[i]);
  }
  return apply_values(m.l2, h);
}

Tensor make_dropout_mask(std::size_t rows, std::size_t cols, double p, Rng& rng) {
  if (!(p >= 0.0) || p >= 1.0) throw ValidationError("dropout rate must be in [0, 1)");
  Tensor m(rows, cols);
  const double keep_scale = 1.0 / (1.0 - p);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = rng.bernoulli(p) ? 0.0 : keep_scale;
  return m;
}

}  // namespace ibg::ad
