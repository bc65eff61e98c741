#include "ibg/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ibg/error.hpp"

namespace ibg::ad {

namespace {

Tape& tape_of(Var a) { return *a.tape(); }

Tape& tape_of(Var a, Var b) {
  if (a.tape() != b.tape()) throw ValidationError("op: operands on different tapes");
  return *a.tape();
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": " + a.shape_str() + " vs " + b.shape_str());
  }
}

void require_finite(const char* op, const Tensor& t) {
  if (!t.all_finite()) throw NumericError(std::string(op) + ": non-finite result");
}

// elementwise map with dy/dx computed from (x, y)
template <typename F, typename G>
Var unary_map(const char* name, Var a, F fwd, G dfdx) {
  Tape& t = tape_of(a);
  const Tensor& x = t.value_at(a.idx());
  Tensor y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = fwd(x[i]);
  require_finite(name, y);
  return t.record(std::move(y), {a.idx()},
                  [ai = a.idx(), dfdx](Tape& tp, std::size_t self) {
                    const Tensor& g = tp.grad_at(self);
                    const Tensor& xv = tp.value_at(ai);
                    const Tensor& yv = tp.value_at(self);
                    Tensor d(g.rows(), g.cols());
                    for (std::size_t i = 0; i < g.size(); ++i) {
                      d[i] = g[i] * dfdx(xv[i], yv[i]);
                    }
                    tp.accumulate(ai, d);
                  });
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const Tensor& av = t.value_at(a.idx());
  const Tensor& bv = t.value_at(b.idx());
  if (av.cols() != bv.rows()) {
    throw ShapeError("matmul: " + av.shape_str() + " vs " + bv.shape_str());
  }
  Tensor c(av.rows(), bv.cols());
  gemm_nn(av, bv, c, false);
  return t.record(std::move(c), {a.idx(), b.idx()},
                  [ai = a.idx(), bi = b.idx()](Tape& tp, std::size_t self) {
                    const Tensor& g = tp.grad_at(self);
                    const Tensor& av2 = tp.value_at(ai);
                    const Tensor& bv2 = tp.value_at(bi);
                    Tensor da(av2.rows(), av2.cols());
                    gemm_nt(g, bv2, da, false);
                    tp.accumulate(ai, da);
                    Tensor db(bv2.rows(), bv2.cols());
                    gemm_tn(av2, g, db, false);
                    tp.accumulate(bi, db);
                  });
}

Var transpose(Var a) {
  Tape& t = tape_of(a);
  return t.record(transpose_values(t.value_at(a.idx())), {a.idx()},
                  [ai = a.idx()](Tape& tp, std::size_t self) {
                    tp.accumulate(ai, transpose_values(tp.grad_at(self)));
                  });
}

Var add(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const Tensor& av = t.value_at(a.idx());
  const Tensor& bv = t.value_at(b.idx());
  require_same_shape("add", av, bv);
  Tensor c = av;
  c.add_inplace(bv);
  return t.record(std::move(c), {a.idx(), b.idx()},
                  [ai = a.idx(), bi = b.idx()](Tape& tp, std::size_t self) {
                    tp.accumulate(ai, tp.grad_at(self));
                    tp.accumulate(bi, tp.grad_at(self));
                  });
}

Var sub(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const Tensor& av = t.value_at(a.idx());
  const Tensor& bv = t.value_at(b.idx());
  require_same_shape("sub", av, bv);
  Tensor c(av.rows(), av.cols());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = av[i] - bv[i];
  return t.record(std::move(c), {a.idx(), b.idx()},
                  [ai = a.idx(), bi = b.idx()](Tape& tp, std::size_t self) {
                    const Tensor& g = tp.grad_at(self);
                    tp.accumulate(ai, g);
                    Tensor nb(g.rows(), g.cols());
                    for (std::size_t i = 0; i < g.size(); ++i) nb[i] = -g[i];
                    tp.accumulate(bi, nb);
                  });
}

Var mul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const Tensor& av = t.value_at(a.idx());
  const Tensor& bv = t.value_at(b.idx());
  require_same_shape("mul", av, bv);
  Tensor c(av.rows(), av.cols());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = av[i] * bv[i];
  return t.record(std::move(c), {a.idx(), b.idx()},
                  [ai = a.idx(), bi = b.idx()](Tape& tp, std::size_t self) {
                    const Tensor& g = tp.grad_at(self);
                    const Tensor& av2 = tp.value_at(ai);
                    const Tensor& bv2 = tp.value_at(bi);
                    Tensor da(g.rows(), g.cols()), db(g.rows(), g.cols());
                    for (std::size_t i = 0; i < g.size(); ++i) {
                      da[i] = g[i] * bv2[i];
                      db[i] = g[i] * av2[i];
                    }
                    tp.accumulate(ai, da);
                    tp.accumulate(bi, db);
                  });
}

Var scale(Var a, double c) {
  return unary_map("scale", a, [c](double x) { return x * c; },
                   [c](double, double) { return c; });
}

Var offset(Var a, double c) {
  return unary_map("offset", a, [c](double x) { return x + c; },
                   [](double, double) { return 1.0; });
}

Var mul_scalar(Var a, Var s) {
  Tape& t = tape_of(a, s);
  const Tensor& av = t.value_at(a.idx());
  const double sv = t.value_at(s.idx()).scalar_value();
  Tensor c(av.rows(), av.cols());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = av[i] * sv;
  return t.record(std::move(c), {a.idx(), s.idx()},
                  [ai = a.idx(), si = s.idx()](Tape& tp, std::size_t self) {
                    const Tensor& g = tp.grad_at(self);
                    const Tensor& av2 = tp.value_at(ai);
                    const double sv2 = tp.value_at(si).scalar_value();
                    Tensor da(g.rows(), g.cols());
                    double ds = 0.0;
                    for (std::size_t i = 0; i < g.size(); ++i) {
                      da[i] = g[i] * sv2;
                      ds += g[i] * av2[i];
                    }
                    tp.accumulate(ai, da);
                    tp.accumulate(si, Tensor::scalar(ds));
                  });
}

Var div_scalar(Var a, Var s) {
  Tape& t = tape_of(a, s);
  const Tensor& av = t.value_at(a.idx());
  const double sv = t.value_at(s.idx()).scalar_value();
  if (std::abs(sv) < 1e-300) throw NumericError("div_scalar: divisor is zero");
  Tensor c(av.rows(), av.cols());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = av[i] / sv;
  require_finite("div_scalar", c);
  return t.record(std::move(c), {a.idx(), s.idx()},
                  [ai = a.idx(), si = s.idx()](Tape& tp, std::size_t self) {
                    const Tensor& g = tp.grad_at(self);
                    const Tensor& av2 = tp.value_at(ai);
                    const double sv2 = tp.value_at(si).scalar_value();
                    Tensor da(g.rows(), g.cols());
                    double ds = 0.0;
                    for (std::size_t i = 0; i < g.size(); ++i) {
                      da[i] = g[i] / sv2;
                      ds -= g[i] * av2[i] / (sv2 * sv2);
                    }
                    tp.accumulate(ai, da);
                    tp.accumulate(si, Tensor::scalar(ds));
                  });
}

Var add_rowvec(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const Tensor& av = t.value_at(a.idx());
  const Tensor& bv = t.value_at(b.idx());
  if (bv.rows() != 1 || bv.cols() != av.cols()) {
    throw ShapeError("add_rowvec: " + av.shape_str() + " vs " + bv.shape_str());
  }
  Tensor c(av.rows(), av.cols());
  for (std::size_t i = 0; i < av.rows(); ++i) {
    for (std::size_t j = 0; j < av.cols(); ++j) c(i, j) = av(i, j) + bv(0, j);
  }
  return t.record(std::move(c), {a.idx(), b.idx()},
                  [ai = a.idx(), bi = b.idx()](Tape& tp, std::size_t self) {
                    const Tensor& g = tp.grad_at(self);
                    tp.accumulate(ai, g);
                    Tensor db(1, g.cols());
                    for (std::size_t i = 0; i < g.rows(); ++i) {
                      for (std::size_t j = 0; j < g.cols(); ++j) db(0, j) += g(i, j);
                    }
                    tp.accumulate(bi, db);
                  });
}

Var div_colvec(Var a, Var n) {
  Tape& t = tape_of(a, n);
  const Tensor& av = t.value_at(a.idx());
  const Tensor& nv = t.value_at(n.idx());
  if (nv.cols() != 1 || nv.rows() != av.rows()) {
    throw ShapeError("div_colvec: " + av.shape_str() + " vs " + nv.shape_str());
  }
  for (std::size_t i = 0; i < nv.rows(); ++i) {
    if (std::abs(nv(i, 0)) < 1e-300) throw NumericError("div_colvec: zero divisor in row " + std::to_string(i));
  }
  Tensor c(av.rows(), av.cols());
  for (std::size_t i = 0; i < av.rows(); ++i) {
    const double d = nv(i, 0);
    for (std::size_t j = 0; j < av.cols(); ++j) c(i, j) = av(i, j) / d;
  }
  require_finite("div_colvec", c);
  return t.record(std::move(c), {a.idx(), n.idx()},
                  [ai = a.idx(), ni = n.idx()](Tape& tp, std::size_t self) {
                    const Tensor& g = tp.grad_at(self);
                    const Tensor& av2 = tp.value_at(ai);
                    const Tensor& nv2 = tp.value_at(ni);
                    Tensor da(g.rows(), g.cols());
                    Tensor dn(nv2.rows(), 1);
                    for (std::size_t i = 0; i < g.rows(); ++i) {
                      const double d = nv2(i, 0);
                      double acc = 0.0;
                      for (std::size_t j = 0; j < g.cols(); ++j) {
                        da(i, j) = g(i, j) / d;
                        acc += g(i, j) * av2(i, j);
                      }
                      dn(i, 0) = -acc / (d * d);
                    }
                    tp.accumulate(ai, da);
                    tp.accumulate(ni, dn);
                  });
}

namespace {

Var softmax_impl(const char* name, Var a, const Tensor* mask) {
  Tape& t = tape_of(a);
  const Tensor& x = t.value_at(a.idx());
  if (mask != nullptr) require_same_shape(name, x, *mask);
  Tensor y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < x.cols(); ++j) {
      if (mask == nullptr || (*mask)(i, j) != 0.0) mx = std::max(mx, x(i, j));
    }
    if (!std::isfinite(mx)) {
      throw NumericError(std::string(name) + ": row " + std::to_string(i) + " fully masked");
    }
    double z = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j) {
      if (mask == nullptr || (*mask)(i, j) != 0.0) {
        y(i, j) = std::exp(x(i, j) - mx);
        z += y(i, j);
      }
    }
    for (std::size_t j = 0; j < x.cols(); ++j) y(i, j) /= z;
  }
  // masked entries carry y=0, so the shared adjoint formula zeroes them too
  return t.record(std::move(y), {a.idx()},
                  [ai = a.idx()](Tape& tp, std::size_t self) {
                    const Tensor& g = tp.grad_at(self);
                    const Tensor& yv = tp.value_at(self);
                    Tensor d(g.rows(), g.cols());
                    for (std::size_t i = 0; i < g.rows(); ++i) {
                      double gy = 0.0;
                      for (std::size_t j = 0; j < g.cols(); ++j) gy += g(i, j) * yv(i, j);
                      for (std::size_t j = 0; j < g.cols(); ++j) {
                        d(i, j) = yv(i, j) * (g(i, j) - gy);
                      }
                    }
                    tp.accumulate(ai, d);
                  });
}

}  // namespace

Var row_softmax(Var a) { return softmax_impl("row_softmax", a, nullptr); }

Var masked_row_softmax(Var a, const Tensor& mask) {
  return softmax_impl("masked_row_softmax", a, &mask);
}

Var tanh(Var a) {
  return unary_map("tanh", a, [](double x) { return std::tanh(x); },
                   [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Var a) {
  return unary_map("sigmoid", a,
                   [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
                   [](double, double y) { return y * (1.0 - y); });
}

Var relu(Var a) {
  return unary_map("relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
                   [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var leaky_relu(Var a, double slope) {
  return unary_map("leaky_relu", a,
                   [slope](double x) { return x > 0.0 ? x : slope * x; },
                   [slope](double x, double) { return x > 0.0 ? 1.0 : slope; });
}

Var exp(Var a) {
  return unary_map("exp", a, [](double x) { return std::exp(x); },
                   [](double, double y) { return y; });
}

Var log(Var a) {
  const Tensor& x = a.value();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] <= 0.0) throw NumericError("log: nonpositive input");
  }
  return unary_map("log", a, [](double v) { return std::log(v); },
                   [](double v, double) { return 1.0 / v; });
}

Var abs(Var a) {
  return unary_map("abs", a, [](double x) { return std::abs(x); },
                   [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Var mean_axis0(Var a) {
  Tape& t = tape_of(a);
  const Tensor& x = t.value_at(a.idx());
  const double inv = 1.0 / static_cast<double>(x.rows());
  Tensor y(1, x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) y(0, j) += x(i, j) * inv;
  }
  return t.record(std::move(y), {a.idx()},
                  [ai = a.idx(), rows = x.rows(), inv](Tape& tp, std::size_t self) {
                    const Tensor& g = tp.grad_at(self);
                    Tensor d(rows, g.cols());
                    for (std::size_t i = 0; i < rows; ++i) {
                      for (std::size_t j = 0; j < g.cols(); ++j) d(i, j) = g(0, j) * inv;
                    }
                    tp.accumulate(ai, d);
                  });
}

Var sum_all(Var a) {
  Tape& t = tape_of(a);
  const Tensor& x = t.value_at(a.idx());
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i];
  return t.record(Tensor::scalar(s), {a.idx()},
                  [ai = a.idx()](Tape& tp, std::size_t self) {
                    const double g = tp.grad_at(self).scalar_value();
                    const Tensor& xv = tp.value_at(ai);
                    tp.accumulate(ai, Tensor::full(xv.rows(), xv.cols(), g));
                  });
}

Var mean_all(Var a) {
  const Tensor& x = a.value();
  return scale(sum_all(a), 1.0 / static_cast<double>(x.size()));
}

Var frobenius_norm(Var a) {
  Tape& t = tape_of(a);
  const Tensor& x = t.value_at(a.idx());
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * x[i];
  const double norm = std::sqrt(s);
  return t.record(Tensor::scalar(norm), {a.idx()},
                  [ai = a.idx()](Tape& tp, std::size_t self) {
                    const double g = tp.grad_at(self).scalar_value();
                    const double norm2 = tp.value_at(self).scalar_value();
                    const Tensor& xv = tp.value_at(ai);
                    if (norm2 < 1e-300) return;  // flat at the origin
                    Tensor d(xv.rows(), xv.cols());
                    for (std::size_t i = 0; i < xv.size(); ++i) d[i] = g * xv[i] / norm2;
                    tp.accumulate(ai, d);
                  });
}

Var concat_cols(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const Tensor& av = t.value_at(a.idx());
  const Tensor& bv = t.value_at(b.idx());
  if (av.rows() != bv.rows()) {
    throw ShapeError("concat_cols: " + av.shape_str() + " vs " + bv.shape_str());
  }
  Tensor c(av.rows(), av.cols() + bv.cols());
  for (std::size_t i = 0; i < av.rows(); ++i) {
    for (std::size_t j = 0; j < av.cols(); ++j) c(i, j) = av(i, j);
    for (std::size_t j = 0; j < bv.cols(); ++j) c(i, av.cols() + j) = bv(i, j);
  }
  return t.record(std::move(c), {a.idx(), b.idx()},
                  [ai = a.idx(), bi = b.idx(), ac = av.cols()](Tape& tp, std::size_t self) {
                    const Tensor& g = tp.grad_at(self);
                    const Tensor& av2 = tp.value_at(ai);
                    const Tensor& bv2 = tp.value_at(bi);
                    Tensor da(av2.rows(), av2.cols()), db(bv2.rows(), bv2.cols());
                    for (std::size_t i = 0; i < g.rows(); ++i) {
                      for (std::size_t j = 0; j < ac; ++j) da(i, j) = g(i, j);
                      for (std::size_t j = 0; j < bv2.cols(); ++j) db(i, j) = g(i, ac + j);
                    }
                    tp.accumulate(ai, da);
                    tp.accumulate(bi, db);
                  });
}

Var stack_scalars(const std::vector<Var>& xs) {
  if (xs.empty()) throw ValidationError("stack_scalars: empty input");
  Tape& t = *xs.front().tape();
  Tensor y(1, xs.size());
  std::vector<std::size_t> parents;
  parents.reserve(xs.size());
  for (std::size_t k = 0; k < xs.size(); ++k) {
    y(0, k) = t.value_at(xs[k].idx()).scalar_value();
    parents.push_back(xs[k].idx());
  }
  std::vector<std::size_t> idxs = parents;
  return t.record(std::move(y), std::move(parents),
                  [idxs](Tape& tp, std::size_t self) {
                    const Tensor& g = tp.grad_at(self);
                    for (std::size_t k = 0; k < idxs.size(); ++k) {
                      tp.accumulate(idxs[k], Tensor::scalar(g(0, k)));
                    }
                  });
}

Var stack_rows(const std::vector<Var>& rows) {
  if (rows.empty()) throw ValidationError("stack_rows: empty input");
  Tape& t = *rows.front().tape();
  const std::size_t c = t.value_at(rows.front().idx()).cols();
  Tensor y(rows.size(), c);
  std::vector<std::size_t> parents;
  parents.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Tensor& r = t.value_at(rows[i].idx());
    if (r.rows() != 1 || r.cols() != c) {
      throw ShapeError("stack_rows: row " + std::to_string(i) + " is " + r.shape_str());
    }
    for (std::size_t j = 0; j < c; ++j) y(i, j) = r(0, j);
    parents.push_back(rows[i].idx());
  }
  std::vector<std::size_t> idxs = parents;
  return t.record(std::move(y), std::move(parents),
                  [idxs, c](Tape& tp, std::size_t self) {
                    const Tensor& g = tp.grad_at(self);
                    for (std::size_t i = 0; i < idxs.size(); ++i) {
                      Tensor d(1, c);
                      for (std::size_t j = 0; j < c; ++j) d(0, j) = g(i, j);
                      tp.accumulate(idxs[i], d);
                    }
                  });
}

Var entry(Var a, std::size_t i, std::size_t j) {
  Tape& t = tape_of(a);
  const Tensor& x = t.value_at(a.idx());
  if (i >= x.rows() || j >= x.cols()) {
    throw ShapeError("entry: index out of range for " + x.shape_str());
  }
  return t.record(Tensor::scalar(x(i, j)), {a.idx()},
                  [ai = a.idx(), i, j](Tape& tp, std::size_t self) {
                    const double g = tp.grad_at(self).scalar_value();
                    const Tensor& xv = tp.value_at(ai);
                    Tensor d(xv.rows(), xv.cols());
                    d(i, j) = g;
                    tp.accumulate(ai, d);
                  });
}

Var clamp_magnitude_min(Var a, double eps) {
  return unary_map("clamp_magnitude_min", a,
                   [eps](double x) {
                     if (x >= eps || x <= -eps) return x;
                     return x >= 0.0 ? eps : -eps;
                   },
                   [eps](double x, double) { return (x >= eps || x <= -eps) ? 1.0 : 0.0; });
}

Var cross_entropy_with_logits(Var logits, const std::vector<int>& labels,
                              const std::vector<std::uint8_t>& mask) {
  Tape& t = tape_of(logits);
  const Tensor& x = t.value_at(logits.idx());
  if (labels.size() != x.rows() || mask.size() != x.rows()) {
    throw ShapeError("cross_entropy: labels/mask length vs logits " + x.shape_str());
  }
  std::size_t count = 0;
  double total = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    if (!mask[i]) continue;
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= x.cols()) {
      throw ValidationError("cross_entropy: label " + std::to_string(y) + " out of range");
    }
    double mx = x(i, 0);
    for (std::size_t j = 1; j < x.cols(); ++j) mx = std::max(mx, x(i, j));
    double z = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j) z += std::exp(x(i, j) - mx);
    total += std::log(z) + mx - x(i, static_cast<std::size_t>(y));
    ++count;
  }
  if (count == 0) throw ValidationError("cross_entropy: empty labeled set");
  const double inv = 1.0 / static_cast<double>(count);
  return t.record(Tensor::scalar(total * inv), {logits.idx()},
                  [li = logits.idx(), labels, mask, inv](Tape& tp, std::size_t self) {
                    const double g = tp.grad_at(self).scalar_value();
                    const Tensor& x2 = tp.value_at(li);
                    Tensor d(x2.rows(), x2.cols());
                    for (std::size_t i = 0; i < x2.rows(); ++i) {
                      if (!mask[i]) continue;
                      double mx = x2(i, 0);
                      for (std::size_t j = 1; j < x2.cols(); ++j) mx = std::max(mx, x2(i, j));
                      double z = 0.0;
                      for (std::size_t j = 0; j < x2.cols(); ++j) z += std::exp(x2(i, j) - mx);
                      for (std::size_t j = 0; j < x2.cols(); ++j) {
                        const double p = std::exp(x2(i, j) - mx) / z;
                        const double onehot = (static_cast<std::size_t>(labels[i]) == j) ? 1.0 : 0.0;
                        d(i, j) = g * inv * (p - onehot);
                      }
                    }
                    tp.accumulate(li, d);
                  });
}

Var gauss_kl_per_row(Var mu, Var logvar) {
  Tape& t = tape_of(mu, logvar);
  const Tensor& m = t.value_at(mu.idx());
  const Tensor& lv = t.value_at(logvar.idx());
  require_same_shape("gauss_kl_per_row", m, lv);
  Tensor y(m.rows(), 1);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) {
      acc += 0.5 * (m(i, j) * m(i, j) + std::exp(lv(i, j)) - 1.0 - lv(i, j));
    }
    y(i, 0) = acc;
  }
  require_finite("gauss_kl_per_row", y);
  return t.record(std::move(y), {mu.idx(), logvar.idx()},
                  [mi = mu.idx(), li = logvar.idx()](Tape& tp, std::size_t self) {
                    const Tensor& g = tp.grad_at(self);
                    const Tensor& m2 = tp.value_at(mi);
                    const Tensor& lv2 = tp.value_at(li);
                    Tensor dm(m2.rows(), m2.cols()), dl(lv2.rows(), lv2.cols());
                    for (std::size_t i = 0; i < m2.rows(); ++i) {
                      const double gi = g(i, 0);
                      for (std::size_t j = 0; j < m2.cols(); ++j) {
                        dm(i, j) = gi * m2(i, j);
                        dl(i, j) = gi * 0.5 * (std::exp(lv2(i, j)) - 1.0);
                      }
                    }
                    tp.accumulate(mi, dm);
                    tp.accumulate(li, dl);
                  });
}

Var masked_mean_rows(Var v, const std::vector<std::uint8_t>& mask) {
  Tape& t = tape_of(v);
  const Tensor& x = t.value_at(v.idx());
  if (x.cols() != 1 || mask.size() != x.rows()) {
    throw ShapeError("masked_mean_rows: value " + x.shape_str() + " vs mask " +
                     std::to_string(mask.size()));
  }
  std::size_t count = 0;
  double total = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    if (mask[i]) {
      total += x(i, 0);
      ++count;
    }
  }
  if (count == 0) throw ValidationError("masked_mean_rows: empty mask");
  const double inv = 1.0 / static_cast<double>(count);
  return t.record(Tensor::scalar(total * inv), {v.idx()},
                  [vi = v.idx(), mask, inv](Tape& tp, std::size_t self) {
                    const double g = tp.grad_at(self).scalar_value();
                    const Tensor& x2 = tp.value_at(vi);
                    Tensor d(x2.rows(), 1);
                    for (std::size_t i = 0; i < x2.rows(); ++i) {
                      if (mask[i]) d(i, 0) = g * inv;
                    }
                    tp.accumulate(vi, d);
                  });
}

Var affine(Var x, Var w, Var b) { return add_rowvec(matmul(x, w), b); }

Var dot(Var a, Var b) { return sum_all(mul(a, b)); }

}  // namespace ibg::ad
