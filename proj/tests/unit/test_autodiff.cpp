#include "doctest.h"

#include <cmath>

#include "ibg/error.hpp"
#include "ibg/grad_check.hpp"
#include "ibg/ops.hpp"
#include "ibg/rng.hpp"

using namespace ibg;
using namespace ibg::ad;

TEST_CASE("grad_check on a quadratic is exact to 1e-8") {
  Rng rng(11);
  Parameter p("p", Tensor(3, 3));
  for (std::size_t i = 0; i < p.value.size(); ++i) p.value[i] = rng.uniform(-2.0, 2.0);

  auto build = [&](Tape& t) {
    Var v = t.param(p);
    return scale(sum_all(mul(v, v)), 0.5);
  };
  CHECK(grad_check(build, {&p}, 1e-5) < 1e-8);
}

TEST_CASE("grad_check flags a deliberately wrong adjoint") {
  Parameter p("p", Tensor::row({0.7, -0.3}));

  auto build = [&](Tape& t) {
    Var v = t.param(p);
    // forward x^2, but the adjoint claims d/dx = 3x instead of 2x
    const Tensor& x = v.value();
    Tensor y(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] * x[i];
    Var bad = t.record(std::move(y), {v.idx()}, [vi = v.idx()](Tape& tp, std::size_t self) {
      const Tensor& g = tp.grad_at(self);
      const Tensor& xv = tp.value_at(vi);
      Tensor d(g.rows(), g.cols());
      for (std::size_t i = 0; i < g.size(); ++i) d[i] = g[i] * 3.0 * xv[i];
      tp.accumulate(vi, d);
    });
    return sum_all(bad);
  };
  CHECK(grad_check(build, {&p}, 1e-5) > 1e-2);
}

TEST_CASE("grad_check validates the step size") {
  Parameter p("p", Tensor::row({1.0}));
  auto build = [&](Tape& t) { return sum_all(t.param(p)); };
  CHECK_THROWS_AS(grad_check(build, {&p}, 0.0), ValidationError);
  CHECK_THROWS_AS(grad_check(build, {&p}, 1e-2), ValidationError);
}

TEST_CASE("composite expression matches finite differences at random points") {
  Rng rng(23);
  Parameter w("w", Tensor(4, 3));
  Parameter b("b", Tensor(1, 3));
  for (std::size_t i = 0; i < w.value.size(); ++i) w.value[i] = rng.uniform(-1.0, 1.0);
  for (std::size_t i = 0; i < b.value.size(); ++i) b.value[i] = rng.uniform(-1.0, 1.0);
  Tensor x(5, 4);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform(-1.0, 1.0);

  auto build = [&](Tape& t) {
    Var h = ibg::ad::tanh(affine(t.constant(x), t.param(w), t.param(b)));
    Var s = row_softmax(h);
    return mean_all(mul(s, h));
  };
  CHECK(grad_check(build, {&w, &b}, 1e-5) < 1e-4);
}
