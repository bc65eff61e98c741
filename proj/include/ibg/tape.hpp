#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ibg/tensor.hpp"

namespace ibg::ad {

// Learnable tensor with its accumulated gradient. Gradients accumulate
// across backward() calls until zero_grad().
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter(std::string n, Tensor v)
      : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()) {}
  void zero_grad() { grad.fill(0.0); }
};

class Tape;

// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t idx) : tape_(tape), idx_(idx) {}
  Tape* tape() const { return tape_; }
  std::size_t idx() const { return idx_; }
  bool valid() const { return tape_ != nullptr; }
  const Tensor& value() const;

 private:
  Tape* tape_ = nullptr;
  std::size_t idx_ = 0;
};

// Records primitive operations in execution order; creation order is a
// topological order, so backward() is a single reverse sweep.
class Tape {
 public:
  using BackFn = std::function<void(Tape&, std::size_t self)>;

  Var constant(Tensor value);
  Var param(Parameter& p);
  Var record(Tensor value, std::vector<std::size_t> parents, BackFn back);

  const Tensor& value_at(std::size_t idx) const { return nodes_[idx].value; }
  const Tensor& grad_at(std::size_t idx) const { return nodes_[idx].grad; }
  const Tensor& grad_of(Var v) const { return nodes_[v.idx()].grad; }

  // Adds g into node idx's gradient, allocating it on first touch.
  void accumulate(std::size_t idx, const Tensor& g);
  bool has_grad(std::size_t idx) const { return !nodes_[idx].grad.empty(); }

  // Seeds d(loss)/d(loss) = 1 and sweeps the tape once in reverse creation
  // order, then adds leaf gradients into their bound Parameters.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }
  void reserve(std::size_t n) { nodes_.reserve(n); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;  // empty until touched during backward
    std::vector<std::size_t> parents;
    BackFn back;
    Parameter* bound = nullptr;
  };
  std::vector<Node> nodes_;
};

}  // namespace ibg::ad
