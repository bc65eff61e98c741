#include "ibg/tape.hpp"

#include "ibg/error.hpp"

namespace ibg::ad {

const Tensor& Var::value() const { return tape_->value_at(idx_); }

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), Tensor(), {}, nullptr, nullptr});
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(Parameter& p) {
  nodes_.push_back(Node{p.value, Tensor(), {}, nullptr, &p});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::vector<std::size_t> parents, BackFn back) {
  nodes_.push_back(Node{std::move(value), Tensor(), std::move(parents), std::move(back), nullptr});
  return Var(this, nodes_.size() - 1);
}

void Tape::accumulate(std::size_t idx, const Tensor& g) {
  Node& n = nodes_[idx];
  if (n.grad.empty()) {
    n.grad = g;
  } else {
    n.grad.add_inplace(g);
  }
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw ValidationError("backward: loss is not on this tape");
  const Tensor& lv = nodes_[loss.idx()].value;
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw ShapeError("backward: loss must be scalar, got " + lv.shape_str());
  }
  for (Node& n : nodes_) n.grad = Tensor();  // fresh sweep; Parameters keep accumulating
  accumulate(loss.idx(), Tensor::scalar(1.0));
  for (std::size_t i = loss.idx() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.empty()) continue;
    if (n.back) n.back(*this, i);
    if (n.bound != nullptr) n.bound->grad.add_inplace(n.grad);
  }
}

}  // namespace ibg::ad
