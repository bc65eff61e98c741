#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "ibg/ops.hpp"
#include "ibg/rng.hpp"
#include "ibg/tape.hpp"

namespace ibg::ad {

// Owns Parameters; names are unique within a set. Iteration order is
// creation order, which keeps optimizer traversal deterministic.
class ParamSet {
 public:
  Parameter& create(const std::string& name, std::size_t rows, std::size_t cols);
  Parameter& create_glorot(const std::string& name, std::size_t rows, std::size_t cols, Rng& rng);
  Parameter& create_scalar(const std::string& name, double value);

  Parameter* find(const std::string& name);
  const std::vector<std::unique_ptr<Parameter>>& owned() const { return params_; }
  std::vector<Parameter*> all() const;
  void zero_grads();
  std::size_t entry_count() const;

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::map<std::string, std::size_t> index_;
};

struct Affine {
  Parameter* w = nullptr;  // in x out
  Parameter* b = nullptr;  // 1 x out
};

Affine make_affine(ParamSet& ps, const std::string& name, std::size_t in, std::size_t out,
                   Rng& rng);
Var apply(Tape& t, const Affine& a, Var x);
Tensor apply_values(const Affine& a, const Tensor& x);

// two-layer perceptron; tanh hidden by default (smooth, finite-difference
// friendly), relu where learning speed matters more
enum class Hidden { Tanh, Relu };

struct Mlp2 {
  Affine l1, l2;
  Hidden hidden = Hidden::Tanh;
};

Mlp2 make_mlp2(ParamSet& ps, const std::string& name, std::size_t in, std::size_t hidden,
               std::size_t out, Rng& rng, Hidden act = Hidden::Tanh);
Var apply(Tape& t, const Mlp2& m, Var x);
Tensor apply_values(const Mlp2& m, const Tensor& x);

// inverted-dropout mask: entries are 0 with probability p, else 1/(1-p)
Tensor make_dropout_mask(std::size_t rows, std::size_t cols, double p, Rng& rng);

}  // namespace ibg::ad
