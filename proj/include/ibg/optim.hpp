#pragma once

#include <vector>

#include "ibg/tape.hpp"

namespace ibg::ad {

// Adam with L2 weight decay folded into the gradient.
class Adam {
 public:
  struct Settings {
    double lr = 0.01;
    double weight_decay = 0.0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
  };

  Adam(std::vector<Parameter*> params, Settings s);

  // Consumes accumulated gradients; does not zero them.
  void step();

 private:
  std::vector<Parameter*> params_;
  Settings s_;
  std::vector<Tensor> m_, v_;
  long t_ = 0;
};

}  // namespace ibg::ad
