#pragma once

#include <cstdint>
#include <vector>

#include "graph.hpp"

namespace must {

struct AdamConfig {
  double lr = 5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Standard Adam with bias correction. Moments are kept per parameter entry;
// step() consumes and zeroes the gradients.
class Adam {
 public:
  Adam(std::vector<Param*> params, AdamConfig cfg);

  void step();
  int64_t steps_taken() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  std::vector<Param*> params_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  AdamConfig cfg_;
  int64_t t_ = 0;
};

}  // namespace must
