#pragma once

#include <cstdint>
#include <vector>

#include "xslu/tensor.hpp"

namespace xslu {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-8;
};

// Standard Adam with bias correction. One instance owns the moment buffers
// for a fixed parameter list; step() reads each parameter's grad buffer
// (missing grad = zero) and updates values in place.
class AdamState {
 public:
  explicit AdamState(std::vector<TensorPtr> params, AdamConfig config = {});

  void step(double lr);

  std::uint64_t t() const { return t_; }
  const AdamConfig& config() const { return config_; }

 private:
  std::vector<TensorPtr> params_;
  std::vector<std::vector<double>> m_, v_;
  std::uint64_t t_ = 0;
  AdamConfig config_;
};

struct LrSchedule {
  double base_lr = 1e-3;
  std::size_t warmup_steps = 100;
};

// linear warmup to base_lr at t == warmup_steps, then inverse-sqrt decay:
// lr(t) = base_lr * min(t / warmup, sqrt(warmup / t)); t >= 1
double lr_at(const LrSchedule& schedule, std::uint64_t t);

}  // namespace xslu
