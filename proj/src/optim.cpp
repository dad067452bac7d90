#include "xslu/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace xslu {

AdamState::AdamState(std::vector<TensorPtr> params, AdamConfig config)
    : params_(std::move(params)), config_(config) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.emplace_back(p->numel(), 0.0);
    v_.emplace_back(p->numel(), 0.0);
  }
}

void AdamState::step(double lr) {
  if (!(lr > 0.0)) throw std::runtime_error("adam: lr must be positive");
  ++t_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = *params_[i];
    if (p.grad && p.grad->size() != p.numel()) {
      throw std::runtime_error("adam: grad shape mismatch for parameter " +
                               std::to_string(i));
    }
    std::vector<double>& m = m_[i];
    std::vector<double>& v = v_[i];
    for (std::size_t j = 0; j < p.numel(); ++j) {
      const double g = p.grad ? (*p.grad)[j] : 0.0;
      m[j] = b1 * m[j] + (1.0 - b1) * g;
      v[j] = b2 * v[j] + (1.0 - b2) * g * g;
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      p.values[j] -= lr * mhat / (std::sqrt(vhat) + config_.eps);
    }
  }
}

double lr_at(const LrSchedule& schedule, std::uint64_t t) {
  if (t == 0) throw std::runtime_error("lr_at: step must be >= 1");
  const double td = static_cast<double>(t);
  const double w = static_cast<double>(schedule.warmup_steps);
  const double warm = td / w;
  const double decay = std::sqrt(w / td);
  return schedule.base_lr * (warm < decay ? warm : decay);
}

}  // namespace xslu
