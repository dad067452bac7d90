#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace xslu {

class Tape;

// Dense row-major 64-bit float tensor. Gradient checks at tol 1e-4 are not
// reliable in 32-bit, and the models here are small, so everything is double.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> values;
  bool requires_grad = false;
  std::optional<std::vector<double>> grad;  // allocated lazily, same shape
  const Tape* owner = nullptr;              // tape that produced this tensor

  Tensor() = default;
  Tensor(std::vector<std::size_t> shape_, std::vector<double> values_,
         bool requires_grad_ = false);

  std::size_t numel() const;
  std::size_t rank() const { return shape.size(); }
  bool is_scalar() const { return numel() == 1; }
  double scalar() const;  // throws unless numel()==1

  // zero-filled grad buffer, created on first use
  std::vector<double>& grad_buffer();
  void zero_grad();
};

using TensorPtr = std::shared_ptr<Tensor>;

TensorPtr make_tensor(std::vector<std::size_t> shape, std::vector<double> values,
                      bool requires_grad = false);
TensorPtr make_param(std::vector<std::size_t> shape, std::vector<double> values);
TensorPtr zeros(std::vector<std::size_t> shape, bool requires_grad = false);
TensorPtr full(std::vector<std::size_t> shape, double value,
               bool requires_grad = false);

std::string shape_str(const std::vector<std::size_t>& shape);

// Reverse-mode tape. Operations append their backward closures in execution
// order; backward() replays them in exact reverse order, accumulating
// gradients additively across fan-out. Single-threaded per training step.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // --- op set ---------------------------------------------------------
  TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);
  // add/mul broadcast the smaller operand over leading axes when its shape
  // is a suffix of the other's (e.g. [t,d] + [d])
  TensorPtr add(const TensorPtr& a, const TensorPtr& b);
  TensorPtr mul(const TensorPtr& a, const TensorPtr& b);
  TensorPtr scale(const TensorPtr& x, double c);
  TensorPtr sub(const TensorPtr& a, const TensorPtr& b);
  TensorPtr embedding_gather(const TensorPtr& table,
                             const std::vector<std::size_t>& rows);
  TensorPtr softmax(const TensorPtr& x);  // last axis
  TensorPtr log(const TensorPtr& x);      // elementwise, requires x > 0
  TensorPtr clamp_min(const TensorPtr& x, double floor);
  TensorPtr relu(const TensorPtr& x);
  TensorPtr layer_norm(const TensorPtr& x, double eps = 1e-5);  // last axis
  TensorPtr sum_all(const TensorPtr& x);
  TensorPtr mean_all(const TensorPtr& x);
  TensorPtr sum_axis(const TensorPtr& x, std::size_t axis);   // rank-2
  TensorPtr mean_axis(const TensorPtr& x, std::size_t axis);  // rank-2
  TensorPtr concat(const std::vector<TensorPtr>& xs, std::size_t axis);
  TensorPtr transpose(const TensorPtr& x);  // rank-2
  TensorPtr reshape(const TensorPtr& x, std::vector<std::size_t> shape);

  // --- low-level hooks for composing custom ops -----------------------
  TensorPtr alloc(std::vector<std::size_t> shape, bool requires_grad);
  void push_backward(std::function<void()> fn);

  void backward(const TensorPtr& root);

  // recording off = pure forward evaluation (no closures, no grad flow)
  void set_recording(bool on) { recording_ = on; }
  bool recording() const { return recording_; }

  std::size_t size() const { return ops_.size(); }
  void clear() { ops_.clear(); }

 private:
  std::vector<std::function<void()>> ops_;
  bool recording_ = true;
};

}  // namespace xslu
