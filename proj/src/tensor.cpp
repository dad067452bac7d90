#include "xslu/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "xslu/kernels.hpp"

namespace xslu {

namespace {

using kernels::KernelTable;

const KernelTable& K() { return kernels::active_table(); }

std::size_t product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

[[noreturn]] void fail(const std::string& op, const std::string& what) {
  throw std::runtime_error(op + ": " + what);
}

// rows/cols view of the last axis: a rank-r tensor is (rows x cols) with
// cols = last dimension
std::pair<std::size_t, std::size_t> last_axis_view(const Tensor& x) {
  if (x.rank() == 0) return {1, 1};
  std::size_t cols = x.shape.back();
  std::size_t rows = x.numel() / std::max<std::size_t>(cols, 1);
  return {rows, cols};
}

// true if `small` is a strict suffix of `big`
bool is_suffix(const std::vector<std::size_t>& big,
               const std::vector<std::size_t>& small) {
  if (small.size() > big.size()) return false;
  return std::equal(small.rbegin(), small.rend(), big.rbegin());
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape_, std::vector<double> values_,
               bool requires_grad_)
    : shape(std::move(shape_)), values(std::move(values_)),
      requires_grad(requires_grad_) {
  if (product(shape) != values.size()) {
    throw std::runtime_error("tensor: shape " + shape_str(shape) + " implies " +
                             std::to_string(product(shape)) + " values, got " +
                             std::to_string(values.size()));
  }
}

std::size_t Tensor::numel() const { return values.size(); }

double Tensor::scalar() const {
  if (numel() != 1) {
    throw std::runtime_error("tensor: scalar() on shape " + shape_str(shape));
  }
  return values[0];
}

std::vector<double>& Tensor::grad_buffer() {
  if (!grad) grad.emplace(values.size(), 0.0);
  return *grad;
}

void Tensor::zero_grad() {
  if (grad) std::fill(grad->begin(), grad->end(), 0.0);
}

TensorPtr make_tensor(std::vector<std::size_t> shape, std::vector<double> values,
                      bool requires_grad) {
  return std::make_shared<Tensor>(std::move(shape), std::move(values),
                                  requires_grad);
}

TensorPtr make_param(std::vector<std::size_t> shape, std::vector<double> values) {
  return make_tensor(std::move(shape), std::move(values), true);
}

TensorPtr zeros(std::vector<std::size_t> shape, bool requires_grad) {
  std::size_t n = product(shape);
  return make_tensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

TensorPtr full(std::vector<std::size_t> shape, double value, bool requires_grad) {
  std::size_t n = product(shape);
  return make_tensor(std::move(shape), std::vector<double>(n, value),
                     requires_grad);
}

std::string shape_str(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

TensorPtr Tape::alloc(std::vector<std::size_t> shape, bool requires_grad) {
  auto t = zeros(std::move(shape), requires_grad && recording_);
  t->owner = this;
  return t;
}

void Tape::push_backward(std::function<void()> fn) {
  if (recording_) ops_.push_back(std::move(fn));
}

void Tape::backward(const TensorPtr& root) {
  if (!root || root->owner != this) {
    throw std::runtime_error("backward: root was not produced by this tape");
  }
  if (root->numel() != 1) {
    throw std::runtime_error("backward: root must be scalar, got shape " +
                             shape_str(root->shape));
  }
  root->grad_buffer()[0] = 1.0;
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
}

// ---------------------------------------------------------------------------
// ops
// ---------------------------------------------------------------------------

TensorPtr Tape::matmul(const TensorPtr& a, const TensorPtr& b) {
  if (a->rank() != 2 || b->rank() != 2 || a->shape[1] != b->shape[0]) {
    fail("matmul", "shape mismatch " + shape_str(a->shape) + " vs " +
                       shape_str(b->shape));
  }
  const std::size_t m = a->shape[0], k = a->shape[1], n = b->shape[1];
  auto out = alloc({m, n}, a->requires_grad || b->requires_grad);
  K().matmul(out->values.data(), a->values.data(), b->values.data(), m, k, n,
             false);
  if (out->requires_grad) {
    push_backward([a, b, out, m, k, n] {
      if (!out->grad) return;
      const double* g = out->grad->data();
      if (a->requires_grad) {
        // dA += dC . B^T
        std::vector<double> bt(k * n);
        for (std::size_t i = 0; i < k; ++i)
          for (std::size_t j = 0; j < n; ++j) bt[j * k + i] = b->values[i * n + j];
        K().matmul(a->grad_buffer().data(), g, bt.data(), m, n, k, true);
      }
      if (b->requires_grad) {
        // dB += A^T . dC
        std::vector<double> at(m * k);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < k; ++j) at[j * m + i] = a->values[i * k + j];
        K().matmul(b->grad_buffer().data(), at.data(), g, k, m, n, true);
      }
    });
  }
  return out;
}

TensorPtr Tape::add(const TensorPtr& a, const TensorPtr& b) {
  const TensorPtr& big = a->numel() >= b->numel() ? a : b;
  const TensorPtr& small = a->numel() >= b->numel() ? b : a;
  if (!is_suffix(big->shape, small->shape)) {
    fail("add", "shape mismatch " + shape_str(a->shape) + " vs " +
                    shape_str(b->shape));
  }
  const std::size_t sn = small->numel();
  const std::size_t reps = big->numel() / std::max<std::size_t>(sn, 1);
  auto out = alloc(big->shape, a->requires_grad || b->requires_grad);
  for (std::size_t r = 0; r < reps; ++r) {
    K().add(out->values.data() + r * sn, big->values.data() + r * sn,
            small->values.data(), sn);
  }
  if (out->requires_grad) {
    push_backward([big, small, out, reps, sn] {
      if (!out->grad) return;
      const double* g = out->grad->data();
      if (big->requires_grad) {
        K().axpy(big->grad_buffer().data(), 1.0, g, big->numel());
      }
      if (small->requires_grad) {
        double* sg = small->grad_buffer().data();
        for (std::size_t r = 0; r < reps; ++r) K().axpy(sg, 1.0, g + r * sn, sn);
      }
    });
  }
  return out;
}

TensorPtr Tape::mul(const TensorPtr& a, const TensorPtr& b) {
  const TensorPtr& big = a->numel() >= b->numel() ? a : b;
  const TensorPtr& small = a->numel() >= b->numel() ? b : a;
  if (!is_suffix(big->shape, small->shape)) {
    fail("mul", "shape mismatch " + shape_str(a->shape) + " vs " +
                    shape_str(b->shape));
  }
  const std::size_t sn = small->numel();
  const std::size_t reps = big->numel() / std::max<std::size_t>(sn, 1);
  auto out = alloc(big->shape, a->requires_grad || b->requires_grad);
  for (std::size_t r = 0; r < reps; ++r) {
    K().mul(out->values.data() + r * sn, big->values.data() + r * sn,
            small->values.data(), sn);
  }
  if (out->requires_grad) {
    push_backward([big, small, out, reps, sn] {
      if (!out->grad) return;
      const double* g = out->grad->data();
      if (big->requires_grad) {
        double* bg = big->grad_buffer().data();
        for (std::size_t r = 0; r < reps; ++r) {
          K().mul_acc(bg + r * sn, g + r * sn, small->values.data(), sn);
        }
      }
      if (small->requires_grad) {
        double* sg = small->grad_buffer().data();
        for (std::size_t r = 0; r < reps; ++r) {
          K().mul_acc(sg, g + r * sn, big->values.data() + r * sn, sn);
        }
      }
    });
  }
  return out;
}

TensorPtr Tape::scale(const TensorPtr& x, double c) {
  auto out = alloc(x->shape, x->requires_grad);
  K().scale(out->values.data(), c, x->values.data(), x->numel());
  if (out->requires_grad) {
    push_backward([x, out, c] {
      if (!out->grad) return;
      K().axpy(x->grad_buffer().data(), c, out->grad->data(), x->numel());
    });
  }
  return out;
}

TensorPtr Tape::sub(const TensorPtr& a, const TensorPtr& b) {
  return add(a, scale(b, -1.0));
}

TensorPtr Tape::embedding_gather(const TensorPtr& table,
                                 const std::vector<std::size_t>& rows) {
  if (table->rank() != 2) {
    fail("embedding_gather", "table must be rank-2, got " +
                                 shape_str(table->shape));
  }
  const std::size_t v = table->shape[0], d = table->shape[1];
  for (std::size_t r : rows) {
    if (r >= v) {
      fail("embedding_gather", "row " + std::to_string(r) +
                                   " out of range for table " +
                                   shape_str(table->shape));
    }
  }
  auto out = alloc({rows.size(), d}, table->requires_grad);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(table->values.data() + rows[i] * d, d,
                out->values.data() + i * d);
  }
  if (out->requires_grad) {
    push_backward([table, out, rows, d] {
      if (!out->grad) return;
      double* tg = table->grad_buffer().data();
      const double* g = out->grad->data();
      for (std::size_t i = 0; i < rows.size(); ++i) {
        K().axpy(tg + rows[i] * d, 1.0, g + i * d, d);
      }
    });
  }
  return out;
}

TensorPtr Tape::softmax(const TensorPtr& x) {
  auto [rows, cols] = last_axis_view(*x);
  if (cols == 0) fail("softmax", "empty last axis");
  for (double v : x->values) {
    if (!std::isfinite(v)) fail("softmax", "non-finite input");
  }
  auto out = alloc(x->shape, x->requires_grad);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = x->values.data() + r * cols;
    double* o = out->values.data() + r * cols;
    double mx = in[0];
    for (std::size_t j = 1; j < cols; ++j) mx = in[j] > mx ? in[j] : mx;
    double sum = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      o[j] = std::exp(in[j] - mx);
      sum += o[j];
    }
    K().div_scalar(o, o, sum, cols);
  }
  if (out->requires_grad) {
    push_backward([x, out, rows = rows, cols = cols] {
      if (!out->grad) return;
      double* xg = x->grad_buffer().data();
      for (std::size_t r = 0; r < rows; ++r) {
        const double* y = out->values.data() + r * cols;
        const double* g = out->grad->data() + r * cols;
        double dot = 0.0;
        for (std::size_t j = 0; j < cols; ++j) dot += g[j] * y[j];
        double* xgr = xg + r * cols;
        for (std::size_t j = 0; j < cols; ++j) xgr[j] += y[j] * (g[j] - dot);
      }
    });
  }
  return out;
}

TensorPtr Tape::log(const TensorPtr& x) {
  for (double v : x->values) {
    if (!(v > 0.0)) {
      fail("log", "domain error, input " + std::to_string(v) + " <= 0");
    }
  }
  auto out = alloc(x->shape, x->requires_grad);
  for (std::size_t i = 0; i < x->numel(); ++i) out->values[i] = std::log(x->values[i]);
  if (out->requires_grad) {
    push_backward([x, out] {
      if (!out->grad) return;
      double* xg = x->grad_buffer().data();
      const double* g = out->grad->data();
      for (std::size_t i = 0; i < x->numel(); ++i) xg[i] += g[i] / x->values[i];
    });
  }
  return out;
}

TensorPtr Tape::clamp_min(const TensorPtr& x, double floor) {
  auto out = alloc(x->shape, x->requires_grad);
  for (std::size_t i = 0; i < x->numel(); ++i) {
    out->values[i] = x->values[i] > floor ? x->values[i] : floor;
  }
  if (out->requires_grad) {
    push_backward([x, out, floor] {
      if (!out->grad) return;
      double* xg = x->grad_buffer().data();
      const double* g = out->grad->data();
      for (std::size_t i = 0; i < x->numel(); ++i) {
        xg[i] += x->values[i] > floor ? g[i] : 0.0;
      }
    });
  }
  return out;
}

TensorPtr Tape::relu(const TensorPtr& x) {
  auto out = alloc(x->shape, x->requires_grad);
  K().relu(out->values.data(), x->values.data(), x->numel());
  if (out->requires_grad) {
    push_backward([x, out] {
      if (!out->grad) return;
      K().relu_grad_acc(x->grad_buffer().data(), x->values.data(),
                        out->grad->data(), x->numel());
    });
  }
  return out;
}

TensorPtr Tape::layer_norm(const TensorPtr& x, double eps) {
  auto [rows, cols] = last_axis_view(*x);
  if (cols == 0) fail("layer_norm", "empty last axis");
  auto out = alloc(x->shape, x->requires_grad);
  auto inv_sigma = std::make_shared<std::vector<double>>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = x->values.data() + r * cols;
    double* o = out->values.data() + r * cols;
    double mean = 0.0;
    for (std::size_t j = 0; j < cols; ++j) mean += in[j];
    mean /= static_cast<double>(cols);
    double var = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      const double d = in[j] - mean;
      var += d * d;
    }
    var /= static_cast<double>(cols);
    const double inv = 1.0 / std::sqrt(var + eps);
    (*inv_sigma)[r] = inv;
    for (std::size_t j = 0; j < cols; ++j) o[j] = (in[j] - mean) * inv;
  }
  if (out->requires_grad) {
    push_backward([x, out, inv_sigma, rows = rows, cols = cols] {
      if (!out->grad) return;
      double* xg = x->grad_buffer().data();
      const double n = static_cast<double>(cols);
      for (std::size_t r = 0; r < rows; ++r) {
        const double* y = out->values.data() + r * cols;
        const double* g = out->grad->data() + r * cols;
        double mg = 0.0, mgy = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
          mg += g[j];
          mgy += g[j] * y[j];
        }
        mg /= n;
        mgy /= n;
        const double inv = (*inv_sigma)[r];
        double* xgr = xg + r * cols;
        for (std::size_t j = 0; j < cols; ++j) {
          xgr[j] += inv * (g[j] - mg - y[j] * mgy);
        }
      }
    });
  }
  return out;
}

TensorPtr Tape::sum_all(const TensorPtr& x) {
  auto out = alloc({1}, x->requires_grad);
  double s = 0.0;
  for (double v : x->values) s += v;
  out->values[0] = s;
  if (out->requires_grad) {
    push_backward([x, out] {
      if (!out->grad) return;
      const double g = (*out->grad)[0];
      double* xg = x->grad_buffer().data();
      for (std::size_t i = 0; i < x->numel(); ++i) xg[i] += g;
    });
  }
  return out;
}

TensorPtr Tape::mean_all(const TensorPtr& x) {
  if (x->numel() == 0) fail("mean", "empty tensor");
  auto out = alloc({1}, x->requires_grad);
  double s = 0.0;
  for (double v : x->values) s += v;
  const double n = static_cast<double>(x->numel());
  out->values[0] = s / n;
  if (out->requires_grad) {
    push_backward([x, out, n] {
      if (!out->grad) return;
      const double g = (*out->grad)[0] / n;
      double* xg = x->grad_buffer().data();
      for (std::size_t i = 0; i < x->numel(); ++i) xg[i] += g;
    });
  }
  return out;
}

TensorPtr Tape::sum_axis(const TensorPtr& x, std::size_t axis) {
  if (x->rank() != 2 || axis > 1) {
    fail("sum_axis", "expects rank-2 input and axis 0 or 1, got " +
                         shape_str(x->shape) + " axis " + std::to_string(axis));
  }
  const std::size_t r = x->shape[0], c = x->shape[1];
  auto out = alloc({axis == 0 ? c : r}, x->requires_grad);
  if (axis == 0) {
    for (std::size_t i = 0; i < r; ++i) {
      K().axpy(out->values.data(), 1.0, x->values.data() + i * c, c);
    }
  } else {
    for (std::size_t i = 0; i < r; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < c; ++j) s += x->values[i * c + j];
      out->values[i] = s;
    }
  }
  if (out->requires_grad) {
    push_backward([x, out, r, c, axis] {
      if (!out->grad) return;
      double* xg = x->grad_buffer().data();
      const double* g = out->grad->data();
      if (axis == 0) {
        for (std::size_t i = 0; i < r; ++i) K().axpy(xg + i * c, 1.0, g, c);
      } else {
        for (std::size_t i = 0; i < r; ++i) {
          for (std::size_t j = 0; j < c; ++j) xg[i * c + j] += g[i];
        }
      }
    });
  }
  return out;
}

TensorPtr Tape::mean_axis(const TensorPtr& x, std::size_t axis) {
  if (x->rank() != 2 || axis > 1) {
    fail("mean_axis", "expects rank-2 input and axis 0 or 1, got " +
                          shape_str(x->shape) + " axis " + std::to_string(axis));
  }
  auto s = sum_axis(x, axis);
  const double n = static_cast<double>(axis == 0 ? x->shape[0] : x->shape[1]);
  return scale(s, 1.0 / n);
}

TensorPtr Tape::concat(const std::vector<TensorPtr>& xs, std::size_t axis) {
  if (xs.empty()) fail("concat", "no inputs");
  const std::size_t rank = xs[0]->rank();
  if (rank == 0 || rank > 2 || axis >= rank) {
    fail("concat", "expects rank-1/2 inputs and a valid axis");
  }
  bool rg = false;
  for (const auto& x : xs) {
    if (x->rank() != rank) fail("concat", "rank mismatch");
    for (std::size_t d = 0; d < rank; ++d) {
      if (d != axis && x->shape[d] != xs[0]->shape[d]) {
        fail("concat", "shape mismatch " + shape_str(x->shape) + " vs " +
                           shape_str(xs[0]->shape));
      }
    }
    rg = rg || x->requires_grad;
  }
  std::vector<std::size_t> out_shape = xs[0]->shape;
  out_shape[axis] = 0;
  for (const auto& x : xs) out_shape[axis] += x->shape[axis];

  auto out = alloc(out_shape, rg);
  if (rank == 1 || axis == 0) {
    std::size_t off = 0;
    for (const auto& x : xs) {
      std::copy(x->values.begin(), x->values.end(), out->values.begin() + off);
      off += x->numel();
    }
  } else {  // rank 2, axis 1
    const std::size_t rows = out_shape[0], out_c = out_shape[1];
    std::size_t col_off = 0;
    for (const auto& x : xs) {
      const std::size_t c = x->shape[1];
      for (std::size_t i = 0; i < rows; ++i) {
        std::copy_n(x->values.data() + i * c, c,
                    out->values.data() + i * out_c + col_off);
      }
      col_off += c;
    }
  }
  if (out->requires_grad) {
    push_backward([xs, out, rank, axis, out_shape] {
      if (!out->grad) return;
      const double* g = out->grad->data();
      if (rank == 1 || axis == 0) {
        std::size_t off = 0;
        for (const auto& x : xs) {
          if (x->requires_grad) {
            K().axpy(x->grad_buffer().data(), 1.0, g + off, x->numel());
          }
          off += x->numel();
        }
      } else {
        const std::size_t rows = out_shape[0], out_c = out_shape[1];
        std::size_t col_off = 0;
        for (const auto& x : xs) {
          const std::size_t c = x->shape[1];
          if (x->requires_grad) {
            double* xg = x->grad_buffer().data();
            for (std::size_t i = 0; i < rows; ++i) {
              K().axpy(xg + i * c, 1.0, g + i * out_c + col_off, c);
            }
          }
          col_off += c;
        }
      }
    });
  }
  return out;
}

TensorPtr Tape::transpose(const TensorPtr& x) {
  if (x->rank() != 2) fail("transpose", "expects rank-2, got " + shape_str(x->shape));
  const std::size_t r = x->shape[0], c = x->shape[1];
  auto out = alloc({c, r}, x->requires_grad);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      out->values[j * r + i] = x->values[i * c + j];
    }
  }
  if (out->requires_grad) {
    push_backward([x, out, r, c] {
      if (!out->grad) return;
      double* xg = x->grad_buffer().data();
      const double* g = out->grad->data();
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) xg[i * c + j] += g[j * r + i];
      }
    });
  }
  return out;
}

TensorPtr Tape::reshape(const TensorPtr& x, std::vector<std::size_t> shape) {
  if (product(shape) != x->numel()) {
    fail("reshape", "cannot reshape " + shape_str(x->shape) + " to " +
                        shape_str(shape));
  }
  auto out = alloc(shape, x->requires_grad);
  out->values = x->values;
  if (out->requires_grad) {
    push_backward([x, out] {
      if (!out->grad) return;
      K().axpy(x->grad_buffer().data(), 1.0, out->grad->data(), x->numel());
    });
  }
  return out;
}

}  // namespace xslu
