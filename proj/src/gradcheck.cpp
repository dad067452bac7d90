#include "xslu/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace xslu {

namespace {

double eval_scalar(const ScalarFn& f, const std::vector<TensorPtr>& inputs) {
  Tape tape;
  tape.set_recording(false);
  TensorPtr out = f(tape, inputs);
  return out->scalar();
}

}  // namespace

GradCheckReport grad_check(const ScalarFn& f, const std::vector<TensorPtr>& inputs,
                           double h, double tol) {
  if (!(h >= 1e-7 && h <= 1e-4)) {
    throw std::runtime_error("grad_check: h must be in [1e-7, 1e-4]");
  }

  // analytic pass on cloned inputs with grads enabled
  std::vector<TensorPtr> tracked;
  tracked.reserve(inputs.size());
  for (const auto& in : inputs) {
    tracked.push_back(make_tensor(in->shape, in->values, true));
  }
  Tape tape;
  TensorPtr root = f(tape, tracked);
  if (root->numel() != 1) {
    throw std::runtime_error("grad_check: f must be scalar-valued, got shape " +
                             shape_str(root->shape));
  }
  tape.backward(root);

  // numeric pass coordinate by coordinate on plain value clones
  std::vector<TensorPtr> probe;
  probe.reserve(inputs.size());
  for (const auto& in : inputs) {
    probe.push_back(make_tensor(in->shape, in->values, false));
  }

  GradCheckReport report;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const std::vector<double>* grads =
        tracked[i]->grad ? &*tracked[i]->grad : nullptr;
    for (std::size_t j = 0; j < inputs[i]->numel(); ++j) {
      const double orig = probe[i]->values[j];
      probe[i]->values[j] = orig + h;
      const double fp = eval_scalar(f, probe);
      probe[i]->values[j] = orig - h;
      const double fm = eval_scalar(f, probe);
      probe[i]->values[j] = orig;

      const double numeric = (fp - fm) / (2.0 * h);
      const double analytic = grads ? (*grads)[j] : 0.0;
      double rel;
      if (std::isnan(analytic) || std::isnan(numeric)) {
        rel = std::numeric_limits<double>::quiet_NaN();
      } else {
        const double denom =
            std::max({std::fabs(analytic), std::fabs(numeric), 1e-8});
        rel = std::fabs(analytic - numeric) / denom;
      }
      ++report.coords_checked;
      const bool bad = std::isnan(rel) || rel >= tol;
      if (!std::isnan(rel) && rel > report.max_rel_err) {
        report.max_rel_err = rel;
      }
      if (bad && report.failures.size() < 16) {
        report.failures.push_back({i, j, analytic, numeric, rel});
      }
    }
  }
  report.pass = report.failures.empty();
  return report;
}

}  // namespace xslu
