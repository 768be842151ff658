#pragma once

#include <algorithm>
#include <functional>
#include <string>
#include <vector>

#include "bed/nn.hpp"
#include "bed/types.hpp"

namespace bed {

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  long checked = 0;
};

// Compares reverse-mode gradients against central differences, coordinate by
// coordinate, in double precision.
//
// `loss(with_grad)` evaluates the scalar loss over the current parameter
// values; when with_grad is true it must also accumulate gradients into the
// tensors (which arrive zeroed). Relative error per coordinate is
// |a - fd| / max(1e-8, |a| + |fd|).
inline GradCheckReport grad_check(ParamRefs<double> params,
                                  const std::function<double(bool)>& loss,
                                  double eps = 1e-5) {
  if (eps < 1e-7 || eps > 1e-4) {
    throw DataError("grad_check: eps must lie in [1e-7, 1e-4]");
  }
  for (auto* p : params) p->zero_grad();
  double base = loss(true);
  if (!std::isfinite(base)) throw NumericError("grad_check: non-finite loss");

  std::vector<Mat<double>> analytic;
  analytic.reserve(params.size());
  for (auto* p : params) analytic.push_back(p->grad);

  GradCheckReport report;
  for (size_t k = 0; k < params.size(); ++k) {
    Mat<double>& value = params[k]->value;
    for (long i = 0; i < params[k]->size(); ++i) {
      const double saved = value.data()[i];
      value.data()[i] = saved + eps;
      double up = loss(false);
      value.data()[i] = saved - eps;
      double down = loss(false);
      value.data()[i] = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw NumericError("grad_check: non-finite perturbed loss at " +
                           params[k]->name);
      }
      const double fd = (up - down) / (2.0 * eps);
      const double a = analytic[k].data()[i];
      const double rel =
          std::abs(a - fd) / std::max(1e-8, std::abs(a) + std::abs(fd));
      ++report.checked;
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_param = params[k]->name;
      }
    }
  }
  return report;
}

}  // namespace bed
