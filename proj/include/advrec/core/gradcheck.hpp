#ifndef ADVREC_CORE_GRADCHECK_HPP
#define ADVREC_CORE_GRADCHECK_HPP

#include <cmath>
#include <functional>

#include "advrec/core/linalg.hpp"

namespace advrec {

using ScalarFn = std::function<double(const Vec&)>;

/// Central differences (f(x+h eᵢ) − f(x−h eᵢ)) / 2h, one coordinate at a time.
inline Vec finite_diff_grad(const ScalarFn& f, const Vec& x, double h = 1e-5) {
  require(h > 0.0, ErrorKind::config, "finite_diff_grad: step must be positive");
  Vec grad(x.dim());
  Vec probe = x;
  for (std::size_t i = 0; i < x.dim(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double up = f(probe);
    probe[i] = orig - h;
    const double down = f(probe);
    probe[i] = orig;
    require(std::isfinite(up) && std::isfinite(down), ErrorKind::numeric,
            "finite_diff_grad: non-finite function value at coordinate " + std::to_string(i));
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

/// Relative error ‖a−n‖₂ / max(‖a‖₂+‖n‖₂, 1e-8).
inline double grad_rel_error(const Vec& analytic, const Vec& numeric) {
  analytic.check_same(numeric, "grad_check");
  const double denom = std::max(norm2(analytic) + norm2(numeric), 1e-8);
  return norm2(analytic - numeric) / denom;
}

inline bool grad_check(const Vec& analytic, const Vec& numeric, double rel_tol) {
  return grad_rel_error(analytic, numeric) <= rel_tol;
}

}  // namespace advrec

#endif  // ADVREC_CORE_GRADCHECK_HPP
