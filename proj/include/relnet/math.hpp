#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "relnet/errors.hpp"

namespace relnet {

/// Binomial coefficients: exact 64-bit Pascal recursion for small n,
/// log-space via lgamma above (values there are only ever used inside
/// products with probabilities that tame the magnitude).
inline constexpr int kExactBinomialLimit = 60;

inline double log_binomial(int n, int k) {
  if (k < 0 || k > n) return -std::numeric_limits<double>::infinity();
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  if (k > n - k) k = n - k;
  if (n <= kExactBinomialLimit) {
    std::uint64_t c = 1;
    for (int i = 1; i <= k; ++i) {
      // multiply before divide stays integral: c * (n-k+i) is divisible by i
      c = c * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
    }
    return static_cast<double>(c);
  }
  return std::exp(log_binomial(n, k));
}

/// Binomial pmf C(n,k) p^k (1-p)^(n-k), stable for large n and extreme p.
inline double binomial_pmf(int n, int k, double p) {
  if (k < 0 || k > n) return 0.0;
  if (p <= 0.0) return k == 0 ? 1.0 : 0.0;
  if (p >= 1.0) return k == n ? 1.0 : 0.0;
  if (n <= kExactBinomialLimit) {
    return binomial(n, k) * std::pow(p, k) * std::pow(1.0 - p, n - k);
  }
  double log_pmf = log_binomial(n, k) + k * std::log(p) + (n - k) * std::log1p(-p);
  return std::exp(log_pmf);
}

namespace detail {

inline double simpson(double fa, double fm, double fb, double h) {
  return h / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive_simpson_rec(const std::function<double(double)>& f, double a,
                                   double b, double fa, double fm, double fb,
                                   double whole, double tol, int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m);
  double rm = 0.5 * (m + b);
  double flm = f(lm);
  double frm = f(rm);
  double left = simpson(fa, flm, fm, m - a);
  double right = simpson(fm, frm, fb, b - m);
  double delta = left + right - whole;
  if (depth <= 0) throw numerical_error("adaptive Simpson: recursion depth exhausted");
  if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson quadrature with absolute tolerance.
inline double integrate_adaptive_simpson(const std::function<double(double)>& f,
                                         double a, double b, double abs_tol,
                                         int max_depth = 60) {
  if (!(b > a)) return 0.0;
  double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  double whole = detail::simpson(fa, fm, fb, b - a);
  return detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, abs_tol, max_depth);
}

struct SurvivalIntegralOptions {
  double abs_tol = 1e-8;
  double tail_threshold = 1e-12;  // integrate until S falls below this
  double initial_span = 1.0;      // first guess for the doubling search
  double horizon = 1e9;           // give up if S has not decayed by here
};

/// Integral of a nonincreasing survival function over [0, inf). The upper
/// cutoff is found by doubling until the tail drops under the threshold.
inline double integrate_survival(const std::function<double(double)>& survival,
                                 SurvivalIntegralOptions opt = {}) {
  double t_max = opt.initial_span;
  while (survival(t_max) >= opt.tail_threshold) {
    t_max *= 2.0;
    if (t_max > opt.horizon) {
      throw numerical_error(
          "survival integral: function does not decay below tail threshold "
          "before the configured horizon");
    }
  }
  return integrate_adaptive_simpson(survival, 0.0, t_max, opt.abs_tol);
}

/// Relative closeness with an absolute floor for values near zero.
inline bool approx_equal(double a, double b, double rel_tol, double abs_floor = 0.0) {
  double scale = std::max(std::abs(a), std::abs(b));
  return std::abs(a - b) <= rel_tol * scale + abs_floor;
}

}  // namespace relnet
