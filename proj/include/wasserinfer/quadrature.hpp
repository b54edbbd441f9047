#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "wasserinfer/errors.hpp"

namespace wasserinfer {

/// Behaviour of an integrand at one end of an interval.
/// `kink`: finite but not smooth (|t - c|^p with non-integer p).
/// `unbounded`: integrable blow-up at t = 0 or t = 1.
enum class Endpoint { smooth, kink, unbounded };

/// Fixed-order Gauss-Legendre rule on [-1, 1], nodes found by Newton
/// iteration on the Legendre three-term recurrence.
class GaussLegendre {
 public:
  explicit GaussLegendre(int order) {
    if (order < 1) throw DomainError("quadrature order must be >= 1, got " + std::to_string(order));
    const int n = order;
    nodes_.resize(n);
    weights_.resize(n);
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
      double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int iter = 0; iter < 100; ++iter) {
        double p1 = 1.0;
        double p2 = 0.0;
        for (int j = 1; j <= n; ++j) {
          const double p3 = p2;
          p2 = p1;
          p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
        }
        dp = n * (z * p1 - p2) / (z * z - 1.0);
        const double z_prev = z;
        z = z_prev - p1 / dp;
        if (std::abs(z - z_prev) <= 1e-15) {
          // refresh the derivative at the converged node
          p1 = 1.0;
          p2 = 0.0;
          for (int j = 1; j <= n; ++j) {
            const double p3 = p2;
            p2 = p1;
            p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
          }
          dp = n * (z * p1 - p2) / (z * z - 1.0);
          break;
        }
      }
      nodes_[i] = -z;
      nodes_[n - 1 - i] = z;
      weights_[i] = weights_[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
  }

  int order() const noexcept { return static_cast<int>(nodes_.size()); }
  const std::vector<double>& nodes() const noexcept { return nodes_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

  /// Integral of f over [a, b].
  template <class F>
  double integrate(F&& f, double a, double b) const {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    double sum = 0.0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      sum += weights_[i] * f(mid + half * nodes_[i]);
    }
    return half * sum;
  }

  /// Integral of f over [a, b] split into `panels` equal panels.
  template <class F>
  double integrate_panels(F&& f, double a, double b, int panels) const {
    const double width = (b - a) / panels;
    double sum = 0.0;
    for (int k = 0; k < panels; ++k) {
      const double lo = a + k * width;
      const double hi = (k + 1 == panels) ? b : lo + width;
      sum += integrate(f, lo, hi);
    }
    return sum;
  }

  /// Integral over [a, b] with b <= 1, for integrands that may blow up
  /// integrably at t = 0 and/or t = 1. Panels are halved geometrically toward
  /// each singular end; the omitted sliver is below 1e-20 at t = 0 and
  /// 2^-50 at t = 1 (the spacing of doubles there).
  template <class F>
  double integrate_unit_graded(F&& f, double a, double b, bool grade_left, bool grade_right) const {
    if (grade_left && grade_right) {
      const double mid = 0.5 * (a + b);
      return integrate_unit_graded(f, a, mid, true, false) +
             integrate_unit_graded(f, mid, b, false, true);
    }
    if (grade_left) {
      constexpr double kFloor = 1e-20;
      double sum = 0.0;
      double hi = b;
      double lo = a + 0.5 * (b - a);
      while (hi - a > kFloor) {
        sum += integrate(f, lo, hi);
        hi = lo;
        lo = a + 0.5 * (hi - a);
      }
      return sum;
    }
    if (grade_right) {
      constexpr double kFloor = 0x1p-50;
      double sum = 0.0;
      double lo = a;
      double hi = b - 0.5 * (b - a);
      while (b - lo > kFloor) {
        sum += integrate(f, lo, hi);
        lo = hi;
        hi = b - 0.5 * (b - lo);
      }
      return sum;
    }
    return integrate(f, a, b);
  }

  /// Integral over [a, b] with geometric grading toward non-smooth ends.
  /// Kinks get `kKinkLevels` halvings and keep the final sliver; unbounded
  /// ends follow integrate_unit_graded.
  template <class F>
  double integrate_graded(F&& f, double a, double b, Endpoint left, Endpoint right) const {
    if (left != Endpoint::smooth && right != Endpoint::smooth) {
      const double mid = 0.5 * (a + b);
      return integrate_graded(f, a, mid, left, Endpoint::smooth) +
             integrate_graded(f, mid, b, Endpoint::smooth, right);
    }
    if (left == Endpoint::unbounded) return integrate_unit_graded(f, a, b, true, false);
    if (right == Endpoint::unbounded) return integrate_unit_graded(f, a, b, false, true);
    if (left == Endpoint::kink) {
      double sum = 0.0;
      double hi = b;
      for (int level = 0; level < kKinkLevels; ++level) {
        const double lo = a + 0.5 * (hi - a);
        sum += integrate(f, lo, hi);
        hi = lo;
      }
      return sum + integrate(f, a, hi);
    }
    if (right == Endpoint::kink) {
      double sum = 0.0;
      double lo = a;
      for (int level = 0; level < kKinkLevels; ++level) {
        const double hi = b - 0.5 * (b - lo);
        sum += integrate(f, lo, hi);
        lo = hi;
      }
      return sum + integrate(f, lo, b);
    }
    return integrate(f, a, b);
  }

  static constexpr int kKinkLevels = 24;

 private:
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

}  // namespace wasserinfer
