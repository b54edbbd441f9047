#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "wasserinfer/distributions.hpp"
#include "wasserinfer/errors.hpp"
#include "wasserinfer/quadrature.hpp"

namespace wasserinfer {

enum class TransportMethod { exact_two_sample, quadrature_one_sample, closed_form_gaussian };

inline std::string_view to_string(TransportMethod m) {
  switch (m) {
    case TransportMethod::exact_two_sample: return "exact_two_sample";
    case TransportMethod::quadrature_one_sample: return "quadrature_one_sample";
    case TransportMethod::closed_form_gaussian: return "closed_form_gaussian";
  }
  return "unknown";
}

/// Value of W_p^p together with how it was obtained.
struct TransportResult {
  double cost_p = 0.0;
  double p = 2.0;
  std::size_t n = 0;
  std::size_t m = 0;  // 0 when the second marginal is analytic
  TransportMethod method = TransportMethod::exact_two_sample;
  /// p <= 1: the CLT results do not cover this cost.
  bool outside_theory = false;
};

namespace detail {

inline double pow_abs(double x, double p) {
  const double a = std::abs(x);
  if (p == 1.0) return a;
  if (p == 2.0) return a * a;
  if (p == 3.0) return a * a * a;
  return std::pow(a, p);
}

inline void check_cost_exponent(double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) {
    throw DomainError("cost exponent p must be >= 1, got " + std::to_string(p));
  }
}

/// Neumaier compensated accumulator.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline bool is_even_integer(double p) {
  return std::floor(p) == p && std::fmod(p, 2.0) == 0.0;
}

}  // namespace detail

/// Exact W_p^p between two empirical distributions.
///
/// Both quantile functions are constant between consecutive points of the
/// merged grid {i/n} u {j/m}; breakpoints are compared as the integers i*m and
/// j*n so coinciding fractions are never split by rounding.
inline TransportResult wasserstein_pp_two_sample(const SortedSample& x, const SortedSample& y,
                                                 double p) {
  detail::check_cost_exponent(p);
  const std::uint64_t n = x.size();
  const std::uint64_t m = y.size();
  if (n >= (1ULL << 31) || m >= (1ULL << 31)) throw DomainError("sample too large for exact grid");

  detail::CompensatedSum sum;
  std::uint64_t i = 1;
  std::uint64_t j = 1;
  std::uint64_t prev = 0;
  while (i <= n && j <= m) {
    const std::uint64_t xi = i * m;
    const std::uint64_t yj = j * n;
    const std::uint64_t next = std::min(xi, yj);
    sum.add(static_cast<double>(next - prev) * detail::pow_abs(x[i - 1] - y[j - 1], p));
    prev = next;
    if (xi == next) ++i;
    if (yj == next) ++j;
  }
  return TransportResult{sum.value() / (static_cast<double>(n) * static_cast<double>(m)), p, n, m,
                         TransportMethod::exact_two_sample, p <= 1.0};
}

/// W_p^p between an empirical distribution and an arbitrary quantile function.
///
/// Each cell ((i-1)/n, i/n] is integrated with Gauss-Legendre of order
/// `quad_order`, split where g crosses X_(i) unless p is an even integer. The
/// two end cells are geometrically graded so unbounded quantiles (Gaussian
/// tails) are handled. An empirical `g` is routed to the exact two-sample sum.
inline TransportResult wasserstein_pp_one_sample(const SortedSample& x, const QuantileFunction& g,
                                                 double p, int quad_order = 16) {
  detail::check_cost_exponent(p);
  if (quad_order < 2) throw DomainError("quad_order must be >= 2");
  if (g.kind() == QuantileKind::empirical && g.sample() != nullptr) {
    return wasserstein_pp_two_sample(x, *g.sample(), p);
  }

  const GaussLegendre rule(quad_order);
  const std::size_t n = x.size();
  const double nd = static_cast<double>(n);
  const bool smooth_power = detail::is_even_integer(p);

  detail::CompensatedSum sum;
  for (std::size_t i = 1; i <= n; ++i) {
    const double xi = x[i - 1];
    const double a = static_cast<double>(i - 1) / nd;
    const double b = static_cast<double>(i) / nd;
    auto integrand = [&](double t) {
      const double v = detail::pow_abs(xi - g(t), p);
      if (!std::isfinite(v)) {
        throw NumericalError("target quantile is not finite at t = " + std::to_string(t));
      }
      return v;
    };
    const Endpoint left = (i == 1) ? Endpoint::unbounded : Endpoint::smooth;
    const Endpoint right = (i == n) ? Endpoint::unbounded : Endpoint::smooth;
    double cut = -1.0;
    if (!smooth_power) {
      const double t_star = g.cdf(xi);
      if (t_star > a && t_star < b) cut = t_star;
    }
    if (cut > 0.0) {
      sum.add(rule.integrate_graded(integrand, a, cut, left, Endpoint::kink));
      sum.add(rule.integrate_graded(integrand, cut, b, Endpoint::kink, right));
    } else {
      sum.add(rule.integrate_graded(integrand, a, b, left, right));
    }
  }
  return TransportResult{sum.value(), p, n, 0, TransportMethod::quadrature_one_sample, p <= 1.0};
}

/// W_p^p(F, G) for two Gaussians: E|(mu_f - mu_g) + (sigma_f - sigma_g) Z|^p.
///
/// Equal scales give |mu_f - mu_g|^p and p == 2 gives the sum of squared
/// differences; everything else is integrated against the normal density.
inline double gaussian_wasserstein_pp(const GaussianDist& f, const GaussianDist& g, double p,
                                      int quad_order = 16) {
  detail::check_cost_exponent(p);
  const double shift = f.mu() - g.mu();
  const double scale = f.sigma() - g.sigma();
  if (scale == 0.0) return detail::pow_abs(shift, p);
  if (p == 2.0) return shift * shift + scale * scale;

  const GaussLegendre rule(std::max(quad_order, 2));
  constexpr double kRange = 38.0;
  std::vector<double> breaks;
  for (int k = -38; k <= 38; ++k) breaks.push_back(k);
  const double kink = -shift / scale;
  if (kink > -kRange && kink < kRange) breaks.push_back(kink);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  auto integrand = [&](double z) {
    return detail::pow_abs(shift + scale * z, p) * inv_sqrt_2pi * std::exp(-0.5 * z * z);
  };
  detail::CompensatedSum sum;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const Endpoint left = breaks[k] == kink ? Endpoint::kink : Endpoint::smooth;
    const Endpoint right = breaks[k + 1] == kink ? Endpoint::kink : Endpoint::smooth;
    sum.add(rule.integrate_graded(integrand, breaks[k], breaks[k + 1], left, right));
  }
  return sum.value();
}

}  // namespace wasserinfer
