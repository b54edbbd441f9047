#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "wasserinfer/distributions.hpp"
#include "wasserinfer/errors.hpp"
#include "wasserinfer/quadrature.hpp"
#include "wasserinfer/transport.hpp"

namespace wasserinfer {

namespace detail {

/// Derivative of |x|^p: p sgn(x) |x|^{p-1}.
inline double cost_derivative(double x, double p) {
  if (x == 0.0) return 0.0;
  const double mag = p == 2.0 ? 2.0 * std::abs(x) : p * std::pow(std::abs(x), p - 1.0);
  return x > 0.0 ? mag : -mag;
}

inline void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw DomainError("alpha must lie in (0, 1), got " + std::to_string(alpha));
  }
}

inline void check_two_sample_sizes(const SortedSample& x, const SortedSample& y) {
  if (x.size() < 2 || y.size() < 2) {
    throw SampleTooSmall("variance estimation needs n >= 2 and m >= 2, got n = " +
                         std::to_string(x.size()) + ", m = " + std::to_string(y.size()));
  }
}

/// Population variance, two-pass.
inline double population_variance(const std::vector<double>& v) {
  CompensatedSum s;
  for (double d : v) s.add(d);
  const double mean = s.value() / static_cast<double>(v.size());
  CompensatedSum sq;
  for (double d : v) sq.add((d - mean) * (d - mean));
  return sq.value() / static_cast<double>(v.size());
}

/// d_1 = 0 and, for i >= 2,
///   d_i = sum_{j=2}^{i} |X_(j) - q_{j-1}|^p - |X_(j-1) - q_{j-1}|^p
/// where q_k = `grid_quantile(k)` is the target quantile at k / n.
template <class GridQuantile>
std::vector<double> transport_increments(const SortedSample& x, double p,
                                         GridQuantile&& grid_quantile) {
  const std::size_t n = x.size();
  std::vector<double> d(n, 0.0);
  for (std::size_t j = 2; j <= n; ++j) {
    const double c = grid_quantile(j - 1);
    d[j - 1] = d[j - 2] + pow_abs(x[j - 1] - c, p) - pow_abs(x[j - 2] - c, p);
  }
  return d;
}

inline std::vector<double> transport_increments(const SortedSample& x, const SortedSample& y,
                                                double p) {
  const std::size_t n = x.size();
  const std::size_t m = y.size();
  // G_m^{-1}(k/n) = Y_(ceil(k m / n))
  return transport_increments(x, p, [&](std::size_t k) {
    const std::size_t idx = (k * m + n - 1) / n;
    return y[idx - 1];
  });
}

/// c_p(t; f, g) without argument checks (p == 1 allowed).
inline double cp_value(double t, const QuantileFunction& f, const QuantileFunction& g, double p) {
  if (const SortedSample* xs = f.sample()) {
    const SortedSample& x = *xs;
    const std::size_t k_half = empirical_quantile_index(x.size(), 0.5);
    const std::size_t k_t = empirical_quantile_index(x.size(), t);
    // On [X_(j-1), X_(j)) the empirical cdf is constant, so the integrand
    // h'(s - g(F(s))) integrates in closed form.
    auto segment = [&](std::size_t j) {
      const double lo = x[j - 2];
      const double hi = x[j - 1];
      if (lo == hi) return 0.0;
      const double c = g(x.cdf(lo));
      return pow_abs(hi - c, p) - pow_abs(lo - c, p);
    };
    CompensatedSum sum;
    if (k_t > k_half) {
      for (std::size_t j = k_half + 1; j <= k_t; ++j) sum.add(segment(j));
      return sum.value();
    }
    for (std::size_t j = k_t + 1; j <= k_half; ++j) sum.add(segment(j));
    return -sum.value();
  }

  // Analytic f: quadrature in s between f(1/2) and f(t).
  const double lo = f(0.5);
  const double hi = f(t);
  if (lo == hi) return 0.0;
  const double a = std::min(lo, hi);
  const double b = std::max(lo, hi);
  std::vector<double> breaks;
  constexpr int kPanels = 64;
  for (int k = 0; k <= kPanels; ++k) breaks.push_back(a + (b - a) * k / kPanels);
  if (const SortedSample* ys = g.sample()) {
    const double m = static_cast<double>(ys->size());
    for (std::size_t j = 1; j < ys->size(); ++j) {
      const double s = f(static_cast<double>(j) / m);
      if (s > a && s < b) breaks.push_back(s);
    }
    std::sort(breaks.begin(), breaks.end());
  }
  auto gap = [&](double s) { return s - g(f.cdf(s)); };
  // h' is not smooth where the quantiles cross unless p is an even integer;
  // locate sign changes of the gap by bisection and grade toward them.
  std::vector<double> kinks;
  if (!is_even_integer(p)) {
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
      double l = breaks[k];
      double r = breaks[k + 1];
      double gl = gap(l);
      if (!(r > l) || gl == 0.0 || (gl > 0.0) == (gap(r) > 0.0)) continue;
      for (int iter = 0; iter < 200 && r - l > 4 * std::numeric_limits<double>::epsilon() *
                                                      std::max(1.0, std::abs(l));
           ++iter) {
        const double mid = 0.5 * (l + r);
        const double gm = gap(mid);
        if ((gm > 0.0) == (gl > 0.0)) {
          l = mid;
          gl = gm;
        } else {
          r = mid;
        }
      }
      kinks.push_back(0.5 * (l + r));
    }
    breaks.insert(breaks.end(), kinks.begin(), kinks.end());
  }
  std::sort(breaks.begin(), breaks.end());
  const GaussLegendre rule(16);
  auto integrand = [&](double s) { return cost_derivative(gap(s), p); };
  auto is_kink = [&](double s) {
    return std::find(kinks.begin(), kinks.end(), s) != kinks.end() ? Endpoint::kink
                                                                   : Endpoint::smooth;
  };
  CompensatedSum sum;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    if (breaks[k + 1] > breaks[k]) {
      sum.add(rule.integrate_graded(integrand, breaks[k], breaks[k + 1], is_kink(breaks[k]),
                                    is_kink(breaks[k + 1])));
    }
  }
  return hi >= lo ? sum.value() : -sum.value();
}

}  // namespace detail

//---------------------------------------------------------------------------//
// c_p
//---------------------------------------------------------------------------//

/// c_p(t; F, G) = integral from F^{-1}(1/2) to F^{-1}(t) of h_p'(s - G^{-1}(F(s))) ds,
/// with h_p(x) = |x|^p.
///
/// For an empirical `f` the integral is an exact finite sum over the gaps
/// between order statistics; otherwise it is computed by quadrature in s.
inline double cp_empirical(double t, const QuantileFunction& f, const QuantileFunction& g,
                           double p) {
  if (!(t > 0.0 && t < 1.0)) throw DomainError("c_p requires 0 < t < 1");
  if (!(p > 1.0) || !std::isfinite(p)) throw DomainError("c_p requires p > 1");
  return detail::cp_value(t, f, g, p);
}

/// Closed-form c_p for F = N(0,1) against G = N(mu, lambda^2).
///
/// `forward` is c_p(t; F, G), `backward` is c_p(t; G, F). With lambda == 1
/// this is the pure location model.
class CpClosedForm {
 public:
  static CpClosedForm location(double mu, double p) { return CpClosedForm(mu, 1.0, p); }
  static CpClosedForm scale_location(double mu, double lambda, double p) {
    if (!(lambda > 0.0)) throw DomainError("scale must be positive");
    return CpClosedForm(mu, lambda, p);
  }

  double mu() const noexcept { return mu_; }
  double lambda() const noexcept { return lambda_; }
  double p() const noexcept { return p_; }

  double forward(double t) const { return forward_z(normal_quantile(t)); }
  double backward(double t) const { return backward_z(normal_quantile(t)); }

  /// sigma^2_p(F, G) = Var of c_p(U; F, G), U uniform.
  double sigma2_forward() const {
    if (lambda_ == 1.0) return location_sigma2();
    return variance_over_normal([this](double z) { return forward_z(z); },
                                mu_ / (1.0 - lambda_));
  }

  double sigma2_backward() const {
    if (lambda_ == 1.0) return location_sigma2();
    return variance_over_normal([this](double z) { return backward_z(z); },
                                -mu_ / (lambda_ - 1.0));
  }

  /// (1 - fraction) sigma^2(F, G) + fraction sigma^2(G, F), fraction = n / (n + m).
  double combined_sigma2(double fraction = 0.5) const {
    return (1.0 - fraction) * sigma2_forward() + fraction * sigma2_backward();
  }

 private:
  CpClosedForm(double mu, double lambda, double p) : mu_(mu), lambda_(lambda), p_(p) {
    detail::check_cost_exponent(p);
  }

  double sgn_pow_mu() const {
    if (mu_ == 0.0) return 0.0;
    const double mag = p_ * std::pow(std::abs(mu_), p_ - 1.0);
    return mu_ > 0.0 ? mag : -mag;
  }

  double location_sigma2() const {
    const double s = sgn_pow_mu();
    return s * s;
  }

  double forward_z(double z) const {
    if (lambda_ == 1.0) return -sgn_pow_mu() * z;
    const double k = 1.0 - lambda_;
    return (detail::pow_abs(k * z - mu_, p_) - detail::pow_abs(mu_, p_)) / k;
  }

  double backward_z(double z) const {
    if (lambda_ == 1.0) return sgn_pow_mu() * z;
    const double k = lambda_ - 1.0;
    return lambda_ / k * (detail::pow_abs(k * z + mu_, p_) - detail::pow_abs(mu_, p_));
  }

  template <class C>
  static double variance_over_normal(C&& c, double kink) {
    const GaussLegendre rule(24);
    std::vector<double> breaks;
    for (int k = -38; k <= 38; ++k) breaks.push_back(k);
    if (kink > -38.0 && kink < 38.0) breaks.push_back(kink);
    std::sort(breaks.begin(), breaks.end());
    const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    detail::CompensatedSum first;
    detail::CompensatedSum second;
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
      if (!(breaks[k + 1] > breaks[k])) continue;
      const Endpoint left = breaks[k] == kink ? Endpoint::kink : Endpoint::smooth;
      const Endpoint right = breaks[k + 1] == kink ? Endpoint::kink : Endpoint::smooth;
      first.add(rule.integrate_graded(
          [&](double z) { return c(z) * inv_sqrt_2pi * std::exp(-0.5 * z * z); }, breaks[k],
          breaks[k + 1], left, right));
      second.add(rule.integrate_graded(
          [&](double z) {
            const double v = c(z);
            return v * v * inv_sqrt_2pi * std::exp(-0.5 * z * z);
          },
          breaks[k], breaks[k + 1], left, right));
    }
    return second.value() - first.value() * first.value();
  }

  double mu_;
  double lambda_;
  double p_;
};

//---------------------------------------------------------------------------//
// Variance estimation
//---------------------------------------------------------------------------//

struct VarianceEstimate {
  double sigma2_1 = 0.0;         // from d_{i,n,m}(X, Y)
  double sigma2_2 = 0.0;         // from d_{i,m,n}(Y, X)
  double sigma2_combined = 0.0;  // m/(n+m) sigma2_1 + n/(n+m) sigma2_2
  std::vector<double> d1;
  std::vector<double> d2;
};

/// Plug-in estimator of the asymptotic variance of W_p^p(F_n, G_m). O(n + m).
inline VarianceEstimate estimate_variance(const SortedSample& x, const SortedSample& y, double p) {
  detail::check_cost_exponent(p);
  detail::check_two_sample_sizes(x, y);
  VarianceEstimate est;
  est.d1 = detail::transport_increments(x, y, p);
  est.d2 = detail::transport_increments(y, x, p);
  est.sigma2_1 = detail::population_variance(est.d1);
  est.sigma2_2 = detail::population_variance(est.d2);
  const double n = static_cast<double>(x.size());
  const double m = static_cast<double>(y.size());
  est.sigma2_combined = m / (n + m) * est.sigma2_1 + n / (n + m) * est.sigma2_2;
  return est;
}

/// One-sample analogue: the same increments with G_m^{-1} replaced by an
/// analytic quantile. Estimates sigma^2_p(F, G).
inline double estimate_variance_one_sample(const SortedSample& x, const QuantileFunction& g,
                                           double p) {
  detail::check_cost_exponent(p);
  if (x.size() < 2) throw SampleTooSmall("variance estimation needs n >= 2");
  const double n = static_cast<double>(x.size());
  auto d = detail::transport_increments(
      x, p, [&](std::size_t k) { return g(static_cast<double>(k) / n); });
  return detail::population_variance(d);
}

/// Integral over (0,1) of the squared centred c_p(t; F_n, G_m), evaluated
/// cell by cell from the defining integral. Equals `sigma2_1` of
/// estimate_variance; kept as an independent check of it.
inline double variance_oracle_integral(const SortedSample& x, const SortedSample& y, double p) {
  detail::check_cost_exponent(p);
  detail::check_two_sample_sizes(x, y);
  const auto f = QuantileFunction::empirical(x);
  const auto g = QuantileFunction::empirical(y);
  const std::size_t n = x.size();
  std::vector<double> cell(n);
  for (std::size_t i = 1; i <= n; ++i) {
    const double t = (static_cast<double>(i) - 0.5) / static_cast<double>(n);
    cell[i - 1] = detail::cp_value(t, f, g, p);
  }
  return detail::population_variance(cell);
}

//---------------------------------------------------------------------------//
// Confidence interval and similarity test
//---------------------------------------------------------------------------//

/// Outcome of confidence_interval or similarity_test. The test fields are
/// empty for a bare confidence interval.
struct SimilarityVerdict {
  double statistic = 0.0;  // W_p^p(F_n, G_m)
  double ci_low = 0.0;
  double ci_high = 0.0;
  double ci_low_clipped = 0.0;  // max(0, ci_low)
  double halfwidth = 0.0;
  double sigma2 = 0.0;  // combined variance estimate
  double alpha = 0.05;
  double p = 2.0;
  std::size_t n = 0;
  std::size_t m = 0;
  bool outside_theory = false;

  std::optional<double> delta0;
  std::optional<double> threshold;
  std::optional<bool> reject_null;
};

/// Builds a verdict from precomputed pieces; `delta0` empty gives a bare CI.
inline SimilarityVerdict make_verdict(double statistic, double sigma2, std::size_t n,
                                      std::size_t m, double p, double alpha,
                                      std::optional<double> delta0 = std::nullopt) {
  detail::check_alpha(alpha);
  SimilarityVerdict v;
  v.statistic = statistic;
  v.sigma2 = sigma2;
  v.alpha = alpha;
  v.p = p;
  v.n = n;
  v.m = m;
  v.outside_theory = p <= 1.0;
  const double nd = static_cast<double>(n);
  const double md = static_cast<double>(m);
  const double scale = std::sqrt((nd + md) / (nd * md)) * std::sqrt(std::max(sigma2, 0.0));
  v.halfwidth = scale * normal_quantile(1.0 - alpha / 2.0);
  v.ci_low = statistic - v.halfwidth;
  v.ci_high = statistic + v.halfwidth;
  v.ci_low_clipped = std::max(0.0, v.ci_low);
  if (delta0) {
    if (!(*delta0 > 0.0) || !std::isfinite(*delta0)) {
      throw DomainError("delta0 must be positive, got " + std::to_string(*delta0));
    }
    v.delta0 = delta0;
    v.threshold = std::pow(*delta0, p) - scale * normal_quantile(1.0 - alpha);
    v.reject_null = statistic < *v.threshold;
  }
  return v;
}

/// Asymptotic (1 - alpha) interval for W_p^p(F, G):
/// W_p^p(F_n, G_m) +- sqrt((n+m)/(nm)) sigma_hat Phi^{-1}(1 - alpha/2).
inline SimilarityVerdict confidence_interval(const SortedSample& x, const SortedSample& y,
                                             double p, double alpha) {
  detail::check_alpha(alpha);
  const auto var = estimate_variance(x, y, p);
  const auto cost = wasserstein_pp_two_sample(x, y, p);
  return make_verdict(cost.cost_p, var.sigma2_combined, x.size(), y.size(), p, alpha);
}

/// Tests H0: W_p(F, G) >= delta0 against H1: W_p(F, G) < delta0. H0 is
/// rejected when W_p^p(F_n, G_m) < delta0^p - sqrt((n+m)/(nm)) sigma_hat Phi^{-1}(1 - alpha).
inline SimilarityVerdict similarity_test(const SortedSample& x, const SortedSample& y, double p,
                                         double delta0, double alpha) {
  detail::check_alpha(alpha);
  if (!(delta0 > 0.0) || !std::isfinite(delta0)) {
    throw DomainError("delta0 must be positive, got " + std::to_string(delta0));
  }
  const auto var = estimate_variance(x, y, p);
  const auto cost = wasserstein_pp_two_sample(x, y, p);
  return make_verdict(cost.cost_p, var.sigma2_combined, x.size(), y.size(), p, alpha, delta0);
}

}  // namespace wasserinfer
