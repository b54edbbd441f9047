#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wasserinfer/errors.hpp"

namespace wasserinfer {

//---------------------------------------------------------------------------//
// Sorted samples
//---------------------------------------------------------------------------//

/// Ascending, finite, non-empty sample. Ties are kept as they are.
///
/// Indexing is 0-based: `sample[j - 1]` is the order statistic X_(j).
class SortedSample {
 public:
  /// Copies and sorts `raw`. Throws EmptySample or NonFiniteValue.
  static SortedSample from(std::span<const double> raw) {
    if (raw.empty()) throw EmptySample();
    std::vector<double> values(raw.begin(), raw.end());
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!std::isfinite(values[i])) {
        throw NonFiniteValue("sample entry " + std::to_string(i) + " is not finite");
      }
    }
    std::sort(values.begin(), values.end());
    return SortedSample(std::move(values));
  }

  static SortedSample from(std::vector<double>&& raw) {
    if (raw.empty()) throw EmptySample();
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (!std::isfinite(raw[i])) {
        throw NonFiniteValue("sample entry " + std::to_string(i) + " is not finite");
      }
    }
    std::sort(raw.begin(), raw.end());
    return SortedSample(std::move(raw));
  }

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }
  double front() const noexcept { return values_.front(); }
  double back() const noexcept { return values_.back(); }

  /// Empirical distribution function F_n(x) = #{X_i <= x} / n.
  double cdf(double x) const {
    auto count = std::upper_bound(values_.begin(), values_.end(), x) - values_.begin();
    return static_cast<double>(count) / static_cast<double>(values_.size());
  }

  friend bool operator==(const SortedSample&, const SortedSample&) = default;

 private:
  explicit SortedSample(std::vector<double> values) : values_(std::move(values)) {}
  std::vector<double> values_;
};

inline SortedSample sorted_sample_from(std::span<const double> raw) {
  return SortedSample::from(raw);
}

/// 1-based index k = ceil(t * n) of the left-continuous inverse inf{x : F_n(x) >= t}.
///
/// The rounding of `t * n` is corrected so that t == j / n (as a double) maps
/// to exactly j.
inline std::size_t empirical_quantile_index(std::size_t n, double t) {
  if (!(t > 0.0 && t <= 1.0)) {
    throw DomainError("empirical quantile requires 0 < t <= 1, got " + std::to_string(t));
  }
  const double nd = static_cast<double>(n);
  auto k = static_cast<std::size_t>(std::ceil(t * nd));
  k = std::clamp<std::size_t>(k, 1, n);
  while (k > 1 && static_cast<double>(k - 1) / nd >= t) --k;
  while (k < n && static_cast<double>(k) / nd < t) ++k;
  return k;
}

/// F_n^{-1}(t) = X_(ceil(t n)) for 0 < t <= 1.
inline double empirical_quantile(const SortedSample& s, double t) {
  return s[empirical_quantile_index(s.size(), t) - 1];
}

//---------------------------------------------------------------------------//
// Standard normal
//---------------------------------------------------------------------------//

inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0);
}

namespace detail {

// Rational approximation of the lower half of Phi^{-1} (relative error about
// 1e-9), for 0 < t <= 0.5.
inline double normal_quantile_lower_guess(double t) {
  constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                          -2.759285104469687e+02, 1.383577518672690e+02,
                          -3.066479806614716e+01, 2.506628277459239e+00};
  constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                          -1.556989798598866e+02, 6.680131188771972e+01,
                          -1.328068155288572e+01};
  constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                          -2.400758277161838e+00, -2.549732539343734e+00,
                          4.374664141464968e+00,  2.938163982698783e+00};
  constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                          2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double kLowBreak = 0.02425;

  if (t < kLowBreak) {
    const double q = std::sqrt(-2.0 * std::log(t));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = t - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

inline double normal_quantile_lower(double t) {
  double x = normal_quantile_lower_guess(t);
  // One Halley step; the lower-tail cdf keeps full relative precision.
  const double e = normal_cdf(x) - t;
  if (e != 0.0) {
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    x -= u / (1.0 + 0.5 * x * u);
  }
  return x;
}

}  // namespace detail

/// Phi^{-1}(t) for 0 < t < 1.
inline double normal_quantile(double t) {
  if (!(t > 0.0 && t < 1.0)) {
    throw DomainError("normal quantile requires 0 < t < 1, got " + std::to_string(t));
  }
  if (t <= 0.5) return detail::normal_quantile_lower(t);
  return -detail::normal_quantile_lower(1.0 - t);
}

/// N(mu, sigma^2) with sigma the standard deviation.
class GaussianDist {
 public:
  GaussianDist(double mu, double sigma) : mu_(mu), sigma_(sigma) {
    if (!std::isfinite(mu) || !std::isfinite(sigma) || !(sigma > 0.0)) {
      throw DomainError("gaussian requires finite mu and sigma > 0");
    }
  }

  double mu() const noexcept { return mu_; }
  double sigma() const noexcept { return sigma_; }
  double quantile(double t) const { return mu_ + sigma_ * normal_quantile(t); }
  double cdf(double x) const { return normal_cdf((x - mu_) / sigma_); }

 private:
  double mu_;
  double sigma_;
};

//---------------------------------------------------------------------------//
// Quantile functions
//---------------------------------------------------------------------------//

enum class QuantileKind { empirical, gaussian, custom };

/// Type-erased non-decreasing quantile map t in (0,1) -> R, with its
/// distribution function.
class QuantileFunction {
 public:
  using Map = std::function<double(double)>;

  static QuantileFunction empirical(SortedSample sample) {
    auto shared = std::make_shared<const SortedSample>(std::move(sample));
    QuantileFunction q(QuantileKind::empirical,
                       [shared](double t) { return empirical_quantile(*shared, t); },
                       [shared](double x) { return shared->cdf(x); });
    q.sample_ = std::move(shared);
    return q;
  }

  static QuantileFunction gaussian(GaussianDist dist) {
    return QuantileFunction(QuantileKind::gaussian,
                            [dist](double t) { return dist.quantile(t); },
                            [dist](double x) { return dist.cdf(x); });
  }

  /// `cdf` may be empty; it is then obtained by bisection on `quantile`.
  static QuantileFunction custom(Map quantile, Map cdf = {}) {
    return QuantileFunction(QuantileKind::custom, std::move(quantile), std::move(cdf));
  }

  QuantileKind kind() const noexcept { return kind_; }
  double operator()(double t) const { return quantile_(t); }

  /// F(x) = sup{t : Q(t) <= x}.
  double cdf(double x) const {
    if (cdf_) return cdf_(x);
    double lo = 0.0;
    double hi = 1.0;
    for (int it = 0; it < 200 && hi - lo > 1e-17; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (quantile_(mid) <= x) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return lo;
  }

  /// The underlying sample for the empirical kind, otherwise null.
  const SortedSample* sample() const noexcept { return sample_.get(); }

 private:
  QuantileFunction(QuantileKind kind, Map quantile, Map cdf)
      : kind_(kind), quantile_(std::move(quantile)), cdf_(std::move(cdf)) {}

  QuantileKind kind_;
  Map quantile_;
  Map cdf_;
  std::shared_ptr<const SortedSample> sample_;
};

}  // namespace wasserinfer
