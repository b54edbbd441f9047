#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "wasserinfer/quadrature.hpp"
#include "wasserinfer/rng.hpp"
#include "wasserinfer/transport.hpp"

namespace wi = wasserinfer;

namespace {

wi::SortedSample sample(std::vector<double> v) { return wi::SortedSample::from(std::move(v)); }

// Midpoint evaluation on the lcm(n, m) grid: both empirical quantiles are
// constant on each cell, so this is exact.
double lcm_grid_cost(const wi::SortedSample& x, const wi::SortedSample& y, double p) {
  const std::size_t L = std::lcm(x.size(), y.size());
  double sum = 0.0;
  for (std::size_t k = 1; k <= L; ++k) {
    const double t = (static_cast<double>(k) - 0.5) / static_cast<double>(L);
    sum += std::pow(std::abs(wi::empirical_quantile(x, t) - wi::empirical_quantile(y, t)), p);
  }
  return sum / static_cast<double>(L);
}

}  // namespace

TEST(GaussLegendre, ExactForPolynomials) {
  for (int order : {2, 5, 16, 33}) {
    const wi::GaussLegendre rule(order);
    double wsum = 0.0;
    for (double w : rule.weights()) wsum += w;
    EXPECT_NEAR(wsum, 2.0, 1e-14);
    const int deg = 2 * order - 1;
    // integral of x^deg + x^(deg-1) over [0, 1]
    const double exact = 1.0 / (deg + 1) + 1.0 / deg;
    const double got =
        rule.integrate([&](double x) { return std::pow(x, deg) + std::pow(x, deg - 1); }, 0.0, 1.0);
    EXPECT_NEAR(got, exact, 1e-13) << order;
  }
  EXPECT_THROW(wi::GaussLegendre(0), wi::DomainError);
}

TEST(TwoSample, HandEvaluatedExamples) {
  EXPECT_DOUBLE_EQ(wi::wasserstein_pp_two_sample(sample({0, 1}), sample({0.5, 1.5}), 2).cost_p,
                   0.25);
  EXPECT_NEAR(wi::wasserstein_pp_two_sample(sample({0, 1}), sample({0, 1, 2}), 1).cost_p, 0.5,
              1e-15);
  const auto x = sample({-1.5, 0.25, 3.0, 3.0});
  for (double p : {1.0, 1.5, 2.0, 3.0}) {
    EXPECT_EQ(wi::wasserstein_pp_two_sample(x, x, p).cost_p, 0.0);
  }
}

TEST(TwoSample, ResultMetadata) {
  const auto r = wi::wasserstein_pp_two_sample(sample({0, 1}), sample({0, 1, 2}), 1);
  EXPECT_EQ(r.n, 2u);
  EXPECT_EQ(r.m, 3u);
  EXPECT_EQ(r.method, wi::TransportMethod::exact_two_sample);
  EXPECT_TRUE(r.outside_theory);
  EXPECT_FALSE(wi::wasserstein_pp_two_sample(sample({0}), sample({1}), 2).outside_theory);
  EXPECT_THROW(wi::wasserstein_pp_two_sample(sample({0}), sample({1}), 0.5), wi::DomainError);
}

TEST(TwoSample, CollidingBreakpointsMatchLcmGrid) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 300; ++trial) {
    const auto n = wi::testing::uniform_size(rng, 1, 24);
    const auto m = wi::testing::uniform_size(rng, 1, 24);
    const auto x = wi::SortedSample::from(wi::testing::normal_draws(rng, n));
    const auto y = wi::SortedSample::from(wi::testing::normal_draws(rng, m, 0.3, 1.7));
    for (double p : {1.0, 2.0, 2.5}) {
      const double exact = wi::wasserstein_pp_two_sample(x, y, p).cost_p;
      ASSERT_NEAR(exact, lcm_grid_cost(x, y, p), 1e-12 * std::max(1.0, exact))
          << "n=" << n << " m=" << m << " p=" << p;
    }
  }
}

TEST(TwoSample, MatchesBruteForcePermutations) {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = wi::testing::uniform_size(rng, 1, 6);
    const auto xr = wi::testing::normal_draws(rng, n);
    const auto yr = wi::testing::normal_draws(rng, n, 0.5, 2.0);
    for (double p : {1.0, 2.0, 3.0}) {
      const double exact =
          wi::wasserstein_pp_two_sample(wi::SortedSample::from(xr), wi::SortedSample::from(yr), p)
              .cost_p;
      ASSERT_NEAR(exact, wi::testing::brute_force_matching_cost(xr, yr, p), 1e-12);
    }
  }
}

TEST(TwoSample, SymmetryScalingTranslation) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = wi::testing::uniform_size(rng, 1, 80);
    const auto m = wi::testing::uniform_size(rng, 1, 80);
    auto xr = wi::testing::normal_draws(rng, n);
    auto yr = wi::testing::normal_draws(rng, m, 1.0, 0.5);
    const double p = trial % 2 ? 2.0 : 1.7;
    const auto x = wi::SortedSample::from(xr);
    const auto y = wi::SortedSample::from(yr);
    const double base = wi::wasserstein_pp_two_sample(x, y, p).cost_p;
    ASSERT_NEAR(base, wi::wasserstein_pp_two_sample(y, x, p).cost_p, 1e-12);

    const double c = 0.5 + static_cast<double>(trial % 7);
    std::vector<double> xs = xr;
    std::vector<double> ys = yr;
    for (auto& v : xs) v *= c;
    for (auto& v : ys) v *= c;
    const double scaled =
        wi::wasserstein_pp_two_sample(wi::SortedSample::from(xs), wi::SortedSample::from(ys), p)
            .cost_p;
    ASSERT_NEAR(scaled, std::pow(c, p) * base, 1e-10 * std::max(1.0, scaled));

    for (auto& v : xr) v += 3.75;
    for (auto& v : yr) v += 3.75;
    const double shifted =
        wi::wasserstein_pp_two_sample(wi::SortedSample::from(xr), wi::SortedSample::from(yr), p)
            .cost_p;
    ASSERT_NEAR(shifted, base, 1e-10 * std::max(1.0, base));
  }
}

TEST(OneSample, ConstantTarget) {
  const auto zero = wi::QuantileFunction::custom([](double) { return 0.0; },
                                                 [](double x) { return x >= 0.0 ? 1.0 : 0.0; });
  EXPECT_EQ(wi::wasserstein_pp_one_sample(sample({0.0}), zero, 2.0, 16).cost_p, 0.0);
}

TEST(OneSample, SinglePointAgainstStandardNormal) {
  const auto g = wi::QuantileFunction::gaussian(wi::GaussianDist(0, 1));
  // E|mu - Z|^p, mpmath at 40 digits
  struct Ref {
    double mu;
    double p;
    double value;
  };
  const Ref refs[] = {
      {0.0, 2.0, 1.0},
      {0.5, 2.0, 1.25},
      {2.0, 2.0, 5.0},
      {0.0, 3.0, 1.595769121605730711759784239737527473903},
      {0.5, 3.0, 2.206546969579890236808601971661427093618},
      {2.0, 3.0, 14.01088790360923882179885656426562673167},
      {0.0, 1.5, 0.8600399873245195353762036244665579810551},
      {0.5, 1.5, 1.019652023929501861593455540664012184037},
      {2.0, 1.5, 3.117941063311186020841751664118714299061},
  };
  for (const auto& r : refs) {
    const auto res = wi::wasserstein_pp_one_sample(sample({r.mu}), g, r.p, 16);
    EXPECT_NEAR(res.cost_p, r.value, 1e-8 * r.value) << "mu=" << r.mu << " p=" << r.p;
    EXPECT_EQ(res.method, wi::TransportMethod::quadrature_one_sample);
    EXPECT_EQ(res.m, 0u);
  }
}

TEST(OneSample, ConsistentForLargeSample) {
  wi::CounterStream stream(wi::derive_key({2024, 1}));
  std::vector<double> v(10000);
  for (auto& x : v) x = wi::normal_quantile(stream.uniform());
  const auto x = wi::SortedSample::from(std::move(v));
  const auto g = wi::QuantileFunction::gaussian(wi::GaussianDist(0, 1));
  EXPECT_LT(wi::wasserstein_pp_one_sample(x, g, 2.0, 16).cost_p, 0.01);
}

TEST(OneSample, QuadratureOrderRefinement) {
  std::mt19937_64 rng(24);
  const auto g = wi::QuantileFunction::gaussian(wi::GaussianDist(0.3, 1.4));
  for (std::size_t n : {1u, 3u, 50u}) {
    const auto x = wi::SortedSample::from(wi::testing::normal_draws(rng, n));
    for (double p : {1.0, 1.5, 2.0, 3.0}) {
      const double q16 = wi::wasserstein_pp_one_sample(x, g, p, 16).cost_p;
      const double q32 = wi::wasserstein_pp_one_sample(x, g, p, 32).cost_p;
      EXPECT_LT(std::abs(q16 - q32), 1e-8 * q32) << "n=" << n << " p=" << p;
    }
  }
}

TEST(OneSample, EmpiricalTargetIsExact) {
  const auto x = sample({0, 1});
  const auto y = wi::QuantileFunction::empirical(sample({0, 1, 2}));
  const auto r = wi::wasserstein_pp_one_sample(x, y, 1.0, 16);
  EXPECT_EQ(r.method, wi::TransportMethod::exact_two_sample);
  EXPECT_NEAR(r.cost_p, 0.5, 1e-15);
}

TEST(OneSample, Errors) {
  const auto g = wi::QuantileFunction::gaussian(wi::GaussianDist(0, 1));
  EXPECT_THROW(wi::wasserstein_pp_one_sample(sample({0}), g, 0.9, 16), wi::DomainError);
  EXPECT_THROW(wi::wasserstein_pp_one_sample(sample({0}), g, 2.0, 1), wi::DomainError);
  const auto bad = wi::QuantileFunction::custom([](double t) { return t < 0.5 ? NAN : 1.0; },
                                                [](double) { return 0.5; });
  EXPECT_THROW(wi::wasserstein_pp_one_sample(sample({0, 1}), bad, 2.0, 16), wi::NumericalError);
}

TEST(GaussianCost, ClosedFormsAndQuadrature) {
  const wi::GaussianDist std_normal(0, 1);
  EXPECT_EQ(wi::gaussian_wasserstein_pp(std_normal, wi::GaussianDist(1, 1), 3), 1.0);
  EXPECT_EQ(wi::gaussian_wasserstein_pp(std_normal, wi::GaussianDist(1, 2), 2), 2.0);
  EXPECT_EQ(wi::gaussian_wasserstein_pp(std_normal, std_normal, 1.3), 0.0);

  // E|1 + Z|^p, mpmath
  const wi::GaussianDist alt(1, 2);
  EXPECT_NEAR(wi::gaussian_wasserstein_pp(std_normal, alt, 1.0),
              1.166630941175372596766125477135197154613, 1e-12);
  EXPECT_NEAR(wi::gaussian_wasserstein_pp(std_normal, alt, 1.5),
              1.480265647864927494176225921185764030092, 1e-12);
  EXPECT_NEAR(wi::gaussian_wasserstein_pp(std_normal, alt, 3.0),
              4.182582315663203687468841522669667308795, 1e-11);
  EXPECT_THROW(wi::gaussian_wasserstein_pp(std_normal, alt, 0.5), wi::DomainError);
}

TEST(GaussianCost, AgreesWithQuantileSpaceQuadrature) {
  // independent route: graded Gauss-Legendre over t of |a + b Phi^{-1}(t)|^p
  const wi::GaussLegendre rule(20);
  for (double p : {1.0, 2.0, 2.5, 3.0}) {
    const wi::GaussianDist f(0.2, 1.0);
    const wi::GaussianDist g(1.0, 2.0);
    auto integrand = [&](double t) {
      return std::pow(std::abs(f.quantile(t) - g.quantile(t)), p);
    };
    const double kink = wi::normal_cdf(0.8);  // where the quantiles cross: z = -0.8
    using E = wi::Endpoint;
    const double tq = rule.integrate_graded(integrand, 0.0, 1.0 - kink, E::unbounded, E::kink) +
                      rule.integrate_graded(integrand, 1.0 - kink, 1.0, E::kink, E::unbounded);
    EXPECT_NEAR(wi::gaussian_wasserstein_pp(f, g, p), tq, 1e-8 * tq) << p;
  }
}
