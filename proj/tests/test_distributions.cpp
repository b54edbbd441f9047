#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "wasserinfer/distributions.hpp"

namespace wi = wasserinfer;

TEST(SortedSample, SortsAndKeepsTies) {
  const std::vector<double> raw = {3.0, 1.0, 2.0};
  const auto s = wi::sorted_sample_from(raw);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0], 1.0);
  EXPECT_EQ(s[1], 2.0);
  EXPECT_EQ(s[2], 3.0);

  const std::vector<double> ties = {1.0, 1.0, 0.0};
  const auto t = wi::sorted_sample_from(ties);
  EXPECT_EQ(std::vector<double>(t.values().begin(), t.values().end()),
            (std::vector<double>{0.0, 1.0, 1.0}));

  const std::vector<double> single = {5.0};
  EXPECT_EQ(wi::sorted_sample_from(single).size(), 1u);
}

TEST(SortedSample, RejectsEmptyAndNonFinite) {
  EXPECT_THROW(wi::sorted_sample_from(std::vector<double>{}), wi::EmptySample);
  EXPECT_THROW(wi::sorted_sample_from(std::vector<double>{1.0, NAN}), wi::NonFiniteValue);
  EXPECT_THROW(wi::sorted_sample_from(std::vector<double>{INFINITY}), wi::NonFiniteValue);
}

TEST(EmpiricalQuantile, LeftContinuousInverse) {
  const auto s = wi::sorted_sample_from(std::vector<double>{10, 20});
  EXPECT_EQ(wi::empirical_quantile(s, 0.5), 10.0);
  EXPECT_EQ(wi::empirical_quantile(s, std::nextafter(0.5, 1.0)), 20.0);
  const auto r = wi::sorted_sample_from(std::vector<double>{0, 1, 2});
  EXPECT_EQ(wi::empirical_quantile(r, 1.0), 2.0);
  EXPECT_EQ(wi::empirical_quantile(r, 1e-300), 0.0);
}

TEST(EmpiricalQuantile, DomainErrors) {
  const auto s = wi::sorted_sample_from(std::vector<double>{1, 2});
  EXPECT_THROW(wi::empirical_quantile(s, 0.0), wi::DomainError);
  EXPECT_THROW(wi::empirical_quantile(s, -0.1), wi::DomainError);
  EXPECT_THROW(wi::empirical_quantile(s, 1.0000001), wi::DomainError);
  EXPECT_THROW(wi::empirical_quantile(s, NAN), wi::DomainError);
}

TEST(EmpiricalQuantile, GridPointsHitOrderStatistics) {
  std::mt19937_64 rng(11);
  for (std::size_t n : {1u, 2u, 3u, 7u, 10u, 49u, 100u, 997u, 1000u}) {
    const auto s = wi::sorted_sample_from(wi::testing::normal_draws(rng, n));
    for (std::size_t j = 1; j <= n; ++j) {
      const double t = static_cast<double>(j) / static_cast<double>(n);
      ASSERT_EQ(wi::empirical_quantile(s, t), s[j - 1]) << "n=" << n << " j=" << j;
    }
  }
}

TEST(EmpiricalQuantile, MonotoneProperty) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = wi::testing::uniform_size(rng, 1, 60);
    const auto s = wi::sorted_sample_from(wi::testing::normal_draws(rng, n));
    std::vector<double> grid(50);
    for (auto& t : grid) t = std::max(unit(rng), 1e-12);
    std::sort(grid.begin(), grid.end());
    for (std::size_t k = 1; k < grid.size(); ++k) {
      ASSERT_LE(wi::empirical_quantile(s, grid[k - 1]), wi::empirical_quantile(s, grid[k]));
    }
  }
}

TEST(NormalCdf, ReferenceValues) {
  EXPECT_EQ(wi::normal_cdf(0.0), 0.5);
  // mpmath, 40 digits: 0.84134474606854294858...
  EXPECT_NEAR(wi::normal_cdf(1.0), 0.8413447460685429, 1e-15);
  EXPECT_NEAR(wi::normal_cdf(-1.0), 1.0 - wi::normal_cdf(1.0), 1e-15);
}

TEST(NormalQuantile, ReferenceValues) {
  EXPECT_EQ(wi::normal_quantile(0.5), 0.0);
  // mpmath sqrt(2) erfinv(2t - 1) at 40 digits
  struct Ref {
    double t;
    double x;
  };
  const Ref refs[] = {
      {0.975, 1.959963984540054235524594430520551527956},
      {0.95, 1.644853626951472714863848907991632136083},
      {0.001, -3.090232306167813541540399830107379205492},
      {0.999, 3.09023230616781354154039983010737920549},
      {1e-10, -6.361340902404056204695375828265217557721},
      {1e-300, -37.04709629936119923722296250786043684435},
      {0.02425, -1.972961051311884850269798859475845657886},
      {0.3, -0.5244005127080407840382893250251225543254},
      {1.0 - 0x1p-53, 8.209536151601386855630768778665984941755},
  };
  for (const auto& r : refs) {
    EXPECT_NEAR(wi::normal_quantile(r.t), r.x, 1e-9) << "t=" << r.t;
  }
}

TEST(NormalQuantile, DomainErrors) {
  EXPECT_THROW(wi::normal_quantile(0.0), wi::DomainError);
  EXPECT_THROW(wi::normal_quantile(1.0), wi::DomainError);
  EXPECT_THROW(wi::normal_quantile(NAN), wi::DomainError);
}

TEST(NormalQuantile, RoundTripOnDenseGrid) {
  for (int k = 1; k < 1000; ++k) {
    const double t = k / 1000.0;
    ASSERT_LT(std::abs(wi::normal_cdf(wi::normal_quantile(t)) - t), 1e-9) << t;
  }
  for (double t = 0.001; t < 0.999; t += 0.000731) {
    ASSERT_LT(std::abs(wi::normal_cdf(wi::normal_quantile(t)) - t), 1e-9) << t;
  }
}

TEST(NormalQuantile, SymmetricAndMonotone) {
  double prev = -INFINITY;
  for (int k = 1; k < 2000; ++k) {
    const double t = k / 2000.0;
    const double x = wi::normal_quantile(t);
    ASSERT_GT(x, prev);
    prev = x;
    ASSERT_NEAR(x, -wi::normal_quantile(1.0 - t), 1e-12);
  }
}

TEST(GaussianDist, MedianIsLocation) {
  const wi::GaussianDist g(3.25, 7.0);
  EXPECT_EQ(g.quantile(0.5), 3.25);
  EXPECT_NEAR(g.quantile(0.975), 3.25 + 7.0 * 1.959963984540054, 1e-12);
  EXPECT_THROW(wi::GaussianDist(0.0, 0.0), wi::DomainError);
  EXPECT_THROW(wi::GaussianDist(0.0, -1.0), wi::DomainError);
}

TEST(QuantileFunction, KindsAndCdf) {
  const auto s = wi::sorted_sample_from(std::vector<double>{1, 2, 3, 4});
  const auto emp = wi::QuantileFunction::empirical(s);
  EXPECT_EQ(emp.kind(), wi::QuantileKind::empirical);
  ASSERT_NE(emp.sample(), nullptr);
  EXPECT_EQ(emp(0.5), 2.0);
  EXPECT_EQ(emp.cdf(2.5), 0.5);

  const auto gauss = wi::QuantileFunction::gaussian(wi::GaussianDist(0, 1));
  EXPECT_EQ(gauss.kind(), wi::QuantileKind::gaussian);
  EXPECT_EQ(gauss.sample(), nullptr);
  EXPECT_NEAR(gauss.cdf(1.0), 0.8413447460685429, 1e-15);

  // custom without a cdf falls back to bisection
  const auto custom = wi::QuantileFunction::custom([](double t) { return 2.0 * t; });
  EXPECT_EQ(custom.kind(), wi::QuantileKind::custom);
  EXPECT_NEAR(custom.cdf(0.5), 0.25, 1e-12);
}
