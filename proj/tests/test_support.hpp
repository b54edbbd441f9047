#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "wasserinfer/distributions.hpp"

namespace wasserinfer::testing {

/// Raw (unsorted) normal draws from a std engine; test-only generator,
/// independent of the library's counter streams.
inline std::vector<double> normal_draws(std::mt19937_64& rng, std::size_t n, double mu = 0.0,
                                        double sigma = 1.0) {
  std::normal_distribution<double> dist(mu, sigma);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

inline std::size_t uniform_size(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

/// min over all permutations sigma of (1/n) sum |x_i - y_sigma(i)|^p.
inline double brute_force_matching_cost(const std::vector<double>& x, std::vector<double> y,
                                        double p) {
  std::vector<std::size_t> perm(y.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) cost += std::pow(std::abs(x[i] - y[perm[i]]), p);
    best = std::min(best, cost / static_cast<double>(x.size()));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace wasserinfer::testing
