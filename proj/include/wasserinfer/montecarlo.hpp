#pragma once

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "wasserinfer/clt_inference.hpp"
#include "wasserinfer/distributions.hpp"
#include "wasserinfer/errors.hpp"
#include "wasserinfer/rng.hpp"
#include "wasserinfer/transport.hpp"

namespace wasserinfer {

/// F = N(0,1), G = N(mu, 1).
struct LocationModel {
  double mu = 1.0;
};

/// F = N(0,1), G = N(mu, lambda^2); lambda is a standard deviation.
struct ScaleLocationModel {
  double mu = 1.0;
  double lambda = 2.0;
};

using SimulationModel = std::variant<LocationModel, ScaleLocationModel>;

inline GaussianDist target_distribution(const SimulationModel& model) {
  return std::visit(
      [](const auto& mdl) {
        using T = std::decay_t<decltype(mdl)>;
        if constexpr (std::is_same_v<T, LocationModel>) {
          return GaussianDist(mdl.mu, 1.0);
        } else {
          return GaussianDist(mdl.mu, mdl.lambda);
        }
      },
      model);
}

struct ExperimentConfig {
  SimulationModel model = LocationModel{};
  double p = 2.0;
  std::size_t n = 100;
  std::size_t m = 100;
  double delta0 = 1.0;
  double alpha = 0.05;
  std::size_t replications = 1000;
  std::uint64_t seed = 0;

  void validate() const {
    if (replications < 1) throw DomainError("replications must be >= 1");
    if (n < 2 || m < 2) throw SampleTooSmall("experiments need n, m >= 2");
    detail::check_cost_exponent(p);
    detail::check_alpha(alpha);
    if (!(delta0 > 0.0)) throw DomainError("delta0 must be positive");
  }
};

struct ExperimentRow {
  ExperimentConfig config;
  std::size_t rejections = 0;
  double rejection_rate = 0.0;  // rejections / replications
  double mean_sigma2 = 0.0;     // average combined variance estimate
  double mean_statistic = 0.0;  // average W_p^p(F_n, G_m)
  double std_error = 0.0;       // binomial standard error of rejection_rate
};

/// Sorted mu + sigma Phi^{-1}(U_i) for n uniforms drawn from `stream`.
template <UniformSource S>
SortedSample draw_sample(const GaussianDist& dist, std::size_t n, S& stream) {
  std::vector<double> v(n);
  for (auto& x : v) x = dist.quantile(stream.uniform());
  return SortedSample::from(std::move(v));
}

/// Worker count: WASSER_INFER_THREADS if set and positive, else the hardware
/// concurrency.
inline unsigned default_thread_count() {
  if (const char* env = std::getenv("WASSER_INFER_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(i) for i in [0, count) on up to `threads` workers. The first
/// exception thrown by any body is rethrown after all workers join.
template <class Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = count;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

namespace detail {

inline std::uint64_t model_key(const SimulationModel& model) {
  return std::visit(
      [](const auto& mdl) {
        using T = std::decay_t<decltype(mdl)>;
        if constexpr (std::is_same_v<T, LocationModel>) {
          return derive_key({1, std::bit_cast<std::uint64_t>(mdl.mu)});
        } else {
          return derive_key({2, std::bit_cast<std::uint64_t>(mdl.mu),
                             std::bit_cast<std::uint64_t>(mdl.lambda)});
        }
      },
      model);
}

}  // namespace detail

/// Key of the cell's random streams. It depends on the seed, the model and
/// (p, n, m) only, so a cell gets the same draws whichever grid it is run in.
inline std::uint64_t cell_key(const ExperimentConfig& cfg) {
  return derive_key({cfg.seed, detail::model_key(cfg.model), std::bit_cast<std::uint64_t>(cfg.p),
                     cfg.n, cfg.m});
}

/// Stream for replication `rep`; `which` is 0 for the X sample, 1 for Y.
inline CounterStream replication_stream(std::uint64_t cell, std::uint64_t rep, std::uint64_t which) {
  return CounterStream(derive_key({cell, rep, which}));
}

/// Per-replication outcome, kept so reductions run in replication order.
struct ReplicationOutcome {
  double statistic = 0.0;
  double sigma2 = 0.0;
  bool reject = false;
};

inline ReplicationOutcome run_replication(const ExperimentConfig& cfg, std::uint64_t cell,
                                          std::uint64_t rep) {
  const GaussianDist reference(0.0, 1.0);
  const GaussianDist target = target_distribution(cfg.model);
  auto sx = replication_stream(cell, rep, 0);
  auto sy = replication_stream(cell, rep, 1);
  const SortedSample x = draw_sample(reference, cfg.n, sx);
  const SortedSample y = draw_sample(target, cfg.m, sy);
  const auto var = estimate_variance(x, y, cfg.p);
  const auto cost = wasserstein_pp_two_sample(x, y, cfg.p);
  const auto verdict =
      make_verdict(cost.cost_p, var.sigma2_combined, cfg.n, cfg.m, cfg.p, cfg.alpha, cfg.delta0);
  return {cost.cost_p, var.sigma2_combined, *verdict.reject_null};
}

/// Runs all replications of one cell. Output does not depend on `threads`.
inline ExperimentRow run_experiment(const ExperimentConfig& cfg, unsigned threads = 0) {
  cfg.validate();
  if (threads == 0) threads = default_thread_count();
  const std::uint64_t cell = cell_key(cfg);
  std::vector<ReplicationOutcome> outcomes(cfg.replications);
  parallel_for(cfg.replications, threads,
               [&](std::size_t r) { outcomes[r] = run_replication(cfg, cell, r); });

  ExperimentRow row;
  row.config = cfg;
  double sum_stat = 0.0;
  double sum_sigma2 = 0.0;
  for (const auto& o : outcomes) {
    row.rejections += o.reject ? 1 : 0;
    sum_stat += o.statistic;
    sum_sigma2 += o.sigma2;
  }
  const double reps = static_cast<double>(cfg.replications);
  row.rejection_rate = static_cast<double>(row.rejections) / reps;
  row.mean_statistic = sum_stat / reps;
  row.mean_sigma2 = sum_sigma2 / reps;
  row.std_error = std::sqrt(row.rejection_rate * (1.0 - row.rejection_rate) / reps);
  return row;
}

//---------------------------------------------------------------------------//
// Table grids
//---------------------------------------------------------------------------//

inline const std::vector<std::size_t>& table1_sizes() {
  static const std::vector<std::size_t> sizes = {50,   100,   200,   400,   500,   800,  1000,
                                                 2000, 5000, 10000, 20000, 50000, 100000};
  return sizes;
}

inline const std::vector<std::size_t>& table23_sizes() {
  static const std::vector<std::size_t> sizes = {50, 100, 200, 400, 500, 800, 1000, 2000};
  return sizes;
}

/// Variance consistency: mean combined variance estimate per (p, n), n == m,
/// location model.
inline std::vector<ExperimentRow> run_table1(const std::vector<double>& p_list,
                                             const std::vector<std::size_t>& n_list, double mu,
                                             std::size_t replications, std::uint64_t seed,
                                             unsigned threads = 0) {
  std::vector<ExperimentRow> rows;
  for (double p : p_list) {
    for (std::size_t n : n_list) {
      ExperimentConfig cfg;
      cfg.model = LocationModel{mu};
      cfg.p = p;
      cfg.n = cfg.m = n;
      cfg.delta0 = mu != 0.0 ? std::abs(mu) : 1.0;
      cfg.replications = replications;
      cfg.seed = seed;
      rows.push_back(run_experiment(cfg, threads));
    }
  }
  return rows;
}

/// Rejection frequencies in the location model.
inline std::vector<ExperimentRow> run_table2(const std::vector<double>& p_list,
                                             const std::vector<std::size_t>& n_list,
                                             const std::vector<double>& mu_list, double delta0,
                                             double alpha, std::size_t replications,
                                             std::uint64_t seed, unsigned threads = 0) {
  std::vector<ExperimentRow> rows;
  for (double p : p_list) {
    for (std::size_t n : n_list) {
      for (double mu : mu_list) {
        ExperimentConfig cfg;
        cfg.model = LocationModel{mu};
        cfg.p = p;
        cfg.n = cfg.m = n;
        cfg.delta0 = delta0;
        cfg.alpha = alpha;
        cfg.replications = replications;
        cfg.seed = seed;
        rows.push_back(run_experiment(cfg, threads));
      }
    }
  }
  return rows;
}

/// Delta0 for the scale-location table: W_p(N(0,1), N(1, 2^2)).
inline double table3_delta0(double p) {
  return std::pow(gaussian_wasserstein_pp(GaussianDist(0.0, 1.0), GaussianDist(1.0, 2.0), p),
                  1.0 / p);
}

/// Rejection frequencies in the scale-location model; Delta0 per p is the
/// distance of the null pair (mu, lambda) = (1, 2).
inline std::vector<ExperimentRow> run_table3(const std::vector<double>& p_list,
                                             const std::vector<std::size_t>& n_list,
                                             const std::vector<ScaleLocationModel>& params,
                                             double alpha, std::size_t replications,
                                             std::uint64_t seed, unsigned threads = 0) {
  std::vector<ExperimentRow> rows;
  for (double p : p_list) {
    const double delta0 = table3_delta0(p);
    for (std::size_t n : n_list) {
      for (const auto& param : params) {
        ExperimentConfig cfg;
        cfg.model = param;
        cfg.p = p;
        cfg.n = cfg.m = n;
        cfg.delta0 = delta0;
        cfg.alpha = alpha;
        cfg.replications = replications;
        cfg.seed = seed;
        rows.push_back(run_experiment(cfg, threads));
      }
    }
  }
  return rows;
}

//---------------------------------------------------------------------------//
// Output
//---------------------------------------------------------------------------//

inline constexpr const char* kExperimentCsvHeader =
    "model,mu,lambda,p,n,m,delta0,alpha,replications,seed,rejections,rejection_rate,"
    "mean_sigma2,mean_statistic,stderr";

/// Writes rows as CSV. `comments` become leading "# ..." lines.
inline void write_experiment_csv(std::ostream& out, const std::vector<ExperimentRow>& rows,
                                 const std::vector<std::string>& comments = {}) {
  for (const auto& c : comments) out << "# " << c << '\n';
  out << kExperimentCsvHeader << '\n';
  const auto old_precision = out.precision(17);
  for (const auto& row : rows) {
    const auto& c = row.config;
    const bool loc = std::holds_alternative<LocationModel>(c.model);
    const double mu = loc ? std::get<LocationModel>(c.model).mu
                          : std::get<ScaleLocationModel>(c.model).mu;
    const double lambda = loc ? 1.0 : std::get<ScaleLocationModel>(c.model).lambda;
    out << (loc ? "location" : "scale_location") << ',' << mu << ',' << lambda << ',' << c.p
        << ',' << c.n << ',' << c.m << ',' << c.delta0 << ',' << c.alpha << ','
        << c.replications << ',' << c.seed << ',' << row.rejections << ',' << row.rejection_rate
        << ',' << row.mean_sigma2 << ',' << row.mean_statistic << ',' << row.std_error << '\n';
  }
  out.precision(old_precision);
}

}  // namespace wasserinfer
