#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "wasserinfer/clt_inference.hpp"
#include "wasserinfer/distributions.hpp"
#include "wasserinfer/errors.hpp"
#include "wasserinfer/io.hpp"
#include "wasserinfer/transport.hpp"

namespace wasserinfer::fairness {

//---------------------------------------------------------------------------//
// Datasets
//---------------------------------------------------------------------------//

/// How a text column maps to {0, 1}. If `negative` is set, any value other
/// than `positive` or `negative` is a parse error; otherwise everything that
/// is not `positive` maps to 0.
struct BinaryColumn {
  std::string name;
  std::string positive;
  std::optional<std::string> negative;
};

/// Columns to read. Rows whose protected column equals `protected_group.positive`
/// form group S = 0 (the protected group); all others form S = 1.
struct DatasetSchema {
  std::vector<std::string> feature_columns;
  BinaryColumn label;
  BinaryColumn protected_group;
};

struct LabeledDataset {
  Eigen::MatrixXd features;  // rows = individuals
  std::vector<int> label;
  std::vector<int> protected_attr;  // S
  std::vector<std::string> feature_names;
  std::size_t dropped_count = 0;

  std::size_t rows() const noexcept { return label.size(); }

  std::size_t group_size(int s) const {
    return static_cast<std::size_t>(std::count(protected_attr.begin(), protected_attr.end(), s));
  }

  void validate() const {
    if (static_cast<std::size_t>(features.rows()) != label.size() ||
        label.size() != protected_attr.size()) {
      throw DomainError("dataset arrays differ in length");
    }
    if (static_cast<std::size_t>(features.cols()) != feature_names.size()) {
      throw DomainError("feature names do not match feature columns");
    }
    if (group_size(0) == 0 || group_size(1) == 0) {
      throw EmptyGroup("both protected groups must be non-empty");
    }
  }
};

namespace detail {

inline bool is_missing(std::string_view field) {
  field = io::trim(field);
  return field.empty() || field == "?" || field == "NA" || field == "nan" || field == "NaN";
}

// Strips a trailing '.' so "<=50K." matches "<=50K" (the Adult test split).
inline bool label_matches(std::string_view field, std::string_view wanted) {
  field = io::trim(field);
  if (field == wanted) return true;
  return field.size() == wanted.size() + 1 && field.back() == '.' &&
         field.substr(0, wanted.size()) == wanted;
}

inline int encode_binary(std::string_view field, const BinaryColumn& spec, std::size_t line) {
  if (label_matches(field, spec.positive)) return 1;
  if (!spec.negative || label_matches(field, *spec.negative)) return 0;
  throw ParseError("unknown value '" + std::string(io::trim(field)) + "' in column '" + spec.name +
                       "'",
                   line);
}

}  // namespace detail

inline LabeledDataset load_csv_dataset(std::istream& in, const DatasetSchema& schema) {
  const io::CsvTable table = io::read_csv(in);
  std::vector<std::size_t> feature_idx;
  for (const auto& name : schema.feature_columns) feature_idx.push_back(table.column(name));
  const std::size_t label_idx = table.column(schema.label.name);
  const std::size_t group_idx = table.column(schema.protected_group.name);

  LabeledDataset data;
  data.feature_names = schema.feature_columns;
  std::vector<double> flat;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t line = table.line_numbers[r];
    auto field = [&](std::size_t idx) -> std::string_view {
      if (idx >= row.size()) throw ParseError("row has too few fields", line);
      return row[idx];
    };
    bool missing = detail::is_missing(field(label_idx)) || detail::is_missing(field(group_idx));
    for (std::size_t idx : feature_idx) missing = missing || detail::is_missing(field(idx));
    if (missing) {
      ++data.dropped_count;
      continue;
    }
    for (std::size_t k = 0; k < feature_idx.size(); ++k) {
      const auto v = io::parse_double(field(feature_idx[k]));
      if (!v || !std::isfinite(*v)) {
        throw ParseError("column '" + schema.feature_columns[k] + "' is not numeric: '" +
                             std::string(field(feature_idx[k])) + "'",
                         line);
      }
      flat.push_back(*v);
    }
    data.label.push_back(detail::encode_binary(field(label_idx), schema.label, line));
    // protected value -> S = 0
    data.protected_attr.push_back(
        1 - detail::encode_binary(field(group_idx), schema.protected_group, line));
  }

  const auto rows = static_cast<Eigen::Index>(data.label.size());
  const auto cols = static_cast<Eigen::Index>(feature_idx.size());
  data.features.resize(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) data.features(i, j) = flat[i * cols + j];
  }
  if (data.group_size(0) == 0 || data.group_size(1) == 0) {
    throw EmptyGroup("a protected group has no complete rows");
  }
  return data;
}

inline LabeledDataset load_csv_dataset(const std::string& path, const DatasetSchema& schema) {
  auto in = io::open_input(path);
  return load_csv_dataset(in, schema);
}

//---------------------------------------------------------------------------//
// Logistic regression
//---------------------------------------------------------------------------//

struct LogitOptions {
  int max_iter = 100;
  double tol = 1e-8;
  /// L2 penalty on the slopes (not the intercept).
  double ridge = 0.0;
};

/// Logistic model on standardized features; beta[0] is the intercept.
struct LogitModel {
  Eigen::VectorXd beta;
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;
  bool converged = false;
  int iterations = 0;
  /// Penalized log-likelihood after each accepted step (first entry: start).
  std::vector<double> loglik_history;

  double linear_predictor(std::span<const double> row) const {
    double eta = beta[0];
    for (Eigen::Index j = 0; j < mean.size(); ++j) {
      eta += beta[j + 1] * (row[j] - mean[j]) / scale[j];
    }
    return eta;
  }

  /// 1 / (1 + exp(-beta . x)) with x standardized and intercept-augmented.
  double score(std::span<const double> row) const {
    return 1.0 / (1.0 + std::exp(-linear_predictor(row)));
  }
};

namespace detail {

// log(1 + exp(eta)) without overflow
inline double softplus(double eta) {
  return eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
}

inline Eigen::MatrixXd design_matrix(const LabeledDataset& data, const Eigen::VectorXd& mean,
                                     const Eigen::VectorXd& scale) {
  const Eigen::Index n = data.features.rows();
  const Eigen::Index d = data.features.cols();
  Eigen::MatrixXd X(n, d + 1);
  X.col(0).setOnes();
  for (Eigen::Index j = 0; j < d; ++j) {
    X.col(j + 1) = (data.features.col(j).array() - mean[j]) / scale[j];
  }
  return X;
}

inline double penalized_loglik(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                               const Eigen::VectorXd& beta, double ridge) {
  const Eigen::VectorXd eta = X * beta;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) ll += y[i] * eta[i] - softplus(eta[i]);
  return ll - 0.5 * ridge * beta.tail(beta.size() - 1).squaredNorm();
}

}  // namespace detail

/// Maximizes the Bernoulli log-likelihood by damped Newton steps.
///
/// A numerically singular Hessian gets a small ridge first; if it is still
/// singular, SingularMatrix is thrown. Hitting `max_iter` only clears
/// `converged`.
inline LogitModel fit_logit(const LabeledDataset& data, const LogitOptions& opts = {}) {
  const auto positives = std::count(data.label.begin(), data.label.end(), 1);
  const auto negatives = static_cast<std::ptrdiff_t>(data.label.size()) - positives;
  if (positives < 2 || negatives < 2) {
    throw DomainError("logistic fit needs at least 2 rows of each label");
  }
  const Eigen::Index n = data.features.rows();
  const Eigen::Index d = data.features.cols();

  LogitModel model;
  model.mean = data.features.colwise().mean().transpose();
  model.scale.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double var = (data.features.col(j).array() - model.mean[j]).square().mean();
    model.scale[j] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  const Eigen::MatrixXd X = detail::design_matrix(data, model.mean, model.scale);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y[i] = data.label[i];

  Eigen::VectorXd penalty = Eigen::VectorXd::Constant(d + 1, opts.ridge);
  penalty[0] = 0.0;

  model.beta = Eigen::VectorXd::Zero(d + 1);
  double ll = detail::penalized_loglik(X, y, model.beta, opts.ridge);
  model.loglik_history.push_back(ll);

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    const Eigen::VectorXd eta = X * model.beta;
    const Eigen::VectorXd prob = (1.0 + (-eta.array()).exp()).inverse().matrix();
    const Eigen::VectorXd weight = (prob.array() * (1.0 - prob.array())).matrix();
    const Eigen::VectorXd grad =
        X.transpose() * (y - prob) - (penalty.array() * model.beta.array()).matrix();
    if (grad.lpNorm<Eigen::Infinity>() < opts.tol) {
      model.converged = true;
      break;
    }
    Eigen::MatrixXd hess = X.transpose() * weight.asDiagonal() * X;
    hess.diagonal() += penalty;

    Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
    auto usable = [](const Eigen::LDLT<Eigen::MatrixXd>& f) {
      if (f.info() != Eigen::Success || !f.isPositive()) return false;
      const Eigen::VectorXd diag = f.vectorD();
      const double largest = diag.cwiseAbs().maxCoeff();
      return largest > 0.0 && diag.minCoeff() > 1e-12 * largest;
    };
    if (!usable(ldlt)) {
      const double bump = 1e-8 * std::max(1.0, hess.trace() / static_cast<double>(d + 1));
      hess.diagonal().array() += bump;
      ldlt.compute(hess);
      if (!usable(ldlt)) throw SingularMatrix("logistic Hessian is singular");
    }
    const Eigen::VectorXd step = ldlt.solve(grad);

    // Predicted gain below the resolution of the objective: take the full
    // step if it does not hurt and stop.
    if (0.5 * grad.dot(step) <= 1e-13 * std::max(1.0, std::abs(ll))) {
      const Eigen::VectorXd candidate = model.beta + step;
      const double cand_ll = detail::penalized_loglik(X, y, candidate, opts.ridge);
      if (std::isfinite(cand_ll) && cand_ll >= ll) {
        model.beta = candidate;
        ll = cand_ll;
        model.loglik_history.push_back(ll);
      }
      model.iterations = iter + 1;
      model.converged = true;
      break;
    }

    // Halve the step until the objective does not decrease.
    double t = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving, t *= 0.5) {
      const Eigen::VectorXd candidate = model.beta + t * step;
      const double cand_ll = detail::penalized_loglik(X, y, candidate, opts.ridge);
      if (std::isfinite(cand_ll) && cand_ll >= ll) {
        model.beta = candidate;
        ll = cand_ll;
        accepted = true;
        break;
      }
    }
    model.iterations = iter + 1;
    if (!accepted) {
      // no ascent direction left at machine precision
      model.converged = true;
      break;
    }
    model.loglik_history.push_back(ll);
  }
  return model;
}

/// Sorted logistic scores of groups S = 0 and S = 1.
inline std::pair<SortedSample, SortedSample> group_scores(const LogitModel& model,
                                                          const LabeledDataset& data) {
  if (model.mean.size() != data.features.cols()) {
    throw DomainError("model and dataset have different feature counts");
  }
  std::vector<double> s0;
  std::vector<double> s1;
  std::vector<double> row(static_cast<std::size_t>(data.features.cols()));
  for (Eigen::Index i = 0; i < data.features.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.features.cols(); ++j) row[j] = data.features(i, j);
    (data.protected_attr[i] == 0 ? s0 : s1).push_back(model.score(row));
  }
  if (s0.empty() || s1.empty()) throw EmptyGroup("a protected group is empty");
  return {SortedSample::from(std::move(s0)), SortedSample::from(std::move(s1))};
}

//---------------------------------------------------------------------------//
// Metrics
//---------------------------------------------------------------------------//

namespace detail {

inline void check_cutoff(double cutoff) {
  if (!(cutoff > 0.0 && cutoff < 1.0)) {
    throw DomainError("cutoff must lie in (0, 1), got " + std::to_string(cutoff));
  }
}

inline std::size_t count_above(const SortedSample& s, double cutoff) {
  const auto v = s.values();
  return static_cast<std::size_t>(v.end() - std::upper_bound(v.begin(), v.end(), cutoff));
}

// rate0 / rate1 given as integer counts over the same or different totals
inline double di_from_rates(double rate0, double rate1) {
  if (rate1 == 0.0) return rate0 > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
  return rate0 / rate1;
}

}  // namespace detail

/// P(score > cutoff | S = 0) / P(score > cutoff | S = 1). Infinity when only
/// the denominator vanishes, 1 when both do.
inline double disparate_impact(const SortedSample& s0, const SortedSample& s1, double cutoff) {
  detail::check_cutoff(cutoff);
  const double r0 = static_cast<double>(detail::count_above(s0, cutoff)) / s0.size();
  const double r1 = static_cast<double>(detail::count_above(s1, cutoff)) / s1.size();
  return detail::di_from_rates(r0, r1);
}

/// Balanced error of predicting S = 1 from {score > cutoff}:
/// (P(score > cutoff | S = 0) + P(score <= cutoff | S = 1)) / 2.
inline double balanced_error_rate(const SortedSample& s0, const SortedSample& s1,
                                  double cutoff) {
  detail::check_cutoff(cutoff);
  const double r0 = static_cast<double>(detail::count_above(s0, cutoff)) / s0.size();
  const double r1 = static_cast<double>(detail::count_above(s1, cutoff)) / s1.size();
  return 0.5 * (r0 + (1.0 - r1));
}

//---------------------------------------------------------------------------//
// Geometric repair
//---------------------------------------------------------------------------//

namespace detail {

inline void check_theta(double theta) {
  if (!(theta >= 0.0 && theta <= 1.0)) {
    throw DomainError("repair amount must lie in [0, 1], got " + std::to_string(theta));
  }
}

}  // namespace detail

/// Barycenter quantile B(t) = pi0 Q0(t) + pi1 Q1(t), pi_s = n_s / (n0 + n1).
inline double barycenter_quantile(const SortedSample& s0, const SortedSample& s1, double t) {
  const double n0 = static_cast<double>(s0.size());
  const double n1 = static_cast<double>(s1.size());
  return (n0 * empirical_quantile(s0, t) + n1 * empirical_quantile(s1, t)) / (n0 + n1);
}

/// Moves each group's quantile function a fraction `theta` of the way to the
/// barycenter, Q_s(t) -> (1 - theta) Q_s(t) + theta B(t), and samples it at
/// the group's plotting positions (i - 1/2) / n_s. Sizes are preserved.
inline std::pair<SortedSample, SortedSample> geometric_repair(const SortedSample& s0,
                                                              const SortedSample& s1,
                                                              double theta) {
  detail::check_theta(theta);
  auto repair = [&](const SortedSample& s) {
    const double n = static_cast<double>(s.size());
    std::vector<double> out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double t = (static_cast<double>(i) + 0.5) / n;
      out[i] = theta == 0.0 ? s[i] : (1.0 - theta) * s[i] + theta * barycenter_quantile(s0, s1, t);
    }
    return SortedSample::from(std::move(out));
  };
  return {repair(s0), repair(s1)};
}

/// Both groups' repaired quantile functions on the merged grid {i/n0} u {j/n1}.
/// Cell widths are kept as integers in units of 1 / (n0 n1).
class RepairedQuantiles {
 public:
  RepairedQuantiles(const SortedSample& s0, const SortedSample& s1, double theta)
      : total_(static_cast<std::uint64_t>(s0.size()) * s1.size()) {
    detail::check_theta(theta);
    const std::uint64_t n0 = s0.size();
    const std::uint64_t n1 = s1.size();
    const double w0 = static_cast<double>(n0) / static_cast<double>(n0 + n1);
    const double w1 = static_cast<double>(n1) / static_cast<double>(n0 + n1);
    std::uint64_t i = 1;
    std::uint64_t j = 1;
    std::uint64_t prev = 0;
    while (i <= n0 && j <= n1) {
      const std::uint64_t a = i * n1;
      const std::uint64_t b = j * n0;
      const std::uint64_t next = std::min(a, b);
      const double q0 = s0[i - 1];
      const double q1 = s1[j - 1];
      const double bary = w0 * q0 + w1 * q1;
      widths_.push_back(next - prev);
      group0_.push_back((1.0 - theta) * q0 + theta * bary);
      group1_.push_back((1.0 - theta) * q1 + theta * bary);
      prev = next;
      if (a == next) ++i;
      if (b == next) ++j;
    }
  }

  /// Exact W_p^p between the two repaired distributions.
  double cost_p(double p) const {
    wasserinfer::detail::CompensatedSum sum;
    for (std::size_t k = 0; k < widths_.size(); ++k) {
      sum.add(static_cast<double>(widths_[k]) *
              wasserinfer::detail::pow_abs(group0_[k] - group1_[k], p));
    }
    return sum.value() / static_cast<double>(total_);
  }

  /// Mass above `cutoff` of group s, in units of 1 / (n0 n1).
  std::uint64_t mass_above(int group, double cutoff) const {
    const auto& vals = group == 0 ? group0_ : group1_;
    std::uint64_t mass = 0;
    for (std::size_t k = 0; k < widths_.size(); ++k) {
      if (vals[k] > cutoff) mass += widths_[k];
    }
    return mass;
  }

  double disparate_impact(double cutoff) const {
    const std::uint64_t m0 = mass_above(0, cutoff);
    const std::uint64_t m1 = mass_above(1, cutoff);
    if (m1 == 0) return m0 > 0 ? std::numeric_limits<double>::infinity() : 1.0;
    return static_cast<double>(m0) / static_cast<double>(m1);
  }

  double balanced_error_rate(double cutoff) const {
    const std::uint64_t m0 = mass_above(0, cutoff);
    const std::uint64_t m1 = mass_above(1, cutoff);
    return static_cast<double>(m0 + (total_ - m1)) / (2.0 * static_cast<double>(total_));
  }

 private:
  std::uint64_t total_;
  std::vector<std::uint64_t> widths_;
  std::vector<double> group0_;
  std::vector<double> group1_;
};

struct RepairSweepRow {
  double theta = 0.0;
  double w2_squared = 0.0;  // W_p^p between repaired groups (W_2^2 for p = 2)
  double ci_low = 0.0;
  double ci_high = 0.0;
  double di = 1.0;
  double ber = 0.5;
};

/// For each theta: repair both groups, then report W_p^p between the repaired
/// distributions with its asymptotic interval, DI and BER. Distances and
/// rates come from the repaired quantile functions; the variance estimate
/// uses the repaired samples. `flip_di` swaps the DI ratio.
inline std::vector<RepairSweepRow> repair_sweep(const SortedSample& s0, const SortedSample& s1,
                                                const std::vector<double>& theta_grid, double p,
                                                double alpha, double cutoff,
                                                bool flip_di = false) {
  wasserinfer::detail::check_cost_exponent(p);
  wasserinfer::detail::check_alpha(alpha);
  detail::check_cutoff(cutoff);
  for (double theta : theta_grid) detail::check_theta(theta);
  std::vector<double> grid = theta_grid;
  std::sort(grid.begin(), grid.end());

  std::vector<RepairSweepRow> rows;
  rows.reserve(grid.size());
  for (double theta : grid) {
    const RepairedQuantiles repaired(s0, s1, theta);
    RepairSweepRow row;
    row.theta = theta;
    row.w2_squared = repaired.cost_p(p);
    double sigma2 = 0.0;
    if (s0.size() >= 2 && s1.size() >= 2) {
      const auto [r0, r1] = geometric_repair(s0, s1, theta);
      sigma2 = estimate_variance(r0, r1, p).sigma2_combined;
    }
    const auto ci = make_verdict(row.w2_squared, sigma2, s0.size(), s1.size(), p, alpha);
    row.ci_low = ci.ci_low;
    row.ci_high = ci.ci_high;
    row.di = repaired.disparate_impact(cutoff);
    if (flip_di) row.di = row.di == 0.0 ? std::numeric_limits<double>::infinity() : 1.0 / row.di;
    row.ber = repaired.balanced_error_rate(cutoff);
    rows.push_back(row);
  }
  return rows;
}

inline constexpr const char* kRepairSweepCsvHeader = "theta,w2_squared,ci_low,ci_high,di,ber";

//---------------------------------------------------------------------------//
// Audit
//---------------------------------------------------------------------------//

struct AuditReport {
  SimilarityVerdict verdict;
  double di = 1.0;
  double ber = 0.5;
  std::size_t n0 = 0;
  std::size_t n1 = 0;
};

/// Similarity test between the two groups' score distributions plus DI and BER.
inline AuditReport audit(const SortedSample& s0, const SortedSample& s1, double p, double delta0,
                         double alpha, double cutoff, bool flip_di = false) {
  AuditReport report;
  report.verdict = similarity_test(s0, s1, p, delta0, alpha);
  report.di = flip_di ? disparate_impact(s1, s0, cutoff) : disparate_impact(s0, s1, cutoff);
  report.ber = balanced_error_rate(s0, s1, cutoff);
  report.n0 = s0.size();
  report.n1 = s1.size();
  return report;
}

}  // namespace wasserinfer::fairness
