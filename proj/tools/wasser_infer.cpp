// wasser-infer: command-line front end for Wasserstein-based inference.
//
// Subcommands: dist, ci, test, simulate, audit, repair-sweep. Results go to
// stdout (JSON for single results, CSV for tables); diagnostics go to stderr.
// Exit codes: 0 success, 2 usage or input error, 3 numerical failure.

#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "wasserinfer/wasserinfer.hpp"

namespace wi = wasserinfer;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json to_json(const wi::TransportResult& r) {
  return json{{"cost_p", r.cost_p},
              {"p", r.p},
              {"n", r.n},
              {"m", r.m},
              {"method", std::string(wi::to_string(r.method))},
              {"outside_theory", r.outside_theory}};
}

json to_json(const wi::SimilarityVerdict& v) {
  json j{{"statistic", v.statistic},     {"ci_low", v.ci_low},
         {"ci_high", v.ci_high},         {"ci_low_clipped", v.ci_low_clipped},
         {"halfwidth", v.halfwidth},     {"sigma2", v.sigma2},
         {"alpha", v.alpha},             {"p", v.p},
         {"n", v.n},                     {"m", v.m},
         {"outside_theory", v.outside_theory}};
  if (v.delta0) {
    j["delta0"] = *v.delta0;
    j["threshold"] = *v.threshold;
    j["reject_null"] = *v.reject_null;
  }
  return j;
}

wi::SortedSample load_sample(const std::string& path, const std::string& column) {
  return wi::SortedSample::from(wi::io::read_sample_file(path, column));
}

void write_output(const std::string& path, const std::string& payload) {
  if (path.empty() || path == "-") {
    std::cout << payload;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw wi::IoError("cannot write '" + path + "'");
  out << payload;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto t = wi::io::trim(item);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

//---------------------------------------------------------------------------//
// Dataset schema: key=value config file, individual flags override it.
//---------------------------------------------------------------------------//

struct SchemaFlags {
  std::string config_path;
  std::string features;
  std::string label;
  std::string label_positive;
  std::string label_negative;
  std::string protected_column;
  std::string protected_value;
  std::string protected_other;
};

std::map<std::string, std::string> read_key_values(const std::string& path) {
  auto in = wi::io::open_input(path);
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = wi::io::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) throw wi::ParseError("expected key=value", line_no);
    kv[std::string(wi::io::trim(t.substr(0, eq)))] = std::string(wi::io::trim(t.substr(eq + 1)));
  }
  return kv;
}

wi::fairness::DatasetSchema build_schema(const SchemaFlags& flags) {
  std::map<std::string, std::string> kv;
  if (!flags.config_path.empty()) kv = read_key_values(flags.config_path);
  auto pick = [&](const std::string& flag, const char* key) {
    if (!flag.empty()) return flag;
    auto it = kv.find(key);
    return it == kv.end() ? std::string() : it->second;
  };
  wi::fairness::DatasetSchema schema;
  schema.feature_columns = split_list(pick(flags.features, "features"));
  schema.label.name = pick(flags.label, "label");
  schema.label.positive = pick(flags.label_positive, "label_positive");
  if (auto neg = pick(flags.label_negative, "label_negative"); !neg.empty()) {
    schema.label.negative = neg;
  }
  schema.protected_group.name = pick(flags.protected_column, "protected");
  schema.protected_group.positive = pick(flags.protected_value, "protected_value");
  if (auto other = pick(flags.protected_other, "protected_other"); !other.empty()) {
    schema.protected_group.negative = other;
  }
  if (schema.feature_columns.empty() || schema.label.name.empty() ||
      schema.label.positive.empty() || schema.protected_group.name.empty() ||
      schema.protected_group.positive.empty()) {
    throw UsageError(
        "dataset schema incomplete: need features, label, label_positive, protected, "
        "protected_value (flags or --config)");
  }
  return schema;
}

void add_schema_options(CLI::App* cmd, SchemaFlags& flags) {
  cmd->add_option("--config", flags.config_path, "key=value schema file");
  cmd->add_option("--features", flags.features, "comma-separated numeric feature columns");
  cmd->add_option("--label", flags.label, "outcome column");
  cmd->add_option("--label-positive", flags.label_positive, "value of the positive outcome");
  cmd->add_option("--label-negative", flags.label_negative,
                  "value of the negative outcome (others become errors)");
  cmd->add_option("--protected", flags.protected_column, "protected attribute column");
  cmd->add_option("--protected-value", flags.protected_value,
                  "value marking the protected group (S = 0)");
  cmd->add_option("--protected-other", flags.protected_other,
                  "value of the other group (others become errors)");
}

struct FairnessInputs {
  wi::fairness::LabeledDataset data;
  wi::fairness::LogitModel model;
  wi::SortedSample s0;
  wi::SortedSample s1;
};

FairnessInputs prepare_fairness(const std::string& path, const SchemaFlags& flags,
                                const wi::fairness::LogitOptions& opts) {
  auto data = wi::fairness::load_csv_dataset(path, build_schema(flags));
  if (data.dropped_count > 0) {
    std::cerr << "dropped " << data.dropped_count << " rows with missing values\n";
  }
  auto model = wi::fairness::fit_logit(data, opts);
  if (!model.converged) {
    std::cerr << "warning: logistic fit did not converge in " << model.iterations
              << " iterations\n";
  }
  auto [s0, s1] = wi::fairness::group_scores(model, data);
  return FairnessInputs{std::move(data), std::move(model), std::move(s0), std::move(s1)};
}

//---------------------------------------------------------------------------//
// simulate
//---------------------------------------------------------------------------//

struct SimulateFlags {
  int table = 0;
  std::optional<std::size_t> reps;
  std::uint64_t seed = 1;
  double scale = 1.0;
  std::string out;
  std::string format = "csv";
  unsigned threads = 0;
  std::vector<double> p_list;
  std::vector<std::size_t> n_list;
};

std::vector<std::size_t> scaled_sizes(const std::vector<std::size_t>& sizes, double scale) {
  std::vector<std::size_t> out;
  for (std::size_t n : sizes) {
    const auto s = static_cast<std::size_t>(std::llround(static_cast<double>(n) * scale));
    out.push_back(std::max<std::size_t>(2, s));
  }
  return out;
}

json rows_to_json(const std::vector<wi::ExperimentRow>& rows) {
  json arr = json::array();
  for (const auto& row : rows) {
    const auto& c = row.config;
    const bool loc = std::holds_alternative<wi::LocationModel>(c.model);
    arr.push_back({{"model", loc ? "location" : "scale_location"},
                   {"mu", loc ? std::get<wi::LocationModel>(c.model).mu
                              : std::get<wi::ScaleLocationModel>(c.model).mu},
                   {"lambda", loc ? 1.0 : std::get<wi::ScaleLocationModel>(c.model).lambda},
                   {"p", c.p},
                   {"n", c.n},
                   {"m", c.m},
                   {"delta0", c.delta0},
                   {"alpha", c.alpha},
                   {"replications", c.replications},
                   {"seed", c.seed},
                   {"rejections", row.rejections},
                   {"rejection_rate", row.rejection_rate},
                   {"mean_sigma2", row.mean_sigma2},
                   {"mean_statistic", row.mean_statistic},
                   {"stderr", row.std_error}});
  }
  return arr;
}

int run_simulate(const SimulateFlags& f) {
  if (f.table < 1 || f.table > 3) throw UsageError("--table must be 1, 2 or 3");
  if (!(f.scale > 0.0 && f.scale <= 1.0)) throw UsageError("--scale must lie in (0, 1]");
  if (f.format != "csv" && f.format != "json") throw UsageError("--format must be csv or json");
  const std::vector<double> p_list = f.p_list.empty() ? std::vector<double>{1, 2, 3} : f.p_list;
  const unsigned threads = f.threads > 0 ? f.threads : wi::default_thread_count();

  std::vector<wi::ExperimentRow> rows;
  std::vector<std::string> comments;
  std::ostringstream head;
  if (f.table == 1) {
    const auto reps = f.reps.value_or(1);
    const auto sizes = f.n_list.empty() ? scaled_sizes(wi::table1_sizes(), f.scale) : f.n_list;
    rows = wi::run_table1(p_list, sizes, 1.0, reps, f.seed, threads);
    head << "table 1: variance estimates, location model mu=1, seed " << f.seed
         << ", replications " << reps;
  } else if (f.table == 2) {
    const auto reps = f.reps.value_or(1000);
    const auto sizes = f.n_list.empty() ? scaled_sizes(wi::table23_sizes(), f.scale) : f.n_list;
    rows = wi::run_table2(p_list, sizes, {1.0, 0.9, 0.7, 0.5}, 1.0, 0.05, reps, f.seed, threads);
    head << "table 2: rejection rates, location model, delta0=1, alpha=0.05, seed " << f.seed
         << ", replications " << reps;
  } else {
    const auto reps = f.reps.value_or(1000);
    const auto sizes = f.n_list.empty() ? scaled_sizes(wi::table23_sizes(), f.scale) : f.n_list;
    rows = wi::run_table3(p_list, sizes, {{1.0, 2.0}, {1.0, 1.5}, {0.0, 2.0}, {0.0, 1.5}}, 0.05,
                          reps, f.seed, threads);
    head << "table 3: rejection rates, scale-location model, alpha=0.05, seed " << f.seed
         << ", replications " << reps;
  }
  comments.push_back(head.str());
  if (f.table == 3) {
    for (double p : p_list) {
      std::ostringstream line;
      line.precision(17);
      line << "delta0 p=" << p << " " << wi::table3_delta0(p)
           << " (W_p(N(0,1),N(1,2^2)) by quadrature)";
      comments.push_back(line.str());
    }
  }

  std::ostringstream payload;
  if (f.format == "csv") {
    wi::write_experiment_csv(payload, rows, comments);
  } else {
    payload << json{{"comments", comments}, {"rows", rows_to_json(rows)}}.dump(2) << '\n';
  }
  write_output(f.out, payload.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inference on the one-dimensional p-Wasserstein distance"};
  app.require_subcommand(1);

  // dist
  std::string x_path;
  std::string y_path;
  std::string column;
  std::string gaussian;
  double p = 2.0;
  int quad_order = 16;
  auto* dist = app.add_subcommand("dist", "W_p^p between two samples or a sample and a Gaussian");
  dist->add_option("x", x_path, "first sample file")->required();
  dist->add_option("y", y_path, "second sample file");
  dist->add_option("--gaussian", gaussian, "compare against N(mu, sigma^2), given as mu,sigma");
  dist->add_option("--p", p, "cost exponent (>= 1)");
  dist->add_option("--column", column, "read this CSV column instead of one value per line");
  dist->add_option("--quad-order", quad_order, "Gauss-Legendre order for the one-sample cost");

  // ci
  double alpha = 0.05;
  auto* ci = app.add_subcommand("ci", "asymptotic confidence interval for W_p^p(F, G)");
  ci->add_option("x", x_path)->required();
  ci->add_option("y", y_path)->required();
  ci->add_option("--p", p, "cost exponent (>= 1)");
  ci->add_option("--alpha", alpha, "1 - confidence level");
  ci->add_option("--column", column, "CSV column to read");

  // test
  double delta0 = 0.0;
  auto* test = app.add_subcommand("test", "test H0: W_p >= delta0 against H1: W_p < delta0");
  test->add_option("x", x_path)->required();
  test->add_option("y", y_path)->required();
  test->add_option("--p", p, "cost exponent (>= 1)");
  test->add_option("--delta0", delta0, "similarity threshold on W_p")->required();
  test->add_option("--alpha", alpha, "test level");
  test->add_option("--column", column, "CSV column to read");

  // simulate
  SimulateFlags sim;
  auto* simulate = app.add_subcommand("simulate", "reproduce the simulation tables");
  simulate->add_option("--table", sim.table, "1, 2 or 3")->required();
  simulate->add_option("--reps", sim.reps, "replications per cell (default 1 / 1000 / 1000)");
  simulate->add_option("--seed", sim.seed, "64-bit seed");
  simulate->add_option("--scale", sim.scale, "multiply the sample-size grid by this (0, 1]");
  simulate->add_option("--p", sim.p_list, "restrict to these cost exponents")->delimiter(',');
  simulate->add_option("--n", sim.n_list, "override the sample-size grid")->delimiter(',');
  simulate->add_option("--out", sim.out, "output file (default stdout)");
  simulate->add_option("--format", sim.format, "csv or json");
  simulate->add_option("--threads", sim.threads, "worker threads (default WASSER_INFER_THREADS)");

  // audit / repair-sweep
  std::string data_path;
  SchemaFlags schema_flags;
  double cutoff = 0.5;
  bool flip_di = false;
  wi::fairness::LogitOptions logit_opts;
  auto* audit = app.add_subcommand("audit", "fairness audit of a logistic classifier");
  audit->add_option("data", data_path, "CSV dataset with header")->required();
  add_schema_options(audit, schema_flags);
  audit->add_option("--p", p, "cost exponent (>= 1)");
  audit->add_option("--delta0", delta0, "similarity threshold on W_p of the scores")->required();
  audit->add_option("--alpha", alpha, "test level");
  audit->add_option("--cutoff", cutoff, "classification cutoff on the score");
  audit->add_flag("--flip-di", flip_di, "report DI as rate(S=1) / rate(S=0)");
  audit->add_option("--ridge", logit_opts.ridge, "L2 penalty for the logistic fit");
  audit->add_option("--max-iter", logit_opts.max_iter, "Newton iteration cap");

  int steps = 21;
  std::vector<double> thetas;
  std::string out_path;
  std::string format = "csv";
  auto* sweep = app.add_subcommand("repair-sweep", "geometric repair sweep of the score groups");
  sweep->add_option("data", data_path, "CSV dataset with header")->required();
  add_schema_options(sweep, schema_flags);
  sweep->add_option("--p", p, "cost exponent (>= 1)");
  sweep->add_option("--alpha", alpha, "1 - confidence level");
  sweep->add_option("--cutoff", cutoff, "classification cutoff on the score");
  sweep->add_option("--steps", steps, "evenly spaced repair amounts in [0, 1]");
  sweep->add_option("--thetas", thetas, "explicit repair amounts")->delimiter(',');
  sweep->add_flag("--flip-di", flip_di, "report DI as rate(S=1) / rate(S=0)");
  sweep->add_option("--ridge", logit_opts.ridge, "L2 penalty for the logistic fit");
  sweep->add_option("--max-iter", logit_opts.max_iter, "Newton iteration cap");
  sweep->add_option("--out", out_path, "output file (default stdout)");
  sweep->add_option("--format", format, "csv or json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (dist->parsed()) {
      const auto x = load_sample(x_path, column);
      wi::TransportResult result;
      if (!gaussian.empty()) {
        if (!y_path.empty()) throw UsageError("give either a second sample or --gaussian, not both");
        const auto parts = split_list(gaussian);
        std::optional<double> mu;
        std::optional<double> sigma;
        if (parts.size() == 2) {
          mu = wi::io::parse_double(parts[0]);
          sigma = wi::io::parse_double(parts[1]);
        }
        if (!mu || !sigma) throw UsageError("--gaussian expects mu,sigma");
        const auto g = wi::QuantileFunction::gaussian(wi::GaussianDist(*mu, *sigma));
        result = wi::wasserstein_pp_one_sample(x, g, p, quad_order);
      } else {
        if (y_path.empty()) throw UsageError("dist needs a second sample or --gaussian");
        result = wi::wasserstein_pp_two_sample(x, load_sample(y_path, column), p);
      }
      std::cout << to_json(result).dump() << '\n';
    } else if (ci->parsed()) {
      const auto v = wi::confidence_interval(load_sample(x_path, column),
                                             load_sample(y_path, column), p, alpha);
      std::cout << to_json(v).dump() << '\n';
    } else if (test->parsed()) {
      const auto v = wi::similarity_test(load_sample(x_path, column), load_sample(y_path, column),
                                         p, delta0, alpha);
      std::cout << to_json(v).dump() << '\n';
    } else if (simulate->parsed()) {
      return run_simulate(sim);
    } else if (audit->parsed()) {
      const auto in = prepare_fairness(data_path, schema_flags, logit_opts);
      const auto report = wi::fairness::audit(in.s0, in.s1, p, delta0, alpha, cutoff, flip_di);
      json beta = json::array();
      for (Eigen::Index i = 0; i < in.model.beta.size(); ++i) beta.push_back(in.model.beta[i]);
      json out{{"verdict", to_json(report.verdict)},
               {"di", number_or_null(report.di)},
               {"ber", report.ber},
               {"cutoff", cutoff},
               {"n0", report.n0},
               {"n1", report.n1},
               {"dropped_rows", in.data.dropped_count},
               {"model",
                {{"beta", beta},
                 {"features", in.data.feature_names},
                 {"converged", in.model.converged},
                 {"iterations", in.model.iterations}}}};
      std::cout << out.dump(2) << '\n';
    } else if (sweep->parsed()) {
      if (format != "csv" && format != "json") throw UsageError("--format must be csv or json");
      if (thetas.empty()) {
        if (steps < 2) throw UsageError("--steps must be >= 2");
        for (int k = 0; k < steps; ++k) thetas.push_back(static_cast<double>(k) / (steps - 1));
      }
      const auto in = prepare_fairness(data_path, schema_flags, logit_opts);
      const auto rows =
          wi::fairness::repair_sweep(in.s0, in.s1, thetas, p, alpha, cutoff, flip_di);
      std::ostringstream payload;
      if (format == "csv") {
        payload.precision(17);
        payload << wi::fairness::kRepairSweepCsvHeader << '\n';
        for (const auto& r : rows) {
          payload << r.theta << ',' << r.w2_squared << ',' << r.ci_low << ',' << r.ci_high << ','
                  << r.di << ',' << r.ber << '\n';
        }
      } else {
        json arr = json::array();
        for (const auto& r : rows) {
          arr.push_back({{"theta", r.theta},
                         {"w2_squared", r.w2_squared},
                         {"ci_low", r.ci_low},
                         {"ci_high", r.ci_high},
                         {"di", number_or_null(r.di)},
                         {"ber", r.ber}});
        }
        payload << arr.dump(2) << '\n';
      }
      write_output(out_path, payload.str());
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const wi::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const wi::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return 0;
}
