// Command-line front end: fit estimators on CSV data, run config-driven
// experiments, estimate curvature/perturbation conditions for a design, and
// evaluate the closed-form sample-complexity and error bounds.
//
// Exit codes (uniform across subcommands):
//   0  success (including degenerate-scale bound reports)
//   1  file parse/dimension/content errors, invalid experiment configs
//   2  invalid or missing flags, out-of-range flag values
//   3  fit did not converge within the iteration budget (result still written)

#include <charconv>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "psr/bounds.hpp"
#include "psr/conditions.hpp"
#include "psr/csv.hpp"
#include "psr/errors.hpp"
#include "psr/experiments.hpp"
#include "psr/likelihood.hpp"
#include "psr/manifest.hpp"
#include "psr/model.hpp"
#include "psr/rng.hpp"
#include "psr/solver.hpp"

namespace {

using nlohmann::json;

json make_manifest(const json& invocation, std::uint64_t seed,
                   const std::string& started_utc, const std::vector<std::string>& outputs) {
  json m;
  m["tool_version"] = psr::kToolVersion;
  m["config_hash"] = psr::config_hash_hex(invocation);
  m["seed"] = seed;
  m["started_utc"] = started_utc;
  m["finished_utc"] = psr::utc_timestamp();
  m["outputs"] = outputs;
  return m;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw psr::Error("cannot open for writing: " + path);
  out << text;
  if (!out) throw psr::Error("write failed: " + path);
}

// "0.5" -> scalar; anything that does not fully parse as a number is a path.
bool parse_full_double(const std::string& text, double& value) {
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto res = std::from_chars(begin, end, value);
  return res.ec == std::errc() && res.ptr == end;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

struct FitArgs {
  std::string path_A;
  std::string path_y;
  std::string lambda0 = "1";
  std::optional<double> budget;
  std::optional<double> eta;
  std::string estimator = "ml";
  double threshold = 1e-4;
  std::string out;
  double tolerance = 1e-8;
  long max_iters = 50000;
  std::uint64_t seed = 1;
};

int run_fit(const FitArgs& a) {
  const std::string started = psr::utc_timestamp();
  if (a.budget.has_value() == a.eta.has_value()) {
    std::cerr << "fit: exactly one of --budget and --eta must be given\n";
    return 2;
  }
  if (a.estimator != "ml" && a.estimator != "lasso" && a.estimator != "rescaled_lasso") {
    std::cerr << "fit: --estimator must be ml or lasso\n";
    return 2;
  }
  if (!(a.threshold > 0.0)) {
    std::cerr << "fit: --threshold must be > 0\n";
    return 2;
  }

  try {
    psr::PoissonLinearModel model;
    psr::ObservationSet obs;
    double lambda0_scalar = 0.0;
    if (parse_full_double(a.lambda0, lambda0_scalar)) {
      const Eigen::MatrixXd A = psr::read_csv_matrix(a.path_A);
      const Eigen::VectorXd y = psr::read_csv_vector(a.path_y);
      if (y.size() != A.rows())
        throw psr::DimensionMismatch("row count of " + a.path_A + " (" +
                                     std::to_string(A.rows()) + ") != length of " + a.path_y +
                                     " (" + std::to_string(y.size()) + ")");
      for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (!(y(i) >= 0.0) || y(i) != std::floor(y(i)))
          throw psr::NonIntegerCount("counts in " + a.path_y +
                                     " must be nonnegative integers (row " +
                                     std::to_string(i + 1) + ")");
      }
      model = psr::build_model(A, Eigen::VectorXd::Constant(A.rows(), lambda0_scalar));
      obs.y = y;
    } else {
      auto pair = psr::ingest_csv(a.path_A, a.path_y, a.lambda0);
      model = std::move(pair.first);
      obs = std::move(pair.second);
    }

    const psr::FeasibilityBudget budget = a.budget
                                              ? psr::FeasibilityBudget::constrained(*a.budget)
                                              : psr::FeasibilityBudget::penalized(*a.eta);
    psr::SolveOptions opts;
    opts.tolerance = a.tolerance;
    opts.max_iters = a.max_iters;
    opts.seed = a.seed;
    const psr::SolveResult res = a.estimator == "ml"
                                     ? psr::solve_ml(model, obs, budget, opts)
                                     : psr::solve_rescaled_lasso(model, obs, budget, opts);
    auto [w_thresh, support] = psr::threshold_support(res.w_hat, a.threshold);

    json invocation = {{"command", "fit"},       {"A", a.path_A},
                       {"y", a.path_y},          {"lambda0", a.lambda0},
                       {"estimator", a.estimator}, {"threshold", a.threshold},
                       {"tolerance", a.tolerance}, {"max_iters", a.max_iters},
                       {"seed", a.seed}};
    if (a.budget) invocation["budget"] = *a.budget;
    if (a.eta) invocation["eta"] = *a.eta;

    json out;
    out["estimator"] = a.estimator;
    out["threshold"] = a.threshold;
    out["objective"] = res.objective;
    out["iterations"] = res.iterations;
    out["converged"] = res.converged;
    out["w_hat"] = vector_to_json(res.w_hat);
    out["w_thresholded"] = vector_to_json(w_thresh);
    out["support"] = support;
    out["manifest"] = make_manifest(invocation, a.seed, started, {a.out});
    write_text_file(a.out, out.dump(2) + "\n");
    std::cout << "wrote " << a.out << " (converged=" << (res.converged ? "true" : "false")
              << ", iterations=" << res.iterations << ")\n";
    return res.converged ? 0 : 3;
  } catch (const psr::InvalidOptions& e) {
    std::cerr << "fit: " << e.what() << "\n";
    return 2;
  } catch (const psr::Error& e) {
    std::cerr << "fit: " << e.what() << "\n";
    return 1;
  }
}

// ---------------------------------------------------------------------------
// experiment
// ---------------------------------------------------------------------------

struct ExperimentArgs {
  std::string config;
  std::string out = "runs";
  int workers = 0;  // 0 -> autodetect
};

int run_experiment_cmd(const ExperimentArgs& a) {
  const std::string started = psr::utc_timestamp();
  int workers = a.workers;
  if (workers < 0) {
    std::cerr << "experiment: --workers must be >= 0\n";
    return 2;
  }
  if (workers == 0)
    workers = std::max(1u, std::thread::hardware_concurrency());

  json config_json;
  {
    std::ifstream in(a.config);
    if (!in) {
      std::cerr << "experiment: cannot open config: " << a.config << "\n";
      return 1;
    }
    try {
      in >> config_json;
    } catch (const std::exception& e) {
      std::cerr << "experiment: JSON parse error in " << a.config << ": " << e.what() << "\n";
      return 1;
    }
  }

  try {
    const psr::ExperimentConfig cfg = psr::ExperimentConfig::from_json(config_json);
    const auto t0 = std::chrono::steady_clock::now();
    const psr::ExperimentResult result = psr::run_experiment(cfg, workers);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const std::filesystem::path dir =
        psr::write_run(a.out, cfg, result, started, wall, workers);
    std::cout << "wrote " << dir.string() << "\n";
    return 0;
  } catch (const psr::Error& e) {
    std::cerr << "experiment: invalid config " << a.config << ": " << e.what() << "\n";
    return 1;
  }
}

// ---------------------------------------------------------------------------
// conditions
// ---------------------------------------------------------------------------

struct ConditionsArgs {
  std::string path_A;
  Eigen::Index k = 0;
  double s = 1.0;
  double epsilon = 0.1;
  long samples = 10000;
  std::uint64_t seed = 1;
  double lambda0 = 1.0;
  std::string out;
};

int run_conditions(const ConditionsArgs& a) {
  const std::string started = psr::utc_timestamp();
  if (a.samples <= 0) {
    std::cerr << "conditions: --samples must be > 0\n";
    return 2;
  }
  if (a.k < 1) {
    std::cerr << "conditions: --k must be >= 1\n";
    return 2;
  }
  if (!(a.s > 0.0) || !(a.epsilon > 0.0) || !(a.lambda0 > 0.0)) {
    std::cerr << "conditions: --s, --epsilon, and --lambda0 must be > 0\n";
    return 2;
  }

  Eigen::MatrixXd A;
  try {
    A = psr::read_csv_matrix(a.path_A);
  } catch (const psr::Error& e) {
    std::cerr << "conditions: " << e.what() << "\n";
    return 1;
  }
  if (a.k > A.cols()) {
    std::cerr << "conditions: --k exceeds the number of columns in " << a.path_A << "\n";
    return 2;
  }

  try {
    const psr::PoissonLinearModel model =
        psr::build_model(A, Eigen::VectorXd::Constant(A.rows(), a.lambda0));
    psr::Rng truth_rng(psr::mix_seed(a.seed, 0xB2));
    const psr::GroundTruth truth =
        psr::sample_ground_truth(A.cols(), a.k, a.s, truth_rng);
    const double gamma =
        psr::estimate_gamma_k(A, a.k, a.samples, psr::mix_seed(a.seed, 0xE5));

    json out;
    out["gamma_k"] = gamma;
    out["k"] = a.k;
    out["s"] = a.s;
    out["epsilon"] = a.epsilon;
    out["num_samples"] = a.samples;
    out["seed"] = a.seed;
    out["lambda0"] = a.lambda0;
    out["design_file"] = a.path_A;
    out["truth_support"] = json::array();
    for (Eigen::Index j = 0; j < truth.w_star.size(); ++j)
      if (truth.w_star(j) > 0.0) out["truth_support"].push_back(j);
    try {
      const psr::ConditionEstimate est = psr::estimate_beta_sk(
          model, truth, a.epsilon, a.samples, psr::mix_seed(a.seed, 0x68));
      out["beta_sk"] = est.beta_sk;
      out["delta_sk"] = est.delta_sk;
      out["gamma_min_accepted"] = est.gamma_k;
      out["accepted_samples"] = est.accepted_samples;
      out["acceptance_ratio"] = est.acceptance_ratio;
    } catch (const psr::NoFeasibleDirection& e) {
      out["beta_sk"] = nullptr;
      out["delta_sk"] = nullptr;
      out["accepted_samples"] = 0;
      out["note"] = e.what();
    }

    json invocation = {{"command", "conditions"}, {"A", a.path_A},   {"k", a.k},
                       {"s", a.s},                {"epsilon", a.epsilon},
                       {"samples", a.samples},    {"seed", a.seed},  {"lambda0", a.lambda0}};
    std::vector<std::string> outputs;
    if (!a.out.empty()) outputs.push_back(a.out);
    out["manifest"] = make_manifest(invocation, a.seed, started, outputs);

    const std::string text = out.dump(2) + "\n";
    std::cout << text;
    if (!a.out.empty()) write_text_file(a.out, text);
    return 0;
  } catch (const psr::InvalidOptions& e) {
    std::cerr << "conditions: " << e.what() << "\n";
    return 2;
  } catch (const psr::Error& e) {
    std::cerr << "conditions: " << e.what() << "\n";
    return 1;
  }
}

// ---------------------------------------------------------------------------
// bounds
// ---------------------------------------------------------------------------

struct BoundsArgs {
  std::string which;
  std::optional<double> s, k, p, n, beta, gamma, lambda_min, epsilon, t, lambda;
  double e_prob = 0.05;
  std::string rates_path;
  std::string out;
  psr::BoundConstants consts;
};

bool require_flags(const BoundsArgs& a,
                   const std::vector<std::pair<const char*, bool>>& present) {
  bool ok = true;
  for (const auto& [name, has] : present)
    if (!has) {
      std::cerr << "bounds: --which " << a.which << " requires --" << name << "\n";
      ok = false;
    }
  return ok;
}

int run_bounds(const BoundsArgs& a) {
  const std::string started = psr::utc_timestamp();
  json out;
  out["which"] = a.which;
  try {
    if (a.which == "thm1" || a.which == "cor1") {
      const bool needs_beta = a.which == "thm1";
      if (!require_flags(a, {{"s", a.s.has_value()},
                             {needs_beta ? "beta" : "gamma",
                              needs_beta ? a.beta.has_value() : a.gamma.has_value()},
                             {"lambda-min", a.lambda_min.has_value()},
                             {"epsilon", a.epsilon.has_value()}}))
        return 2;
      const double k = a.k.value_or(1.0);
      const psr::SampleComplexity sc =
          needs_beta ? psr::theorem1_requirements(*a.s, k, *a.beta, *a.lambda_min,
                                                  *a.epsilon, a.e_prob, a.consts)
                     : psr::corollary1_requirements(*a.s, k, *a.gamma, *a.lambda_min,
                                                    *a.epsilon, a.e_prob, a.consts);
      out["n_min"] = std::isfinite(sc.n_min) ? json(sc.n_min) : json("inf");
      out["epsilon_max"] = sc.epsilon_max;
      out["epsilon_ok"] = *a.epsilon <= sc.epsilon_max;
      out["degenerate_scale"] = false;
    } else if (a.which == "cor2") {
      if (!require_flags(a, {{"s", a.s.has_value()},
                             {"gamma", a.gamma.has_value()},
                             {"n", a.n.has_value()},
                             {"lambda-min", a.lambda_min.has_value()}}))
        return 2;
      const psr::ErrorBound b =
          psr::corollary2_error_bound(*a.s, *a.gamma, *a.n, *a.lambda_min, a.consts);
      out["error_bound"] = b.error_bound;
      out["n_floor"] = b.n_floor;
      out["confidence"] = b.confidence;
      out["below_floor"] = b.below_floor;
      out["degenerate_scale"] = false;
    } else if (a.which == "thm4") {
      if (!require_flags(a, {{"p", a.p.has_value()},
                             {"k", a.k.has_value()},
                             {"s", a.s.has_value()},
                             {"lambda-min", a.lambda_min.has_value()},
                             {"epsilon", a.epsilon.has_value()}}))
        return 2;
      const psr::SampleComplexity sc = psr::theorem4_requirements(
          *a.p, *a.k, *a.s, *a.lambda_min, *a.epsilon, a.e_prob, a.consts);
      out["n_min"] = std::isfinite(sc.n_min) ? json(sc.n_min) : json("inf");
      out["epsilon_max"] = sc.epsilon_max;
      out["epsilon_ok"] = *a.epsilon <= sc.epsilon_max;
      out["degenerate_scale"] = false;
    } else if (a.which == "bernstein") {
      if (!a.t.has_value()) {
        std::cerr << "bounds: --which bernstein requires --t\n";
        return 2;
      }
      Eigen::VectorXd rates;
      if (!a.rates_path.empty()) {
        rates = psr::read_csv_vector(a.rates_path);
      } else if (a.lambda.has_value() && a.n.has_value()) {
        rates = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(*a.n), *a.lambda);
      } else {
        std::cerr << "bounds: --which bernstein requires --rates or both --lambda and --n\n";
        return 2;
      }
      const psr::BernsteinTail b = psr::bernstein_tail(rates, *a.t);
      out["t"] = *a.t;
      out["deviation_threshold"] = b.deviation_threshold;
      out["probability_bound"] = b.probability_bound;
      out["t_max"] = b.t_max;
    } else {
      std::cerr << "bounds: --which must be one of thm1|cor1|cor2|thm4|bernstein\n";
      return 2;
    }
  } catch (const psr::TOutOfRange& e) {
    std::cerr << "bounds: " << e.what() << "\n";
    return 2;
  } catch (const psr::DegenerateScale& e) {
    out["degenerate_scale"] = true;
    out["reason"] = e.what();
  } catch (const psr::Error& e) {
    std::cerr << "bounds: " << e.what() << "\n";
    return 1;
  }

  json invocation = {{"command", "bounds"}, {"which", a.which}, {"e_prob", a.e_prob}};
  auto put = [&](const char* name, const std::optional<double>& v) {
    if (v) invocation[name] = *v;
  };
  put("s", a.s);
  put("k", a.k);
  put("p", a.p);
  put("n", a.n);
  put("beta", a.beta);
  put("gamma", a.gamma);
  put("lambda_min", a.lambda_min);
  put("epsilon", a.epsilon);
  put("t", a.t);
  put("lambda", a.lambda);
  if (!a.rates_path.empty()) invocation["rates"] = a.rates_path;
  std::vector<std::string> outputs;
  if (!a.out.empty()) outputs.push_back(a.out);
  out["manifest"] = make_manifest(invocation, 0, started, outputs);

  const std::string text = out.dump(2) + "\n";
  std::cout << text;
  try {
    if (!a.out.empty()) write_text_file(a.out, text);
  } catch (const psr::Error& e) {
    std::cerr << "bounds: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse nonnegative recovery from Poisson counts: estimators, "
               "experiments, condition estimates, and closed-form bounds"};
  app.require_subcommand(1);

  FitArgs fit_args;
  CLI::App* fit = app.add_subcommand(
      "fit", "Fit one estimator to CSV data and write the result as JSON");
  fit->add_option("--A", fit_args.path_A, "design matrix CSV (n rows, p columns)")
      ->required();
  fit->add_option("--y", fit_args.path_y, "observed counts CSV (n rows)")->required();
  fit->add_option("--lambda0", fit_args.lambda0,
                  "background rates: a positive scalar or a CSV vector path");
  fit->add_option("--budget", fit_args.budget, "l1 budget s (constrained mode)");
  fit->add_option("--eta", fit_args.eta, "l1 penalty weight (penalized mode)");
  fit->add_option("--estimator", fit_args.estimator, "ml | lasso");
  fit->add_option("--threshold", fit_args.threshold, "support threshold t > 0");
  fit->add_option("--out", fit_args.out, "output JSON path")->required();
  fit->add_option("--tol", fit_args.tolerance, "solver convergence tolerance");
  fit->add_option("--max-iters", fit_args.max_iters, "solver iteration cap");
  fit->add_option("--seed", fit_args.seed, "seed for randomized restarts");

  ExperimentArgs exp_args;
  CLI::App* exp = app.add_subcommand(
      "experiment", "Run a named experiment from a JSON config and write CSV/JSON outputs");
  exp->add_option("--config", exp_args.config, "experiment config JSON path")->required();
  exp->add_option("--out", exp_args.out, "output root directory (default: runs)");
  exp->add_option("--workers", exp_args.workers,
                  "trial worker threads (0 = autodetect; results identical for any value)");

  ConditionsArgs cond_args;
  CLI::App* cond = app.add_subcommand(
      "conditions", "Estimate curvature/perturbation constants for a design matrix");
  cond->add_option("--A", cond_args.path_A, "design matrix CSV")->required();
  cond->add_option("--k", cond_args.k, "sparsity level")->required();
  cond->add_option("--s", cond_args.s, "l1 budget for the synthesized signal");
  cond->add_option("--epsilon", cond_args.epsilon, "perturbation radius");
  cond->add_option("--samples", cond_args.samples, "Monte Carlo sample count");
  cond->add_option("--seed", cond_args.seed, "RNG seed");
  cond->add_option("--lambda0", cond_args.lambda0, "constant background rate");
  cond->add_option("--out", cond_args.out, "optional JSON output path");

  BoundsArgs bounds_args;
  CLI::App* bounds = app.add_subcommand(
      "bounds", "Evaluate closed-form sample-complexity / error / tail bounds");
  bounds->add_option("--which", bounds_args.which, "thm1|cor1|cor2|thm4|bernstein")
      ->required();
  bounds->add_option("--s", bounds_args.s, "l1 budget");
  bounds->add_option("--k", bounds_args.k, "sparsity level");
  bounds->add_option("--p", bounds_args.p, "ambient dimension");
  bounds->add_option("--n", bounds_args.n, "sample count");
  bounds->add_option("--beta", bounds_args.beta, "perturbation constant");
  bounds->add_option("--gamma", bounds_args.gamma, "curvature constant");
  bounds->add_option("--lambda-min", bounds_args.lambda_min, "smallest background rate");
  bounds->add_option("--epsilon", bounds_args.epsilon, "target accuracy");
  bounds->add_option("--e-prob", bounds_args.e_prob, "failure probability (default 0.05)");
  bounds->add_option("--t", bounds_args.t, "tail parameter");
  bounds->add_option("--lambda", bounds_args.lambda, "constant rate (with --n)");
  bounds->add_option("--rates", bounds_args.rates_path, "rates CSV path");
  bounds->add_option("--out", bounds_args.out, "optional JSON output path");
  bounds->add_option("--c1", bounds_args.consts.c1, "constant c1");
  bounds->add_option("--c2", bounds_args.consts.c2, "constant c2");
  bounds->add_option("--c-prime", bounds_args.consts.c_prime, "constant c'");
  bounds->add_option("--c3", bounds_args.consts.c3, "constant c3");
  bounds->add_option("--c4", bounds_args.consts.c4, "constant c4");
  bounds->add_option("--C0", bounds_args.consts.C0, "constant C0");
  bounds->add_option("--C1", bounds_args.consts.C1, "constant C1");
  bounds->add_option("--C2", bounds_args.consts.C2, "constant C2");
  bounds->add_option("--C-prime", bounds_args.consts.C_prime, "constant C'");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (*fit) return run_fit(fit_args);
  if (*exp) return run_experiment_cmd(exp_args);
  if (*cond) return run_conditions(cond_args);
  if (*bounds) return run_bounds(bounds_args);
  return 2;
}
