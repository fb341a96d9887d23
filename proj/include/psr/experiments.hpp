#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "psr/model.hpp"
#include "psr/solver.hpp"

namespace psr {

// One experiment run, fully described: the JSON form of this struct (with
// defaults filled in) is what gets hashed into the output directory name.
struct ExperimentConfig {
  std::string name;  // transition_vs_n | transition_vs_k | roc | tightness |
                     // beta_vs_s | concentration | model_comparison
  Eigen::Index p = 0;
  Eigen::Index k = 0;
  double s = 1.0;
  double lambda0 = 1.0;
  Eigen::Index n = 0;
  long m = 1;  // Monte Carlo loops (trials)
  std::uint64_t seed = 1;
  std::string design = "uniform01";  // uniform01 | half_normal
  std::vector<std::string> estimators = {"ml", "rescaled_lasso"};

  std::vector<Eigen::Index> n_grid;
  std::vector<Eigen::Index> k_grid;
  std::vector<double> s_grid;

  double threshold = 1e-4;
  std::string threshold_rule = "fixed";  // fixed | c_over_k
  double threshold_c = 0.01;
  int num_thresholds = 25;  // roc sweep, log-spaced from 1/k down to 0.001/k

  SolveOptions solver;

  long gamma_samples = 300;    // tightness: cone samples per gamma estimate
  long beta_samples = 10000;   // beta_vs_s: accepted perturbations per point
  double epsilon = 0.1;        // beta_vs_s perturbation radius
  double delta = 0.2;          // concentration deviation level
  long num_probes = 20;        // concentration probe points (plus w*)
  double heldout_fraction = 0.2;
  double budget_scale = 1.0;   // solver budget = budget_scale * ||w*||_1

  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct TrialRecord {
  long trial = 0;
  std::uint64_t seed = 0;
  std::string estimator;
  Eigen::Index n = 0;
  Eigen::Index k = 0;
  double s = 0.0;
  double threshold = 0.0;
  double l2_error = 0.0;
  int support_success = 0;
  Eigen::Index detections = 0;
  Eigen::Index false_alarms = 0;
  double runtime_sec = 0.0;  // kept out of the CSV so reruns stay byte-identical
};

struct SupportMetrics {
  int success = 0;   // thresholded support equals the true support exactly
  double pd = 0.0;   // |S_hat ∩ S*| / |S*|
  double pf = 0.0;   // |S_hat \ S*| / (p - |S*|)
  bool pd_defined = true;  // false when the truth support is empty
};

SupportMetrics support_metrics(const Eigen::VectorXd& w_hat, const Eigen::VectorXd& w_star,
                               double t);

struct ExperimentResult {
  std::string records_csv;  // header + one row per trial record
  nlohmann::json summary;
  std::optional<std::string> extra_csv;  // model_comparison per-k series
  std::string extra_csv_name = "comparisons.csv";
  double total_solve_seconds = 0.0;
};

ExperimentResult run_transition_vs_n(const ExperimentConfig& cfg, int workers = 1);
ExperimentResult run_transition_vs_k(const ExperimentConfig& cfg, int workers = 1);
ExperimentResult run_roc(const ExperimentConfig& cfg, int workers = 1);
ExperimentResult run_tightness(const ExperimentConfig& cfg, int workers = 1);
ExperimentResult run_beta_vs_s(const ExperimentConfig& cfg, int workers = 1);
ExperimentResult run_concentration(const ExperimentConfig& cfg, int workers = 1);
ExperimentResult run_model_comparison(const ExperimentConfig& cfg, int workers = 1);

// Dispatch on cfg.name; throws InvalidOptions for unknown names.
ExperimentResult run_experiment(const ExperimentConfig& cfg, int workers = 1);

// --- small statistics helpers (exposed for tests) ---

// Mann-Kendall trend statistic with continuity correction and tie-adjusted
// variance. Negative z indicates a decreasing trend; the one-sided test at
// significance alpha=0.05 rejects "no trend" in favor of decreasing when
// z <= -1.645.
double mann_kendall_z(const std::vector<double>& x);

// Spearman rank correlation (average ranks for ties).
double spearman_rho(const std::vector<double>& x, const std::vector<double>& y);

// Ordinary least squares y = a*x + b: returns {slope, intercept, r_squared}.
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

// Keep the k largest entries of w (ties broken by lower index), zero the rest.
Eigen::VectorXd keep_top_k(const Eigen::VectorXd& w, Eigen::Index k);

// Row subsetting used by held-out splits.
PoissonLinearModel subset_rows(const PoissonLinearModel& model,
                               const std::vector<Eigen::Index>& rows);
ObservationSet subset_obs(const ObservationSet& obs, const std::vector<Eigen::Index>& rows);

}  // namespace psr
