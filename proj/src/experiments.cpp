#include "psr/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <mutex>
#include <numeric>
#include <set>
#include <thread>

#include "psr/bounds.hpp"
#include "psr/conditions.hpp"
#include "psr/errors.hpp"
#include "psr/likelihood.hpp"

namespace psr {

namespace {

// Seed-derivation stream tags; fixed constants so every run of a config is
// reproducible independent of evaluation order or worker count.
constexpr std::uint64_t kTagDesign = 0xA1;
constexpr std::uint64_t kTagTruth = 0xB2;
constexpr std::uint64_t kTagObs = 0xC3;
constexpr std::uint64_t kTagTrial = 0xD4;
constexpr std::uint64_t kTagGamma = 0xE5;
constexpr std::uint64_t kTagProbe = 0xF6;
constexpr std::uint64_t kTagSplit = 0x57;
constexpr std::uint64_t kTagBeta = 0x68;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Runs body(0..count-1) on `workers` threads; each body call writes only its
// own preallocated slots, so results are identical for any worker count.
void parallel_trials(long count, int workers, const std::function<void(long)>& body) {
  if (workers <= 1 || count <= 1) {
    for (long i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<long> next{0};
  std::exception_ptr first_error = nullptr;
  std::mutex error_mutex;
  auto work = [&] {
    for (;;) {
      const long i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(workers));
  for (int t = 0; t < workers; ++t) threads.emplace_back(work);
  for (auto& th : threads) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

const std::string kFitHeader =
    "trial,seed,estimator,n,k,s,threshold,l2_error,support_success,detections,false_alarms\n";

void append_fit_row(std::string& csv, const TrialRecord& r) {
  csv += std::to_string(r.trial);
  csv += ',';
  csv += std::to_string(r.seed);
  csv += ',';
  csv += r.estimator;
  csv += ',';
  csv += std::to_string(r.n);
  csv += ',';
  csv += std::to_string(r.k);
  csv += ',';
  csv += fmt(r.s);
  csv += ',';
  csv += fmt(r.threshold);
  csv += ',';
  csv += fmt(r.l2_error);
  csv += ',';
  csv += std::to_string(r.support_success);
  csv += ',';
  csv += std::to_string(r.detections);
  csv += ',';
  csv += std::to_string(r.false_alarms);
  csv += '\n';
}

SolveResult run_estimator(const std::string& estimator, const PoissonLinearModel& model,
                          const ObservationSet& obs, const FeasibilityBudget& budget,
                          const SolveOptions& opts) {
  if (estimator == "ml") return solve_ml(model, obs, budget, opts);
  if (estimator == "rescaled_lasso") return solve_rescaled_lasso(model, obs, budget, opts);
  throw InvalidOptions("unknown estimator: " + estimator);
}

// One fitted trial -> record. Solver failures (anything thrown) are recorded
// as NaN error rows rather than aborting the experiment.
void fill_record(TrialRecord& rec, const std::string& estimator,
                 const PoissonLinearModel& model, const GroundTruth& truth,
                 const ObservationSet& obs, double t, const ExperimentConfig& cfg) {
  rec.estimator = estimator;
  rec.n = model.n();
  rec.k = truth.k;
  rec.s = truth.s;
  rec.threshold = t;
  const auto start = std::chrono::steady_clock::now();
  try {
    const FeasibilityBudget budget =
        FeasibilityBudget::constrained(cfg.budget_scale * truth.s);
    SolveOptions opts = cfg.solver;
    opts.seed = mix_seed(rec.seed, kTagTrial);
    const SolveResult res = run_estimator(estimator, model, obs, budget, opts);
    rec.l2_error = (res.w_hat - truth.w_star).norm();
    const SupportMetrics m = support_metrics(res.w_hat, truth.w_star, t);
    rec.support_success = m.success;
    rec.detections = static_cast<Eigen::Index>(std::llround(
        m.pd * static_cast<double>(truth.k)));
    rec.false_alarms = static_cast<Eigen::Index>(std::llround(
        m.pf * static_cast<double>(model.p() - truth.k)));
  } catch (const Error&) {
    rec.l2_error = std::numeric_limits<double>::quiet_NaN();
    rec.support_success = 0;
    rec.detections = 0;
    rec.false_alarms = 0;
  }
  rec.runtime_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void validate_common(const ExperimentConfig& c) {
  if (c.p < 1 || c.k < 1 || c.k > c.p)
    throw InvalidOptions("config: need 1 <= k <= p with p >= 1");
  if (!(c.s > 0.0)) throw InvalidOptions("config: s must be > 0");
  if (!(c.lambda0 > 0.0)) throw InvalidOptions("config: lambda0 must be > 0");
  if (c.m < 1) throw InvalidOptions("config: m must be >= 1");
  if (c.design != "uniform01" && c.design != "half_normal")
    throw InvalidOptions("config: design must be uniform01 or half_normal");
  if (c.estimators.empty()) throw InvalidOptions("config: estimators must be non-empty");
  for (const auto& e : c.estimators)
    if (e != "ml" && e != "rescaled_lasso")
      throw InvalidOptions("config: unknown estimator " + e);
  if (!(c.threshold > 0.0)) throw InvalidOptions("config: threshold must be > 0");
  if (c.threshold_rule != "fixed" && c.threshold_rule != "c_over_k")
    throw InvalidOptions("config: threshold_rule must be fixed or c_over_k");
  if (!(c.heldout_fraction > 0.0) || !(c.heldout_fraction < 1.0))
    throw InvalidOptions("config: heldout_fraction must be in (0,1)");
  if (!(c.budget_scale > 0.0)) throw InvalidOptions("config: budget_scale must be > 0");
}

DesignKind design_kind(const ExperimentConfig& c) {
  return c.design == "uniform01" ? DesignKind::kUniform01 : DesignKind::kHalfNormal;
}

double threshold_for(const ExperimentConfig& c, Eigen::Index k) {
  if (c.threshold_rule == "c_over_k") return c.threshold_c / static_cast<double>(k);
  return c.threshold;
}

nlohmann::json success_curve_summary(const std::vector<TrialRecord>& records,
                                     const std::vector<Eigen::Index>& grid,
                                     const std::vector<std::string>& estimators, long m,
                                     bool key_is_k) {
  nlohmann::json curves = nlohmann::json::object();
  for (const auto& est : estimators) {
    nlohmann::json points = nlohmann::json::array();
    for (Eigen::Index g : grid) {
      long wins = 0, count = 0;
      double threshold = 0.0;
      for (const auto& r : records) {
        if (r.estimator != est) continue;
        if ((key_is_k ? r.k : r.n) != g) continue;
        wins += r.support_success;
        ++count;
        threshold = r.threshold;
      }
      const double mean = count > 0 ? static_cast<double>(wins) / count : 0.0;
      nlohmann::json pt;
      pt[key_is_k ? "k" : "n"] = g;
      pt["success_mean"] = mean;
      if (m > 1)
        pt["success_stderr"] = std::sqrt(mean * (1.0 - mean) / static_cast<double>(count));
      else
        pt["success_stderr"] = nullptr;  // undefined with a single loop
      pt["threshold"] = threshold;
      pt["trials"] = count;
      points.push_back(pt);
    }
    curves[est] = points;
  }
  return curves;
}

double total_runtime(const std::vector<TrialRecord>& records) {
  double total = 0.0;
  for (const auto& r : records) total += r.runtime_sec;
  return total;
}

}  // namespace

SupportMetrics support_metrics(const Eigen::VectorXd& w_hat, const Eigen::VectorXd& w_star,
                               double t) {
  if (!(t > 0.0)) throw InvalidOptions("support threshold must be > 0");
  if (w_hat.size() != w_star.size()) throw DimensionMismatch("w_hat/w_star length mismatch");
  const Eigen::Index p = w_hat.size();
  Eigen::Index true_k = 0, detected = 0, false_alarm = 0;
  bool equal = true;
  for (Eigen::Index j = 0; j < p; ++j) {
    const bool in_truth = w_star(j) > 0.0;
    const bool in_hat = w_hat(j) >= t;
    if (in_truth) ++true_k;
    if (in_hat && in_truth) ++detected;
    if (in_hat && !in_truth) ++false_alarm;
    if (in_hat != in_truth) equal = false;
  }
  SupportMetrics m;
  m.success = equal ? 1 : 0;
  m.pd_defined = true_k > 0;
  m.pd = m.pd_defined ? static_cast<double>(detected) / static_cast<double>(true_k) : 0.0;
  m.pf = p > true_k ? static_cast<double>(false_alarm) / static_cast<double>(p - true_k) : 0.0;
  return m;
}

Eigen::VectorXd keep_top_k(const Eigen::VectorXd& w, Eigen::Index k) {
  if (k < 0) throw InvalidOptions("k must be >= 0");
  if (k >= w.size()) return w;
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(w.size()));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return w(a) > w(b); });
  Eigen::VectorXd out = Eigen::VectorXd::Zero(w.size());
  for (Eigen::Index i = 0; i < k; ++i) out(idx[static_cast<std::size_t>(i)]) = w(idx[static_cast<std::size_t>(i)]);
  return out;
}

PoissonLinearModel subset_rows(const PoissonLinearModel& model,
                               const std::vector<Eigen::Index>& rows) {
  Eigen::MatrixXd A(static_cast<Eigen::Index>(rows.size()), model.p());
  Eigen::VectorXd lambda0(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    A.row(static_cast<Eigen::Index>(i)) = model.A.row(rows[i]);
    lambda0(static_cast<Eigen::Index>(i)) = model.lambda0(rows[i]);
  }
  return build_model(A, lambda0);
}

ObservationSet subset_obs(const ObservationSet& obs, const std::vector<Eigen::Index>& rows) {
  ObservationSet out;
  out.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.y(static_cast<Eigen::Index>(i)) = obs.y(rows[i]);
  out.seed = obs.seed;
  return out;
}

double mann_kendall_z(const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n < 2) return 0.0;
  long s_stat = 0;
  for (std::size_t i = 0; i + 1 < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      if (x[j] > x[i]) ++s_stat;
      else if (x[j] < x[i]) --s_stat;
    }
  // Tie-adjusted variance.
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    if (t > 1) tie_term += t * (t - 1.0) * (2.0 * t + 5.0);
    i = j;
  }
  const double nn = static_cast<double>(n);
  const double var_s = (nn * (nn - 1.0) * (2.0 * nn + 5.0) - tie_term) / 18.0;
  if (var_s <= 0.0) return 0.0;
  const double sd = std::sqrt(var_s);
  if (s_stat > 0) return (static_cast<double>(s_stat) - 1.0) / sd;
  if (s_stat < 0) return (static_cast<double>(s_stat) + 1.0) / sd;
  return 0.0;
}

namespace {

std::vector<double> ranks_of(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && x[idx[j]] == x[idx[i]]) ++j;
    const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j - 1)) + 1.0;
    for (std::size_t q = i; q < j; ++q) ranks[idx[q]] = avg;
    i = j;
  }
  return ranks;
}

}  // namespace

double spearman_rho(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw InvalidOptions("spearman needs two equal-length series of size >= 2");
  const std::vector<double> rx = ranks_of(x);
  const std::vector<double> ry = ranks_of(y);
  const std::size_t n = x.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw InvalidOptions("linear_fit needs two equal-length series of size >= 2");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  LinearFit fit;
  fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double pred = fit.slope * x[i] + fit.intercept;
    ss_res += (y[i] - pred) * (y[i] - pred);
  }
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

// ---------------------------------------------------------------------------
// transition curves
// ---------------------------------------------------------------------------

namespace {

ExperimentResult run_transition_impl(const ExperimentConfig& cfg, int workers, bool vs_k) {
  validate_common(cfg);
  const std::vector<Eigen::Index>& grid = vs_k ? cfg.k_grid : cfg.n_grid;
  if (grid.empty())
    throw InvalidOptions(vs_k ? "config: k_grid required" : "config: n_grid required");
  if (vs_k && cfg.n < 1) throw InvalidOptions("config: n required for transition_vs_k");
  for (Eigen::Index g : grid)
    if (g < 1 || (vs_k && g > cfg.p)) throw InvalidOptions("config: grid value out of range");

  const std::size_t num_est = cfg.estimators.size();
  std::vector<TrialRecord> records(grid.size() * static_cast<std::size_t>(cfg.m) * num_est);

  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    const Eigen::Index gval = grid[gi];
    const Eigen::Index n = vs_k ? cfg.n : gval;
    const Eigen::Index k = vs_k ? gval : cfg.k;
    const double t = threshold_for(cfg, k);
    // A fixed across the Monte Carlo loops at this grid point.
    Rng a_rng(mix_seed(mix_seed(cfg.seed, kTagDesign), static_cast<std::uint64_t>(gval)));
    const Eigen::MatrixXd A = sample_design(n, cfg.p, design_kind(cfg), a_rng);
    const PoissonLinearModel model =
        build_model(A, Eigen::VectorXd::Constant(n, cfg.lambda0));

    parallel_trials(cfg.m, workers, [&](long trial) {
      const std::uint64_t tseed = mix_seed(
          mix_seed(mix_seed(cfg.seed, kTagTrial), static_cast<std::uint64_t>(gval)),
          static_cast<std::uint64_t>(trial));
      Rng rng(mix_seed(tseed, kTagTruth));
      const GroundTruth truth = sample_ground_truth(cfg.p, k, cfg.s, rng);
      const ObservationSet obs = sample_observations(model, truth, mix_seed(tseed, kTagObs));
      for (std::size_t ei = 0; ei < num_est; ++ei) {
        TrialRecord& rec =
            records[(gi * static_cast<std::size_t>(cfg.m) + static_cast<std::size_t>(trial)) *
                        num_est +
                    ei];
        rec.trial = static_cast<long>(gi) * cfg.m + trial;
        rec.seed = tseed;
        fill_record(rec, cfg.estimators[ei], model, truth, obs, t, cfg);
      }
    });
  }

  ExperimentResult out;
  out.records_csv = kFitHeader;
  for (const auto& r : records) append_fit_row(out.records_csv, r);
  out.summary["experiment"] = vs_k ? "transition_vs_k" : "transition_vs_n";
  out.summary["curves"] = success_curve_summary(records, grid, cfg.estimators, cfg.m, vs_k);
  out.total_solve_seconds = total_runtime(records);
  return out;
}

}  // namespace

ExperimentResult run_transition_vs_n(const ExperimentConfig& cfg, int workers) {
  return run_transition_impl(cfg, workers, /*vs_k=*/false);
}

ExperimentResult run_transition_vs_k(const ExperimentConfig& cfg, int workers) {
  return run_transition_impl(cfg, workers, /*vs_k=*/true);
}

// ---------------------------------------------------------------------------
// ROC sweep
// ---------------------------------------------------------------------------

ExperimentResult run_roc(const ExperimentConfig& cfg, int workers) {
  validate_common(cfg);
  if (cfg.n < 1) throw InvalidOptions("config: n required for roc");
  if (cfg.num_thresholds < 2) throw InvalidOptions("config: num_thresholds must be >= 2");

  // Thresholds descend log-spaced from 1/k to 0.001/k.
  const double k_d = static_cast<double>(cfg.k);
  std::vector<double> thresholds(static_cast<std::size_t>(cfg.num_thresholds));
  for (int j = 0; j < cfg.num_thresholds; ++j) {
    const double frac = static_cast<double>(j) / static_cast<double>(cfg.num_thresholds - 1);
    thresholds[static_cast<std::size_t>(j)] = (1.0 / k_d) * std::pow(0.001, frac);
  }

  Rng a_rng(mix_seed(cfg.seed, kTagDesign));
  const Eigen::MatrixXd A = sample_design(cfg.n, cfg.p, design_kind(cfg), a_rng);
  const PoissonLinearModel model =
      build_model(A, Eigen::VectorXd::Constant(cfg.n, cfg.lambda0));

  const std::size_t num_est = cfg.estimators.size();
  const std::size_t rows_per_trial = num_est * thresholds.size();
  std::vector<TrialRecord> records(static_cast<std::size_t>(cfg.m) * rows_per_trial);

  parallel_trials(cfg.m, workers, [&](long trial) {
    const std::uint64_t tseed =
        mix_seed(mix_seed(cfg.seed, kTagTrial), static_cast<std::uint64_t>(trial));
    Rng rng(mix_seed(tseed, kTagTruth));
    const GroundTruth truth = sample_ground_truth(cfg.p, cfg.k, cfg.s, rng);
    const ObservationSet obs = sample_observations(model, truth, mix_seed(tseed, kTagObs));
    for (std::size_t ei = 0; ei < num_est; ++ei) {
      // Fit once, sweep all thresholds over the same estimate.
      Eigen::VectorXd w_hat;
      double runtime = 0.0;
      bool failed = false;
      const auto start = std::chrono::steady_clock::now();
      try {
        const FeasibilityBudget budget =
            FeasibilityBudget::constrained(cfg.budget_scale * truth.s);
        SolveOptions opts = cfg.solver;
        opts.seed = mix_seed(tseed, kTagTrial);
        w_hat = run_estimator(cfg.estimators[ei], model, obs, budget, opts).w_hat;
      } catch (const Error&) {
        failed = true;
      }
      runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      for (std::size_t ti = 0; ti < thresholds.size(); ++ti) {
        TrialRecord& rec =
            records[static_cast<std::size_t>(trial) * rows_per_trial + ei * thresholds.size() +
                    ti];
        rec.trial = trial;
        rec.seed = tseed;
        rec.estimator = cfg.estimators[ei];
        rec.n = cfg.n;
        rec.k = truth.k;
        rec.s = truth.s;
        rec.threshold = thresholds[ti];
        rec.runtime_sec = ti == 0 ? runtime : 0.0;
        if (failed) {
          rec.l2_error = std::numeric_limits<double>::quiet_NaN();
          continue;
        }
        rec.l2_error = (w_hat - truth.w_star).norm();
        const SupportMetrics m = support_metrics(w_hat, truth.w_star, thresholds[ti]);
        rec.support_success = m.success;
        rec.detections = static_cast<Eigen::Index>(
            std::llround(m.pd * static_cast<double>(truth.k)));
        rec.false_alarms = static_cast<Eigen::Index>(
            std::llround(m.pf * static_cast<double>(cfg.p - truth.k)));
      }
    }
  });

  ExperimentResult out;
  out.records_csv = kFitHeader;
  for (const auto& r : records) append_fit_row(out.records_csv, r);
  out.summary["experiment"] = "roc";
  nlohmann::json curves = nlohmann::json::object();
  for (const auto& est : cfg.estimators) {
    nlohmann::json points = nlohmann::json::array();
    for (double t : thresholds) {
      std::vector<double> pds;
      double pf_sum = 0.0;
      for (const auto& r : records) {
        if (r.estimator != est || r.threshold != t || std::isnan(r.l2_error)) continue;
        pds.push_back(static_cast<double>(r.detections) / static_cast<double>(r.k));
        pf_sum += static_cast<double>(r.false_alarms) / static_cast<double>(cfg.p - r.k);
      }
      const long count = static_cast<long>(pds.size());
      double pd_mean = 0.0;
      for (double v : pds) pd_mean += v;
      pd_mean = count ? pd_mean / count : 0.0;
      double pd_var = 0.0;
      for (double v : pds) pd_var += (v - pd_mean) * (v - pd_mean);
      const double pd_se =
          count > 1 ? std::sqrt(pd_var / static_cast<double>(count - 1) /
                                static_cast<double>(count))
                    : 0.0;
      nlohmann::json pt;
      pt["threshold"] = t;
      pt["pd_mean"] = pd_mean;
      pt["pd_stderr"] = pd_se;
      pt["pf_mean"] = count ? pf_sum / count : 0.0;
      pt["trials"] = count;
      points.push_back(pt);
    }
    curves[est] = points;
  }
  out.summary["curves"] = curves;
  out.total_solve_seconds = total_runtime(records);
  return out;
}

// ---------------------------------------------------------------------------
// Corollary-2 tightness scatter
// ---------------------------------------------------------------------------

ExperimentResult run_tightness(const ExperimentConfig& cfg, int workers) {
  validate_common(cfg);
  if (cfg.s_grid.empty() || cfg.n_grid.empty())
    throw InvalidOptions("config: tightness needs s_grid and n_grid");
  if (cfg.gamma_samples < 1) throw InvalidOptions("config: gamma_samples must be >= 1");

  struct Cell {
    double s = 0.0;
    Eigen::Index n = 0;
    std::vector<double> errors;
    std::vector<double> gammas;
  };
  std::vector<Cell> cells;
  for (double s : cfg.s_grid)
    for (Eigen::Index n : cfg.n_grid) {
      Cell c;
      c.s = s;
      c.n = n;
      c.errors.resize(static_cast<std::size_t>(cfg.m));
      c.gammas.resize(static_cast<std::size_t>(cfg.m));
      cells.push_back(std::move(c));
    }

  std::vector<TrialRecord> records(cells.size() * static_cast<std::size_t>(cfg.m));

  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    Cell& cell = cells[ci];
    parallel_trials(cfg.m, workers, [&](long trial) {
      const std::uint64_t tseed = mix_seed(
          mix_seed(mix_seed(cfg.seed, kTagTrial), static_cast<std::uint64_t>(ci)),
          static_cast<std::uint64_t>(trial));
      Rng rng(mix_seed(tseed, kTagDesign));
      const Eigen::MatrixXd A = sample_design(cell.n, cfg.p, design_kind(cfg), rng);
      const PoissonLinearModel model =
          build_model(A, Eigen::VectorXd::Constant(cell.n, cfg.lambda0));
      Rng trng(mix_seed(tseed, kTagTruth));
      const GroundTruth truth = sample_ground_truth(cfg.p, cfg.k, cell.s, trng);
      const ObservationSet obs = sample_observations(model, truth, mix_seed(tseed, kTagObs));

      TrialRecord& rec = records[ci * static_cast<std::size_t>(cfg.m) +
                                 static_cast<std::size_t>(trial)];
      rec.trial = static_cast<long>(ci) * cfg.m + trial;
      rec.seed = tseed;
      fill_record(rec, "ml", model, truth, obs, threshold_for(cfg, cfg.k), cfg);
      cell.errors[static_cast<std::size_t>(trial)] = rec.l2_error;
      cell.gammas[static_cast<std::size_t>(trial)] =
          estimate_gamma_k(A, cfg.k, cfg.gamma_samples, mix_seed(tseed, kTagGamma));
    });
  }

  ExperimentResult out;
  out.records_csv = kFitHeader;
  for (const auto& r : records) append_fit_row(out.records_csv, r);

  nlohmann::json cell_json = nlohmann::json::array();
  std::vector<double> xs, ys;  // bound -> mean error pairs for the regression
  for (const auto& cell : cells) {
    double err_mean = 0.0, gamma_mean = 0.0;
    for (double e : cell.errors) err_mean += e;
    for (double g : cell.gammas) gamma_mean += g;
    err_mean /= static_cast<double>(cfg.m);
    gamma_mean /= static_cast<double>(cfg.m);
    double err_sd = 0.0;
    for (double e : cell.errors) err_sd += (e - err_mean) * (e - err_mean);
    err_sd = cfg.m > 1 ? std::sqrt(err_sd / static_cast<double>(cfg.m - 1)) : 0.0;

    nlohmann::json c;
    c["s"] = cell.s;
    c["n"] = cell.n;
    c["mean_error"] = err_mean;
    c["stderr_error"] = cfg.m > 1 ? err_sd / std::sqrt(static_cast<double>(cfg.m)) : 0.0;
    c["mean_gamma"] = gamma_mean;
    // The bound degenerates at s <= 1 (log s <= 0): recorded but flagged.
    try {
      const ErrorBound b = corollary2_error_bound(cell.s, gamma_mean,
                                                  static_cast<double>(cell.n), cfg.lambda0);
      c["bound"] = b.error_bound;
      c["bound_degenerate"] = false;
      c["below_n_floor"] = b.below_floor;
      xs.push_back(b.error_bound);
      ys.push_back(err_mean);
    } catch (const DegenerateScale&) {
      c["bound"] = nullptr;
      c["bound_degenerate"] = true;
    }
    cell_json.push_back(c);
  }

  out.summary["experiment"] = "tightness";
  out.summary["cells"] = cell_json;
  if (xs.size() >= 2) {
    const LinearFit fit = linear_fit(xs, ys);
    out.summary["regression"] = {{"slope", fit.slope},
                                 {"intercept", fit.intercept},
                                 {"r_squared", fit.r_squared},
                                 {"num_cells", xs.size()}};
  }

  // Trend tests: error decreasing in n for each s, increasing in s for each n.
  nlohmann::json trends_n = nlohmann::json::array();
  for (double s : cfg.s_grid) {
    std::vector<double> series;
    for (const auto& cell : cells)
      if (cell.s == s) {
        double mean = 0.0;
        for (double e : cell.errors) mean += e;
        series.push_back(mean / static_cast<double>(cfg.m));
      }
    const double z = mann_kendall_z(series);
    trends_n.push_back({{"s", s}, {"z", z}, {"decreasing_at_0p05", z <= -1.645}});
  }
  out.summary["error_vs_n_trend_per_s"] = trends_n;
  nlohmann::json trends_s = nlohmann::json::array();
  for (Eigen::Index n : cfg.n_grid) {
    std::vector<double> series;
    for (double s : cfg.s_grid)
      for (const auto& cell : cells)
        if (cell.s == s && cell.n == n) {
          double mean = 0.0;
          for (double e : cell.errors) mean += e;
          series.push_back(mean / static_cast<double>(cfg.m));
        }
    const double z = mann_kendall_z(series);
    trends_s.push_back({{"n", n}, {"z", z}, {"increasing_at_0p05", z >= 1.645}});
  }
  out.summary["error_vs_s_trend_per_n"] = trends_s;
  out.total_solve_seconds = total_runtime(records);
  return out;
}

// ---------------------------------------------------------------------------
// beta_hat vs s (empirical likelihood-perturbation rate)
// ---------------------------------------------------------------------------

ExperimentResult run_beta_vs_s(const ExperimentConfig& cfg, int workers) {
  (void)workers;  // the sampler is a single sequential stream by design
  validate_common(cfg);
  if (cfg.s_grid.empty()) throw InvalidOptions("config: beta_vs_s needs s_grid");
  if (cfg.n < 1) throw InvalidOptions("config: n required for beta_vs_s");
  if (!(cfg.epsilon > 0.0)) throw InvalidOptions("config: epsilon must be > 0");
  if (cfg.beta_samples < 1) throw InvalidOptions("config: beta_samples must be >= 1");

  Rng a_rng(mix_seed(cfg.seed, kTagDesign));
  const Eigen::MatrixXd A = sample_design(cfg.n, cfg.p, design_kind(cfg), a_rng);
  const PoissonLinearModel model =
      build_model(A, Eigen::VectorXd::Constant(cfg.n, cfg.lambda0));

  // One fixed support/magnitude pattern rescaled to each s, and one shared
  // direction stream (same seed per point): with those pinned, the perturbation
  // value decreases pointwise in s and the feasible set grows, so the decrease
  // of beta_hat across s reflects the model, not sampling noise.
  Rng t_rng(mix_seed(cfg.seed, kTagTruth));
  const GroundTruth base = sample_ground_truth(cfg.p, cfg.k, 1.0, t_rng);

  std::string csv =
      "s,epsilon,requested_samples,accepted_samples,acceptance_ratio,delta_hat,beta_hat,"
      "gamma_min\n";
  nlohmann::json points = nlohmann::json::array();
  std::vector<double> betas;
  for (double s : cfg.s_grid) {
    const GroundTruth truth = make_ground_truth(base.w_star * s);
    const ConditionEstimate est = estimate_beta_sk(model, truth, cfg.epsilon,
                                                   cfg.beta_samples,
                                                   mix_seed(cfg.seed, kTagBeta));
    csv += fmt(s);
    csv += ',';
    csv += fmt(est.epsilon);
    csv += ',';
    csv += std::to_string(est.num_samples);
    csv += ',';
    csv += std::to_string(est.accepted_samples);
    csv += ',';
    csv += fmt(est.acceptance_ratio);
    csv += ',';
    csv += fmt(est.delta_sk);
    csv += ',';
    csv += fmt(est.beta_sk);
    csv += ',';
    csv += fmt(est.gamma_k);
    csv += '\n';
    points.push_back({{"s", s},
                      {"beta_hat", est.beta_sk},
                      {"delta_hat", est.delta_sk},
                      {"acceptance_ratio", est.acceptance_ratio},
                      {"accepted_samples", est.accepted_samples}});
    betas.push_back(est.beta_sk);
  }

  ExperimentResult out;
  out.records_csv = std::move(csv);
  out.summary["experiment"] = "beta_vs_s";
  out.summary["points"] = points;
  bool strict = true;
  for (std::size_t i = 0; i + 1 < betas.size(); ++i)
    if (!(betas[i + 1] < betas[i])) strict = false;
  out.summary["strictly_decreasing"] = strict;
  if (betas.size() >= 2) {
    std::vector<double> s_vals(cfg.s_grid.begin(), cfg.s_grid.end());
    out.summary["spearman_rho"] = spearman_rho(s_vals, betas);
  }
  return out;
}

// ---------------------------------------------------------------------------
// concentration decay
// ---------------------------------------------------------------------------

ExperimentResult run_concentration(const ExperimentConfig& cfg, int workers) {
  (void)workers;  // a single scan is already O(trials * probes * n_max)
  validate_common(cfg);
  if (cfg.n_grid.empty()) throw InvalidOptions("config: concentration needs n_grid");
  if (cfg.delta < 0.0) throw InvalidOptions("config: delta must be >= 0");
  for (std::size_t i = 0; i + 1 < cfg.n_grid.size(); ++i)
    if (cfg.n_grid[i + 1] <= cfg.n_grid[i])
      throw InvalidOptions("config: n_grid must be strictly ascending");

  const Eigen::Index n_max = cfg.n_grid.back();
  Rng a_rng(mix_seed(cfg.seed, kTagDesign));
  const Eigen::MatrixXd A = sample_design(n_max, cfg.p, design_kind(cfg), a_rng);
  const PoissonLinearModel model =
      build_model(A, Eigen::VectorXd::Constant(n_max, cfg.lambda0));
  Rng t_rng(mix_seed(cfg.seed, kTagTruth));
  const GroundTruth truth = sample_ground_truth(cfg.p, cfg.k, cfg.s, t_rng);

  std::vector<Eigen::VectorXd> probes;
  probes.push_back(truth.w_star);
  Rng p_rng(mix_seed(cfg.seed, kTagProbe));
  for (long q = 0; q < cfg.num_probes; ++q) {
    Eigen::VectorXd z(cfg.p);
    for (Eigen::Index j = 0; j < cfg.p; ++j) z(j) = p_rng.uniform();
    probes.push_back(z * (truth.s * p_rng.uniform() / std::max(z.sum(), 1e-300)));
  }

  std::vector<std::vector<double>> per_trial;
  const auto curve = empirical_concentration(model, truth, cfg.m, probes,
                                             mix_seed(cfg.seed, kTagTrial), cfg.n_grid,
                                             cfg.delta, &per_trial);

  std::string csv = "trial,n,max_abs_dev,exceeded\n";
  for (long trial = 0; trial < cfg.m; ++trial)
    for (std::size_t gi = 0; gi < cfg.n_grid.size(); ++gi) {
      const double dev = per_trial[gi][static_cast<std::size_t>(trial)];
      csv += std::to_string(trial);
      csv += ',';
      csv += std::to_string(cfg.n_grid[gi]);
      csv += ',';
      csv += fmt(dev);
      csv += ',';
      csv += (dev >= cfg.delta / 2.0) ? '1' : '0';
      csv += '\n';
    }

  ExperimentResult out;
  out.records_csv = std::move(csv);
  out.summary["experiment"] = "concentration";
  out.summary["delta"] = cfg.delta;
  out.summary["num_probes"] = probes.size();
  nlohmann::json pts = nlohmann::json::array();
  bool non_increasing = true;
  const double noise = 2.0 / std::sqrt(static_cast<double>(cfg.m));
  for (std::size_t gi = 0; gi < curve.size(); ++gi) {
    pts.push_back({{"n", curve[gi].first}, {"exceedance", curve[gi].second}});
    if (gi > 0 && curve[gi].second > curve[gi - 1].second + noise) non_increasing = false;
  }
  out.summary["curve"] = pts;
  out.summary["non_increasing_within_noise"] = non_increasing;
  return out;
}

// ---------------------------------------------------------------------------
// model comparison (Bayes factor + held-out likelihoods)
// ---------------------------------------------------------------------------

ExperimentResult run_model_comparison(const ExperimentConfig& cfg, int workers) {
  validate_common(cfg);
  if (cfg.n < 1) throw InvalidOptions("config: n required for model_comparison");
  std::vector<Eigen::Index> k_grid = cfg.k_grid;
  if (k_grid.empty()) {
    for (Eigen::Index kk = 1; kk <= std::min<Eigen::Index>(2 * cfg.k, cfg.p); ++kk)
      k_grid.push_back(kk);
  }

  struct TrialOut {
    TrialRecord fits[2];
    std::vector<double> log_bf;  // one per k in k_grid
    double heldout_ml = 0.0;
    double heldout_lasso = 0.0;
    bool failed = false;
  };
  std::vector<TrialOut> outs(static_cast<std::size_t>(cfg.m));

  parallel_trials(cfg.m, workers, [&](long trial) {
    TrialOut& to = outs[static_cast<std::size_t>(trial)];
    to.log_bf.assign(k_grid.size(), std::numeric_limits<double>::quiet_NaN());
    const std::uint64_t tseed =
        mix_seed(mix_seed(cfg.seed, kTagTrial), static_cast<std::uint64_t>(trial));
    Rng rng(mix_seed(tseed, kTagDesign));
    const Eigen::MatrixXd A = sample_design(cfg.n, cfg.p, design_kind(cfg), rng);
    const PoissonLinearModel model =
        build_model(A, Eigen::VectorXd::Constant(cfg.n, cfg.lambda0));
    Rng trng(mix_seed(tseed, kTagTruth));
    const GroundTruth truth = sample_ground_truth(cfg.p, cfg.k, cfg.s, trng);
    const ObservationSet obs = sample_observations(model, truth, mix_seed(tseed, kTagObs));

    // Full-data fits drive the Bayes-factor series.
    to.fits[0].trial = trial;
    to.fits[0].seed = tseed;
    fill_record(to.fits[0], "ml", model, truth, obs, threshold_for(cfg, cfg.k), cfg);
    to.fits[1].trial = trial;
    to.fits[1].seed = tseed;
    fill_record(to.fits[1], "rescaled_lasso", model, truth, obs, threshold_for(cfg, cfg.k),
                cfg);

    try {
      const FeasibilityBudget budget =
          FeasibilityBudget::constrained(cfg.budget_scale * truth.s);
      SolveOptions opts = cfg.solver;
      opts.seed = mix_seed(tseed, kTagTrial);
      const Eigen::VectorXd w_ml = solve_ml(model, obs, budget, opts).w_hat;
      const Eigen::VectorXd w_ls = solve_rescaled_lasso(model, obs, budget, opts).w_hat;
      for (std::size_t ki = 0; ki < k_grid.size(); ++ki) {
        const Eigen::VectorXd w_ml_k = keep_top_k(w_ml, k_grid[ki]);
        const Eigen::VectorXd w_ls_k = keep_top_k(w_ls, k_grid[ki]);
        to.log_bf[ki] = log_bayes_factor(model, obs, w_ml_k, w_ls_k);
      }

      // Single held-out comparison: fit on a seeded 80/20 split.
      std::vector<std::size_t> perm;
      Rng srng(mix_seed(tseed, kTagSplit));
      srng.sample_indices(static_cast<std::size_t>(cfg.n), static_cast<std::size_t>(cfg.n),
                          perm);
      const Eigen::Index n_test = std::max<Eigen::Index>(
          1, static_cast<Eigen::Index>(std::llround(cfg.heldout_fraction *
                                                    static_cast<double>(cfg.n))));
      std::vector<Eigen::Index> test_rows, train_rows;
      for (std::size_t i = 0; i < perm.size(); ++i) {
        if (static_cast<Eigen::Index>(i) < n_test)
          test_rows.push_back(static_cast<Eigen::Index>(perm[i]));
        else
          train_rows.push_back(static_cast<Eigen::Index>(perm[i]));
      }
      std::sort(test_rows.begin(), test_rows.end());
      std::sort(train_rows.begin(), train_rows.end());
      const PoissonLinearModel model_train = subset_rows(model, train_rows);
      const PoissonLinearModel model_test = subset_rows(model, test_rows);
      const ObservationSet obs_train = subset_obs(obs, train_rows);
      const ObservationSet obs_test = subset_obs(obs, test_rows);
      const Eigen::VectorXd w_ml_tr = solve_ml(model_train, obs_train, budget, opts).w_hat;
      const Eigen::VectorXd w_ls_tr =
          solve_rescaled_lasso(model_train, obs_train, budget, opts).w_hat;
      to.heldout_ml = heldout_loglik_ml(model_test, obs_test, w_ml_tr);
      to.heldout_lasso = heldout_loglik_lasso(model_test, obs_test, w_ls_tr);
    } catch (const Error&) {
      to.failed = true;
    }
  });

  ExperimentResult out;
  out.records_csv = kFitHeader;
  for (const auto& to : outs)
    for (const auto& rec : to.fits) append_fit_row(out.records_csv, rec);

  std::string extra = "trial,k,log_bf,heldout_ml,heldout_lasso\n";
  for (long trial = 0; trial < cfg.m; ++trial) {
    const TrialOut& to = outs[static_cast<std::size_t>(trial)];
    for (std::size_t ki = 0; ki < k_grid.size(); ++ki) {
      extra += std::to_string(trial);
      extra += ',';
      extra += std::to_string(k_grid[ki]);
      extra += ',';
      extra += fmt(to.log_bf[ki]);
      extra += ',';
      extra += fmt(to.heldout_ml);
      extra += ',';
      extra += fmt(to.heldout_lasso);
      extra += '\n';
    }
  }
  out.extra_csv = std::move(extra);

  // Summary: BF curve over k, held-out wins, large-count diagnostic.
  nlohmann::json bf_curve = nlohmann::json::array();
  for (std::size_t ki = 0; ki < k_grid.size(); ++ki) {
    double mean = 0.0;
    long count = 0;
    for (const auto& to : outs)
      if (!to.failed && !std::isnan(to.log_bf[ki])) {
        mean += to.log_bf[ki];
        ++count;
      }
    mean = count ? mean / count : 0.0;
    double sd = 0.0;
    for (const auto& to : outs)
      if (!to.failed && !std::isnan(to.log_bf[ki])) sd += (to.log_bf[ki] - mean) * (to.log_bf[ki] - mean);
    sd = count > 1 ? std::sqrt(sd / static_cast<double>(count - 1)) : 0.0;
    bf_curve.push_back({{"k", k_grid[ki]},
                        {"mean_log_bf", mean},
                        {"stderr_log_bf", count > 1 ? sd / std::sqrt(static_cast<double>(count)) : 0.0},
                        {"trials", count}});
  }
  long wins = 0, valid = 0;
  double ml_mean = 0.0, ls_mean = 0.0;
  for (const auto& to : outs) {
    if (to.failed) continue;
    ++valid;
    if (to.heldout_ml > to.heldout_lasso) ++wins;
    ml_mean += to.heldout_ml;
    ls_mean += to.heldout_lasso;
  }
  double bf_true_k_mean = 0.0, bf_true_k_abs_mean = 0.0;
  long bf_true_count = 0;
  for (std::size_t ki = 0; ki < k_grid.size(); ++ki) {
    if (k_grid[ki] != cfg.k) continue;
    for (const auto& to : outs)
      if (!to.failed && !std::isnan(to.log_bf[ki])) {
        bf_true_k_mean += to.log_bf[ki];
        bf_true_k_abs_mean += std::abs(to.log_bf[ki]);
        ++bf_true_count;
      }
  }
  out.summary["experiment"] = "model_comparison";
  out.summary["bf_curve"] = bf_curve;
  out.summary["heldout"] = {
      {"trials", valid},
      {"ml_wins", wins},
      {"win_fraction", valid ? static_cast<double>(wins) / valid : 0.0},
      {"mean_heldout_ml", valid ? ml_mean / valid : 0.0},
      {"mean_heldout_lasso", valid ? ls_mean / valid : 0.0}};
  if (bf_true_count > 0) {
    out.summary["log_bf_at_true_k"] = {
        {"mean", bf_true_k_mean / bf_true_count},
        {"mean_abs_per_row",
         bf_true_k_abs_mean / bf_true_count / static_cast<double>(cfg.n)},
        {"trials", bf_true_count}};
  }
  double solve_total = 0.0;
  for (const auto& to : outs) solve_total += to.fits[0].runtime_sec + to.fits[1].runtime_sec;
  out.total_solve_seconds = solve_total;
  return out;
}

// ---------------------------------------------------------------------------
// dispatch + config (de)serialization
// ---------------------------------------------------------------------------

ExperimentResult run_experiment(const ExperimentConfig& cfg, int workers) {
  if (cfg.name == "transition_vs_n") return run_transition_vs_n(cfg, workers);
  if (cfg.name == "transition_vs_k") return run_transition_vs_k(cfg, workers);
  if (cfg.name == "roc") return run_roc(cfg, workers);
  if (cfg.name == "tightness") return run_tightness(cfg, workers);
  if (cfg.name == "beta_vs_s") return run_beta_vs_s(cfg, workers);
  if (cfg.name == "concentration") return run_concentration(cfg, workers);
  if (cfg.name == "model_comparison") return run_model_comparison(cfg, workers);
  throw InvalidOptions("unknown experiment name: " + cfg.name);
}

namespace {

const std::set<std::string>& known_config_keys() {
  static const std::set<std::string> keys = {
      "name",         "p",           "k",
      "s",            "lambda0",     "n",
      "m",            "seed",        "design",
      "estimators",   "n_grid",      "k_grid",
      "s_grid",       "threshold",   "threshold_rule",
      "threshold_c",  "num_thresholds", "solver",
      "gamma_samples", "beta_samples", "epsilon",
      "delta",        "num_probes",  "heldout_fraction",
      "budget_scale"};
  return keys;
}

const std::set<std::string>& known_solver_keys() {
  static const std::set<std::string> keys = {"tolerance", "max_iters", "restarts"};
  return keys;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidOptions("config: expected a JSON object");
  for (const auto& item : j.items())
    if (!known_config_keys().count(item.key()))
      throw InvalidOptions("config: unknown key \"" + item.key() + "\"");
  ExperimentConfig c;
  if (!j.contains("name")) throw InvalidOptions("config: \"name\" is required");
  c.name = j.at("name").get<std::string>();
  if (j.contains("p")) c.p = j.at("p").get<Eigen::Index>();
  if (j.contains("k")) c.k = j.at("k").get<Eigen::Index>();
  if (j.contains("s")) c.s = j.at("s").get<double>();
  if (j.contains("lambda0")) c.lambda0 = j.at("lambda0").get<double>();
  if (j.contains("n")) c.n = j.at("n").get<Eigen::Index>();
  if (j.contains("m")) c.m = j.at("m").get<long>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("design")) c.design = j.at("design").get<std::string>();
  if (j.contains("estimators"))
    c.estimators = j.at("estimators").get<std::vector<std::string>>();
  if (j.contains("n_grid")) c.n_grid = j.at("n_grid").get<std::vector<Eigen::Index>>();
  if (j.contains("k_grid")) c.k_grid = j.at("k_grid").get<std::vector<Eigen::Index>>();
  if (j.contains("s_grid")) c.s_grid = j.at("s_grid").get<std::vector<double>>();
  if (j.contains("threshold")) c.threshold = j.at("threshold").get<double>();
  if (j.contains("threshold_rule"))
    c.threshold_rule = j.at("threshold_rule").get<std::string>();
  if (j.contains("threshold_c")) c.threshold_c = j.at("threshold_c").get<double>();
  if (j.contains("num_thresholds")) c.num_thresholds = j.at("num_thresholds").get<int>();
  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    if (!s.is_object()) throw InvalidOptions("config: \"solver\" must be an object");
    for (const auto& item : s.items())
      if (!known_solver_keys().count(item.key()))
        throw InvalidOptions("config: unknown solver key \"" + item.key() + "\"");
    if (s.contains("tolerance")) c.solver.tolerance = s.at("tolerance").get<double>();
    if (s.contains("max_iters")) c.solver.max_iters = s.at("max_iters").get<long>();
    if (s.contains("restarts")) c.solver.restarts = s.at("restarts").get<int>();
  }
  if (j.contains("gamma_samples")) c.gamma_samples = j.at("gamma_samples").get<long>();
  if (j.contains("beta_samples")) c.beta_samples = j.at("beta_samples").get<long>();
  if (j.contains("epsilon")) c.epsilon = j.at("epsilon").get<double>();
  if (j.contains("delta")) c.delta = j.at("delta").get<double>();
  if (j.contains("num_probes")) c.num_probes = j.at("num_probes").get<long>();
  if (j.contains("heldout_fraction"))
    c.heldout_fraction = j.at("heldout_fraction").get<double>();
  if (j.contains("budget_scale")) c.budget_scale = j.at("budget_scale").get<double>();
  return c;
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["name"] = name;
  j["p"] = p;
  j["k"] = k;
  j["s"] = s;
  j["lambda0"] = lambda0;
  j["n"] = n;
  j["m"] = m;
  j["seed"] = seed;
  j["design"] = design;
  j["estimators"] = estimators;
  j["n_grid"] = n_grid;
  j["k_grid"] = k_grid;
  j["s_grid"] = s_grid;
  j["threshold"] = threshold;
  j["threshold_rule"] = threshold_rule;
  j["threshold_c"] = threshold_c;
  j["num_thresholds"] = num_thresholds;
  j["solver"] = {{"tolerance", solver.tolerance},
                 {"max_iters", solver.max_iters},
                 {"restarts", solver.restarts}};
  j["gamma_samples"] = gamma_samples;
  j["beta_samples"] = beta_samples;
  j["epsilon"] = epsilon;
  j["delta"] = delta;
  j["num_probes"] = num_probes;
  j["heldout_fraction"] = heldout_fraction;
  j["budget_scale"] = budget_scale;
  return j;
}

}  // namespace psr
