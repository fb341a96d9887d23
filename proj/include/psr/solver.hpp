#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "psr/model.hpp"

namespace psr {

// Constraint handle: either the set Theta_s = {w >= 0, sum w <= s} or the
// penalized form with weight eta_s on sum w (plus w >= 0).
struct FeasibilityBudget {
  enum class Mode { kConstrained, kPenalized };
  Mode mode = Mode::kConstrained;
  double s = 1.0;    // constrained mode
  double eta = 0.0;  // penalized mode

  static FeasibilityBudget constrained(double s);
  static FeasibilityBudget penalized(double eta);
};

struct SolveOptions {
  double tolerance = 1e-8;
  long max_iters = 50000;
  std::uint64_t seed = 0;  // randomized restarts only
  int restarts = 5;        // rescaled lasso; restart 0 always starts at w = 0
  bool keep_trace = false;
};

struct SolveResult {
  Eigen::VectorXd w_hat;
  double objective = 0.0;
  long iterations = 0;
  bool converged = false;
  std::vector<double> trace;  // accepted objective per iteration (monotone)
};

// Euclidean projection onto Theta_s: w = max(v - theta, 0) with theta = 0
// when sum(max(v,0)) <= s, else the unique positive root of
// sum(max(v - theta, 0)) = s (exact sort-based algorithm).
Eigen::VectorXd project_theta_s(const Eigen::VectorXd& v, double s);

// Accelerated projected gradient (monotone FISTA variant with backtracking)
// on the Poisson negative log-likelihood Q.
SolveResult solve_ml(const PoissonLinearModel& model, const ObservationSet& obs,
                     const FeasibilityBudget& budget, const SolveOptions& opts = {});

// Same scheme on the rescaled quadratic loss, with opts.restarts seeded
// starts (best objective wins).
SolveResult solve_rescaled_lasso(const PoissonLinearModel& model, const ObservationSet& obs,
                                 const FeasibilityBudget& budget, const SolveOptions& opts = {});

// Zero out entries < t; returns the thresholded vector and surviving indices.
std::pair<Eigen::VectorXd, std::vector<Eigen::Index>> threshold_support(
    const Eigen::VectorXd& w, double t);

}  // namespace psr
