#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "psr/model.hpp"

namespace psr {

// Direction in the cone C(S) = { u : ||u_{S^c}||_1 <= ||u_S||_1 }.
struct ConeDirection {
  Eigen::VectorXd u;             // unit l2 norm
  std::vector<Eigen::Index> S;  // |S| <= k
};

struct ConditionEstimate {
  double gamma_k = 0.0;
  double beta_sk = 0.0;
  double delta_sk = 0.0;
  long num_samples = 0;      // requested sample count
  long accepted_samples = 0; // feasible directions actually used
  double acceptance_ratio = 0.0;
  std::uint64_t seed = 0;
  double epsilon = 0.0;
};

// Random support of size k; u_S symmetric Gaussian; u_{S^c} rescaled so
// ||u_{S^c}||_1 = rho * ||u_S||_1 with rho ~ U[0,1]; ||u||_2 = 1.
ConeDirection sample_cone_direction(Eigen::Index p, Eigen::Index k, std::uint64_t seed);

// min over sampled unit cone directions (plus all singletons e_j) of
// (1/n) ||A u||_2^2. An upper bound on the true restricted eigenvalue; exact
// verification is NP-hard. Samples are drawn from nested child streams, so a
// larger num_samples never increases the estimate for the same seed.
double estimate_gamma_k(const Eigen::MatrixXd& A, Eigen::Index k, long num_samples,
                        std::uint64_t seed);

// f(eps*u) = Qbar(w* + eps*u) - Qbar(w*)
//          = (1/n) sum_i [ -lambda*_i log(1 + eps a_i^T u / lambda*_i)
//                          + eps a_i^T u ]  >= 0.
// Throws InfeasiblePerturbation when w* + eps*u leaves Theta_s (s = ||w*||_1)
// or the nonnegative orthant beyond round-off (tiny violations are clipped).
double qbar_perturbation(const PoissonLinearModel& model, const GroundTruth& truth,
                         const ConeDirection& dir, double epsilon);

// Feasible perturbation sampler shared by the beta estimator and the
// Theorem-2 chain check. Directions are anchored at S = supp(w*): off-support
// entries must be nonnegative for w* + eps*u to stay in the orthant, and the
// budget requires sum(u) <= 0 since ||w*||_1 = s exactly. Feasible singleton
// directions -e_j (j in S, w*_j >= eps) are always included first. Rejection
// caps at 100 * num_samples attempts.
std::vector<ConeDirection> sample_feasible_perturbations(const PoissonLinearModel& model,
                                                         const GroundTruth& truth,
                                                         double epsilon, long num_samples,
                                                         std::uint64_t seed,
                                                         double* acceptance_ratio = nullptr,
                                                         long* accepted = nullptr);

// delta_hat = min over feasible sampled perturbations of f(eps*u);
// beta_hat = delta_hat / eps^2. Also reports gamma over the same directions.
ConditionEstimate estimate_beta_sk(const PoissonLinearModel& model, const GroundTruth& truth,
                                   double epsilon, long num_samples, std::uint64_t seed);

struct Theorem2ChainReport {
  long checked = 0;        // sampled feasible perturbations evaluated
  long passed = 0;         // f(eps u) >= gamma_hat eps^2 / (9 lambda_max) - 1e-10
  double min_margin = 0.0; // min of f - bound over samples
  long cone_checked = 0;   // random w in Theta_s with u = w - w*
  long cone_passed = 0;    // ||u_{S^c}||_1 <= ||u_S||_1 held
  double gamma_hat = 0.0;  // min (1/n)||Au||^2 over the same directions
  double lambda_max = 0.0; // worst-case rate bound lambda0_max + s * a_max
  double epsilon = 0.0;
};

// Checks the likelihood-perturbation chain f(eps*u) >= gamma_hat * eps^2 /
// (9 * lambda_max) over sampled feasible perturbations, with lambda_max the
// worst-case rate bound over Theta_s, plus the descent-cone membership of
// u = w - w* for random feasible w.
Theorem2ChainReport verify_theorem2_chain(const PoissonLinearModel& model,
                                          const GroundTruth& truth, long samples,
                                          std::uint64_t seed, double epsilon);

// Monte Carlo estimate of P( max over probes |Q - Qbar| >= delta/2 ) for each
// n in n_grid (prefixes of the given model; n_grid entries <= model.n()).
// Observations are resampled per trial; the n-grid reuses each trial's draw
// over nested row prefixes. When per_trial_max is given it receives, for each
// grid point, the per-trial max-over-probes deviations.
std::vector<std::pair<Eigen::Index, double>> empirical_concentration(
    const PoissonLinearModel& model, const GroundTruth& truth, long num_trials,
    const std::vector<Eigen::VectorXd>& probe_points, std::uint64_t seed,
    const std::vector<Eigen::Index>& n_grid, double delta,
    std::vector<std::vector<double>>* per_trial_max = nullptr);

}  // namespace psr
