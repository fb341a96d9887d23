#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>

#include "psr/model.hpp"

namespace psr {

struct ObjectiveEval {
  double value = 0.0;
  std::optional<Eigen::VectorXd> gradient;
};

struct ModelComparisonReport {
  double log_bayes_factor = 0.0;
  double heldout_loglik_ml = 0.0;
  double heldout_loglik_lasso = 0.0;
  Eigen::Index sparsity_level_k = 0;
};

// Normalized Poisson negative log-likelihood (constants dropped):
//   Q(w) = -(1/n) sum_i [ y_i log(lambda0_i + a_i^T w) - a_i^T w ]
// gradient_j = (1/n) sum_i a_ij (1 - y_i / lambda_i(w)).
ObjectiveEval q_value_grad(const PoissonLinearModel& model, const ObservationSet& obs,
                           const Eigen::VectorXd& w, bool want_gradient = true);

// Expectation of Q under the ground-truth rates (y_i replaced by lambda*_i).
double qbar_value(const PoissonLinearModel& model, const GroundTruth& truth,
                  const Eigen::VectorXd& w);

// Variance-rescaled least squares:
//   (1/n) sum_i (y_i - lambda_i(w))^2 / lambda_i(w)
ObjectiveEval rescaled_lasso_value_grad(const PoissonLinearModel& model,
                                        const ObservationSet& obs, const Eigen::VectorXd& w,
                                        bool want_gradient = true);

// log of the standard Gaussian upper-tail probability P(Z > x); stable for
// |x| up to several hundred (erfc below 8, Mills-ratio continued fraction
// above).
double log_gauss_upper(double x);

// Integer-bucketed Gaussian restricted to y >= 0:
//   pmf(y) = [Qg((y-mu)/sigma) - Qg((y+1-mu)/sigma)] / Qg(-mu/sigma)
// where Qg is the Gaussian upper tail. Sums to 1 over y = 0,1,2,...
double discretized_gaussian_pmf(std::int64_t y, double mu, double sigma);
double discretized_gaussian_log_pmf(std::int64_t y, double mu, double sigma);

// Exact Poisson log-likelihood (including log y! terms) of held-out counts
// under rates lambda0 + A w_hat.
double heldout_loglik_ml(const PoissonLinearModel& model_test, const ObservationSet& y_test,
                         const Eigen::VectorXd& w_hat);

// Discretized-Gaussian log-likelihood with mu_i = lambda_i(w_hat) and
// sigma_i = sqrt(mu_i).
double heldout_loglik_lasso(const PoissonLinearModel& model_test, const ObservationSet& y_test,
                            const Eigen::VectorXd& w_hat);

// log BF = Poisson loglik under w_ml_k minus discretized-Gaussian loglik
// under w_lasso_k, both over the same observations. Zero rows -> 0.
double log_bayes_factor(const PoissonLinearModel& model, const ObservationSet& obs,
                        const Eigen::VectorXd& w_ml_k, const Eigen::VectorXd& w_lasso_k);

}  // namespace psr
