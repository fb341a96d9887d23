#include "psr/likelihood.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "psr/errors.hpp"

namespace psr {

namespace {

// Shared rate computation with the positivity guard the objectives need.
Eigen::VectorXd positive_rates(const PoissonLinearModel& model, const Eigen::VectorXd& w) {
  if (w.size() != model.p()) throw DimensionMismatch("w length does not match model p");
  Eigen::VectorXd lam = model.lambda0 + model.A * w;
  if ((lam.array() <= 0.0).any()) throw NonPositiveRate("rate <= 0 at evaluation point");
  return lam;
}

}  // namespace

ObjectiveEval q_value_grad(const PoissonLinearModel& model, const ObservationSet& obs,
                           const Eigen::VectorXd& w, bool want_gradient) {
  if (obs.y.size() != model.n()) throw DimensionMismatch("y length does not match model n");
  const Eigen::VectorXd lam = positive_rates(model, w);
  const double n = static_cast<double>(model.n());
  const Eigen::VectorXd aw = lam - model.lambda0;  // A w
  ObjectiveEval out;
  out.value = -(obs.y.array() * lam.array().log() - aw.array()).sum() / n;
  if (want_gradient) {
    const Eigen::VectorXd scale = (1.0 - (obs.y.array() / lam.array())).matrix();
    out.gradient = (model.A.transpose() * scale) / n;
  }
  return out;
}

double qbar_value(const PoissonLinearModel& model, const GroundTruth& truth,
                  const Eigen::VectorXd& w) {
  const Eigen::VectorXd lam_star = positive_rates(model, truth.w_star);
  const Eigen::VectorXd lam = positive_rates(model, w);
  const double n = static_cast<double>(model.n());
  const Eigen::VectorXd aw = lam - model.lambda0;
  return -(lam_star.array() * lam.array().log() - aw.array()).sum() / n;
}

ObjectiveEval rescaled_lasso_value_grad(const PoissonLinearModel& model,
                                        const ObservationSet& obs, const Eigen::VectorXd& w,
                                        bool want_gradient) {
  if (obs.y.size() != model.n()) throw DimensionMismatch("y length does not match model n");
  const Eigen::VectorXd lam = positive_rates(model, w);
  const double n = static_cast<double>(model.n());
  const Eigen::ArrayXd r = obs.y.array() - lam.array();
  ObjectiveEval out;
  out.value = (r.square() / lam.array()).sum() / n;
  if (want_gradient) {
    // d/dw_j of r_i^2/lam_i with dlam_i/dw_j = a_ij:
    //   (-2 r_i lam_i - r_i^2) a_ij / lam_i^2
    const Eigen::VectorXd scale =
        (-(r * (2.0 * lam.array() + r)) / lam.array().square()).matrix();
    out.gradient = (model.A.transpose() * scale) / n;
  }
  return out;
}

double log_gauss_upper(double x) {
  constexpr double kHalfLog2Pi = 0.9189385332046727;  // log(2*pi)/2
  if (x < 8.0) {
    return std::log(0.5 * std::erfc(x / std::numbers::sqrt2));
  }
  // Mills-ratio continued fraction: Q(x) = phi(x) / (x + 1/(x + 2/(x + ...)))
  double cf = 0.0;
  for (int k = 64; k >= 1; --k) cf = static_cast<double>(k) / (x + cf);
  return -0.5 * x * x - kHalfLog2Pi - std::log(x + cf);
}

namespace {

// log(exp(la) - exp(lb)) for la > lb, accurate when the two are close.
double log_diff_exp(double la, double lb) {
  return la + std::log(-std::expm1(lb - la));
}

}  // namespace

double discretized_gaussian_log_pmf(std::int64_t y, double mu, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidSigma("sigma must be positive");
  if (y < 0) return -std::numeric_limits<double>::infinity();
  const double za = (static_cast<double>(y) - mu) / sigma;
  const double zb = (static_cast<double>(y + 1) - mu) / sigma;
  double log_num;
  if (za >= 0.0) {
    log_num = log_diff_exp(log_gauss_upper(za), log_gauss_upper(zb));
  } else if (zb <= 0.0) {
    // Reflect to the lower tail: Qg(za) - Qg(zb) = Qg(-zb) - Qg(-za).
    log_num = log_diff_exp(log_gauss_upper(-zb), log_gauss_upper(-za));
  } else {
    // Bucket straddles the mean; the mass is large, and the two erf terms
    // have opposite signs so there is no cancellation.
    const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
    const double mass = 0.5 * (std::erf(zb * inv_sqrt2) - std::erf(za * inv_sqrt2));
    log_num = std::log(mass);
  }
  return log_num - log_gauss_upper(-mu / sigma);
}

double discretized_gaussian_pmf(std::int64_t y, double mu, double sigma) {
  const double lp = discretized_gaussian_log_pmf(y, mu, sigma);
  return std::exp(lp);
}

double heldout_loglik_ml(const PoissonLinearModel& model_test, const ObservationSet& y_test,
                         const Eigen::VectorXd& w_hat) {
  if (y_test.y.size() == 0) return 0.0;
  if (y_test.y.size() != model_test.n())
    throw DimensionMismatch("held-out y length does not match model n");
  const Eigen::VectorXd lam = positive_rates(model_test, w_hat);
  double total = 0.0;
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    const double y = y_test.y(i);
    total += y * std::log(lam(i)) - lam(i) - std::lgamma(y + 1.0);
  }
  return total;
}

double heldout_loglik_lasso(const PoissonLinearModel& model_test, const ObservationSet& y_test,
                            const Eigen::VectorXd& w_hat) {
  if (y_test.y.size() == 0) return 0.0;
  if (y_test.y.size() != model_test.n())
    throw DimensionMismatch("held-out y length does not match model n");
  const Eigen::VectorXd lam = positive_rates(model_test, w_hat);
  double total = 0.0;
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    const double mu = lam(i);
    total += discretized_gaussian_log_pmf(static_cast<std::int64_t>(y_test.y(i)), mu,
                                          std::sqrt(mu));
  }
  return total;
}

double log_bayes_factor(const PoissonLinearModel& model, const ObservationSet& obs,
                        const Eigen::VectorXd& w_ml_k, const Eigen::VectorXd& w_lasso_k) {
  if (obs.y.size() == 0) return 0.0;
  return heldout_loglik_ml(model, obs, w_ml_k) - heldout_loglik_lasso(model, obs, w_lasso_k);
}

}  // namespace psr
