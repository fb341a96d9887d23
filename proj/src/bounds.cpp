#include "psr/bounds.hpp"

#include <cmath>
#include <limits>

#include "psr/errors.hpp"

namespace psr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_scale(double s) {
  if (!(s > 1.0))
    throw DegenerateScale("bounds need s > 1 (log s must be positive); got s = " +
                          std::to_string(s));
}

void require_prob(double e_prob) {
  if (!(e_prob > 0.0) || !(e_prob < 1.0))
    throw DegenerateScale("error probability must lie in (0, 1)");
}

}  // namespace

void BoundConstants::validate() const {
  for (double c : {c1, c2, c_prime, c3, c4, C0, C1, C2, C_prime})
    if (!(c > 0.0)) throw DegenerateScale("bound constants must be strictly positive");
}

SampleComplexity theorem1_requirements(double s, double k, double beta_sk, double lambda_min,
                                       double epsilon, double e_prob,
                                       const BoundConstants& consts) {
  (void)k;  // the stated thresholds depend on k only through beta_sk
  consts.validate();
  require_scale(s);
  require_prob(e_prob);
  if (!(epsilon > 0.0)) throw DegenerateScale("epsilon must be > 0");
  const double logs = std::log(s);
  SampleComplexity out;
  out.n_min = beta_sk > 0.0 ? consts.c1 * s * logs * logs * std::log(2.0 / e_prob) /
                                  (beta_sk * beta_sk * std::pow(epsilon, 4.0))
                            : kInf;
  out.epsilon_max =
      beta_sk > 0.0
          ? std::sqrt(consts.c2 * lambda_min * logs /
                      (beta_sk * std::max(consts.c_prime, std::sqrt(s))))
          : kInf;
  return out;
}

SampleComplexity corollary1_requirements(double s, double k, double gamma_k, double lambda_min,
                                         double epsilon, double e_prob,
                                         const BoundConstants& consts) {
  (void)k;
  consts.validate();
  require_scale(s);
  require_prob(e_prob);
  if (!(epsilon > 0.0)) throw DegenerateScale("epsilon must be > 0");
  const double logs = std::log(s);
  SampleComplexity out;
  out.n_min = gamma_k > 0.0 ? consts.c1 * s * s * s * logs * logs * std::log(2.0 / e_prob) /
                                  (gamma_k * gamma_k * std::pow(epsilon, 4.0))
                            : kInf;
  // beta replaced by gamma_k / s; the cap keeps its own max(c2, sqrt(s)).
  out.epsilon_max = gamma_k > 0.0
                        ? std::sqrt(consts.c2 * lambda_min * logs * s /
                                    (gamma_k * std::max(consts.c2, std::sqrt(s))))
                        : kInf;
  return out;
}

ErrorBound corollary2_error_bound(double s, double gamma_k, double n, double lambda_min,
                                  const BoundConstants& consts) {
  consts.validate();
  require_scale(s);
  if (!(gamma_k > 0.0)) throw DegenerateScale("gamma_k must be > 0");
  if (!(n >= 1.0)) throw DegenerateScale("n must be >= 1");
  if (!(lambda_min > 0.0)) throw DegenerateScale("lambda_min must be > 0");
  ErrorBound out;
  out.error_bound = consts.C_prime * std::pow(s, 0.75) * std::sqrt(std::log(s)) /
                    (std::sqrt(gamma_k) * std::pow(n, 0.2));
  out.n_floor = std::pow(consts.C0 * s / lambda_min, 2.5);
  out.confidence = 1.0 - consts.C1 * std::exp(-consts.C2 * std::pow(n, 0.2));
  out.below_floor = n < out.n_floor;
  return out;
}

SampleComplexity theorem4_requirements(double p, double k, double s, double lambda_min,
                                       double epsilon, double e_prob,
                                       const BoundConstants& consts) {
  consts.validate();
  require_scale(s);
  require_prob(e_prob);
  if (!(p >= 2.0) || !(k >= 1.0)) throw DegenerateScale("need p >= 2 and k >= 1");
  if (!(epsilon > 0.0)) throw DegenerateScale("epsilon must be > 0");
  const double logs = std::log(s);
  const double logp = std::log(p);
  const double inner = std::log(consts.c2 * k * logp);
  const double branch1 =
      consts.c1 * k * k * logp * inner * inner * inner * std::log(1.0 / e_prob);
  const double branch2 = consts.c_prime * k * k * s * s * s * logs * logs *
                         std::log(4.0 / e_prob) / std::pow(epsilon, 4.0);
  SampleComplexity out;
  out.n_min = std::max(branch1, branch2);
  out.epsilon_max = std::sqrt(consts.c4 * k * k * lambda_min * s * logs /
                              std::max(consts.c3, std::sqrt(s)));
  return out;
}

BernsteinTail bernstein_tail(const Eigen::VectorXd& lambda_rates, double t) {
  if (lambda_rates.size() == 0) throw DegenerateScale("need at least one rate");
  if ((lambda_rates.array() <= 0.0).any())
    throw DegenerateScale("all rates must be strictly positive");
  if (t < 0.0) throw TOutOfRange("t must be >= 0");
  // For Poisson, E (y_i - lambda_i)^2 = lambda_i.
  const double total = lambda_rates.sum();
  const double lambda_max = lambda_rates.maxCoeff();
  const double L = std::max(1.0, std::sqrt(lambda_max));
  BernsteinTail out;
  out.t_max = std::sqrt(total) / (2.0 * L);
  if (t > out.t_max)
    throw TOutOfRange("t = " + std::to_string(t) + " exceeds t_max = " +
                      std::to_string(out.t_max));
  out.deviation_threshold =
      2.0 * t / static_cast<double>(lambda_rates.size()) * std::sqrt(total);
  out.probability_bound = 2.0 * std::exp(-t * t);
  return out;
}

}  // namespace psr
