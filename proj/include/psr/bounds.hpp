#pragma once

#include <Eigen/Dense>

namespace psr {

// The analysis' unnamed universal constants, all user-configurable and
// defaulting to 1. c3/c4 appear only in the random-design epsilon cap.
struct BoundConstants {
  double c1 = 1.0;
  double c2 = 1.0;
  double c_prime = 1.0;
  double c3 = 1.0;
  double c4 = 1.0;
  double C0 = 1.0;
  double C1 = 1.0;
  double C2 = 1.0;
  double C_prime = 1.0;

  void validate() const;  // throws DegenerateScale when any is <= 0
};

struct SampleComplexity {
  double n_min = 0.0;       // +inf when the bound degenerates (e.g. gamma -> 0)
  double epsilon_max = 0.0;
};

// n >= c1 s log^2(s) log(2/e) / (beta^2 eps^4),
// eps <= sqrt(c2 lambda_min log(s) / (beta max(c', sqrt(s)))).
SampleComplexity theorem1_requirements(double s, double k, double beta_sk, double lambda_min,
                                       double epsilon, double e_prob,
                                       const BoundConstants& consts = {});

// Theorem-1 thresholds with beta = gamma_k / s:
// n >= c1 s^3 log^2(s) log(2/e) / (gamma_k^2 eps^4); the eps cap keeps the
// stated max(c2, sqrt(s)) form.
SampleComplexity corollary1_requirements(double s, double k, double gamma_k, double lambda_min,
                                         double epsilon, double e_prob,
                                         const BoundConstants& consts = {});

struct ErrorBound {
  double error_bound = 0.0;  // C' s^{3/4} log^{1/2}(s) / (gamma^{1/2} n^{1/5})
  double n_floor = 0.0;      // (C0 s / lambda_min)^{5/2}
  double confidence = 0.0;   // 1 - C1 exp(-C2 n^{1/5})
  bool below_floor = false;  // n < n_floor: bound not guaranteed
};

ErrorBound corollary2_error_bound(double s, double gamma_k, double n, double lambda_min,
                                  const BoundConstants& consts = {});

// n >= max( c1 k^2 log(p) log^3(c2 k log p) log(1/e),
//           c' k^2 s^3 log^2(s) log(4/e) / eps^4 ),
// eps <= sqrt(c4 k^2 lambda_min s log(s) / max(c3, sqrt(s))).
SampleComplexity theorem4_requirements(double p, double k, double s, double lambda_min,
                                       double epsilon, double e_prob,
                                       const BoundConstants& consts = {});

struct BernsteinTail {
  double deviation_threshold = 0.0;  // (2t/n) sqrt(sum lambda_i)
  double probability_bound = 0.0;    // 2 exp(-t^2), always in (0, 2]
  double t_max = 0.0;                // sqrt(sum lambda_i) / (2 L), L = max(1, sqrt(lambda_max))
};

// Tail bound for the centered average |(1/n) sum (y_i - lambda_i)| of
// independent Poisson counts. Throws TOutOfRange when t exceeds t_max.
BernsteinTail bernstein_tail(const Eigen::VectorXd& lambda_rates, double t);

}  // namespace psr
