#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "psr/conditions.hpp"
#include "psr/errors.hpp"
#include "psr/likelihood.hpp"
#include "psr/model.hpp"
#include "psr/rng.hpp"

using namespace psr;

namespace {

double l1_on(const Eigen::VectorXd& u, const std::vector<Eigen::Index>& S) {
  double t = 0.0;
  for (const auto j : S) t += std::abs(u(j));
  return t;
}

double l1_off(const Eigen::VectorXd& u, const std::vector<Eigen::Index>& S) {
  const std::set<Eigen::Index> on(S.begin(), S.end());
  double t = 0.0;
  for (Eigen::Index j = 0; j < u.size(); ++j)
    if (!on.count(j)) t += std::abs(u(j));
  return t;
}

PoissonLinearModel uniform_model(Eigen::Index n, Eigen::Index p, double lambda0,
                                 std::uint64_t seed) {
  Rng rng(seed);
  return build_model(sample_design(n, p, DesignKind::kUniform01, rng),
                     Eigen::VectorXd::Constant(n, lambda0));
}

}  // namespace

TEST_CASE("sampled cone directions are unit norm and satisfy the cone inequality") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const ConeDirection dir = sample_cone_direction(30, 5, seed);
    REQUIRE(dir.u.size() == 30);
    CHECK(static_cast<long>(dir.S.size()) <= 5);
    CHECK(std::abs(dir.u.norm() - 1.0) < 1e-12);
    CHECK(l1_off(dir.u, dir.S) <= l1_on(dir.u, dir.S) + 1e-12);
  }
  const ConeDirection a = sample_cone_direction(30, 5, 7);
  const ConeDirection b = sample_cone_direction(30, 5, 7);
  CHECK((a.u - b.u).norm() == 0.0);
}

TEST_CASE("restricted-eigenvalue estimate is exactly 1 for a scaled identity design") {
  // With A = sqrt(n) * I (n = p), (1/n)||A u||^2 = ||u||^2 = 1 for every unit
  // direction, so the minimum over any sample set is 1.
  const Eigen::Index n = 12;
  const Eigen::MatrixXd A = std::sqrt(static_cast<double>(n)) *
                            Eigen::MatrixXd::Identity(n, n);
  const double g = estimate_gamma_k(A, 3, 500, 99);
  CHECK(g == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("restricted-eigenvalue estimate never exceeds the singleton bound") {
  Rng rng(41);
  const Eigen::MatrixXd A = sample_design(25, 40, DesignKind::kUniform01, rng);
  double singleton = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < A.cols(); ++j)
    singleton = std::min(singleton, A.col(j).squaredNorm() / 25.0);
  const double g = estimate_gamma_k(A, 5, 200, 3);
  CHECK(g <= singleton + 1e-12);
  CHECK(g > 0.0);
}

TEST_CASE("restricted-eigenvalue estimate is monotone in the sample count") {
  Rng rng(42);
  const Eigen::MatrixXd A = sample_design(30, 50, DesignKind::kHalfNormal, rng);
  double prev = std::numeric_limits<double>::infinity();
  for (long m : {10L, 100L, 1000L}) {
    const double g = estimate_gamma_k(A, 4, m, 17);
    CHECK(g <= prev + 1e-15);
    prev = g;
  }
  CHECK(estimate_gamma_k(A, 4, 500, 17) == estimate_gamma_k(A, 4, 500, 17));
  CHECK_THROWS_AS(estimate_gamma_k(A, 0, 10, 1), InvalidSparsity);
  CHECK_THROWS_AS(estimate_gamma_k(A, 51, 10, 1), InvalidSparsity);
}

TEST_CASE("population objective increases under feasible perturbations") {
  const PoissonLinearModel model = uniform_model(40, 20, 1.5, 5);
  Rng trng(6);
  const GroundTruth truth = sample_ground_truth(20, 4, 1.0, trng);
  const auto dirs = sample_feasible_perturbations(model, truth, 0.2, 400, 77);
  REQUIRE(dirs.size() >= 100);
  for (const auto& d : dirs) {
    const double f = qbar_perturbation(model, truth, d, 0.2);
    CHECK(f >= -1e-12);
  }
}

TEST_CASE("perturbations leaving the feasible set are rejected") {
  const PoissonLinearModel model = uniform_model(30, 10, 1.0, 8);
  Rng trng(9);
  const GroundTruth truth = sample_ground_truth(10, 3, 1.0, trng);

  // +e_j for any j increases the l1 mass above s = ||w*||_1: infeasible.
  ConeDirection up;
  up.u = Eigen::VectorXd::Zero(10);
  up.u(0) = 1.0;
  up.S = {0};
  CHECK_THROWS_AS(qbar_perturbation(model, truth, up, 0.1), InfeasiblePerturbation);

  // Stepping below zero on an off-support coordinate is also infeasible.
  Eigen::Index off = 0;
  while (truth.w_star(off) > 0.0) ++off;
  ConeDirection down;
  down.u = Eigen::VectorXd::Zero(10);
  down.u(off) = -1.0;
  down.S = {off};
  CHECK_THROWS_AS(qbar_perturbation(model, truth, down, 0.1), InfeasiblePerturbation);

  // -e_j on a support coordinate with w*_j >= eps is feasible and f >= 0.
  Eigen::Index on = 0;
  double best = -1.0;
  for (Eigen::Index j = 0; j < 10; ++j)
    if (truth.w_star(j) > best) {
      best = truth.w_star(j);
      on = j;
    }
  REQUIRE(best >= 0.05);
  ConeDirection dn;
  dn.u = Eigen::VectorXd::Zero(10);
  dn.u(on) = -1.0;
  dn.S = {on};
  CHECK(qbar_perturbation(model, truth, dn, 0.05) >= 0.0);
}

TEST_CASE("feasible perturbation sampler output is feasible, unit norm, deterministic") {
  const PoissonLinearModel model = uniform_model(30, 15, 1.0, 10);
  Rng trng(11);
  const GroundTruth truth = sample_ground_truth(15, 4, 0.8, trng);
  const double eps = 0.1;

  double ratio = 0.0;
  long accepted = 0;
  const auto dirs = sample_feasible_perturbations(model, truth, eps, 300, 13, &ratio, &accepted);
  // The always-included support singletons -e_j (w*_j >= eps) ride on top of
  // the rejection-sampled count.
  long singletons = 0;
  for (Eigen::Index j = 0; j < 15; ++j)
    if (truth.w_star(j) >= eps) ++singletons;
  CHECK(static_cast<long>(dirs.size()) == accepted + singletons);
  CHECK(ratio > 0.0);
  CHECK(ratio <= 1.0);
  for (const auto& d : dirs) {
    CHECK(std::abs(d.u.norm() - 1.0) < 1e-12);
    const Eigen::VectorXd w = truth.w_star + eps * d.u;
    CHECK(w.minCoeff() >= -1e-12);
    CHECK(w.sum() <= truth.s + 1e-12);
    CHECK(l1_off(d.u, d.S) <= l1_on(d.u, d.S) + 1e-12);
  }

  const auto again = sample_feasible_perturbations(model, truth, eps, 300, 13);
  REQUIRE(again.size() == dirs.size());
  for (std::size_t i = 0; i < dirs.size(); ++i)
    CHECK((again[i].u - dirs[i].u).norm() == 0.0);
}

TEST_CASE("curvature estimate equals the minimum rescaled perturbation") {
  const PoissonLinearModel model = uniform_model(35, 12, 1.2, 14);
  Rng trng(15);
  const GroundTruth truth = sample_ground_truth(12, 3, 1.0, trng);
  const double eps = 0.15;

  const ConditionEstimate est = estimate_beta_sk(model, truth, eps, 500, 21);
  CHECK(est.epsilon == eps);
  CHECK(est.seed == 21);
  CHECK(est.num_samples == 500);
  CHECK(est.accepted_samples > 0);
  CHECK(est.beta_sk == doctest::Approx(est.delta_sk / (eps * eps)).epsilon(1e-15));
  CHECK(est.delta_sk >= 0.0);
  CHECK(est.gamma_k > 0.0);

  // delta_hat is the minimum of f over the same feasible directions.
  const auto dirs = sample_feasible_perturbations(model, truth, eps, 500, 21);
  double min_f = std::numeric_limits<double>::infinity();
  for (const auto& d : dirs) min_f = std::min(min_f, qbar_perturbation(model, truth, d, eps));
  CHECK(est.delta_sk == doctest::Approx(min_f).epsilon(1e-15));

  const ConditionEstimate rerun = estimate_beta_sk(model, truth, eps, 500, 21);
  CHECK(rerun.beta_sk == est.beta_sk);
  CHECK(rerun.accepted_samples == est.accepted_samples);
}

TEST_CASE("likelihood curvature chain holds on a small instance") {
  const PoissonLinearModel model = uniform_model(25, 30, 1.5, 16);
  Rng trng(17);
  const GroundTruth truth = sample_ground_truth(30, 5, 1.0, trng);

  const Theorem2ChainReport rep = verify_theorem2_chain(model, truth, 2000, 23, 0.5);
  CHECK(rep.checked > 0);
  CHECK(rep.passed == rep.checked);
  CHECK(rep.min_margin >= -1e-10);
  CHECK(rep.cone_checked > 0);
  CHECK(rep.cone_passed == rep.cone_checked);
  CHECK(rep.lambda_max == doctest::Approx(model.lambda0_max + truth.s * model.a_max));
  CHECK(rep.gamma_hat > 0.0);
  CHECK(rep.epsilon == 0.5);
}

TEST_CASE("empirical concentration is deterministic and shrinks with n") {
  const PoissonLinearModel model = uniform_model(200, 8, 1.0, 18);
  Rng trng(19);
  const GroundTruth truth = sample_ground_truth(8, 3, 1.5, trng);

  std::vector<Eigen::VectorXd> probes;
  probes.push_back(truth.w_star);
  Rng prng(20);
  for (int i = 0; i < 4; ++i) {
    Eigen::VectorXd z(8);
    for (int j = 0; j < 8; ++j) z(j) = prng.uniform();
    z *= truth.s * prng.uniform() / z.sum();
    probes.push_back(z);
  }

  const std::vector<Eigen::Index> n_grid = {25, 50, 100, 200};
  std::vector<std::vector<double>> per_trial;
  const auto curve =
      empirical_concentration(model, truth, 300, probes, 24, n_grid, 0.4, &per_trial);
  REQUIRE(curve.size() == 4);
  REQUIRE(per_trial.size() == 4);
  for (std::size_t g = 0; g < 4; ++g) {
    CHECK(curve[g].first == n_grid[g]);
    CHECK(curve[g].second >= 0.0);
    CHECK(curve[g].second <= 1.0);
    REQUIRE(per_trial[g].size() == 300);
    // The reported exceedance probability matches the per-trial maxima.
    long count = 0;
    for (const double m : per_trial[g])
      if (m >= 0.2) ++count;  // delta / 2
    CHECK(curve[g].second == doctest::Approx(count / 300.0).epsilon(1e-15));
  }
  // More rows average the fluctuations down: last grid point no worse than first.
  CHECK(curve.back().second <= curve.front().second + 1e-12);

  const auto rerun = empirical_concentration(model, truth, 300, probes, 24, n_grid, 0.4);
  for (std::size_t g = 0; g < 4; ++g)
    CHECK(rerun[g].second == curve[g].second);

  CHECK_THROWS_AS(
      empirical_concentration(model, truth, 10, probes, 1, {500}, 0.4),
      DimensionMismatch);
}
