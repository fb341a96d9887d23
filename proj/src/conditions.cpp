#include "psr/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "psr/errors.hpp"
#include "psr/likelihood.hpp"

namespace psr {

ConeDirection sample_cone_direction(Eigen::Index p, Eigen::Index k, std::uint64_t seed) {
  if (k < 1 || k > p) throw InvalidSparsity("need 1 <= k <= p");
  Rng rng(seed);
  ConeDirection dir;
  std::vector<std::size_t> support;
  rng.sample_indices(static_cast<std::size_t>(p), static_cast<std::size_t>(k), support);
  dir.S.assign(support.begin(), support.end());
  std::sort(dir.S.begin(), dir.S.end());

  dir.u = Eigen::VectorXd::Zero(p);
  double l1_S = 0.0;
  do {
    l1_S = 0.0;
    for (Eigen::Index j : dir.S) {
      dir.u(j) = rng.normal();
      l1_S += std::abs(dir.u(j));
    }
  } while (l1_S == 0.0);

  if (k < p) {
    const double rho = rng.uniform();
    double l1_C = 0.0;
    std::vector<double> off(static_cast<std::size_t>(p - k));
    for (auto& v : off) {
      v = rng.normal();
      l1_C += std::abs(v);
    }
    const double scale = l1_C > 0.0 ? rho * l1_S / l1_C : 0.0;
    std::size_t next = 0;
    auto it = dir.S.begin();
    for (Eigen::Index j = 0; j < p; ++j) {
      if (it != dir.S.end() && *it == j) {
        ++it;
        continue;
      }
      dir.u(j) = off[next++] * scale;
    }
  }
  dir.u.normalize();
  return dir;
}

double estimate_gamma_k(const Eigen::MatrixXd& A, Eigen::Index k, long num_samples,
                        std::uint64_t seed) {
  const double n = static_cast<double>(A.rows());
  double best = std::numeric_limits<double>::infinity();
  // Deterministic singleton directions e_j: catches zero/degenerate columns
  // regardless of sampling luck.
  for (Eigen::Index j = 0; j < A.cols(); ++j)
    best = std::min(best, A.col(j).squaredNorm() / n);
  const Rng root(seed);
  for (long i = 0; i < num_samples; ++i) {
    const ConeDirection dir =
        sample_cone_direction(A.cols(), k, root.child(static_cast<std::uint64_t>(i)).seed());
    best = std::min(best, (A * dir.u).squaredNorm() / n);
  }
  return best;
}

double qbar_perturbation(const PoissonLinearModel& model, const GroundTruth& truth,
                         const ConeDirection& dir, double epsilon) {
  if (dir.u.size() != model.p()) throw DimensionMismatch("direction length != p");
  Eigen::VectorXd w = truth.w_star + epsilon * dir.u;
  const double tol = 1e-12 * (1.0 + truth.s);
  double total = 0.0;
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    if (w(j) < -tol) throw InfeasiblePerturbation("w* + eps*u leaves the orthant");
    if (w(j) < 0.0) w(j) = 0.0;  // clip round-off
    total += w(j);
  }
  if (total > truth.s + tol) throw InfeasiblePerturbation("w* + eps*u exceeds the l1 budget");

  // f(eps u) = (1/n) sum_i [ -lam*_i log1p(d_i / lam*_i) + d_i ],
  // d = A (w - w*). Using the clipped w keeps this the exact Qbar difference.
  const Eigen::VectorXd lam_star = model.lambda0 + model.A * truth.w_star;
  const Eigen::VectorXd d = model.A * (w - truth.w_star);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < model.n(); ++i)
    acc += -lam_star(i) * std::log1p(d(i) / lam_star(i)) + d(i);
  return acc / static_cast<double>(model.n());
}

std::vector<ConeDirection> sample_feasible_perturbations(const PoissonLinearModel& model,
                                                         const GroundTruth& truth,
                                                         double epsilon, long num_samples,
                                                         std::uint64_t seed,
                                                         double* acceptance_ratio,
                                                         long* accepted_out) {
  if (!(epsilon > 0.0)) throw InvalidOptions("epsilon must be > 0");
  if (num_samples < 1) throw InvalidOptions("num_samples must be >= 1");
  const Eigen::Index p = model.p();
  std::vector<Eigen::Index> S;
  for (Eigen::Index j = 0; j < p; ++j)
    if (truth.w_star(j) > 0.0) S.push_back(j);
  const Eigen::Index k = static_cast<Eigen::Index>(S.size());
  if (k == 0) throw InvalidSparsity("ground truth has empty support");

  std::vector<ConeDirection> dirs;
  dirs.reserve(static_cast<std::size_t>(num_samples) + S.size());

  // Feasible singletons first: -e_j keeps the budget (sum u = -1) and the
  // orthant whenever w*_j >= eps.
  for (Eigen::Index j : S) {
    if (truth.w_star(j) >= epsilon) {
      ConeDirection d;
      d.u = Eigen::VectorXd::Zero(p);
      d.u(j) = -1.0;
      d.S = {j};
      dirs.push_back(std::move(d));
    }
  }

  Rng rng(seed);
  const long max_attempts = 100 * num_samples;
  long attempts = 0;
  long accepted = 0;
  std::vector<double> off(static_cast<std::size_t>(p - k));
  while (accepted < num_samples && attempts < max_attempts) {
    ++attempts;
    ConeDirection d;
    d.u = Eigen::VectorXd::Zero(p);
    d.S = S;
    double l1_S = 0.0;
    for (Eigen::Index j : S) {
      d.u(j) = rng.normal();
      l1_S += std::abs(d.u(j));
    }
    if (l1_S == 0.0) continue;
    if (k < p) {
      const double rho = rng.uniform();
      double l1_C = 0.0;
      for (auto& v : off) {
        v = std::abs(rng.normal());  // orthant forces u >= 0 off the support
        l1_C += v;
      }
      const double scale = l1_C > 0.0 ? rho * l1_S / l1_C : 0.0;
      std::size_t next = 0;
      auto it = S.begin();
      for (Eigen::Index j = 0; j < p; ++j) {
        if (it != S.end() && *it == j) {
          ++it;
          continue;
        }
        d.u(j) = off[next++] * scale;
      }
    }
    d.u.normalize();
    // Feasibility of w* + eps*u: budget (sum u <= 0 since ||w*||_1 = s) and
    // orthant on the support.
    if (d.u.sum() > 0.0) continue;
    bool ok = true;
    for (Eigen::Index j : S) {
      if (truth.w_star(j) + epsilon * d.u(j) < 0.0) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    ++accepted;
    dirs.push_back(std::move(d));
  }
  if (acceptance_ratio)
    *acceptance_ratio = attempts > 0 ? static_cast<double>(accepted) / attempts : 0.0;
  if (accepted_out) *accepted_out = accepted;
  if (accepted == 0 && dirs.empty())
    throw NoFeasibleDirection("no feasible perturbation found; epsilon too large for Theta_s");
  return dirs;
}

ConditionEstimate estimate_beta_sk(const PoissonLinearModel& model, const GroundTruth& truth,
                                   double epsilon, long num_samples, std::uint64_t seed) {
  ConditionEstimate est;
  est.num_samples = num_samples;
  est.seed = seed;
  est.epsilon = epsilon;
  long accepted = 0;
  const std::vector<ConeDirection> dirs = sample_feasible_perturbations(
      model, truth, epsilon, num_samples, seed, &est.acceptance_ratio, &accepted);
  est.accepted_samples = accepted;

  double delta = std::numeric_limits<double>::infinity();
  double gamma = std::numeric_limits<double>::infinity();
  const double n = static_cast<double>(model.n());
  for (const ConeDirection& d : dirs) {
    delta = std::min(delta, qbar_perturbation(model, truth, d, epsilon));
    gamma = std::min(gamma, (model.A * d.u).squaredNorm() / n);
  }
  est.delta_sk = delta;
  est.beta_sk = delta / (epsilon * epsilon);
  est.gamma_k = gamma;
  return est;
}

Theorem2ChainReport verify_theorem2_chain(const PoissonLinearModel& model,
                                          const GroundTruth& truth, long samples,
                                          std::uint64_t seed, double epsilon) {
  Theorem2ChainReport rep;
  rep.epsilon = epsilon;
  rep.lambda_max = model.lambda0_max + truth.s * model.a_max;  // worst case over Theta_s

  const std::vector<ConeDirection> dirs =
      sample_feasible_perturbations(model, truth, epsilon, samples, seed);

  // gamma_hat over the same directions, so the per-sample RE inequality
  // (1/n)||Au||^2 >= gamma_hat holds exactly for every checked direction.
  const double n = static_cast<double>(model.n());
  rep.gamma_hat = std::numeric_limits<double>::infinity();
  for (const ConeDirection& d : dirs)
    rep.gamma_hat = std::min(rep.gamma_hat, (model.A * d.u).squaredNorm() / n);

  const double bound = rep.gamma_hat * epsilon * epsilon / (9.0 * rep.lambda_max);
  rep.min_margin = std::numeric_limits<double>::infinity();
  for (const ConeDirection& d : dirs) {
    const double f = qbar_perturbation(model, truth, d, epsilon);
    const double margin = f - bound;
    rep.min_margin = std::min(rep.min_margin, margin);
    ++rep.checked;
    if (margin >= -1e-10) ++rep.passed;
  }

  // Cone-membership derivation: for any w in Theta_s with s = ||w*||_1, the
  // error u = w - w* satisfies ||u_{S^c}||_1 <= ||u_S||_1.
  Rng rng = Rng(seed).child(0x636f6e65);  // "cone"
  std::vector<bool> in_S(static_cast<std::size_t>(model.p()), false);
  for (Eigen::Index j = 0; j < model.p(); ++j)
    if (truth.w_star(j) > 0.0) in_S[static_cast<std::size_t>(j)] = true;
  for (long t = 0; t < samples; ++t) {
    Eigen::VectorXd z(model.p());
    for (Eigen::Index j = 0; j < model.p(); ++j) z(j) = rng.uniform();
    const double total = std::max(z.sum(), 1e-300);
    const Eigen::VectorXd w = z * (truth.s * rng.uniform() / total);
    double l1_S = 0.0, l1_C = 0.0;
    for (Eigen::Index j = 0; j < model.p(); ++j) {
      const double uj = w(j) - truth.w_star(j);
      if (in_S[static_cast<std::size_t>(j)])
        l1_S += std::abs(uj);
      else
        l1_C += std::abs(uj);
    }
    ++rep.cone_checked;
    if (l1_C <= l1_S + 1e-12) ++rep.cone_passed;
  }
  return rep;
}

std::vector<std::pair<Eigen::Index, double>> empirical_concentration(
    const PoissonLinearModel& model, const GroundTruth& truth, long num_trials,
    const std::vector<Eigen::VectorXd>& probe_points, std::uint64_t seed,
    const std::vector<Eigen::Index>& n_grid, double delta,
    std::vector<std::vector<double>>* per_trial_max) {
  if (probe_points.empty()) throw InvalidOptions("need at least one probe point");
  for (Eigen::Index n : n_grid)
    if (n < 1 || n > model.n()) throw DimensionMismatch("n_grid entry out of range");
  if (per_trial_max) per_trial_max->assign(n_grid.size(), std::vector<double>());

  // Per probe, precompute the per-row pieces of Q and Qbar so each trial is a
  // single prefix scan: Q_n - Qbar_n = -(1/n) sum_{i<n} (y_i - lam*_i) log lam_i(w).
  const Eigen::VectorXd lam_star = model.lambda0 + model.A * truth.w_star;
  const std::size_t P = probe_points.size();
  std::vector<Eigen::VectorXd> log_lam(P);
  for (std::size_t q = 0; q < P; ++q) {
    if (probe_points[q].size() != model.p())
      throw DimensionMismatch("probe point length != p");
    log_lam[q] = (model.lambda0 + model.A * probe_points[q]).array().log().matrix();
  }

  std::vector<long> exceed(n_grid.size(), 0);
  const Rng root(seed);
  Eigen::VectorXd dev(model.n());
  for (long t = 0; t < num_trials; ++t) {
    Rng rng = root.child(static_cast<std::uint64_t>(t));
    for (Eigen::Index i = 0; i < model.n(); ++i)
      dev(i) = static_cast<double>(rng.poisson(lam_star(i))) - lam_star(i);
    // max over probes of |mean over prefix| per grid n
    for (std::size_t gi = 0; gi < n_grid.size(); ++gi) {
      const Eigen::Index n = n_grid[gi];
      double worst = 0.0;
      for (std::size_t q = 0; q < P; ++q) {
        const double m =
            (dev.head(n).array() * log_lam[q].head(n).array()).sum() / static_cast<double>(n);
        worst = std::max(worst, std::abs(m));
      }
      if (worst >= delta / 2.0) ++exceed[gi];
      if (per_trial_max) (*per_trial_max)[gi].push_back(worst);
    }
  }

  std::vector<std::pair<Eigen::Index, double>> out;
  out.reserve(n_grid.size());
  for (std::size_t gi = 0; gi < n_grid.size(); ++gi)
    out.emplace_back(n_grid[gi], static_cast<double>(exceed[gi]) / num_trials);
  return out;
}

}  // namespace psr
