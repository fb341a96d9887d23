#include "psr/solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "psr/errors.hpp"
#include "psr/likelihood.hpp"

namespace psr {

FeasibilityBudget FeasibilityBudget::constrained(double s) {
  if (!(s > 0.0)) throw InvalidOptions("constrained budget needs s > 0");
  FeasibilityBudget b;
  b.mode = Mode::kConstrained;
  b.s = s;
  return b;
}

FeasibilityBudget FeasibilityBudget::penalized(double eta) {
  if (eta < 0.0) throw InvalidOptions("penalized budget needs eta >= 0");
  FeasibilityBudget b;
  b.mode = Mode::kPenalized;
  b.eta = eta;
  return b;
}

Eigen::VectorXd project_theta_s(const Eigen::VectorXd& v, double s) {
  if (!(s > 0.0)) throw InvalidOptions("projection needs s > 0");
  Eigen::VectorXd w = v.cwiseMax(0.0);
  if (w.sum() <= s) return w;
  // Active budget: theta > 0 solves sum(max(v - theta, 0)) = s. Only positive
  // coordinates can survive, and after sorting v descending the surviving
  // count rho is the largest j with v_(j) > (cumsum_j - s)/j.
  std::vector<double> z(v.data(), v.data() + v.size());
  std::sort(z.begin(), z.end(), std::greater<double>());
  double cumsum = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j) {
    cumsum += z[j];
    const double cand = (cumsum - s) / static_cast<double>(j + 1);
    if (z[j] - cand > 0.0) {
      theta = cand;
    } else {
      break;
    }
  }
  Eigen::VectorXd out = (v.array() - theta).cwiseMax(0.0).matrix();
  // The computed theta can land an ulp short, leaving sum(out) marginally
  // above s; projecting again must be a no-op, so walk theta up until the
  // budget holds in floating point as well.
  for (int fix = 0; fix < 64; ++fix) {
    const double excess = out.sum() - s;
    if (excess <= 0.0) break;
    const double rho = static_cast<double>((out.array() > 0.0).count());
    theta = std::nextafter(theta + excess / rho, std::numeric_limits<double>::infinity());
    out = (v.array() - theta).cwiseMax(0.0).matrix();
  }
  return out;
}

namespace {

struct SmoothObjective {
  // value at w; gradient optional.
  std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)> eval;
  // true when w is inside the objective's domain (positive rates).
  std::function<bool(const Eigen::VectorXd&)> domain_ok;
  double initial_step = 1.0;
};

// One monotone-FISTA run from a feasible start point. The composite
// objective is smooth.eval + (penalized mode) eta * sum(w); the prox step is
// the Theta_s projection or the one-sided soft threshold.
SolveResult run_fista(const SmoothObjective& smooth, const FeasibilityBudget& budget,
                      const SolveOptions& opts, const Eigen::VectorXd& start) {
  if (!(opts.tolerance > 0.0) || opts.max_iters < 1)
    throw InvalidOptions("tolerance must be > 0 and max_iters >= 1");
  const bool constrained = budget.mode == FeasibilityBudget::Mode::kConstrained;

  const auto prox = [&](const Eigen::VectorXd& v, double step) -> Eigen::VectorXd {
    if (constrained) return project_theta_s(v, budget.s);
    return (v.array() - step * budget.eta).cwiseMax(0.0).matrix();
  };
  const auto penalty = [&](const Eigen::VectorXd& w) -> double {
    return constrained ? 0.0 : budget.eta * w.sum();
  };

  Eigen::VectorXd w = constrained ? project_theta_s(start, budget.s) : start.cwiseMax(0.0);
  Eigen::VectorXd w_prev = w;
  Eigen::VectorXd yv = w;
  Eigen::VectorXd grad(w.size());

  double fw = smooth.eval(w, nullptr);
  double Fw = fw + penalty(w);
  double step = smooth.initial_step;
  double tk = 1.0;

  SolveResult res;
  res.w_hat = w;
  res.objective = Fw;
  res.converged = false;
  if (opts.keep_trace) res.trace.push_back(Fw);

  long it = 0;
  for (it = 1; it <= opts.max_iters; ++it) {
    if (!smooth.domain_ok(yv)) {
      // Extrapolation left the domain (possible only with momentum); restart.
      yv = w;
      tk = 1.0;
    }
    const double fy = smooth.eval(yv, &grad);

    // Backtracking with growth: try 2x the last accepted step first.
    double st = step * 2.0;
    Eigen::VectorXd z;
    double fz = 0.0;
    for (int bt = 0; bt < 120; ++bt) {
      z = prox(yv - st * grad, st);
      if (smooth.domain_ok(z)) {
        fz = smooth.eval(z, nullptr);
        const Eigen::VectorXd d = z - yv;
        const double quad = fy + grad.dot(d) + d.squaredNorm() / (2.0 * st);
        if (fz <= quad + 1e-14 * (1.0 + std::abs(fy))) break;
      }
      st *= 0.5;
      if (st < 1e-18) break;
    }
    step = st;

    // Gradient mapping at the momentum point: free convergence certificate.
    const double gm = (yv - z).norm() / std::max(st, 1e-300);

    const double Fz = fz + penalty(z);
    w_prev = w;
    if (Fz <= Fw) {  // monotone safeguard: accepted iterate never worsens
      w = z;
      fw = fz;
      Fw = Fz;
    }
    if (opts.keep_trace) res.trace.push_back(Fw);

    if (gm <= opts.tolerance * (1.0 + std::abs(Fw))) {
      // Confirm the certificate at the accepted iterate itself (the momentum
      // point can converge slightly ahead of w).
      const double fw_chk = smooth.eval(w, &grad);
      (void)fw_chk;
      const Eigen::VectorXd zw = prox(w - st * grad, st);
      const double gmw = (w - zw).norm() / std::max(st, 1e-300);
      if (gmw <= opts.tolerance * (1.0 + std::abs(Fw))) {
        res.converged = true;
        break;
      }
      yv = w;
      tk = 1.0;
      continue;
    }

    const double tk1 = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
    // Monotone-FISTA extrapolation uses both the new prox point and the
    // accepted iterate.
    yv = w + (tk / tk1) * (z - w) + ((tk - 1.0) / tk1) * (w - w_prev);
    tk = tk1;
  }

  res.w_hat = w;
  res.objective = Fw;
  res.iterations = std::min(it, opts.max_iters);
  return res;
}

double spectral_norm_sq(const Eigen::MatrixXd& A, int iters = 50) {
  // Power iteration on A^T A with a fixed deterministic start.
  Eigen::VectorXd v = Eigen::VectorXd::Ones(A.cols()).normalized();
  double lam = 0.0;
  for (int i = 0; i < iters; ++i) {
    Eigen::VectorXd u = A.transpose() * (A * v);
    lam = u.norm();
    if (lam <= 0.0) return 0.0;
    v = u / lam;
  }
  return lam;  // largest eigenvalue of A^T A = sigma_1(A)^2
}

SmoothObjective make_q_objective(const PoissonLinearModel& model, const ObservationSet& obs) {
  SmoothObjective f;
  const double n = static_cast<double>(model.n());
  f.eval = [&model, &obs, n](const Eigen::VectorXd& w, Eigen::VectorXd* grad) {
    const Eigen::VectorXd lam = model.lambda0 + model.A * w;
    const Eigen::VectorXd aw = lam - model.lambda0;
    const double value = -(obs.y.array() * lam.array().log() - aw.array()).sum() / n;
    if (grad) *grad = model.A.transpose() * (1.0 - (obs.y.array() / lam.array())).matrix() / n;
    return value;
  };
  f.domain_ok = [&model](const Eigen::VectorXd& w) {
    return ((model.lambda0 + model.A * w).array() > 0.0).all();
  };
  // Curvature bound of Q at w = 0: (1/n) sigma1(A)^2 max_i y_i/lambda0_i^2.
  const double curvature =
      spectral_norm_sq(model.A) / n *
      (obs.y.array() / model.lambda0.array().square()).maxCoeff();
  f.initial_step = 1.0 / std::max(curvature, 1e-12);
  return f;
}

SmoothObjective make_lasso_objective(const PoissonLinearModel& model,
                                     const ObservationSet& obs) {
  SmoothObjective f;
  const double n = static_cast<double>(model.n());
  f.eval = [&model, &obs, n](const Eigen::VectorXd& w, Eigen::VectorXd* grad) {
    const Eigen::VectorXd lam = model.lambda0 + model.A * w;
    const Eigen::ArrayXd r = obs.y.array() - lam.array();
    const double value = (r.square() / lam.array()).sum() / n;
    if (grad)
      *grad = model.A.transpose() *
              (-(r * (2.0 * lam.array() + r)) / lam.array().square()).matrix() / n;
    return value;
  };
  f.domain_ok = [&model](const Eigen::VectorXd& w) {
    return ((model.lambda0 + model.A * w).array() > 0.0).all();
  };
  // Second derivative of r^2/lam in lam is 2 y^2 / lam^3, maximized on the
  // feasible set at lam = lambda0.
  const double curvature =
      spectral_norm_sq(model.A) / n *
      (2.0 * obs.y.array().max(1.0).square() / model.lambda0.array().cube()).maxCoeff();
  f.initial_step = 1.0 / std::max(curvature, 1e-12);
  return f;
}

void validate_inputs(const PoissonLinearModel& model, const ObservationSet& obs) {
  if (obs.y.size() != model.n()) throw DimensionMismatch("y length does not match model n");
}

}  // namespace

SolveResult solve_ml(const PoissonLinearModel& model, const ObservationSet& obs,
                     const FeasibilityBudget& budget, const SolveOptions& opts) {
  validate_inputs(model, obs);
  const SmoothObjective f = make_q_objective(model, obs);
  return run_fista(f, budget, opts, Eigen::VectorXd::Zero(model.p()));
}

SolveResult solve_rescaled_lasso(const PoissonLinearModel& model, const ObservationSet& obs,
                                 const FeasibilityBudget& budget, const SolveOptions& opts) {
  validate_inputs(model, obs);
  if (opts.restarts < 1) throw InvalidOptions("restarts must be >= 1");
  const SmoothObjective f = make_lasso_objective(model, obs);
  const double s_start =
      budget.mode == FeasibilityBudget::Mode::kConstrained ? budget.s : 1.0;

  SolveResult best;
  bool have_best = false;
  for (int r = 0; r < opts.restarts; ++r) {
    Eigen::VectorXd start = Eigen::VectorXd::Zero(model.p());
    if (r > 0) {
      // Random feasible start: direction from |normals| on the simplex,
      // pulled into the interior by a uniform radial factor.
      Rng rng = Rng(opts.seed).child(static_cast<std::uint64_t>(r));
      Eigen::VectorXd x(model.p());
      for (Eigen::Index j = 0; j < model.p(); ++j) x(j) = std::abs(rng.normal());
      const double total = std::max(x.sum(), 1e-300);
      start = x * (s_start * rng.uniform() / total);
    }
    SolveResult run = run_fista(f, budget, opts, start);
    if (!have_best || run.objective < best.objective) {
      best = std::move(run);
      have_best = true;
    }
  }
  return best;
}

std::pair<Eigen::VectorXd, std::vector<Eigen::Index>> threshold_support(
    const Eigen::VectorXd& w, double t) {
  if (!(t > 0.0)) throw InvalidOptions("threshold must be > 0");
  Eigen::VectorXd out = w;
  std::vector<Eigen::Index> support;
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    if (out(j) < t) {
      out(j) = 0.0;
    } else {
      support.push_back(j);
    }
  }
  return {std::move(out), std::move(support)};
}

}  // namespace psr
