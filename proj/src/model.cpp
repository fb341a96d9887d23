#include "psr/model.hpp"

#include <cmath>

#include "psr/csv.hpp"
#include "psr/errors.hpp"

namespace psr {

PoissonLinearModel PoissonLinearModel::prefix(Eigen::Index rows) const {
  if (rows < 1 || rows > n()) throw DimensionMismatch("prefix rows out of range");
  return build_model(A.topRows(rows), lambda0.head(rows));
}

PoissonLinearModel build_model(const Eigen::MatrixXd& A, const Eigen::VectorXd& lambda0) {
  if (A.rows() != lambda0.size())
    throw DimensionMismatch("A has " + std::to_string(A.rows()) + " rows but lambda0 has " +
                            std::to_string(lambda0.size()) + " entries");
  if (A.rows() < 1 || A.cols() < 1) throw DimensionMismatch("model needs n >= 1 and p >= 1");
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
      const double v = A(i, j);
      if (!std::isfinite(v)) throw NonFiniteEntry("A(" + std::to_string(i) + "," +
                                                  std::to_string(j) + ") is not finite");
      if (v < 0.0) throw NegativeEntry("A(" + std::to_string(i) + "," + std::to_string(j) +
                                       ") is negative");
    }
  for (Eigen::Index i = 0; i < lambda0.size(); ++i) {
    if (!std::isfinite(lambda0(i)))
      throw NonFiniteEntry("lambda0(" + std::to_string(i) + ") is not finite");
    if (lambda0(i) <= 0.0)
      throw NonPositiveBackground("lambda0(" + std::to_string(i) + ") must be > 0");
  }
  PoissonLinearModel m;
  m.A = A;
  m.lambda0 = lambda0;
  m.a_max = A.maxCoeff();
  m.lambda0_max = lambda0.maxCoeff();
  m.lambda0_min = lambda0.minCoeff();
  return m;
}

GroundTruth make_ground_truth(const Eigen::VectorXd& w_star) {
  GroundTruth t;
  t.w_star = w_star;
  t.k = 0;
  t.s = 0.0;
  for (Eigen::Index j = 0; j < w_star.size(); ++j) {
    if (!std::isfinite(w_star(j))) throw NonFiniteEntry("w_star entry not finite");
    if (w_star(j) < 0.0) throw NegativeWeight("w_star(" + std::to_string(j) + ") is negative");
    if (w_star(j) > 0.0) ++t.k;
    t.s += w_star(j);
  }
  return t;
}

ModelRates rates(const PoissonLinearModel& model, const Eigen::VectorXd& w) {
  if (w.size() != model.p())
    throw DimensionMismatch("w has " + std::to_string(w.size()) + " entries, expected " +
                            std::to_string(model.p()));
  for (Eigen::Index j = 0; j < w.size(); ++j)
    if (w(j) < 0.0) throw NegativeWeight("w(" + std::to_string(j) + ") is negative");
  ModelRates r;
  r.lambda_w = model.lambda0 + model.A * w;
  r.lambda_min = r.lambda_w.minCoeff();
  r.lambda_max = r.lambda_w.maxCoeff();
  return r;
}

ObservationSet sample_observations(const PoissonLinearModel& model, const GroundTruth& truth,
                                   std::uint64_t seed) {
  const ModelRates r = rates(model, truth.w_star);
  Rng rng(seed);
  ObservationSet obs;
  obs.y.resize(model.n());
  for (Eigen::Index i = 0; i < model.n(); ++i)
    obs.y(i) = static_cast<double>(rng.poisson(r.lambda_w(i)));
  obs.seed = seed;
  return obs;
}

std::pair<PoissonLinearModel, ObservationSet> ingest_csv(const std::string& path_A,
                                                         const std::string& path_y,
                                                         const std::string& path_lambda0) {
  const Eigen::MatrixXd A = read_csv_matrix(path_A);
  const Eigen::VectorXd y = read_csv_vector(path_y);
  const Eigen::VectorXd lambda0 = read_csv_vector(path_lambda0);
  if (y.size() != A.rows())
    throw DimensionMismatch(path_y + ": " + std::to_string(y.size()) + " counts for " +
                            std::to_string(A.rows()) + " sensor rows");
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y(i) < 0.0 || y(i) != std::floor(y(i)))
      throw NonIntegerCount(path_y + ": entry " + std::to_string(i + 1) +
                            " is not a nonnegative integer");
  }
  PoissonLinearModel model = build_model(A, lambda0);
  ObservationSet obs;
  obs.y = y;
  obs.seed = std::nullopt;
  return {std::move(model), std::move(obs)};
}

Eigen::MatrixXd sample_design(Eigen::Index n, Eigen::Index p, DesignKind kind, Rng& rng) {
  Eigen::MatrixXd A(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j)
      A(i, j) = kind == DesignKind::kUniform01 ? rng.uniform() : std::abs(rng.normal());
  return A;
}

GroundTruth sample_ground_truth(Eigen::Index p, Eigen::Index k, double s, Rng& rng) {
  if (k < 1 || k > p) throw InvalidSparsity("need 1 <= k <= p");
  std::vector<std::size_t> support;
  rng.sample_indices(static_cast<std::size_t>(p), static_cast<std::size_t>(k), support);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(p);
  double total = 0.0;
  for (std::size_t idx : support) {
    // uniform(0,1) magnitudes; draw away from exact 0 so the support size
    // stays k after rescaling.
    double m;
    do {
      m = rng.uniform();
    } while (m == 0.0);
    w(static_cast<Eigen::Index>(idx)) = m;
    total += m;
  }
  w *= s / total;
  return make_ground_truth(w);
}

}  // namespace psr
