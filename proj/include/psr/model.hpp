#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>

#include "psr/rng.hpp"

namespace psr {

// Observation model: y_i ~ Poisson(lambda0_i + a_i^T w) with A >= 0
// elementwise and lambda0 > 0, so every feasible w >= 0 keeps rates positive.
struct PoissonLinearModel {
  Eigen::MatrixXd A;        // n x p, nonnegative
  Eigen::VectorXd lambda0;  // n, strictly positive background rates
  double a_max = 0.0;       // max entry of A
  double lambda0_max = 0.0;
  double lambda0_min = 0.0;

  Eigen::Index n() const { return A.rows(); }
  Eigen::Index p() const { return A.cols(); }

  // First `rows` sensors as a model of their own (used by concentration
  // scans that grow the sample size over a fixed instance).
  PoissonLinearModel prefix(Eigen::Index rows) const;
};

// True signal; k and s are always recomputed from the vector.
struct GroundTruth {
  Eigen::VectorXd w_star;  // p, nonnegative
  Eigen::Index k = 0;      // number of strictly positive entries
  double s = 0.0;          // l1 amplitude, sum of entries
};

GroundTruth make_ground_truth(const Eigen::VectorXd& w_star);

// Rates lambda0 + A w for a specific w, with extremes.
struct ModelRates {
  Eigen::VectorXd lambda_w;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
};

struct ObservationSet {
  Eigen::VectorXd y;  // counts stored as doubles, always integral and >= 0
  std::optional<std::uint64_t> seed;  // absent for ingested data
};

PoissonLinearModel build_model(const Eigen::MatrixXd& A, const Eigen::VectorXd& lambda0);

ModelRates rates(const PoissonLinearModel& model, const Eigen::VectorXd& w);

ObservationSet sample_observations(const PoissonLinearModel& model, const GroundTruth& truth,
                                   std::uint64_t seed);

// Headerless CSV ingestion: A row-major, y and lambda0 one value per line.
std::pair<PoissonLinearModel, ObservationSet> ingest_csv(const std::string& path_A,
                                                         const std::string& path_y,
                                                         const std::string& path_lambda0);

// --- synthetic instance generators shared by experiments and tests ---

enum class DesignKind {
  kUniform01,   // entries i.i.d. uniform on (0,1)
  kHalfNormal,  // entries i.i.d. |N(0,1)|
};

Eigen::MatrixXd sample_design(Eigen::Index n, Eigen::Index p, DesignKind kind, Rng& rng);

// k-sparse nonnegative truth: support uniform among size-k subsets, magnitudes
// i.i.d. uniform(0,1), rescaled so the entries sum to s.
GroundTruth sample_ground_truth(Eigen::Index p, Eigen::Index k, double s, Rng& rng);

}  // namespace psr
