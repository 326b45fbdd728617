#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace qpi {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Linear state-space model of a repeated process: F(t) = S * T^t * P.
// States are row vectors and one process application multiplies by T on
// the right; row i of S is the state prepared by initialization i and
// column m of P extracts the YES probability of measurement m.
struct Model {
  int d = 0;
  Matrix S;  // |I| x d
  Matrix T;  // d x d
  Matrix P;  // d x |M|
  std::vector<std::string> init_labels;
  std::vector<std::string> meas_labels;

  int n_init() const { return static_cast<int>(S.rows()); }
  int n_meas() const { return static_cast<int>(P.cols()); }

  // Checks dimension consistency, label counts and entry finiteness.
  void validate() const;
};

// First-order generator of the stroboscopic map: T = 1 + L * dtau.
struct Generator {
  Matrix L;
  double dtau = 0;
};

// T^t by repeated squaring; T^0 is the identity.
Matrix matrix_power(const Matrix& T, std::uint64_t t);

// S * T^t * P as an |I| x |M| matrix of nominal probabilities.
Matrix predict(const Model& model, std::uint64_t t);

// True when every entry lies in [0, 1]. Intermediate fits may predict
// out-of-range values, so this is a checkable flag, not an invariant.
bool predictions_valid(const Matrix& F);

// Similarity transform (S*G, G^-1*T*G, G^-1*P); predictions are unchanged.
// G must be invertible with condition number below cond_limit.
Model gauge_transform(const Model& model, const Matrix& G,
                      double cond_limit = 1e12);

Generator extract_generator(const Model& model, double dtau);

// Deterministic seeded test-fixture generator. T has spectral radius <= 1
// and all predictions for t in 0..t_max lie in [0, 1].
Model random_model(int d, int n_init, int n_meas, std::uint64_t seed,
                   std::int64_t t_max = 64);

// Plain-text model files (.qpm): key-value document with nested arrays,
// fields dimension / init_labels / meas_labels / S / T / P, round-trip exact.
void write_model(const Model& model, const std::string& path);
Model read_model(const std::string& path);

}  // namespace qpi
