#include "qpi/simulate.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <set>

#include "qpi/errors.hpp"
#include "rng.hpp"

namespace qpi {

namespace {

constexpr double kPi = 3.14159265358979323846;

using C = std::complex<double>;

CMatrix pauli(int axis) {
  CMatrix s(2, 2);
  switch (axis) {
    case 0: s << C(0), C(1), C(1), C(0); break;
    case 1: s << C(0), C(0, -1), C(0, 1), C(0); break;
    default: s << C(1), C(0), C(0), C(-1); break;
  }
  return s;
}

// Single-qubit pure states as density matrices.
CMatrix qubit_state(const std::string& label) {
  Eigen::Vector2cd v;
  const double r = 1 / std::sqrt(2.0);
  if (label == "z+") v << 1, 0;
  else if (label == "z-") v << 0, 1;
  else if (label == "x+") v << r, r;
  else if (label == "y+") v << r, C(0, r);
  else fail_config("unknown qubit state label '" + label + "'");
  return v * v.adjoint();
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index r = 0; r < a.rows(); ++r)
    for (Eigen::Index c = 0; c < a.cols(); ++c)
      out.block(r * b.rows(), c * b.cols(), b.rows(), b.cols()) = a(r, c) * b;
  return out;
}

// exp(-i H dt) for Hermitian H via eigendecomposition.
CMatrix hermitian_propagator(const CMatrix& H, double dt) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(H);
  Eigen::VectorXcd phases(H.rows());
  for (Eigen::Index k = 0; k < H.rows(); ++k)
    phases(k) = std::exp(C(0, -es.eigenvalues()(k) * dt));
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

const std::vector<std::string> kMeasLabels = {"x", "y", "z"};
const std::vector<std::string> kFrameLabels = {"x+", "y+", "z+", "z-"};

std::vector<CMatrix> qubit_frame() {
  std::vector<CMatrix> out;
  for (const auto& lab : kFrameLabels) out.push_back(qubit_state(lab));
  return out;
}

double gaussian_pulse(double tau, double amplitude, double width) {
  const double u = (tau - 0.5) / width;
  return amplitude * std::exp(-u * u);
}

CMatrix leakage_hamiltonian(double omega, double delta) {
  const double s2 = std::sqrt(2.0);
  CMatrix H = CMatrix::Zero(3, 3);
  H(0, 1) = H(1, 0) = omega;
  H(1, 2) = H(2, 1) = s2 * omega;
  H(2, 2) = delta;
  return H;
}

// Midpoint piecewise-constant propagator of one unit step of the pulsed
// Hamiltonian; `two_level` drops the leakage level for calibration.
CMatrix leakage_step(double amplitude, const LeakageParams& p, int substeps,
                     bool two_level) {
  const int dim = two_level ? 2 : 3;
  CMatrix U = CMatrix::Identity(dim, dim);
  const double dt = 1.0 / substeps;
  for (int k = 0; k < substeps; ++k) {
    const double omega = gaussian_pulse((k + 0.5) * dt, amplitude, p.pulse_width);
    CMatrix H = two_level ? leakage_hamiltonian(omega, 0).topLeftCorner(2, 2)
                          : leakage_hamiltonian(omega, p.Delta);
    U = hermitian_propagator(H, dt) * U;
  }
  // The substep product drifts off the unitary group by a few thousand ulps,
  // which compounds over long trajectories; one polar projection removes it.
  Eigen::JacobiSVD<CMatrix> svd(U, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

double two_level_rotation_angle(double amplitude, const LeakageParams& p) {
  const CMatrix U = leakage_step(amplitude, p, p.substeps, /*two_level=*/true);
  return 2 * std::atan2(std::abs(U(1, 0)), std::abs(U(0, 0)));
}

}  // namespace

double leakage_pulse_amplitude(const LeakageParams& p) {
  if (!(p.pulse_width > 0)) fail_config("pulse width must be positive");
  if (p.substeps < 1) fail_config("substep count must be positive");
  // Scalar root find for the amplitude whose pulse rotates the two-level
  // truncation by exactly pi. The angle is linear in the amplitude, so the
  // secant step is exact; the loop is a safeguard.
  double a0 = 1.0, a1 = 1.2;
  double g0 = two_level_rotation_angle(a0, p) - kPi;
  double g1 = two_level_rotation_angle(a1, p) - kPi;
  for (int iter = 0; iter < 60; ++iter) {
    if (std::abs(g1) < 1e-12) return a1;
    const double denom = g1 - g0;
    if (denom == 0) break;
    const double a2 = a1 - g1 * (a1 - a0) / denom;
    a0 = a1;
    g0 = g1;
    a1 = a2;
    g1 = two_level_rotation_angle(a1, p) - kPi;
  }
  fail_numeric("pulse amplitude calibration did not converge");
}

double leakage_step_convergence(const LeakageParams& p) {
  const double amplitude = leakage_pulse_amplitude(p);
  const CMatrix u1 = leakage_step(amplitude, p, p.substeps, false);
  const CMatrix u2 = leakage_step(amplitude, p, 2 * p.substeps, false);
  return (u1 - u2).cwiseAbs().maxCoeff();
}

Scenario drift_scenario(const DriftParams& p) {
  Scenario sc;
  sc.name = "drift";
  sc.init_labels = {"z+", "x+"};
  sc.meas_labels = kMeasLabels;
  sc.frame_labels = kFrameLabels;
  for (const auto& lab : sc.init_labels) sc.init_states.push_back(qubit_state(lab));
  sc.frame_states = qubit_frame();
  for (int axis = 0; axis < 3; ++axis) sc.meas_ops.push_back(pauli(axis));
  const double eps = p.epsilon, omega = p.Omega;
  sc.step_unitary = [eps, omega](std::int64_t t) {
    // Imperfect bit flip: rotation about y by pi + eps*sin(Omega*t).
    const double theta = kPi + eps * std::sin(omega * static_cast<double>(t));
    CMatrix U(2, 2);
    U << C(std::cos(theta / 2)), C(-std::sin(theta / 2)),
        C(std::sin(theta / 2)), C(std::cos(theta / 2));
    return U;
  };
  sc.time_dependent = true;
  return sc;
}

Scenario leakage_scenario(const LeakageParams& p) {
  Scenario sc;
  sc.name = "leakage";
  sc.init_labels = {"z+", "z-", "x+", "y+"};
  sc.meas_labels = kMeasLabels;
  sc.frame_labels = kFrameLabels;

  auto embed = [](const CMatrix& rho2) {
    CMatrix rho3 = CMatrix::Zero(3, 3);
    rho3.topLeftCorner(2, 2) = rho2;
    return rho3;
  };
  for (const auto& lab : sc.init_labels)
    sc.init_states.push_back(embed(qubit_state(lab)));
  for (const auto& rho2 : qubit_frame()) sc.frame_states.push_back(embed(rho2));

  // A leaked state answers every Pauli question as the -1 outcome: the
  // observable is extended as sigma_m (+) (-1) on the third level.
  for (int axis = 0; axis < 3; ++axis) {
    CMatrix M = CMatrix::Zero(3, 3);
    M.topLeftCorner(2, 2) = pauli(axis);
    M(2, 2) = -1.0;
    sc.meas_ops.push_back(M);
  }

  const double amplitude = leakage_pulse_amplitude(p);
  const CMatrix U = leakage_step(amplitude, p, p.substeps, /*two_level=*/false);
  sc.step_unitary = [U](std::int64_t) { return U; };
  sc.time_dependent = false;
  return sc;
}

Scenario spin_exchange_scenario(const SpinExchangeParams& p) {
  Scenario sc;
  sc.name = "spin_exchange";
  sc.init_labels = {"x+", "y+", "z+"};
  sc.meas_labels = kMeasLabels;
  sc.frame_labels = kFrameLabels;

  const CMatrix impurity = qubit_state("z+");
  for (const auto& lab : sc.init_labels)
    sc.init_states.push_back(kron(qubit_state(lab), impurity));
  for (const auto& rho2 : qubit_frame())
    sc.frame_states.push_back(kron(rho2, impurity));

  const CMatrix id2 = CMatrix::Identity(2, 2);
  for (int axis = 0; axis < 3; ++axis)
    sc.meas_ops.push_back(kron(pauli(axis), id2));

  CMatrix H = CMatrix::Zero(4, 4);
  for (int axis = 0; axis < 3; ++axis)
    H += p.gamma * kron(pauli(axis), pauli(axis));
  const CMatrix U = hermitian_propagator(H, 1.0);
  sc.step_unitary = [U](std::int64_t) { return U; };
  sc.time_dependent = false;
  return sc;
}

namespace {

double yes_probability(const CMatrix& rho, const CMatrix& M) {
  const double expectation = (rho * M).trace().real();
  const double f = (1 + expectation) / 2;
  if (f < -1e-10 || f > 1 + 1e-10)
    fail_numeric("simulated probability left [0,1]");
  return std::clamp(f, 0.0, 1.0);
}

void check_state(const CMatrix& rho) {
  if (std::abs(rho.trace().real() - 1) > 1e-10 ||
      std::abs(rho.trace().imag()) > 1e-10)
    fail_numeric("simulated state lost unit trace");
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
    fail_numeric("simulated state lost Hermiticity");
}

}  // namespace

TruthTable exact_probabilities(const Scenario& sc, const Schedule& sched,
                               const std::vector<std::int64_t>& eval_grid) {
  TruthTable truth;
  truth.scenario = sc.name;
  truth.init_labels = sc.init_labels;
  truth.meas_labels = sc.meas_labels;
  truth.frame_labels = sc.frame_labels;

  std::set<std::int64_t> wanted(sched.t_set.begin(), sched.t_set.end());
  for (auto t : eval_grid) {
    if (t < 0) fail_config("evaluation times must be nonnegative");
    wanted.insert(t);
  }
  const std::int64_t t_max =
      std::max<std::int64_t>(wanted.empty() ? 0 : *wanted.rbegin(), 1);

  const int ni = sc.n_init();
  const int nf = static_cast<int>(sc.frame_states.size());
  const int nm = sc.n_meas();
  std::vector<CMatrix> states = sc.init_states;
  states.insert(states.end(), sc.frame_states.begin(), sc.frame_states.end());

  truth.frame0.resize(nf, nm);
  truth.frame1.resize(nf, nm);
  for (std::int64_t t = 0; t <= t_max; ++t) {
    for (const CMatrix& rho : states) check_state(rho);
    if (wanted.count(t)) {
      Matrix F(ni, nm);
      for (int i = 0; i < ni; ++i)
        for (int m = 0; m < nm; ++m)
          F(i, m) = yes_probability(states[i], sc.meas_ops[m]);
      truth.exact[t] = F;
    }
    if (t == 0 || t == 1) {
      Matrix& F = (t == 0) ? truth.frame0 : truth.frame1;
      for (int k = 0; k < nf; ++k)
        for (int m = 0; m < nm; ++m)
          F(k, m) = yes_probability(states[ni + k], sc.meas_ops[m]);
    }
    if (t == t_max) break;
    const CMatrix U = sc.step_unitary(t);
    for (CMatrix& rho : states) rho = U * rho * U.adjoint();
  }
  return truth;
}

Dataset sample_counts(const TruthTable& truth, const Schedule& sched,
                      long long shots, std::uint64_t seed) {
  if (shots < 1) fail_config("shot count must be positive");
  Dataset ds;
  ds.schedule_params = sched.params;
  ds.init_labels = truth.init_labels;
  ds.meas_labels = truth.meas_labels;
  ds.scenario = truth.scenario;
  ds.seed = seed;
  ds.shots = shots;

  const int ni = static_cast<int>(truth.init_labels.size());
  const int nm = static_cast<int>(truth.meas_labels.size());
  for (int i = 0; i < ni; ++i)
    for (std::int64_t t : sched.t_set) {
      const Matrix& F = truth.at(t);
      for (int m = 0; m < nm; ++m) {
        const double f = F(i, m);
        std::mt19937_64 eng(detail::stream_seed(
            seed, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(t),
            static_cast<std::uint64_t>(m)));
        long long y = 0;
        for (long long k = 0; k < shots; ++k)
          if (detail::canonical(eng) < f) ++y;
        ds.records.push_back({i, t, m, shots, y});
      }
    }
  ds.validate();
  return ds;
}

Dataset exact_dataset(const TruthTable& truth, const Schedule& sched,
                      long long shots) {
  if (shots < 1) fail_config("shot count must be positive");
  Dataset ds;
  ds.schedule_params = sched.params;
  ds.init_labels = truth.init_labels;
  ds.meas_labels = truth.meas_labels;
  ds.scenario = truth.scenario;
  ds.seed = 0;
  ds.shots = shots;

  const int ni = static_cast<int>(truth.init_labels.size());
  const int nm = static_cast<int>(truth.meas_labels.size());
  for (int i = 0; i < ni; ++i)
    for (std::int64_t t : sched.t_set) {
      const Matrix& F = truth.at(t);
      for (int m = 0; m < nm; ++m) {
        const long long y = std::clamp<long long>(
            std::llround(F(i, m) * static_cast<double>(shots)), 0, shots);
        ds.records.push_back({i, t, m, shots, y});
      }
    }
  ds.validate();
  return ds;
}

std::vector<std::vector<double>> leakage_level2_population(
    const LeakageParams& p, std::int64_t t_max) {
  if (t_max < 0) fail_config("t_max must be nonnegative");
  const Scenario sc = leakage_scenario(p);
  const CMatrix U = sc.step_unitary(0);
  std::vector<std::vector<double>> out(sc.init_states.size());
  for (std::size_t i = 0; i < sc.init_states.size(); ++i) {
    CMatrix rho = sc.init_states[i];
    out[i].reserve(t_max + 1);
    for (std::int64_t t = 0; t <= t_max; ++t) {
      out[i].push_back(rho(2, 2).real());
      rho = U * rho * U.adjoint();
    }
  }
  return out;
}

}  // namespace qpi
