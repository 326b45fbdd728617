#include "qpi/model.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>

#include "qpi/errors.hpp"
#include "rng.hpp"
#include "text_io.hpp"

namespace qpi {

namespace {

std::vector<std::string> numbered_labels(const char* stem, int n) {
  std::vector<std::string> out;
  out.reserve(n);
  for (int k = 0; k < n; ++k) out.push_back(stem + std::to_string(k));
  return out;
}

double spectral_radius(const Matrix& A) {
  Eigen::EigenSolver<Matrix> es(A, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

void Model::validate() const {
  if (d < 1) fail_config("model dimension must be positive");
  if (S.cols() != d || T.rows() != d || T.cols() != d || P.rows() != d)
    fail_config("model matrix shapes disagree with the dimension");
  if (S.rows() < 1 || P.cols() < 1)
    fail_config("model needs at least one initialization and one measurement");
  if (static_cast<int>(init_labels.size()) != n_init() ||
      static_cast<int>(meas_labels.size()) != n_meas())
    fail_config("model label counts disagree with matrix shapes");
  if (!S.allFinite() || !T.allFinite() || !P.allFinite())
    fail_config("model contains non-finite entries");
}

Matrix matrix_power(const Matrix& T, std::uint64_t t) {
  Matrix result = Matrix::Identity(T.rows(), T.cols());
  Matrix base = T;
  while (t > 0) {
    if (t & 1) result = result * base;
    t >>= 1;
    if (t > 0) base = base * base;
  }
  return result;
}

Matrix predict(const Model& model, std::uint64_t t) {
  return model.S * matrix_power(model.T, t) * model.P;
}

bool predictions_valid(const Matrix& F) {
  return F.allFinite() && F.minCoeff() >= 0.0 && F.maxCoeff() <= 1.0;
}

Model gauge_transform(const Model& model, const Matrix& G, double cond_limit) {
  if (G.rows() != model.d || G.cols() != model.d)
    fail_config("gauge matrix shape disagrees with the model dimension");
  Eigen::JacobiSVD<Matrix> svd(G);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  if (smin <= 0 || smax / smin > cond_limit)
    fail_numeric("gauge matrix is singular or too ill-conditioned");
  Matrix Ginv = G.inverse();
  Model out = model;
  out.S = model.S * G;
  out.T = Ginv * model.T * G;
  out.P = Ginv * model.P;
  return out;
}

Generator extract_generator(const Model& model, double dtau) {
  if (!(dtau > 0)) fail_config("generator time step must be positive");
  Generator gen;
  gen.dtau = dtau;
  gen.L = (model.T - Matrix::Identity(model.d, model.d)) / dtau;
  return gen;
}

Model random_model(int d, int n_init, int n_meas, std::uint64_t seed,
                   std::int64_t t_max) {
  if (d < 1 || n_init < 1 || n_meas < 1)
    fail_config("random_model needs d, |I|, |M| >= 1");
  if (t_max < 1) fail_config("random_model needs t_max >= 1");

  Model m;
  m.d = d;
  m.init_labels = numbered_labels("i", n_init);
  m.meas_labels = numbered_labels("m", n_meas);

  if (d == 1) {
    std::mt19937_64 eng(detail::mix64(seed));
    m.S = Matrix::Ones(n_init, 1);
    m.T = Matrix::Ones(1, 1);
    m.P.resize(1, n_meas);
    for (int k = 0; k < n_meas; ++k) m.P(0, k) = 0.2 + 0.6 * detail::canonical(eng);
    return m;
  }

  // One stationary mode plus a (d-1)-dimensional decaying fluctuation block,
  // hidden behind a random orthogonal gauge. The fluctuation amplitude is
  // scaled so predictions stay within [0.05, 0.95] over 0..t_max, and draws
  // whose Hankel spectrum is too close to rank deficiency are rejected so
  // the model is identifiable in practice, not just generically.
  const int ds = d - 1;
  for (int attempt = 0; attempt < 200; ++attempt) {
    std::mt19937_64 eng(detail::stream_seed(seed, attempt, 0x6d6f64656cULL, 0));

    Matrix Ts(ds, ds);
    for (int r = 0; r < ds; ++r)
      for (int c = 0; c < ds; ++c) Ts(r, c) = detail::gauss(eng);
    const double radius = spectral_radius(Ts);
    if (radius < 1e-12) continue;
    const double f = 0.6 + 0.35 * detail::canonical(eng);
    Ts *= f / radius;

    Matrix U(n_init, ds), V(ds, n_meas);
    for (int r = 0; r < n_init; ++r)
      for (int c = 0; c < ds; ++c) U(r, c) = detail::gauss(eng);
    for (int r = 0; r < ds; ++r)
      for (int c = 0; c < n_meas; ++c) V(r, c) = detail::gauss(eng);

    // Largest fluctuation over the horizon fixes the amplitude.
    double peak = 0;
    Matrix X = U;
    for (std::int64_t t = 0; t <= t_max; ++t) {
      peak = std::max(peak, (X * V).cwiseAbs().maxCoeff());
      X = X * Ts;
    }
    if (peak < 1e-12) continue;
    const double amp = 0.45 / peak;

    Matrix Sb(n_init, d), Pb(d, n_meas), Tb = Matrix::Zero(d, d);
    Sb.col(0).setOnes();
    Sb.rightCols(ds) = std::sqrt(amp) * U;
    Pb.row(0).setConstant(0.5);
    Pb.bottomRows(ds) = std::sqrt(amp) * V;
    Tb(0, 0) = 1.0;
    Tb.bottomRightCorner(ds, ds) = Ts;

    // Identifiability screen: the exact response Hankel at depth d must
    // have its d-th singular value clearly away from zero, and the
    // fluctuating modes must be mutually comparable in size.
    const int l = d;
    Matrix Hf((l + 1) * n_init, (l + 1) * n_meas);
    Matrix Xp = Matrix::Identity(d, d);
    std::vector<Matrix> F(2 * l + 1);
    for (int t = 0; t <= 2 * l; ++t) {
      Matrix Ff = Sb * Xp * Pb;
      F[t] = Ff.array() - 0.5;  // fluctuation part only
      Xp = Xp * Tb;
    }
    for (int k1 = 0; k1 <= l; ++k1)
      for (int k2 = 0; k2 <= l; ++k2)
        Hf.block(k1 * n_init, k2 * n_meas, n_init, n_meas) = F[k1 + k2];
    Eigen::JacobiSVD<Matrix> svd(Hf);
    const auto& sing = svd.singularValues();
    if (sing(ds - 1) / sing(0) < 0.05) continue;

    Matrix R(d, d);
    std::mt19937_64 geng(detail::stream_seed(seed, attempt, 0x6761756765ULL, 0));
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) R(r, c) = detail::gauss(geng);
    Matrix Q = Eigen::HouseholderQR<Matrix>(R).householderQ();

    m.S = Sb * Q;
    m.T = Q.transpose() * Tb * Q;
    m.P = Q.transpose() * Pb;
    return m;
  }
  fail_numeric("random model generation exhausted its retry budget");
}

namespace {

std::string fmt_matrix(const Matrix& A) {
  std::string out = "[\n";
  for (Eigen::Index r = 0; r < A.rows(); ++r) {
    for (Eigen::Index c = 0; c < A.cols(); ++c) {
      if (c) out += ' ';
      out += detail::fmt_double(A(r, c));
    }
    out += '\n';
  }
  out += "]\n";
  return out;
}

Matrix parse_matrix(const std::vector<std::string>& lines, std::size_t& idx,
                    const std::string& key, int rows, int cols,
                    const std::string& path) {
  const std::string open = detail::expect_field(lines, idx, key, path);
  if (open != "[") fail_io(path + ": field '" + key + "' must open a matrix block");
  Matrix A(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (idx >= lines.size()) fail_io(path + ": truncated matrix '" + key + "'");
    std::vector<std::string> cells;
    for (const auto& piece : detail::split(detail::trim(lines[idx]), ' '))
      if (!piece.empty()) cells.push_back(piece);
    if (static_cast<int>(cells.size()) != cols)
      fail_io(path + ": matrix '" + key + "' row " + std::to_string(r) +
              " has " + std::to_string(cells.size()) + " entries, expected " +
              std::to_string(cols));
    for (int c = 0; c < cols; ++c)
      A(r, c) = detail::parse_double(cells[c], key + " entry");
    ++idx;
  }
  if (idx >= lines.size() || detail::trim(lines[idx]) != "]")
    fail_io(path + ": matrix '" + key + "' is not closed");
  ++idx;
  if (!A.allFinite()) fail_io(path + ": matrix '" + key + "' has non-finite entries");
  return A;
}

}  // namespace

void write_model(const Model& model, const std::string& path) {
  model.validate();
  std::string out = "qpi model 1\n";
  out += "dimension: " + std::to_string(model.d) + "\n";
  out += "init_labels: " + detail::join_list(model.init_labels) + "\n";
  out += "meas_labels: " + detail::join_list(model.meas_labels) + "\n";
  out += "S: " + fmt_matrix(model.S);
  out += "T: " + fmt_matrix(model.T);
  out += "P: " + fmt_matrix(model.P);
  detail::write_text(path, out);
}

Model read_model(const std::string& path) {
  const auto lines = detail::read_lines(path);
  std::size_t idx = 0;
  if (lines.empty() || lines[0] != "qpi model 1")
    fail_io(path + ": not a model file (missing 'qpi model 1' header)");
  ++idx;

  Model m;
  m.d = static_cast<int>(
      detail::parse_ll(detail::expect_field(lines, idx, "dimension", path),
                       "dimension"));
  if (m.d < 1) fail_io(path + ": dimension must be positive");
  m.init_labels = detail::parse_list(
      detail::expect_field(lines, idx, "init_labels", path), "init_labels");
  m.meas_labels = detail::parse_list(
      detail::expect_field(lines, idx, "meas_labels", path), "meas_labels");
  if (m.init_labels.empty() || m.meas_labels.empty())
    fail_io(path + ": label lists must be nonempty");

  const int ni = static_cast<int>(m.init_labels.size());
  const int nm = static_cast<int>(m.meas_labels.size());
  m.S = parse_matrix(lines, idx, "S", ni, m.d, path);
  m.T = parse_matrix(lines, idx, "T", m.d, m.d, path);
  m.P = parse_matrix(lines, idx, "P", m.d, nm, path);
  return m;
}

}  // namespace qpi
