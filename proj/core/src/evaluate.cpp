#include "qpi/evaluate.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <vector>

#include "qpi/errors.hpp"
#include "qpi/hankel.hpp"
#include "text_io.hpp"

namespace qpi {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string csv_field(double v) {
  return std::isnan(v) ? std::string() : detail::fmt_double(v);
}

double parse_field(const std::string& s, const std::string& what) {
  if (detail::trim(s).empty()) return kNaN;
  return detail::parse_double(s, what);
}

int axis_index(const std::vector<std::string>& labels, const std::string& name) {
  for (std::size_t m = 0; m < labels.size(); ++m)
    if (labels[m] == name) return static_cast<int>(m);
  fail_config("measurement label '" + name +
              "' is missing; cannot form Bloch states");
}

struct MeanStderr {
  double mean = kNaN;
  double stderr_ = kNaN;
};

MeanStderr mean_stderr(const std::vector<double>& xs) {
  MeanStderr out;
  const std::size_t n = xs.size();
  if (n == 0) return out;
  double sum = 0;
  for (double x : xs) sum += x;
  out.mean = sum / static_cast<double>(n);
  if (n == 1) {
    out.stderr_ = 0;
    return out;
  }
  double ss = 0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  out.stderr_ = std::sqrt(ss / static_cast<double>(n - 1) /
                          static_cast<double>(n));
  return out;
}

}  // namespace

Eigen::Matrix2cd bloch_state(double fx, double fy, double fz) {
  const double rx = 2 * fx - 1, ry = 2 * fy - 1, rz = 2 * fz - 1;
  Eigen::Matrix2cd rho;
  rho(0, 0) = 0.5 * (1 + rz);
  rho(1, 1) = 0.5 * (1 - rz);
  rho(0, 1) = 0.5 * std::complex<double>(rx, -ry);
  rho(1, 0) = 0.5 * std::complex<double>(rx, ry);
  return rho;
}

double trace_distance(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) {
  const Eigen::Matrix2cd diff = a - b;
  if ((diff - diff.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
    fail_numeric("trace distance of non-Hermitian difference");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(diff,
                                                     Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

Model qpt_baseline(const TruthTable& truth) {
  const int nf = static_cast<int>(truth.frame_labels.size());
  const int nm = static_cast<int>(truth.meas_labels.size());
  if (nf < 1 || truth.frame0.rows() != nf || truth.frame1.rows() != nf ||
      truth.frame0.cols() != nm || truth.frame1.cols() != nm)
    fail_config("truth table carries no usable tomographic frame");

  // Probability blocks with a constant column appended, so the realized
  // four-dimensional model tracks affine state mixtures exactly.
  Matrix block0(nf, nm + 1), block1(nf, nm + 1);
  block0 << truth.frame0, Matrix::Ones(nf, 1);
  block1 << truth.frame1, Matrix::Ones(nf, 1);

  const Model frame_model = ho_kalman_exact(block0, block1, nf, nm + 1, 4);

  Model out;
  out.d = frame_model.d;
  out.T = frame_model.T;
  out.S.resize(static_cast<int>(truth.init_labels.size()), out.d);
  for (std::size_t i = 0; i < truth.init_labels.size(); ++i) {
    const auto& label = truth.init_labels[i];
    const auto it = std::find(truth.frame_labels.begin(),
                              truth.frame_labels.end(), label);
    if (it == truth.frame_labels.end())
      fail_config("initialization '" + label +
                  "' is not part of the tomography frame");
    out.S.row(static_cast<int>(i)) = frame_model.S.row(
        static_cast<int>(it - truth.frame_labels.begin()));
  }
  out.P = frame_model.P.leftCols(nm);
  out.init_labels = truth.init_labels;
  out.meas_labels = truth.meas_labels;
  out.validate();
  return out;
}

ErrorCurve error_curve(const Model& model, const TruthTable& truth,
                       const std::vector<std::int64_t>& grid,
                       const Dataset* raw, const Model* baseline) {
  model.validate();
  if (model.init_labels != truth.init_labels ||
      model.meas_labels != truth.meas_labels)
    fail_config("model and truth table disagree on labels");
  if (baseline && (baseline->init_labels != truth.init_labels ||
                   baseline->meas_labels != truth.meas_labels))
    fail_config("baseline model and truth table disagree on labels");
  if (raw && (raw->init_labels != truth.init_labels ||
              raw->meas_labels != truth.meas_labels))
    fail_config("dataset and truth table disagree on labels");

  const int mx = axis_index(truth.meas_labels, "x");
  const int my = axis_index(truth.meas_labels, "y");
  const int mz = axis_index(truth.meas_labels, "z");
  const int ni = static_cast<int>(truth.init_labels.size());

  Schedule raw_sched;
  if (raw) raw_sched = build_schedule(raw->schedule_params);

  auto state = [&](const Matrix& F, int i) {
    return bloch_state(F(i, mx), F(i, my), F(i, mz));
  };

  ErrorCurve curve;
  curve.reserve(grid.size());
  for (std::int64_t t : grid) {
    const Matrix& exact = truth.at(t);
    ErrorPoint pt;
    pt.t = t;
    pt.raw_error = kNaN;
    pt.qpt_error = kNaN;

    const Matrix pred = predict(model, static_cast<std::uint64_t>(t));
    double acc = 0;
    for (int i = 0; i < ni; ++i)
      acc += trace_distance(state(pred, i), state(exact, i));
    pt.qpi_error = acc / ni;

    if (baseline) {
      const Matrix base = predict(*baseline, static_cast<std::uint64_t>(t));
      acc = 0;
      for (int i = 0; i < ni; ++i)
        acc += trace_distance(state(base, i), state(exact, i));
      pt.qpt_error = acc / ni;
    }

    if (raw && raw_sched.contains(t)) {
      acc = 0;
      double n_sum = 0;
      for (int i = 0; i < ni; ++i) {
        const auto& rx = raw->at(i, t, mx);
        const auto& ry = raw->at(i, t, my);
        const auto& rz = raw->at(i, t, mz);
        acc += trace_distance(bloch_state(freq(rx), freq(ry), freq(rz)),
                              state(exact, i));
        n_sum += static_cast<double>(rx.N + ry.N + rz.N);
      }
      pt.raw_error = acc / ni;
      pt.n_avg = n_sum / (3.0 * ni);
    }
    curve.push_back(pt);
  }
  return curve;
}

void write_error_csv(const ErrorCurve& curve, const std::string& path) {
  std::string out = "t,qpi_error,raw_error,qpt_error,n_avg\n";
  for (const ErrorPoint& pt : curve) {
    out += std::to_string(pt.t);
    out += ',' + csv_field(pt.qpi_error);
    out += ',' + csv_field(pt.raw_error);
    out += ',' + csv_field(pt.qpt_error);
    out += ',' + csv_field(pt.n_avg);
    out += '\n';
  }
  detail::write_text(path, out);
}

ErrorCurve read_error_csv(const std::string& path) {
  const auto lines = detail::read_lines(path);
  if (lines.empty() || lines[0] != "t,qpi_error,raw_error,qpt_error,n_avg")
    fail_io(path + ": not an error-curve file");
  ErrorCurve curve;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (detail::trim(lines[ln]).empty() && ln + 1 == lines.size()) break;
    const auto parts = detail::split(lines[ln], ',');
    if (parts.size() != 5)
      fail_io(path + ": malformed row '" + lines[ln] + "'");
    ErrorPoint pt;
    pt.t = detail::parse_ll(parts[0], "error-curve time");
    pt.qpi_error = parse_field(parts[1], "qpi_error");
    pt.raw_error = parse_field(parts[2], "raw_error");
    pt.qpt_error = parse_field(parts[3], "qpt_error");
    const double n_avg = parse_field(parts[4], "n_avg");
    pt.n_avg = std::isnan(n_avg) ? 0 : n_avg;
    curve.push_back(pt);
  }
  return curve;
}

void write_aggregate_csv(const std::vector<ErrorCurve>& curves,
                         const std::string& path) {
  struct Columns {
    std::vector<double> qpi, raw, qpt;
  };
  std::map<std::int64_t, Columns> by_t;
  for (const ErrorCurve& curve : curves) {
    for (const ErrorPoint& pt : curve) {
      Columns& col = by_t[pt.t];
      col.qpi.push_back(pt.qpi_error);
      if (!std::isnan(pt.raw_error)) col.raw.push_back(pt.raw_error);
      if (!std::isnan(pt.qpt_error)) col.qpt.push_back(pt.qpt_error);
    }
  }
  std::string out =
      "t,qpi_mean,qpi_stderr,raw_mean,raw_stderr,qpt_mean,qpt_stderr,runs\n";
  for (const auto& [t, col] : by_t) {
    const MeanStderr qpi = mean_stderr(col.qpi);
    const MeanStderr raw = mean_stderr(col.raw);
    const MeanStderr qpt = mean_stderr(col.qpt);
    out += std::to_string(t);
    out += ',' + csv_field(qpi.mean) + ',' + csv_field(qpi.stderr_);
    out += ',' + csv_field(raw.mean) + ',' + csv_field(raw.stderr_);
    out += ',' + csv_field(qpt.mean) + ',' + csv_field(qpt.stderr_);
    out += ',' + std::to_string(col.qpi.size());
    out += '\n';
  }
  detail::write_text(path, out);
}

double mean_error(const ErrorCurve& curve, std::int64_t t_min,
                  std::int64_t t_max) {
  double sum = 0;
  int n = 0;
  for (const ErrorPoint& pt : curve) {
    if (pt.t < t_min || pt.t > t_max) continue;
    sum += pt.qpi_error;
    ++n;
  }
  return n ? sum / n : kNaN;
}

}  // namespace qpi
