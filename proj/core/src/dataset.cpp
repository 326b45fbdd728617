#include "qpi/dataset.hpp"

#include <algorithm>
#include <set>
#include <tuple>

#include "qpi/errors.hpp"
#include "text_io.hpp"

namespace qpi {

namespace {

bool record_less(const ExperimentRecord& a, const ExperimentRecord& b) {
  return std::tie(a.i, a.t, a.m) < std::tie(b.i, b.t, b.m);
}

void check_labels(const std::vector<std::string>& labels, const char* what) {
  if (labels.empty()) fail_io(std::string(what) + " must be nonempty");
  std::set<std::string> seen;
  for (const auto& lab : labels) {
    if (lab.empty()) fail_io(std::string(what) + " contains an empty label");
    if (lab.find_first_of(",[]") != std::string::npos)
      fail_io(std::string(what) + " label '" + lab + "' has reserved characters");
    if (!seen.insert(lab).second)
      fail_io(std::string(what) + " label '" + lab + "' repeats");
  }
}

int label_index(const std::vector<std::string>& labels, const std::string& lab,
                const std::string& context) {
  for (std::size_t k = 0; k < labels.size(); ++k)
    if (labels[k] == lab) return static_cast<int>(k);
  fail_io(context + ": unknown label '" + lab + "'");
}

}  // namespace

double freq(const ExperimentRecord& rec) {
  return static_cast<double>(rec.Y) / static_cast<double>(rec.N);
}

double estimate_variance(const ExperimentRecord& rec, double pseudocount) {
  const double fh = (static_cast<double>(rec.Y) + pseudocount) /
                    (static_cast<double>(rec.N) + 2 * pseudocount);
  return fh * (1 - fh) / static_cast<double>(rec.N);
}

const ExperimentRecord& Dataset::at(int i, std::int64_t t, int m) const {
  ExperimentRecord key;
  key.i = i;
  key.t = t;
  key.m = m;
  auto it = std::lower_bound(records.begin(), records.end(), key, record_less);
  if (it == records.end() || it->i != i || it->t != t || it->m != m)
    fail_io("dataset has no record for (i=" + std::to_string(i) +
            ", t=" + std::to_string(t) + ", m=" + std::to_string(m) + ")");
  return *it;
}

void Dataset::validate() const {
  check_labels(init_labels, "init_labels");
  check_labels(meas_labels, "meas_labels");
  schedule_params.validate();
  const Schedule sched = build_schedule(schedule_params);

  const std::size_t expected =
      static_cast<std::size_t>(n_init()) * sched.t_set.size() * n_meas();
  std::size_t pos = 0;
  for (int i = 0; i < n_init(); ++i)
    for (std::int64_t t : sched.t_set)
      for (int m = 0; m < n_meas(); ++m) {
        if (pos >= records.size())
          fail_io("dataset coverage gap: missing record (i=" +
                  std::to_string(i) + ", t=" + std::to_string(t) +
                  ", m=" + std::to_string(m) + ")");
        const ExperimentRecord& rec = records[pos];
        if (pos > 0 && !record_less(records[pos - 1], rec))
          fail_io("dataset has a duplicate or misordered record at (i=" +
                  std::to_string(rec.i) + ", t=" + std::to_string(rec.t) +
                  ", m=" + std::to_string(rec.m) + ")");
        if (rec.i != i || rec.t != t || rec.m != m)
          fail_io("dataset coverage gap: missing record (i=" +
                  std::to_string(i) + ", t=" + std::to_string(t) +
                  ", m=" + std::to_string(m) + ")");
        if (rec.N < 1) fail_io("record trial count must be positive");
        if (rec.Y < 0 || rec.Y > rec.N)
          fail_io("record successes must lie in 0..N");
        ++pos;
      }
  if (pos != records.size() || records.size() != expected)
    fail_io("dataset has records outside the schedule");
}

namespace {

std::string schedule_header(const ScheduleParams& p,
                            const std::vector<std::int64_t>& bases) {
  std::string out;
  out += "l: " + std::to_string(p.l) + "\n";
  out += "a_bar: " + std::to_string(p.a_bar) + "\n";
  out += "b_bar: " + std::to_string(p.b_bar) + "\n";
  out += "flight_len: " + std::to_string(p.resolved_flight_len()) + "\n";
  std::vector<std::string> base_strs;
  base_strs.reserve(bases.size());
  for (auto b : bases) base_strs.push_back(std::to_string(b));
  out += "bases: " + detail::join_list(base_strs) + "\n";
  return out;
}

ScheduleParams parse_schedule_header(const std::vector<std::string>& lines,
                                     std::size_t& idx, const std::string& path) {
  ScheduleParams p;
  p.l = static_cast<int>(
      detail::parse_ll(detail::expect_field(lines, idx, "l", path), "l"));
  p.a_bar = static_cast<int>(detail::parse_ll(
      detail::expect_field(lines, idx, "a_bar", path), "a_bar"));
  p.b_bar = static_cast<int>(detail::parse_ll(
      detail::expect_field(lines, idx, "b_bar", path), "b_bar"));
  p.flight_len = static_cast<int>(detail::parse_ll(
      detail::expect_field(lines, idx, "flight_len", path), "flight_len"));
  p.validate();

  const auto base_strs = detail::parse_list(
      detail::expect_field(lines, idx, "bases", path), "bases");
  const Schedule sched = build_schedule(p);
  if (base_strs.size() != sched.bases.size())
    fail_io(path + ": bases list disagrees with the schedule parameters");
  for (std::size_t k = 0; k < base_strs.size(); ++k)
    if (detail::parse_ll(base_strs[k], "bases entry") != sched.bases[k])
      fail_io(path + ": bases list disagrees with the schedule parameters");
  return p;
}

}  // namespace

void write_dataset(const Dataset& ds, const std::string& path) {
  ds.validate();
  std::string out = "qpi dataset 1\n";
  out += "scenario: " + ds.scenario + "\n";
  for (const auto& [key, value] : ds.scenario_params)
    out += "param." + key + ": " + value + "\n";
  out += "seed: " + std::to_string(ds.seed) + "\n";
  out += "shots: " + std::to_string(ds.shots) + "\n";
  out += schedule_header(ds.schedule_params,
                         build_schedule(ds.schedule_params).bases);
  out += "init_labels: " + detail::join_list(ds.init_labels) + "\n";
  out += "meas_labels: " + detail::join_list(ds.meas_labels) + "\n";
  out += "records: " + std::to_string(ds.records.size()) + "\n";
  for (const ExperimentRecord& rec : ds.records) {
    out += ds.init_labels[rec.i] + "," + std::to_string(rec.t) + "," +
           ds.meas_labels[rec.m] + "," + std::to_string(rec.N) + "," +
           std::to_string(rec.Y) + "\n";
  }
  detail::write_text(path, out);
}

Dataset read_dataset(const std::string& path) {
  const auto lines = detail::read_lines(path);
  if (lines.empty() || lines[0] != "qpi dataset 1")
    fail_io(path + ": not a dataset file (missing 'qpi dataset 1' header)");
  std::size_t idx = 1;

  Dataset ds;
  ds.scenario = detail::expect_field(lines, idx, "scenario", path);
  while (idx < lines.size() && detail::starts_with(lines[idx], "param.")) {
    const auto colon = lines[idx].find(':');
    if (colon == std::string::npos)
      fail_io(path + ": malformed parameter line '" + lines[idx] + "'");
    const std::string key = lines[idx].substr(6, colon - 6);
    const std::string value = detail::trim(lines[idx].substr(colon + 1));
    if (key.empty() || !ds.scenario_params.emplace(key, value).second)
      fail_io(path + ": duplicate or empty parameter key '" + key + "'");
    ++idx;
  }
  ds.seed = detail::parse_u64(detail::expect_field(lines, idx, "seed", path),
                              "seed");
  ds.shots = detail::parse_ll(detail::expect_field(lines, idx, "shots", path),
                              "shots");
  ds.schedule_params = parse_schedule_header(lines, idx, path);
  ds.init_labels = detail::parse_list(
      detail::expect_field(lines, idx, "init_labels", path), "init_labels");
  ds.meas_labels = detail::parse_list(
      detail::expect_field(lines, idx, "meas_labels", path), "meas_labels");
  const long long n_records = detail::parse_ll(
      detail::expect_field(lines, idx, "records", path), "records");

  for (long long k = 0; k < n_records; ++k) {
    if (idx >= lines.size())
      fail_io(path + ": truncated record body (expected " +
              std::to_string(n_records) + " records)");
    const auto cells = detail::split(lines[idx], ',');
    if (cells.size() != 5)
      fail_io(path + ": malformed record line '" + lines[idx] + "'");
    ExperimentRecord rec;
    rec.i = label_index(ds.init_labels, cells[0], path);
    rec.t = detail::parse_ll(cells[1], "record t");
    rec.m = label_index(ds.meas_labels, cells[2], path);
    rec.N = detail::parse_ll(cells[3], "record N");
    rec.Y = detail::parse_ll(cells[4], "record Y");
    ds.records.push_back(rec);
    ++idx;
  }
  if (idx != lines.size() && !detail::trim(lines[idx]).empty())
    fail_io(path + ": unexpected content after the record body");
  ds.validate();
  return ds;
}

void write_freq_csv(const Dataset& ds, const std::string& path) {
  ds.validate();
  std::string out = "i,t,m,N,Y,freq\n";
  for (const ExperimentRecord& rec : ds.records) {
    out += ds.init_labels[rec.i] + "," + std::to_string(rec.t) + "," +
           ds.meas_labels[rec.m] + "," + std::to_string(rec.N) + "," +
           std::to_string(rec.Y) + "," + detail::fmt_double(freq(rec)) + "\n";
  }
  detail::write_text(path, out);
}

const Matrix& TruthTable::at(std::int64_t t) const {
  auto it = exact.find(t);
  if (it == exact.end())
    fail_config("truth table does not cover t=" + std::to_string(t));
  return it->second;
}

namespace {

void append_prob_rows(std::string& out, const Matrix& F,
                      const std::vector<std::string>& row_labels,
                      const std::vector<std::string>& meas_labels,
                      std::int64_t t) {
  for (Eigen::Index i = 0; i < F.rows(); ++i)
    for (Eigen::Index m = 0; m < F.cols(); ++m)
      out += row_labels[i] + "," + std::to_string(t) + "," + meas_labels[m] +
             "," + detail::fmt_double(F(i, m)) + "\n";
}

}  // namespace

void write_truth(const TruthTable& truth, const std::string& path) {
  check_labels(truth.init_labels, "init_labels");
  check_labels(truth.meas_labels, "meas_labels");
  check_labels(truth.frame_labels, "frame_labels");
  const auto ni = static_cast<Eigen::Index>(truth.init_labels.size());
  const auto nm = static_cast<Eigen::Index>(truth.meas_labels.size());
  const auto nf = static_cast<Eigen::Index>(truth.frame_labels.size());
  if (truth.frame0.rows() != nf || truth.frame0.cols() != nm ||
      truth.frame1.rows() != nf || truth.frame1.cols() != nm)
    fail_io("truth frame blocks disagree with the labels");

  std::string out = "qpi truth 1\n";
  out += "scenario: " + truth.scenario + "\n";
  out += "init_labels: " + detail::join_list(truth.init_labels) + "\n";
  out += "meas_labels: " + detail::join_list(truth.meas_labels) + "\n";
  out += "frame_labels: " + detail::join_list(truth.frame_labels) + "\n";
  out += "records: " + std::to_string(truth.exact.size() * ni * nm) + "\n";
  for (const auto& [t, F] : truth.exact) {
    if (F.rows() != ni || F.cols() != nm)
      fail_io("truth probability block at t=" + std::to_string(t) +
              " disagrees with the labels");
    append_prob_rows(out, F, truth.init_labels, truth.meas_labels, t);
  }
  out += "frame_records: " + std::to_string(2 * nf * nm) + "\n";
  append_prob_rows(out, truth.frame0, truth.frame_labels, truth.meas_labels, 0);
  append_prob_rows(out, truth.frame1, truth.frame_labels, truth.meas_labels, 1);
  detail::write_text(path, out);
}

TruthTable read_truth(const std::string& path) {
  const auto lines = detail::read_lines(path);
  if (lines.empty() || lines[0] != "qpi truth 1")
    fail_io(path + ": not a truth file (missing 'qpi truth 1' header)");
  std::size_t idx = 1;

  TruthTable truth;
  truth.scenario = detail::expect_field(lines, idx, "scenario", path);
  truth.init_labels = detail::parse_list(
      detail::expect_field(lines, idx, "init_labels", path), "init_labels");
  truth.meas_labels = detail::parse_list(
      detail::expect_field(lines, idx, "meas_labels", path), "meas_labels");
  truth.frame_labels = detail::parse_list(
      detail::expect_field(lines, idx, "frame_labels", path), "frame_labels");
  check_labels(truth.init_labels, "init_labels");
  check_labels(truth.meas_labels, "meas_labels");
  check_labels(truth.frame_labels, "frame_labels");
  const int ni = static_cast<int>(truth.init_labels.size());
  const int nm = static_cast<int>(truth.meas_labels.size());
  const int nf = static_cast<int>(truth.frame_labels.size());

  const long long n_records = detail::parse_ll(
      detail::expect_field(lines, idx, "records", path), "records");
  if (n_records % (ni * nm) != 0)
    fail_io(path + ": record count is not a whole number of (i,m) blocks");
  for (long long k = 0; k < n_records; ++k) {
    if (idx >= lines.size()) fail_io(path + ": truncated probability body");
    const auto cells = detail::split(lines[idx], ',');
    if (cells.size() != 4)
      fail_io(path + ": malformed probability line '" + lines[idx] + "'");
    const int i = label_index(truth.init_labels, cells[0], path);
    const std::int64_t t = detail::parse_ll(cells[1], "truth t");
    const int m = label_index(truth.meas_labels, cells[2], path);
    auto [it, fresh] = truth.exact.try_emplace(t);
    if (fresh) it->second = Matrix::Constant(ni, nm, -1.0);
    if (it->second(i, m) >= 0)
      fail_io(path + ": duplicate probability for (i,t,m)");
    const double p = detail::parse_double(cells[3], "truth probability");
    if (!(p >= 0 && p <= 1))
      fail_io(path + ": probability out of [0,1] in '" + lines[idx] + "'");
    it->second(i, m) = p;
    ++idx;
  }
  for (const auto& [t, F] : truth.exact)
    if ((F.array() < 0).any())
      fail_io(path + ": incomplete probability block at t=" + std::to_string(t));

  const long long n_frame = detail::parse_ll(
      detail::expect_field(lines, idx, "frame_records", path), "frame_records");
  if (n_frame != 2LL * nf * nm)
    fail_io(path + ": frame body must hold both t=0 and t=1 blocks");
  truth.frame0 = Matrix::Constant(nf, nm, -1.0);
  truth.frame1 = Matrix::Constant(nf, nm, -1.0);
  for (long long k = 0; k < n_frame; ++k) {
    if (idx >= lines.size()) fail_io(path + ": truncated frame body");
    const auto cells = detail::split(lines[idx], ',');
    if (cells.size() != 4)
      fail_io(path + ": malformed frame line '" + lines[idx] + "'");
    const int i = label_index(truth.frame_labels, cells[0], path);
    const std::int64_t t = detail::parse_ll(cells[1], "frame t");
    const int m = label_index(truth.meas_labels, cells[2], path);
    if (t != 0 && t != 1) fail_io(path + ": frame rows must have t in {0,1}");
    Matrix& F = (t == 0) ? truth.frame0 : truth.frame1;
    if (F(i, m) >= 0) fail_io(path + ": duplicate frame probability");
    const double p = detail::parse_double(cells[3], "frame probability");
    if (!(p >= 0 && p <= 1))
      fail_io(path + ": probability out of [0,1] in '" + lines[idx] + "'");
    F(i, m) = p;
    ++idx;
  }
  if ((truth.frame0.array() < 0).any() || (truth.frame1.array() < 0).any())
    fail_io(path + ": incomplete frame block");
  if (idx != lines.size() && !detail::trim(lines[idx]).empty())
    fail_io(path + ": unexpected content after the frame body");
  return truth;
}

}  // namespace qpi
