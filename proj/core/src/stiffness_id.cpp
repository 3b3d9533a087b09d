#include "fingersim/stiffness_id.hpp"

#include "fingersim/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

namespace fingersim {

namespace {

int parameter_count(int n) { return n * (n + 1) / 2 + n; }

std::vector<std::pair<int, int>> upper_entries(int n) {
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) out.emplace_back(i, j);
  }
  return out;
}

double sign_of(Direction d) { return d == Direction::Forward ? 1.0 : -1.0; }

std::vector<std::string> header_for(int n) {
  std::vector<std::string> h = {"dx_mm", "dy_mm"};
  if (n == 3) h.push_back("dz_mm");
  h.insert(h.end(), {"fx_N", "fy_N"});
  if (n == 3) h.push_back("fz_N");
  h.insert(h.end(), {"cycle", "direction"});
  return h;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& text, std::size_t line) {
  double value = 0.0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw ParseError(fmt::format("line {}: '{}' is not a finite number", line, text));
  }
  return value;
}

}  // namespace

const char* to_string(Direction d) { return d == Direction::Forward ? "forward" : "backward"; }

void CycleDataset::validate(double max_displacement) const {
  if (dimension != 2 && dimension != 3) throw ValidationError("dimension", "must be 2 or 3");
  std::map<int, std::set<Direction>> seen;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const CycleSample& s = samples[i];
    const std::string field = "samples[" + std::to_string(i) + "]";
    if (s.displacement.size() != dimension || s.force.size() != dimension) {
      throw ValidationError(field, "vector length must equal the dataset dimension");
    }
    if (!s.displacement.allFinite() || !s.force.allFinite()) {
      throw ValidationError(field, "entries must be finite");
    }
    if (s.displacement.norm() > max_displacement) {
      throw ValidationError(field + ".displacement",
                            fmt::format("norm must not exceed {} mm", max_displacement));
    }
    seen[s.cycle].insert(s.direction);
  }
  for (const auto& [cycle, dirs] : seen) {
    if (dirs.size() != 2) {
      throw ValidationError("samples", fmt::format("cycle {} lacks one direction of motion", cycle));
    }
  }
}

StiffnessFit fit_stiffness(const CycleDataset& data) {
  data.validate(std::numeric_limits<double>::infinity());
  const int n = data.dimension;
  const int p = parameter_count(n);
  const int count = static_cast<int>(data.samples.size());

  Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(n, n);
  for (const CycleSample& s : data.samples) scatter += s.displacement * s.displacement.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(scatter);
  const double top = es.eigenvalues().maxCoeff();
  if (count < 2 * p || !(es.eigenvalues().minCoeff() > 1e-12 * top) || !(top > 0.0)) {
    throw RankDeficientData(
        fmt::format("{} samples do not span the {}-dimensional displacement space", count, n),
        es.eigenvectors().col(0));
  }

  const auto entries = upper_entries(n);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(count * n, p);
  Eigen::VectorXd y(count * n);
  for (int k = 0; k < count; ++k) {
    const CycleSample& s = data.samples[k];
    for (int a = 0; a < n; ++a) {
      const int row = k * n + a;
      for (int e = 0; e < static_cast<int>(entries.size()); ++e) {
        const auto [i, j] = entries[e];
        if (a == i) x(row, e) += s.displacement[j];
        if (a == j && i != j) x(row, e) += s.displacement[i];
      }
      x(row, static_cast<int>(entries.size()) + a) = sign_of(s.direction);
      y[row] = s.force[a];
    }
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-12);
  if (qr.rank() < p) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinV);
    throw RankDeficientData("stiffness and hysteresis parameters are not identifiable",
                            svd.matrixV().col(p - 1));
  }
  const Eigen::VectorXd theta = qr.solve(y);
  const Eigen::VectorXd residual = y - x * theta;
  const double rss = residual.squaredNorm();
  const int rows = count * n;

  StiffnessFit fit;
  fit.sample_count = static_cast<std::size_t>(count);
  fit.residual_rms = std::sqrt(rss / rows);
  fit.matrix = Eigen::MatrixXd::Zero(n, n);
  fit.standard_errors = Eigen::MatrixXd::Zero(n, n);
  const double sigma2 = rows > p ? rss / (rows - p) : 0.0;
  const Eigen::MatrixXd cov =
      sigma2 * (x.transpose() * x).ldlt().solve(Eigen::MatrixXd::Identity(p, p));
  for (int e = 0; e < static_cast<int>(entries.size()); ++e) {
    const auto [i, j] = entries[e];
    fit.matrix(i, j) = fit.matrix(j, i) = theta[e];
    fit.standard_errors(i, j) = fit.standard_errors(j, i) = std::sqrt(std::max(0.0, cov(e, e)));
  }
  const int h0 = static_cast<int>(entries.size());
  fit.hysteresis_offset = theta.segment(h0, n);
  fit.hysteresis_standard_errors.resize(n);
  for (int a = 0; a < n; ++a) {
    fit.hysteresis_standard_errors[a] = std::sqrt(std::max(0.0, cov(h0 + a, h0 + a)));
  }
  return fit;
}

CycleDataset synthesize_cycles(const Eigen::MatrixXd& k_true, double hysteresis,
                               double noise_sigma, int n_cycles, double amplitude,
                               std::uint64_t seed, int points_per_leg) {
  const int n = static_cast<int>(k_true.rows());
  if ((n != 2 && n != 3) || k_true.cols() != n) {
    throw ValidationError("k_true", "must be a 2x2 or 3x3 matrix");
  }
  if ((k_true - k_true.transpose()).norm() > 1e-12 * std::max(1.0, k_true.norm())) {
    throw ValidationError("k_true", "must be symmetric");
  }
  if (!(amplitude > 0.0) || !std::isfinite(amplitude)) {
    throw ValidationError("amplitude", "must be a finite positive number");
  }
  if (!(noise_sigma >= 0.0)) throw ValidationError("noise_sigma", "must be >= 0");
  if (!std::isfinite(hysteresis)) throw ValidationError("hysteresis", "must be finite");
  if (n_cycles < 1) throw ValidationError("n_cycles", "must be >= 1");
  if (points_per_leg < 2) throw ValidationError("points_per_leg", "must be >= 2");

  std::vector<Eigen::VectorXd> directions;
  for (int i = 0; i < n; ++i) directions.push_back(Eigen::VectorXd::Unit(n, i));
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      directions.push_back((Eigen::VectorXd::Unit(n, i) + Eigen::VectorXd::Unit(n, j)) / std::sqrt(2.0));
      directions.push_back((Eigen::VectorXd::Unit(n, i) - Eigen::VectorXd::Unit(n, j)) / std::sqrt(2.0));
    }
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const Eigen::VectorXd offset = Eigen::VectorXd::Constant(n, hysteresis);

  CycleDataset data;
  data.dimension = n;
  for (int c = 0; c < n_cycles; ++c) {
    for (const Eigen::VectorXd& u : directions) {
      for (Direction dir : {Direction::Forward, Direction::Backward}) {
        for (int k = 0; k < points_per_leg; ++k) {
          const double t = -amplitude + 2.0 * amplitude * k / (points_per_leg - 1);
          const double s = dir == Direction::Forward ? t : -t;
          CycleSample sample;
          sample.displacement = s * u;
          sample.force = k_true * sample.displacement + sign_of(dir) * offset;
          for (int a = 0; a < n; ++a) sample.force[a] += noise_sigma * noise(rng);
          sample.cycle = c;
          sample.direction = dir;
          data.samples.push_back(std::move(sample));
        }
      }
    }
  }
  return data;
}

ConditioningReport conditioning_report(const Eigen::MatrixXd& stiffness) {
  if (stiffness.rows() != stiffness.cols() || stiffness.rows() == 0) {
    throw ValidationError("stiffness", "must be a nonempty square matrix");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (stiffness + stiffness.transpose()));
  const int n = static_cast<int>(stiffness.rows());
  ConditioningReport r;
  r.eigenvalues = es.eigenvalues().reverse();
  r.principal_axes = es.eigenvectors().rowwise().reverse();
  const double lo = r.eigenvalues[n - 1];
  r.condition_number = lo > 0.0 ? r.eigenvalues[0] / lo : std::numeric_limits<double>::infinity();
  r.well_conditioned = r.condition_number < kWellConditionedLimit;
  return r;
}

ConditioningReport conditioning_report(const StiffnessFit& fit) {
  return conditioning_report(fit.matrix);
}

void write_cycles_csv(std::ostream& out, const CycleDataset& data) {
  const auto header = header_for(data.dimension);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const CycleSample& s : data.samples) {
    for (int a = 0; a < data.dimension; ++a) out << fmt::format("{:.17g},", s.displacement[a]);
    for (int a = 0; a < data.dimension; ++a) out << fmt::format("{:.17g},", s.force[a]);
    out << s.cycle << ',' << to_string(s.direction) << '\n';
  }
  if (!out) throw IoError("failed to write cycle CSV");
}

CycleDataset read_cycles_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("cycle CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto cols = split(line);
  CycleDataset data;
  if (cols == header_for(2)) {
    data.dimension = 2;
  } else if (cols == header_for(3)) {
    data.dimension = 3;
  } else {
    throw ParseError("cycle CSV header must be dx_mm,dy_mm[,dz_mm],fx_N,fy_N[,fz_N],cycle,direction");
  }
  const int n = data.dimension;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line);
    if (static_cast<int>(cells.size()) != 2 * n + 2) {
      throw ParseError(fmt::format("line {}: expected {} columns", lineno, 2 * n + 2));
    }
    CycleSample s;
    s.displacement.resize(n);
    s.force.resize(n);
    for (int a = 0; a < n; ++a) {
      s.displacement[a] = parse_double(cells[a], lineno);
      s.force[a] = parse_double(cells[n + a], lineno);
    }
    const std::string& cyc = cells[2 * n];
    const auto [ptr, ec] = std::from_chars(cyc.data(), cyc.data() + cyc.size(), s.cycle);
    if (ec != std::errc() || ptr != cyc.data() + cyc.size()) {
      throw ParseError(fmt::format("line {}: cycle '{}' is not an integer", lineno, cyc));
    }
    const std::string& dir = cells[2 * n + 1];
    if (dir == "forward") {
      s.direction = Direction::Forward;
    } else if (dir == "backward") {
      s.direction = Direction::Backward;
    } else {
      throw ParseError(fmt::format("line {}: direction must be forward or backward", lineno));
    }
    data.samples.push_back(std::move(s));
  }
  data.validate();
  return data;
}

}  // namespace fingersim
