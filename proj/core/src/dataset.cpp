#include "japan/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "japan/errors.hpp"
#include "japan/rng.hpp"

namespace japan {

double Dataset::y_std_product() const {
  double p = 1.0;
  for (double s : y_std) p *= s;
  return p;
}

namespace {

constexpr double kPi = std::numbers::pi;

void add_noise(Matrix& y, double sigma, Rng& rng) {
  if (sigma <= 0.0) return;
  for (std::size_t i = 0; i < y.size(); ++i) y.data()[i] += sigma * rng.gaussian();
}

Matrix moons_points(std::size_t n, Rng& rng, bool single_arm) {
  Matrix y(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    const bool outer = single_arm ? true : (rng.next_u64() & 1) == 0;
    const double t = kPi * rng.uniform();
    if (outer) {
      y(i, 0) = std::cos(t);
      y(i, 1) = std::sin(t);
    } else {
      y(i, 0) = 1.0 - std::cos(t);
      y(i, 1) = 0.5 - std::sin(t);
    }
  }
  return y;
}

Matrix circles_points(std::size_t n, double sigma, Rng& rng) {
  Matrix y(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    const double ring = (rng.next_u64() & 1) == 0 ? 1.0 : 2.0;
    const double theta = 2.0 * kPi * rng.uniform();
    const double r = ring + sigma * rng.gaussian();
    y(i, 0) = r * std::cos(theta);
    y(i, 1) = r * std::sin(theta);
  }
  return y;
}

Matrix checkerboard_points(std::size_t n, Rng& rng) {
  // The 8 black cells of a 4×4 board on [-2,2]²: unit cells where the
  // row+column index is even.
  Matrix y(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t ci = rng.below(4);
    const std::uint64_t cj = 2 * rng.below(2) + (ci % 2);  // (ci+cj) even
    y(i, 0) = -2.0 + static_cast<double>(ci) + rng.uniform();
    y(i, 1) = -2.0 + static_cast<double>(cj) + rng.uniform();
  }
  return y;
}

Matrix spiral_points(std::size_t n, Rng& rng) {
  // Two-arm Archimedean spiral r = 0.5 + 0.4 t, t in [0, 3π].
  Matrix y(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = 3.0 * kPi * rng.uniform();
    const double arm = (rng.next_u64() & 1) == 0 ? 0.0 : kPi;
    const double r = 0.5 + 0.4 * t;
    y(i, 0) = r * std::cos(t + arm);
    y(i, 1) = r * std::sin(t + arm);
  }
  return y;
}

}  // namespace

Dataset generate_toy(const ToySpec& spec) {
  if (spec.n < 10) throw ConfigError("generate_toy: n must be >= 10");
  if (spec.noise < 0.0) throw ConfigError("generate_toy: noise must be >= 0");
  Rng rng = Rng(spec.seed).split(17);
  Dataset d;
  d.name = spec.name;
  d.x = Matrix(spec.n, 0);
  if (spec.name == "moons") {
    d.y = moons_points(spec.n, rng, false);
    add_noise(d.y, spec.noise, rng);
  } else if (spec.name == "crescent") {
    d.y = moons_points(spec.n, rng, true);
    add_noise(d.y, spec.noise, rng);
  } else if (spec.name == "circles") {
    d.y = circles_points(spec.n, spec.noise, rng);
  } else if (spec.name == "checkerboard") {
    d.y = checkerboard_points(spec.n, rng);
    add_noise(d.y, spec.noise, rng);
  } else if (spec.name == "spiral") {
    d.y = spiral_points(spec.n, rng);
    add_noise(d.y, spec.noise, rng);
  } else {
    throw ConfigError("generate_toy: unknown toy '" + spec.name + "'");
  }
  return d;
}

Dataset generate_conditional(std::size_t n, std::uint64_t seed) {
  if (n < 10) throw ConfigError("generate_conditional: n must be >= 10");
  Rng rng = Rng(seed).split(19);
  Dataset d;
  d.name = "conditional";
  d.x = Matrix(n, 1);
  d.y = Matrix(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = 2.0 * rng.uniform() - 1.0;
    const double mode = (rng.next_u64() & 1) == 0 ? 1.0 : -1.0;
    const double s = 0.05 + 0.15 * (x + 1.0) / 2.0;
    d.x(i, 0) = x;
    d.y(i, 0) = std::sin(kPi * x) + mode + s * rng.gaussian();
    d.y(i, 1) = std::cos(kPi * x) + s * rng.gaussian();
  }
  return d;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name,
                         const std::string& path) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) {
    throw ParseError(path + ": column '" + name + "' not found");
  }
  return static_cast<std::size_t>(it - header.begin());
}

double parse_cell(const std::string& cell, std::size_t row, const std::string& col,
                  const std::string& path) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(cell, &pos);
    if (pos != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw ParseError(path + ": non-numeric value '" + cell + "' at row " + std::to_string(row) +
                     ", column '" + col + "'");
  }
}

}  // namespace

Dataset load_csv(const std::string& path, const std::vector<std::string>& x_cols,
                 const std::vector<std::string>& y_cols) {
  std::ifstream in(path);
  if (!in) throw ParseError("load_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.empty()) {
    throw ParseError(path + ": empty file");
  }
  const std::vector<std::string> header = split_line(line);
  std::vector<std::size_t> xi, yi;
  for (const auto& c : x_cols) xi.push_back(column_index(header, c, path));
  for (const auto& c : y_cols) yi.push_back(column_index(header, c, path));
  if (yi.empty()) throw ConfigError("load_csv: at least one y column is required");

  std::vector<std::vector<double>> rows;
  std::size_t row_no = 1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_line(line);
    if (fields.size() != header.size()) {
      throw ParseError(path + ": row " + std::to_string(row_no) + " has " +
                       std::to_string(fields.size()) + " fields, expected " +
                       std::to_string(header.size()));
    }
    std::vector<double> rec;
    rec.reserve(xi.size() + yi.size());
    for (std::size_t k : xi) rec.push_back(parse_cell(fields[k], row_no, header[k], path));
    for (std::size_t k : yi) rec.push_back(parse_cell(fields[k], row_no, header[k], path));
    rows.push_back(std::move(rec));
    ++row_no;
  }
  if (rows.empty()) throw ParseError(path + ": no data rows");

  Dataset d;
  d.name = path;
  d.x = Matrix(rows.size(), xi.size());
  d.y = Matrix(rows.size(), yi.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < xi.size(); ++j) d.x(i, j) = rows[i][j];
    for (std::size_t j = 0; j < yi.size(); ++j) d.y(i, j) = rows[i][xi.size() + j];
  }
  return d;
}

void save_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("save_csv: cannot open " + path + " for writing");
  for (std::size_t j = 0; j < data.x_dim(); ++j) {
    out << 'x' << j << ',';
  }
  for (std::size_t j = 0; j < data.y_dim(); ++j) {
    out << 'y' << j << (j + 1 < data.y_dim() ? "," : "");
  }
  out << '\n';
  char buf[40];
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t j = 0; j < data.x_dim(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", data.x(i, j));
      out << buf << ',';
    }
    for (std::size_t j = 0; j < data.y_dim(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", data.y(i, j));
      out << buf << (j + 1 < data.y_dim() ? "," : "");
    }
    out << '\n';
  }
}

void split(Dataset& data, double train_frac, double cal_frac, double test_frac,
           std::uint64_t seed) {
  if (train_frac <= 0.0 || cal_frac <= 0.0 || test_frac <= 0.0) {
    throw ConfigError("split: fractions must be positive");
  }
  if (train_frac + cal_frac + test_frac > 1.0 + 1e-9) {
    throw ConfigError("split: fractions must sum to at most 1");
  }
  const std::size_t n = data.size();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng = Rng(seed).split(23);
  rng.shuffle(perm);

  const std::size_t n_train = static_cast<std::size_t>(train_frac * static_cast<double>(n));
  const std::size_t n_cal = static_cast<std::size_t>(cal_frac * static_cast<double>(n));
  const bool exhaustive = train_frac + cal_frac + test_frac > 1.0 - 1e-9;
  const std::size_t n_test =
      exhaustive ? n - n_train - n_cal
                 : static_cast<std::size_t>(test_frac * static_cast<double>(n));
  if (n_train == 0 || n_cal == 0 || n_test == 0 || n_train + n_cal + n_test > n) {
    throw ConfigError("split: a split would be empty");
  }
  data.train_idx.assign(perm.begin(), perm.begin() + n_train);
  data.cal_idx.assign(perm.begin() + n_train, perm.begin() + n_train + n_cal);
  data.test_idx.assign(perm.begin() + n_train + n_cal, perm.begin() + n_train + n_cal + n_test);
}

namespace {

void standardize_matrix(Matrix& m, const std::vector<std::size_t>& train_idx,
                        std::vector<double>& mean, std::vector<double>& std_dev) {
  const std::size_t dims = m.cols();
  mean.assign(dims, 0.0);
  std_dev.assign(dims, 1.0);
  if (dims == 0 || train_idx.empty()) return;
  const double inv_n = 1.0 / static_cast<double>(train_idx.size());
  for (std::size_t j = 0; j < dims; ++j) {
    double mu = 0.0;
    for (std::size_t i : train_idx) mu += m(i, j);
    mu *= inv_n;
    double var = 0.0;
    for (std::size_t i : train_idx) {
      const double diff = m(i, j) - mu;
      var += diff * diff;
    }
    var *= inv_n;
    mean[j] = mu;
    std_dev[j] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < dims; ++j) {
      m(i, j) = (m(i, j) - mean[j]) / std_dev[j];
    }
  }
}

}  // namespace

void standardize(Dataset& data) {
  if (data.standardized) return;
  if (data.train_idx.empty()) throw ConfigError("standardize: dataset has no train split");
  standardize_matrix(data.x, data.train_idx, data.x_mean, data.x_std);
  standardize_matrix(data.y, data.train_idx, data.y_mean, data.y_std);
  data.standardized = true;
}

}  // namespace japan
