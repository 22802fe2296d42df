#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "japan/matrix.hpp"

namespace japan {

// Paired (x, y) records with train/calibration/test split indices.
// Standardization statistics are computed from the train split only.
struct Dataset {
  std::string name;
  Matrix x;  // n×c, c may be 0
  Matrix y;  // n×d
  std::vector<std::size_t> train_idx, cal_idx, test_idx;
  std::vector<double> x_mean, x_std, y_mean, y_std;
  bool standardized = false;

  std::size_t size() const { return y.rows(); }
  std::size_t x_dim() const { return x.cols(); }
  std::size_t y_dim() const { return y.cols(); }

  Matrix train_x() const { return take_rows(x, train_idx); }
  Matrix train_y() const { return take_rows(y, train_idx); }
  Matrix cal_x() const { return take_rows(x, cal_idx); }
  Matrix cal_y() const { return take_rows(y, cal_idx); }
  Matrix test_x() const { return take_rows(x, test_idx); }
  Matrix test_y() const { return take_rows(y, test_idx); }

  // Product of the per-dimension y standard deviations; converts areas in
  // standardized units back to data units.
  double y_std_product() const;
};

struct ToySpec {
  std::string name;  // moons | circles | checkerboard | spiral | crescent
  std::size_t n = 10000;
  double noise = 0.05;
  std::uint64_t seed = 0;
};

// 2D synthetic densities; deterministic per (spec, seed). The returned
// dataset is unsplit and unstandardized.
Dataset generate_toy(const ToySpec& spec);

// 1-D context, bimodal 2-D response whose noise scale grows with x.
Dataset generate_conditional(std::size_t n, std::uint64_t seed);

// CSV ingestion: one header row, '.' decimal separator, columns by name.
Dataset load_csv(const std::string& path, const std::vector<std::string>& x_cols,
                 const std::vector<std::string>& y_cols);

// Writes x columns as x0..x{c-1} and y columns as y0..y{d-1}.
void save_csv(const Dataset& data, const std::string& path);

// Assigns split indices by a seeded uniform permutation followed by
// contiguous assignment. Fractions are train/cal/test.
void split(Dataset& data, double train_frac, double cal_frac, double test_frac,
           std::uint64_t seed);

// Standardizes x and y in place to train-split mean 0 / variance 1 and
// records the statistics. Constant columns keep scale 1.
void standardize(Dataset& data);

}  // namespace japan
