#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace flowtune {

using Matrix = Eigen::MatrixXd;
using Labels = std::vector<int>;

/// A fully numeric classification dataset. No missing values, >= 2 classes.
struct Dataset {
  std::string name;
  Matrix features;                       // rows x columns
  Labels labels;                         // one class id per row
  std::vector<std::string> feature_names;

  std::size_t rows() const { return static_cast<std::size_t>(features.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(features.cols()); }
  int class_count() const;
  std::vector<std::size_t> class_histogram() const;
};

/// Directory the bundled CSV assets (iris, wine, breast) are read from.
/// Resolution order: explicit argument, FLOWTUNE_DATA_DIR environment
/// variable, compiled-in default.
std::string default_data_dir();

/// Loads a registered dataset name or a CSV path. CSV files need a header
/// row and a label column (default name "label"). Parse failures report the
/// offending row and column.
Dataset load_dataset(const std::string& name_or_path,
                     const std::string& label_column = "label",
                     const std::string& data_dir = {});

Dataset load_csv(const std::string& path, const std::string& label_column = "label",
                 const std::string& dataset_name = {});

/// 64-bit FNV-1a over the matrix bytes; used to fingerprint transformed data.
std::string matrix_fingerprint(const Matrix& m, const Labels& labels);

}  // namespace flowtune
