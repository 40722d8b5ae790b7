#include "flowtune/dataset.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#ifndef FLOWTUNE_DATA_DIR
#define FLOWTUNE_DATA_DIR ""
#endif

namespace flowtune {

int Dataset::class_count() const {
  int max_label = -1;
  for (int y : labels) max_label = std::max(max_label, y);
  return max_label + 1;
}

std::vector<std::size_t> Dataset::class_histogram() const {
  std::vector<std::size_t> hist(static_cast<std::size_t>(class_count()), 0);
  for (int y : labels) ++hist[static_cast<std::size_t>(y)];
  return hist;
}

std::string default_data_dir() {
  if (const char* env = std::getenv("FLOWTUNE_DATA_DIR"); env && *env) return env;
  return FLOWTUNE_DATA_DIR;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool is_registered(const std::string& name) {
  return name == "iris" || name == "wine" || name == "breast";
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& label_column,
                 const std::string& dataset_name) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("dataset file '" + path + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::vector<std::string> header = split_csv_line(line);
  auto label_it = std::find(header.begin(), header.end(), label_column);
  if (label_it == header.end())
    throw std::runtime_error("dataset file '" + path + "' has no '" + label_column + "' column");
  const std::size_t label_idx = static_cast<std::size_t>(label_it - header.begin());

  std::vector<std::string> feature_names;
  for (std::size_t i = 0; i < header.size(); ++i)
    if (i != label_idx) feature_names.push_back(header[i]);

  std::vector<std::vector<double>> rows;
  std::vector<std::string> raw_labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected " +
                               std::to_string(header.size()) + " fields, got " +
                               std::to_string(fields.size()));
    std::vector<double> row;
    row.reserve(header.size() - 1);
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i == label_idx) {
        raw_labels.push_back(fields[i]);
        continue;
      }
      try {
        std::size_t pos = 0;
        double v = std::stod(fields[i], &pos);
        if (pos != fields[i].size()) throw std::invalid_argument("trailing characters");
        row.push_back(v);
      } catch (const std::exception&) {
        throw std::runtime_error(path + ":" + std::to_string(line_no) + ": column '" +
                                 header[i] + "': non-numeric value '" + fields[i] + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("dataset file '" + path + "' has no data rows");

  // Map raw label strings to dense class ids in order of first appearance.
  std::map<std::string, int> label_ids;
  std::vector<std::string> order;
  for (const std::string& s : raw_labels)
    if (label_ids.emplace(s, 0).second) order.push_back(s);
  std::sort(order.begin(), order.end());
  for (std::size_t i = 0; i < order.size(); ++i) label_ids[order[i]] = static_cast<int>(i);
  if (order.size() < 2)
    throw std::runtime_error("dataset file '" + path + "' has fewer than 2 classes");

  Dataset ds;
  ds.name = dataset_name.empty() ? path : dataset_name;
  ds.feature_names = std::move(feature_names);
  ds.features.resize(static_cast<Eigen::Index>(rows.size()),
                     static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      ds.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  ds.labels.reserve(raw_labels.size());
  for (const std::string& s : raw_labels) ds.labels.push_back(label_ids[s]);
  return ds;
}

Dataset load_dataset(const std::string& name_or_path, const std::string& label_column,
                     const std::string& data_dir) {
  if (is_registered(name_or_path)) {
    std::string dir = data_dir.empty() ? default_data_dir() : data_dir;
    if (dir.empty())
      throw std::runtime_error("no data directory configured for dataset '" + name_or_path + "'");
    return load_csv(dir + "/" + name_or_path + ".csv", "label", name_or_path);
  }
  return load_csv(name_or_path, label_column);
}

std::string matrix_fingerprint(const Matrix& m, const Labels& labels) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix_bytes = [&h](const void* data, std::size_t n) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  const std::int64_t shape[2] = {m.rows(), m.cols()};
  mix_bytes(shape, sizeof(shape));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      double v = m(r, c);
      mix_bytes(&v, sizeof(v));
    }
  mix_bytes(labels.data(), labels.size() * sizeof(int));
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace flowtune
