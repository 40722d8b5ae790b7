#pragma once

#include "flowtune/configspace.hpp"

namespace flowtune {

/// Per-algorithm optimal configurations over a shared, fully numeric space.
struct OptimalSet {
  std::string name;
  ConfigSpace space;
  std::vector<std::pair<std::string, std::vector<Configuration>>> per_algorithm;

  void validate() const;
};

/// The algorithm's point closest to `reference` in L1 distance over the
/// min-max-normalized space; ties keep the earliest point in list order.
Configuration representant(const std::vector<Configuration>& points, const Configuration& reference,
                           const ConfigSpace& space);

/// Normalized mean absolute deviation of the per-algorithm representants
/// from the reference point: with K dimensions and N algorithms,
///   (1/K)(1/N) * sum_i || p*_i - r ||_1
/// in normalized coordinates. Always in [0,1]; 0 means every algorithm has
/// an optimum at the reference point.
double nmad(const OptimalSet& set, const Configuration& reference);

struct NmadRow {
  Configuration reference;
  double value = 0.0;
  std::vector<std::pair<std::string, Configuration>> representants;
};

/// One row per distinct optimal configuration across all algorithms, sorted
/// by NMAD ascending (lowest = most universal).
struct NmadReport {
  std::string name;
  std::vector<NmadRow> rows;
};

NmadReport nmad_report(const OptimalSet& set);

}  // namespace flowtune
