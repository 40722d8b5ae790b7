#include "flowtune/nmad.hpp"

#include <algorithm>
#include <cmath>

namespace flowtune {

namespace {

double l1_distance(const NormalizedPoint& a, const NormalizedPoint& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.coords.size(); ++i) d += std::abs(a.coords[i] - b.coords[i]);
  return d;
}

}  // namespace

void OptimalSet::validate() const {
  if (per_algorithm.empty()) throw std::invalid_argument("optimal set has no algorithms");
  for (std::size_t d = 0; d < space.dim_count(); ++d)
    if (!space.dim(d).is_numeric())
      throw NormalizationError("dimension '" + space.dim(d).name() +
                               "' is not numeric; NMAD is only defined on metric spaces");
  for (const auto& [algo, points] : per_algorithm) {
    if (points.empty())
      throw std::invalid_argument("algorithm '" + algo + "' has no optimal configurations");
    for (const Configuration& p : points)
      if (!space.is_valid(p))
        throw std::invalid_argument("algorithm '" + algo + "' has a point outside the space");
  }
}

Configuration representant(const std::vector<Configuration>& points, const Configuration& reference,
                           const ConfigSpace& space) {
  if (points.empty()) throw std::invalid_argument("representant of an empty point list");
  const NormalizedPoint r = normalize(space, reference);
  std::size_t best = 0;
  double best_dist = l1_distance(normalize(space, points[0]), r);
  for (std::size_t i = 1; i < points.size(); ++i) {
    double d = l1_distance(normalize(space, points[i]), r);
    if (d < best_dist) {
      best_dist = d;
      best = i;
    }
  }
  return points[best];
}

double nmad(const OptimalSet& set, const Configuration& reference) {
  set.validate();
  if (!set.space.is_valid(reference))
    throw std::invalid_argument("reference point is not valid in the space");
  const NormalizedPoint r = normalize(set.space, reference);
  const double k_dims = static_cast<double>(set.space.dim_count());
  const double n_algos = static_cast<double>(set.per_algorithm.size());

  double sum = 0.0;
  for (const auto& [algo, points] : set.per_algorithm) {
    Configuration rep = representant(points, reference, set.space);
    sum += l1_distance(normalize(set.space, rep), r);
  }
  return sum / (k_dims * n_algos);
}

NmadReport nmad_report(const OptimalSet& set) {
  set.validate();
  NmadReport report;
  report.name = set.name;

  // Distinct optimal configurations across all algorithms, in first
  // appearance order.
  std::vector<Configuration> references;
  for (const auto& [algo, points] : set.per_algorithm)
    for (const Configuration& p : points)
      if (std::find(references.begin(), references.end(), p) == references.end())
        references.push_back(p);

  for (const Configuration& r : references) {
    NmadRow row;
    row.reference = r;
    row.value = nmad(set, r);
    for (const auto& [algo, points] : set.per_algorithm)
      row.representants.emplace_back(algo, representant(points, r, set.space));
    report.rows.push_back(std::move(row));
  }
  std::stable_sort(report.rows.begin(), report.rows.end(),
                   [](const NmadRow& a, const NmadRow& b) { return a.value < b.value; });
  return report;
}

}  // namespace flowtune
