#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "flowtune/rng.hpp"

namespace flowtune {

/// A single parameter value. The alternative in use is fixed by the domain.
using Value = std::variant<bool, std::int64_t, double, std::string>;

std::string value_to_string(const Value& v);

/// Thrown when normalization is requested for a non-numeric dimension.
struct NormalizationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// One finite hyperparameter domain: a categorical list, a sorted integer or
/// real grid, or a boolean switch.
class ParamDomain {
 public:
  enum class Kind { Boolean, IntegerGrid, RealGrid, Categorical };

  static ParamDomain boolean(std::string name);
  static ParamDomain integer_grid(std::string name, std::vector<std::int64_t> values);
  static ParamDomain real_grid(std::string name, std::vector<double> values);
  static ParamDomain categorical(std::string name, std::vector<std::string> values);

  const std::string& name() const { return name_; }
  Kind kind() const { return kind_; }
  bool is_numeric() const { return kind_ == Kind::IntegerGrid || kind_ == Kind::RealGrid; }

  std::size_t size() const;
  Value value_at(std::size_t i) const;
  std::optional<std::size_t> index_of(const Value& v) const;
  bool contains(const Value& v) const { return index_of(v).has_value(); }

  /// Numeric grids only: value as double, domain bounds, smallest grid step.
  double numeric_at(std::size_t i) const;
  double numeric_min() const { return numeric_at(0); }
  double numeric_max() const { return numeric_at(size() - 1); }
  double min_step() const;

  const std::vector<std::int64_t>& int_values() const { return ints_; }
  const std::vector<double>& real_values() const { return reals_; }
  const std::vector<std::string>& categories() const { return cats_; }

 private:
  ParamDomain() = default;
  std::string name_;
  Kind kind_ = Kind::Boolean;
  std::vector<std::int64_t> ints_;
  std::vector<double> reals_;
  std::vector<std::string> cats_;
};

/// Activation guard: the child dimension carries a value only when the parent
/// dimension's value is one of `allowed`. Parents always precede children in
/// the dimension order, which keeps the condition graph acyclic.
struct Condition {
  std::size_t child = 0;
  std::size_t parent = 0;
  std::vector<Value> allowed;
};

class ConfigSpace;

/// A point in a ConfigSpace: one value per active dimension, nothing for
/// inactive ones. Carries the owning space's id for cheap validity checks.
class Configuration {
 public:
  Configuration() = default;
  Configuration(std::uint64_t space_id, std::vector<std::optional<Value>> values)
      : space_id_(space_id), values_(std::move(values)) {}

  std::uint64_t space_id() const { return space_id_; }
  std::size_t dim_count() const { return values_.size(); }
  bool has_value(std::size_t dim) const { return values_[dim].has_value(); }
  const Value& value(std::size_t dim) const { return *values_[dim]; }
  const std::optional<Value>& maybe_value(std::size_t dim) const { return values_[dim]; }

  friend bool operator==(const Configuration& a, const Configuration& b) {
    return a.space_id_ == b.space_id_ && a.values_ == b.values_;
  }

 private:
  std::uint64_t space_id_ = 0;
  std::vector<std::optional<Value>> values_;
};

/// Coordinates of a configuration's numeric dimensions mapped into [0,1].
struct NormalizedPoint {
  std::vector<double> coords;
};

/// Finite, optionally conditional parameter space. Immutable after
/// construction; safe to share across threads.
class ConfigSpace {
 public:
  ConfigSpace() = default;
  explicit ConfigSpace(std::vector<ParamDomain> dims, std::vector<Condition> conditions = {});

  const std::vector<ParamDomain>& dims() const { return dims_; }
  const std::vector<Condition>& conditions() const { return conditions_; }
  std::size_t dim_count() const { return dims_.size(); }
  const ParamDomain& dim(std::size_t i) const { return dims_[i]; }
  std::size_t dim_index(std::string_view name) const;
  std::optional<std::size_t> find_dim(std::string_view name) const;

  /// At most one condition per child dimension; nullptr when unconditional.
  const Condition* condition_for(std::size_t dim) const;

  std::uint64_t id() const { return id_; }

  /// Exact number of valid configurations, conditions included.
  std::uint64_t cardinality() const;

  /// Whether `dim` is active given the values assigned to earlier dims.
  bool is_active(const std::vector<std::optional<Value>>& values, std::size_t dim) const;

  bool is_valid(const Configuration& config) const;

  /// The `index`-th configuration in enumeration order (lexicographic over
  /// the dimension order, inactive dims skipped).
  Configuration at(std::uint64_t index) const;

  /// Uniform draw over all valid configurations.
  Configuration sample(Rng& rng) const;

  Configuration make(std::vector<std::optional<Value>> values) const;

  /// Builds a configuration from (name, value) pairs; dims not named must be
  /// inactive under the given assignment.
  Configuration from_assignments(const std::vector<std::pair<std::string, Value>>& assignments) const;

  std::vector<std::size_t> numeric_dims() const;

 private:
  std::uint64_t subtree_count(std::size_t dim) const;
  std::uint64_t remainder_count(const std::vector<std::optional<Value>>& prefix, std::size_t from) const;

  std::vector<ParamDomain> dims_;
  std::vector<Condition> conditions_;
  std::vector<int> condition_index_;          // per dim, -1 if none
  std::vector<std::vector<std::size_t>> children_;
  std::vector<std::uint64_t> subtree_counts_;
  std::uint64_t id_ = 0;
};

/// Streaming enumeration in deterministic lexicographic order. Yields each
/// valid configuration exactly once.
class ConfigEnumerator {
 public:
  explicit ConfigEnumerator(const ConfigSpace& space);
  std::optional<Configuration> next();

 private:
  bool advance();
  void fill_from(std::size_t dim);

  const ConfigSpace* space_;
  std::vector<std::optional<std::size_t>> value_index_;
  bool done_ = false;
  bool first_ = true;
};

std::vector<Configuration> enumerate_all(const ConfigSpace& space, std::uint64_t guard = 1u << 20);

/// Min-max normalization of the numeric dimensions using the declared domain
/// bounds; single-value domains map to 0. Throws NormalizationError when a
/// non-numeric dimension is present.
NormalizedPoint normalize(const ConfigSpace& space, const Configuration& config);

/// Product space over disjoint dimension names; throws on a name clash.
ConfigSpace union_space(const ConfigSpace& a, const ConfigSpace& b);

}  // namespace flowtune
