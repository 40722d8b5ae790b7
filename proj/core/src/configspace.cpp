#include "flowtune/configspace.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace flowtune {

namespace {

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t out = 0;
  if (__builtin_mul_overflow(a, b, &out))
    throw std::overflow_error("configuration space cardinality overflows 64 bits");
  return out;
}

template <typename T>
void require_sorted_unique(const std::vector<T>& v, const std::string& name) {
  if (v.empty()) throw std::invalid_argument("domain '" + name + "' is empty");
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i - 1] < v[i]))
      throw std::invalid_argument("domain '" + name + "' is not strictly sorted");
}

}  // namespace

std::string value_to_string(const Value& v) {
  struct Visitor {
    std::string operator()(bool b) const { return b ? "true" : "false"; }
    std::string operator()(std::int64_t i) const { return std::to_string(i); }
    std::string operator()(double d) const {
      std::ostringstream os;
      os << d;
      return os.str();
    }
    std::string operator()(const std::string& s) const { return s; }
  };
  return std::visit(Visitor{}, v);
}

ParamDomain ParamDomain::boolean(std::string name) {
  ParamDomain d;
  d.name_ = std::move(name);
  d.kind_ = Kind::Boolean;
  return d;
}

ParamDomain ParamDomain::integer_grid(std::string name, std::vector<std::int64_t> values) {
  require_sorted_unique(values, name);
  ParamDomain d;
  d.name_ = std::move(name);
  d.kind_ = Kind::IntegerGrid;
  d.ints_ = std::move(values);
  return d;
}

ParamDomain ParamDomain::real_grid(std::string name, std::vector<double> values) {
  require_sorted_unique(values, name);
  ParamDomain d;
  d.name_ = std::move(name);
  d.kind_ = Kind::RealGrid;
  d.reals_ = std::move(values);
  return d;
}

ParamDomain ParamDomain::categorical(std::string name, std::vector<std::string> values) {
  if (values.empty()) throw std::invalid_argument("domain '" + name + "' is empty");
  for (std::size_t i = 0; i < values.size(); ++i)
    for (std::size_t j = i + 1; j < values.size(); ++j)
      if (values[i] == values[j])
        throw std::invalid_argument("domain '" + name + "' has duplicate category '" + values[i] + "'");
  ParamDomain d;
  d.name_ = std::move(name);
  d.kind_ = Kind::Categorical;
  d.cats_ = std::move(values);
  return d;
}

std::size_t ParamDomain::size() const {
  switch (kind_) {
    case Kind::Boolean: return 2;
    case Kind::IntegerGrid: return ints_.size();
    case Kind::RealGrid: return reals_.size();
    case Kind::Categorical: return cats_.size();
  }
  return 0;
}

Value ParamDomain::value_at(std::size_t i) const {
  switch (kind_) {
    case Kind::Boolean: return i != 0;
    case Kind::IntegerGrid: return ints_.at(i);
    case Kind::RealGrid: return reals_.at(i);
    case Kind::Categorical: return cats_.at(i);
  }
  throw std::logic_error("bad domain kind");
}

std::optional<std::size_t> ParamDomain::index_of(const Value& v) const {
  const std::size_t n = size();
  for (std::size_t i = 0; i < n; ++i)
    if (value_at(i) == v) return i;
  return std::nullopt;
}

double ParamDomain::numeric_at(std::size_t i) const {
  if (kind_ == Kind::IntegerGrid) return static_cast<double>(ints_.at(i));
  if (kind_ == Kind::RealGrid) return reals_.at(i);
  throw NormalizationError("dimension '" + name_ + "' is not numeric");
}

double ParamDomain::min_step() const {
  double step = 0.0;
  for (std::size_t i = 1; i < size(); ++i) {
    double gap = numeric_at(i) - numeric_at(i - 1);
    if (step == 0.0 || gap < step) step = gap;
  }
  return step;
}

ConfigSpace::ConfigSpace(std::vector<ParamDomain> dims, std::vector<Condition> conditions)
    : dims_(std::move(dims)), conditions_(std::move(conditions)) {
  for (std::size_t i = 0; i < dims_.size(); ++i)
    for (std::size_t j = i + 1; j < dims_.size(); ++j)
      if (dims_[i].name() == dims_[j].name())
        throw std::invalid_argument("duplicate dimension name '" + dims_[i].name() + "'");

  condition_index_.assign(dims_.size(), -1);
  children_.assign(dims_.size(), {});
  for (std::size_t c = 0; c < conditions_.size(); ++c) {
    const Condition& cond = conditions_[c];
    if (cond.child >= dims_.size() || cond.parent >= dims_.size())
      throw std::invalid_argument("condition references unknown dimension");
    if (cond.parent >= cond.child)
      throw std::invalid_argument("condition parent must precede child in dimension order");
    if (condition_index_[cond.child] != -1)
      throw std::invalid_argument("dimension '" + dims_[cond.child].name() + "' has more than one condition");
    for (const Value& v : cond.allowed)
      if (!dims_[cond.parent].contains(v))
        throw std::invalid_argument("condition guard value outside parent domain");
    condition_index_[cond.child] = static_cast<int>(c);
    children_[cond.parent].push_back(cond.child);
  }

  // Weight of the subtree rooted at each dim, bottom-up: sum over own values
  // of the product of active children's weights.
  subtree_counts_.assign(dims_.size(), 1);
  for (std::size_t d = dims_.size(); d-- > 0;) {
    std::uint64_t total = 0;
    for (std::size_t vi = 0; vi < dims_[d].size(); ++vi) {
      Value v = dims_[d].value_at(vi);
      std::uint64_t w = 1;
      for (std::size_t child : children_[d]) {
        const Condition& cond = conditions_[condition_index_[child]];
        bool active = std::find(cond.allowed.begin(), cond.allowed.end(), v) != cond.allowed.end();
        if (active) w = checked_mul(w, subtree_counts_[child]);
      }
      total += w;
    }
    subtree_counts_[d] = total;
  }

  // Structural fingerprint so configurations can be checked against the
  // space that minted them.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t x) {
    h ^= x;
    h *= 0x100000001b3ULL;
  };
  for (const ParamDomain& d : dims_) {
    for (char ch : d.name()) mix(static_cast<std::uint64_t>(ch));
    mix(static_cast<std::uint64_t>(d.kind()));
    mix(d.size());
  }
  for (const Condition& c : conditions_) {
    mix(c.child);
    mix(c.parent);
    mix(c.allowed.size());
  }
  id_ = h;
}

std::size_t ConfigSpace::dim_index(std::string_view name) const {
  auto idx = find_dim(name);
  if (!idx) throw std::invalid_argument("unknown dimension '" + std::string(name) + "'");
  return *idx;
}

std::optional<std::size_t> ConfigSpace::find_dim(std::string_view name) const {
  for (std::size_t i = 0; i < dims_.size(); ++i)
    if (dims_[i].name() == name) return i;
  return std::nullopt;
}

const Condition* ConfigSpace::condition_for(std::size_t dim) const {
  int c = condition_index_[dim];
  return c < 0 ? nullptr : &conditions_[static_cast<std::size_t>(c)];
}

std::uint64_t ConfigSpace::cardinality() const {
  std::uint64_t total = 1;
  for (std::size_t d = 0; d < dims_.size(); ++d)
    if (condition_index_[d] < 0) total = checked_mul(total, subtree_counts_[d]);
  return total;
}

bool ConfigSpace::is_active(const std::vector<std::optional<Value>>& values, std::size_t dim) const {
  const Condition* cond = condition_for(dim);
  if (!cond) return true;
  const std::optional<Value>& parent = values[cond->parent];
  if (!parent) return false;
  return std::find(cond->allowed.begin(), cond->allowed.end(), *parent) != cond->allowed.end();
}

bool ConfigSpace::is_valid(const Configuration& config) const {
  if (config.space_id() != id_ || config.dim_count() != dims_.size()) return false;
  std::vector<std::optional<Value>> values;
  values.reserve(dims_.size());
  for (std::size_t d = 0; d < dims_.size(); ++d) values.push_back(config.maybe_value(d));
  for (std::size_t d = 0; d < dims_.size(); ++d) {
    if (is_active(values, d)) {
      if (!values[d] || !dims_[d].contains(*values[d])) return false;
    } else if (values[d]) {
      return false;
    }
  }
  return true;
}

std::uint64_t ConfigSpace::subtree_count(std::size_t dim) const { return subtree_counts_[dim]; }

// Number of completions of dims [from, n) given the assigned prefix. A dim
// beyond `from` whose parent is also beyond `from` is counted inside its
// parent's subtree weight, so only "local roots" contribute factors.
std::uint64_t ConfigSpace::remainder_count(const std::vector<std::optional<Value>>& prefix,
                                           std::size_t from) const {
  std::uint64_t total = 1;
  for (std::size_t d = from; d < dims_.size(); ++d) {
    const Condition* cond = condition_for(d);
    if (!cond) {
      total = checked_mul(total, subtree_counts_[d]);
    } else if (cond->parent < from) {
      total = checked_mul(total, is_active(prefix, d) ? subtree_counts_[d] : 1);
    }
  }
  return total;
}

Configuration ConfigSpace::at(std::uint64_t index) const {
  if (index >= cardinality()) throw std::out_of_range("configuration index out of range");
  std::vector<std::optional<Value>> values(dims_.size());
  for (std::size_t d = 0; d < dims_.size(); ++d) {
    if (!is_active(values, d)) continue;
    for (std::size_t vi = 0; vi < dims_[d].size(); ++vi) {
      values[d] = dims_[d].value_at(vi);
      std::uint64_t block = remainder_count(values, d + 1);
      if (index < block) break;
      index -= block;
      values[d].reset();
    }
  }
  return Configuration(id_, std::move(values));
}

Configuration ConfigSpace::sample(Rng& rng) const {
  std::uint64_t card = cardinality();
  if (card == 0) throw std::logic_error("cannot sample from an empty space");
  return at(bounded_uint(rng, card));
}

Configuration ConfigSpace::make(std::vector<std::optional<Value>> values) const {
  if (values.size() != dims_.size()) throw std::invalid_argument("value count does not match dimension count");
  Configuration c(id_, std::move(values));
  if (!is_valid(c)) throw std::invalid_argument("invalid configuration for space");
  return c;
}

Configuration ConfigSpace::from_assignments(
    const std::vector<std::pair<std::string, Value>>& assignments) const {
  std::vector<std::optional<Value>> values(dims_.size());
  for (const auto& [name, value] : assignments) values[dim_index(name)] = value;
  return make(std::move(values));
}

std::vector<std::size_t> ConfigSpace::numeric_dims() const {
  std::vector<std::size_t> out;
  for (std::size_t d = 0; d < dims_.size(); ++d)
    if (dims_[d].is_numeric()) out.push_back(d);
  return out;
}

ConfigEnumerator::ConfigEnumerator(const ConfigSpace& space) : space_(&space) {
  value_index_.assign(space.dim_count(), std::nullopt);
  if (space.dim_count() == 0 || space.cardinality() == 0) {
    // Zero dims still yields the single empty configuration.
    done_ = space.cardinality() == 0;
  }
  fill_from(0);
}

void ConfigEnumerator::fill_from(std::size_t dim) {
  std::vector<std::optional<Value>> values(space_->dim_count());
  for (std::size_t d = 0; d < dim; ++d)
    if (value_index_[d]) values[d] = space_->dim(d).value_at(*value_index_[d]);
  for (std::size_t d = dim; d < space_->dim_count(); ++d) {
    if (space_->is_active(values, d)) {
      value_index_[d] = 0;
      values[d] = space_->dim(d).value_at(0);
    } else {
      value_index_[d] = std::nullopt;
    }
  }
}

bool ConfigEnumerator::advance() {
  for (std::size_t d = space_->dim_count(); d-- > 0;) {
    if (!value_index_[d]) continue;
    if (*value_index_[d] + 1 < space_->dim(d).size()) {
      ++*value_index_[d];
      fill_from(d + 1);
      return true;
    }
  }
  return false;
}

std::optional<Configuration> ConfigEnumerator::next() {
  if (done_) return std::nullopt;
  if (first_) {
    first_ = false;
  } else if (!advance()) {
    done_ = true;
    return std::nullopt;
  }
  std::vector<std::optional<Value>> values(space_->dim_count());
  for (std::size_t d = 0; d < space_->dim_count(); ++d)
    if (value_index_[d]) values[d] = space_->dim(d).value_at(*value_index_[d]);
  return Configuration(space_->id(), std::move(values));
}

std::vector<Configuration> enumerate_all(const ConfigSpace& space, std::uint64_t guard) {
  std::uint64_t card = space.cardinality();
  if (card > guard)
    throw std::length_error("space cardinality " + std::to_string(card) + " exceeds enumeration guard");
  std::vector<Configuration> out;
  out.reserve(card);
  ConfigEnumerator en(space);
  while (auto c = en.next()) out.push_back(std::move(*c));
  return out;
}

NormalizedPoint normalize(const ConfigSpace& space, const Configuration& config) {
  if (!space.is_valid(config)) throw std::invalid_argument("configuration does not belong to space");
  NormalizedPoint p;
  for (std::size_t d = 0; d < space.dim_count(); ++d) {
    const ParamDomain& dom = space.dim(d);
    if (!dom.is_numeric())
      throw NormalizationError("dimension '" + dom.name() + "' is not normalizable");
    if (!config.has_value(d))
      throw std::invalid_argument("inactive numeric dimension '" + dom.name() + "' has no coordinate");
    double lo = dom.numeric_min();
    double hi = dom.numeric_max();
    double v = dom.kind() == ParamDomain::Kind::IntegerGrid
                   ? static_cast<double>(std::get<std::int64_t>(config.value(d)))
                   : std::get<double>(config.value(d));
    p.coords.push_back(hi > lo ? (v - lo) / (hi - lo) : 0.0);
  }
  return p;
}

ConfigSpace union_space(const ConfigSpace& a, const ConfigSpace& b) {
  std::vector<ParamDomain> dims = a.dims();
  for (const ParamDomain& d : b.dims()) {
    if (a.find_dim(d.name()))
      throw std::invalid_argument("union_space name clash on dimension '" + d.name() + "'");
    dims.push_back(d);
  }
  std::vector<Condition> conds = a.conditions();
  const std::size_t offset = a.dim_count();
  for (Condition c : b.conditions()) {
    c.child += offset;
    c.parent += offset;
    conds.push_back(std::move(c));
  }
  return ConfigSpace(std::move(dims), std::move(conds));
}

}  // namespace flowtune
