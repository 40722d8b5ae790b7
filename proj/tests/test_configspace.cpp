#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <map>
#include <set>

#include "flowtune/configspace.hpp"
#include "flowtune/serialize.hpp"

using namespace flowtune;

namespace {

// {a in {1,2,3}, b in {x,y} active only when a == 1} -> 4 configurations.
ConfigSpace conditional_fixture() {
  return ConfigSpace({ParamDomain::integer_grid("a", {1, 2, 3}),
                      ParamDomain::categorical("b", {"x", "y"})},
                     {Condition{1, 0, {Value(std::int64_t{1})}}});
}

ConfigSpace ngram_fixture() {
  return ConfigSpace({ParamDomain::integer_grid("n", {1, 2, 3, 4, 5}),
                      ParamDomain::integer_grid("k", {10, 100, 1000, 5000, 10000, 50000, 100000})});
}

std::string config_key(const ConfigSpace& s, const Configuration& c) {
  return config_to_json(s, c).dump();
}

// Brute-force reference: count configurations by explicit DFS over dims.
std::uint64_t brute_force_cardinality(const ConfigSpace& s) {
  std::uint64_t count = 0;
  std::function<void(std::size_t, std::vector<std::optional<Value>>&)> rec =
      [&](std::size_t d, std::vector<std::optional<Value>>& values) {
        if (d == s.dim_count()) {
          ++count;
          return;
        }
        if (!s.is_active(values, d)) {
          values[d].reset();
          rec(d + 1, values);
          return;
        }
        for (std::size_t i = 0; i < s.dim(d).size(); ++i) {
          values[d] = s.dim(d).value_at(i);
          rec(d + 1, values);
        }
        values[d].reset();
      };
  std::vector<std::optional<Value>> values(s.dim_count());
  rec(0, values);
  return count;
}

}  // namespace

TEST_CASE("domain invariants are enforced") {
  CHECK_THROWS_AS(ParamDomain::integer_grid("g", {}), std::invalid_argument);
  CHECK_THROWS_AS(ParamDomain::integer_grid("g", {3, 1}), std::invalid_argument);
  CHECK_THROWS_AS(ParamDomain::integer_grid("g", {1, 1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(ParamDomain::categorical("c", {"a", "a"}), std::invalid_argument);
  CHECK(ParamDomain::boolean("flag").size() == 2);
}

TEST_CASE("cardinality") {
  CHECK(ConfigSpace({ParamDomain::boolean("b")}).cardinality() == 2);
  CHECK(conditional_fixture().cardinality() == 4);
  CHECK(ngram_fixture().cardinality() == 35);
  // zero-dim space holds exactly the empty configuration
  CHECK(ConfigSpace().cardinality() == 1);
}

TEST_CASE("enumerate yields each valid configuration exactly once, in order") {
  ConfigSpace s = conditional_fixture();
  std::vector<Configuration> all = enumerate_all(s);
  REQUIRE(all.size() == 4);
  CHECK(config_key(s, all[0]) == R"({"a":1,"b":"x"})");
  CHECK(config_key(s, all[1]) == R"({"a":1,"b":"y"})");
  CHECK(config_key(s, all[2]) == R"({"a":2})");
  CHECK(config_key(s, all[3]) == R"({"a":3})");
  for (const Configuration& c : all) CHECK(s.is_valid(c));

  ConfigSpace b({ParamDomain::boolean("flag")});
  auto bools = enumerate_all(b);
  REQUIRE(bools.size() == 2);
  CHECK(std::get<bool>(bools[0].value(0)) == false);
  CHECK(std::get<bool>(bools[1].value(0)) == true);
}

TEST_CASE("at() matches enumeration order") {
  for (const ConfigSpace& s : {conditional_fixture(), ngram_fixture()}) {
    auto all = enumerate_all(s);
    for (std::size_t i = 0; i < all.size(); ++i) CHECK(s.at(i) == all[i]);
    CHECK_THROWS_AS(s.at(all.size()), std::out_of_range);
  }
}

TEST_CASE("sampling is uniform and deterministic") {
  ConfigSpace s = conditional_fixture();  // 4 points

  Rng r1(42), r2(42);
  for (int i = 0; i < 16; ++i) CHECK(s.sample(r1) == s.sample(r2));

  SUBCASE("singleton space returns its only configuration") {
    ConfigSpace one({ParamDomain::integer_grid("x", {7})});
    Rng rng(123);
    CHECK(one.sample(rng) == one.at(0));
  }

  SUBCASE("empirical frequency on a 4-point space within 2% of 0.25") {
    Rng rng(7);
    std::map<std::string, int> hits;
    const int n = 100000;
    for (int i = 0; i < n; ++i) ++hits[config_key(s, s.sample(rng))];
    REQUIRE(hits.size() == 4);
    for (const auto& [key, count] : hits)
      CHECK(std::abs(count / static_cast<double>(n) - 0.25) < 0.02);
  }

  SUBCASE("max per-point deviation under 3 sigma on a 64-point space") {
    ConfigSpace big({ParamDomain::integer_grid("x", [] {
      std::vector<std::int64_t> v;
      for (int i = 0; i < 64; ++i) v.push_back(i);
      return v;
    }())});
    Rng rng(2024);
    std::vector<int> hits(64, 0);
    const int n = 100000;
    for (int i = 0; i < n; ++i)
      ++hits[static_cast<std::size_t>(std::get<std::int64_t>(big.sample(rng).value(0)))];
    const double p = 1.0 / 64.0;
    const double sigma = std::sqrt(n * p * (1.0 - p));
    for (int h : hits) CHECK(std::abs(h - n * p) < 3.0 * sigma);
  }
}

TEST_CASE("normalization uses declared domain bounds") {
  ConfigSpace s = ngram_fixture();
  auto point = [&](std::int64_t n, std::int64_t k) {
    return s.from_assignments({{"n", n}, {"k", k}});
  };
  NormalizedPoint mid = normalize(s, point(3, 10000));
  CHECK(mid.coords[0] == doctest::Approx(0.5));
  CHECK(mid.coords[1] == doctest::Approx(9990.0 / 99990.0));
  CHECK(mid.coords[1] == doctest::Approx(0.09991).epsilon(1e-4));

  NormalizedPoint lo = normalize(s, point(1, 10));
  CHECK(lo.coords[0] == 0.0);
  CHECK(lo.coords[1] == 0.0);
  NormalizedPoint hi = normalize(s, point(5, 100000));
  CHECK(hi.coords[0] == 1.0);
  CHECK(hi.coords[1] == 1.0);

  SUBCASE("categorical dims are rejected") {
    ConfigSpace cat({ParamDomain::categorical("c", {"a", "b"})});
    CHECK_THROWS_AS(normalize(cat, cat.at(0)), NormalizationError);
  }
  SUBCASE("single-value domains map to zero") {
    ConfigSpace deg({ParamDomain::integer_grid("x", {5})});
    CHECK(normalize(deg, deg.at(0)).coords[0] == 0.0);
  }
  SUBCASE("grid round trip: nearest grid value recovers the original") {
    const ParamDomain& k = s.dim(1);
    for (std::size_t i = 0; i < k.size(); ++i) {
      Configuration c = point(2, k.int_values()[i]);
      double coord = normalize(s, c).coords[1];
      double denorm = k.numeric_min() + coord * (k.numeric_max() - k.numeric_min());
      std::size_t nearest = 0;
      for (std::size_t j = 1; j < k.size(); ++j)
        if (std::abs(k.numeric_at(j) - denorm) < std::abs(k.numeric_at(nearest) - denorm))
          nearest = j;
      CHECK(nearest == i);
    }
  }
}

TEST_CASE("union_space multiplies cardinalities and rejects name clashes") {
  ConfigSpace a({ParamDomain::boolean("a.x")});
  ConfigSpace b({ParamDomain::boolean("b.x")});
  CHECK(union_space(a, b).cardinality() == 4);
  CHECK_THROWS_AS(union_space(a, a), std::invalid_argument);

  ConfigSpace singleton({ParamDomain::integer_grid("only", {1})});
  CHECK(union_space(conditional_fixture(), singleton).cardinality() ==
        conditional_fixture().cardinality());

  SUBCASE("property: cardinality multiplicativity vs brute force on random spaces") {
    Rng rng(99);
    for (int trial = 0; trial < 30; ++trial) {
      auto random_space = [&](const std::string& prefix) {
        std::vector<ParamDomain> dims;
        std::vector<Condition> conds;
        std::size_t n = 1 + bounded_uint(rng, 3);
        for (std::size_t d = 0; d < n; ++d) {
          std::size_t size = 1 + bounded_uint(rng, 3);
          std::vector<std::int64_t> vals;
          for (std::size_t v = 0; v < size; ++v) vals.push_back(static_cast<std::int64_t>(v));
          dims.push_back(ParamDomain::integer_grid(prefix + std::to_string(d), vals));
          if (d > 0 && bounded_uint(rng, 2) == 0) {
            std::size_t parent = bounded_uint(rng, d);
            conds.push_back(Condition{d, parent, {Value(std::int64_t{0})}});
          }
        }
        return ConfigSpace(dims, conds);
      };
      ConfigSpace left = random_space("l");
      ConfigSpace right = random_space("r");
      ConfigSpace joined = union_space(left, right);
      CHECK(joined.cardinality() == left.cardinality() * right.cardinality());
      CHECK(joined.cardinality() == brute_force_cardinality(joined));
      CHECK(left.cardinality() == brute_force_cardinality(left));

      // enumerate/at agreement on the random conditional space
      auto all = enumerate_all(joined);
      CHECK(all.size() == joined.cardinality());
      std::set<std::string> keys;
      for (std::size_t i = 0; i < all.size(); ++i) {
        CHECK(joined.is_valid(all[i]));
        CHECK(joined.at(i) == all[i]);
        keys.insert(config_key(joined, all[i]));
      }
      CHECK(keys.size() == all.size());
    }
  }
}

TEST_CASE("space JSON round trip") {
  ConfigSpace s = conditional_fixture();
  ConfigSpace back = space_from_json(space_to_json(s));
  CHECK(back.cardinality() == s.cardinality());
  CHECK(back.dim_count() == s.dim_count());
  auto a = enumerate_all(s);
  auto b = enumerate_all(back);
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(config_to_json(s, a[i]) == config_to_json(back, b[i]));

  Configuration c = config_from_json(s, Json::parse(R"({"a":1,"b":"y"})"));
  CHECK(config_key(s, c) == R"({"a":1,"b":"y"})");
  CHECK_THROWS(config_from_json(s, Json::parse(R"({"a":2,"b":"y"})")));  // inactive dim set
}
