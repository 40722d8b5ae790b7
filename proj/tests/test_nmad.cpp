#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "flowtune/nmad.hpp"
#include "flowtune/serialize.hpp"

using namespace flowtune;

namespace {

ConfigSpace text_space() {
  return ConfigSpace({ParamDomain::integer_grid("ngram", {1, 2, 3, 4, 5}),
                      ParamDomain::integer_grid(
                          "dictionary", {10, 100, 1000, 5000, 10000, 50000, 100000})});
}

Configuration pt(const ConfigSpace& s, std::int64_t n, std::int64_t k) {
  return s.from_assignments({{"ngram", n}, {"dictionary", k}});
}

OptimalSet echr_set() {
  ConfigSpace s = text_space();
  OptimalSet set;
  set.name = "echr";
  set.space = s;
  set.per_algorithm = {
      {"decision_tree", {pt(s, 5, 50000)}},
      {"neural_network", {pt(s, 5, 50000)}},
      {"random_forest", {pt(s, 3, 10000), pt(s, 4, 10000), pt(s, 5, 50000)}},
      {"linear_svm", {pt(s, 3, 50000), pt(s, 4, 50000), pt(s, 5, 50000)}},
  };
  return set;
}

OptimalSet newsgroup_set() {
  ConfigSpace s = text_space();
  OptimalSet set;
  set.name = "newsgroup";
  set.space = s;
  set.per_algorithm = {
      {"decision_tree", {pt(s, 4, 5000), pt(s, 4, 100000)}},
      {"neural_network", {pt(s, 5, 50000)}},
      {"random_forest", {pt(s, 3, 10000)}},
      {"linear_svm", {pt(s, 2, 100000)}},
  };
  return set;
}

// Independent oracle: exhaustive-minimum representant selection and a
// from-scratch deviation sum, sharing no code with the implementation.
double nmad_oracle(const OptimalSet& set, const Configuration& r) {
  auto coords = [&](const Configuration& c) {
    std::vector<double> out;
    for (std::size_t d = 0; d < set.space.dim_count(); ++d) {
      const ParamDomain& dom = set.space.dim(d);
      double v = static_cast<double>(std::get<std::int64_t>(c.value(d)));
      double lo = static_cast<double>(dom.int_values().front());
      double hi = static_cast<double>(dom.int_values().back());
      out.push_back(hi > lo ? (v - lo) / (hi - lo) : 0.0);
    }
    return out;
  };
  std::vector<double> rc = coords(r);
  double total = 0.0;
  for (const auto& [algo, points] : set.per_algorithm) {
    double best = std::numeric_limits<double>::infinity();
    for (const Configuration& p : points) {
      std::vector<double> pc = coords(p);
      double d = 0.0;
      for (std::size_t i = 0; i < pc.size(); ++i) d += std::abs(pc[i] - rc[i]);
      best = std::min(best, d);
    }
    total += best;
  }
  return total / (static_cast<double>(set.space.dim_count()) *
                  static_cast<double>(set.per_algorithm.size()));
}

}  // namespace

TEST_CASE("representant picks the closest point in normalized L1") {
  ConfigSpace s = text_space();
  SUBCASE("a reference inside the point list is its own representant") {
    std::vector<Configuration> pts{pt(s, 3, 10000), pt(s, 4, 10000)};
    CHECK(representant(pts, pt(s, 4, 10000), s) == pt(s, 4, 10000));
  }
  SUBCASE("random-forest points against reference (4, 50000)") {
    std::vector<Configuration> pts{pt(s, 3, 10000), pt(s, 4, 10000), pt(s, 5, 50000)};
    CHECK(representant(pts, pt(s, 4, 50000), s) == pt(s, 5, 50000));
  }
  SUBCASE("svm points against reference (3, 10000)") {
    std::vector<Configuration> pts{pt(s, 3, 50000), pt(s, 4, 50000), pt(s, 5, 50000)};
    CHECK(representant(pts, pt(s, 3, 10000), s) == pt(s, 3, 50000));
  }
  SUBCASE("ties keep the earliest point") {
    ConfigSpace line({ParamDomain::integer_grid("x", {0, 1, 2})});
    Configuration a = line.from_assignments({{"x", std::int64_t{0}}});
    Configuration b = line.from_assignments({{"x", std::int64_t{2}}});
    Configuration mid = line.from_assignments({{"x", std::int64_t{1}}});
    CHECK(representant({a, b}, mid, line) == a);
    CHECK(representant({b, a}, mid, line) == b);
  }
}

TEST_CASE("nmad matches the reference tables for the bundled fixtures") {
  OptimalSet echr = echr_set();
  ConfigSpace s = echr.space;
  CHECK(nmad(echr, pt(s, 5, 50000)) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(nmad(echr, pt(s, 3, 10000)) == doctest::Approx(0.275).epsilon(0.004));
  CHECK(nmad(echr, pt(s, 4, 10000)) == doctest::Approx(0.213).epsilon(0.005));
  CHECK(nmad(echr, pt(s, 3, 50000)) == doctest::Approx(0.175).epsilon(0.006));
  CHECK(nmad(echr, pt(s, 4, 50000)) == doctest::Approx(0.094).epsilon(0.011));

  OptimalSet news = newsgroup_set();
  CHECK(nmad(news, pt(s, 4, 5000)) == doctest::Approx(0.306).epsilon(0.004));
  CHECK(nmad(news, pt(s, 4, 100000)) == doctest::Approx(0.300).epsilon(0.004));
  CHECK(nmad(news, pt(s, 5, 50000)) == doctest::Approx(0.356).epsilon(0.003));
  CHECK(nmad(news, pt(s, 3, 10000)) == doctest::Approx(0.294).epsilon(0.004));
  CHECK(nmad(news, pt(s, 2, 100000)) == doctest::Approx(0.362).epsilon(0.003));
}

TEST_CASE("report ranks by ascending NMAD") {
  OptimalSet set = echr_set();
  NmadReport echr = nmad_report(set);
  REQUIRE(echr.rows.size() == 5);
  for (std::size_t i = 1; i < echr.rows.size(); ++i)
    CHECK(echr.rows[i - 1].value <= echr.rows[i].value);
  CHECK(format_point(set.space, echr.rows[0].reference) == "(5, 50000)");
  CHECK(echr.rows[0].value == doctest::Approx(0.0));

  NmadReport news = nmad_report(newsgroup_set());
  CHECK(news.rows.size() == 5);

  SUBCASE("single algorithm, single point: one row of value zero") {
    ConfigSpace s = text_space();
    OptimalSet one;
    one.space = s;
    one.per_algorithm = {{"solo", {pt(s, 2, 1000)}}};
    NmadReport r = nmad_report(one);
    REQUIRE(r.rows.size() == 1);
    CHECK(r.rows[0].value == doctest::Approx(0.0));
  }
}

TEST_CASE("nmad properties") {
  SUBCASE("zero iff every algorithm holds the reference point") {
    ConfigSpace s = text_space();
    OptimalSet set = echr_set();
    CHECK(nmad(set, pt(s, 5, 50000)) == 0.0);
    for (const Configuration& r : {pt(s, 3, 10000), pt(s, 4, 10000), pt(s, 3, 50000)})
      CHECK(nmad(set, r) > 0.0);
  }
  SUBCASE("oracle equivalence, range and permutation invariance on random instances") {
    Rng rng(77);
    for (int trial = 0; trial < 60; ++trial) {
      const std::size_t dims = 1 + bounded_uint(rng, 4);
      std::vector<ParamDomain> doms;
      for (std::size_t d = 0; d < dims; ++d) {
        std::vector<std::int64_t> vals;
        std::int64_t v = static_cast<std::int64_t>(bounded_uint(rng, 5));
        const std::size_t n = 2 + bounded_uint(rng, 5);
        for (std::size_t i = 0; i < n; ++i) {
          vals.push_back(v);
          v += 1 + static_cast<std::int64_t>(bounded_uint(rng, 9));
        }
        doms.push_back(ParamDomain::integer_grid("d" + std::to_string(d), vals));
      }
      ConfigSpace space(doms);

      OptimalSet set;
      set.space = space;
      const std::size_t algos = 1 + bounded_uint(rng, 5);
      for (std::size_t a = 0; a < algos; ++a) {
        std::vector<Configuration> pts;
        const std::size_t n_pts = 1 + bounded_uint(rng, 6);
        for (std::size_t p = 0; p < n_pts; ++p) pts.push_back(space.sample(rng));
        set.per_algorithm.emplace_back("algo" + std::to_string(a), std::move(pts));
      }
      Configuration reference = space.sample(rng);

      const double value = nmad(set, reference);
      CHECK(value == doctest::Approx(nmad_oracle(set, reference)).epsilon(1e-12));
      CHECK(value >= 0.0);
      CHECK(value <= 1.0);

      // permuting algorithms and points changes nothing
      OptimalSet shuffled = set;
      shuffle_vec(shuffled.per_algorithm, rng);
      for (auto& [name, pts] : shuffled.per_algorithm) shuffle_vec(pts, rng);
      CHECK(nmad(shuffled, reference) == doctest::Approx(value).epsilon(1e-12));
    }
  }
  SUBCASE("categorical dimensions are rejected") {
    ConfigSpace s({ParamDomain::categorical("c", {"a", "b"})});
    OptimalSet set;
    set.space = s;
    set.per_algorithm = {{"x", {s.at(0)}}};
    CHECK_THROWS_AS(nmad(set, s.at(0)), NormalizationError);
  }
}

TEST_CASE("fixture files load and report") {
  const std::string dir = default_data_dir() + "/fixtures";
  OptimalSet echr = load_optimal_set(dir + "/echr_optima.json");
  CHECK(echr.per_algorithm.size() == 4);
  NmadReport report = nmad_report(echr);
  CHECK(report.rows.size() == 5);
  CHECK(report.rows.front().value == doctest::Approx(0.0));
  std::string table = render_nmad_table(report, echr.space);
  CHECK(table.find("(5, 50000)") != std::string::npos);

  SUBCASE("empty per-algorithm list fails validation") {
    OptimalSet bad = echr;
    bad.per_algorithm[0].second.clear();
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  }
}
