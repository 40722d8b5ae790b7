#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "flowtune/pipeline.hpp"
#include "flowtune/serialize.hpp"

using namespace flowtune;

namespace {

bool matrix_equal(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

Matrix iris_like(int rows = 60) {
  // three separable blobs in four dimensions, deterministic
  Matrix x(rows, 4);
  Rng rng(17);
  for (int i = 0; i < rows; ++i)
    for (int c = 0; c < 4; ++c) x(i, c) = 3.0 * (i % 3) + uniform_real(rng);
  return x;
}

Labels iris_like_labels(int rows = 60) {
  Labels y;
  for (int i = 0; i < rows; ++i) y.push_back(i % 3);
  return y;
}

// A catalog with a deliberately mismatched operator: emits a class vector.
OperatorCatalog catalog_with_class_vector_op() {
  OperatorCatalog cat = default_catalog();
  OperatorSignature sig;
  sig.name = "labelizer";
  sig.input = DataKind{DataKindTag::NumericMatrix, std::nullopt};
  sig.output = DataKind{DataKindTag::ClassVector, std::nullopt};
  sig.params = ConfigSpace();
  cat.add(OperatorDef(std::move(sig), [](const Matrix& x, const Labels& y, const ConfigSpace&,
                                         const Configuration&, Rng&) {
    return FitResult{x, y, FittedFunctor()};
  }));
  return cat;
}

}  // namespace

TEST_CASE("prototype validation") {
  CHECK_THROWS(PipelinePrototype({{NodeType::Source, "s"}}, {}, {}));  // no sink
  CHECK_THROWS(PipelinePrototype({{NodeType::Source, "s"},
                                  {NodeType::Sink, "t"},
                                  {NodeType::Slot, "a"}},
                                 {{"s", "a"}, {"a", "t"}}, {}));  // slot in no layer
  // cycle
  CHECK_THROWS(PipelinePrototype(
      {{NodeType::Source, "s"}, {NodeType::Sink, "t"}, {NodeType::Slot, "a"}, {NodeType::Slot, "b"}},
      {{"s", "a"}, {"a", "b"}, {"b", "a"}, {"b", "t"}},
      {{"l", {"a", "b"}, {"pca"}}}));

  PrototypePtr proto = default_prototype();
  CHECK(proto->topo_order().front() == "source");
  CHECK(proto->topo_order().back() == "sink");
  CHECK(proto->layers().size() == 3);
}

TEST_CASE("pipeline_space matches the layer arithmetic") {
  OperatorCatalog cat = default_catalog();
  PrototypePtr proto = default_prototype();
  ConfigSpace space = pipeline_space(*proto, cat);
  CHECK(space.cardinality() == 4750);

  SUBCASE("one slot with one parameter-free operator gives empty-or-operator") {
    PipelinePrototype proto1({{NodeType::Source, "s"}, {NodeType::Slot, "n"}, {NodeType::Sink, "t"}},
                             {{"s", "n"}, {"n", "t"}}, {{"norm", {"n"}, {"minmax_scaler"}}});
    CHECK(pipeline_space(proto1, cat).cardinality() == 2);
  }
  SUBCASE("the normalize layer alone contributes 19 options") {
    PipelinePrototype proto1(
        {{NodeType::Source, "s"}, {NodeType::Slot, "n"}, {NodeType::Sink, "t"}},
        {{"s", "n"}, {"n", "t"}},
        {{"normalize", {"n"},
          {"standard_scaler", "power_transform", "minmax_scaler", "robust_scaler"}}});
    CHECK(pipeline_space(proto1, cat).cardinality() == 19);
  }
}

TEST_CASE("static compatibility checking") {
  OperatorCatalog cat = catalog_with_class_vector_op();
  PrototypePtr proto = default_prototype();

  SUBCASE("all-empty instance is compatible with any prototype") {
    CHECK(check_compatibility(empty_instance(proto), cat).ok);
  }
  SUBCASE("class-vector output feeding a numeric-matrix slot is flagged") {
    PipelinePrototype bad({{NodeType::Source, "s"},
                           {NodeType::Slot, "first"},
                           {NodeType::Slot, "second"},
                           {NodeType::Sink, "t"}},
                          {{"s", "first"}, {"first", "second"}, {"second", "t"}},
                          {{"l1", {"first"}, {"labelizer"}}, {"l2", {"second"}, {"minmax_scaler"}}});
    PipelineInstance inst = empty_instance(std::make_shared<const PipelinePrototype>(bad));
    inst.assignment["first"] = {"labelizer", ConfigSpace().make({})};
    inst.assignment["second"] = {"minmax_scaler", ConfigSpace().make({})};
    CompatibilityReport report = check_compatibility(inst, cat);
    REQUIRE_FALSE(report.ok);
    CHECK(report.issue->from == "first");
    CHECK(report.issue->to == "second");
    CHECK(report.issue->produced.tag == DataKindTag::ClassVector);
    CHECK(report.issue->expected.tag == DataKindTag::NumericMatrix);
  }
  SUBCASE("every instance of the default 4750-point space passes the static check") {
    OperatorCatalog plain = default_catalog();
    ConfigSpace space = pipeline_space(*proto, plain);
    ConfigEnumerator en(space);
    std::size_t n = 0;
    while (auto c = en.next()) {
      PipelineInstance inst = instantiate(proto, plain, space, *c);
      CHECK(check_compatibility(inst, plain).ok);
      ++n;
    }
    CHECK(n == 4750);
  }
}

TEST_CASE("fit_transform") {
  OperatorCatalog cat = default_catalog();
  PrototypePtr proto = default_prototype();
  Matrix x = iris_like();
  Labels y = iris_like_labels();
  Rng rng(3);

  SUBCASE("all-empty instance is the identity, byte for byte") {
    PipelineFit fit = fit_transform(empty_instance(proto), cat, x, y, rng);
    CHECK(matrix_equal(fit.features, x));
    CHECK(fit.labels == y);
    CHECK(matrix_equal(fit.fitted.apply(x), x));
  }
  SUBCASE("smote balances an imbalanced training set") {
    Labels imbalanced = y;
    for (std::size_t i = 0; i < 10; ++i) imbalanced[i * 3] = 1;  // skew away from class 0
    PipelineInstance inst = empty_instance(proto);
    const ConfigSpace& params = cat.get("smote").signature().params;
    inst.assignment["rebalance"] = {"smote",
                                    params.from_assignments({{"k_neighbors", std::int64_t{3}}})};
    PipelineFit fit = fit_transform(inst, cat, x, imbalanced, rng);
    std::vector<int> counts(3, 0);
    for (int label : fit.labels) ++counts[static_cast<std::size_t>(label)];
    CHECK(counts[0] == counts[1]);
    CHECK(counts[1] == counts[2]);
    // the test-side functor is the identity: apply leaves row count alone
    CHECK(fit.fitted.apply(x).rows() == x.rows());
  }
  SUBCASE("pca + select_k_best union stacks k + k' columns") {
    PipelineInstance inst = empty_instance(proto);
    const ConfigSpace& params = cat.get("pca_select_union").signature().params;
    inst.assignment["features"] = {
        "pca_select_union",
        params.from_assignments({{"pca_k_frac", 0.5}, {"select_k_frac", 0.25}})};
    PipelineFit fit = fit_transform(inst, cat, x, y, rng);
    CHECK(fit.features.cols() == 2 + 1);  // ceil(0.5*4) + ceil(0.25*4)
    CHECK(fit.fitted.apply(x).cols() == 3);
  }
  SUBCASE("runtime incompatibility carries the node id") {
    PipelineInstance inst = empty_instance(proto);
    const ConfigSpace& params = cat.get("smote").signature().params;
    inst.assignment["rebalance"] = {"smote",
                                    params.from_assignments({{"k_neighbors", std::int64_t{3}}})};
    Labels singleton = y;
    for (std::size_t i = 0; i < singleton.size(); ++i) singleton[i] = i == 0 ? 0 : 1;
    try {
      fit_transform(inst, cat, x, singleton, rng);
      FAIL("expected RuntimeIncompatibility");
    } catch (const RuntimeIncompatibility& e) {
      CHECK(e.node == "rebalance");
      CHECK(!e.cause.empty());
    }
  }
}

TEST_CASE("structural union nodes stack branches in edge order") {
  OperatorCatalog cat = default_catalog();
  auto proto = std::make_shared<const PipelinePrototype>(
      std::vector<PrototypeNode>{{NodeType::Source, "s"},
                                 {NodeType::Slot, "left"},
                                 {NodeType::Slot, "right"},
                                 {NodeType::Union, "stack"},
                                 {NodeType::Sink, "t"}},
      std::vector<std::pair<std::string, std::string>>{
          {"s", "left"}, {"s", "right"}, {"left", "stack"}, {"right", "stack"}, {"stack", "t"}},
      std::vector<PrototypeLayer>{{"features", {"left", "right"}, {"pca", "select_k_best"}}});

  Matrix x = iris_like();
  Labels y = iris_like_labels();
  Rng rng(9);

  PipelineInstance inst = empty_instance(proto);
  inst.assignment["left"] = {"pca", cat.get("pca").signature().params.from_assignments(
                                        {{"k_frac", 0.5}})};
  inst.assignment["right"] = {"select_k_best",
                              cat.get("select_k_best").signature().params.from_assignments(
                                  {{"k_frac", 0.25}})};
  PipelineFit fit = fit_transform(inst, cat, x, y, rng);
  CHECK(fit.features.cols() == 3);  // 2 (pca) then 1 (select)

  // column order: left branch first
  PipelineInstance pca_only = empty_instance(proto);
  pca_only.assignment["left"] = inst.assignment["left"];
  Rng rng2(9);
  PipelineFit pca_fit_out = fit_transform(pca_only, cat, x, y, rng2);
  CHECK(matrix_equal(fit.features.leftCols(2), pca_fit_out.features.leftCols(2)));

  // all-empty on the union prototype duplicates the input columns per branch
  PipelineFit empty_fit = fit_transform(empty_instance(proto), cat, x, y, rng);
  CHECK(empty_fit.features.cols() == 8);
  CHECK(matrix_equal(empty_fit.features.leftCols(4), x));
  CHECK(matrix_equal(empty_fit.features.rightCols(4), x));
}

TEST_CASE("apply matches the training-side transform for non-train-only operators") {
  OperatorCatalog cat = default_catalog();
  PrototypePtr proto = default_prototype();
  Matrix x = iris_like();
  Labels y = iris_like_labels();

  ConfigSpace space = pipeline_space(*proto, cat);
  ConfigEnumerator en(space);
  std::size_t checked = 0;
  while (auto c = en.next()) {
    PipelineInstance inst = instantiate(proto, cat, space, *c);
    // single-operator, non-rebalancing instances only
    std::size_t filled = 0;
    bool train_only = false;
    for (const auto& [slot, a] : inst.assignment) {
      if (a.operator_name == kEmptySlot) continue;
      ++filled;
      if (cat.get(a.operator_name).signature().train_only) train_only = true;
    }
    if (filled != 1 || train_only) continue;
    Rng rng(101);
    PipelineFit fit = fit_transform(inst, cat, x, y, rng);
    Matrix replay = fit.fitted.apply(x);
    REQUIRE(replay.rows() == fit.features.rows());
    CHECK((replay - fit.features).cwiseAbs().maxCoeff() < 1e-12);
    ++checked;
  }
  CHECK(checked == 18 + 24);  // normalize and feature single-operator instances
}

TEST_CASE("fitted scaler applied to its own training set re-centers it") {
  OperatorCatalog cat = default_catalog();
  PrototypePtr proto = default_prototype();
  Matrix x = iris_like();
  Labels y = iris_like_labels();
  PipelineInstance inst = empty_instance(proto);
  inst.assignment["normalize"] = {"standard_scaler",
                                  cat.get("standard_scaler")
                                      .signature()
                                      .params.from_assignments({{"with_mean", true},
                                                                {"with_std", true}})};
  Rng rng(5);
  PipelineFit fit = fit_transform(inst, cat, x, y, rng);
  Matrix t = fit.fitted.apply(x);
  for (Eigen::Index c = 0; c < t.cols(); ++c) {
    CHECK(std::abs(t.col(c).mean()) <= 1e-9);
    double sd = std::sqrt((t.col(c).array() - t.col(c).mean()).square().mean());
    CHECK(std::abs(sd - 1.0) <= 1e-9);
  }
}

TEST_CASE("static-then-dynamic soundness across the whole default space") {
  // If the static check passes and the data is well shaped, execution either
  // succeeds or reports a runtime incompatibility; it never fails at the
  // type level.
  OperatorCatalog cat = default_catalog();
  PrototypePtr proto = default_prototype();
  Matrix x = iris_like(36);
  Labels y = iris_like_labels(36);
  ConfigSpace space = pipeline_space(*proto, cat);
  ConfigEnumerator en(space);
  std::size_t ran = 0, incompatible = 0;
  while (auto c = en.next()) {
    PipelineInstance inst = instantiate(proto, cat, space, *c);
    REQUIRE(check_compatibility(inst, cat).ok);
    Rng rng(7);
    try {
      PipelineFit fit = fit_transform(inst, cat, x, y, rng);
      CHECK(fit.features.rows() == static_cast<Eigen::Index>(fit.labels.size()));
      CHECK(fit.features.cols() >= 1);
      ++ran;
    } catch (const RuntimeIncompatibility&) {
      ++incompatible;  // absorbed as +inf by callers, never a type error
    }
  }
  CHECK(ran + incompatible == 4750);
  CHECK(ran > 4000);  // the vast majority executes cleanly on sane data
}

TEST_CASE("prototype JSON round trip") {
  PrototypePtr proto = default_prototype();
  PrototypePtr back = prototype_from_json(prototype_to_json(*proto));
  CHECK(back->topo_order() == proto->topo_order());
  REQUIRE(back->layers().size() == proto->layers().size());
  for (std::size_t i = 0; i < proto->layers().size(); ++i) {
    CHECK(back->layers()[i].name == proto->layers()[i].name);
    CHECK(back->layers()[i].slots == proto->layers()[i].slots);
    CHECK(back->layers()[i].catalog == proto->layers()[i].catalog);
  }
  OperatorCatalog cat = default_catalog();
  CHECK(pipeline_space(*back, cat).cardinality() == 4750);
}

TEST_CASE("instantiate round-trips slot assignments") {
  OperatorCatalog cat = default_catalog();
  PrototypePtr proto = default_prototype();
  ConfigSpace space = pipeline_space(*proto, cat);
  Rng rng(55);
  for (int i = 0; i < 50; ++i) {
    Configuration c = space.sample(rng);
    PipelineInstance inst = instantiate(proto, cat, space, c);
    for (const auto& [slot, a] : inst.assignment) {
      const std::string& chosen = std::get<std::string>(c.value(space.dim_index(slot)));
      CHECK(a.operator_name == chosen);
      if (chosen != kEmptySlot)
        CHECK(cat.get(chosen).signature().params.is_valid(a.params));
    }
  }
}
