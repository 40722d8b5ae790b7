#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "flowtune/operators.hpp"

namespace flowtune {

/// Reserved catalog member: leave the slot unfilled (pass-through).
inline constexpr const char* kEmptySlot = "empty";

enum class NodeType { Source, Sink, Slot, Union };

struct PrototypeNode {
  NodeType type;
  std::string id;
};

struct PrototypeLayer {
  std::string name;
  std::vector<std::string> slots;    // node ids
  std::vector<std::string> catalog;  // operator names selectable in those slots
};

/// Layered DAG topology with a source and a sink. Slots are filled by
/// concrete operators (or left empty); union nodes stack the feature columns
/// of their incoming branches in edge declaration order.
class PipelinePrototype {
 public:
  PipelinePrototype(std::vector<PrototypeNode> nodes,
                    std::vector<std::pair<std::string, std::string>> edges,
                    std::vector<PrototypeLayer> layers,
                    DataKind source_kind = {DataKindTag::NumericMatrix, std::nullopt});

  const std::vector<PrototypeNode>& nodes() const { return nodes_; }
  const std::vector<std::pair<std::string, std::string>>& edges() const { return edges_; }
  const std::vector<PrototypeLayer>& layers() const { return layers_; }
  const DataKind& source_kind() const { return source_kind_; }

  const PrototypeNode& node(const std::string& id) const;
  const PrototypeLayer& layer_of(const std::string& slot_id) const;
  const std::vector<std::string>& topo_order() const { return topo_order_; }
  std::vector<std::string> parents_of(const std::string& id) const;

 private:
  void validate();

  std::vector<PrototypeNode> nodes_;
  std::vector<std::pair<std::string, std::string>> edges_;
  std::vector<PrototypeLayer> layers_;
  DataKind source_kind_;
  std::vector<std::string> topo_order_;
};

using PrototypePtr = std::shared_ptr<const PipelinePrototype>;

/// The linear three-layer prototype used by the bundled experiments:
/// source -> rebalance -> normalize -> features -> sink.
PrototypePtr default_prototype();

struct SlotAssignment {
  std::string operator_name = kEmptySlot;
  Configuration params;  // over the operator's own parameter space
};

/// A concrete operator choice per slot of a prototype.
struct PipelineInstance {
  PrototypePtr prototype;
  std::map<std::string, SlotAssignment> assignment;

  bool is_all_empty() const;
};

/// All-empty instance: the identity pipeline.
PipelineInstance empty_instance(PrototypePtr proto);

struct EdgeIssue {
  std::string from;
  std::string to;
  DataKind produced;
  DataKind expected;
};

/// Outcome of the static graph-traversal type check. An incompatibility is a
/// value, not an error.
struct CompatibilityReport {
  bool ok = true;
  std::optional<EdgeIssue> issue;
};

CompatibilityReport check_compatibility(const PipelineInstance& inst, const OperatorCatalog& catalog);

/// Composed chain of fitted functors, one per node, in topological order.
/// Train-only steps contribute the identity.
class FittedPipeline {
 public:
  FittedPipeline() = default;
  FittedPipeline(PrototypePtr proto, std::map<std::string, FittedFunctor> functors)
      : prototype_(std::move(proto)), functors_(std::move(functors)) {}

  /// Applies each functor in order; rebalancing steps are skipped. Throws
  /// std::invalid_argument on a shape mismatch.
  Matrix apply(const Matrix& test) const;

  const std::map<std::string, FittedFunctor>& functors() const { return functors_; }

 private:
  PrototypePtr prototype_;
  std::map<std::string, FittedFunctor> functors_;
};

struct PipelineFit {
  Matrix features;
  Labels labels;
  FittedPipeline fitted;
};

/// Executes the instance on the training set in topological order. Throws
/// RuntimeIncompatibility (with the offending node id) when an operator
/// cannot run on the data flowing into it.
PipelineFit fit_transform(const PipelineInstance& inst, const OperatorCatalog& catalog,
                          const Matrix& x, const Labels& y, Rng& rng);

/// Builds the joint configuration space of a prototype: one categorical
/// choice dimension per slot (operators plus `empty`) and one conditional
/// dimension per operator parameter, active only when that operator is the
/// slot's choice. Parameter dimensions are named `<slot>.<operator>.<param>`.
ConfigSpace pipeline_space(const PipelinePrototype& proto, const OperatorCatalog& catalog);

/// Decodes a point of pipeline_space back into a concrete instance.
PipelineInstance instantiate(PrototypePtr proto, const OperatorCatalog& catalog,
                             const ConfigSpace& space, const Configuration& config);

}  // namespace flowtune
