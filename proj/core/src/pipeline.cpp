#include "flowtune/pipeline.hpp"

#include <algorithm>

namespace flowtune {

PipelinePrototype::PipelinePrototype(std::vector<PrototypeNode> nodes,
                                     std::vector<std::pair<std::string, std::string>> edges,
                                     std::vector<PrototypeLayer> layers, DataKind source_kind)
    : nodes_(std::move(nodes)),
      edges_(std::move(edges)),
      layers_(std::move(layers)),
      source_kind_(source_kind) {
  validate();
}

const PrototypeNode& PipelinePrototype::node(const std::string& id) const {
  for (const PrototypeNode& n : nodes_)
    if (n.id == id) return n;
  throw std::invalid_argument("unknown pipeline node '" + id + "'");
}

const PrototypeLayer& PipelinePrototype::layer_of(const std::string& slot_id) const {
  for (const PrototypeLayer& l : layers_)
    if (std::find(l.slots.begin(), l.slots.end(), slot_id) != l.slots.end()) return l;
  throw std::invalid_argument("slot '" + slot_id + "' belongs to no layer");
}

std::vector<std::string> PipelinePrototype::parents_of(const std::string& id) const {
  std::vector<std::string> out;
  for (const auto& [from, to] : edges_)
    if (to == id) out.push_back(from);
  return out;
}

void PipelinePrototype::validate() {
  std::size_t sources = 0, sinks = 0;
  for (const PrototypeNode& n : nodes_) {
    if (n.type == NodeType::Source) ++sources;
    if (n.type == NodeType::Sink) ++sinks;
    std::size_t seen = 0;
    for (const PrototypeNode& m : nodes_)
      if (m.id == n.id) ++seen;
    if (seen != 1) throw std::invalid_argument("duplicate node id '" + n.id + "'");
  }
  if (sources != 1 || sinks != 1)
    throw std::invalid_argument("prototype needs exactly one source and one sink");
  for (const auto& [from, to] : edges_) {
    node(from);
    node(to);
  }
  for (const PrototypeNode& n : nodes_) {
    if (n.type != NodeType::Slot) continue;
    std::size_t memberships = 0;
    for (const PrototypeLayer& l : layers_)
      memberships += static_cast<std::size_t>(
          std::count(l.slots.begin(), l.slots.end(), n.id));
    if (memberships != 1)
      throw std::invalid_argument("slot '" + n.id + "' must belong to exactly one layer");
  }

  // Kahn's algorithm; also the execution order.
  std::map<std::string, std::size_t> in_degree;
  for (const PrototypeNode& n : nodes_) in_degree[n.id] = 0;
  for (const auto& [from, to] : edges_) ++in_degree[to];
  std::vector<std::string> ready;
  for (const PrototypeNode& n : nodes_)
    if (in_degree[n.id] == 0) ready.push_back(n.id);
  while (!ready.empty()) {
    std::string id = ready.front();
    ready.erase(ready.begin());
    topo_order_.push_back(id);
    for (const auto& [from, to] : edges_)
      if (from == id && --in_degree[to] == 0) ready.push_back(to);
  }
  if (topo_order_.size() != nodes_.size())
    throw std::invalid_argument("prototype graph contains a cycle");
  if (topo_order_.empty() || node(topo_order_.front()).type != NodeType::Source)
    throw std::invalid_argument("all paths must start at the source");
}

PrototypePtr default_prototype() {
  std::vector<PrototypeNode> nodes{{NodeType::Source, "source"},
                                   {NodeType::Slot, "rebalance"},
                                   {NodeType::Slot, "normalize"},
                                   {NodeType::Slot, "features"},
                                   {NodeType::Sink, "sink"}};
  std::vector<std::pair<std::string, std::string>> edges{
      {"source", "rebalance"}, {"rebalance", "normalize"}, {"normalize", "features"},
      {"features", "sink"}};
  std::vector<PrototypeLayer> layers{
      {"rebalance", {"rebalance"}, {"near_miss", "condensed_nn", "smote"}},
      {"normalize", {"normalize"}, {"standard_scaler", "power_transform", "minmax_scaler", "robust_scaler"}},
      {"features", {"features"}, {"pca", "select_k_best", "pca_select_union"}}};
  return std::make_shared<const PipelinePrototype>(std::move(nodes), std::move(edges),
                                                   std::move(layers));
}

bool PipelineInstance::is_all_empty() const {
  for (const auto& [slot, a] : assignment)
    if (a.operator_name != kEmptySlot) return false;
  return true;
}

PipelineInstance empty_instance(PrototypePtr proto) {
  PipelineInstance inst;
  inst.prototype = std::move(proto);
  for (const PrototypeLayer& l : inst.prototype->layers())
    for (const std::string& slot : l.slots) inst.assignment[slot] = SlotAssignment{};
  return inst;
}

CompatibilityReport check_compatibility(const PipelineInstance& inst,
                                        const OperatorCatalog& catalog) {
  const PipelinePrototype& proto = *inst.prototype;
  std::map<std::string, DataKind> out_kind;

  for (const std::string& id : proto.topo_order()) {
    const PrototypeNode& n = proto.node(id);
    std::vector<std::string> parents = proto.parents_of(id);
    switch (n.type) {
      case NodeType::Source:
        out_kind[id] = proto.source_kind();
        break;
      case NodeType::Sink:
        break;  // accepts any representation
      case NodeType::Union: {
        // All branches must agree on the representation space.
        for (std::size_t i = 1; i < parents.size(); ++i) {
          if (!kinds_compatible(out_kind[parents[i]], out_kind[parents[0]])) {
            return {false, EdgeIssue{parents[i], id, out_kind[parents[i]], out_kind[parents[0]]}};
          }
        }
        out_kind[id] = out_kind[parents.front()];
        break;
      }
      case NodeType::Slot: {
        DataKind incoming = out_kind[parents.front()];
        auto it = inst.assignment.find(id);
        const std::string& op_name =
            it == inst.assignment.end() ? kEmptySlot : it->second.operator_name;
        if (op_name == kEmptySlot) {
          out_kind[id] = incoming;  // pass-through
          break;
        }
        const OperatorSignature& sig = catalog.get(op_name).signature();
        if (!kinds_compatible(incoming, sig.input))
          return {false, EdgeIssue{parents.front(), id, incoming, sig.input}};
        out_kind[id] = sig.output;
        break;
      }
    }
  }
  return {};
}

namespace {

struct NodeData {
  Matrix x;
  Labels y;
};

}  // namespace

PipelineFit fit_transform(const PipelineInstance& inst, const OperatorCatalog& catalog,
                          const Matrix& x, const Labels& y, Rng& rng) {
  const PipelinePrototype& proto = *inst.prototype;
  std::map<std::string, NodeData> data;
  std::map<std::string, FittedFunctor> functors;
  PipelineFit out;

  for (const std::string& id : proto.topo_order()) {
    const PrototypeNode& n = proto.node(id);
    std::vector<std::string> parents = proto.parents_of(id);
    switch (n.type) {
      case NodeType::Source:
        data[id] = {x, y};
        break;
      case NodeType::Sink:
        out.features = data[parents.front()].x;
        out.labels = data[parents.front()].y;
        break;
      case NodeType::Union: {
        const NodeData& first = data[parents.front()];
        Eigen::Index total_cols = 0;
        for (const std::string& p : parents) {
          if (data[p].x.rows() != first.x.rows())
            throw RuntimeIncompatibility(id, "branch row counts differ");
          total_cols += data[p].x.cols();
        }
        NodeData merged;
        merged.x.resize(first.x.rows(), total_cols);
        Eigen::Index at = 0;
        for (const std::string& p : parents) {
          merged.x.middleCols(at, data[p].x.cols()) = data[p].x;
          at += data[p].x.cols();
        }
        merged.y = first.y;
        data[id] = std::move(merged);
        break;
      }
      case NodeType::Slot: {
        const NodeData& in = data[parents.front()];
        auto it = inst.assignment.find(id);
        const SlotAssignment* a = it == inst.assignment.end() ? nullptr : &it->second;
        if (!a || a->operator_name == kEmptySlot) {
          data[id] = in;
          functors[id] = FittedFunctor();
          break;
        }
        const OperatorDef& def = catalog.get(a->operator_name);
        try {
          FitResult r = def.fit(in.x, in.y, a->params, rng);
          data[id] = {std::move(r.features), std::move(r.labels)};
          functors[id] = std::move(r.functor);
        } catch (const RuntimeIncompatibility& e) {
          throw RuntimeIncompatibility(id, e.cause);
        }
        break;
      }
    }
  }
  out.fitted = FittedPipeline(inst.prototype, std::move(functors));
  return out;
}

Matrix FittedPipeline::apply(const Matrix& test) const {
  if (!prototype_) return test;
  std::map<std::string, Matrix> data;
  Matrix result = test;
  for (const std::string& id : prototype_->topo_order()) {
    const PrototypeNode& n = prototype_->node(id);
    std::vector<std::string> parents = prototype_->parents_of(id);
    switch (n.type) {
      case NodeType::Source:
        data[id] = test;
        break;
      case NodeType::Sink:
        result = data[parents.front()];
        break;
      case NodeType::Union: {
        const Matrix& first = data[parents.front()];
        Eigen::Index total_cols = 0;
        for (const std::string& p : parents) {
          if (data[p].rows() != first.rows())
            throw std::invalid_argument("union branch row counts differ at apply time");
          total_cols += data[p].cols();
        }
        Matrix merged(first.rows(), total_cols);
        Eigen::Index at = 0;
        for (const std::string& p : parents) {
          merged.middleCols(at, data[p].cols()) = data[p];
          at += data[p].cols();
        }
        data[id] = std::move(merged);
        break;
      }
      case NodeType::Slot: {
        auto it = functors_.find(id);
        const Matrix& in = data[parents.front()];
        data[id] = (it == functors_.end()) ? in : it->second.transform(in);
        break;
      }
    }
  }
  return result;
}

ConfigSpace pipeline_space(const PipelinePrototype& proto, const OperatorCatalog& catalog) {
  std::vector<ParamDomain> dims;
  std::vector<Condition> conditions;

  for (const PrototypeLayer& layer : proto.layers()) {
    if (layer.catalog.empty())
      throw std::invalid_argument("layer '" + layer.name + "' has an empty catalog");
    for (const std::string& slot : layer.slots) {
      std::vector<std::string> choices{kEmptySlot};
      choices.insert(choices.end(), layer.catalog.begin(), layer.catalog.end());
      const std::size_t choice_dim = dims.size();
      dims.push_back(ParamDomain::categorical(slot, choices));

      for (const std::string& op_name : layer.catalog) {
        const ConfigSpace& params = catalog.get(op_name).signature().params;
        if (params.conditions().size() != 0)
          throw std::invalid_argument("operator parameter spaces must be unconditional");
        for (const ParamDomain& p : params.dims()) {
          std::string qualified = slot + "." + op_name + "." + p.name();
          std::size_t child_dim = dims.size();
          switch (p.kind()) {
            case ParamDomain::Kind::Boolean:
              dims.push_back(ParamDomain::boolean(qualified));
              break;
            case ParamDomain::Kind::IntegerGrid:
              dims.push_back(ParamDomain::integer_grid(qualified, p.int_values()));
              break;
            case ParamDomain::Kind::RealGrid:
              dims.push_back(ParamDomain::real_grid(qualified, p.real_values()));
              break;
            case ParamDomain::Kind::Categorical:
              dims.push_back(ParamDomain::categorical(qualified, p.categories()));
              break;
          }
          conditions.push_back(Condition{child_dim, choice_dim, {Value(op_name)}});
        }
      }
    }
  }
  return ConfigSpace(std::move(dims), std::move(conditions));
}

PipelineInstance instantiate(PrototypePtr proto, const OperatorCatalog& catalog,
                             const ConfigSpace& space, const Configuration& config) {
  if (!space.is_valid(config))
    throw std::invalid_argument("configuration does not belong to the pipeline space");
  PipelineInstance inst;
  inst.prototype = std::move(proto);
  for (const PrototypeLayer& layer : inst.prototype->layers()) {
    for (const std::string& slot : layer.slots) {
      SlotAssignment a;
      a.operator_name = std::get<std::string>(config.value(space.dim_index(slot)));
      if (a.operator_name != kEmptySlot) {
        const ConfigSpace& params = catalog.get(a.operator_name).signature().params;
        std::vector<std::optional<Value>> values(params.dim_count());
        for (std::size_t i = 0; i < params.dim_count(); ++i) {
          std::string qualified = slot + "." + a.operator_name + "." + params.dim(i).name();
          values[i] = config.value(space.dim_index(qualified));
        }
        a.params = params.make(std::move(values));
      }
      inst.assignment[slot] = std::move(a);
    }
  }
  return inst;
}

}  // namespace flowtune
