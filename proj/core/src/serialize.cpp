#include "flowtune/serialize.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace flowtune {

namespace {

Json value_to_json(const Value& v) {
  struct Visitor {
    Json operator()(bool b) const { return b; }
    Json operator()(std::int64_t i) const { return i; }
    Json operator()(double d) const { return d; }
    Json operator()(const std::string& s) const { return s; }
  };
  return std::visit(Visitor{}, v);
}

Value value_from_json(const ParamDomain& dom, const Json& j) {
  switch (dom.kind()) {
    case ParamDomain::Kind::Boolean: return j.get<bool>();
    case ParamDomain::Kind::IntegerGrid: return j.get<std::int64_t>();
    case ParamDomain::Kind::RealGrid: return j.get<double>();
    case ParamDomain::Kind::Categorical: return j.get<std::string>();
  }
  throw std::logic_error("bad domain kind");
}

std::string kind_name(ParamDomain::Kind k) {
  switch (k) {
    case ParamDomain::Kind::Boolean: return "bool";
    case ParamDomain::Kind::IntegerGrid: return "int";
    case ParamDomain::Kind::RealGrid: return "real";
    case ParamDomain::Kind::Categorical: return "cat";
  }
  return "?";
}

}  // namespace

Json space_to_json(const ConfigSpace& space) {
  Json dims = Json::array();
  for (const ParamDomain& d : space.dims()) {
    Json dim;
    dim["name"] = d.name();
    dim["kind"] = kind_name(d.kind());
    if (d.kind() != ParamDomain::Kind::Boolean) {
      Json values = Json::array();
      for (std::size_t i = 0; i < d.size(); ++i) values.push_back(value_to_json(d.value_at(i)));
      dim["values"] = values;
    }
    dims.push_back(dim);
  }
  Json conditions = Json::array();
  for (const Condition& c : space.conditions()) {
    Json cond;
    cond["child"] = space.dim(c.child).name();
    cond["parent"] = space.dim(c.parent).name();
    Json allowed = Json::array();
    for (const Value& v : c.allowed) allowed.push_back(value_to_json(v));
    cond["allowed"] = allowed;
    conditions.push_back(cond);
  }
  return Json{{"dims", dims}, {"conditions", conditions}};
}

ConfigSpace space_from_json(const Json& j) {
  std::vector<ParamDomain> dims;
  for (const Json& dj : j.at("dims")) {
    const std::string name = dj.at("name").get<std::string>();
    const std::string kind = dj.at("kind").get<std::string>();
    if (kind == "bool") {
      dims.push_back(ParamDomain::boolean(name));
    } else if (kind == "int") {
      dims.push_back(ParamDomain::integer_grid(name, dj.at("values").get<std::vector<std::int64_t>>()));
    } else if (kind == "real") {
      dims.push_back(ParamDomain::real_grid(name, dj.at("values").get<std::vector<double>>()));
    } else if (kind == "cat") {
      dims.push_back(ParamDomain::categorical(name, dj.at("values").get<std::vector<std::string>>()));
    } else {
      throw std::invalid_argument("unknown dimension kind '" + kind + "'");
    }
  }
  ConfigSpace probe(dims);  // name lookup for condition indices
  std::vector<Condition> conditions;
  if (j.contains("conditions")) {
    for (const Json& cj : j.at("conditions")) {
      Condition c;
      c.child = probe.dim_index(cj.at("child").get<std::string>());
      c.parent = probe.dim_index(cj.at("parent").get<std::string>());
      for (const Json& v : cj.at("allowed"))
        c.allowed.push_back(value_from_json(probe.dim(c.parent), v));
      conditions.push_back(std::move(c));
    }
  }
  return ConfigSpace(std::move(dims), std::move(conditions));
}

Json config_to_json(const ConfigSpace& space, const Configuration& config) {
  Json out = Json::object();
  for (std::size_t d = 0; d < space.dim_count(); ++d)
    if (config.has_value(d)) out[space.dim(d).name()] = value_to_json(config.value(d));
  return out;
}

Configuration config_from_json(const ConfigSpace& space, const Json& j) {
  std::vector<std::optional<Value>> values(space.dim_count());
  for (auto it = j.begin(); it != j.end(); ++it) {
    std::size_t d = space.dim_index(it.key());
    values[d] = value_from_json(space.dim(d), it.value());
  }
  return space.make(std::move(values));
}

Json prototype_to_json(const PipelinePrototype& proto) {
  Json nodes = Json::array();
  for (const PrototypeNode& n : proto.nodes()) {
    const char* type = n.type == NodeType::Source   ? "source"
                       : n.type == NodeType::Sink   ? "sink"
                       : n.type == NodeType::Slot   ? "slot"
                                                    : "union";
    nodes.push_back(Json{{"id", n.id}, {"type", type}});
  }
  Json edges = Json::array();
  for (const auto& [from, to] : proto.edges()) edges.push_back(Json::array({from, to}));
  Json layers = Json::array();
  for (const PrototypeLayer& l : proto.layers())
    layers.push_back(Json{{"name", l.name}, {"slots", l.slots}, {"catalog", l.catalog}});
  return Json{{"nodes", nodes}, {"edges", edges}, {"layers", layers}};
}

PrototypePtr prototype_from_json(const Json& j) {
  std::vector<PrototypeNode> nodes;
  for (const Json& nj : j.at("nodes")) {
    const std::string type = nj.at("type").get<std::string>();
    NodeType t = type == "source" ? NodeType::Source
                 : type == "sink" ? NodeType::Sink
                 : type == "slot" ? NodeType::Slot
                 : type == "union"
                     ? NodeType::Union
                     : throw std::invalid_argument("unknown node type '" + type + "'");
    nodes.push_back(PrototypeNode{t, nj.at("id").get<std::string>()});
  }
  std::vector<std::pair<std::string, std::string>> edges;
  for (const Json& ej : j.at("edges"))
    edges.emplace_back(ej.at(0).get<std::string>(), ej.at(1).get<std::string>());
  std::vector<PrototypeLayer> layers;
  for (const Json& lj : j.at("layers")) {
    PrototypeLayer l;
    l.name = lj.at("name").get<std::string>();
    l.slots = lj.at("slots").get<std::vector<std::string>>();
    l.catalog = lj.at("catalog").get<std::vector<std::string>>();
    layers.push_back(std::move(l));
  }
  return std::make_shared<const PipelinePrototype>(std::move(nodes), std::move(edges),
                                                   std::move(layers));
}

Json trace_entry_to_json(const TraceEntry& e, const ConfigSpace& pipeline_space,
                         const ConfigSpace& algo_space) {
  Json out;
  out["eval"] = e.eval_index;
  out["phase"] = to_string(e.phase);
  out["clock"] = e.clock;
  out["pipeline"] = config_to_json(pipeline_space, e.pipeline_config);
  out["algorithm"] = config_to_json(algo_space, e.algo_config);
  if (std::isfinite(e.loss)) {
    out["loss"] = e.loss;
    out["accuracy"] = e.accuracy;
  } else {
    out["loss"] = nullptr;  // +infinity: incompatible configuration
    out["accuracy"] = 0.0;
    out["incompatibility"] = e.incompatibility;
  }
  if (!e.fingerprint.empty()) out["fingerprint"] = e.fingerprint;
  return out;
}

Json run_report_to_json(const RunReport& report, const ConfigSpace& pipeline_space,
                        const ConfigSpace& algo_space) {
  Json out;
  out["policy"] = report.policy;
  out["seed"] = report.seed;
  out["budget"] = Json{{"mode", to_string(report.budget_mode)}, {"total", report.budget_total}};
  out["cauchy_epsilon"] = std::isfinite(report.cauchy_epsilon)
                              ? Json(report.cauchy_epsilon)
                              : Json("inf");
  out["trials"] = report.trace.size();
  out["best"] = Json{{"eval", report.best_index},
                     {"loss", std::isfinite(report.best_loss) ? Json(report.best_loss) : Json()},
                     {"accuracy", report.best_accuracy},
                     {"pipeline", config_to_json(pipeline_space, report.best_pipeline)},
                     {"algorithm", config_to_json(algo_space, report.best_algo)}};
  out["consumed"] = Json{{"pipeline", report.pipeline_consumed},
                         {"algorithm", report.algorithm_consumed},
                         {"joint", report.joint_consumed},
                         {"total", report.total_consumed}};
  Json slices = Json::array();
  for (const SliceRecord& s : report.slices)
    slices.push_back(Json{{"phase", to_string(s.phase)},
                          {"budget", s.budget},
                          {"trials", s.trials},
                          {"improved", s.improved}});
  out["slices"] = slices;
  out["algo_grid_canonical"] = false;  // declared stand-in, sized to the protocol
  return out;
}

OptimalSet optimal_set_from_json(const Json& j) {
  OptimalSet set;
  set.name = j.value("name", "");
  set.space = space_from_json(j.at("space"));
  for (const Json& aj : j.at("optima")) {
    std::vector<Configuration> points;
    for (const Json& pj : aj.at("points")) points.push_back(config_from_json(set.space, pj));
    set.per_algorithm.emplace_back(aj.at("algorithm").get<std::string>(), std::move(points));
  }
  set.validate();
  return set;
}

OptimalSet load_optimal_set(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open fixture '" + path + "'");
  Json j;
  in >> j;
  return optimal_set_from_json(j);
}

std::string format_point(const ConfigSpace& space, const Configuration& config) {
  std::ostringstream os;
  os << "(";
  bool first = true;
  for (std::size_t d = 0; d < space.dim_count(); ++d) {
    if (!config.has_value(d)) continue;
    if (!first) os << ", ";
    os << value_to_string(config.value(d));
    first = false;
  }
  os << ")";
  return os.str();
}

Json nmad_report_to_json(const NmadReport& report, const ConfigSpace& space) {
  Json rows = Json::array();
  for (const NmadRow& row : report.rows) {
    Json representants = Json::object();
    for (const auto& [algo, rep] : row.representants)
      representants[algo] = config_to_json(space, rep);
    rows.push_back(Json{{"point", config_to_json(space, row.reference)},
                        {"nmad", row.value},
                        {"representants", representants}});
  }
  return Json{{"name", report.name}, {"rows", rows}};
}

std::string render_nmad_table(const NmadReport& report, const ConfigSpace& space) {
  std::ostringstream os;
  os << report.name << "\n";
  os << std::left << std::setw(24) << "point" << "NMAD\n";
  for (const NmadRow& row : report.rows) {
    os << std::left << std::setw(24) << format_point(space, row.reference) << std::fixed
       << std::setprecision(3) << row.value << "\n";
  }
  return os.str();
}

}  // namespace flowtune
