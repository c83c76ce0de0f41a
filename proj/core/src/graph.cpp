#include "lwconv/graph.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <queue>
#include <sstream>

#include "json.hpp"
#include "lwconv/ops.hpp"
#include "lwconv/tensor_io.hpp"

namespace lwconv {
namespace {

using json = nlohmann::json;
using Kind = GraphError::Kind;

[[noreturn]] void fail(Kind kind, const std::string& node, const std::string& what) {
  throw GraphError(kind, node, what);
}

bool is_merge(std::string_view kind) { return kind == "concat" || kind == "add"; }

Shape read_shape(const json& v) {
  if (!v.is_array() || v.size() != 4) fail(Kind::schema, "", "input_shape must be [n, c, h, w]");
  std::int64_t d[4];
  for (std::size_t i = 0; i < 4; ++i) {
    if (!v[i].is_number_integer() || v[i].get<std::int64_t>() < 1) {
      fail(Kind::schema, "", "input_shape entries must be positive integers");
    }
    d[i] = v[i].get<std::int64_t>();
  }
  return {d[0], d[1], d[2], d[3]};
}

struct RawNode {
  std::string id;
  std::string kind;
  std::uint64_t seed = 0;
  std::string params;
};

RawNode read_node(const json& v, std::size_t index) {
  const std::string where = "nodes[" + std::to_string(index) + "]";
  if (!v.is_object()) fail(Kind::schema, "", where + " must be an object");
  RawNode n;
  for (const auto& [key, value] : v.items()) {
    if (key == "id") {
      if (!value.is_string() || value.get<std::string>().empty()) {
        fail(Kind::schema, "", where + ".id must be a non-empty string");
      }
      n.id = value.get<std::string>();
    } else if (key == "kind") {
      if (!value.is_string()) fail(Kind::schema, "", where + ".kind must be a string");
      n.kind = value.get<std::string>();
    } else if (key == "seed") {
      if (!value.is_number_unsigned()) fail(Kind::schema, "", where + ".seed must be a non-negative integer");
      n.seed = value.get<std::uint64_t>();
    } else if (key == "params") {
      if (!value.is_object()) fail(Kind::schema, "", where + ".params must be an object");
      n.params = value.dump();
    } else {
      fail(Kind::schema, "", where + ": unknown field '" + key + "'");
    }
  }
  if (n.id.empty()) fail(Kind::schema, "", where + " is missing 'id'");
  if (n.kind.empty()) fail(Kind::schema, n.id, "missing 'kind'");
  return n;
}

// Kahn's algorithm; ready nodes are taken in document order.
std::vector<std::size_t> topo_order(const std::vector<RawNode>& nodes,
                                    const std::vector<std::vector<std::size_t>>& preds) {
  const std::size_t n = nodes.size();
  std::vector<std::vector<std::size_t>> succ(n);
  std::vector<std::size_t> indegree(n, 0);
  for (std::size_t v = 0; v < n; ++v) {
    indegree[v] = preds[v].size();
    for (std::size_t u : preds[v]) succ[u].push_back(v);
  }
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t v = 0; v < n; ++v) {
    if (indegree[v] == 0) ready.push(v);
  }
  std::vector<std::size_t> order;
  while (!ready.empty()) {
    const std::size_t u = ready.top();
    ready.pop();
    order.push_back(u);
    for (std::size_t v : succ[u]) {
      if (--indegree[v] == 0) ready.push(v);
    }
  }
  if (order.size() == n) return order;

  // Walk predecessors inside the unresolved set until a node repeats.
  std::size_t start = 0;
  while (indegree[start] == 0) ++start;
  std::vector<std::size_t> path;
  std::vector<int> seen(n, -1);
  std::size_t cur = start;
  while (seen[cur] < 0) {
    seen[cur] = static_cast<int>(path.size());
    path.push_back(cur);
    const auto& p = preds[cur];
    cur = *std::find_if(p.begin(), p.end(), [&](std::size_t u) { return indegree[u] > 0; });
  }
  std::vector<std::size_t> cycle(path.begin() + seen[cur], path.end());
  std::reverse(cycle.begin(), cycle.end());
  // start the report at the earliest node in document order
  std::rotate(cycle.begin(), std::min_element(cycle.begin(), cycle.end()), cycle.end());
  std::string text;
  for (std::size_t v : cycle) text += nodes[v].id + " -> ";
  text += nodes[cycle.front()].id;
  fail(Kind::cycle, nodes[cycle.front()].id, "graph contains a cycle: " + text);
}

Shape merge_shape(const GraphNode& node, const Shape& a, const Shape& b) {
  if (a.n != b.n || a.h != b.h || a.w != b.w) {
    fail(Kind::shape, node.id, node.kind + " inputs disagree: " + a.str() + " vs " + b.str());
  }
  if (node.kind == "add") {
    if (a.c != b.c) fail(Kind::shape, node.id, "add inputs disagree: " + a.str() + " vs " + b.str());
    return a;
  }
  return {a.n, a.c + b.c, a.h, a.w};
}

}  // namespace

const GraphNode* BlockGraph::find(std::string_view id) const noexcept {
  for (const auto& n : nodes_) {
    if (n.id == id) return &n;
  }
  return nullptr;
}

BlockGraph parse_graph(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    fail(Kind::syntax, "", std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) fail(Kind::schema, "", "graph document must be a JSON object");
  for (const auto& [key, _] : doc.items()) {
    if (key != "input_shape" && key != "nodes" && key != "edges") {
      fail(Kind::schema, "", "unknown top-level field '" + key + "'");
    }
  }
  if (!doc.contains("input_shape")) fail(Kind::schema, "", "missing 'input_shape'");
  const Shape input_shape = read_shape(doc["input_shape"]);

  const json nodes_json = doc.value("nodes", json::array());
  const json edges_json = doc.value("edges", json::array());
  if (!nodes_json.is_array()) fail(Kind::schema, "", "'nodes' must be an array");
  if (!edges_json.is_array()) fail(Kind::schema, "", "'edges' must be an array");

  std::vector<RawNode> raw;
  for (std::size_t i = 0; i < nodes_json.size(); ++i) raw.push_back(read_node(nodes_json[i], i));

  const auto kinds = graph_node_kinds();
  for (const auto& n : raw) {
    if (std::find(kinds.begin(), kinds.end(), n.kind) == kinds.end()) {
      fail(Kind::unknown_kind, n.id, "unknown kind '" + n.kind + "'");
    }
  }

  std::map<std::string, std::size_t, std::less<>> index;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!index.emplace(raw[i].id, i).second) fail(Kind::structure, raw[i].id, "duplicate node id");
  }

  std::vector<std::vector<std::size_t>> preds(raw.size());
  std::vector<std::size_t> out_degree(raw.size(), 0);
  for (const auto& e : edges_json) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_string() || !e[1].is_string()) {
      fail(Kind::schema, "", "each edge must be [\"from\", \"to\"]");
    }
    const auto from = index.find(e[0].get<std::string>());
    const auto to = index.find(e[1].get<std::string>());
    if (from == index.end()) fail(Kind::structure, "", "edge references unknown node '" + e[0].get<std::string>() + "'");
    if (to == index.end()) fail(Kind::structure, "", "edge references unknown node '" + e[1].get<std::string>() + "'");
    preds[to->second].push_back(from->second);
    ++out_degree[from->second];
  }

  BlockGraph graph;
  graph.input_shape_ = input_shape;
  if (raw.empty()) return graph;

  const std::vector<std::size_t> order = topo_order(raw, preds);

  std::vector<std::size_t> sources;
  std::vector<std::size_t> sinks;
  for (std::size_t v = 0; v < raw.size(); ++v) {
    if (preds[v].empty()) sources.push_back(v);
    if (out_degree[v] == 0) sinks.push_back(v);
  }
  if (sources.size() != 1) {
    fail(Kind::structure, "", "graph must have exactly one source, found " + std::to_string(sources.size()));
  }
  if (sinks.size() != 1) {
    fail(Kind::structure, "", "graph must have exactly one sink, found " + std::to_string(sinks.size()));
  }

  std::vector<std::size_t> position(raw.size());
  for (std::size_t i = 0; i < order.size(); ++i) position[order[i]] = i;

  for (std::size_t v : order) {
    const RawNode& r = raw[v];
    const std::size_t arity = preds[v].size();
    if (is_merge(r.kind)) {
      if (arity != 2) fail(Kind::structure, r.id, r.kind + " needs exactly 2 inputs, got " + std::to_string(arity));
      if (!r.params.empty() && r.params != "{}") fail(Kind::schema, r.id, r.kind + " takes no params");
    } else if (arity > 1) {
      fail(Kind::structure, r.id, r.kind + " takes a single input, got " + std::to_string(arity));
    } else if (arity == 0 && v != sources.front()) {
      fail(Kind::structure, r.id, "node has no input");
    }
    if (arity == 0 && is_merge(r.kind)) fail(Kind::structure, r.id, r.kind + " cannot be the source");

    GraphNode node;
    node.id = r.id;
    node.kind = r.kind;
    node.seed = r.seed;
    node.params_json = r.params.empty() ? "{}" : r.params;
    for (std::size_t u : preds[v]) node.inputs.push_back(position[u]);
    node.input_shape = node.inputs.empty() ? input_shape : graph.nodes_[node.inputs[0]].output_shape;

    if (is_merge(node.kind)) {
      node.output_shape = merge_shape(node, node.input_shape, graph.nodes_[node.inputs[1]].output_shape);
    } else {
      try {
        node.layer = make_block(node.kind, node.input_shape, node.params_json, node.seed);
        node.output_shape = node.layer->output_shape(node.input_shape);
      } catch (const GraphError& e) {
        fail(e.kind(), node.id, e.what());
      } catch (const Error& e) {
        fail(Kind::shape, node.id, e.what());
      }
    }
    graph.nodes_.push_back(std::move(node));
  }
  return graph;
}

BlockGraph load_graph(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatError::Kind::io, "cannot open graph file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_graph(text.str());
}

std::size_t load_weights(BlockGraph& graph, const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw FormatError(FormatError::Kind::io, "weights directory not found: " + dir.string());
  }
  std::size_t replaced = 0;
  for (auto& node : graph.nodes()) {
    if (!node.layer) continue;
    for (auto& ref : node.layer->parameters()) {
      const auto file = dir / (node.id + "." + ref.name + ".ltb");
      if (!std::filesystem::exists(file)) continue;
      const Tensor t = read_tensor(file);
      if (t.shape() != ref.shape) {
        throw ShapeError("weights " + file.filename().string() + ": expected " + ref.shape.str() +
                         ", got " + t.shape().str());
      }
      std::copy(t.data().begin(), t.data().end(), ref.values.begin());
      ++replaced;
    }
  }
  return replaced;
}

Tensor run_graph(const BlockGraph& graph, const Tensor& input) {
  if (input.shape() != graph.input_shape()) {
    throw ShapeError("graph expects input " + graph.input_shape().str() + ", got " + input.shape().str());
  }
  require_finite(input, "graph input");
  const auto nodes = graph.nodes();
  if (nodes.empty()) return input;
  std::vector<Tensor> values;
  values.reserve(nodes.size());
  for (const auto& node : nodes) {
    const Tensor& first = node.inputs.empty() ? input : values[node.inputs[0]];
    if (node.kind == "add") {
      values.push_back(add(first, values[node.inputs[1]]));
    } else if (node.kind == "concat") {
      values.push_back(concat_channels(first, values[node.inputs[1]]));
    } else {
      values.push_back(node.layer->forward(first));
    }
  }
  return std::move(values.back());
}

GraphCostReport analyze_graph(const BlockGraph& graph) {
  GraphCostReport report;
  for (const auto& node : graph.nodes()) {
    NodeCost cost{node.id, node.kind, node.output_shape, 0, 0, 0};
    if (node.layer) {
      const ParamCount count = count_parameters(*node.layer);
      cost.params = count.weights;
      cost.bias_params = count.bias;
      MacCounter counter;
      node.layer->forward(Tensor(node.input_shape), &counter);
      cost.macs = counter.macs;
    }
    report.params += cost.params;
    report.bias_params += cost.bias_params;
    report.macs += cost.macs;
    report.nodes.push_back(std::move(cost));
  }
  return report;
}

std::string to_json(const GraphCostReport& report) {
  json nodes = json::array();
  for (const auto& n : report.nodes) {
    const Shape& s = n.output_shape;
    nodes.push_back({{"id", n.id},
                     {"kind", n.kind},
                     {"output_shape", {s.n, s.c, s.h, s.w}},
                     {"params", n.params},
                     {"bias_params", n.bias_params},
                     {"macs", n.macs}});
  }
  json out = {{"nodes", nodes},
              {"total", {{"params", report.params}, {"bias_params", report.bias_params}, {"macs", report.macs}}},
              {"mac_unit", "multiply-accumulate"}};
  return out.dump(2);
}

std::string to_table(const GraphCostReport& report) {
  std::ostringstream os;
  auto row = [&](const std::string& id, const std::string& kind, const std::string& shape,
                 std::uint64_t params, std::uint64_t macs) {
    os << std::left;
    os.width(16);
    os << id;
    os.width(18);
    os << kind;
    os.width(20);
    os << shape;
    os << std::right;
    os.width(12);
    os << params;
    os.width(16);
    os << macs << '\n';
  };
  os << std::left;
  os.width(16);
  os << "id";
  os.width(18);
  os << "kind";
  os.width(20);
  os << "output";
  os << std::right;
  os.width(12);
  os << "params";
  os.width(16);
  os << "macs" << '\n';
  for (const auto& n : report.nodes) row(n.id, n.kind, n.output_shape.str(), n.params, n.macs);
  row("total", "", "", report.params, report.macs);
  return os.str();
}

}  // namespace lwconv
