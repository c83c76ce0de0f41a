#ifndef LWCONV_GRAPH_HPP
#define LWCONV_GRAPH_HPP

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lwconv/error.hpp"
#include "lwconv/layer.hpp"

namespace lwconv {

class GraphError : public Error {
 public:
  enum class Kind { syntax, schema, unknown_kind, cycle, structure, shape };

  GraphError(Kind kind, std::string node_id, const std::string& what)
      : Error(node_id.empty() ? what : "node '" + node_id + "': " + what),
        kind_(kind),
        node_id_(std::move(node_id)) {}

  Kind kind() const noexcept { return kind_; }
  const std::string& node_id() const noexcept { return node_id_; }

 private:
  Kind kind_;
  std::string node_id_;
};

// Builds a block of `kind` for `input`, with hyperparameters from a JSON
// object (empty text = defaults) and weights drawn from `seed`. Accepts the
// graph kinds except concat/add, plus group_norm, softmax, global_avg_pool,
// predict_kernels and reassemble. Throws GraphError (unknown_kind, schema)
// or the block's own ShapeError/ValueError.
std::unique_ptr<Layer> make_block(std::string_view kind, const Shape& input,
                                  std::string_view params_json, std::uint64_t seed);

std::span<const std::string_view> graph_node_kinds() noexcept;
std::span<const std::string_view> block_kinds() noexcept;

struct GraphNode {
  std::string id;
  std::string kind;
  std::uint64_t seed = 0;
  std::string params_json;           // compact JSON of the node's "params"
  std::vector<std::size_t> inputs;   // indices into nodes(), in edge order
  Shape input_shape;                 // first input's shape
  Shape output_shape;
  std::unique_ptr<Layer> layer;      // null for concat / add
};

// Validated DAG with a single source and sink, nodes in topological order.
class BlockGraph {
 public:
  const Shape& input_shape() const noexcept { return input_shape_; }
  Shape output_shape() const noexcept {
    return nodes_.empty() ? input_shape_ : nodes_.back().output_shape;
  }
  std::span<const GraphNode> nodes() const noexcept { return nodes_; }
  std::span<GraphNode> nodes() noexcept { return nodes_; }
  const GraphNode* find(std::string_view id) const noexcept;

 private:
  friend BlockGraph parse_graph(std::string_view document);

  Shape input_shape_;
  std::vector<GraphNode> nodes_;
};

// Document: {"input_shape":[n,c,h,w],
//            "nodes":[{"id":..,"kind":..,"params":{..},"seed":..}],
//            "edges":[["a","b"], ...]}
BlockGraph parse_graph(std::string_view document);
BlockGraph load_graph(const std::filesystem::path& path);

// Replaces generated weights with <dir>/<node id>.<param name>.ltb where such
// a file exists. Returns the number of parameter groups replaced.
std::size_t load_weights(BlockGraph& graph, const std::filesystem::path& dir);

Tensor run_graph(const BlockGraph& graph, const Tensor& input);

struct NodeCost {
  std::string id;
  std::string kind;
  Shape output_shape;
  std::uint64_t params = 0;
  std::uint64_t bias_params = 0;
  std::uint64_t macs = 0;
};

struct GraphCostReport {
  std::vector<NodeCost> nodes;
  std::uint64_t params = 0;
  std::uint64_t bias_params = 0;
  std::uint64_t macs = 0;
};

// Parameters are counted from the instantiated weights, MACs from an
// instrumented forward pass on a zero input of each node's shape.
GraphCostReport analyze_graph(const BlockGraph& graph);

std::string to_json(const GraphCostReport& report);
std::string to_table(const GraphCostReport& report);

}  // namespace lwconv

#endif  // LWCONV_GRAPH_HPP
