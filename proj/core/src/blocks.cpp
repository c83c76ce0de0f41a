// Block factory shared by the graph parser and the gradcheck tool.
#include <algorithm>
#include <array>
#include <numeric>
#include <set>

#include "json.hpp"
#include "lwconv/carafe.hpp"
#include "lwconv/ghost.hpp"
#include "lwconv/graph.hpp"
#include "lwconv/layers.hpp"
#include "lwconv/ops.hpp"
#include "lwconv/scconv.hpp"
#include "lwconv/separable.hpp"

namespace lwconv {
namespace {

using json = nlohmann::json;

constexpr std::array<std::string_view, 12> kGraphKinds = {
    "conv2d", "ds_conv",          "sru",     "cru",    "scconv",           "ghost_conv",
    "ghost_bottleneck", "c3ghost", "carafe", "nearest_upsample", "concat", "add"};

constexpr std::array<std::string_view, 15> kBlockKinds = {
    "conv2d",     "ds_conv",          "sru",        "cru",             "scconv",
    "ghost_conv", "ghost_bottleneck", "c3ghost",    "carafe",          "nearest_upsample",
    "group_norm", "softmax",          "global_avg_pool", "predict_kernels", "reassemble"};

// Typed access to a node's "params" object; rejects keys nobody asked for.
class ParamReader {
 public:
  ParamReader(std::string_view kind, const json& obj) : kind_(kind), obj_(obj) {
    if (!obj_.is_object()) fail("params must be a JSON object");
  }

  std::int64_t integer(const char* key, std::int64_t fallback) {
    const json* v = take(key);
    if (v == nullptr) return fallback;
    if (!v->is_number_integer()) fail(std::string(key) + " must be an integer");
    return v->get<std::int64_t>();
  }

  std::int64_t required_integer(const char* key) {
    if (!obj_.contains(key)) fail(std::string("missing required parameter ") + key);
    return integer(key, 0);
  }

  double real(const char* key, double fallback) {
    const json* v = take(key);
    if (v == nullptr) return fallback;
    if (!v->is_number()) fail(std::string(key) + " must be a number");
    return v->get<double>();
  }

  bool boolean(const char* key, bool fallback) {
    const json* v = take(key);
    if (v == nullptr) return fallback;
    if (!v->is_boolean()) fail(std::string(key) + " must be a boolean");
    return v->get<bool>();
  }

  std::string text(const char* key, std::string fallback) {
    const json* v = take(key);
    if (v == nullptr) return fallback;
    if (!v->is_string()) fail(std::string(key) + " must be a string");
    return v->get<std::string>();
  }

  void finish() const {
    for (const auto& [key, _] : obj_.items()) {
      if (!used_.contains(key)) fail("unknown parameter '" + key + "'");
    }
  }

 private:
  const json* take(const char* key) {
    used_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  [[noreturn]] void fail(const std::string& why) const {
    throw GraphError(GraphError::Kind::schema, "", std::string(kind_) + ": " + why);
  }

  std::string_view kind_;
  const json& obj_;
  std::set<std::string> used_;
};

std::int64_t default_groups(std::int64_t channels) { return std::gcd(channels, std::int64_t{4}); }

GroupNormParams read_group_norm(ParamReader& p, std::int64_t channels, Rng& rng) {
  GroupNormParams gn;
  gn.num_groups = p.integer("groups", default_groups(channels));
  gn.epsilon = p.real("eps", 1e-5);
  gn.gamma = rng.vector(static_cast<std::size_t>(channels), 0.5, 1.5);
  gn.beta = rng.vector(static_cast<std::size_t>(channels), -0.5, 0.5);
  return gn;
}

SruParams read_sru(ParamReader& p, std::int64_t channels, Rng& rng) {
  SruParams s;
  s.threshold = p.real("threshold", 0.5);
  s.gate = parse_gate_mode(p.text("gate", "hard"));
  s.gn = read_group_norm(p, channels, rng);
  s.validate(channels);
  return s;
}

CruParams read_cru(ParamReader& p, std::int64_t channels, Rng& rng) {
  const double alpha = p.real("alpha", 0.5);
  const std::int64_t r = p.integer("r", 2);
  const std::int64_t g = p.integer("gwc_groups", 2);
  return CruParams::init(channels, alpha, r, g, rng);
}

CarafeParams read_carafe(ParamReader& p, std::int64_t channels, Rng& rng) {
  const std::int64_t scale = p.integer("scale", 2);
  const std::int64_t k_up = p.integer("k_up", 5);
  const std::int64_t k_enc = p.integer("k_enc", 3);
  const std::int64_t c_mid = p.integer("c_mid", 0);
  return CarafeParams::init(channels, rng, scale, k_up, k_enc, c_mid);
}

std::unique_ptr<Layer> build(std::string_view kind, const Shape& in, ParamReader& p, Rng& rng) {
  const std::int64_t c = in.c;
  if (kind == "conv2d") {
    ConvSpec s;
    s.in_channels = c;
    s.out_channels = p.required_integer("out_channels");
    s.kernel = p.integer("kernel", 1);
    s.stride = p.integer("stride", 1);
    s.padding = p.integer("padding", s.kernel / 2);
    s.groups = p.integer("groups", 1);
    s.has_bias = p.boolean("bias", false);
    if (p.text("padding_mode", "zeros") != "zeros") {
      throw ValueError("conv2d: only zero padding is supported");
    }
    return std::make_unique<Conv2dLayer>(ConvParams::init(s, rng));
  }
  if (kind == "ds_conv") {
    const std::int64_t n = p.required_integer("out_channels");
    const std::int64_t k = p.integer("kernel", 3);
    if (k < 1 || k % 2 == 0) throw ValueError("ds_conv: kernel must be odd, got " + std::to_string(k));
    return std::make_unique<SeparableConvLayer>(SeparableConvParams::init(c, n, k, rng));
  }
  if (kind == "sru") return std::make_unique<SruLayer>(read_sru(p, c, rng));
  if (kind == "cru") return std::make_unique<CruLayer>(read_cru(p, c, rng));
  if (kind == "scconv") {
    SCConvParams s;
    s.sru = read_sru(p, c, rng);
    s.cru = read_cru(p, c, rng);
    return std::make_unique<SCConvLayer>(std::move(s));
  }
  if (kind == "ghost_conv") {
    const std::int64_t n = p.required_integer("out_channels");
    const std::int64_t ratio = p.integer("ratio", 2);
    const std::int64_t k = p.integer("kernel", 3);
    const std::int64_t d = p.integer("cheap_kernel", 3);
    const Activation act = parse_activation(p.text("activation", "none"));
    return std::make_unique<GhostConvLayer>(GhostSpec::init(c, n, rng, k, ratio, d, act));
  }
  if (kind == "ghost_bottleneck") {
    const std::int64_t hidden = p.integer("hidden", c / 2);
    const Activation act = parse_activation(p.text("activation", "none"));
    return std::make_unique<GhostBottleneckLayer>(GhostBottleneckSpec::init(c, rng, hidden, act));
  }
  if (kind == "c3ghost") {
    const std::int64_t out = p.integer("out_channels", c);
    const std::int64_t n = p.integer("n", 1);
    const std::int64_t hidden = p.integer("hidden", out / 2);
    return std::make_unique<C3GhostLayer>(C3GhostSpec::init(c, out, n, rng, hidden));
  }
  if (kind == "carafe") return std::make_unique<CarafeLayer>(read_carafe(p, c, rng));
  if (kind == "predict_kernels") return std::make_unique<PredictKernelsLayer>(read_carafe(p, c, rng));
  if (kind == "reassemble") {
    const std::int64_t scale = p.integer("scale", 2);
    const std::int64_t k_up = p.integer("k_up", 5);
    if (scale < 1 || k_up < 1 || k_up % 2 == 0) {
      throw ValueError("reassemble: need scale >= 1 and odd k_up");
    }
    KernelField field{softmax_over_channels(rng.tensor({in.n, k_up * k_up, in.h * scale, in.w * scale}))};
    return std::make_unique<ReassembleLayer>(std::move(field), scale, k_up);
  }
  if (kind == "nearest_upsample") {
    return std::make_unique<NearestUpsampleLayer>(p.integer("scale", 2));
  }
  if (kind == "group_norm") return std::make_unique<GroupNormLayer>(read_group_norm(p, c, rng));
  if (kind == "softmax") return std::make_unique<SoftmaxLayer>();
  if (kind == "global_avg_pool") return std::make_unique<GlobalAvgPoolLayer>();
  throw GraphError(GraphError::Kind::unknown_kind, "", "unknown block kind '" + std::string(kind) + "'");
}

}  // namespace

std::span<const std::string_view> graph_node_kinds() noexcept { return kGraphKinds; }
std::span<const std::string_view> block_kinds() noexcept { return kBlockKinds; }

std::unique_ptr<Layer> make_block(std::string_view kind, const Shape& input,
                                  std::string_view params_json, std::uint64_t seed) {
  if (std::find(kBlockKinds.begin(), kBlockKinds.end(), kind) == kBlockKinds.end()) {
    throw GraphError(GraphError::Kind::unknown_kind, "", "unknown block kind '" + std::string(kind) + "'");
  }
  require_valid_shape(input, kind);
  json params = json::object();
  if (!params_json.empty()) {
    try {
      params = json::parse(params_json);
    } catch (const json::parse_error& e) {
      throw GraphError(GraphError::Kind::syntax, "", std::string(kind) + " params: " + e.what());
    }
  }
  ParamReader reader(kind, params);
  Rng rng(seed);
  auto layer = build(kind, input, reader, rng);
  reader.finish();
  layer->output_shape(input);
  return layer;
}

}  // namespace lwconv
