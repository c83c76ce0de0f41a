// lwconv command-line tool. Exit codes: 0 success, 1 operational error
// (including a failed or unsupported gradient check), 2 usage error.
#include <charconv>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lwconv/cost.hpp"
#include "lwconv/gradcheck.hpp"
#include "lwconv/graph.hpp"
#include "lwconv/metrics.hpp"
#include "lwconv/tensor_io.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

lwconv::Shape parse_shape(const std::string& text) {
  std::vector<std::int64_t> dims;
  const char* p = text.data();
  const char* end = p + text.size();
  while (p < end) {
    std::int64_t v = 0;
    auto [next, ec] = std::from_chars(p, end, v);
    if (ec != std::errc{} || v < 1) throw UsageError("--shape must be four positive integers n,c,h,w");
    dims.push_back(v);
    p = next;
    if (p < end && *p++ != ',') throw UsageError("--shape must be comma separated");
  }
  if (dims.size() != 4) throw UsageError("--shape must have exactly four entries");
  return {dims[0], dims[1], dims[2], dims[3]};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lightweight convolution blocks: run, analyze, gradcheck and evaluate"};
  app.require_subcommand(1);

  std::string graph_path;
  std::string input_path;
  std::string output_path;
  std::string weights_dir;
  auto* run = app.add_subcommand("run", "Execute a block graph on an LTB1 tensor");
  run->add_option("--graph", graph_path, "Graph document (JSON)")->required();
  run->add_option("--input", input_path, "Input tensor (LTB1)")->required();
  run->add_option("--output", output_path, "Output tensor path (LTB1)")->required();
  run->add_option("--weights", weights_dir, "Directory of <node>.<param>.ltb overrides");

  std::string format = "json";
  auto* analyze = app.add_subcommand("analyze", "Count parameters and MACs per graph node");
  analyze->add_option("--graph", graph_path, "Graph document (JSON)")->required();
  analyze->add_option("--format", format, "Report format")->check(CLI::IsMember({"json", "table"}));

  std::string block;
  std::string shape_text;
  std::uint64_t seed = 0;
  lwconv::GradCheckOptions gc_options;
  std::string block_params;
  auto* gradcheck = app.add_subcommand("gradcheck", "Central-difference check of a block's backward");
  gradcheck->add_option("--block", block, "Block kind")->required();
  gradcheck->add_option("--shape", shape_text, "Input shape n,c,h,w")->required();
  gradcheck->add_option("--seed", seed, "Seed for weights, input and loss weights")->required();
  gradcheck->add_option("--tol", gc_options.tolerance, "Relative error tolerance")->check(CLI::PositiveNumber);
  gradcheck->add_option("--eps", gc_options.epsilon, "Finite-difference step")->check(CLI::PositiveNumber);
  gradcheck->add_option("--params", block_params, "Block hyperparameters as a JSON object");

  std::string det_path;
  std::string gt_path;
  lwconv::metrics::EvalOptions eval_options;
  auto* eval = app.add_subcommand("eval", "Detection metrics from CSV files");
  eval->add_option("--detections", det_path, "Detections CSV")->required();
  eval->add_option("--ground-truth", gt_path, "Ground-truth CSV")->required();
  eval->add_option("--iou-thr", eval_options.iou_threshold, "IoU threshold")
      ->check(CLI::Range(0.0, 1.0));
  eval->add_option("--conf-thr", eval_options.confidence_threshold, "Operating confidence threshold")
      ->check(CLI::Range(0.0, 1.0));

  lwconv::CostInputs cost_inputs;
  std::string mode = "standard";
  auto* cost = app.add_subcommand("cost", "Closed-form cost of a single same-padded convolution");
  cost->add_option("-k,--kernel", cost_inputs.kernel)->required();
  cost->add_option("-m,--in-channels", cost_inputs.in_channels)->required();
  cost->add_option("-n,--out-channels", cost_inputs.out_channels)->required();
  cost->add_option("--height", cost_inputs.height)->required();
  cost->add_option("--width", cost_inputs.width)->required();
  cost->add_option("--mode", mode)->check(CLI::IsMember({"standard", "separable"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*run) {
      auto graph = lwconv::load_graph(graph_path);
      if (!weights_dir.empty()) lwconv::load_weights(graph, weights_dir);
      const auto input = lwconv::read_tensor(input_path);
      lwconv::write_tensor(output_path, lwconv::run_graph(graph, input));
    } else if (*analyze) {
      const auto report = lwconv::analyze_graph(lwconv::load_graph(graph_path));
      std::cout << (format == "table" ? lwconv::to_table(report) : lwconv::to_json(report) + "\n");
    } else if (*gradcheck) {
      const auto shape = parse_shape(shape_text);
      auto layer = lwconv::make_block(block, shape, block_params, seed);
      const auto report = lwconv::check_module(*layer, shape, seed, gc_options);
      std::cout << lwconv::to_json(report) << "\n";
      return report.passed() ? kOk : kFailure;
    } else if (*eval) {
      const auto dets = lwconv::metrics::read_detections_csv(det_path);
      const auto gts = lwconv::metrics::read_ground_truth_csv(gt_path);
      std::cout << lwconv::metrics::to_json(lwconv::metrics::summarize(dets, gts, eval_options)) << "\n";
    } else if (*cost) {
      const auto m = mode == "separable" ? lwconv::ConvMode::separable : lwconv::ConvMode::standard;
      std::cout << lwconv::to_json(lwconv::conv_cost(cost_inputs, m)) << "\n";
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kOk;
}
