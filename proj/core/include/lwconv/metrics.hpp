#ifndef LWCONV_METRICS_HPP
#define LWCONV_METRICS_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace lwconv::metrics {

// Axis-aligned box, x1 < x2 and y1 < y2.
struct Box {
  double x1 = 0;
  double y1 = 0;
  double x2 = 0;
  double y2 = 0;

  double area() const noexcept { return (x2 - x1) * (y2 - y1); }
};

struct Detection {
  std::string image_id;
  std::int64_t class_id = 0;
  Box box;
  double confidence = 0;
};

struct GroundTruth {
  std::string image_id;
  std::int64_t class_id = 0;
  Box box;
};

// Intersection over union. Throws ValueError for a zero-area or inverted box.
double iou(const Box& a, const Box& b);

struct RankedDetection {
  std::size_t source_index = 0;  // position in the input list
  double confidence = 0;
  bool true_positive = false;
  std::int64_t matched_gt = -1;  // index into the ground-truth list
};

struct MatchResult {
  std::vector<RankedDetection> ranked;  // descending confidence, ties by input order
  std::size_t total_gt = 0;
  std::size_t false_negatives = 0;  // ground truths left unmatched
};

// Greedy one-to-one matching for one class: each detection, in confidence
// order, claims the unmatched same-image ground truth with the highest IoU
// (first index on ties) if that IoU >= iou_threshold.
MatchResult match_detections(std::span<const Detection> dets, std::span<const GroundTruth> gts,
                             std::int64_t class_id, double iou_threshold);

struct PrPoint {
  double confidence = 0;
  double precision = 0;
  double recall = 0;
};

struct ApResult {
  double ap = 0;
  bool defined = true;  // false when there is no ground truth
  std::vector<PrPoint> curve;
};

// All-point interpolated AP: sum over recall increments of the right-max
// precision envelope. `ranked` must already be in rank order.
ApResult average_precision(std::span<const RankedDetection> ranked, std::size_t total_gt);
ApResult average_precision(const std::vector<bool>& ranked_tp, std::size_t total_gt);

double precision(std::size_t tp, std::size_t fp) noexcept;
double recall(std::size_t tp, std::size_t fn) noexcept;
// 2PR / (P + R); 0 when P + R = 0.
double f1_score(double precision, double recall) noexcept;

struct EvalOptions {
  double iou_threshold = 0.5;
  double confidence_threshold = 0.25;
};

struct ClassMetrics {
  std::int64_t class_id = 0;
  std::size_t num_gt = 0;
  std::size_t num_detections = 0;
  double ap = 0;
  bool ap_defined = true;
  // counts at the operating confidence threshold
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::vector<PrPoint> curve;
};

struct MetricsReport {
  EvalOptions options;
  std::vector<ClassMetrics> classes;  // ascending class_id
  std::size_t num_classes = 0;        // classes with >= 1 ground truth
  double map = 0;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

// Throws ValueError when the ground truth is empty.
MetricsReport summarize(std::span<const Detection> dets, std::span<const GroundTruth> gts,
                        const EvalOptions& options = {});

// CSV with header row. Detections: image_id,class_id,x1,y1,x2,y2,confidence.
// Ground truth: image_id,class_id,x1,y1,x2,y2. Throws ValueError naming the
// offending line.
std::vector<Detection> read_detections_csv(std::istream& in);
std::vector<GroundTruth> read_ground_truth_csv(std::istream& in);
std::vector<Detection> read_detections_csv(const std::filesystem::path& path);
std::vector<GroundTruth> read_ground_truth_csv(const std::filesystem::path& path);

std::string to_json(const MetricsReport& report);

}  // namespace lwconv::metrics

#endif  // LWCONV_METRICS_HPP
