#include "lwconv/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <string_view>

#include "json.hpp"
#include "lwconv/error.hpp"

namespace lwconv::metrics {
namespace {

void require_box(const Box& b, std::string_view what) {
  const bool finite = std::isfinite(b.x1) && std::isfinite(b.y1) && std::isfinite(b.x2) &&
                      std::isfinite(b.y2);
  if (!finite || !(b.x1 < b.x2) || !(b.y1 < b.y2)) {
    throw ValueError(std::string(what) + ": box corners must satisfy x1 < x2 and y1 < y2");
  }
}

}  // namespace

double iou(const Box& a, const Box& b) {
  require_box(a, "iou");
  require_box(b, "iou");
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

MatchResult match_detections(std::span<const Detection> dets, std::span<const GroundTruth> gts,
                             std::int64_t class_id, double iou_threshold) {
  if (!(iou_threshold > 0.0 && iou_threshold < 1.0)) {
    throw ValueError("match_detections: IoU threshold must lie in (0, 1)");
  }
  MatchResult r;
  std::vector<std::size_t> gt_index;
  for (std::size_t i = 0; i < gts.size(); ++i) {
    if (gts[i].class_id == class_id) gt_index.push_back(i);
  }
  r.total_gt = gt_index.size();

  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (dets[i].class_id == class_id) r.ranked.push_back({i, dets[i].confidence, false, -1});
  }
  std::stable_sort(r.ranked.begin(), r.ranked.end(),
                   [](const RankedDetection& a, const RankedDetection& b) {
                     return a.confidence > b.confidence;
                   });

  std::vector<bool> taken(gt_index.size(), false);
  for (RankedDetection& rd : r.ranked) {
    const Detection& d = dets[rd.source_index];
    double best = -1.0;
    std::size_t best_slot = 0;
    for (std::size_t k = 0; k < gt_index.size(); ++k) {
      const GroundTruth& g = gts[gt_index[k]];
      if (taken[k] || g.image_id != d.image_id) continue;
      const double v = iou(d.box, g.box);
      if (v > best) {
        best = v;
        best_slot = k;
      }
    }
    if (best >= iou_threshold) {
      taken[best_slot] = true;
      rd.true_positive = true;
      rd.matched_gt = static_cast<std::int64_t>(gt_index[best_slot]);
    }
  }
  r.false_negatives = static_cast<std::size_t>(std::count(taken.begin(), taken.end(), false));
  return r;
}

ApResult average_precision(std::span<const RankedDetection> ranked, std::size_t total_gt) {
  ApResult res;
  res.defined = total_gt > 0;
  std::size_t tp = 0;
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    if (ranked[k].true_positive) ++tp;
    const double p = static_cast<double>(tp) / static_cast<double>(k + 1);
    const double r = res.defined ? static_cast<double>(tp) / static_cast<double>(total_gt) : 0.0;
    res.curve.push_back({ranked[k].confidence, p, r});
  }
  if (!res.defined) return res;

  // right-max envelope, accumulated back to front
  double envelope = 0.0;
  std::vector<double> env(res.curve.size());
  for (std::size_t k = res.curve.size(); k-- > 0;) {
    envelope = std::max(envelope, res.curve[k].precision);
    env[k] = envelope;
  }
  double prev_recall = 0.0;
  for (std::size_t k = 0; k < res.curve.size(); ++k) {
    res.ap += (res.curve[k].recall - prev_recall) * env[k];
    prev_recall = res.curve[k].recall;
  }
  return res;
}

ApResult average_precision(const std::vector<bool>& ranked_tp, std::size_t total_gt) {
  std::vector<RankedDetection> ranked;
  ranked.reserve(ranked_tp.size());
  for (std::size_t i = 0; i < ranked_tp.size(); ++i) {
    ranked.push_back({i, 1.0 - static_cast<double>(i) / static_cast<double>(ranked_tp.size() + 1),
                      ranked_tp[i], -1});
  }
  return average_precision(ranked, total_gt);
}

double precision(std::size_t tp, std::size_t fp) noexcept {
  return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
}

double recall(std::size_t tp, std::size_t fn) noexcept {
  return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
}

double f1_score(double p, double r) noexcept {
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

MetricsReport summarize(std::span<const Detection> dets, std::span<const GroundTruth> gts,
                        const EvalOptions& options) {
  if (gts.empty()) throw ValueError("summarize: ground truth is empty");
  MetricsReport rep;
  rep.options = options;

  std::map<std::int64_t, std::size_t> gt_count;
  for (const auto& g : gts) ++gt_count[g.class_id];
  std::map<std::int64_t, std::size_t> det_count;
  for (const auto& d : dets) ++det_count[d.class_id];
  std::vector<std::int64_t> ids;
  for (const auto& [id, _] : gt_count) ids.push_back(id);
  for (const auto& [id, _] : det_count) {
    if (!gt_count.contains(id)) ids.push_back(id);
  }
  std::sort(ids.begin(), ids.end());

  double ap_sum = 0.0;
  std::size_t total_gt = 0;
  for (std::int64_t id : ids) {
    const MatchResult m = match_detections(dets, gts, id, options.iou_threshold);
    ApResult ap = average_precision(m.ranked, m.total_gt);
    ClassMetrics cm;
    cm.class_id = id;
    cm.num_gt = m.total_gt;
    cm.num_detections = m.ranked.size();
    cm.ap = ap.ap;
    cm.ap_defined = ap.defined;
    for (const auto& rd : m.ranked) {
      if (rd.confidence < options.confidence_threshold) break;
      (rd.true_positive ? cm.tp : cm.fp) += 1;
    }
    cm.fn = cm.num_gt - cm.tp;
    cm.curve = std::move(ap.curve);
    if (cm.ap_defined) {
      ap_sum += cm.ap;
      ++rep.num_classes;
    }
    rep.tp += cm.tp;
    rep.fp += cm.fp;
    total_gt += cm.num_gt;
    rep.classes.push_back(std::move(cm));
  }
  rep.fn = total_gt - rep.tp;
  rep.map = ap_sum / static_cast<double>(rep.num_classes);
  rep.precision = precision(rep.tp, rep.fp);
  rep.recall = recall(rep.tp, rep.fn);
  rep.f1 = f1_score(rep.precision, rep.recall);
  return rep;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

[[noreturn]] void fail(std::size_t line, const std::string& why) {
  throw ValueError("CSV line " + std::to_string(line) + ": " + why);
}

double to_real(std::string_view s, std::size_t line, const char* column) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty() || !std::isfinite(v)) {
    fail(line, std::string("column ") + column + ": '" + std::string(s) + "' is not a number");
  }
  return v;
}

std::int64_t to_int(std::string_view s, std::size_t line) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    fail(line, "class_id '" + std::string(s) + "' is not an integer");
  }
  return v;
}

// Invokes row(fields, line_no) for every non-blank data row after checking
// the header.
template <class Row>
void parse_csv(std::istream& in, std::span<const std::string_view> header, Row row) {
  std::string line;
  std::size_t line_no = 0;
  bool seen_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view text = trim(line);
    if (line_no == 1 && text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
    if (text.empty()) continue;
    const auto fields = split(text);
    if (!seen_header) {
      if (!std::equal(fields.begin(), fields.end(), header.begin(), header.end())) {
        std::string want;
        for (auto h : header) want += (want.empty() ? "" : ",") + std::string(h);
        fail(line_no, "expected header '" + want + "'");
      }
      seen_header = true;
      continue;
    }
    if (fields.size() != header.size()) {
      fail(line_no, "expected " + std::to_string(header.size()) + " fields, got " +
                        std::to_string(fields.size()));
    }
    row(fields, line_no);
  }
  if (!seen_header) throw ValueError("CSV: missing header row");
}

Box parse_box(const std::vector<std::string_view>& f, std::size_t line) {
  Box b{to_real(f[2], line, "x1"), to_real(f[3], line, "y1"), to_real(f[4], line, "x2"),
        to_real(f[5], line, "y2")};
  if (!(b.x1 < b.x2) || !(b.y1 < b.y2)) fail(line, "box corners must satisfy x1 < x2, y1 < y2");
  return b;
}

std::ifstream open(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

}  // namespace

std::vector<Detection> read_detections_csv(std::istream& in) {
  static constexpr std::string_view kHeader[] = {"image_id", "class_id", "x1",        "y1",
                                                 "x2",       "y2",       "confidence"};
  std::vector<Detection> out;
  parse_csv(in, kHeader, [&](const std::vector<std::string_view>& f, std::size_t line) {
    Detection d{std::string(f[0]), to_int(f[1], line), parse_box(f, line),
                to_real(f[6], line, "confidence")};
    if (!(d.confidence >= 0.0 && d.confidence <= 1.0)) fail(line, "confidence outside [0, 1]");
    out.push_back(std::move(d));
  });
  return out;
}

std::vector<GroundTruth> read_ground_truth_csv(std::istream& in) {
  static constexpr std::string_view kHeader[] = {"image_id", "class_id", "x1", "y1", "x2", "y2"};
  std::vector<GroundTruth> out;
  parse_csv(in, kHeader, [&](const std::vector<std::string_view>& f, std::size_t line) {
    out.push_back({std::string(f[0]), to_int(f[1], line), parse_box(f, line)});
  });
  return out;
}

std::vector<Detection> read_detections_csv(const std::filesystem::path& path) {
  auto in = open(path);
  return read_detections_csv(in);
}

std::vector<GroundTruth> read_ground_truth_csv(const std::filesystem::path& path) {
  auto in = open(path);
  return read_ground_truth_csv(in);
}

std::string to_json(const MetricsReport& r) {
  using nlohmann::ordered_json;
  ordered_json classes = ordered_json::array();
  for (const auto& c : r.classes) {
    ordered_json curve = ordered_json::array();
    for (const auto& p : c.curve) {
      curve.push_back({{"confidence", p.confidence}, {"precision", p.precision}, {"recall", p.recall}});
    }
    classes.push_back({{"class_id", c.class_id},
                       {"num_gt", c.num_gt},
                       {"num_detections", c.num_detections},
                       {"ap", c.ap},
                       {"ap_defined", c.ap_defined},
                       {"tp", c.tp},
                       {"fp", c.fp},
                       {"fn", c.fn},
                       {"pr_curve", curve}});
  }
  const ordered_json j = {
      {"iou_threshold", r.options.iou_threshold},
      {"confidence_threshold", r.options.confidence_threshold},
      {"num_classes", r.num_classes},
      {"map", r.map},
      {"precision", r.precision},
      {"recall", r.recall},
      {"f1", r.f1},
      {"tp", r.tp},
      {"fp", r.fp},
      {"fn", r.fn},
      {"classes", classes}};
  return j.dump(2);
}

}  // namespace lwconv::metrics
