#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "lwconv/error.hpp"
#include "lwconv/metrics.hpp"
#include "metrics_oracle.hpp"

using namespace lwconv;
using namespace lwconv::metrics;

namespace {

Detection det(const char* img, std::int64_t cls, Box b, double conf) { return {img, cls, b, conf}; }
GroundTruth gt(const char* img, std::int64_t cls, Box b) { return {img, cls, b}; }

std::vector<bool> flags_of(const MatchResult& m) {
  std::vector<bool> f;
  for (const auto& r : m.ranked) f.push_back(r.true_positive);
  return f;
}

}  // namespace

TEST_CASE("iou") {
  const Box a{0, 0, 2, 2};
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(a, Box{5, 5, 6, 6}) == 0.0);
  CHECK(iou(a, Box{2, 0, 4, 2}) == 0.0);  // shared edge only
  CHECK(iou(a, Box{1, 1, 3, 3}) == doctest::Approx(1.0 / 7.0).epsilon(1e-15));
  CHECK(iou(Box{1, 1, 3, 3}, a) == iou(a, Box{1, 1, 3, 3}));
  CHECK_THROWS_AS(iou(a, Box{1, 1, 1, 3}), ValueError);
  CHECK_THROWS_AS(iou(Box{2, 0, 0, 2}, a), ValueError);
}

TEST_CASE("match_detections: single match and the one-to-one rule") {
  const std::vector<GroundTruth> g = {gt("a", 0, {0, 0, 10, 10})};
  SUBCASE("single detection") {
    const std::vector<Detection> d = {det("a", 0, {1, 1, 10, 10}, 0.9)};
    const auto m = match_detections(d, g, 0, 0.5);
    REQUIRE(m.ranked.size() == 1);
    CHECK(m.ranked[0].true_positive);
    CHECK(m.false_negatives == 0);
    CHECK(precision(1, 0) == 1.0);
    CHECK(recall(1, m.false_negatives) == 1.0);
  }
  SUBCASE("second detection on the same object is a false positive") {
    const std::vector<Detection> d = {det("a", 0, {0, 0, 10, 10}, 0.6), det("a", 0, {1, 1, 10, 10}, 0.9)};
    const auto m = match_detections(d, g, 0, 0.5);
    CHECK(flags_of(m) == std::vector<bool>{true, false});
    CHECK(m.ranked[0].source_index == 1);
    CHECK(m.ranked[0].matched_gt == 0);
  }
  SUBCASE("other image and other class never match") {
    const std::vector<Detection> d = {det("b", 0, {0, 0, 10, 10}, 0.9), det("a", 1, {0, 0, 10, 10}, 0.9)};
    const auto m = match_detections(d, g, 0, 0.5);
    CHECK(flags_of(m) == std::vector<bool>{false});
    CHECK(m.false_negatives == 1);
  }
  SUBCASE("confidence ties keep input order") {
    const std::vector<Detection> d = {det("a", 0, {0, 0, 9, 9}, 0.5), det("a", 0, {0, 0, 10, 10}, 0.5)};
    const auto m = match_detections(d, g, 0, 0.5);
    CHECK(m.ranked[0].source_index == 0);
    CHECK(flags_of(m) == std::vector<bool>{true, false});
  }
  CHECK_THROWS_AS(match_detections({}, g, 0, 0.0), ValueError);
  CHECK_THROWS_AS(match_detections({}, g, 0, 1.0), ValueError);
}

TEST_CASE("match_detections agrees with a brute-force greedy matcher") {
  std::mt19937_64 rng(20240611);
  for (int t = 0; t < 200; ++t) {
    const auto inst = oracle::random_instance(rng);
    for (double thr : {0.3, 0.5, 0.7}) {
      const auto m = match_detections(inst.dets, inst.gts, 0, thr);
      CHECK(flags_of(m) == oracle::greedy_flags(inst.dets, inst.gts, 0, thr));
    }
  }
}

TEST_CASE("average_precision examples") {
  CHECK(average_precision(std::vector<bool>{true, false, true}, 2).ap == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
  CHECK(average_precision(std::vector<bool>{true, true, true}, 3).ap == 1.0);
  CHECK(average_precision(std::vector<bool>{false, false}, 2).ap == 0.0);
  CHECK(average_precision(std::vector<bool>{}, 2).ap == 0.0);
  const auto none = average_precision(std::vector<bool>{false}, 0);
  CHECK_FALSE(none.defined);
  CHECK(none.ap == 0.0);
  // recall only reaches 1/2, so AP tops out there
  CHECK(average_precision(std::vector<bool>{true}, 2).ap == 0.5);
}

TEST_CASE("average_precision: curve properties") {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 100; ++t) {
    std::vector<bool> flags(static_cast<std::size_t>(rng() % 8));
    for (auto&& f : flags) f = rng() % 2;
    const std::size_t total = static_cast<std::size_t>(std::count(flags.begin(), flags.end(), true)) + rng() % 3;
    if (total == 0) continue;
    const auto r = average_precision(flags, total);
    double prev_recall = 0.0;
    for (const auto& p : r.curve) {
      CHECK(p.precision >= 0.0);
      CHECK(p.precision <= 1.0);
      CHECK(p.recall <= 1.0);
      CHECK(p.recall >= prev_recall);
      prev_recall = p.recall;
    }
    CHECK(r.ap >= 0.0);
    CHECK(r.ap <= 1.0);
    auto longer = flags;
    longer.push_back(false);
    CHECK(average_precision(longer, total).ap <= r.ap);
  }
}

TEST_CASE("average_precision matches the brute-force oracle on 50 random instances") {
  std::mt19937_64 rng(99);
  for (int t = 0; t < 50; ++t) {
    const auto inst = oracle::random_instance(rng);
    const auto m = match_detections(inst.dets, inst.gts, 0, 0.5);
    const double expected = oracle::ap_by_tp(oracle::greedy_flags(inst.dets, inst.gts, 0, 0.5), inst.gts.size());
    CHECK(std::abs(average_precision(m.ranked, m.total_gt).ap - expected) <= 1e-9);
  }
}

TEST_CASE("f1_score") {
  CHECK(f1_score(0.5, 0.5) == 0.5);
  CHECK(f1_score(0.0, 0.0) == 0.0);
  // 2 * 0.770 * 0.724 / 1.494 = 0.746292..., which rounds to 0.7463
  CHECK(std::abs(f1_score(0.770, 0.724) - 1.11496 / 1.494) < 1e-15);
  CHECK(std::abs(f1_score(0.770, 0.724) - 0.74) <= 0.01);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double p = u(rng), r = u(rng);
    const double f = f1_score(p, r);
    CHECK(f <= 2 * p + 1e-15);
    CHECK(f <= 2 * r + 1e-15);
    CHECK(f <= 1.0);
    CHECK(f1_score(p, p) == doctest::Approx(p).epsilon(1e-15));
  }
}

TEST_CASE("summarize: mAP is the mean over classes with ground truth") {
  const std::vector<GroundTruth> g = {gt("a", 0, {0, 0, 4, 4}), gt("a", 1, {0, 0, 4, 4}), gt("b", 1, {0, 0, 4, 4})};
  // class 0: AP 1. class 1: one hit of two, AP 0.5. class 5 has no ground truth.
  const std::vector<Detection> d = {det("a", 0, {0, 0, 4, 4}, 0.9), det("a", 1, {0, 0, 4, 4}, 0.8),
                                    det("a", 5, {0, 0, 4, 4}, 0.7)};
  const auto rep = summarize(d, g);
  CHECK(rep.num_classes == 2);
  CHECK(rep.map == 0.75);
  REQUIRE(rep.classes.size() == 3);
  CHECK_FALSE(rep.classes[2].ap_defined);
  double mean = 0.0;
  for (const auto& c : rep.classes)
    if (c.ap_defined) mean += c.ap;
  CHECK(std::abs(rep.map - mean / 2.0) <= 1e-12);
  CHECK(rep.tp == 2);
  CHECK(rep.fp == 1);
  CHECK(rep.fn == 1);
  CHECK(rep.precision == doctest::Approx(2.0 / 3.0));
  CHECK(rep.recall == doctest::Approx(2.0 / 3.0));
  CHECK(rep.f1 == doctest::Approx(rep.precision));
}

TEST_CASE("summarize: confidence threshold gates the pooled counts only") {
  const std::vector<GroundTruth> g = {gt("a", 0, {0, 0, 4, 4})};
  const std::vector<Detection> d = {det("a", 0, {0, 0, 4, 4}, 0.1)};
  const auto rep = summarize(d, g);
  CHECK(rep.map == 1.0);
  CHECK(rep.tp == 0);
  CHECK(rep.fn == 1);
  CHECK(rep.f1 == 0.0);
  const auto low = summarize(d, g, EvalOptions{0.5, 0.05});
  CHECK(low.tp == 1);
  CHECK_THROWS_AS(summarize(d, {}), ValueError);
}

TEST_CASE("summarize: report invariants on random data") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 50; ++t) {
    auto inst = oracle::random_instance(rng);
    auto extra = oracle::random_instance(rng);
    for (auto& x : extra.dets) x.class_id = 2;
    for (auto& x : extra.gts) x.class_id = 2;
    inst.dets.insert(inst.dets.end(), extra.dets.begin(), extra.dets.end());
    inst.gts.insert(inst.gts.end(), extra.gts.begin(), extra.gts.end());
    const auto rep = summarize(inst.dets, inst.gts);
    for (double v : {rep.map, rep.precision, rep.recall, rep.f1}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    CHECK(rep.f1 == f1_score(rep.precision, rep.recall));
    CHECK(rep.tp + rep.fn == inst.gts.size());
  }
}

TEST_CASE("CSV readers") {
  std::istringstream ok("image_id,class_id,x1,y1,x2,y2,confidence\r\nimg, 3, 0, 0.5, 2, 4, 0.75\n\n");
  const auto d = read_detections_csv(ok);
  REQUIRE(d.size() == 1);
  CHECK(d[0].image_id == "img");
  CHECK(d[0].class_id == 3);
  CHECK(d[0].box.y1 == 0.5);
  CHECK(d[0].confidence == 0.75);

  auto bad_det = [](const std::string& text) {
    std::istringstream in(text);
    CHECK_THROWS_AS(read_detections_csv(in), ValueError);
  };
  bad_det("");
  bad_det("image,class_id,x1,y1,x2,y2,confidence\n");
  bad_det("image_id,class_id,x1,y1,x2,y2,confidence\na,0,0,0,1,1\n");
  bad_det("image_id,class_id,x1,y1,x2,y2,confidence\na,x,0,0,1,1,0.5\n");
  bad_det("image_id,class_id,x1,y1,x2,y2,confidence\na,0,0,0,1,1,1.5\n");
  bad_det("image_id,class_id,x1,y1,x2,y2,confidence\na,0,2,0,1,1,0.5\n");
  bad_det("image_id,class_id,x1,y1,x2,y2,confidence\na,0,0,0,1,1,0,5\n");

  std::istringstream g("image_id,class_id,x1,y1,x2,y2\na,1,0,0,1,1\n");
  CHECK(read_ground_truth_csv(g).size() == 1);
  std::istringstream bad_g("image_id,class_id,x1,y1,x2,y2\na,1,0,0,1\n");
  try {
    read_ground_truth_csv(bad_g);
    FAIL("short row accepted");
  } catch (const ValueError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("fixture evaluation reproduces the stored report") {
  const std::string dir = LWCONV_FIXTURE_DIR;
  const auto rep = summarize(read_detections_csv(dir + "/det.csv"), read_ground_truth_csv(dir + "/gt.csv"));
  std::ifstream in(dir + "/expected_report.json");
  const auto expected = nlohmann::json::parse(in);
  std::string where;
  CHECK_MESSAGE(oracle::json_close(nlohmann::json::parse(to_json(rep)), expected, 1e-12, &where), where);
}
