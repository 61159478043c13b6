#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "oracles/oracles.hpp"
#include "tad/detect.hpp"
#include "tad/frame_io.hpp"
#include "tad/metrics.hpp"

using namespace tad;

namespace {

DetectionRecord rec(std::int64_t f, BoundingBox b, double s, const char* src = "a") { return {"v", f, b, s, src}; }

}  // namespace

TEST_CASE("reading detections") {
  std::stringstream empty("");
  CHECK(parse_detections(empty).empty());

  std::stringstream three("v\t7\t0\t0\t5\t5\t0.5\tx\nv\t2\t1\t1\t4\t4\t0.9\tx\n# skipped\nv\t5\t2\t2\t9\t9\t0.1\ty\n");
  auto s = parse_detections(three);
  REQUIRE(s.by_frame.size() == 3);
  std::vector<std::int64_t> order;
  for (auto& [f, r] : s.by_frame) order.push_back(f);
  CHECK(order == std::vector<std::int64_t>{2, 5, 7});

  std::stringstream bad("v\t1\t0\t0\t5\t5\t0.5\tx\nv\t2\t6\t0\t5\t5\t0.5\tx\n");
  try {
    parse_detections(bad);
    FAIL("inverted box accepted");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("x_min < x_max") != std::string::npos);
  }
  std::stringstream short_line("v\t1\t0\t0\t5\n");
  CHECK_THROWS_AS(parse_detections(short_line), ParseError);
  std::stringstream bad_score("v\t1\t0\t0\t5\t5\t1.5\tx\n");
  CHECK_THROWS_AS(parse_detections(bad_score), ParseError);
}

TEST_CASE("detection files round-trip") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 200), sz(1, 40), sc(0, 1);
  DetectionStream s;
  for (int i = 0; i < 200; ++i) {
    double x = u(rng), y = u(rng);
    s.add({"cam_" + std::to_string(i % 3), std::int64_t(rng() % 50), {x, y, x + sz(rng), y + sz(rng)}, sc(rng), "blob"});
  }
  std::stringstream ss;
  write_detections(ss, s);
  CHECK(parse_detections(ss) == s);
}

TEST_CASE("fusing detector streams") {
  DetectionStream a, b;
  a.add(rec(1, {0, 0, 10, 10}, 0.7));
  a.add(rec(1, {0, 0, 10, 10.5}, 0.6));  // near-duplicate suppressed within a
  a.add(rec(2, {20, 20, 30, 30}, 0.5));
  auto self = fuse_detectors(a, DetectionStream{});
  CHECK(self.size() == 2);

  b.add(rec(1, {0, 0, 10, 10}, 0.9, "b"));
  auto f = fuse_detectors(a, b);
  REQUIRE(f.frame(1));
  REQUIRE(f.frame(1)->size() == 1);
  CHECK(f.frame(1)->front().score == 0.9);
  CHECK(f.frame(1)->front().source == "b");
}

TEST_CASE("fused streams equal union plus exhaustive NMS") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> pos(0, 30), sz(5, 20), sc(0, 1);
  for (int it = 0; it < 30; ++it) {
    DetectionStream a, b;
    for (int i = 0; i < 10; ++i) {
      double x = pos(rng), y = pos(rng), w = sz(rng), h = sz(rng);
      // Overlap-prone boxes: every other b box copies an a box with a small shift.
      BoundingBox ab{x, y, x + w, y + h};
      double s1 = sc(rng), s2 = sc(rng);
      a.add(rec(0, ab, s1));
      BoundingBox bb = (i % 2) ? ab.translated(0.3, 0.2) : BoundingBox{y, x, y + h, x + w};
      b.add(rec(0, bb, s2, "b"));
    }
    auto fused = fuse_detectors(a, b, 0.8);
    std::vector<ScoredBox> in_order;
    for (auto& r : a.by_frame[0]) in_order.push_back({r.box, r.score, 0});
    for (auto& r : b.by_frame[0]) in_order.push_back({r.box, r.score, 0});
    auto ref = oracle::nms_subset(in_order, 0.8, [](auto& p, auto& q) { return iou(p, q); });
    REQUIRE(fused.frame(0));
    const auto& got = *fused.frame(0);
    REQUIRE(got.size() == ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(got[i].box == in_order[ref[i]].box);
    for (std::size_t i = 0; i < got.size(); ++i)
      for (std::size_t j = i + 1; j < got.size(); ++j) CHECK(iou(got[i].box, got[j].box) <= 0.8);
  }
}

TEST_CASE("blob detector examples") {
  GrayFrame bg(64, 48, 90), ref(64, 48, 90);
  CHECK(blob_detect(bg, ref).empty());

  GrayFrame sq = bg;
  for (int y = 10; y < 30; ++y)
    for (int x = 30; x < 50; ++x) sq.at(x, y) = 220;
  auto d = blob_detect(sq, ref);
  REQUIRE(d.size() == 1);
  CHECK(std::abs(d[0].box.x_min - 30) <= 1);
  CHECK(std::abs(d[0].box.y_min - 10) <= 1);
  CHECK(std::abs(d[0].box.x_max - 50) <= 1);
  CHECK(std::abs(d[0].box.y_max - 30) <= 1);
  CHECK(d[0].score == 1.0);

  GrayFrame small = bg;
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 5; ++x) small.at(x, y) = 250;
  CHECK(blob_detect(small, ref).empty());
  CHECK_THROWS_AS(blob_detect(GrayFrame(4, 4), GrayFrame(5, 4)), InvalidInput);
}

TEST_CASE("blob components are disjoint and each meets the area floor") {
  std::mt19937_64 rng(8);
  for (int it = 0; it < 20; ++it) {
    GrayFrame ref(80, 60, 100), bg = ref;
    // random speckle plus a few rectangles
    std::uniform_int_distribution<int> px(0, 79), py(0, 59), s(4, 16);
    for (int k = 0; k < 300; ++k) bg.at(px(rng), py(rng)) = 200;
    for (int k = 0; k < 4; ++k) {
      int x = px(rng) % 64, y = py(rng) % 44, w = s(rng), h = s(rng);
      for (int yy = y; yy < std::min(60, y + h); ++yy)
        for (int xx = x; xx < std::min(80, x + w); ++xx) bg.at(xx, yy) = 10;
    }
    BinaryMask m(80, 60);
    for (std::size_t i = 0; i < m.data.size(); ++i) m.data[i] = std::abs(bg.data[i] - ref.data[i]) >= 30;
    std::vector<int> labels;
    auto comps = connected_components(m, &labels);
    auto boxes = blob_detect(bg, ref, 30, 20);
    std::size_t big = std::count_if(comps.begin(), comps.end(), [](auto& c) { return c.area >= 20; });
    CHECK(boxes.size() == big);
    for (const auto& b : boxes) {
      PixelRect r = pixel_rect(b.box, 80, 60);
      std::size_t changed = 0;
      for (int y = r.y0; y < r.y1; ++y)
        for (int x = r.x0; x < r.x1; ++x) changed += m.at(x, y);
      CHECK(changed >= 20);
      CHECK(b.score <= 1.0);
      CHECK(b.score >= 20.0 / 80);
    }
  }
}

TEST_CASE("separated blobs give non-overlapping boxes") {
  GrayFrame ref(100, 40, 50), bg = ref;
  for (int k = 0; k < 4; ++k)
    for (int y = 5; y < 25; ++y)
      for (int x = 5 + 24 * k; x < 20 + 24 * k; ++x) bg.at(x, y) = 200;
  auto boxes = blob_detect(bg, ref);
  REQUIRE(boxes.size() == 4);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = i + 1; j < 4; ++j) CHECK(intersection_area(boxes[i].box, boxes[j].box) == 0);
  CHECK(boxes[0].score == 1.0);  // 300 px against a 256 px saturation point
  CHECK(blob_detect(bg, ref, 30, 100)[0].score == doctest::Approx(300.0 / 400));
}
