#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles/oracles.hpp"
#include "tad/pixel_track.hpp"

using namespace tad;

namespace {

BinaryMask full(int w, int h) {
  BinaryMask m(w, h);
  m.data.assign(m.data.size(), 1);
  return m;
}

PixelState to_state(oracle::State s) {
  return s == oracle::State::normal ? PixelState::normal
         : s == oracle::State::suspicious ? PixelState::suspicious
                                          : PixelState::abnormal;
}

// Scene helpers for backtracking: textured road, textured vehicles, fps 2 so
// one traceback step is one frame.
struct Scene {
  FrameSequence frames;
  DetectionStream dets;
};

Scene road(int w, int h, int n, std::uint64_t seed) {
  Scene s;
  s.frames.fps = 2;
  std::mt19937_64 rng(seed);
  GrayFrame base = oracle::random_frame(rng, w, h, 90, 110);
  for (int i = 0; i < n; ++i) {
    GrayFrame f = base;
    f.frame_index = i;
    f.timestamp = i / 2.0;
    s.frames.frames.push_back(std::move(f));
  }
  return s;
}

void stamp(Scene& s, int i, const GrayFrame& tex, int x0, int y0, bool detect = true) {
  GrayFrame& f = s.frames.frames[i];
  for (int y = 0; y < tex.height; ++y)
    for (int x = 0; x < tex.width; ++x)
      if (x0 + x >= 0 && x0 + x < f.width && y0 + y >= 0 && y0 + y < f.height) f.at(x0 + x, y0 + y) = tex.at(x, y);
  if (detect)
    s.dets.add({"v", i, {double(x0), double(y0), double(x0 + tex.width), double(y0 + tex.height)}, 0.9, "t"});
}

}  // namespace

TEST_CASE("static box: suspicious at 20 s, abnormal at 32 s with a 4 s cadence") {
  PixelStateGrid g(8, 8);
  auto mask = full(8, 8);
  std::vector<ScoredBox> box{{{2, 2, 6, 6}, 0.8, 0}};
  for (int k = 0; k <= 10; ++k) {
    double t = 4.0 * k;
    update_grid(g, box, mask, t);
    PixelState s = g.v_state[g.index(3, 3)];
    if (t < 20) CHECK(s == PixelState::normal);
    else if (t < 32) CHECK(s == PixelState::suspicious);
    else CHECK(s == PixelState::abnormal);
    CHECK(g.v_state[g.index(0, 0)] == PixelState::normal);
    CHECK(g.v_start[g.index(3, 3)] == 0.0);
  }
  CHECK(g.v_end[g.index(3, 3)] == 40.0);
  CHECK(g.v_score[g.index(3, 3)] == doctest::Approx(0.8 * 11));

  auto seeds = extract_candidates(g, 40, {.min_area = 16});
  REQUIRE(seeds.size() == 1);
  CHECK(seeds[0].stop_time == 0.0);
  CHECK(seeds[0].last_seen == 40.0);
  CHECK(seeds[0].peak_score == doctest::Approx(0.8));
  CHECK(seeds[0].region == BoundingBox{2, 2, 6, 6});
  CHECK(extract_candidates(g, 40).empty());  // 16 px is below the default floor
}

TEST_CASE("no detections, or two hits then misses, stays normal") {
  PixelStateGrid g(4, 4);
  auto mask = full(4, 4);
  std::vector<ScoredBox> box{{{0, 0, 4, 4}, 1.0, 0}};
  for (int k = 0; k < 20; ++k) {
    update_grid(g, k < 2 ? box : std::vector<ScoredBox>{}, mask, 4.0 * k);
    for (auto s : g.v_state) CHECK(s == PixelState::normal);
  }
  CHECK(g.v_detected[0] == 0);
  CHECK(g.v_score[0] == 0.0);
  CHECK(g.v_undetected[0] == 18);
}

TEST_CASE("state machine matches the reference simulator on random hit sequences") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 400; ++trial) {
    const double cadence = 1.0 + double(rng() % 8);
    const double p_hit = 0.5 + 0.5 * double(rng() % 100) / 100.0;
    std::bernoulli_distribution hit(p_hit);
    std::vector<bool> hits(60);
    for (auto&& h : hits) h = hit(rng);
    auto expected = oracle::simulate_pixel(hits, cadence);
    PixelStateGrid g(3, 3);
    auto mask = full(3, 3);
    bool was_suspicious = false;
    for (std::size_t k = 0; k < hits.size(); ++k) {
      std::vector<ScoredBox> boxes;
      if (hits[k]) boxes.push_back({{0, 0, 2, 3}, 0.5, 0});
      const std::size_t i = g.index(1, 1);
      const auto det0 = g.v_detected[i], und0 = g.v_undetected[i];
      update_grid(g, boxes, mask, cadence * double(k));
      REQUIRE(g.v_state[i] == to_state(expected[k]));
      CHECK(g.v_state[g.index(2, 1)] == PixelState::normal);
      // exactly one counter grows per update
      if (hits[k]) CHECK((g.v_detected[i] == det0 + 1 && g.v_undetected[i] == 0));
      else CHECK(g.v_undetected[i] == und0 + 1);
      if (g.v_state[i] == PixelState::suspicious) CHECK(cadence * double(k) - g.v_start[i] >= 20);
      if (g.v_state[i] == PixelState::abnormal) CHECK(was_suspicious);
      if (g.v_state[i] == PixelState::normal) was_suspicious = false;
      if (g.v_state[i] == PixelState::suspicious) was_suspicious = true;
      if (g.v_state[i] != PixelState::normal) CHECK(g.v_start[i] <= g.v_end[i]);
    }
  }
}

TEST_CASE("masked-out detections never touch the grid") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 30);
  BinaryMask mask(32, 32);
  mask.paint({0, 0, 16, 32});
  PixelStateGrid a(32, 32), b(32, 32);
  for (int k = 0; k < 30; ++k) {
    std::vector<ScoredBox> boxes, inside;
    for (int j = 0; j < 4; ++j) {
      double x = u(rng), y = u(rng);
      ScoredBox s{{x, y, x + 6, y + 6}, 0.7, j};
      boxes.push_back(s);
      if (mask.at(int(s.box.center_x()), int(s.box.center_y()))) inside.push_back(s);
    }
    update_grid(a, boxes, mask, 2.0 * k);
    update_grid(b, inside, mask, 2.0 * k);
    CHECK(a.v_detected == b.v_detected);
    CHECK(a.v_state == b.v_state);
    CHECK(a.v_score == b.v_score);
  }
  CHECK(filter_by_mask({{{20, 0, 24, 4}, 1, 0}}, mask).empty());
  CHECK(filter_by_mask({{{10, 0, 14, 4}, 1, 0}}, mask).size() == 1);
  CHECK_THROWS_AS(update_grid(a, {}, BinaryMask(3, 3), 0), InvalidInput);
}

TEST_CASE("candidates: one seed per abnormal blob") {
  PixelStateGrid g(40, 20);
  CHECK(extract_candidates(g, 0).empty());
  auto mask = full(40, 20);
  std::vector<ScoredBox> boxes{{{1, 1, 11, 11}, 0.6, 0}, {{25, 5, 35, 15}, 0.9, 1}};
  for (int k = 0; k < 10; ++k) update_grid(g, boxes, mask, 4.0 * k);
  auto seeds = extract_candidates(g, 36);
  REQUIRE(seeds.size() == 2);
  CHECK(seeds[0].region == BoundingBox{1, 1, 11, 11});
  CHECK(seeds[1].peak_score == doctest::Approx(0.9));
  for (auto& s : seeds) CHECK(s.stop_time <= s.last_seen);
}

TEST_CASE("seed tracker merges contained candidates") {
  SeedTracker tr;
  tr.update({{{0, 0, 20, 20}, 10, 30, 0.5}});
  tr.update({{{2, 2, 18, 18}, 6, 40, 0.7}, {{50, 50, 60, 60}, 12, 42, 0.4}});
  REQUIRE(tr.seeds().size() == 2);
  CHECK(tr.seeds()[0].stop_time == 6);
  CHECK(tr.seeds()[0].last_seen == 40);
  CHECK(tr.seeds()[0].peak_score == 0.7);
  CHECK(tr.seeds()[0].region == BoundingBox{0, 0, 20, 20});
}

TEST_CASE("backtracking a vehicle present for its whole history") {
  Scene s = road(120, 50, 160, 1);
  std::mt19937_64 rng(2);
  GrayFrame car = oracle::random_frame(rng, 24, 14);
  for (int i = 0; i < 160; ++i) stamp(s, i, car, 40, 20);
  TubeSeed seed{{40, 20, 64, 34}, 50.0, 79.5, 0.9};
  auto r = backtrack_start(seed, s.dets, s.frames);
  CHECK(r.start == 0.0);
  CHECK(r.had_detections);
  CHECK(r.anchor == seed.region);
}

TEST_CASE("backtracking follows a slow drift to a stop") {
  // arrives at t=10 s and creeps 1 px per frame for 40 s before stopping
  Scene s = road(160, 50, 240, 3);
  std::mt19937_64 rng(4);
  GrayFrame car = oracle::random_frame(rng, 16, 12);
  for (int i = 20; i < 240; ++i) stamp(s, i, car, std::min(i - 20, 80), 20);
  TubeSeed seed{{80, 20, 96, 32}, 50.0, 119.5, 0.9};
  auto r = backtrack_start(seed, s.dets, s.frames);
  CHECK(r.start <= seed.stop_time - 30);
  CHECK(std::abs(r.start - 10.0) <= 0.5);
  CHECK(r.earliest_box.x_min <= 1);
}

TEST_CASE("a different vehicle nearby does not extend the chain") {
  Scene s = road(140, 50, 200, 5);
  std::mt19937_64 rng(6);
  GrayFrame a = oracle::random_frame(rng, 24, 16), b = oracle::random_frame(rng, 24, 16);
  for (int i = 0; i < 200; ++i) {
    stamp(s, i, b, 70, 20);                // parked throughout, IoU with the seed box 0.41
    if (i >= 120) stamp(s, i, a, 56, 20);  // arrives at t=60 s
  }
  TubeSeed seed{{56, 20, 80, 36}, 60.0, 99.5, 0.9};
  auto r = backtrack_start(seed, s.dets, s.frames);
  CHECK(r.start == 60.0);
  CHECK(r.anchor == seed.region);
}

TEST_CASE("backtracking with no detections returns the stop time") {
  Scene s = road(60, 40, 100, 7);
  TubeSeed seed{{10, 10, 30, 30}, 30.0, 45.0, 0.8};
  auto r = backtrack_start(seed, s.dets, s.frames);
  CHECK(r.start == 30.0);
  CHECK_FALSE(r.had_detections);
}

TEST_CASE("backtracking never moves the start later") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 12; ++trial) {
    Scene s = road(100, 40, 120, rng());
    GrayFrame car = oracle::random_frame(rng, 20, 12);
    const int arrive = int(rng() % 100), x = int(rng() % 70);
    for (int i = arrive; i < 120; ++i) stamp(s, i, car, x, 14, rng() % 4 != 0);
    // unrelated clutter
    for (int i = 0; i < 120; i += 3) {
      double cx = double(rng() % 80), cy = double(rng() % 30);
      s.dets.add({"v", i, {cx, cy, cx + 15, cy + 10}, 0.4, "t"});
    }
    double stop = double(rng() % 59);
    TubeSeed seed{{double(x), 14, double(x + 20), 26}, stop, 59.5, 0.9};
    auto r = backtrack_start(seed, s.dets, s.frames);
    CHECK(r.start <= stop);
    CHECK(r.start >= 0.0);
  }
}
