#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "tad/roadmask.hpp"

using namespace tad;

namespace {

void add_box(DetectionStream& s, std::int64_t f, BoundingBox b) { s.add({"v", f, b, 0.9, "t"}); }

TrajectoryTrack straight(int id, double x0, double y0, double dx, double dy, int n, double w = 20, double h = 10) {
  TrajectoryTrack t;
  t.track_id = id;
  for (int i = 0; i < n; ++i) t.samples.emplace_back(i, BoundingBox{x0 + dx * i, y0 + dy * i, x0 + dx * i + w, y0 + dy * i + h});
  return t;
}

bool superset(const BinaryMask& big, const BinaryMask& small) {
  for (std::size_t i = 0; i < small.data.size(); ++i)
    if (small.data[i] && !big.data[i]) return false;
  return true;
}

}  // namespace

TEST_CASE("one moving box makes one track") {
  DetectionStream s;
  for (int f = 0; f < 30; ++f) add_box(s, f, {10.0 + 2 * f, 40, 30.0 + 2 * f, 50});
  auto tracks = track_vehicles(s);
  REQUIRE(tracks.size() == 1);
  CHECK(tracks[0].samples.size() == 30);
  CHECK(tracks[0].displacement() == doctest::Approx(58));
  CHECK(tracks[0].direction_angle() == doctest::Approx(0));
}

TEST_CASE("parallel lanes keep their identities") {
  DetectionStream s;
  for (int f = 0; f < 40; ++f) {
    add_box(s, f, {5.0 + 3 * f, 20, 25.0 + 3 * f, 30});
    add_box(s, f, {200.0 - 3 * f, 40, 220.0 - 3 * f, 50});
  }
  auto tracks = track_vehicles(s);
  REQUIRE(tracks.size() == 2);
  for (auto& t : tracks) {
    CHECK(t.samples.size() == 40);
    double y = t.samples.front().second.y_min;
    for (auto& [f, b] : t.samples) CHECK(b.y_min == y);
  }
}

TEST_CASE("a short detection gap is bridged") {
  DetectionStream s;
  for (int f = 0; f < 40; ++f)
    if (f < 15 || f >= 20) add_box(s, f, {10.0 + 2 * f, 40, 30.0 + 2 * f, 50});
  auto tracks = track_vehicles(s);
  REQUIRE(tracks.size() == 1);
  CHECK(tracks[0].samples.size() == 35);
}

TEST_CASE("a detection joins at most one track per frame") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 100);
  DetectionStream s;
  for (int f = 0; f < 60; ++f)
    for (int k = 0; k < 6; ++k) {
      double x = u(rng), y = u(rng);
      add_box(s, f, {x, y, x + 25, y + 25});
    }
  auto tracks = track_vehicles(s, {0.3, 10, 1});
  std::set<std::pair<std::int64_t, std::tuple<double, double, double, double>>> seen;
  std::size_t total = 0;
  for (auto& t : tracks)
    for (auto& [f, b] : t.samples) {
      CHECK(seen.insert({f, {b.x_min, b.y_min, b.x_max, b.y_max}}).second);
      ++total;
    }
  CHECK(total == s.size());
}

TEST_CASE("motion mask frequency gate") {
  CHECK(motion_mask(DetectionStream{}, 100, 50, 40).empty_mask());

  DetectionStream fixed;
  for (int f = 0; f < 500; ++f) add_box(fixed, f, {10, 10, 30, 20});
  RoadMask m = motion_mask(fixed, 500, 50, 40);
  BinaryMask p(50, 40);
  p.paint({10, 10, 30, 20});
  CHECK(m == p);

  DetectionStream once;
  add_box(once, 5, {10, 10, 30, 20});
  CHECK(motion_mask(once, 10000, 50, 40).empty_mask());
  CHECK_FALSE(motion_mask(once, 100, 50, 40).empty_mask());
}

TEST_CASE("trajectory mask keeps the dominant direction") {
  std::vector<TrajectoryTrack> all_h;
  for (int i = 0; i < 5; ++i) all_h.push_back(straight(i, 0, 10.0 + 15 * i, 6, 0.1 * i, 20));
  RoadMask m = trajectory_mask(all_h, 200, 120);
  BinaryMask expect(200, 120);
  for (auto& t : all_h)
    for (auto& [f, b] : t.samples) expect.paint(b);
  CHECK(m == expect);

  std::vector<TrajectoryTrack> mixed;
  for (int i = 0; i < 10; ++i) mixed.push_back(straight(i, 0, 5.0 + 8 * i, 6, 0, 20));
  mixed.push_back(straight(10, 150, 0, 0, 5, 20, 10, 20));  // side road
  double centre = -1;
  auto keep = primary_tracks(mixed, {}, &centre);
  CHECK(centre == doctest::Approx(0));
  for (int i = 0; i < 10; ++i) CHECK(keep[i]);
  CHECK_FALSE(keep[10]);
  RoadMask mm = trajectory_mask(mixed, 200, 120);
  CHECK_FALSE(mm.at(155, 100));

  std::vector<TrajectoryTrack> shorty{straight(0, 0, 0, 30, 0, 3)};
  CHECK(trajectory_mask(shorty, 200, 120).empty_mask());
  std::vector<TrajectoryTrack> slow{straight(0, 0, 0, 1, 0, 20)};  // 19 px, below 50
  CHECK(trajectory_mask(slow, 200, 120).empty_mask());
}

TEST_CASE("trajectory mask pixels all come from qualifying boxes") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> a(-1.5, 1.5), p(0, 150);
  for (int it = 0; it < 20; ++it) {
    std::vector<TrajectoryTrack> tracks;
    for (int i = 0; i < 12; ++i) {
      double ang = a(rng);
      tracks.push_back(straight(i, p(rng), p(rng) * 0.5, 5 * std::cos(ang), 5 * std::sin(ang), 3 + int(p(rng)) % 20));
    }
    RoadMask m = trajectory_mask(tracks, 300, 200);
    auto keep = primary_tracks(tracks, {});
    BinaryMask allowed(300, 200);
    for (std::size_t i = 0; i < tracks.size(); ++i) {
      if (!keep[i]) continue;
      CHECK(tracks[i].samples.size() >= 5);
      CHECK(tracks[i].displacement() >= 50);
      for (auto& [f, b] : tracks[i].samples) allowed.paint(b);
    }
    CHECK(m == allowed);
  }
}

TEST_CASE("fusion is a closed union") {
  BinaryMask empty(60, 40), a(60, 40), b(60, 40);
  a.paint({0, 0, 20, 15});
  a.paint({22, 0, 40, 15});
  b.paint({45, 20, 60, 40});
  CHECK(fuse_masks(a, empty) == morph_close(a, 7));
  RoadMask f = fuse_masks(a, b);
  CHECK(superset(f, a));
  CHECK(superset(f, b));
  CHECK(f.at(21, 5));  // the gap is closed
  CHECK(fuse_masks(a, a) == morph_close(a, 7));
  CHECK_THROWS_AS(fuse_masks(a, BinaryMask(10, 10)), InvalidInput);
}

TEST_CASE("fusion never loses input pixels, including at the border") {
  std::mt19937_64 rng(10);
  std::uniform_int_distribution<int> x(0, 79), y(0, 59), s(1, 30);
  for (int it = 0; it < 50; ++it) {
    BinaryMask m(80, 60), t(80, 60);
    for (int k = 0; k < 5; ++k) {
      int x0 = x(rng), y0 = y(rng);
      m.paint({double(x0), double(y0), double(x0 + s(rng)), double(y0 + s(rng))});
      x0 = x(rng), y0 = y(rng);
      t.paint({double(x0), double(y0), double(x0 + s(rng)), double(y0 + s(rng))});
    }
    RoadMask f = fuse_masks(m, t);
    CHECK(superset(f, m));
    CHECK(superset(f, t));
  }
}

TEST_CASE("two-means splits two groups") {
  auto tm = two_means({0.1, 0.0, 0.05, 1.5, 1.45});
  CHECK(tm.sizes[0] == 3);
  CHECK(tm.sizes[1] == 2);
  CHECK(tm.centres[0] == doctest::Approx(0.05));
  auto one = two_means({0.3, 0.3});
  CHECK(one.sizes[0] == 2);
}
