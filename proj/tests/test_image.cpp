#include <doctest.h>

#include <algorithm>

#include "tad/image.hpp"

using namespace tad;

TEST_CASE("frame construction and row access") {
  GrayFrame f(5, 3, 7);
  CHECK(f.size() == 15);
  CHECK(f.at(4, 2) == 7);
  f.at(1, 2) = 9;
  CHECK(f.row(2)[1] == 9);
  CHECK(GrayFrame().empty());
}

TEST_CASE("sequence index_at clamps and floors") {
  FrameSequence s;
  s.fps = 10;
  s.frames.resize(20, GrayFrame(2, 2));
  CHECK(s.index_at(-1.0) == 0);
  CHECK(s.index_at(0.3) == 3);
  CHECK(s.index_at(0.29) == 2);
  CHECK(s.index_at(100.0) == 19);
  CHECK(s.duration() == doctest::Approx(2.0));
  FrameSequence empty;
  CHECK_THROWS_AS(empty.index_at(0), InvalidInput);
}

TEST_CASE("box geometry") {
  BoundingBox a{0, 0, 10, 10}, b{5, 0, 15, 10};
  CHECK(a.area() == 100);
  CHECK(intersection_area(a, b) == 50);
  CHECK(box_union(a, b) == BoundingBox{0, 0, 15, 10});
  CHECK(BoundingBox{3, 3, 2, 5}.area() == 0);
  CHECK_FALSE(BoundingBox{3, 3, 3, 5}.valid());
  CHECK(BoundingBox{-5, -5, 4, 300}.clipped(10, 20) == BoundingBox{0, 0, 4, 20});
  PixelRect r = pixel_rect({1.5, 2.2, 3.1, 4.0}, 10, 10);
  CHECK(r.x0 == 1);
  CHECK(r.y0 == 2);
  CHECK(r.x1 == 4);
  CHECK(r.y1 == 4);
  CHECK(pixel_rect({20, 20, 30, 30}, 10, 10).empty());
}

TEST_CASE("mask painting and morphology") {
  BinaryMask m(20, 20);
  m.paint({5, 5, 8, 8});
  CHECK(m.count() == 9);
  BinaryMask d = dilate(m, 3);
  CHECK(d.count() == 25);
  CHECK(erode(d, 3) == m);
  CHECK(morph_close(m, 3) == m);
  // an isolated pixel vanishes under opening
  BinaryMask p(10, 10);
  p.set(4, 4, true);
  CHECK(morph_open(p, 3).empty_mask());
  // closing fills a one-pixel gap
  BinaryMask g(20, 5);
  g.paint({2, 1, 8, 4});
  g.paint({9, 1, 15, 4});
  BinaryMask c = morph_close(g, 3);
  CHECK(c.at(8, 2));
  for (std::size_t i = 0; i < g.data.size(); ++i)
    if (g.data[i]) CHECK(c.data[i]);
  CHECK_THROWS_AS(mask_or(BinaryMask(2, 2), BinaryMask(3, 2)), InvalidInput);
}

TEST_CASE("connected components are 8-connected and in raster order") {
  BinaryMask m(10, 10);
  m.set(1, 1, true);
  m.set(2, 2, true);  // diagonal neighbour joins
  m.paint({6, 0, 9, 3});
  m.set(0, 9, true);
  std::vector<int> labels;
  auto cs = connected_components(m, &labels);
  REQUIRE(cs.size() == 3);
  CHECK(cs[0].area == 9);  // the box starts on row 0
  CHECK(cs[1].area == 2);
  CHECK(cs[1].box == BoundingBox{1, 1, 3, 3});
  CHECK(cs[2].area == 1);
  CHECK(labels[0] == -1);
  CHECK(labels[9 * 10 + 0] == 2);
}

TEST_CASE("crop and resample") {
  GrayFrame f(8, 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) f.at(x, y) = std::uint8_t(10 * x + y);
  GrayFrame c = crop(f, {2, 3, 5, 6});
  CHECK(c.width == 3);
  CHECK(c.at(0, 0) == f.at(2, 3));
  // identity-scale resample reproduces the crop
  GrayFrame r = crop_resample(f, {2, 3, 5, 6}, 3, 3);
  CHECK(r.data == c.data);
  GrayFrame u = crop_resample(GrayFrame(4, 4, 77), {0, 0, 4, 4}, 64, 64);
  CHECK(u.width == 64);
  CHECK(std::all_of(u.data.begin(), u.data.end(), [](auto v) { return v == 77; }));
  CHECK_THROWS_AS(crop_resample(f, {3, 3, 3, 4}, 4, 4), InvalidInput);
  CHECK(sample_bilinear(f, 2.5, 3.0) == doctest::Approx(28.0));
  CHECK(sample_bilinear(f, -4, 0) == f.at(0, 0));
}

TEST_CASE("luma weights") {
  CHECK(luma(255, 255, 255) == 255);
  CHECK(luma(0, 0, 0) == 0);
  CHECK(luma(255, 0, 0) == 76);
  CHECK(luma(0, 255, 0) == 150);
}
