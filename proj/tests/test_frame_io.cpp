#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "oracles/oracles.hpp"
#include "tad/frame_io.hpp"

using namespace tad;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("tad_test_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("pgm and png round-trip") {
  auto dir = scratch("img");
  std::mt19937_64 rng(1);
  GrayFrame f = oracle::random_frame(rng, 37, 21);
  write_image(dir / "a.pgm", f);
  write_image(dir / "a.png", f);
  CHECK(read_image(dir / "a.pgm").data == f.data);
  GrayFrame p = read_png(dir / "a.png");
  CHECK(p.width == 37);
  CHECK(p.data == f.data);
  CHECK_THROWS_AS(read_image(dir / "missing.png"), ParseError);
  std::ofstream(dir / "junk.pgm") << "P5 nonsense";
  CHECK_THROWS_AS(read_pgm(dir / "junk.pgm"), ParseError);
}

TEST_CASE("masks round-trip through png and pgm") {
  auto dir = scratch("mask");
  BinaryMask m(19, 7);
  m.paint({2, 1, 9, 5});
  m.set(18, 6, true);
  write_mask(dir / "m.png", m);
  write_mask(dir / "m.pgm", m);
  CHECK(read_mask(dir / "m.png") == m);
  CHECK(read_mask(dir / "m.pgm") == m);
}

TEST_CASE("raw sequences keep size, timing and content") {
  auto dir = scratch("raw");
  std::mt19937_64 rng(2);
  FrameSequence s;
  s.fps = 25;
  for (int i = 0; i < 5; ++i) s.frames.push_back(oracle::random_frame(rng, 12, 9));
  write_raw(dir / "clip.raw", s);
  FrameSequence r = read_frames(dir / "clip.json");
  REQUIRE(r.size() == 5);
  CHECK(r.fps == 25);
  CHECK(r.frames[3].data == s.frames[3].data);
  CHECK(r.frames[3].frame_index == 3);
  CHECK(r.frames[3].timestamp == doctest::Approx(3.0 / 25));
  // a truncated raw file is rejected
  fs::resize_file(dir / "clip.raw", 12 * 9 * 5 - 3);
  CHECK_THROWS_AS(read_raw(dir / "clip.raw"), ParseError);
}

TEST_CASE("frame directories are ordered by the number in the name") {
  auto dir = scratch("dir");
  for (int i : {10, 2, 1}) {
    GrayFrame f(4, 4, std::uint8_t(i));
    write_image(dir / ("img" + std::to_string(i) + ".png"), f);
  }
  FrameSequence s = read_frame_dir(dir, 10);
  REQUIRE(s.size() == 3);
  CHECK(s.frames[0].at(0, 0) == 1);
  CHECK(s.frames[1].at(0, 0) == 2);
  CHECK(s.frames[2].at(0, 0) == 10);
  CHECK(s.frames[2].timestamp == doctest::Approx(0.2));

  auto out = scratch("dir_out");
  write_frame_dir(out, s, "pgm");
  CHECK(read_frames(out, 10).frames[2].data == s.frames[2].data);
}
