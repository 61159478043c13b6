#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "tad/frame_io.hpp"
#include "tad/pipeline.hpp"
#include "tad/synth.hpp"

using namespace tad;
namespace fs = std::filesystem;

namespace {

// Small two-lane scene, 90 s at 10 fps. The background rate and interval are
// scaled so that 10 fps behaves like the 30 fps defaults.
SceneSpec small_scene(const std::string& id, bool stall) {
  SceneSpec s;
  s.video_id = id;
  s.width = 240;
  s.height = 120;
  s.fps = 10;
  s.duration = 90;
  LaneSpec a, b;
  a.path = {{-40, 50}, {280, 50}};
  a.speed = 4;
  a.spawn_rate = 0.3;
  b.path = {{280, 75}, {-40, 75}};
  b.speed = 5;
  b.spawn_rate = 0.25;
  s.lanes = {a, b};
  if (stall) s.events.push_back({1, EventType::stall, 15, {130, 100}});
  return s;
}

PipelineConfig small_config() {
  PipelineConfig c;
  c.mog.alpha = 0.006;
  c.background_interval = 40;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("tad_test_pipeline_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// Writes the scene and returns a config pointing at it.
PipelineConfig on_disk(const fs::path& root, const SceneSpec& s, std::uint64_t seed) {
  SynthOutput out = generate(s, seed);
  write_synth_output(root / s.video_id, out, s.video_id);
  PipelineConfig c = small_config();
  c.videos.push_back({s.video_id, (root / s.video_id / "frames.json").string(),
                      (root / s.video_id / "detections.tsv").string()});
  c.ground_truth = (root / s.video_id / "truth.txt").string();
  c.output_dir = (root / "out").string();
  return c;
}

}  // namespace

TEST_CASE("an event-free scene yields no events") {
  SceneSpec s = small_scene("quiet", false);
  SynthOutput out = generate(s, 11);
  auto r = process_video(out.frames, &out.oracle, small_config(), "quiet", ArtifactCache());
  CHECK(r.events.empty());
}

TEST_CASE("a single stall is reported near its true time") {
  SceneSpec s = small_scene("stall", true);
  SynthOutput out = generate(s, 3);
  auto r = process_video(out.frames, &out.oracle, small_config(), "stall", ArtifactCache());
  REQUIRE(r.events.size() == 1);
  CHECK(std::abs(r.events[0].start - 15) <= 10);
  CHECK(r.events[0].stop_time >= r.events[0].start);
  CHECK_FALSE(r.events[0].crash_time);
  CHECK(r.events[0].confidence > 0);

  // without postprocessing the event set is the same, only times may move
  PipelineConfig c = small_config();
  c.stages.postproc = false;
  auto raw = process_video(out.frames, &out.oracle, c, "stall", ArtifactCache());
  REQUIRE(raw.events.size() == r.events.size());
  CHECK(raw.events[0].region == r.events[0].region);
  CHECK(raw.events[0].start >= r.events[0].start);
}

TEST_CASE("run_pipeline scores, honours the nrmse cap and is deterministic") {
  fs::path root = scratch("run");
  PipelineConfig c = on_disk(root, small_scene("stall", true), 3);
  c.nrmse_cap = 100;
  auto r = run_pipeline(c);
  REQUIRE(r.report);
  CHECK(r.report->nrmse_cap == 100);
  CHECK(r.report->tp == 1);
  CHECK(r.report->f1 == 1.0);
  CHECK(r.report->nrmse == doctest::Approx(std::min(r.report->rmse, 100.0) / 100.0));
  CHECK(fs::exists(root / "out" / "report.txt"));
  CHECK(slurp(root / "out" / "report.txt").find("100") != std::string::npos);
  const std::string sub = slurp(root / "out" / "submission.txt");
  const std::string events = slurp(root / "out" / "stall" / "events.tsv");
  CHECK(read_predictions(root / "out" / "submission.txt").size() == 1);
  for (const char* f : {"roadmask.png", "seeds.tsv", "tubes.txt", "background_detections.tsv", "transforms.log"})
    CHECK(fs::exists(root / "out" / "stall" / f));

  auto again = run_pipeline(c);
  CHECK(slurp(root / "out" / "submission.txt") == sub);
  CHECK(slurp(root / "out" / "stall" / "events.tsv") == events);
}

TEST_CASE("the stage cache reproduces an uncached run") {
  fs::path root = scratch("cache");
  PipelineConfig c = on_disk(root, small_scene("stall", true), 3);
  c.cache_dir = (root / "cache").string();
  auto first = run_pipeline(c);
  CHECK_FALSE(fs::is_empty(root / "cache" / "stall"));
  const std::string sub = slurp(root / "out" / "submission.txt");
  auto second = run_pipeline(c);
  CHECK(slurp(root / "out" / "submission.txt") == sub);
  c.cache_dir.clear();
  run_pipeline(c);
  CHECK(slurp(root / "out" / "submission.txt") == sub);
}

TEST_CASE("missing inputs name the stage and a hint") {
  fs::path root = scratch("missing");
  PipelineConfig c = small_config();
  c.output_dir = (root / "out").string();
  try {
    run_pipeline(c);
    FAIL("ran without videos");
  } catch (const StageError& e) {
    CHECK(e.stage() == "ingest");
    CHECK_FALSE(e.hint().empty());
  }
  c.videos.push_back({"nope", (root / "absent.json").string(), ""});
  try {
    run_pipeline(c);
    FAIL("ran without frames");
  } catch (const StageError& e) {
    CHECK(e.stage() == "ingest");
    CHECK(std::string(e.what()).find("absent.json") != std::string::npos);
  }

  PipelineConfig d = on_disk(root, small_scene("q", false), 1);
  d.videos[0].detections = (root / "none.tsv").string();
  try {
    run_pipeline(d);
    FAIL("ran without detections");
  } catch (const StageError& e) {
    CHECK(e.stage() == "detect");
  }
  d = on_disk(root, small_scene("q", false), 1);
  d.ground_truth = (root / "none.txt").string();
  try {
    run_pipeline(d);
    FAIL("ran without ground truth");
  } catch (const StageError& e) {
    CHECK(e.stage() == "score");
  }
}

TEST_CASE("foreground blobs stand in for a missing detector") {
  SceneSpec s = small_scene("fg", true);
  SynthOutput out = generate(s, 3);
  auto r = process_video(out.frames, nullptr, small_config(), "fg", ArtifactCache());
  REQUIRE(r.events.size() == 1);
  CHECK(std::abs(r.events[0].start - 15) <= 10);
}

TEST_CASE("submission order and artifact round-trips") {
  std::vector<AnomalyEvent> evs(3);
  evs[0].video_id = "b";
  evs[0].start = 5;
  evs[1].video_id = "a";
  evs[1].start = 9;
  evs[2].video_id = "a";
  evs[2].start = 2;
  evs[2].crash_time = 2;
  evs[2].region = {1, 2, 30, 40};
  evs[2].confidence = 0.75;
  auto sub = to_submission(evs);
  CHECK(sub[0].video_id == "a");
  CHECK(sub[0].pred_time == 2);
  CHECK(sub[2].video_id == "b");

  fs::path dir = scratch("artifacts");
  {
    std::ofstream o(dir / "events.tsv");
    write_events(o, evs);
  }
  auto back = read_events(dir / "events.tsv");
  REQUIRE(back.size() == 3);
  CHECK(back[2].crash_time == 2.0);
  CHECK_FALSE(back[0].crash_time);
  CHECK(back[2].region == evs[2].region);
  CHECK(back[2].confidence == 0.75);

  std::vector<TubeSeed> seeds{{{1, 2, 3, 4}, 10, 20, 0.5}, {{5, 6, 70, 80}, 1.25, 2.5, 1}};
  {
    std::ofstream o(dir / "seeds.tsv");
    write_seeds(o, seeds);
  }
  auto sb = read_seeds(dir / "seeds.tsv");
  REQUIRE(sb.size() == 2);
  CHECK(sb[1].region == seeds[1].region);
  CHECK(sb[1].stop_time == 1.25);

  BackgroundSequence bg;
  bg.sample_interval = 7;
  for (int i = 0; i < 3; ++i) {
    GrayFrame f(9, 5, std::uint8_t(40 * i));
    f.frame_index = 6 + 7 * i;
    f.timestamp = f.frame_index / 30.0;
    bg.frames.push_back(f);
  }
  write_background_dir(dir / "bg", bg);
  auto bb = read_background_dir(dir / "bg");
  REQUIRE(bb.frames.size() == 3);
  CHECK(bb.frames[2].data == bg.frames[2].data);
  CHECK(bb.frames[1].frame_index == 13);

  ArtifactCache cache(dir / "cache");
  std::vector<RigidTransform> tr{{1, 2, 0.01}, {-0.5, 0.25, 0}};
  cache.store_transforms(42, tr);
  auto lt = cache.load_transforms(42);
  REQUIRE(lt);
  CHECK(lt->at(0).dx == 1);
  CHECK(lt->at(1).dangle == 0);
  CHECK_FALSE(cache.load_transforms(43));
  CHECK_FALSE(ArtifactCache().enabled());
  CHECK(fnv1a("") == kFnvOffset);
  CHECK(hex(255).size() == 16);
}
