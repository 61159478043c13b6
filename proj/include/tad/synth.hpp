#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tad/detect.hpp"
#include "tad/eval.hpp"
#include "tad/image.hpp"
#include "tad/stabilization.hpp"

namespace tad {

struct LaneSpec {
  std::vector<Point2> path;  // polyline followed from first to last point
  double speed = 4.0;        // px per frame
  double spawn_rate = 0.2;   // mean vehicles per second (beyond the minimum headway)
};

enum class EventType { stall, crash };

struct EventSpec {
  int vehicle_id = 0;
  EventType type = EventType::stall;
  double event_time = 0.0;  // stall: arrival at the location; crash: contact time
  Point2 location;          // final centre of the (leading) vehicle
  int lane = -1;            // lane the vehicle arrives on; -1 picks the nearest
};

struct SceneSpec {
  std::string video_id = "synth";
  int width = 480;
  int height = 270;
  double fps = 30.0;
  double duration = 120.0;
  std::vector<LaneSpec> lanes;
  std::vector<EventSpec> events;
  double jitter = 0.0;  // uniform per-frame rigid offset amplitude (px)
  double noise = 1.5;   // Gaussian sigma
  int vehicle_length = 32;
  int vehicle_width = 16;
  double min_headway = 1.5;    // seconds between spawns in one lane
  double settle_delay = 20.0;  // crash: seconds from contact to rest
  double veer_distance = 60.0; // px over which an event vehicle leaves its lane
  bool debris = true;          // crash leaves debris next to the wreck
};

/// Throws InvalidInput naming the problem.
void validate(const SceneSpec& spec);

struct SynthOutput {
  FrameSequence frames;
  std::vector<GroundTruthEvent> truth;
  DetectionStream oracle;
  std::vector<Point2> jitter;  // offset applied to each frame
};

SynthOutput generate(const SceneSpec& spec, std::uint64_t seed);

/// Four horizontal lanes (two per direction) between grass verges, with speeds
/// and spawn rates drawn from the seed.
SceneSpec default_scene(std::uint64_t seed);

SceneSpec read_scene_spec(const std::filesystem::path& path);
void write_scene_spec(const std::filesystem::path& path, const SceneSpec& spec);

/// Writes frames.raw/frames.json, truth.txt and detections.tsv into dir.
void write_synth_output(const std::filesystem::path& dir, const SynthOutput& out, const std::string& video_id);

}  // namespace tad
