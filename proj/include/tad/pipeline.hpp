#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tad/artifacts.hpp"
#include "tad/config.hpp"
#include "tad/detect.hpp"
#include "tad/eval.hpp"
#include "tad/postproc.hpp"
#include "tad/tube.hpp"

namespace tad {

/// A stage could not run; carries the stage name and a remediation hint.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what, std::string hint)
      : std::runtime_error("stage " + stage + ": " + what + (hint.empty() ? "" : " (" + hint + ")")),
        stage_(std::move(stage)),
        hint_(std::move(hint)) {}
  const std::string& stage() const { return stage_; }
  const std::string& hint() const { return hint_; }

 private:
  std::string stage_, hint_;
};

/// Detections of static objects: each background sample (after the first) against the first.
DetectionStream background_detections(const BackgroundSequence& forward, int diff_threshold, int min_area,
                                      const std::string& video_id);

/// Frame-level boxes taken from the foreground labels, for videos without a detector file.
DetectionStream foreground_detections(const ForegroundHistory& fg, int min_area, const std::string& video_id);

RoadMask build_road_mask(const DetectionStream& frame_detections, std::int64_t total_frames, int width, int height,
                         const PipelineConfig& cfg);

/// (frame_index, timestamp) of each background sample in processing order.
using SampleTimes = std::vector<std::pair<std::int64_t, double>>;
SampleTimes sample_times(const BackgroundSequence& seq);

std::vector<TubeSeed> track_seeds(const SampleTimes& samples, const DetectionStream& bg_detections, const RoadMask& mask,
                                  const PipelineConfig& cfg);

struct TubeStage {
  std::vector<AnomalyEvent> events;  // after inter-tube fusion
  std::vector<Tube> tubes;           // one per seed, before fusion
  std::vector<TubeVerdict> verdicts;
};

TubeStage build_events(const std::vector<TubeSeed>& seeds, const DetectionStream& frame_detections,
                       const FrameSequence& frames, const PipelineConfig& cfg, const std::string& video_id);

/// Collision check (an earlier crash time overrides the start) then boundary refinement.
void postprocess(std::vector<AnomalyEvent>& events, double fps, const ForegroundHistory& fg,
                 const BackgroundSequence& forward, const BackgroundSequence& backward, const PipelineConfig& cfg);

struct VideoResult {
  std::string video_id;
  StabilizationResult stabilization;
  std::size_t seeds = 0;
  std::vector<AnomalyEvent> events;
};

/// Runs every enabled stage on one video. `frame_detections` may be null. When `out_dir` is
/// non-empty each stage's output is written there.
VideoResult process_video(FrameSequence frames, const DetectionStream* frame_detections, const PipelineConfig& cfg,
                          const std::string& video_id, const ArtifactCache& cache,
                          const std::filesystem::path& out_dir = {});

struct PipelineResult {
  std::vector<VideoResult> videos;
  std::vector<PredictionEvent> submission;
  std::optional<EvalReport> report;
};

std::vector<PredictionEvent> to_submission(const std::vector<AnomalyEvent>& events);

/// Reads every configured video, processes them on `cfg.workers` threads, and writes
/// submission.txt (and report.txt with ground truth) under cfg.output_dir.
PipelineResult run_pipeline(const PipelineConfig& cfg);

}  // namespace tad
