#include "tad/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include "tad/frame_io.hpp"
#include "tad/metrics.hpp"

namespace tad {

namespace {

std::ofstream open_out(const std::filesystem::path& p) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

std::uint64_t key_of(const std::string& text, std::uint64_t seed) { return fnv1a(text, seed); }

}  // namespace

DetectionStream background_detections(const BackgroundSequence& forward, int diff_threshold, int min_area,
                                      const std::string& video_id) {
  DetectionStream out;
  if (forward.frames.size() < 2) return out;
  const GrayFrame& ref = forward.frames.front();
  for (std::size_t i = 1; i < forward.frames.size(); ++i) {
    const GrayFrame& bg = forward.frames[i];
    for (const auto& b : blob_detect(bg, ref, diff_threshold, min_area))
      out.add({video_id, bg.frame_index, b.box, b.score, "blob"});
  }
  return out;
}

DetectionStream foreground_detections(const ForegroundHistory& fg, int min_area, const std::string& video_id) {
  DetectionStream out;
  for (std::size_t f = 0; f < fg.size(); ++f)
    for (const auto& b : mask_blobs(morph_open(fg.mask(f), 3), min_area))
      out.add({video_id, static_cast<std::int64_t>(f), b.box, b.score, "foreground"});
  return out;
}

RoadMask build_road_mask(const DetectionStream& dets, std::int64_t total_frames, int width, int height,
                         const PipelineConfig& cfg) {
  RoadMask motion = motion_mask(dets, total_frames, width, height, cfg.motion_freq, cfg.motion_kernel);
  RoadMask traj = trajectory_mask(track_vehicles(dets, cfg.tracker), width, height, cfg.trajectory);
  return fuse_masks(motion, traj, cfg.mask_fuse_kernel);
}

SampleTimes sample_times(const BackgroundSequence& seq) {
  SampleTimes s;
  for (const auto& f : seq.frames) s.emplace_back(f.frame_index, f.timestamp);
  return s;
}

std::vector<TubeSeed> track_seeds(const SampleTimes& samples, const DetectionStream& bg_detections, const RoadMask& mask,
                                  const PipelineConfig& cfg) {
  PixelStateGrid grid(mask.width, mask.height);
  SeedTracker tracker(cfg.seed_merge);
  for (const auto& [fi, t] : samples) {
    std::vector<ScoredBox> boxes;
    if (const auto* recs = bg_detections.frame(fi))
      for (const auto& r : *recs) boxes.push_back({r.box, r.score, 0});
    update_grid(grid, boxes, mask, t, cfg.grid);
    tracker.update(extract_candidates(grid, t, cfg.grid));
  }
  return tracker.seeds();
}

TubeStage build_events(const std::vector<TubeSeed>& seeds, const DetectionStream& frame_detections,
                       const FrameSequence& frames, const PipelineConfig& cfg, const std::string& video_id) {
  TubeStage st;
  std::vector<AnomalyEvent> raw;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const TubeSeed& seed = seeds[i];
    BacktrackResult bt = backtrack_start(seed, frame_detections, frames, cfg.backtrack);
    AnomalyEvent e;
    e.video_id = video_id;
    e.id = static_cast<int>(i);
    e.region = seed.region;
    e.stopped_box = bt.anchor;
    e.stop_time = seed.stop_time;
    e.last_seen = seed.last_seen;
    e.backtrack_start = bt.start;
    e.confidence = std::clamp(seed.peak_score, 0.0, 1.0);
    Tube tube = build_tube(frames, bt.anchor, bt.start - cfg.tube_lookback, seed.last_seen, cfg.tube_step,
                           static_cast<int>(i));
    TubeVerdict v;
    if (!tube.regions.empty()) v = intra_tube_judge(tube, cfg.judge);
    e.tube_accepted = v.accepted;
    e.tube_start = v.accepted ? v.anomaly_start : bt.start;
    e.start = e.tube_start;
    e.end = std::max(e.start, seed.last_seen);
    tube.start = e.start;
    tube.end = e.end;
    st.tubes.push_back(std::move(tube));
    st.verdicts.push_back(std::move(v));
    raw.push_back(e);
  }
  // Tubes that look alike describe the same vehicle: keep one event per group.
  for (const auto& group : fuse_groups(st.tubes, cfg.tube_fuse_psnr)) {
    AnomalyEvent e = raw[group.front()];
    for (std::size_t k : group) {
      const auto& o = raw[k];
      e.start = std::min(e.start, o.start);
      e.end = std::max(e.end, o.end);
      e.confidence = std::max(e.confidence, o.confidence);
      e.region = box_union(e.region, o.region);
    }
    st.events.push_back(e);
  }
  for (std::size_t i = 0; i < st.events.size(); ++i) st.events[i].id = static_cast<int>(i);
  return st;
}

void postprocess(std::vector<AnomalyEvent>& events, double fps, const ForegroundHistory& fg,
                 const BackgroundSequence& forward, const BackgroundSequence& backward, const PipelineConfig& cfg) {
  if (!cfg.stages.postproc) return;
  for (auto& e : events) {
    if (cfg.stages.collision) {
      CollisionResult c = detect_collision(e, fps, fg, forward, cfg.collision);
      if (c.crash_time) {
        e.crash_time = c.crash_time;
        e.start = *c.crash_time;
      }
    }
    if (cfg.stages.refine && !e.crash_time) {
      RefineResult r = refine_boundaries(e, forward, backward, cfg.refine);
      e.start = r.start;
      e.end = r.end;
    }
  }
}

VideoResult process_video(FrameSequence frames, const DetectionStream* given, const PipelineConfig& cfg,
                          const std::string& video_id, const ArtifactCache& cache, const std::filesystem::path& out_dir) {
  VideoResult res;
  res.video_id = video_id;
  if (frames.empty()) throw StageError("ingest", "video '" + video_id + "' has no frames", "check videos[].frames");
  const int w = frames.frames.front().width, h = frames.frames.front().height;
  const bool persist = !out_dir.empty();
  const std::uint64_t frames_key = cache.enabled() ? hash_frames(frames) : 0;

  // stabilize
  std::uint64_t stab_key = key_of("nostab", frames_key);
  if (cfg.stages.stabilize && frames.size() >= 2) {
    const auto& sp = cfg.stabilization;
    const std::string sec = section_json(cfg, "stabilization").dump();
    const std::uint64_t motion_key = key_of(sec, frames_key);
    std::vector<RigidTransform> transforms;
    if (auto cached = cache.load_transforms(motion_key); cached && cached->size() + 1 == frames.size()) {
      transforms = std::move(*cached);
    } else {
      MotionEstimate me = estimate_motion(frames, sp);
      transforms = std::move(me.transforms);
      res.stabilization.degraded_frames = me.degraded_frames;
      cache.store_transforms(motion_key, transforms);
    }
    res.stabilization.verdict = classify_shaky(transforms, sp.shake_accumulated, sp.shake_average);
    if (res.stabilization.verdict.is_shaky || sp.force) {
      frames = smooth_and_correct(frames, transforms, sp.smooth_window, sp.smooth_alpha);
      res.stabilization.applied = true;
    }
    res.stabilization.transforms = std::move(transforms);
    stab_key = key_of(res.stabilization.applied ? "warped" : "raw", motion_key);
    if (persist) {
      auto out = open_out(out_dir / "transforms.log");
      write_transform_log(out, res.stabilization.transforms);
      auto v = open_out(out_dir / "stabilization.txt");
      const auto& sv = res.stabilization.verdict;
      v << "accumulated=" << sv.accumulated << "\naverage=" << sv.average << "\nshaky=" << (sv.is_shaky ? 1 : 0)
        << "\napplied=" << (res.stabilization.applied ? 1 : 0) << '\n';
    }
  }

  // background, both directions
  const std::string bg_sec = section_json(cfg, "background").dump();
  BackgroundSequence fwd, bwd;
  ForegroundHistory fg;
  const std::uint64_t fwd_key = key_of(bg_sec + "forward", stab_key);
  const std::uint64_t bwd_key = key_of(bg_sec + "backward", stab_key);
  if (!cache.load_background("background-forward", fwd_key, fwd, &fg)) {
    fwd = model_background(frames, Direction::forward, cfg.background_interval, cfg.mog, &fg);
    cache.store_background("background-forward", fwd_key, fwd, &fg);
  }
  if (!cache.load_background("background-backward", bwd_key, bwd, nullptr)) {
    bwd = model_background(frames, Direction::backward, cfg.background_interval, cfg.mog, nullptr);
    cache.store_background("background-backward", bwd_key, bwd, nullptr);
  }
  if (persist) {
    write_background_dir(out_dir / "background_forward", fwd);
    write_background_dir(out_dir / "background_backward", bwd);
  }

  // detect
  DetectionStream fallback;
  if (!given) fallback = foreground_detections(fg, cfg.blob_min_area, video_id);
  const DetectionStream& frame_dets = given ? *given : fallback;
  DetectionStream bg_dets = background_detections(fwd, cfg.diff_threshold, cfg.blob_min_area, video_id);
  if (persist) {
    write_detections(out_dir / "background_detections.tsv", bg_dets);
    if (!given) write_detections(out_dir / "frame_detections.tsv", fallback);
  }

  // mask
  RoadMask mask = build_road_mask(frame_dets, static_cast<std::int64_t>(frames.size()), w, h, cfg);
  if (persist) write_mask(out_dir / "roadmask.png", mask);

  // pixel-level tracking
  std::vector<TubeSeed> seeds = track_seeds(sample_times(fwd), bg_dets, mask, cfg);
  res.seeds = seeds.size();
  if (persist) {
    auto out = open_out(out_dir / "seeds.tsv");
    write_seeds(out, seeds);
  }

  // tubes
  TubeStage ts = build_events(seeds, frame_dets, frames, cfg, video_id);
  if (persist) {
    auto out = open_out(out_dir / "tubes.txt");
    write_tube_report(out, ts.tubes, ts.verdicts);
  }

  // postproc
  postprocess(ts.events, frames.fps, fg, fwd, bwd, cfg);
  std::stable_sort(ts.events.begin(), ts.events.end(),
                   [](const AnomalyEvent& a, const AnomalyEvent& b) { return a.start < b.start; });
  for (std::size_t i = 0; i < ts.events.size(); ++i) ts.events[i].id = static_cast<int>(i);
  res.events = std::move(ts.events);
  if (persist) {
    auto out = open_out(out_dir / "events.tsv");
    write_events(out, res.events);
  }
  return res;
}

std::vector<PredictionEvent> to_submission(const std::vector<AnomalyEvent>& events) {
  std::vector<PredictionEvent> out;
  for (const auto& e : events) out.push_back({e.video_id, e.start, e.confidence});
  std::stable_sort(out.begin(), out.end(), [](const PredictionEvent& a, const PredictionEvent& b) {
    return a.video_id != b.video_id ? a.video_id < b.video_id : a.pred_time < b.pred_time;
  });
  return out;
}

PipelineResult run_pipeline(const PipelineConfig& cfg) {
  validate(cfg);
  if (cfg.videos.empty()) throw StageError("ingest", "no videos configured", "add a videos list or pass --frames");
  PipelineResult res;
  std::vector<GroundTruthEvent> gts;
  if (!cfg.ground_truth.empty()) {
    if (!std::filesystem::exists(cfg.ground_truth))
      throw StageError("score", "ground truth '" + cfg.ground_truth + "' not found", "fix io.ground_truth");
    gts = read_ground_truth(cfg.ground_truth);
  }
  const std::filesystem::path out_root = cfg.output_dir;
  const ArtifactCache cache(cfg.cache_dir);
  res.videos.resize(cfg.videos.size());
  std::vector<std::exception_ptr> errors(cfg.videos.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < cfg.videos.size();) {
      const VideoInput& in = cfg.videos[i];
      try {
        if (!std::filesystem::exists(in.frames))
          throw StageError("ingest", "frames '" + in.frames + "' not found",
                           "generate them with `tad synth` or fix videos[].frames");
        FrameSequence frames;
        try {
          frames = read_frames(in.frames, cfg.fps);
        } catch (const std::exception& e) {
          throw StageError("ingest", e.what(), "frames must be a numbered image directory or a .raw with sidecar");
        }
        std::optional<DetectionStream> dets;
        if (!in.detections.empty()) {
          if (!std::filesystem::exists(in.detections))
            throw StageError("detect", "detections '" + in.detections + "' not found",
                             "fix videos[].detections or leave it empty to use foreground blobs");
          dets = read_detections(in.detections);
        }
        res.videos[i] = process_video(std::move(frames), dets ? &*dets : nullptr, cfg, in.video_id,
                                      cache.enabled() ? ArtifactCache(std::filesystem::path(cfg.cache_dir) / in.video_id)
                                                      : ArtifactCache(),
                                      out_root / in.video_id);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t nthreads = std::min<std::size_t>(static_cast<std::size_t>(cfg.workers), cfg.videos.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < nthreads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<AnomalyEvent> all;
  for (const auto& v : res.videos) all.insert(all.end(), v.events.begin(), v.events.end());
  res.submission = to_submission(all);
  {
    auto out = open_out(out_root / "submission.txt");
    write_predictions(out, res.submission);
  }
  {
    auto out = open_out(out_root / "config.json");
    out << to_json(cfg).dump(2) << '\n';
  }
  if (!cfg.ground_truth.empty()) {
    res.report = evaluate(res.submission, gts, cfg.eval_window, cfg.nrmse_cap);
    auto out = open_out(out_root / "report.txt");
    write_report(out, *res.report);
  }
  return res;
}

}  // namespace tad
