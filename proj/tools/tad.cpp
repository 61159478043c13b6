// Command-line front end: one subcommand per pipeline stage plus `run`.
#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "tad/artifacts.hpp"
#include "tad/config.hpp"
#include "tad/frame_io.hpp"
#include "tad/pipeline.hpp"
#include "tad/synth.hpp"

using namespace tad;

namespace {

std::ofstream open_out(const std::string& path) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

PipelineConfig base_config(const std::string& path) {
  PipelineConfig c = path.empty() ? PipelineConfig{} : load_config(path);
  apply_env_overrides(c);
  validate(c);
  return c;
}

FrameSequence load_frames(const std::string& path, double fps) {
  if (!std::filesystem::exists(path)) throw StageError("ingest", "frames '" + path + "' not found", "check --in");
  return read_frames(path, fps);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Traffic anomaly detection: stalled vehicles and crashes"};
  app.require_subcommand(1);
  std::string config_path;
  double fps = 30.0;
  app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--fps", fps, "frame rate for image directories")->check(CLI::PositiveNumber);

  // stabilize
  auto* stab = app.add_subcommand("stabilize", "estimate camera motion and warp shaky video");
  std::string st_in, st_out, st_report;
  bool st_force = false;
  stab->add_option("--in", st_in, "input frames")->required();
  stab->add_option("--out", st_out, "output frame directory or .raw");
  stab->add_option("--report", st_report, "transform log")->required();
  stab->add_flag("--force", st_force, "warp even if the video is not shaky");

  // background
  auto* bg = app.add_subcommand("background", "mixture-of-Gaussians background frames");
  std::string bg_in, bg_out, bg_dir = "forward";
  int bg_interval = -1;
  bg->add_option("--in", bg_in, "input frames")->required();
  bg->add_option("--out", bg_out, "output directory (numbered frames + index.txt)")->required();
  bg->add_option("--direction", bg_dir, "forward or backward")->check(CLI::IsMember({"forward", "backward"}));
  bg->add_option("--interval", bg_interval, "frames between emitted backgrounds")->check(CLI::PositiveNumber);

  // detect
  auto* det = app.add_subcommand("detect", "blob detections on background frames, or fuse detector files");
  std::string det_bg, det_out, det_vid = "video";
  std::vector<std::string> det_fuse;
  det->add_option("--background", det_bg, "background directory from `background`");
  det->add_option("--fuse", det_fuse, "two detection files to fuse with NMS")->expected(2);
  det->add_option("--out", det_out, "output detections")->required();
  det->add_option("--video-id", det_vid, "video id written into records");

  // mask
  auto* mk = app.add_subcommand("mask", "road mask from frame-level detections");
  std::string mk_det, mk_out, mk_overlay, mk_frame;
  int mk_w = 0, mk_h = 0;
  long long mk_total = 0;
  mk->add_option("--detections", mk_det, "frame-level detections")->required()->check(CLI::ExistingFile);
  mk->add_option("--width", mk_w, "frame width")->required()->check(CLI::PositiveNumber);
  mk->add_option("--height", mk_h, "frame height")->required()->check(CLI::PositiveNumber);
  mk->add_option("--frames", mk_total, "total frame count")->required()->check(CLI::PositiveNumber);
  mk->add_option("--out", mk_out, "mask image (.png or .pgm)")->required();
  mk->add_option("--overlay", mk_overlay, "write an RGB overlay here");
  mk->add_option("--overlay-frame", mk_frame, "frame image for the overlay");

  // track
  auto* tr = app.add_subcommand("track", "pixel-level state tracking over background detections");
  std::string tr_bg, tr_det, tr_mask, tr_out;
  tr->add_option("--background", tr_bg, "forward background directory (sample times)")->required();
  tr->add_option("--detections", tr_det, "background detections from `detect`")->required()->check(CLI::ExistingFile);
  tr->add_option("--mask", tr_mask, "road mask")->required()->check(CLI::ExistingFile);
  tr->add_option("--out", tr_out, "seed table")->required();

  // tubes
  auto* tb = app.add_subcommand("tubes", "backtrack start times and judge spatial-temporal tubes");
  std::string tb_in, tb_seeds, tb_det, tb_out, tb_report, tb_vid = "video";
  tb->add_option("--in", tb_in, "frames (stabilized if applicable)")->required();
  tb->add_option("--seeds", tb_seeds, "seed table from `track`")->required()->check(CLI::ExistingFile);
  tb->add_option("--detections", tb_det, "frame-level detections")->required()->check(CLI::ExistingFile);
  tb->add_option("--out", tb_out, "event table")->required();
  tb->add_option("--report", tb_report, "tube report");
  tb->add_option("--video-id", tb_vid, "video id");

  // postproc
  auto* pp = app.add_subcommand("postproc", "crash check and boundary refinement");
  std::string pp_in, pp_events, pp_out, pp_sub;
  pp->add_option("--in", pp_in, "frames (stabilized if applicable)")->required();
  pp->add_option("--events", pp_events, "event table from `tubes`")->required()->check(CLI::ExistingFile);
  pp->add_option("--out", pp_out, "refined event table")->required();
  pp->add_option("--submission", pp_sub, "submission lines `video_id time confidence`");

  // score
  auto* sc = app.add_subcommand("score", "F1 / NRMSE / S4 against ground truth");
  std::string sc_pred, sc_gt, sc_out;
  double sc_window = -1, sc_cap = -1;
  sc->add_option("--pred", sc_pred, "predictions")->required()->check(CLI::ExistingFile);
  sc->add_option("--gt", sc_gt, "ground truth")->required()->check(CLI::ExistingFile);
  sc->add_option("--out", sc_out, "report file (stdout if omitted)");
  sc->add_option("--window", sc_window, "match window in seconds");
  sc->add_option("--cap", sc_cap, "NRMSE cap in seconds");

  // synth
  auto* sy = app.add_subcommand("synth", "generate a synthetic scene");
  std::string sy_spec, sy_out, sy_dump;
  std::uint64_t sy_seed = 0;
  sy->add_option("--spec", sy_spec, "scene spec JSON (default scene if omitted)")->check(CLI::ExistingFile);
  sy->add_option("--seed", sy_seed, "random seed");
  sy->add_option("--out", sy_out, "output directory")->required();
  sy->add_option("--dump-spec", sy_dump, "write the resolved spec here");

  // run
  auto* run = app.add_subcommand("run", "full pipeline");
  std::string run_frames, run_det, run_gt, run_out, run_vid = "video";
  run->add_option("--frames", run_frames, "single video frames (adds to any configured videos)");
  run->add_option("--detections", run_det, "frame-level detections for --frames");
  run->add_option("--video-id", run_vid, "video id for --frames");
  run->add_option("--gt", run_gt, "ground truth");
  run->add_option("--out", run_out, "output directory");

  auto* dump = app.add_subcommand("config", "print the resolved configuration");

  CLI11_PARSE(app, argc, argv);

  try {
    PipelineConfig cfg = base_config(config_path);
    if (app.count("--fps")) cfg.fps = fps;

    if (*stab) {
      FrameSequence f = load_frames(st_in, cfg.fps);
      auto sp = cfg.stabilization;
      sp.force = sp.force || st_force;
      StabilizationResult r = stabilize(f, sp);
      auto out = open_out(st_report);
      write_transform_log(out, r.transforms);
      std::printf("accumulated=%.3f average=%.4f shaky=%d applied=%d degraded=%zu\n", r.verdict.accumulated,
                  r.verdict.average, r.verdict.is_shaky ? 1 : 0, r.applied ? 1 : 0, r.degraded_frames);
      if (!st_out.empty()) {
        if (std::filesystem::path(st_out).extension() == ".raw")
          write_raw(st_out, f);
        else
          write_frame_dir(st_out, f);
      }
    } else if (*bg) {
      FrameSequence f = load_frames(bg_in, cfg.fps);
      BackgroundSequence s =
          model_background(f, parse_direction(bg_dir), bg_interval > 0 ? bg_interval : cfg.background_interval, cfg.mog);
      write_background_dir(bg_out, s);
      std::printf("%zu background frames\n", s.frames.size());
    } else if (*det) {
      DetectionStream out;
      if (!det_fuse.empty()) {
        out = fuse_detectors(read_detections(det_fuse[0]), read_detections(det_fuse[1]), cfg.fuse_nms);
      } else {
        if (det_bg.empty()) throw StageError("detect", "nothing to do", "pass --background or --fuse");
        out = background_detections(read_background_dir(det_bg), cfg.diff_threshold, cfg.blob_min_area, det_vid);
      }
      write_detections(det_out, out);
      std::printf("%zu detections\n", out.size());
    } else if (*mk) {
      RoadMask m = build_road_mask(read_detections(mk_det), mk_total, mk_w, mk_h, cfg);
      write_mask(mk_out, m);
      if (!mk_overlay.empty()) {
        if (mk_frame.empty()) throw StageError("mask", "--overlay needs --overlay-frame", "");
        write_png_rgb(mk_overlay, mask_overlay(read_image(mk_frame), m));
      }
      std::printf("%zu road pixels\n", m.count());
    } else if (*tr) {
      BackgroundSequence s = read_background_dir(tr_bg);
      auto seeds = track_seeds(sample_times(s), read_detections(tr_det), read_mask(tr_mask), cfg);
      auto out = open_out(tr_out);
      write_seeds(out, seeds);
      std::printf("%zu seeds\n", seeds.size());
    } else if (*tb) {
      FrameSequence f = load_frames(tb_in, cfg.fps);
      TubeStage st = build_events(read_seeds(tb_seeds), read_detections(tb_det), f, cfg, tb_vid);
      auto out = open_out(tb_out);
      write_events(out, st.events);
      if (!tb_report.empty()) {
        auto rep = open_out(tb_report);
        write_tube_report(rep, st.tubes, st.verdicts);
      }
      std::printf("%zu events\n", st.events.size());
    } else if (*pp) {
      FrameSequence f = load_frames(pp_in, cfg.fps);
      ForegroundHistory fg;
      BackgroundSequence fwd = model_background(f, Direction::forward, cfg.background_interval, cfg.mog, &fg);
      BackgroundSequence bwd = model_background(f, Direction::backward, cfg.background_interval, cfg.mog);
      auto events = read_events(pp_events);
      postprocess(events, f.fps, fg, fwd, bwd, cfg);
      auto out = open_out(pp_out);
      write_events(out, events);
      if (!pp_sub.empty()) {
        auto s = open_out(pp_sub);
        write_predictions(s, to_submission(events));
      }
      std::printf("%zu events\n", events.size());
    } else if (*sc) {
      EvalReport r = evaluate(read_predictions(sc_pred), read_ground_truth(sc_gt),
                              sc_window >= 0 ? sc_window : cfg.eval_window, sc_cap > 0 ? sc_cap : cfg.nrmse_cap);
      if (sc_out.empty()) {
        write_report(std::cout, r);
      } else {
        auto out = open_out(sc_out);
        write_report(out, r);
      }
    } else if (*sy) {
      SceneSpec spec = sy_spec.empty() ? default_scene(sy_seed) : read_scene_spec(sy_spec);
      SynthOutput out = generate(spec, sy_seed);
      write_synth_output(sy_out, out, spec.video_id);
      if (!sy_dump.empty()) write_scene_spec(sy_dump, spec);
      std::printf("%zu frames, %zu events\n", out.frames.size(), out.truth.size());
    } else if (*run) {
      if (!run_frames.empty()) cfg.videos.push_back({run_vid, run_frames, run_det});
      if (!run_gt.empty()) cfg.ground_truth = run_gt;
      if (!run_out.empty()) cfg.output_dir = run_out;
      PipelineResult r = run_pipeline(cfg);
      write_predictions(std::cout, r.submission);
      if (r.report) write_report(std::cerr, *r.report);
    } else if (*dump) {
      std::cout << to_json(cfg).dump(2) << '\n';
    }
  } catch (const StageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
