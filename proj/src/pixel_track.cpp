#include "tad/pixel_track.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "tad/metrics.hpp"

namespace tad {

PixelStateGrid::PixelStateGrid(int w, int h) : width(w), height(h) {
  if (w < 1 || h < 1) throw InvalidInput("PixelStateGrid: invalid size");
  const std::size_t n = static_cast<std::size_t>(w) * h;
  v_undetected.assign(n, 0);
  v_detected.assign(n, 0);
  v_score.assign(n, 0.0);
  v_state.assign(n, PixelState::normal);
  v_start.assign(n, 0.0);
  v_end.assign(n, 0.0);
}

std::vector<ScoredBox> filter_by_mask(const std::vector<ScoredBox>& boxes, const BinaryMask& mask) {
  std::vector<ScoredBox> out;
  for (const auto& b : boxes) {
    int cx = static_cast<int>(std::floor(b.box.center_x()));
    int cy = static_cast<int>(std::floor(b.box.center_y()));
    if (cx >= 0 && cy >= 0 && cx < mask.width && cy < mask.height && mask.at(cx, cy)) out.push_back(b);
  }
  return out;
}

void update_grid(PixelStateGrid& g, const std::vector<ScoredBox>& boxes, const BinaryMask& mask, double t,
                 const GridParams& p) {
  if (mask.width != g.width || mask.height != g.height) throw InvalidInput("update_grid: mask size mismatch");
  std::vector<double> hit(static_cast<std::size_t>(g.width) * g.height, -1.0);
  for (const auto& b : filter_by_mask(boxes, mask)) {
    PixelRect r = pixel_rect(b.box, g.width, g.height);
    for (int y = r.y0; y < r.y1; ++y)
      for (int x = r.x0; x < r.x1; ++x) {
        double& h = hit[g.index(x, y)];
        h = std::max(h, b.score);
      }
  }
  for (std::size_t i = 0; i < hit.size(); ++i) {
    if (hit[i] >= 0) {
      if (g.v_detected[i] == 0) g.v_start[i] = t;
      ++g.v_detected[i];
      g.v_undetected[i] = 0;
      g.v_score[i] += hit[i];
      const double dur = t - g.v_start[i];
      if (g.v_state[i] == PixelState::normal) {
        if (dur >= p.suspicious_time && g.v_detected[i] >= p.min_hits) g.v_state[i] = PixelState::suspicious;
      } else if (g.v_state[i] == PixelState::suspicious) {
        if (dur >= p.abnormal_time) g.v_state[i] = PixelState::abnormal;
      }
    } else {
      ++g.v_undetected[i];
      if (g.v_undetected[i] >= p.miss_reset) {
        g.v_detected[i] = 0;
        g.v_score[i] = 0.0;
        g.v_state[i] = PixelState::normal;
      }
    }
    if (g.v_state[i] != PixelState::normal) g.v_end[i] = t;
  }
}

std::vector<TubeSeed> extract_candidates(const PixelStateGrid& g, double /*t*/, const GridParams& p) {
  BinaryMask ab(g.width, g.height);
  for (std::size_t i = 0; i < ab.data.size(); ++i) ab.data[i] = g.v_state[i] == PixelState::abnormal;
  std::vector<int> labels;
  auto comps = connected_components(ab, &labels);
  std::vector<TubeSeed> seeds(comps.size());
  std::vector<bool> first(comps.size(), true);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    int l = labels[i];
    if (l < 0) continue;
    auto& s = seeds[static_cast<std::size_t>(l)];
    double peak = g.v_detected[i] > 0 ? g.v_score[i] / g.v_detected[i] : 0.0;
    if (first[static_cast<std::size_t>(l)]) {
      s.stop_time = g.v_start[i];
      s.last_seen = g.v_end[i];
      s.peak_score = peak;
      first[static_cast<std::size_t>(l)] = false;
    } else {
      s.stop_time = std::min(s.stop_time, g.v_start[i]);
      s.last_seen = std::max(s.last_seen, g.v_end[i]);
      s.peak_score = std::max(s.peak_score, peak);
    }
  }
  std::vector<TubeSeed> out;
  for (std::size_t c = 0; c < comps.size(); ++c) {
    if (comps[c].area < p.min_area) continue;
    seeds[c].region = comps[c].box;
    seeds[c].peak_score = std::clamp(seeds[c].peak_score, 0.0, 1.0);
    out.push_back(seeds[c]);
  }
  return out;
}

void SeedTracker::update(const std::vector<TubeSeed>& candidates) {
  for (const auto& c : candidates) {
    bool merged = false;
    for (auto& s : seeds_) {
      if (containment(s.region, c.region) >= thr_) {
        s.region = box_union(s.region, c.region);
        s.stop_time = std::min(s.stop_time, c.stop_time);
        s.last_seen = std::max(s.last_seen, c.last_seen);
        s.peak_score = std::max(s.peak_score, c.peak_score);
        merged = true;
        break;
      }
    }
    if (!merged) seeds_.push_back(c);
  }
}

BoundingBox select_anchor(const TubeSeed& seed, const std::vector<DetectionRecord>* dets) {
  BoundingBox best = seed.region;
  if (!dets) return best;
  constexpr double eps = 1e-12;
  double bc = -1.0, bi = -1.0;
  for (const auto& d : *dets) {
    double c = intersection_area(d.box, seed.region) / std::max(d.box.area(), eps);
    if (c + eps < 0.5) continue;
    double u = iou(d.box, seed.region);
    if (c > bc + eps || (std::abs(c - bc) <= eps && u > bi)) {
      bc = c;
      bi = u;
      best = d.box;
    }
  }
  return best;
}

namespace {

bool appearance_ok(const GrayFrame& a, const GrayFrame& b, double t_psnr, double t_color) {
  return psnr(a, b) >= t_psnr && color_hist_similarity(a, b) >= t_color;
}

}  // namespace

BacktrackResult backtrack_start(const TubeSeed& seed, const DetectionStream& detections, const FrameSequence& frames,
                                const BacktrackParams& p) {
  BacktrackResult res;
  res.start = seed.stop_time;
  res.anchor = res.earliest_box = seed.region;
  if (frames.empty() || !seed.region.valid()) return res;
  const int fw = frames.frames[0].width, fh = frames.frames[0].height;
  const std::size_t stop_idx = frames.index_at(seed.stop_time);
  const auto fstep = static_cast<std::int64_t>(std::max(1.0, std::round(p.step * frames.fps)));

  // Nearest frame at or around the stop time that carries detections.
  const std::vector<DetectionRecord>* stop_dets = nullptr;
  for (std::int64_t d = 0; d <= fstep && !stop_dets; ++d) {
    stop_dets = detections.frame(static_cast<std::int64_t>(stop_idx) - d);
    if (!stop_dets) stop_dets = detections.frame(static_cast<std::int64_t>(stop_idx) + d);
  }
  bool any = false;
  for (const auto& [f, recs] : detections.by_frame)
    if (f <= static_cast<std::int64_t>(stop_idx) && !recs.empty()) {
      any = true;
      break;
    }
  res.had_detections = any;
  if (!any) return res;

  BoundingBox cur = select_anchor(seed, stop_dets).clipped(fw, fh);
  if (!cur.valid()) return res;
  res.anchor = res.earliest_box = cur;
  GrayFrame ref = crop_resample(frames.frames[stop_idx], cur, p.crop_size, p.crop_size);
  const double t_stop = frames.frames[stop_idx].timestamp;
  double earliest = std::min(seed.stop_time, t_stop);
  std::deque<bool> trail;
  int trail_hits = 0;

  for (std::int64_t f = static_cast<std::int64_t>(stop_idx) - fstep; f >= 0; f -= fstep) {
    const GrayFrame& frame = frames.frames[static_cast<std::size_t>(f)];
    const double t = frame.timestamp;
    const auto* dets = detections.frame(f);
    bool ok = false;
    BoundingBox next = cur;
    GrayFrame next_crop;

    const DetectionRecord* best = nullptr;
    double best_iou = 0.0;
    if (dets)
      for (const auto& d : *dets) {
        double v = iou(d.box, cur);
        if (v > best_iou) {
          best_iou = v;
          best = &d;
        }
      }
    if (best && best_iou > p.t_iou_relaxed) {
      ok = true;
      next = best->box.clipped(fw, fh);
      next_crop = crop_resample(frame, next, p.crop_size, p.crop_size);
    } else if (best && best_iou >= p.t_iou) {
      BoundingBox b = best->box.clipped(fw, fh);
      GrayFrame c = crop_resample(frame, b, p.crop_size, p.crop_size);
      if (appearance_ok(c, ref, p.t_psnr, p.t_color)) {
        ok = true;
        next = b;
        next_crop = std::move(c);
      }
    }
    if (!ok && dets) {
      // Gap jumping: nearby boxes that do not overlap the anchor enough.
      const double radius = std::max(cur.width(), cur.height());
      double best_psnr = -1.0;
      for (const auto& d : *dets) {
        if (iou(d.box, cur) >= p.t_iou) continue;
        if (std::hypot(d.box.center_x() - cur.center_x(), d.box.center_y() - cur.center_y()) > radius) continue;
        BoundingBox b = d.box.clipped(fw, fh);
        if (!b.valid()) continue;
        GrayFrame c = crop_resample(frame, b, p.crop_size, p.crop_size);
        double ps = psnr(c, ref);
        if (ps >= p.t_psnr_relaxed && color_hist_similarity(c, ref) >= p.t_color_relaxed && ps > best_psnr) {
          best_psnr = ps;
          ok = true;
          next = b;
          next_crop = std::move(c);
        }
      }
    }
    if (!ok) {
      // Detector miss: the anchor region itself may still show the vehicle.
      GrayFrame c = crop_resample(frame, cur, p.crop_size, p.crop_size);
      if (appearance_ok(c, ref, p.t_psnr_relaxed, p.t_color_relaxed)) {
        ok = true;
        next_crop = std::move(c);
      }
    }
    ++res.steps;
    trail.push_back(ok);
    trail_hits += ok;
    if (static_cast<int>(trail.size()) > p.window) {
      trail_hits -= trail.front();
      trail.pop_front();
    }
    const double ratio = double(trail_hits) / double(trail.size());
    if (ok) {
      ++res.accepted;
      cur = next;
      ref = std::move(next_crop);
      if (ratio >= p.t_ratio && t < earliest) {
        earliest = t;
        res.earliest_box = cur;
      }
    }
    if (ratio < p.t_ratio && t_stop - t >= p.t_time) break;
  }
  res.start = std::min(earliest, seed.stop_time);
  return res;
}

}  // namespace tad
