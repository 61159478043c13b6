#include "tad/roadmask.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tad/metrics.hpp"

namespace tad {

double TrajectoryTrack::displacement() const {
  if (samples.size() < 2) return 0.0;
  const auto& a = samples.front().second;
  const auto& b = samples.back().second;
  return std::hypot(b.center_x() - a.center_x(), b.center_y() - a.center_y());
}

double TrajectoryTrack::direction_angle() const {
  if (samples.size() < 2) return 0.0;
  const auto& a = samples.front().second;
  const auto& b = samples.back().second;
  double dx = b.center_x() - a.center_x(), dy = b.center_y() - a.center_y();
  return (dx == 0 && dy == 0) ? 0.0 : std::atan2(dy, dx);
}

double TrajectoryTrack::abs_slope_angle() const {
  if (samples.size() < 2) return 0.0;
  const auto& a = samples.front().second;
  const auto& b = samples.back().second;
  double dx = std::abs(b.center_x() - a.center_x()), dy = std::abs(b.center_y() - a.center_y());
  return (dx == 0 && dy == 0) ? 0.0 : std::atan2(dy, dx);
}

namespace {

struct LiveTrack {
  TrajectoryTrack t;
  double vx = 0, vy = 0;  // per frame

  BoundingBox predict(std::int64_t f) const {
    const auto& [lf, lb] = t.samples.back();
    double k = double(f - lf);
    return lb.translated(vx * k, vy * k);
  }
  void add(std::int64_t f, const BoundingBox& b) {
    const auto& [lf, lb] = t.samples.back();
    double k = double(f - lf);
    if (k > 0) {
      vx = (b.center_x() - lb.center_x()) / k;
      vy = (b.center_y() - lb.center_y()) / k;
    }
    t.samples.emplace_back(f, b);
  }
};

}  // namespace

std::vector<TrajectoryTrack> track_vehicles(const DetectionStream& stream, const TrackerParams& params) {
  std::vector<LiveTrack> live;
  std::vector<TrajectoryTrack> done;
  int next_id = 0;
  auto retire = [&](LiveTrack& lt) {
    if (static_cast<int>(lt.t.samples.size()) >= params.min_samples) done.push_back(std::move(lt.t));
  };
  for (const auto& [f, recs] : stream.by_frame) {
    // Close tracks that have been missing for too long.
    for (auto it = live.begin(); it != live.end();) {
      if (f - it->t.samples.back().first > params.max_missed) {
        retire(*it);
        it = live.erase(it);
      } else {
        ++it;
      }
    }
    struct Pair {
      double iou;
      std::size_t t, d;
    };
    std::vector<Pair> pairs;
    std::vector<BoundingBox> pred(live.size());
    for (std::size_t t = 0; t < live.size(); ++t) pred[t] = live[t].predict(f);
    for (std::size_t t = 0; t < live.size(); ++t)
      for (std::size_t d = 0; d < recs.size(); ++d) {
        double v = iou(pred[t], recs[d].box);
        if (v >= params.iou_threshold) pairs.push_back({v, t, d});
      }
    std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.iou > b.iou; });
    std::vector<bool> t_used(live.size(), false), d_used(recs.size(), false);
    for (const auto& p : pairs) {
      if (t_used[p.t] || d_used[p.d]) continue;
      t_used[p.t] = d_used[p.d] = true;
      live[p.t].add(f, recs[p.d].box);
    }
    for (std::size_t d = 0; d < recs.size(); ++d) {
      if (d_used[d]) continue;
      LiveTrack lt;
      lt.t.track_id = next_id++;
      lt.t.samples.emplace_back(f, recs[d].box);
      live.push_back(std::move(lt));
    }
  }
  for (auto& lt : live) retire(lt);
  std::sort(done.begin(), done.end(), [](const TrajectoryTrack& a, const TrajectoryTrack& b) { return a.track_id < b.track_id; });
  return done;
}

RoadMask motion_mask(const DetectionStream& stream, std::int64_t total_frames, int width, int height,
                     double freq_threshold, int kernel) {
  RoadMask out(width, height);
  if (stream.empty() || total_frames <= 0) return out;
  std::vector<std::uint32_t> counts(static_cast<std::size_t>(width) * height, 0);
  BinaryMask cover(width, height);
  for (const auto& [f, recs] : stream.by_frame) {
    std::fill(cover.data.begin(), cover.data.end(), 0);
    for (const auto& r : recs) cover.paint(r.box);
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += cover.data[i];
  }
  const double need = freq_threshold * double(total_frames);
  for (std::size_t i = 0; i < counts.size(); ++i) out.data[i] = counts[i] > 0 && double(counts[i]) >= need;
  return morph_open(morph_close(out, kernel), kernel);
}

TwoMeans two_means(const std::vector<double>& v) {
  TwoMeans r;
  r.labels.assign(v.size(), 0);
  if (v.empty()) return r;
  auto [mn, mx] = std::minmax_element(v.begin(), v.end());
  r.centres[0] = *mn;
  r.centres[1] = *mx;
  if (*mn == *mx) {
    r.sizes[0] = v.size();
    return r;
  }
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < v.size(); ++i) {
      int l = std::abs(v[i] - r.centres[0]) <= std::abs(v[i] - r.centres[1]) ? 0 : 1;
      if (l != r.labels[i]) changed = true;
      r.labels[i] = l;
    }
    double s[2] = {0, 0};
    std::size_t n[2] = {0, 0};
    for (std::size_t i = 0; i < v.size(); ++i) {
      s[r.labels[i]] += v[i];
      ++n[r.labels[i]];
    }
    for (int c = 0; c < 2; ++c)
      if (n[c]) r.centres[c] = s[c] / double(n[c]);
    r.sizes[0] = n[0];
    r.sizes[1] = n[1];
    if (!changed) break;
  }
  return r;
}

std::vector<bool> primary_tracks(const std::vector<TrajectoryTrack>& tracks, const TrajectoryMaskParams& p,
                                 double* centre) {
  std::vector<bool> keep(tracks.size(), false);
  std::vector<std::size_t> idx;
  std::vector<double> ang;
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    const auto& t = tracks[i];
    if (static_cast<int>(t.samples.size()) < p.min_len || t.displacement() < p.min_displacement) continue;
    idx.push_back(i);
    ang.push_back(t.abs_slope_angle());
  }
  if (idx.empty()) return keep;
  TwoMeans tm = two_means(ang);
  // Larger cluster dominates; equal sizes fall back to the flatter one.
  int dom = tm.sizes[1] > tm.sizes[0] ? 1 : 0;
  if (centre) *centre = tm.centres[dom];
  for (std::size_t k = 0; k < idx.size(); ++k)
    keep[idx[k]] = std::abs(ang[k] - tm.centres[dom]) <= p.angle_threshold;
  return keep;
}

RoadMask trajectory_mask(const std::vector<TrajectoryTrack>& tracks, int width, int height,
                         const TrajectoryMaskParams& params) {
  RoadMask out(width, height);
  auto keep = primary_tracks(tracks, params);
  for (std::size_t i = 0; i < tracks.size(); ++i)
    if (keep[i])
      for (const auto& [f, b] : tracks[i].samples) out.paint(b);
  return out;
}

RoadMask fuse_masks(const RoadMask& motion, const RoadMask& trajectory, int kernel) {
  if (!motion.same_shape(trajectory)) throw InvalidInput("fuse_masks: dimension mismatch");
  return morph_close(mask_or(motion, trajectory), kernel);
}

RgbImage mask_overlay(const GrayFrame& frame, const RoadMask& mask) {
  if (frame.width != mask.width || frame.height != mask.height) throw InvalidInput("mask_overlay: dimension mismatch");
  RgbImage img{frame.width, frame.height, std::vector<std::uint8_t>(frame.data.size() * 3)};
  for (std::size_t i = 0; i < frame.data.size(); ++i) {
    int g = frame.data[i];
    if (mask.data[i]) {
      img.data[3 * i] = static_cast<std::uint8_t>(g / 2);
      img.data[3 * i + 1] = static_cast<std::uint8_t>(std::min(255, g / 2 + 128));
      img.data[3 * i + 2] = static_cast<std::uint8_t>(g / 2);
    } else {
      img.data[3 * i] = img.data[3 * i + 1] = img.data[3 * i + 2] = static_cast<std::uint8_t>(g);
    }
  }
  return img;
}

}  // namespace tad
