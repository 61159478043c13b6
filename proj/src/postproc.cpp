#include "tad/postproc.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "tad/metrics.hpp"
#include "tad/tube.hpp"

namespace tad {

std::size_t ring_foreground(const ForegroundHistory& fg, std::size_t frame, const BoundingBox& box, int ring_width) {
  const int w = fg.width(), h = fg.height();
  PixelRect outer = pixel_rect(box.expanded(ring_width), w, h);
  PixelRect inner = pixel_rect(box, w, h);
  std::size_t total = fg.count_rect(frame, outer);
  inner = {std::max(inner.x0, outer.x0), std::max(inner.y0, outer.y0), std::min(inner.x1, outer.x1),
           std::min(inner.y1, outer.y1)};
  if (!inner.empty()) total -= fg.count_rect(frame, inner);
  return total;
}

double ring_similarity(const GrayFrame& a, const GrayFrame& b, const BoundingBox& box, int ring_width) {
  if (a.width != b.width || a.height != b.height) throw InvalidInput("ring_similarity: dimension mismatch");
  PixelRect outer = pixel_rect(box.expanded(ring_width), a.width, a.height);
  PixelRect inner = pixel_rect(box, a.width, a.height);
  if (outer.empty()) throw InvalidInput("ring_similarity: ring outside the frame");
  SsimMap m = ssim_map(crop(a, outer), crop(b, outer));
  double sum = 0, all = 0;
  std::size_t n = 0;
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x) {
      double v = m.at(x, y);
      all += v;
      int x0 = outer.x0 + x, y0 = outer.y0 + y;
      bool touches = x0 < inner.x1 && x0 + m.window > inner.x0 && y0 < inner.y1 && y0 + m.window > inner.y0;
      if (touches) continue;
      sum += v;
      ++n;
    }
  return n ? sum / double(n) : all / double(m.values.size());
}

CollisionResult detect_collision(const AnomalyEvent& event, double fps, const ForegroundHistory& fg,
                                 const BackgroundSequence& forward, const CollisionParams& p) {
  CollisionResult res;
  if (fg.size() == 0 || forward.frames.empty() || fps <= 0) {
    res.insufficient_history = true;
    return res;
  }
  const double interval = forward.sample_interval / fps;
  const GrayFrame* after = forward.at_or_after(event.stop_time + p.settle_intervals * interval);
  if (!after) {
    after = forward.at_or_after(event.stop_time);
    if (!after) {
      res.insufficient_history = true;
      return res;
    }
  }
  const auto stop_idx = static_cast<std::int64_t>(
      std::min<double>(std::floor(event.stop_time * fps + 1e-6), double(fg.size() - 1)));
  const auto first = std::max<std::int64_t>(0, stop_idx - static_cast<std::int64_t>(std::llround(p.traceback * fps)));
  std::map<const GrayFrame*, double> sim_cache;
  res.bg_similarity = 1.0;
  for (std::int64_t f = stop_idx; f >= first; --f) {
    std::size_t c = ring_foreground(fg, static_cast<std::size_t>(f), event.stopped_box, p.ring_width);
    res.peak_fg = std::max(res.peak_fg, c);
    if (c <= p.fg_threshold) continue;
    ++res.candidates;
    const double t = double(f) / fps;
    // Without a background sample before the burst there is nothing to compare
    // against; this also skips the fresh model's all-foreground first frames.
    const GrayFrame* before = forward.at_or_before(t);
    if (!before || before == after) continue;
    auto it = sim_cache.find(before);
    double sim = it != sim_cache.end()
                     ? it->second
                     : (sim_cache[before] = ring_similarity(*before, *after, event.stopped_box, p.ring_width));
    if (sim < p.bg_sim_threshold) {
      res.crash_time = t;
      res.bg_similarity = sim;
    } else if (!res.crash_time) {
      res.bg_similarity = std::min(res.bg_similarity, sim);
    }
  }
  return res;
}

namespace {

struct Run {
  double onset = 0, last = 0;
  bool censored = false;  // run starts at the first sample of the sequence
};

// Run of matching samples around the sample nearest to `anchor`.
std::optional<Run> matching_run(const BackgroundSequence& seq, const BoundingBox& region, const GrayFrame& appearance,
                                double anchor, double thr) {
  if (seq.frames.empty()) return std::nullopt;
  std::vector<const GrayFrame*> s;
  for (const auto& f : seq.frames) s.push_back(&f);
  std::stable_sort(s.begin(), s.end(), [](const GrayFrame* a, const GrayFrame* b) { return a->timestamp < b->timestamp; });
  std::vector<bool> match(s.size());
  for (std::size_t i = 0; i < s.size(); ++i)
    match[i] = ssim(crop_resample(*s[i], region, appearance.width, appearance.height), appearance) >= thr;
  std::size_t k = 0;
  double best = 1e300;
  for (std::size_t i = 0; i < s.size(); ++i) {
    double d = std::abs(s[i]->timestamp - anchor);
    if (match[i] && d < best) {
      best = d;
      k = i;
    }
  }
  if (best == 1e300) return std::nullopt;
  std::size_t lo = k, hi = k;
  while (lo > 0 && match[lo - 1]) --lo;
  while (hi + 1 < s.size() && match[hi + 1]) ++hi;
  return Run{s[lo]->timestamp, s[hi]->timestamp, lo == 0};
}

}  // namespace

RefineResult refine_boundaries(const AnomalyEvent& event, const BackgroundSequence& forward,
                               const BackgroundSequence& backward, const RefineParams& p) {
  RefineResult r;
  r.start = event.start;
  r.end = std::max(event.start, event.end);
  const GrayFrame* ref_seq = !forward.frames.empty() ? &forward.frames.front()
                             : !backward.frames.empty() ? &backward.frames.front()
                                                        : nullptr;
  if (!ref_seq) return r;
  BoundingBox region = event.region.clipped(ref_seq->width, ref_seq->height);
  if (!region.valid()) return r;
  const double sample_gap = forward.frames.size() >= 2
                                  ? std::abs(forward.frames[1].timestamp - forward.frames[0].timestamp)
                                  : 0.0;
  const double anchor = event.stop_time + p.settle_intervals * sample_gap;
  const GrayFrame* app_src = forward.at_or_after(anchor);
  if (!app_src) app_src = forward.at_or_before(anchor);
  if (!app_src) app_src = backward.at_or_after(event.stop_time);
  if (!app_src) return r;
  GrayFrame appearance = crop_resample(*app_src, region, kTubeCrop, kTubeCrop);

  auto bwd = matching_run(backward, region, appearance, anchor, p.appearance_sim_threshold);
  auto fwd = matching_run(forward, region, appearance, anchor, p.appearance_sim_threshold);
  if (!bwd) return r;
  r.backward_onset = bwd->onset;
  if (fwd) r.forward_onset = fwd->onset;
  double arrival = event.start;
  if (bwd->censored)
    arrival = bwd->onset;  // present from the first sample on
  else if (fwd && !fwd->censored)
    arrival = 0.5 * (bwd->onset + fwd->onset);
  double last = std::max(bwd->last, fwd ? fwd->last : bwd->last);
  r.start = std::min(event.start, arrival);
  r.end = std::max({r.end, last, r.start});
  r.changed = r.start != event.start || r.end != event.end;
  return r;
}

}  // namespace tad
