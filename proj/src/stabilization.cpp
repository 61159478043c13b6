#include "tad/stabilization.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace tad {

namespace {

struct FloatImage {
  int w = 0, h = 0;
  std::vector<float> v;
  float at(int x, int y) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

FloatImage to_float(const GrayFrame& f) {
  FloatImage o{f.width, f.height, std::vector<float>(f.data.begin(), f.data.end())};
  return o;
}

// 5-tap binomial blur then decimation by two.
FloatImage pyr_down(const FloatImage& src) {
  static constexpr float k[5] = {1 / 16.f, 4 / 16.f, 6 / 16.f, 4 / 16.f, 1 / 16.f};
  const int w = src.w, h = src.h;
  const int ow = (w + 1) / 2, oh = (h + 1) / 2;
  // Horizontal pass at the even columns only; those are the ones kept.
  FloatImage tmp{ow, h, std::vector<float>(static_cast<std::size_t>(ow) * h)};
  for (int y = 0; y < h; ++y) {
    const float* row = src.v.data() + static_cast<std::size_t>(y) * w;
    float* o = tmp.v.data() + static_cast<std::size_t>(y) * ow;
    for (int x = 0; x < ow; ++x) {
      const int c = 2 * x;
      if (c >= 2 && c + 2 < w) {
        o[x] = k[0] * row[c - 2] + k[1] * row[c - 1] + k[2] * row[c] + k[3] * row[c + 1] + k[4] * row[c + 2];
      } else {
        float s = 0;
        for (int i = -2; i <= 2; ++i) s += k[i + 2] * row[std::clamp(c + i, 0, w - 1)];
        o[x] = s;
      }
    }
  }
  FloatImage out{ow, oh, std::vector<float>(static_cast<std::size_t>(ow) * oh)};
  for (int y = 0; y < oh; ++y) {
    const float* r[5];
    for (int i = -2; i <= 2; ++i) r[i + 2] = tmp.v.data() + static_cast<std::size_t>(std::clamp(2 * y + i, 0, h - 1)) * ow;
    float* o = out.v.data() + static_cast<std::size_t>(y) * ow;
    for (int x = 0; x < ow; ++x) o[x] = k[0] * r[0][x] + k[1] * r[1][x] + k[2] * r[2][x] + k[3] * r[3][x] + k[4] * r[4][x];
  }
  return out;
}

// Scharr derivatives scaled to intensity units per pixel; borders replicate.
void scharr(const FloatImage& src, FloatImage& gx, FloatImage& gy) {
  const int w = src.w, h = src.h;
  gx = {w, h, std::vector<float>(src.v.size())};
  gy = {w, h, std::vector<float>(src.v.size())};
  std::vector<float> pad(static_cast<std::size_t>(w + 2) * 3);
  for (int y = 0; y < h; ++y) {
    const float* rows[3];
    float* pr[3];
    for (int i = 0; i < 3; ++i) {
      const float* s = src.v.data() + static_cast<std::size_t>(std::clamp(y + i - 1, 0, h - 1)) * w;
      pr[i] = pad.data() + static_cast<std::size_t>(i) * (w + 2);
      std::copy(s, s + w, pr[i] + 1);
      pr[i][0] = s[0];
      pr[i][w + 1] = s[w - 1];
      rows[i] = pr[i] + 1;
    }
    const float *u = rows[0], *m = rows[1], *d = rows[2];
    float* ox = gx.v.data() + static_cast<std::size_t>(y) * w;
    float* oy = gy.v.data() + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) {
      ox[x] = (3 * (u[x + 1] - u[x - 1]) + 10 * (m[x + 1] - m[x - 1]) + 3 * (d[x + 1] - d[x - 1])) * (1 / 32.f);
      oy[x] = (3 * (d[x - 1] - u[x - 1]) + 10 * (d[x] - u[x]) + 3 * (d[x + 1] - u[x + 1])) * (1 / 32.f);
    }
  }
}

struct Pyramid {
  std::vector<FloatImage> img, gx, gy;
};

Pyramid build_pyramid(const GrayFrame& f, int levels, bool with_gradients) {
  Pyramid p;
  p.img.push_back(to_float(f));
  for (int l = 1; l < levels; ++l) {
    const auto& last = p.img.back();
    if (last.w < 16 || last.h < 16) break;
    p.img.push_back(pyr_down(last));
  }
  if (with_gradients) {
    p.gx.resize(p.img.size());
    p.gy.resize(p.img.size());
    for (std::size_t l = 0; l < p.img.size(); ++l) scharr(p.img[l], p.gx[l], p.gy[l]);
  }
  return p;
}

// Bilinear weights for a fixed fractional offset, shared by a whole window.
struct Bilinear {
  int ix, iy;
  float w00, w10, w01, w11;
  explicit Bilinear(double x, double y) {
    ix = static_cast<int>(std::floor(x));
    iy = static_cast<int>(std::floor(y));
    float fx = static_cast<float>(x - ix), fy = static_cast<float>(y - iy);
    w00 = (1 - fx) * (1 - fy);
    w10 = fx * (1 - fy);
    w01 = (1 - fx) * fy;
    w11 = fx * fy;
  }
  float sample(const FloatImage& im, int ox, int oy) const {
    int x0 = std::clamp(ix + ox, 0, im.w - 1), x1 = std::clamp(ix + ox + 1, 0, im.w - 1);
    int y0 = std::clamp(iy + oy, 0, im.h - 1), y1 = std::clamp(iy + oy + 1, 0, im.h - 1);
    return w00 * im.at(x0, y0) + w10 * im.at(x1, y0) + w01 * im.at(x0, y1) + w11 * im.at(x1, y1);
  }
  // Samples the (2r+1)^2 window around (ix, iy) in raster order.
  void window(const FloatImage& im, int r, float* out) const {
    if (ix - r >= 0 && iy - r >= 0 && ix + r + 1 < im.w && iy + r + 1 < im.h) {
      const std::size_t stride = static_cast<std::size_t>(im.w);
      for (int oy = -r; oy <= r; ++oy) {
        const float* a = im.v.data() + static_cast<std::size_t>(iy + oy) * stride + (ix - r);
        const float* b = a + stride;
        for (int k = 0; k <= 2 * r; ++k) *out++ = w00 * a[k] + w10 * a[k + 1] + w01 * b[k] + w11 * b[k + 1];
      }
      return;
    }
    for (int oy = -r; oy <= r; ++oy)
      for (int ox = -r; ox <= r; ++ox) *out++ = sample(im, ox, oy);
  }
};

PointMatch track_one(const Pyramid& prev, const Pyramid& cur, Point2 pt, const LkParams& prm) {
  PointMatch m{pt, pt, false};
  const int r = prm.window / 2;
  const int n = (2 * r + 1) * (2 * r + 1);
  const int levels = static_cast<int>(std::min(prev.img.size(), cur.img.size()));
  std::vector<float> iv(n), ixv(n), iyv(n), jv(n);
  double gx = 0, gy = 0;  // flow guess at the current level
  for (int l = levels - 1; l >= 0; --l) {
    const double scale = std::ldexp(1.0, -l);
    const double px = pt.x * scale, py = pt.y * scale;
    const auto& I = prev.img[l];
    const auto& J = cur.img[l];
    Bilinear bp(px, py);
    bp.window(I, r, iv.data());
    bp.window(prev.gx[l], r, ixv.data());
    bp.window(prev.gy[l], r, iyv.data());
    double a11 = 0, a12 = 0, a22 = 0;
    for (int k = 0; k < n; ++k) {
      a11 += double(ixv[k]) * ixv[k];
      a12 += double(ixv[k]) * iyv[k];
      a22 += double(iyv[k]) * iyv[k];
    }
    double tr = (a11 + a22) / n, det_half = std::sqrt(std::max(0.0, (a11 - a22) * (a11 - a22) / (n * n) * 0.25 +
                                                                     (a12 / n) * (a12 / n)));
    double min_eig = 0.5 * tr - det_half;
    if (min_eig < prm.min_eigen) return m;
    double det = a11 * a22 - a12 * a12;
    for (int it = 0; it < prm.max_iterations; ++it) {
      Bilinear bc(px + gx, py + gy);
      bc.window(J, r, jv.data());
      double b1 = 0, b2 = 0;
      for (int k = 0; k < n; ++k) {
        double diff = double(iv[k]) - jv[k];
        b1 += diff * ixv[k];
        b2 += diff * iyv[k];
      }
      double ux = (a22 * b1 - a12 * b2) / det;
      double uy = (a11 * b2 - a12 * b1) / det;
      gx += ux;
      gy += uy;
      if (!std::isfinite(gx) || !std::isfinite(gy)) return m;
      if (ux * ux + uy * uy < prm.epsilon * prm.epsilon) break;
    }
    if (l > 0) {
      gx *= 2;
      gy *= 2;
    }
  }
  m.to = {pt.x + gx, pt.y + gy};
  const auto& base = cur.img[0];
  m.valid = m.to.x >= 0 && m.to.y >= 0 && m.to.x <= base.w - 1 && m.to.y <= base.h - 1;
  return m;
}

}  // namespace

std::vector<Point2> detect_corners(const GrayFrame& frame, int max_corners, double quality, double min_distance) {
  if (frame.empty()) throw InvalidInput("detect_corners: empty frame");
  if (max_corners < 1) throw InvalidInput("detect_corners: max_corners must be >= 1");
  const int w = frame.width, h = frame.height;
  if (w < 3 || h < 3) return {};
  std::vector<float> ix(static_cast<std::size_t>(w) * h, 0.f), iy(ix.size(), 0.f);
  auto p = [&](int x, int y) { return float(frame.at(x, y)); };
  for (int y = 1; y < h - 1; ++y)
    for (int x = 1; x < w - 1; ++x) {
      std::size_t i = static_cast<std::size_t>(y) * w + x;
      ix[i] = (p(x + 1, y - 1) + 2 * p(x + 1, y) + p(x + 1, y + 1) - p(x - 1, y - 1) - 2 * p(x - 1, y) -
               p(x - 1, y + 1)) / 8.f;
      iy[i] = (p(x - 1, y + 1) + 2 * p(x, y + 1) + p(x + 1, y + 1) - p(x - 1, y - 1) - 2 * p(x, y - 1) -
               p(x + 1, y - 1)) / 8.f;
    }
  std::vector<float> score(ix.size(), 0.f);
  float best = 0;
  for (int y = 2; y < h - 2; ++y)
    for (int x = 2; x < w - 2; ++x) {
      double a = 0, b = 0, c = 0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          std::size_t j = static_cast<std::size_t>(y + dy) * w + (x + dx);
          a += double(ix[j]) * ix[j];
          b += double(ix[j]) * iy[j];
          c += double(iy[j]) * iy[j];
        }
      double e = 0.5 * (a + c) - std::sqrt(0.25 * (a - c) * (a - c) + b * b);
      float s = static_cast<float>(std::max(0.0, e));
      score[static_cast<std::size_t>(y) * w + x] = s;
      best = std::max(best, s);
    }
  if (best <= 1e-6f) return {};
  const float floor_v = static_cast<float>(quality * best);
  struct Cand {
    float s;
    int x, y;
  };
  std::vector<Cand> cands;
  for (int y = 2; y < h - 2; ++y)
    for (int x = 2; x < w - 2; ++x) {
      float s = score[static_cast<std::size_t>(y) * w + x];
      if (s < floor_v || s <= 0) continue;
      bool is_max = true;
      for (int dy = -1; dy <= 1 && is_max; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
          if ((dx || dy) && score[static_cast<std::size_t>(y + dy) * w + (x + dx)] > s) {
            is_max = false;
            break;
          }
      if (is_max) cands.push_back({s, x, y});
    }
  std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) { return a.s > b.s; });

  // Spatial hash of accepted corners for the distance test.
  const double md = std::max(min_distance, 0.0);
  const int cell = std::max(1, static_cast<int>(std::ceil(md)));
  const int gw = (w + cell - 1) / cell, gh = (h + cell - 1) / cell;
  std::vector<std::vector<Point2>> grid(static_cast<std::size_t>(gw) * gh);
  std::vector<Point2> out;
  for (const auto& c : cands) {
    int cx = c.x / cell, cy = c.y / cell;
    bool ok = true;
    for (int gy = std::max(0, cy - 1); gy <= std::min(gh - 1, cy + 1) && ok; ++gy)
      for (int gx = std::max(0, cx - 1); gx <= std::min(gw - 1, cx + 1) && ok; ++gx)
        for (const auto& q : grid[static_cast<std::size_t>(gy) * gw + gx]) {
          double ddx = q.x - c.x, ddy = q.y - c.y;
          if (ddx * ddx + ddy * ddy < md * md) {
            ok = false;
            break;
          }
        }
    if (!ok) continue;
    Point2 pt{double(c.x), double(c.y)};
    out.push_back(pt);
    grid[static_cast<std::size_t>(cy) * gw + cx].push_back(pt);
    if (static_cast<int>(out.size()) >= max_corners) break;
  }
  return out;
}

std::vector<PointMatch> track_points(const GrayFrame& prev, const GrayFrame& cur, const std::vector<Point2>& points,
                                     const LkParams& params) {
  if (prev.width != cur.width || prev.height != cur.height) throw InvalidInput("track_points: frame size mismatch");
  Pyramid pp = build_pyramid(prev, params.levels, true);
  Pyramid pc = build_pyramid(cur, params.levels, false);
  std::vector<PointMatch> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(track_one(pp, pc, p, params));
  return out;
}

namespace {

RigidTransform fit_rigid(const std::vector<const PointMatch*>& pts, Point2 c) {
  double pmx = 0, pmy = 0, qmx = 0, qmy = 0;
  for (auto* m : pts) {
    pmx += m->from.x - c.x;
    pmy += m->from.y - c.y;
    qmx += m->to.x - c.x;
    qmy += m->to.y - c.y;
  }
  const double n = double(pts.size());
  pmx /= n;
  pmy /= n;
  qmx /= n;
  qmy /= n;
  double sc = 0, ss = 0;
  for (auto* m : pts) {
    double px = m->from.x - c.x - pmx, py = m->from.y - c.y - pmy;
    double qx = m->to.x - c.x - qmx, qy = m->to.y - c.y - qmy;
    sc += px * qx + py * qy;
    ss += px * qy - py * qx;
  }
  double ang = (sc == 0 && ss == 0) ? 0.0 : std::atan2(ss, sc);
  double ca = std::cos(ang), sa = std::sin(ang);
  return {qmx - (ca * pmx - sa * pmy), qmy - (sa * pmx + ca * pmy), ang};
}

double residual(const PointMatch& m, const RigidTransform& t, Point2 c) {
  double ca = std::cos(t.dangle), sa = std::sin(t.dangle);
  double px = m.from.x - c.x, py = m.from.y - c.y;
  double ex = ca * px - sa * py + c.x + t.dx - m.to.x;
  double ey = sa * px + ca * py + c.y + t.dy - m.to.y;
  return std::sqrt(ex * ex + ey * ey);
}

}  // namespace

TransformEstimate estimate_transform(const std::vector<PointMatch>& pairs, Point2 center) {
  std::vector<const PointMatch*> good;
  for (const auto& p : pairs)
    if (p.valid) good.push_back(&p);
  TransformEstimate est;
  if (good.size() < 3) {
    est.degraded = true;
    return est;
  }
  RigidTransform t = fit_rigid(good, center);
  std::vector<double> res(good.size());
  double ss = 0;
  for (std::size_t i = 0; i < good.size(); ++i) {
    res[i] = residual(*good[i], t, center);
    ss += res[i] * res[i];
  }
  const double sigma = std::sqrt(ss / double(good.size()));
  std::vector<const PointMatch*> inl;
  for (std::size_t i = 0; i < good.size(); ++i)
    if (res[i] <= 2 * sigma) inl.push_back(good[i]);
  if (inl.size() >= 3 && inl.size() < good.size()) t = fit_rigid(inl, center);
  else inl = good;
  est.transform = t;
  est.inliers = static_cast<int>(inl.size());
  return est;
}

ShakeVerdict classify_shaky(const std::vector<RigidTransform>& transforms, double accumulated_threshold,
                            double average_threshold) {
  if (transforms.empty()) throw InvalidInput("classify_shaky: empty transform sequence");
  ShakeVerdict v;
  for (const auto& t : transforms) v.accumulated += std::abs(t.dx) + std::abs(t.dy);
  v.average = v.accumulated / double(transforms.size());
  v.is_shaky = v.accumulated > accumulated_threshold && v.average > average_threshold;
  return v;
}

Trajectory cumulative_trajectory(const std::vector<RigidTransform>& transforms) {
  Trajectory t;
  t.x.assign(1, 0.0);
  t.y.assign(1, 0.0);
  t.a.assign(1, 0.0);
  for (const auto& r : transforms) {
    t.x.push_back(t.x.back() + r.dx);
    t.y.push_back(t.y.back() + r.dy);
    t.a.push_back(t.a.back() + r.dangle);
  }
  return t;
}

std::vector<double> smooth_signal(const std::vector<double>& v, int window, double alpha) {
  const std::size_t n = v.size();
  if (n == 0) return {};
  if (window < 1) throw InvalidInput("smooth_signal: window must be >= 1");
  if (alpha < 0 || alpha >= 1) throw InvalidInput("smooth_signal: alpha must be in [0,1)");
  // Full-width window everywhere; samples beyond either end repeat the end value.
  const long half = window / 2, len = static_cast<long>(n);
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + v[i];
  std::vector<double> ma(n);
  for (long i = 0; i < len; ++i) {
    long lo = i - half, hi = i + half;
    double s = prefix[static_cast<std::size_t>(std::min(hi, len - 1) + 1)] - prefix[static_cast<std::size_t>(std::max(lo, 0L))];
    if (lo < 0) s += double(-lo) * v.front();
    if (hi > len - 1) s += double(hi - (len - 1)) * v.back();
    ma[static_cast<std::size_t>(i)] = s / double(2 * half + 1);
  }
  std::vector<double> fwd(n);
  fwd[0] = ma[0];
  for (std::size_t i = 1; i < n; ++i) fwd[i] = alpha * fwd[i - 1] + (1 - alpha) * ma[i];
  std::vector<double> out(n);
  out[n - 1] = fwd[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) out[i] = alpha * out[i + 1] + (1 - alpha) * fwd[i];
  return out;
}

Trajectory smooth_trajectory(const Trajectory& t, int window, double alpha) {
  return {smooth_signal(t.x, window, alpha), smooth_signal(t.y, window, alpha), smooth_signal(t.a, window, alpha)};
}

GrayFrame warp_rigid(const GrayFrame& src, const RigidTransform& t, Point2 c) {
  GrayFrame out(src.width, src.height);
  out.frame_index = src.frame_index;
  out.timestamp = src.timestamp;
  const double ca = std::cos(t.dangle), sa = std::sin(t.dangle);
  const bool pure_shift = t.dangle == 0.0;
  for (int y = 0; y < src.height; ++y)
    for (int x = 0; x < src.width; ++x) {
      // Inverse map: p_src = R^-1 (p_out - c - d) + c.
      double qx = x - c.x - t.dx, qy = y - c.y - t.dy;
      double sx = pure_shift ? qx + c.x : ca * qx + sa * qy + c.x;
      double sy = pure_shift ? qy + c.y : -sa * qx + ca * qy + c.y;
      out.at(x, y) = static_cast<std::uint8_t>(std::lround(sample_bilinear(src, sx, sy)));
    }
  return out;
}

FrameSequence smooth_and_correct(const FrameSequence& frames, const std::vector<RigidTransform>& transforms, int window,
                                 double alpha) {
  if (frames.empty()) return frames;
  if (transforms.size() + 1 != frames.size())
    throw InvalidInput("smooth_and_correct: need exactly one transform per consecutive frame pair");
  Trajectory raw = cumulative_trajectory(transforms);
  Trajectory sm = smooth_trajectory(raw, window, alpha);
  FrameSequence out;
  out.fps = frames.fps;
  out.frames.reserve(frames.size());
  const auto& f0 = frames.frames.front();
  const Point2 c{(f0.width - 1) / 2.0, (f0.height - 1) / 2.0};
  for (std::size_t i = 0; i < frames.size(); ++i) {
    RigidTransform corr{sm.x[i] - raw.x[i], sm.y[i] - raw.y[i], sm.a[i] - raw.a[i]};
    if (corr.dx == 0 && corr.dy == 0 && corr.dangle == 0)
      out.frames.push_back(frames.frames[i]);
    else
      out.frames.push_back(warp_rigid(frames.frames[i], corr, c));
  }
  return out;
}

MotionEstimate estimate_motion(const FrameSequence& frames, const StabilizationParams& params) {
  MotionEstimate est;
  if (frames.size() < 2) return est;
  const auto& f0 = frames.frames.front();
  const Point2 c{(f0.width - 1) / 2.0, (f0.height - 1) / 2.0};
  Pyramid prev = build_pyramid(f0, params.lk.levels, true);
  std::vector<Point2> pts;
  for (std::size_t i = 1; i < frames.size(); ++i) {
    if ((i - 1) % static_cast<std::size_t>(std::max(1, params.redetect_interval)) == 0 ||
        static_cast<int>(pts.size()) < params.min_tracked)
      pts = detect_corners(frames.frames[i - 1], params.max_corners, params.quality, params.min_distance);
    Pyramid cur = build_pyramid(frames.frames[i], params.lk.levels, true);
    std::vector<PointMatch> matches;
    matches.reserve(pts.size());
    for (const auto& p : pts) matches.push_back(track_one(prev, cur, p, params.lk));
    TransformEstimate te = estimate_transform(matches, c);
    if (te.degraded) ++est.degraded_frames;
    est.transforms.push_back(te.transform);
    pts.clear();
    for (const auto& m : matches)
      if (m.valid) pts.push_back(m.to);
    prev = std::move(cur);
  }
  return est;
}

StabilizationResult stabilize(FrameSequence& frames, const StabilizationParams& params) {
  StabilizationResult r;
  if (frames.size() < 2) return r;
  MotionEstimate me = estimate_motion(frames, params);
  r.transforms = std::move(me.transforms);
  r.degraded_frames = me.degraded_frames;
  r.verdict = classify_shaky(r.transforms, params.shake_accumulated, params.shake_average);
  if (r.verdict.is_shaky || params.force) {
    frames = smooth_and_correct(frames, r.transforms, params.smooth_window, params.smooth_alpha);
    r.applied = true;
  }
  return r;
}

void write_transform_log(std::ostream& out, const std::vector<RigidTransform>& transforms) {
  double acc = 0;
  char buf[160];
  for (std::size_t i = 0; i < transforms.size(); ++i) {
    const auto& t = transforms[i];
    acc += std::abs(t.dx) + std::abs(t.dy);
    std::snprintf(buf, sizeof buf, "%zu %.6f %.6f %.8f %.6f\n", i + 1, t.dx, t.dy, t.dangle, acc);
    out << buf;
  }
}

}  // namespace tad
