#include "tad/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace tad {

namespace {

void require_same_shape(const GrayFrame& a, const GrayFrame& b, const char* who) {
  if (a.empty() || b.empty()) throw InvalidInput(std::string(who) + ": empty image");
  if (a.width != b.width || a.height != b.height) throw InvalidInput(std::string(who) + ": dimension mismatch");
}

double ssim_formula(double ma, double mb, double vaa, double vbb, double vab) {
  return ((2 * ma * mb + kSsimC1) * (2 * vab + kSsimC2)) / ((ma * ma + mb * mb + kSsimC1) * (vaa + vbb + kSsimC2));
}

}  // namespace

std::vector<double> gaussian_kernel(int size, double sigma) {
  std::vector<double> k(size);
  const double c = (size - 1) / 2.0;
  for (int i = 0; i < size; ++i) k[i] = std::exp(-((i - c) * (i - c)) / (2 * sigma * sigma));
  double s = std::accumulate(k.begin(), k.end(), 0.0);
  for (double& v : k) v /= s;
  return k;
}

SsimMap ssim_map(const GrayFrame& a, const GrayFrame& b) {
  require_same_shape(a, b, "ssim");
  const int w = a.width, h = a.height;
  SsimMap out;
  if (w < kSsimWindow || h < kSsimWindow) {
    const double n = double(w) * h;
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
      ma += a.data[i];
      mb += b.data[i];
    }
    ma /= n;
    mb /= n;
    double vaa = 0, vbb = 0, vab = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
      double da = a.data[i] - ma, db = b.data[i] - mb;
      vaa += da * da;
      vbb += db * db;
      vab += da * db;
    }
    out.width = out.height = 1;
    out.window = std::max(w, h);
    out.values = {ssim_formula(ma, mb, vaa / n, vbb / n, vab / n)};
    return out;
  }

  static const std::vector<double> g = gaussian_kernel(kSsimWindow, kSsimSigma);
  const int ow = w - kSsimWindow + 1, oh = h - kSsimWindow + 1;
  // Horizontal pass over all rows for the five moment images, then vertical pass.
  const std::size_t hsz = static_cast<std::size_t>(ow) * h;
  std::vector<std::array<double, 5>> hp(hsz);
  for (int y = 0; y < h; ++y) {
    const std::uint8_t* ra = a.data.data() + static_cast<std::size_t>(y) * w;
    const std::uint8_t* rb = b.data.data() + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < ow; ++x) {
      std::array<double, 5> s{};
      for (int k = 0; k < kSsimWindow; ++k) {
        double va = ra[x + k], vb = rb[x + k], gk = g[k];
        s[0] += gk * va;
        s[1] += gk * vb;
        s[2] += gk * va * va;
        s[3] += gk * vb * vb;
        s[4] += gk * va * vb;
      }
      hp[static_cast<std::size_t>(y) * ow + x] = s;
    }
  }
  out.width = ow;
  out.height = oh;
  out.values.resize(static_cast<std::size_t>(ow) * oh);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      std::array<double, 5> s{};
      for (int k = 0; k < kSsimWindow; ++k) {
        const auto& p = hp[static_cast<std::size_t>(y + k) * ow + x];
        for (int c = 0; c < 5; ++c) s[c] += g[k] * p[c];
      }
      double ma = s[0], mb = s[1];
      out.values[static_cast<std::size_t>(y) * ow + x] =
          ssim_formula(ma, mb, s[2] - ma * ma, s[3] - mb * mb, s[4] - ma * mb);
    }
  }
  return out;
}

double ssim(const GrayFrame& a, const GrayFrame& b) {
  SsimMap m = ssim_map(a, b);
  return std::accumulate(m.values.begin(), m.values.end(), 0.0) / static_cast<double>(m.values.size());
}

double mse(const GrayFrame& a, const GrayFrame& b) {
  require_same_shape(a, b, "mse");
  double s = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    double d = double(a.data[i]) - double(b.data[i]);
    s += d * d;
  }
  return s / static_cast<double>(a.data.size());
}

double psnr(const GrayFrame& a, const GrayFrame& b) {
  require_same_shape(a, b, "psnr");
  double e = mse(a, b);
  if (e == 0.0) return kPsnrMax;
  return 10.0 * std::log10(255.0 * 255.0 / e);
}

double color_hist_similarity(const GrayFrame& a, const GrayFrame& b) {
  if (a.empty() || b.empty()) throw InvalidInput("color_hist_similarity: empty image");
  std::array<std::size_t, 256> ha{}, hb{};
  for (auto v : a.data) ++ha[v];
  for (auto v : b.data) ++hb[v];
  const double na = double(a.data.size()), nb = double(b.data.size());
  double s = 0;
  for (int i = 0; i < 256; ++i) s += std::min(ha[i] / na, hb[i] / nb);
  return std::min(1.0, s);
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  double inter = intersection_area(a, b);
  if (inter <= 0) return 0.0;
  double uni = a.area() + b.area() - inter;
  return uni > 0 ? std::min(1.0, inter / uni) : 0.0;
}

double containment(const BoundingBox& a, const BoundingBox& b) {
  double inter = intersection_area(a, b);
  double small = std::min(a.area(), b.area());
  return small > 0 ? std::min(1.0, inter / small) : 0.0;
}

std::vector<ScoredBox> nms(std::vector<ScoredBox> boxes, double iou_threshold) {
  if (iou_threshold < 0 || iou_threshold > 1) throw InvalidInput("nms: threshold outside [0,1]");
  std::stable_sort(boxes.begin(), boxes.end(), [](const ScoredBox& l, const ScoredBox& r) { return l.score > r.score; });
  std::vector<ScoredBox> kept;
  for (const auto& b : boxes) {
    bool keep = std::none_of(kept.begin(), kept.end(),
                             [&](const ScoredBox& k) { return iou(k.box, b.box) > iou_threshold; });
    if (keep) kept.push_back(b);
  }
  return kept;
}

}  // namespace tad
