#include "tad/image.hpp"

#include <algorithm>
#include <cmath>

namespace tad {

GrayFrame::GrayFrame(int w, int h, std::uint8_t fill) : width(w), height(h) {
  if (w < 0 || h < 0) throw InvalidInput("GrayFrame: negative dimensions");
  data.assign(static_cast<std::size_t>(w) * h, fill);
}

std::size_t FrameSequence::index_at(double t) const {
  if (frames.empty()) throw InvalidInput("FrameSequence::index_at: empty sequence");
  // Frames are uniformly spaced; a small epsilon absorbs float noise when t sits on a frame.
  double pos = std::floor(t * fps + 1e-6);
  if (pos < 0) return 0;
  auto idx = static_cast<std::size_t>(pos);
  return std::min(idx, frames.size() - 1);
}

BoundingBox BoundingBox::clipped(int w, int h) const {
  return {std::clamp(x_min, 0.0, double(w)), std::clamp(y_min, 0.0, double(h)), std::clamp(x_max, 0.0, double(w)),
          std::clamp(y_max, 0.0, double(h))};
}

BoundingBox box_union(const BoundingBox& a, const BoundingBox& b) {
  return {std::min(a.x_min, b.x_min), std::min(a.y_min, b.y_min), std::max(a.x_max, b.x_max),
          std::max(a.y_max, b.y_max)};
}

double intersection_area(const BoundingBox& a, const BoundingBox& b) {
  double w = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  double h = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  return (w > 0 && h > 0) ? w * h : 0.0;
}

PixelRect pixel_rect(const BoundingBox& box, int w, int h) {
  PixelRect r;
  r.x0 = std::clamp(static_cast<int>(std::floor(box.x_min)), 0, w);
  r.y0 = std::clamp(static_cast<int>(std::floor(box.y_min)), 0, h);
  r.x1 = std::clamp(static_cast<int>(std::ceil(box.x_max)), 0, w);
  r.y1 = std::clamp(static_cast<int>(std::ceil(box.y_max)), 0, h);
  return r;
}

BinaryMask::BinaryMask(int w, int h, bool value) : width(w), height(h) {
  if (w < 0 || h < 0) throw InvalidInput("BinaryMask: negative dimensions");
  data.assign(static_cast<std::size_t>(w) * h, value ? 1 : 0);
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count_if(data.begin(), data.end(), [](std::uint8_t v) { return v != 0; }));
}

void BinaryMask::paint(const BoundingBox& box) {
  PixelRect r = pixel_rect(box, width, height);
  for (int y = r.y0; y < r.y1; ++y)
    std::fill(data.begin() + static_cast<std::ptrdiff_t>(y) * width + r.x0,
              data.begin() + static_cast<std::ptrdiff_t>(y) * width + r.x1, 1);
}

BinaryMask mask_or(const BinaryMask& a, const BinaryMask& b) {
  if (!a.same_shape(b)) throw InvalidInput("mask_or: dimension mismatch");
  BinaryMask out(a.width, a.height);
  for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = (a.data[i] | b.data[i]) ? 1 : 0;
  return out;
}

namespace {

// Separable square-kernel min/max filter. Out-of-image pixels are skipped.
BinaryMask morph(const BinaryMask& m, int ksize, bool is_dilate) {
  if (ksize < 1 || ksize % 2 == 0) throw InvalidInput("morphology: kernel size must be odd and >= 1");
  const int r = ksize / 2;
  const int w = m.width, h = m.height;
  BinaryMask tmp(w, h), out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool v = !is_dilate;
      for (int k = std::max(0, x - r); k <= std::min(w - 1, x + r); ++k) {
        bool p = m.data[static_cast<std::size_t>(y) * w + k] != 0;
        if (is_dilate ? p : !p) {
          v = is_dilate;
          break;
        }
      }
      tmp.data[static_cast<std::size_t>(y) * w + x] = v;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool v = !is_dilate;
      for (int k = std::max(0, y - r); k <= std::min(h - 1, y + r); ++k) {
        bool p = tmp.data[static_cast<std::size_t>(k) * w + x] != 0;
        if (is_dilate ? p : !p) {
          v = is_dilate;
          break;
        }
      }
      out.data[static_cast<std::size_t>(y) * w + x] = v;
    }
  }
  return out;
}

}  // namespace

BinaryMask dilate(const BinaryMask& m, int ksize) { return morph(m, ksize, true); }
BinaryMask erode(const BinaryMask& m, int ksize) { return morph(m, ksize, false); }
BinaryMask morph_close(const BinaryMask& m, int ksize) { return erode(dilate(m, ksize), ksize); }
BinaryMask morph_open(const BinaryMask& m, int ksize) { return dilate(erode(m, ksize), ksize); }

std::vector<Component> connected_components(const BinaryMask& m, std::vector<int>* labels) {
  const int w = m.width, h = m.height;
  std::vector<int> lab(static_cast<std::size_t>(w) * h, -1);
  std::vector<Component> comps;
  std::vector<int> stack;
  for (int y0 = 0; y0 < h; ++y0) {
    for (int x0 = 0; x0 < w; ++x0) {
      std::size_t i0 = static_cast<std::size_t>(y0) * w + x0;
      if (!m.data[i0] || lab[i0] >= 0) continue;
      int id = static_cast<int>(comps.size());
      int minx = x0, maxx = x0, miny = y0, maxy = y0, area = 0;
      lab[i0] = id;
      stack.assign(1, static_cast<int>(i0));
      while (!stack.empty()) {
        int p = stack.back();
        stack.pop_back();
        int px = p % w, py = p / w;
        ++area;
        minx = std::min(minx, px);
        maxx = std::max(maxx, px);
        miny = std::min(miny, py);
        maxy = std::max(maxy, py);
        for (int dy = -1; dy <= 1; ++dy) {
          int ny = py + dy;
          if (ny < 0 || ny >= h) continue;
          for (int dx = -1; dx <= 1; ++dx) {
            int nx = px + dx;
            if (nx < 0 || nx >= w || (dx == 0 && dy == 0)) continue;
            std::size_t ni = static_cast<std::size_t>(ny) * w + nx;
            if (m.data[ni] && lab[ni] < 0) {
              lab[ni] = id;
              stack.push_back(static_cast<int>(ni));
            }
          }
        }
      }
      comps.push_back({BoundingBox{double(minx), double(miny), double(maxx + 1), double(maxy + 1)}, area});
    }
  }
  if (labels) *labels = std::move(lab);
  return comps;
}

double sample_bilinear(const GrayFrame& src, double x, double y) {
  x = std::clamp(x, 0.0, double(src.width - 1));
  y = std::clamp(y, 0.0, double(src.height - 1));
  int x0 = static_cast<int>(x), y0 = static_cast<int>(y);
  int x1 = std::min(x0 + 1, src.width - 1), y1 = std::min(y0 + 1, src.height - 1);
  double fx = x - x0, fy = y - y0;
  double top = src.at(x0, y0) * (1 - fx) + src.at(x1, y0) * fx;
  double bot = src.at(x0, y1) * (1 - fx) + src.at(x1, y1) * fx;
  return top * (1 - fy) + bot * fy;
}

GrayFrame crop_resample(const GrayFrame& src, const BoundingBox& box, int out_w, int out_h) {
  if (src.empty()) throw InvalidInput("crop_resample: empty source");
  if (!box.valid()) throw InvalidInput("crop_resample: invalid box");
  if (out_w < 1 || out_h < 1) throw InvalidInput("crop_resample: invalid output size");
  GrayFrame out(out_w, out_h);
  out.frame_index = src.frame_index;
  out.timestamp = src.timestamp;
  const double sx = box.width() / out_w, sy = box.height() / out_h;
  for (int y = 0; y < out_h; ++y) {
    // Pixel centres: output pixel (x,y) covers box-relative [x*sx, (x+1)*sx).
    double fy = box.y_min + (y + 0.5) * sy - 0.5;
    for (int x = 0; x < out_w; ++x) {
      double fx = box.x_min + (x + 0.5) * sx - 0.5;
      out.at(x, y) = static_cast<std::uint8_t>(std::lround(sample_bilinear(src, fx, fy)));
    }
  }
  return out;
}

GrayFrame crop(const GrayFrame& src, const PixelRect& rect) {
  PixelRect r{std::clamp(rect.x0, 0, src.width), std::clamp(rect.y0, 0, src.height), std::clamp(rect.x1, 0, src.width),
              std::clamp(rect.y1, 0, src.height)};
  if (r.empty()) throw InvalidInput("crop: empty region");
  GrayFrame out(r.x1 - r.x0, r.y1 - r.y0);
  out.frame_index = src.frame_index;
  out.timestamp = src.timestamp;
  for (int y = r.y0; y < r.y1; ++y)
    std::copy_n(src.data.begin() + static_cast<std::ptrdiff_t>(y) * src.width + r.x0, out.width,
                out.data.begin() + static_cast<std::ptrdiff_t>(y - r.y0) * out.width);
  return out;
}

std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  double v = 0.299 * r + 0.587 * g + 0.114 * b;
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace tad
