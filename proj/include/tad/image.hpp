#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tad {

/// Raised when an operation receives arguments that violate its preconditions
/// (mismatched dimensions, empty inputs, inverted boxes, ...).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// 8-bit single-channel image with its position on the video timeline.
struct GrayFrame {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // row-major, width * height
  std::int64_t frame_index = 0;
  double timestamp = 0.0;  // seconds, frame_index / fps

  GrayFrame() = default;
  GrayFrame(int w, int h, std::uint8_t fill = 0);

  bool empty() const { return width <= 0 || height <= 0; }
  std::size_t size() const { return data.size(); }

  std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }

  std::span<const std::uint8_t> row(int y) const {
    return {data.data() + static_cast<std::size_t>(y) * width, static_cast<std::size_t>(width)};
  }
  std::span<std::uint8_t> row(int y) {
    return {data.data() + static_cast<std::size_t>(y) * width, static_cast<std::size_t>(width)};
  }
};

struct FrameSequence {
  double fps = 30.0;
  std::vector<GrayFrame> frames;

  std::size_t size() const { return frames.size(); }
  bool empty() const { return frames.empty(); }
  double duration() const { return fps > 0 ? static_cast<double>(frames.size()) / fps : 0.0; }
  /// Index of the last frame whose timestamp is <= t (clamped to the sequence).
  std::size_t index_at(double t) const;
};

/// Axis-aligned box in pixel coordinates. Covers pixels x_min <= x < x_max and
/// y_min <= y < y_max; geometry (area, IoU) uses the continuous extents.
struct BoundingBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() > 0 && height() > 0 ? width() * height() : 0.0; }
  double center_x() const { return 0.5 * (x_min + x_max); }
  double center_y() const { return 0.5 * (y_min + y_max); }
  bool valid() const { return x_min < x_max && y_min < y_max; }

  BoundingBox translated(double dx, double dy) const { return {x_min + dx, y_min + dy, x_max + dx, y_max + dy}; }
  BoundingBox expanded(double margin) const {
    return {x_min - margin, y_min - margin, x_max + margin, y_max + margin};
  }
  /// Clip to [0,w) x [0,h); may return an invalid box when fully outside.
  BoundingBox clipped(int w, int h) const;

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

BoundingBox box_union(const BoundingBox& a, const BoundingBox& b);
double intersection_area(const BoundingBox& a, const BoundingBox& b);

struct ScoredBox {
  BoundingBox box;
  double score = 0.0;  // [0,1]
  int class_id = 0;
};

/// Integer pixel span covered by a box, clipped to an image of size w x h.
struct PixelRect {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // half-open
  bool empty() const { return x1 <= x0 || y1 <= y0; }
  int area() const { return empty() ? 0 : (x1 - x0) * (y1 - y0); }
};
PixelRect pixel_rect(const BoundingBox& box, int w, int h);

/// Binary image (0/1 per pixel).
struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  BinaryMask() = default;
  BinaryMask(int w, int h, bool value = false);

  bool at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x] != 0; }
  void set(int x, int y, bool v) { data[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }
  std::size_t count() const;
  bool empty_mask() const { return count() == 0; }
  /// Mark every pixel covered by the box.
  void paint(const BoundingBox& box);
  bool same_shape(const BinaryMask& o) const { return width == o.width && height == o.height; }
  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;
};

BinaryMask mask_or(const BinaryMask& a, const BinaryMask& b);
BinaryMask dilate(const BinaryMask& m, int ksize);
BinaryMask erode(const BinaryMask& m, int ksize);
BinaryMask morph_close(const BinaryMask& m, int ksize);
BinaryMask morph_open(const BinaryMask& m, int ksize);

struct Component {
  BoundingBox box;
  int area = 0;  // pixel count
};

/// 8-connected components of the set pixels, in raster order of their first pixel.
/// When `labels` is non-null it receives a per-pixel component id (-1 for unset).
std::vector<Component> connected_components(const BinaryMask& m, std::vector<int>* labels = nullptr);

/// Resample the box region of `src` to an out_w x out_h image with bilinear
/// interpolation and replicated borders.
GrayFrame crop_resample(const GrayFrame& src, const BoundingBox& box, int out_w, int out_h);

/// Integer crop (clipped to the frame), no resampling.
GrayFrame crop(const GrayFrame& src, const PixelRect& rect);

/// Bilinear sample with replicated borders.
double sample_bilinear(const GrayFrame& src, double x, double y);

/// Luma conversion with weights 0.299/0.587/0.114.
std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b);

}  // namespace tad
