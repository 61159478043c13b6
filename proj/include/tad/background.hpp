#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "tad/image.hpp"

namespace tad {

struct MogParams {
  int components = 5;            // K, at most kMaxComponents
  double alpha = 0.002;          // learning rate
  double bg_threshold = 0.9;     // cumulative weight defining the background set
  double match_sigma = 2.5;      // match gate in standard deviations
  double init_variance = 225.0;  // variance of a freshly created component
  double variance_floor = 4.0;
  bool warmup = true;  // rate max(alpha, 1/(n+1)), n = frames already seen
};

inline constexpr int kMaxComponents = 8;

/// Mixture at one pixel; the first `count` entries are live and sorted by
/// weight/sigma descending.
struct PixelMixture {
  std::array<double, kMaxComponents> weight{};
  std::array<double, kMaxComponents> mean{};
  std::array<double, kMaxComponents> variance{};
  int count = 0;
  double total_weight() const;
};

/// One MOG step with an explicit learning rate. Returns true when the value is
/// foreground, i.e. it matches no component of the background set as it stood
/// before the update.
bool update_pixel(PixelMixture& m, double value, const MogParams& params, double learning_rate);

/// Index of the heaviest component within the background set (0 if empty).
int heaviest_background_component(const PixelMixture& m, double bg_threshold);

/// Whole-frame model with structure-of-arrays storage.
class MogModel {
 public:
  MogModel(int width, int height, const MogParams& params = {});

  /// Updates every pixel; when fg is non-null it receives 0/1 labels.
  void apply(const GrayFrame& frame, std::vector<std::uint8_t>* fg = nullptr);
  GrayFrame background() const;
  /// Learning rate used for the (n+1)-th frame.
  double rate_for(std::int64_t n) const;
  /// Updates rows [y0, y1) only; `fg_rows` (optional) receives their labels.
  void apply_rows(const GrayFrame& frame, int y0, int y1, double rate, std::uint8_t* fg_rows);
  void background_rows(GrayFrame& out, int y0, int y1) const;
  void set_frames_seen(std::int64_t n) { n_ = n; }
  PixelMixture pixel(int x, int y) const;
  std::int64_t frames_seen() const { return n_; }
  double current_rate() const;

 private:
  int w_, h_, k_;
  MogParams p_;
  std::int64_t n_ = 0;
  std::vector<float> weight_, mean_, var_;  // pixel-major, k_ entries per pixel
  std::vector<std::uint8_t> count_;
};

enum class Direction { forward, backward };
std::string to_string(Direction d);
Direction parse_direction(const std::string& s);

struct BackgroundSequence {
  std::vector<GrayFrame> frames;  // frame_index / timestamp refer to the original timeline
  int sample_interval = 120;
  Direction direction = Direction::forward;

  /// Latest sample with timestamp <= t on the original timeline (nullptr if none).
  const GrayFrame* at_or_before(double t) const;
  /// Earliest sample with timestamp >= t (nullptr if none).
  const GrayFrame* at_or_after(double t) const;
};

/// Per-frame foreground labels packed one bit per pixel.
class ForegroundHistory {
 public:
  ForegroundHistory() = default;
  ForegroundHistory(int width, int height) : w_(width), h_(height), words_((width + 63) / 64) {}

  void push(const std::vector<std::uint8_t>& labels);
  void reverse();
  std::size_t size() const { return frames_.size(); }
  bool at(std::size_t frame, int x, int y) const;
  std::size_t count_rect(std::size_t frame, const PixelRect& r) const;
  BinaryMask mask(std::size_t frame) const;
  // Packed rows, words_per_row() 64-bit words each; used for persistence.
  const std::vector<std::uint64_t>& words(std::size_t frame) const { return frames_.at(frame); }
  void push_words(std::vector<std::uint64_t> bits);
  /// Grows to n cleared frames; set_row fills one row of one frame from 0/1 labels.
  void resize(std::size_t n) { frames_.resize(n, std::vector<std::uint64_t>(words_ * h_, 0)); }
  void set_row(std::size_t frame, int y, const std::uint8_t* labels);
  std::size_t words_per_row() const { return words_; }
  int width() const { return w_; }
  int height() const { return h_; }

 private:
  int w_ = 0, h_ = 0;
  std::size_t words_ = 0;  // per row
  std::vector<std::vector<std::uint64_t>> frames_;
};

/// Runs the model over the sequence in the requested direction and emits a
/// background image each time another `sample_interval` frames have been
/// processed. Foreground labels of every processed frame are stored in `fg`
/// (original frame order) when it is non-null.
BackgroundSequence model_background(const FrameSequence& frames, Direction direction, int sample_interval,
                                    const MogParams& params = {}, ForegroundHistory* fg = nullptr);

}  // namespace tad
