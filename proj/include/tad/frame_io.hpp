#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tad/image.hpp"

namespace tad {

namespace fs = std::filesystem;

/// Raised for unreadable or malformed input files. `line` is 1-based (0 when the
/// error is not tied to a line).
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line = 0);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

GrayFrame read_pgm(const fs::path& path);
void write_pgm(const fs::path& path, const GrayFrame& frame);

/// Reads gray, gray+alpha, RGB, RGBA or palette PNGs; colour is converted to luma.
GrayFrame read_png(const fs::path& path);
void write_png(const fs::path& path, const GrayFrame& frame);

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // interleaved RGB
};
void write_png_rgb(const fs::path& path, const RgbImage& image);

/// Masks are written 0/255 for PGM and as a 1-bit PNG; reading accepts either and
/// thresholds at 128.
void write_mask(const fs::path& path, const BinaryMask& mask);
BinaryMask read_mask(const fs::path& path);

/// PNG or PGM chosen by extension.
GrayFrame read_image(const fs::path& path);
void write_image(const fs::path& path, const GrayFrame& frame);

/// Reads every *.png / *.pgm in a directory, ordered by the first integer found
/// in the file name (lexicographic as tie-break). Frame indices and timestamps
/// are assigned from that order.
FrameSequence read_frame_dir(const fs::path& dir, double fps);

/// Raw planar 8-bit frames: `<stem>.raw` holds frames back to back and
/// `<stem>.json` holds {"width", "height", "fps"}. `raw_path` names the .raw file.
FrameSequence read_raw(const fs::path& raw_path);
void write_raw(const fs::path& raw_path, const FrameSequence& seq);

/// Dispatch on the path: a directory, a .raw file, or a .json sidecar.
FrameSequence read_frames(const fs::path& path, double fps_hint = 30.0);

/// Writes numbered frames `frame_000000.<ext>` into dir.
void write_frame_dir(const fs::path& dir, const FrameSequence& seq, const std::string& ext = "png");

}  // namespace tad
