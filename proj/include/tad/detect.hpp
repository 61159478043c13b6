#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "tad/image.hpp"

namespace tad {

struct DetectionRecord {
  std::string video_id;
  std::int64_t frame_index = 0;
  BoundingBox box;
  double score = 0.0;
  std::string source;

  friend bool operator==(const DetectionRecord&, const DetectionRecord&) = default;
};

/// Detections grouped by frame, frames ascending. Within a frame records keep
/// their input order.
struct DetectionStream {
  std::map<std::int64_t, std::vector<DetectionRecord>> by_frame;

  void add(DetectionRecord r) {
    auto f = r.frame_index;
    by_frame[f].push_back(std::move(r));
  }
  std::size_t size() const;
  bool empty() const { return by_frame.empty(); }
  const std::vector<DetectionRecord>* frame(std::int64_t f) const {
    auto it = by_frame.find(f);
    return it == by_frame.end() ? nullptr : &it->second;
  }
  friend bool operator==(const DetectionStream&, const DetectionStream&) = default;
};

/// Tab-separated: video_id frame x_min y_min x_max y_max score source.
/// Blank lines and lines starting with '#' are skipped. Throws ParseError naming
/// the offending line.
DetectionStream parse_detections(std::istream& in);
DetectionStream read_detections(const std::filesystem::path& path);
void write_detections(std::ostream& out, const DetectionStream& stream);
void write_detections(const std::filesystem::path& path, const DetectionStream& stream);

/// Per-frame union of both streams followed by NMS.
DetectionStream fuse_detectors(const DetectionStream& a, const DetectionStream& b, double nms_threshold = 0.8);

/// Changed-pixel blobs between a background frame and the reference background.
std::vector<ScoredBox> blob_detect(const GrayFrame& background, const GrayFrame& reference, int diff_threshold = 30,
                                   int min_area = 64);

/// Blobs of a binary mask (e.g. per-frame foreground labels), same scoring rule.
std::vector<ScoredBox> mask_blobs(const BinaryMask& mask, int min_area = 64);

}  // namespace tad
