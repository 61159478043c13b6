#include "tad/detect.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "tad/frame_io.hpp"
#include "tad/metrics.hpp"

namespace tad {

std::size_t DetectionStream::size() const {
  std::size_t n = 0;
  for (const auto& [f, v] : by_frame) n += v.size();
  return n;
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t p = line.find('\t', start);
    out.push_back(line.substr(start, p == std::string::npos ? std::string::npos : p - start));
    if (p == std::string::npos) break;
    start = p + 1;
  }
  return out;
}

template <class T>
bool parse_num(const std::string& s, T& v) {
  const char* b = s.data();
  const char* e = b + s.size();
  auto r = std::from_chars(b, e, v);
  return r.ec == std::errc() && r.ptr == e;
}

std::string fmt_double(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace

DetectionStream parse_detections(std::istream& in) {
  DetectionStream s;
  std::string line;
  std::size_t ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto f = split_tabs(line);
    if (f.size() != 8) throw ParseError("detections: expected 8 tab-separated fields, got " + std::to_string(f.size()), ln);
    DetectionRecord r;
    r.video_id = f[0];
    if (r.video_id.empty()) throw ParseError("detections: empty video_id", ln);
    if (!parse_num(f[1], r.frame_index) || r.frame_index < 0) throw ParseError("detections: bad frame index '" + f[1] + "'", ln);
    double* coords[4] = {&r.box.x_min, &r.box.y_min, &r.box.x_max, &r.box.y_max};
    for (int i = 0; i < 4; ++i)
      if (!parse_num(f[2 + i], *coords[i]) || !std::isfinite(*coords[i]))
        throw ParseError("detections: bad coordinate '" + f[2 + i] + "'", ln);
    if (!(r.box.x_min < r.box.x_max) || !(r.box.y_min < r.box.y_max))
      throw ParseError("detections: box must satisfy x_min < x_max and y_min < y_max", ln);
    if (r.box.x_min < 0 || r.box.y_min < 0) throw ParseError("detections: negative box coordinate", ln);
    if (!parse_num(f[6], r.score) || !(r.score >= 0 && r.score <= 1))
      throw ParseError("detections: score must be a number in [0,1], got '" + f[6] + "'", ln);
    r.source = f[7];
    s.add(std::move(r));
  }
  return s;
}

DetectionStream read_detections(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open detection file " + path.string());
  try {
    return parse_detections(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_detections(std::ostream& out, const DetectionStream& stream) {
  for (const auto& [frame, recs] : stream.by_frame)
    for (const auto& r : recs)
      out << r.video_id << '\t' << r.frame_index << '\t' << fmt_double(r.box.x_min) << '\t' << fmt_double(r.box.y_min)
          << '\t' << fmt_double(r.box.x_max) << '\t' << fmt_double(r.box.y_max) << '\t' << fmt_double(r.score) << '\t'
          << r.source << '\n';
}

void write_detections(const std::filesystem::path& path, const DetectionStream& stream) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_detections(out, stream);
}

DetectionStream fuse_detectors(const DetectionStream& a, const DetectionStream& b, double nms_threshold) {
  DetectionStream merged;
  for (const auto* s : {&a, &b})
    for (const auto& [f, recs] : s->by_frame)
      for (const auto& r : recs) merged.add(r);
  DetectionStream out;
  for (const auto& [f, recs] : merged.by_frame) {
    std::vector<ScoredBox> boxes;
    boxes.reserve(recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) boxes.push_back({recs[i].box, recs[i].score, static_cast<int>(i)});
    // class_id carries the record index through NMS.
    for (const auto& k : nms(boxes, nms_threshold)) out.add(recs[static_cast<std::size_t>(k.class_id)]);
  }
  return out;
}

std::vector<ScoredBox> mask_blobs(const BinaryMask& mask, int min_area) {
  std::vector<ScoredBox> out;
  const double full = 4.0 * min_area;
  for (const auto& c : connected_components(mask))
    if (c.area >= min_area) out.push_back({c.box, std::min(1.0, c.area / full), 0});
  return out;
}

std::vector<ScoredBox> blob_detect(const GrayFrame& background, const GrayFrame& reference, int diff_threshold,
                                   int min_area) {
  if (background.width != reference.width || background.height != reference.height)
    throw InvalidInput("blob_detect: dimension mismatch");
  BinaryMask m(background.width, background.height);
  for (std::size_t i = 0; i < m.data.size(); ++i)
    m.data[i] = std::abs(int(background.data[i]) - int(reference.data[i])) >= diff_threshold;
  return mask_blobs(m, min_area);
}

}  // namespace tad
