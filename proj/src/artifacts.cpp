#include "tad/artifacts.hpp"

#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "tad/frame_io.hpp"

namespace tad {

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a(std::string_view s, std::uint64_t seed) { return fnv1a(s.data(), s.size(), seed); }

std::uint64_t hash_frames(const FrameSequence& frames, std::uint64_t h) {
  h = fnv1a(&frames.fps, sizeof frames.fps, h);
  for (const auto& f : frames.frames) {
    const std::int32_t dims[2] = {f.width, f.height};
    h = fnv1a(dims, sizeof dims, h);
    h = fnv1a(&f.timestamp, sizeof f.timestamp, h);
    h = fnv1a(f.data.data(), f.data.size(), h);
  }
  return h;
}

std::string hex(std::uint64_t v) {
  char b[17];
  std::snprintf(b, sizeof b, "%016llx", static_cast<unsigned long long>(v));
  return b;
}

namespace {

constexpr char kMagic[8] = {'T', 'A', 'D', 'C', 'A', 'C', 'H', '1'};

class Writer {
 public:
  explicit Writer(const std::filesystem::path& p) : out_(p, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot write cache entry " + p.string());
    out_.write(kMagic, sizeof kMagic);
  }
  template <class T>
  void pod(const T& v) { out_.write(reinterpret_cast<const char*>(&v), sizeof v); }
  template <class T>
  void vec(const std::vector<T>& v) {
    pod<std::uint64_t>(v.size());
    out_.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
  }
  bool ok() const { return bool(out_); }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& p) : in_(p, std::ios::binary) {
    char m[sizeof kMagic];
    if (!in_.read(m, sizeof m) || std::memcmp(m, kMagic, sizeof m) != 0) in_.setstate(std::ios::failbit);
  }
  template <class T>
  T pod() {
    T v{};
    in_.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
  }
  template <class T>
  std::vector<T> vec(std::uint64_t limit) {
    auto n = pod<std::uint64_t>();
    if (!in_ || n > limit) {
      in_.setstate(std::ios::failbit);
      return {};
    }
    std::vector<T> v(n);
    in_.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
    return v;
  }
  bool ok() const { return bool(in_); }

 private:
  std::ifstream in_;
};

// Writes to a temporary name then renames, so readers never see partial entries.
template <class F>
void atomic_store(const std::filesystem::path& target, F&& fill) {
  std::filesystem::create_directories(target.parent_path());
  auto tmp = target;
  tmp += ".tmp";
  {
    Writer w(tmp);
    fill(w);
    if (!w.ok()) throw std::runtime_error("cache write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, target);
}

std::string num(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double parse_double(const std::string& s, std::size_t ln, const char* what) {
  double v = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw ParseError(std::string(what) + ": bad number '" + s + "'", ln);
  return v;
}

std::vector<std::vector<std::string>> read_table(const std::filesystem::path& path, std::size_t fields, const char* what) {
  std::ifstream in(path);
  if (!in) throw ParseError(std::string("cannot open ") + what + " file " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::size_t ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, '\t')) f.push_back(tok);
    if (f.size() != fields)
      throw ParseError(std::string(what) + ": expected " + std::to_string(fields) + " fields, got " +
                           std::to_string(f.size()),
                       ln);
    f.push_back(std::to_string(ln));
    rows.push_back(std::move(f));
  }
  return rows;
}

}  // namespace

std::filesystem::path ArtifactCache::path(const std::string& stage, std::uint64_t key) const {
  return dir_ / (stage + "-" + hex(key) + ".bin");
}

std::optional<std::vector<RigidTransform>> ArtifactCache::load_transforms(std::uint64_t key) const {
  if (!enabled() || !std::filesystem::exists(path("motion", key))) return std::nullopt;
  Reader r(path("motion", key));
  auto v = r.vec<RigidTransform>(1ULL << 32);
  if (!r.ok()) return std::nullopt;
  return v;
}

void ArtifactCache::store_transforms(std::uint64_t key, const std::vector<RigidTransform>& t) const {
  if (!enabled()) return;
  atomic_store(path("motion", key), [&](Writer& w) { w.vec(t); });
}

bool ArtifactCache::load_background(const std::string& stage, std::uint64_t key, BackgroundSequence& seq,
                                    ForegroundHistory* fg) const {
  if (!enabled() || !std::filesystem::exists(path(stage, key))) return false;
  Reader r(path(stage, key));
  BackgroundSequence s;
  s.sample_interval = r.pod<std::int32_t>();
  s.direction = r.pod<std::uint8_t>() ? Direction::backward : Direction::forward;
  auto n = r.pod<std::uint64_t>();
  if (!r.ok() || n > (1ULL << 24)) return false;
  for (std::uint64_t i = 0; i < n; ++i) {
    auto w = r.pod<std::int32_t>(), h = r.pod<std::int32_t>();
    if (!r.ok() || w <= 0 || h <= 0 || w > 65536 || h > 65536) return false;
    GrayFrame f(w, h);
    f.frame_index = r.pod<std::int64_t>();
    f.timestamp = r.pod<double>();
    f.data = r.vec<std::uint8_t>(std::uint64_t(w) * h);
    if (!r.ok() || f.data.size() != std::size_t(w) * h) return false;
    s.frames.push_back(std::move(f));
  }
  const auto has_fg = r.pod<std::uint8_t>();
  if (fg) {
    if (!has_fg) return false;
    auto w = r.pod<std::int32_t>(), h = r.pod<std::int32_t>();
    auto frames = r.pod<std::uint64_t>();
    if (!r.ok() || w <= 0 || h <= 0 || frames > (1ULL << 32)) return false;
    ForegroundHistory hist(w, h);
    for (std::uint64_t i = 0; i < frames; ++i) {
      auto words = r.vec<std::uint64_t>(hist.words_per_row() * std::uint64_t(h));
      if (!r.ok() || words.size() != hist.words_per_row() * std::size_t(h)) return false;
      hist.push_words(std::move(words));
    }
    *fg = std::move(hist);
  }
  if (!r.ok()) return false;
  seq = std::move(s);
  return true;
}

void ArtifactCache::store_background(const std::string& stage, std::uint64_t key, const BackgroundSequence& seq,
                                     const ForegroundHistory* fg) const {
  if (!enabled()) return;
  atomic_store(path(stage, key), [&](Writer& w) {
    w.pod<std::int32_t>(seq.sample_interval);
    w.pod<std::uint8_t>(seq.direction == Direction::backward ? 1 : 0);
    w.pod<std::uint64_t>(seq.frames.size());
    for (const auto& f : seq.frames) {
      w.pod<std::int32_t>(f.width);
      w.pod<std::int32_t>(f.height);
      w.pod<std::int64_t>(f.frame_index);
      w.pod<double>(f.timestamp);
      w.vec(f.data);
    }
    w.pod<std::uint8_t>(fg ? 1 : 0);
    if (fg) {
      w.pod<std::int32_t>(fg->width());
      w.pod<std::int32_t>(fg->height());
      w.pod<std::uint64_t>(fg->size());
      for (std::size_t i = 0; i < fg->size(); ++i) w.vec(fg->words(i));
    }
  });
}

void write_seeds(std::ostream& out, const std::vector<TubeSeed>& seeds) {
  out << "# x_min\ty_min\tx_max\ty_max\tstop_time\tlast_seen\tpeak_score\n";
  for (const auto& s : seeds)
    out << num(s.region.x_min) << '\t' << num(s.region.y_min) << '\t' << num(s.region.x_max) << '\t'
        << num(s.region.y_max) << '\t' << num(s.stop_time) << '\t' << num(s.last_seen) << '\t' << num(s.peak_score)
        << '\n';
}

std::vector<TubeSeed> read_seeds(const std::filesystem::path& path) {
  std::vector<TubeSeed> out;
  for (const auto& f : read_table(path, 7, "seeds")) {
    std::size_t ln = std::stoul(f[7]);
    double v[7];
    for (int i = 0; i < 7; ++i) v[i] = parse_double(f[i], ln, "seeds");
    TubeSeed s{{v[0], v[1], v[2], v[3]}, v[4], v[5], v[6]};
    if (!s.region.valid()) throw ParseError("seeds: empty region", ln);
    out.push_back(s);
  }
  return out;
}

void write_events(std::ostream& out, const std::vector<AnomalyEvent>& events) {
  out << "# video_id\tid\tregion(4)\tstopped_box(4)\tstop_time\tlast_seen\tbacktrack_start\ttube_start\ttube_accepted"
         "\tcrash_time\tstart\tend\tconfidence\n";
  for (const auto& e : events) {
    out << e.video_id << '\t' << e.id;
    for (const BoundingBox* b : {&e.region, &e.stopped_box})
      out << '\t' << num(b->x_min) << '\t' << num(b->y_min) << '\t' << num(b->x_max) << '\t' << num(b->y_max);
    out << '\t' << num(e.stop_time) << '\t' << num(e.last_seen) << '\t' << num(e.backtrack_start) << '\t'
        << num(e.tube_start) << '\t' << (e.tube_accepted ? 1 : 0) << '\t' << (e.crash_time ? num(*e.crash_time) : "-")
        << '\t' << num(e.start) << '\t' << num(e.end) << '\t' << num(e.confidence) << '\n';
  }
}

std::vector<AnomalyEvent> read_events(const std::filesystem::path& path) {
  std::vector<AnomalyEvent> out;
  for (const auto& f : read_table(path, 19, "events")) {
    std::size_t ln = std::stoul(f[19]);
    auto d = [&](int i) { return parse_double(f[static_cast<std::size_t>(i)], ln, "events"); };
    AnomalyEvent e;
    e.video_id = f[0];
    e.id = static_cast<int>(d(1));
    e.region = {d(2), d(3), d(4), d(5)};
    e.stopped_box = {d(6), d(7), d(8), d(9)};
    e.stop_time = d(10);
    e.last_seen = d(11);
    e.backtrack_start = d(12);
    e.tube_start = d(13);
    e.tube_accepted = d(14) != 0;
    if (f[15] != "-") e.crash_time = d(15);
    e.start = d(16);
    e.end = d(17);
    e.confidence = d(18);
    out.push_back(e);
  }
  return out;
}

void write_background_dir(const std::filesystem::path& dir, const BackgroundSequence& seq) {
  std::filesystem::create_directories(dir);
  std::ofstream idx(dir / "index.txt");
  if (!idx) throw std::runtime_error("cannot write " + (dir / "index.txt").string());
  idx << "# direction " << to_string(seq.direction) << " interval " << seq.sample_interval << '\n';
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "bg_%06zu.png", i);
    write_png(dir / name, seq.frames[i]);
    idx << name << ' ' << seq.frames[i].frame_index << ' ' << num(seq.frames[i].timestamp) << '\n';
  }
}

BackgroundSequence read_background_dir(const std::filesystem::path& dir) {
  std::ifstream idx(dir / "index.txt");
  if (!idx) throw ParseError("missing " + (dir / "index.txt").string() + " (run the background stage first)");
  BackgroundSequence seq;
  std::string line;
  std::size_t ln = 0;
  while (std::getline(idx, line)) {
    ++ln;
    std::istringstream ss(line);
    if (line.rfind("# direction", 0) == 0) {
      std::string hash, word, dir_s, word2;
      ss >> hash >> word >> dir_s >> word2 >> seq.sample_interval;
      seq.direction = parse_direction(dir_s);
      continue;
    }
    if (line.empty() || line[0] == '#') continue;
    std::string name, ts;
    std::int64_t fi = 0;
    if (!(ss >> name >> fi >> ts)) throw ParseError("background index: expected `file frame_index timestamp`", ln);
    GrayFrame f = read_image(dir / name);
    f.frame_index = fi;
    f.timestamp = parse_double(ts, ln, "background index");
    seq.frames.push_back(std::move(f));
  }
  return seq;
}

}  // namespace tad
