#include "tad/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <random>

#include "json.hpp"
#include "tad/frame_io.hpp"

namespace tad {

namespace {

// Portable generator helpers: the standard distributions are not specified
// bit-exactly across library implementations.
struct Rng {
  std::mt19937_64 eng;
  explicit Rng(std::uint64_t seed) : eng(seed) {}
  double uniform() { return double(eng() >> 11) * (1.0 / 9007199254740992.0); }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  int integer(int a, int b) { return a + static_cast<int>(uniform() * (b - a + 1) * 0.999999999); }
  double exponential(double rate) { return -std::log(1.0 - uniform()) / rate; }
  double normal() {
    double u1 = std::max(uniform(), 1e-300), u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }
};

struct Polyline {
  std::vector<Point2> pts;
  std::vector<double> cum;  // arc length at each vertex

  explicit Polyline(const std::vector<Point2>& p) : pts(p), cum(p.size(), 0.0) {
    for (std::size_t i = 1; i < p.size(); ++i) cum[i] = cum[i - 1] + std::hypot(p[i].x - p[i - 1].x, p[i].y - p[i - 1].y);
  }
  double length() const { return cum.back(); }
  Point2 at(double s) const {
    s = std::clamp(s, 0.0, length());
    std::size_t i = 1;
    while (i + 1 < pts.size() && cum[i] < s) ++i;
    double seg = cum[i] - cum[i - 1];
    double u = seg > 0 ? (s - cum[i - 1]) / seg : 0.0;
    return {pts[i - 1].x + u * (pts[i].x - pts[i - 1].x), pts[i - 1].y + u * (pts[i].y - pts[i - 1].y)};
  }
  Point2 tangent(double s) const {
    s = std::clamp(s, 0.0, length());
    std::size_t i = 1;
    while (i + 1 < pts.size() && cum[i] < s) ++i;
    double dx = pts[i].x - pts[i - 1].x, dy = pts[i].y - pts[i - 1].y, n = std::hypot(dx, dy);
    return n > 0 ? Point2{dx / n, dy / n} : Point2{1, 0};
  }
  double project(Point2 q) const {
    double best_s = 0, best_d = 1e300;
    for (std::size_t i = 1; i < pts.size(); ++i) {
      double dx = pts[i].x - pts[i - 1].x, dy = pts[i].y - pts[i - 1].y, l2 = dx * dx + dy * dy;
      double u = l2 > 0 ? std::clamp(((q.x - pts[i - 1].x) * dx + (q.y - pts[i - 1].y) * dy) / l2, 0.0, 1.0) : 0.0;
      double px = pts[i - 1].x + u * dx, py = pts[i - 1].y + u * dy;
      double d = std::hypot(q.x - px, q.y - py);
      if (d < best_d) {
        best_d = d;
        best_s = cum[i - 1] + u * std::sqrt(l2);
      }
    }
    return best_s;
  }
};

enum class Role { regular, stall, crash_lead, crash_follow };

struct Vehicle {
  Role role = Role::regular;
  int lane = 0;
  double speed = 0;  // px per second
  double spawn = 0;  // seconds
  GrayFrame texture;  // oriented, already length x width or width x length
  // Event vehicles
  double s_stop = 0;       // arc length where the vehicle leaves the lane for good
  Point2 stop_pos;         // where it comes to rest (before any crash slide)
  Point2 offset;           // stop_pos - lane point at s_stop
  double arrive = 0;       // time at stop_pos
  double contact = 0;      // crash contact time
  Point2 slide_dir;        // crash slide direction
};

double smoothstep(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return u * u * (3 - 2 * u);
}

GrayFrame make_texture(Rng& rng, int len, int wid, bool horizontal) {
  const bool bright = rng.uniform() < 0.5;
  const int lo = bright ? 170 : 10, hi = bright ? 240 : 50;
  const int w = horizontal ? len : wid, h = horizontal ? wid : len;
  GrayFrame t(w, h);
  const int bw = (w + 3) / 4, bh = (h + 3) / 4;
  std::vector<std::uint8_t> blocks(static_cast<std::size_t>(bw) * bh);
  for (auto& b : blocks) b = static_cast<std::uint8_t>(rng.integer(lo, hi));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) t.at(x, y) = blocks[static_cast<std::size_t>(y / 4) * bw + x / 4];
  return t;
}

bool is_horizontal(Point2 dir) { return std::abs(dir.x) >= std::abs(dir.y); }

GrayFrame static_scene(const SceneSpec& spec, Rng& rng) {
  const int w = spec.width, h = spec.height;
  GrayFrame bg(w, h);
  // Grass verges with coarse static blotches.
  const int bs = 8;
  const int gw = (w + bs - 1) / bs + 1, gh = (h + bs - 1) / bs + 1;
  std::vector<double> grass(static_cast<std::size_t>(gw) * gh);
  for (auto& g : grass) g = rng.uniform(55, 90);
  const double ph1 = rng.uniform(0, 6.28), ph2 = rng.uniform(0, 6.28);
  const bool road_layout = h >= 200;
  const int road_top = road_layout ? 50 * h / 270 : -1, road_bot = road_layout ? 240 * h / 270 : h + 1;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double v;
      if (y < road_top || y >= road_bot) {
        double fx = double(x) / bs, fy = double(y) / bs;
        int ix = static_cast<int>(fx), iy = static_cast<int>(fy);
        double ux = fx - ix, uy = fy - iy;
        auto G = [&](int a, int b) { return grass[static_cast<std::size_t>(b) * gw + a]; };
        v = (1 - uy) * ((1 - ux) * G(ix, iy) + ux * G(ix + 1, iy)) + uy * ((1 - ux) * G(ix, iy + 1) + ux * G(ix + 1, iy + 1));
      } else {
        v = 100 + 4 * std::sin(0.05 * x + ph1) * std::cos(0.07 * y + ph2) + 2 * std::sin(0.013 * (x + 2 * y));
      }
      bg.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
  if (road_layout) {
    auto hline = [&](int y, bool dashed, int val) {
      for (int x = 0; x < w; ++x)
        if (!dashed || (x / 16) % 2 == 0)
          for (int k = 0; k < 2; ++k)
            if (y + k >= 0 && y + k < h) bg.at(x, y + k) = static_cast<std::uint8_t>(val);
    };
    hline(80 * h / 270, false, 170);
    hline(110 * h / 270, true, 180);
    hline(139 * h / 270, false, 160);
    hline(170 * h / 270, true, 180);
    hline(200 * h / 270, false, 170);
  }
  return bg;
}

void blit(GrayFrame& dst, const GrayFrame& src, int x0, int y0) {
  for (int y = 0; y < src.height; ++y) {
    int yy = y0 + y;
    if (yy < 0 || yy >= dst.height) continue;
    for (int x = 0; x < src.width; ++x) {
      int xx = x0 + x;
      if (xx < 0 || xx >= dst.width) continue;
      dst.at(xx, yy) = src.at(x, y);
    }
  }
}

}  // namespace

void validate(const SceneSpec& s) {
  if (s.width < 16 || s.height < 16) throw InvalidInput("scene: frame must be at least 16x16");
  if (s.fps <= 0) throw InvalidInput("scene: fps must be positive");
  if (s.duration <= 0) throw InvalidInput("scene: duration must be positive");
  if (s.vehicle_length < 4 || s.vehicle_width < 4) throw InvalidInput("scene: vehicle too small");
  if (s.jitter < 0 || s.noise < 0) throw InvalidInput("scene: jitter and noise must be non-negative");
  if (s.min_headway <= 0) throw InvalidInput("scene: min_headway must be positive");
  for (std::size_t i = 0; i < s.lanes.size(); ++i) {
    const auto& l = s.lanes[i];
    const std::string tag = "scene: lane " + std::to_string(i);
    if (l.path.size() < 2) throw InvalidInput(tag + " needs at least two path points");
    if (Polyline(l.path).length() <= 0) throw InvalidInput(tag + " has zero length");
    if (l.speed <= 0) throw InvalidInput(tag + " speed must be positive");
    if (l.spawn_rate < 0) throw InvalidInput(tag + " spawn rate must be non-negative");
    if (l.speed * s.fps * s.min_headway < s.vehicle_length + 1)
      throw InvalidInput(tag + ": spawns would overlap (speed x headway shorter than a vehicle)");
  }
  for (std::size_t i = 0; i < s.events.size(); ++i) {
    const auto& e = s.events[i];
    const std::string tag = "scene: event " + std::to_string(i);
    if (e.event_time < 0 || e.event_time >= s.duration) throw InvalidInput(tag + " time outside [0, duration)");
    if (e.location.x < 0 || e.location.y < 0 || e.location.x >= s.width || e.location.y >= s.height)
      throw InvalidInput(tag + " location outside the frame");
    if (s.lanes.empty()) throw InvalidInput(tag + " needs a lane to arrive on");
    if (e.lane >= static_cast<int>(s.lanes.size())) throw InvalidInput(tag + " refers to a missing lane");
  }
}

SynthOutput generate(const SceneSpec& spec, std::uint64_t seed) {
  validate(spec);
  Rng rng(seed);
  const int len = spec.vehicle_length, wid = spec.vehicle_width;
  std::vector<Polyline> paths;
  for (const auto& l : spec.lanes) paths.emplace_back(l.path);

  std::vector<Vehicle> vehicles;
  SynthOutput out;
  out.frames.fps = spec.fps;

  // Event vehicles first so regular spawns can be thinned around them.
  struct Keepout {
    int lane;
    double spawn;
  };
  std::vector<Keepout> keepouts;
  auto nearest_lane = [&](Point2 q) {
    int best = 0;
    double bd = 1e300;
    for (std::size_t i = 0; i < paths.size(); ++i) {
      Point2 p = paths[i].at(paths[i].project(q));
      double d = std::hypot(p.x - q.x, p.y - q.y);
      if (d < bd) {
        bd = d;
        best = static_cast<int>(i);
      }
    }
    return best;
  };
  auto make_event_vehicle = [&](Role role, int lane, Point2 stop_pos, double arrive, std::size_t ev) {
    const auto& path = paths[static_cast<std::size_t>(lane)];
    Vehicle v;
    v.role = role;
    v.lane = lane;
    v.speed = spec.lanes[static_cast<std::size_t>(lane)].speed * spec.fps;
    v.s_stop = path.project(stop_pos);
    Point2 lp = path.at(v.s_stop);
    v.stop_pos = stop_pos;
    v.offset = {stop_pos.x - lp.x, stop_pos.y - lp.y};
    v.arrive = arrive;
    v.spawn = arrive - v.s_stop / v.speed;
    if (v.spawn < 0)
      throw InvalidInput("scene: event " + std::to_string(ev) + " vehicle cannot reach its location in time");
    v.texture = make_texture(rng, len, wid, is_horizontal(path.tangent(v.s_stop)));
    keepouts.push_back({lane, v.spawn});
    return v;
  };

  for (std::size_t ei = 0; ei < spec.events.size(); ++ei) {
    const auto& e = spec.events[ei];
    const int lane = e.lane >= 0 ? e.lane : nearest_lane(e.location);
    const auto& path = paths[static_cast<std::size_t>(lane)];
    Point2 dir = path.tangent(path.project(e.location));
    if (e.type == EventType::stall) {
      vehicles.push_back(make_event_vehicle(Role::stall, lane, e.location, e.event_time, ei));
      out.truth.push_back({spec.video_id, e.event_time});
    } else {
      const double slide = 20.0;
      Point2 ca{e.location.x - slide * dir.x, e.location.y - slide * dir.y};
      Point2 cb{ca.x - len * dir.x, ca.y - len * dir.y};
      Vehicle a = make_event_vehicle(Role::crash_lead, lane, ca, e.event_time - 0.5, ei);
      Vehicle b = make_event_vehicle(Role::crash_follow, lane, cb, e.event_time, ei);
      a.contact = b.contact = e.event_time;
      a.slide_dir = b.slide_dir = dir;
      vehicles.push_back(std::move(a));
      vehicles.push_back(std::move(b));
      out.truth.push_back({spec.video_id, e.event_time});
    }
  }
  std::stable_sort(out.truth.begin(), out.truth.end(),
                   [](const GroundTruthEvent& a, const GroundTruthEvent& b) { return a.true_time < b.true_time; });

  for (std::size_t li = 0; li < spec.lanes.size(); ++li) {
    const auto& lane = spec.lanes[li];
    const double v = lane.speed * spec.fps;
    const double length = paths[li].length();
    const double guard = spec.min_headway + (len + 4.0) / v;
    double t = -length / v + rng.uniform(0, spec.min_headway);
    while (lane.spawn_rate > 0 && t < spec.duration) {
      bool blocked = std::any_of(keepouts.begin(), keepouts.end(), [&](const Keepout& k) {
        return k.lane == static_cast<int>(li) && std::abs(k.spawn - t) < guard;
      });
      GrayFrame tex = make_texture(rng, len, wid, is_horizontal(paths[li].tangent(0.5 * length)));
      if (!blocked) {
        Vehicle r;
        r.role = Role::regular;
        r.lane = static_cast<int>(li);
        r.speed = v;
        r.spawn = t;
        r.texture = std::move(tex);
        vehicles.push_back(std::move(r));
      }
      t += spec.min_headway + rng.exponential(lane.spawn_rate);
    }
  }

  auto position = [&](const Vehicle& v, double t) -> std::optional<Point2> {
    const auto& path = paths[static_cast<std::size_t>(v.lane)];
    if (t < v.spawn) return std::nullopt;
    if (v.role == Role::regular) {
      double s = v.speed * (t - v.spawn);
      if (s > path.length()) return std::nullopt;
      return path.at(s);
    }
    if (t >= v.arrive) {
      if (v.role == Role::stall || t < v.contact) return v.stop_pos;
      double u = std::min(1.0, (t - v.contact) / spec.settle_delay);
      double k = 20.0 * (1 - (1 - u) * (1 - u));
      return Point2{v.stop_pos.x + k * v.slide_dir.x, v.stop_pos.y + k * v.slide_dir.y};
    }
    double s = v.s_stop - v.speed * (v.arrive - t);
    Point2 p = path.at(s);
    double b = smoothstep((s - (v.s_stop - spec.veer_distance)) / spec.veer_distance);
    return Point2{p.x + b * v.offset.x, p.y + b * v.offset.y};
  };

  // Debris patches flank the final wreck footprint along its long axis.
  struct Debris {
    double time;
    std::vector<std::pair<PixelRect, GrayFrame>> patches;
  };
  std::vector<Debris> debris;
  if (spec.debris)
    for (std::size_t i = 0; i + 1 < vehicles.size(); ++i) {
      const auto& a = vehicles[i];
      if (a.role != Role::crash_lead) continue;
      const auto& b = vehicles[i + 1];
      Point2 fa{a.stop_pos.x + 20 * a.slide_dir.x, a.stop_pos.y + 20 * a.slide_dir.y};
      Point2 fb{b.stop_pos.x + 20 * b.slide_dir.x, b.stop_pos.y + 20 * b.slide_dir.y};
      const bool hz = is_horizontal(a.slide_dir);
      const int dl = hz ? len : wid, dw = hz ? wid : len;
      int x0 = static_cast<int>(std::lround(std::min(fa.x, fb.x) - dl / 2.0));
      int x1 = static_cast<int>(std::lround(std::max(fa.x, fb.x) + dl / 2.0));
      int y0 = static_cast<int>(std::lround(std::min(fa.y, fb.y) - dw / 2.0));
      int y1 = static_cast<int>(std::lround(std::max(fa.y, fb.y) + dw / 2.0));
      const int depth = 12;
      std::vector<PixelRect> rects = hz ? std::vector<PixelRect>{{x0, y0 - depth, x1, y0}, {x0, y1, x1, y1 + depth}}
                                        : std::vector<PixelRect>{{x0 - depth, y0, x0, y1}, {x1, y0, x1 + depth, y1}};
      Debris d{a.contact, {}};
      for (const auto& r : rects) {
        GrayFrame tex(r.x1 - r.x0, r.y1 - r.y0);
        for (int y = 0; y < tex.height; ++y)
          for (int x = 0; x < tex.width; ++x) tex.at(x, y) = (((x / 4) + (y / 4)) % 2) ? 200 : 45;
        d.patches.emplace_back(r, std::move(tex));
      }
      debris.push_back(std::move(d));
    }

  const GrayFrame scene = static_scene(spec, rng);
  const std::size_t npix = scene.data.size();
  const std::size_t bank_extra = 65536;
  std::vector<float> noise(npix + bank_extra);
  for (auto& n : noise) n = static_cast<float>(spec.noise * rng.normal());

  const auto nframes = static_cast<std::size_t>(std::llround(spec.duration * spec.fps));
  out.frames.frames.reserve(nframes);
  const Point2 centre{(spec.width - 1) / 2.0, (spec.height - 1) / 2.0};
  for (std::size_t fi = 0; fi < nframes; ++fi) {
    const double t = double(fi) / spec.fps;
    GrayFrame f = scene;
    for (const auto& d : debris)
      if (t >= d.time)
        for (const auto& [r, tex] : d.patches) blit(f, tex, r.x0, r.y0);
    Point2 jit{0, 0};
    if (spec.jitter > 0) jit = {rng.uniform(-spec.jitter, spec.jitter), rng.uniform(-spec.jitter, spec.jitter)};
    out.jitter.push_back(jit);
    for (const auto& v : vehicles) {
      auto p = position(v, t);
      if (!p) continue;
      const int tw = v.texture.width, th = v.texture.height;
      int x0 = static_cast<int>(std::lround(p->x - tw / 2.0));
      int y0 = static_cast<int>(std::lround(p->y - th / 2.0));
      if (x0 + tw <= 0 || y0 + th <= 0 || x0 >= spec.width || y0 >= spec.height) continue;
      blit(f, v.texture, x0, y0);
      BoundingBox box{double(x0) + jit.x, double(y0) + jit.y, double(x0 + tw) + jit.x, double(y0 + th) + jit.y};
      BoundingBox clip = box.clipped(spec.width, spec.height);
      if (clip.valid() && clip.area() >= 0.25 * box.area())
        out.oracle.add({spec.video_id, static_cast<std::int64_t>(fi), clip, 0.9, "oracle"});
    }
    if (spec.jitter > 0) f = warp_rigid(f, {jit.x, jit.y, 0.0}, centre);
    if (spec.noise > 0) {
      const std::size_t off = static_cast<std::size_t>(rng.eng() % bank_extra);
      for (std::size_t i = 0; i < npix; ++i) {
        float v = float(f.data[i]) + noise[off + i];
        f.data[i] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
    f.frame_index = static_cast<std::int64_t>(fi);
    f.timestamp = t;
    out.frames.frames.push_back(std::move(f));
  }
  return out;
}

SceneSpec default_scene(std::uint64_t seed) {
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  SceneSpec s;
  const double w = s.width;
  const double ys[4] = {95, 125, 155, 185};
  for (int i = 0; i < 4; ++i) {
    LaneSpec l;
    const bool west = i < 2;
    l.path = west ? std::vector<Point2>{{w + 40, ys[i]}, {-40, ys[i]}} : std::vector<Point2>{{-40, ys[i]}, {w + 40, ys[i]}};
    l.speed = rng.uniform(3.0, 5.0);
    l.spawn_rate = rng.uniform(0.15, 0.35);
    s.lanes.push_back(l);
  }
  return s;
}

namespace {

using nlohmann::json;

Point2 point_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw InvalidInput("scene: points are [x, y] pairs");
  return {j[0].get<double>(), j[1].get<double>()};
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; }))
      throw InvalidInput("scene: unknown key '" + it.key() + "' in " + where);
}

}  // namespace

SceneSpec read_scene_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scene spec " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  try {
    reject_unknown(j,
                   {"video_id", "width", "height", "fps", "duration", "lanes", "events", "jitter", "noise",
                    "vehicle_length", "vehicle_width", "min_headway", "settle_delay", "veer_distance", "debris",
                    "default_lanes_seed"},
                   "scene");
    SceneSpec s;
    if (j.contains("default_lanes_seed")) s = default_scene(j["default_lanes_seed"].get<std::uint64_t>());
    s.video_id = j.value("video_id", s.video_id);
    s.width = j.value("width", s.width);
    s.height = j.value("height", s.height);
    s.fps = j.value("fps", s.fps);
    s.duration = j.value("duration", s.duration);
    s.jitter = j.value("jitter", s.jitter);
    s.noise = j.value("noise", s.noise);
    s.vehicle_length = j.value("vehicle_length", s.vehicle_length);
    s.vehicle_width = j.value("vehicle_width", s.vehicle_width);
    s.min_headway = j.value("min_headway", s.min_headway);
    s.settle_delay = j.value("settle_delay", s.settle_delay);
    s.veer_distance = j.value("veer_distance", s.veer_distance);
    s.debris = j.value("debris", s.debris);
    if (j.contains("lanes")) {
      s.lanes.clear();
      for (const auto& lj : j["lanes"]) {
        reject_unknown(lj, {"path", "speed", "spawn_rate"}, "lane");
        LaneSpec l;
        for (const auto& p : lj.at("path")) l.path.push_back(point_from(p));
        l.speed = lj.value("speed", l.speed);
        l.spawn_rate = lj.value("spawn_rate", l.spawn_rate);
        s.lanes.push_back(l);
      }
    }
    if (j.contains("events"))
      for (const auto& ej : j["events"]) {
        reject_unknown(ej, {"vehicle_id", "type", "event_time", "location", "lane"}, "event");
        EventSpec e;
        e.vehicle_id = ej.value("vehicle_id", 0);
        std::string type = ej.value("type", std::string("stall"));
        if (type == "stall")
          e.type = EventType::stall;
        else if (type == "crash")
          e.type = EventType::crash;
        else
          throw InvalidInput("scene: event type must be 'stall' or 'crash'");
        e.event_time = ej.at("event_time").get<double>();
        e.location = point_from(ej.at("location"));
        e.lane = ej.value("lane", -1);
        s.events.push_back(e);
      }
    validate(s);
    return s;
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_scene_spec(const std::filesystem::path& path, const SceneSpec& s) {
  nlohmann::ordered_json j;
  j["video_id"] = s.video_id;
  j["width"] = s.width;
  j["height"] = s.height;
  j["fps"] = s.fps;
  j["duration"] = s.duration;
  j["jitter"] = s.jitter;
  j["noise"] = s.noise;
  j["vehicle_length"] = s.vehicle_length;
  j["vehicle_width"] = s.vehicle_width;
  j["min_headway"] = s.min_headway;
  j["settle_delay"] = s.settle_delay;
  j["veer_distance"] = s.veer_distance;
  j["debris"] = s.debris;
  j["lanes"] = nlohmann::ordered_json::array();
  for (const auto& l : s.lanes) {
    nlohmann::ordered_json lj;
    lj["path"] = nlohmann::ordered_json::array();
    for (const auto& p : l.path) lj["path"].push_back({p.x, p.y});
    lj["speed"] = l.speed;
    lj["spawn_rate"] = l.spawn_rate;
    j["lanes"].push_back(lj);
  }
  j["events"] = nlohmann::ordered_json::array();
  for (const auto& e : s.events) {
    nlohmann::ordered_json ej;
    ej["vehicle_id"] = e.vehicle_id;
    ej["type"] = e.type == EventType::stall ? "stall" : "crash";
    ej["event_time"] = e.event_time;
    ej["location"] = {e.location.x, e.location.y};
    ej["lane"] = e.lane;
    j["events"].push_back(ej);
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void write_synth_output(const std::filesystem::path& dir, const SynthOutput& out, const std::string& video_id) {
  std::filesystem::create_directories(dir);
  write_raw(dir / "frames.raw", out.frames);
  {
    std::ofstream t(dir / "truth.txt");
    std::vector<GroundTruthEvent> gts = out.truth;
    for (auto& g : gts) g.video_id = video_id;
    write_ground_truth(t, gts);
  }
  DetectionStream det = out.oracle;
  for (auto& [f, recs] : det.by_frame)
    for (auto& r : recs) r.video_id = video_id;
  write_detections(dir / "detections.tsv", det);
}

}  // namespace tad
