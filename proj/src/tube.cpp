#include "tad/tube.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "tad/metrics.hpp"

namespace tad {

Tube build_tube(const FrameSequence& frames, const BoundingBox& region, double t_from, double t_to, double step,
                int id) {
  if (frames.empty()) throw InvalidInput("build_tube: empty sequence");
  if (step <= 0) throw InvalidInput("build_tube: step must be positive");
  const auto& f0 = frames.frames.front();
  BoundingBox box = region.clipped(f0.width, f0.height);
  if (!box.valid()) throw InvalidInput("build_tube: region outside the frame");
  t_from = std::max(0.0, t_from);
  t_to = std::min(t_to, frames.frames.back().timestamp);
  Tube tube;
  tube.id = id;
  tube.start = t_from;
  tube.end = std::max(t_from, t_to);
  std::int64_t last = -1;
  for (int k = 0;; ++k) {
    double t = t_from + k * step;
    if (t > tube.end + 1e-9) break;
    const GrayFrame& f = frames.frames[frames.index_at(t)];
    if (f.frame_index == last) continue;
    last = f.frame_index;
    tube.regions.push_back({f.frame_index, f.timestamp, box, crop_resample(f, box, kTubeCrop, kTubeCrop)});
  }
  if (!tube.regions.empty()) tube.start = tube.regions.front().timestamp;
  return tube;
}

GrayFrame tube_mean(const Tube& tube) {
  if (tube.regions.empty()) throw InvalidInput("tube_mean: empty tube");
  const auto& c0 = tube.regions.front().crop;
  std::vector<double> acc(c0.data.size(), 0.0);
  for (const auto& r : tube.regions) {
    if (r.crop.width != c0.width || r.crop.height != c0.height) throw InvalidInput("tube_mean: crop size mismatch");
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += r.crop.data[i];
  }
  GrayFrame out(c0.width, c0.height);
  const double n = double(tube.regions.size());
  for (std::size_t i = 0; i < acc.size(); ++i) out.data[i] = static_cast<std::uint8_t>(std::lround(acc[i] / n));
  return out;
}

TubeVerdict intra_tube_judge(const Tube& tube, const TubeJudgeParams& p) {
  if (tube.regions.empty()) throw InvalidInput("intra_tube_judge: empty tube");
  TubeVerdict v;
  v.anomaly_start = tube.start;
  const auto& regs = tube.regions;
  const bool identical = std::all_of(regs.begin(), regs.end(), [&](const TubeRegion& r) { return r.crop.data == regs[0].crop.data; });
  if (identical) {
    v.accepted = true;
    v.similarity.assign(regs.size(), 1.0);
    v.similarity_trace.assign(regs.size(), 0.0);
    return v;
  }
  const GrayFrame mean = tube_mean(tube);
  for (const auto& r : regs) v.similarity.push_back(ssim(r.crop, mean));
  const double avg = std::accumulate(v.similarity.begin(), v.similarity.end(), 0.0) / double(regs.size());
  for (double s : v.similarity) v.similarity_trace.push_back(s - avg);
  // An incoherent tube (nothing resembles its own mean) is not a vehicle.
  if (avg <= p.lower_bound) return v;

  const double need = p.gamma * (tube.end - tube.start);
  std::size_t j = 0;
  while (j < regs.size()) {
    if (!(v.similarity[j] > p.thre_sim)) {
      ++j;
      continue;
    }
    std::size_t k = j;
    while (k + 1 < regs.size() && v.similarity[k + 1] > p.thre_sim) ++k;
    const double run_end = k + 1 < regs.size() ? regs[k + 1].timestamp : tube.end;
    if (run_end - regs[j].timestamp >= need - 1e-9) {
      v.accepted = true;
      v.anomaly_start = regs[j].timestamp;
      return v;
    }
    j = k + 1;
  }
  return v;
}

namespace {

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t i) {
  while (parent[i] != i) {
    parent[i] = parent[parent[i]];
    i = parent[i];
  }
  return i;
}

}  // namespace

std::vector<std::vector<std::size_t>> fuse_groups(const std::vector<Tube>& tubes, double psnr_threshold) {
  const std::size_t n = tubes.size();
  std::vector<GrayFrame> means;
  means.reserve(n);
  for (const auto& t : tubes) means.push_back(tube_mean(t));
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = i + 1; k < n; ++k)
      if (psnr(means[i], means[k]) >= psnr_threshold) {
        std::size_t a = find_root(parent, i), b = find_root(parent, k);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
  std::vector<std::vector<std::size_t>> groups;
  std::vector<long> slot(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = find_root(parent, i);
    if (slot[r] < 0) {
      slot[r] = static_cast<long>(groups.size());
      groups.emplace_back();
    }
    groups[static_cast<std::size_t>(slot[r])].push_back(i);
  }
  return groups;
}

std::vector<Tube> inter_tube_fuse(const std::vector<Tube>& tubes, double psnr_threshold) {
  std::vector<Tube> out;
  for (const auto& g : fuse_groups(tubes, psnr_threshold)) {
    Tube m;
    m.id = tubes[g.front()].id;
    m.start = tubes[g.front()].start;
    m.end = tubes[g.front()].end;
    for (std::size_t i : g) {
      m.start = std::min(m.start, tubes[i].start);
      m.end = std::max(m.end, tubes[i].end);
      m.regions.insert(m.regions.end(), tubes[i].regions.begin(), tubes[i].regions.end());
    }
    std::stable_sort(m.regions.begin(), m.regions.end(),
                     [](const TubeRegion& a, const TubeRegion& b) { return a.timestamp < b.timestamp; });
    out.push_back(std::move(m));
  }
  return out;
}

void write_tube_report(std::ostream& out, const std::vector<Tube>& tubes, const std::vector<TubeVerdict>& verdicts) {
  char buf[200];
  for (std::size_t i = 0; i < tubes.size(); ++i) {
    const auto& v = i < verdicts.size() ? verdicts[i] : TubeVerdict{};
    std::snprintf(buf, sizeof buf, "%d\t%.3f\t%.3f\t%.3f\t%d\n", tubes[i].id, tubes[i].start, tubes[i].end,
                  v.anomaly_start, v.accepted ? 1 : 0);
    out << buf;
  }
}

}  // namespace tad
