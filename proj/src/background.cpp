#include "tad/background.hpp"

#include <algorithm>
#include <cmath>
#include <type_traits>

namespace tad {

namespace {

template <class T>
bool fitter(T wa, T va, T wb, T vb) {
  // wa/sqrt(va) > wb/sqrt(vb) without square roots.
  return wa * wa * vb > wb * wb * va;
}

template <class T>
void swap_comp(T* w, T* m, T* v, int i, int j) {
  std::swap(w[i], w[j]);
  std::swap(m[i], m[j]);
  std::swap(v[i], v[j]);
}

// Shared by the scalar reference path and the frame model so both follow the
// exact same rules. Arrays hold `cnt` live components sorted by fitness.
// KF > 0 fixes the component capacity at compile time; slots past `cnt` hold
// zero weight, so decaying and summing over all KF slots changes nothing.
template <class T, int KF = 0>
bool mog_step(T* w, T* m, T* v, int& cnt, int k, T x, T rate, T bg_thr, T gate2, T init_var, T var_floor) {
  int match = -1;
  bool match_bg = false;
  T cum = 0;
  for (int j = 0; j < cnt; ++j) {
    bool in_bg = cum < bg_thr;
    cum += w[j];
    T d = x - m[j];
    if (d * d <= gate2 * v[j]) {
      match = j;
      match_bg = in_bg;
      break;
    }
  }
  const bool fg = !(match >= 0 && match_bg);
  const T keep = T(1) - rate;
  int moved;
  if (match >= 0) {
    // Weights summing to one stay normalized under decay plus `rate` on the match.
    const int lim = KF > 0 ? KF : cnt;
    for (int j = 0; j < lim; ++j) w[j] *= keep;
    w[match] += rate;
    T rho = std::min(T(1), rate / w[match]);
    T d = x - m[match];
    m[match] += rho * d;
    v[match] = std::max(var_floor, v[match] + rho * (d * d - v[match]));
    moved = match;
  } else {
    int idx = cnt < k ? cnt++ : cnt - 1;
    for (int j = 0; j < cnt; ++j)
      if (j != idx) w[j] *= keep;
    w[idx] = rate;
    m[idx] = x;
    v[idx] = std::max(var_floor, init_var);
    moved = idx;
    T sum = 0;
    for (int j = 0; j < cnt; ++j) sum += w[j];
    if (sum > 0) {
      const T inv = T(1) / sum;
      for (int j = 0; j < cnt; ++j) w[j] *= inv;
    }
  }
  // Only `moved` changed its fitness relative to the others.
  while (moved > 0 && fitter(w[moved], v[moved], w[moved - 1], v[moved - 1])) {
    swap_comp(w, m, v, moved, moved - 1);
    --moved;
  }
  while (moved + 1 < cnt && fitter(w[moved + 1], v[moved + 1], w[moved], v[moved])) {
    swap_comp(w, m, v, moved, moved + 1);
    ++moved;
  }
  return fg;
}

template <class T>
int heaviest_bg(const T* w, int cnt, T bg_thr) {
  int best = 0;
  T cum = 0;
  for (int j = 0; j < cnt; ++j) {
    if (!(cum < bg_thr)) break;
    if (w[j] > w[best]) best = j;
    cum += w[j];
  }
  return best;
}

void check_params(const MogParams& p) {
  if (p.components < 1 || p.components > kMaxComponents) throw InvalidInput("MOG: component count out of range");
  if (p.alpha <= 0 || p.alpha > 1) throw InvalidInput("MOG: alpha must be in (0,1]");
  if (p.bg_threshold <= 0 || p.bg_threshold > 1) throw InvalidInput("MOG: background threshold must be in (0,1]");
  if (p.match_sigma <= 0) throw InvalidInput("MOG: match gate must be positive");
  if (p.variance_floor <= 0) throw InvalidInput("MOG: variance floor must be positive");
}

}  // namespace

double PixelMixture::total_weight() const {
  double s = 0;
  for (int j = 0; j < count; ++j) s += weight[j];
  return s;
}

bool update_pixel(PixelMixture& mx, double value, const MogParams& p, double rate) {
  check_params(p);
  if (rate <= 0 || rate > 1) throw InvalidInput("update_pixel: learning rate must be in (0,1]");
  return mog_step<double>(mx.weight.data(), mx.mean.data(), mx.variance.data(), mx.count, p.components, value, rate,
                          p.bg_threshold, p.match_sigma * p.match_sigma, p.init_variance, p.variance_floor);
}

int heaviest_background_component(const PixelMixture& m, double bg_threshold) {
  return heaviest_bg<double>(m.weight.data(), m.count, bg_threshold);
}

MogModel::MogModel(int width, int height, const MogParams& params)
    : w_(width), h_(height), k_(params.components), p_(params) {
  check_params(params);
  if (width < 1 || height < 1) throw InvalidInput("MogModel: invalid frame size");
  const std::size_t n = static_cast<std::size_t>(width) * height;
  weight_.assign(n * k_, 0.f);
  mean_.assign(n * k_, 0.f);
  var_.assign(n * k_, 0.f);
  count_.assign(n, 0);
}

double MogModel::current_rate() const { return rate_for(n_); }

double MogModel::rate_for(std::int64_t n) const {
  return p_.warmup ? std::max(p_.alpha, 1.0 / double(n + 1)) : p_.alpha;
}

void MogModel::apply_rows(const GrayFrame& frame, int y0, int y1, double rate_d, std::uint8_t* fg_rows) {
  const float rate = static_cast<float>(rate_d);
  const float thr = static_cast<float>(p_.bg_threshold);
  const float gate2 = static_cast<float>(p_.match_sigma * p_.match_sigma);
  const float iv = static_cast<float>(p_.init_variance), vf = static_cast<float>(p_.variance_floor);
  const std::size_t begin = static_cast<std::size_t>(y0) * w_, end = static_cast<std::size_t>(y1) * w_;
  float* W = weight_.data();
  float* M = mean_.data();
  float* V = var_.data();
  auto run = [&](auto kf) {
    constexpr int KF = decltype(kf)::value;
    for (std::size_t i = begin; i < end; ++i) {
      int cnt = count_[i];
      const std::size_t o = i * (KF > 0 ? KF : k_);
      bool f = mog_step<float, KF>(W + o, M + o, V + o, cnt, k_, float(frame.data[i]), rate, thr, gate2, iv, vf);
      count_[i] = static_cast<std::uint8_t>(cnt);
      if (fg_rows) fg_rows[i - begin] = f;
    }
  };
  switch (k_) {
    case 3: run(std::integral_constant<int, 3>{}); break;
    case 4: run(std::integral_constant<int, 4>{}); break;
    case 5: run(std::integral_constant<int, 5>{}); break;
    default: run(std::integral_constant<int, 0>{}); break;
  }
}

void MogModel::apply(const GrayFrame& frame, std::vector<std::uint8_t>* fg) {
  if (frame.width != w_ || frame.height != h_) throw InvalidInput("MogModel::apply: frame size mismatch");
  if (fg) fg->resize(count_.size());
  apply_rows(frame, 0, h_, current_rate(), fg ? fg->data() : nullptr);
  ++n_;
}

void MogModel::background_rows(GrayFrame& out, int y0, int y1) const {
  const float thr = static_cast<float>(p_.bg_threshold);
  for (std::size_t i = static_cast<std::size_t>(y0) * w_; i < static_cast<std::size_t>(y1) * w_; ++i) {
    if (count_[i] == 0) {
      out.data[i] = 0;
      continue;
    }
    const std::size_t o = i * k_;
    int j = heaviest_bg<float>(&weight_[o], count_[i], thr);
    out.data[i] = static_cast<std::uint8_t>(std::clamp(std::lround(mean_[o + j]), 0L, 255L));
  }
}

GrayFrame MogModel::background() const {
  GrayFrame out(w_, h_);
  background_rows(out, 0, h_);
  return out;
}

PixelMixture MogModel::pixel(int x, int y) const {
  PixelMixture m;
  const std::size_t i = static_cast<std::size_t>(y) * w_ + x;
  m.count = count_[i];
  for (int j = 0; j < m.count; ++j) {
    m.weight[j] = weight_[i * k_ + j];
    m.mean[j] = mean_[i * k_ + j];
    m.variance[j] = var_[i * k_ + j];
  }
  return m;
}

std::string to_string(Direction d) { return d == Direction::forward ? "forward" : "backward"; }

Direction parse_direction(const std::string& s) {
  if (s == "forward") return Direction::forward;
  if (s == "backward") return Direction::backward;
  throw InvalidInput("direction must be 'forward' or 'backward', got '" + s + "'");
}

const GrayFrame* BackgroundSequence::at_or_before(double t) const {
  const GrayFrame* best = nullptr;
  for (const auto& f : frames)
    if (f.timestamp <= t + 1e-9 && (!best || f.timestamp > best->timestamp)) best = &f;
  return best;
}

const GrayFrame* BackgroundSequence::at_or_after(double t) const {
  const GrayFrame* best = nullptr;
  for (const auto& f : frames)
    if (f.timestamp >= t - 1e-9 && (!best || f.timestamp < best->timestamp)) best = &f;
  return best;
}

void ForegroundHistory::push(const std::vector<std::uint8_t>& labels) {
  if (labels.size() != static_cast<std::size_t>(w_) * h_) throw InvalidInput("ForegroundHistory: label size mismatch");
  std::vector<std::uint64_t> bits(words_ * h_, 0);
  for (int y = 0; y < h_; ++y) {
    const std::uint8_t* row = labels.data() + static_cast<std::size_t>(y) * w_;
    std::uint64_t* out = bits.data() + static_cast<std::size_t>(y) * words_;
    for (int x = 0; x < w_; ++x)
      if (row[x]) out[x >> 6] |= std::uint64_t(1) << (x & 63);
  }
  frames_.push_back(std::move(bits));
}

void ForegroundHistory::set_row(std::size_t frame, int y, const std::uint8_t* labels) {
  std::uint64_t* out = frames_.at(frame).data() + static_cast<std::size_t>(y) * words_;
  std::fill(out, out + words_, 0);
  for (int x = 0; x < w_; ++x)
    if (labels[x]) out[x >> 6] |= std::uint64_t(1) << (x & 63);
}

void ForegroundHistory::push_words(std::vector<std::uint64_t> bits) {
  if (bits.size() != words_ * h_) throw InvalidInput("ForegroundHistory: packed size mismatch");
  frames_.push_back(std::move(bits));
}

BinaryMask ForegroundHistory::mask(std::size_t frame) const {
  BinaryMask m(w_, h_);
  for (int y = 0; y < h_; ++y)
    for (int x = 0; x < w_; ++x)
      if (at(frame, x, y)) m.set(x, y, true);
  return m;
}

void ForegroundHistory::reverse() { std::reverse(frames_.begin(), frames_.end()); }

bool ForegroundHistory::at(std::size_t frame, int x, int y) const {
  return (frames_.at(frame)[static_cast<std::size_t>(y) * words_ + (x >> 6)] >> (x & 63)) & 1;
}

std::size_t ForegroundHistory::count_rect(std::size_t frame, const PixelRect& rr) const {
  PixelRect r{std::clamp(rr.x0, 0, w_), std::clamp(rr.y0, 0, h_), std::clamp(rr.x1, 0, w_), std::clamp(rr.y1, 0, h_)};
  if (r.empty()) return 0;
  const auto& bits = frames_.at(frame);
  std::size_t total = 0;
  for (int y = r.y0; y < r.y1; ++y) {
    const std::uint64_t* row = bits.data() + static_cast<std::size_t>(y) * words_;
    int x = r.x0;
    while (x < r.x1) {
      int word = x >> 6, bit = x & 63;
      int take = std::min(64 - bit, r.x1 - x);
      std::uint64_t mask = (take == 64) ? ~std::uint64_t(0) : (((std::uint64_t(1) << take) - 1) << bit);
      total += static_cast<std::size_t>(__builtin_popcountll(row[word] & mask));
      x += take;
    }
  }
  return total;
}

BackgroundSequence model_background(const FrameSequence& frames, Direction direction, int sample_interval,
                                    const MogParams& params, ForegroundHistory* fg) {
  if (frames.empty()) throw InvalidInput("model_background: empty sequence");
  if (sample_interval < 1) throw InvalidInput("model_background: sample_interval must be >= 1");
  const auto& f0 = frames.frames.front();
  const int w = f0.width, h = f0.height;
  for (const auto& f : frames.frames)
    if (f.width != w || f.height != h) throw InvalidInput("model_background: frame size changes within the sequence");
  MogModel model(w, h, params);
  const std::size_t n = frames.size();
  const std::size_t interval = static_cast<std::size_t>(sample_interval);
  BackgroundSequence out;
  out.sample_interval = sample_interval;
  out.direction = direction;
  auto source = [&](std::size_t c) { return direction == Direction::forward ? c : n - 1 - c; };
  for (std::size_t c = interval - 1; c < n; c += interval) {
    GrayFrame bg(w, h);
    bg.frame_index = frames.frames[source(c)].frame_index;
    bg.timestamp = frames.frames[source(c)].timestamp;
    out.frames.push_back(std::move(bg));
  }
  if (fg) {
    *fg = ForegroundHistory(w, h);
    fg->resize(n);
  }
  // Row bands run through the whole sequence while their mixture state stays in
  // cache; pixels are independent, so this matches frame-by-frame updating.
  const int band = std::max(1, 4096 / w);
  std::vector<std::uint8_t> labels(static_cast<std::size_t>(band) * w);
  for (int y0 = 0; y0 < h; y0 += band) {
    const int y1 = std::min(h, y0 + band);
    for (std::size_t c = 0; c < n; ++c) {
      const std::size_t i = source(c);
      model.apply_rows(frames.frames[i], y0, y1, model.rate_for(static_cast<std::int64_t>(c)),
                       fg ? labels.data() : nullptr);
      if (fg)
        for (int y = y0; y < y1; ++y) fg->set_row(i, y, labels.data() + static_cast<std::size_t>(y - y0) * w);
      if ((c + 1) % interval == 0) model.background_rows(out.frames[c / interval], y0, y1);
    }
  }
  model.set_frames_seen(static_cast<std::int64_t>(n));
  return out;
}

}  // namespace tad
