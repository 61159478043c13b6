#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tad/background.hpp"
#include "tad/image.hpp"
#include "tad/pixel_track.hpp"
#include "tad/postproc.hpp"
#include "tad/stabilization.hpp"

namespace tad {

/// 64-bit FNV-1a, chainable through `seed`.
inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t seed = kFnvOffset);
std::uint64_t fnv1a(std::string_view s, std::uint64_t seed = kFnvOffset);
std::uint64_t hash_frames(const FrameSequence& frames, std::uint64_t seed = kFnvOffset);
std::string hex(std::uint64_t v);

/// Binary stage outputs stored under `<dir>/<stage>-<key>.bin`. An empty dir disables the cache.
class ArtifactCache {
 public:
  explicit ArtifactCache(std::filesystem::path dir = {}) : dir_(std::move(dir)) {}
  bool enabled() const { return !dir_.empty(); }
  std::filesystem::path path(const std::string& stage, std::uint64_t key) const;

  std::optional<std::vector<RigidTransform>> load_transforms(std::uint64_t key) const;
  void store_transforms(std::uint64_t key, const std::vector<RigidTransform>& t) const;

  /// Background samples, optionally with the per-frame foreground history.
  bool load_background(const std::string& stage, std::uint64_t key, BackgroundSequence& seq,
                       ForegroundHistory* fg) const;
  void store_background(const std::string& stage, std::uint64_t key, const BackgroundSequence& seq,
                        const ForegroundHistory* fg) const;

 private:
  std::filesystem::path dir_;
};

/// Tab-separated seed list: x_min y_min x_max y_max stop_time last_seen peak_score.
void write_seeds(std::ostream& out, const std::vector<TubeSeed>& seeds);
std::vector<TubeSeed> read_seeds(const std::filesystem::path& path);

/// Tab-separated event table with every intermediate time; reversible.
void write_events(std::ostream& out, const std::vector<AnomalyEvent>& events);
std::vector<AnomalyEvent> read_events(const std::filesystem::path& path);

/// Background samples as numbered images plus index.txt (`file frame_index timestamp`).
void write_background_dir(const std::filesystem::path& dir, const BackgroundSequence& seq);
BackgroundSequence read_background_dir(const std::filesystem::path& dir);

}  // namespace tad
