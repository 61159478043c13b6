#pragma once

#include <vector>

#include "tad/image.hpp"

namespace tad {

inline constexpr double kPsnrMax = 100.0;  // returned when the images are identical
inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimC1 = (0.01 * 255) * (0.01 * 255);
inline constexpr double kSsimC2 = (0.03 * 255) * (0.03 * 255);

/// Local SSIM values, one per fully-contained 11x11 window. Entry (x, y) is the
/// window whose top-left pixel is (x, y). Images smaller than the window in either
/// dimension produce a 1x1 map from a single uniform window over the whole image.
struct SsimMap {
  int width = 0;
  int height = 0;
  int window = kSsimWindow;  // support size in pixels (full image size for the fallback)
  std::vector<double> values;
  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

SsimMap ssim_map(const GrayFrame& a, const GrayFrame& b);

/// Mean of the SSIM map.
double ssim(const GrayFrame& a, const GrayFrame& b);

double mse(const GrayFrame& a, const GrayFrame& b);
double psnr(const GrayFrame& a, const GrayFrame& b);

/// Intersection of the normalized 256-bin gray-level histograms.
double color_hist_similarity(const GrayFrame& a, const GrayFrame& b);

double iou(const BoundingBox& a, const BoundingBox& b);

/// Intersection over the smaller box's area; 1 when one box contains the other.
double containment(const BoundingBox& a, const BoundingBox& b);

/// Greedy non-maximum suppression. Boxes are visited by descending score (stable
/// for ties) and kept unless their IoU with an already kept box exceeds the threshold.
std::vector<ScoredBox> nms(std::vector<ScoredBox> boxes, double iou_threshold);

/// Normalized 1-D Gaussian taps of the given size.
std::vector<double> gaussian_kernel(int size, double sigma);

}  // namespace tad
