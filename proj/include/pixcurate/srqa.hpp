#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pixcurate/image.hpp"

namespace pixcurate {

// ---- tiered upscale classification ------------------------------------------

enum class Tier { Native, X2, X4, Rejected };

const char* tier_name(Tier t);

struct UpscaleTier {
  Tier tier = Tier::Rejected;
  std::string reason;
};

struct TierConfig {
  std::uint64_t native_pixels = 100'000'000;  // archived as-is at or above
  std::uint64_t x2_min_pixels = 25'000'000;   // exclusive lower bound for 2x
  int x2_min_side = 3000;
  std::uint64_t x4_min_pixels = 10'000'000;   // inclusive lower bound for 4x
  int x4_min_side = 1500;
};

// Native when the pixel count reaches native_pixels (regardless of the short
// side), X2 above x2_min_pixels with a short side of at least x2_min_side,
// X4 in [x4_min_pixels, x2_min_pixels] with a short side of at least
// x4_min_side, Rejected otherwise.
UpscaleTier upscale_tier(int width, int height, const TierConfig& cfg = {});

int upscale_factor(Tier t);

// ---- seam continuity --------------------------------------------------------

enum class SeamOrientation { Vertical, Horizontal };

struct SeamRatio {
  SeamOrientation orientation = SeamOrientation::Vertical;
  int position = 0;  // first column (row) after the seam
  double ratio = 0.0;
};

struct SeamReport {
  int stride = 0;
  std::vector<SeamRatio> ratios;
  double max_ratio = 0.0;
};

struct SeamConfig {
  int stride = 384;
  int band = 8;
  double epsilon = 1e-3;
  double max_ratio = 2.5;
};

// For every seam line at a positive multiple of the stride: the mean absolute
// cross-seam difference between the two pixels straddling the line, divided
// by the mean absolute first difference inside the `band`-pixel strips on
// either side (the straddling pair excluded), each term offset by epsilon.
// Channels are pooled. Throws ValidationError for stride < 16 or when the
// image is not larger than the stride on either axis.
SeamReport seam_ratios(const ImageBuffer& img, const SeamConfig& cfg = {});
bool seam_passes(const SeamReport& report, const SeamConfig& cfg = {});

// ---- post-SR consistency ----------------------------------------------------

struct ConsistencyThresholds {
  std::optional<double> psnr_min = 25.0;
  std::optional<double> ssim_min = 0.80;
  std::optional<double> perceptual_max = 0.30;
};

struct ConsistencyReport {
  double psnr = 0.0;
  double ssim = 0.0;
  std::optional<double> perceptual;
  bool passed = false;
  std::vector<std::string> failed_metrics;
};

// Perceptual (LPIPS-class) distance between two equally sized images.
using PerceptualDistance = std::function<double(const ImageBuffer&, const ImageBuffer&)>;

// Downsamples sr to the original's size and compares. sr must be exactly 2x
// or 4x the original on both axes. The perceptual check applies only when a
// threshold and a distance function are both configured.
ConsistencyReport consistency_check(const ImageBuffer& sr, const ImageBuffer& original,
                                    const ConsistencyThresholds& thresholds = {},
                                    const PerceptualDistance& perceptual = nullptr);

// ---- representative patch sampling ------------------------------------------

// Full-patch grid; the k_texture patches with the largest Sobel magnitude
// variance (ties by grid index) followed by k_random patches drawn without
// replacement from the rest with a seeded xoshiro256** stream.
std::vector<PatchSpec> hybrid_sample(const GrayBuffer& g, int patch, int k_texture, int k_random,
                                     std::uint64_t seed);

// 512 below 8K on the long side, 1024 otherwise.
int fidelity_patch_size(int width, int height);

}  // namespace pixcurate
