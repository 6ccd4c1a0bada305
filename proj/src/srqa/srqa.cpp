#include "pixcurate/srqa.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>

#include "pixcurate/errors.hpp"
#include "pixcurate/filters.hpp"
#include "pixcurate/metrics.hpp"
#include "pixcurate/rng.hpp"

namespace pixcurate {

const char* tier_name(Tier t) {
  switch (t) {
    case Tier::Native:
      return "Native";
    case Tier::X2:
      return "X2";
    case Tier::X4:
      return "X4";
    case Tier::Rejected:
      return "Rejected";
  }
  return "Rejected";
}

int upscale_factor(Tier t) {
  switch (t) {
    case Tier::Native:
      return 1;
    case Tier::X2:
      return 2;
    case Tier::X4:
      return 4;
    case Tier::Rejected:
      break;
  }
  return 0;
}

UpscaleTier upscale_tier(int width, int height, const TierConfig& cfg) {
  if (width < 1 || height < 1) throw ValidationError("tier needs positive dimensions");
  const std::uint64_t pixels = static_cast<std::uint64_t>(width) * static_cast<std::uint64_t>(height);
  const int short_side = std::min(width, height);
  if (pixels >= cfg.native_pixels) return {Tier::Native, "at or above the native pixel count"};
  if (pixels > cfg.x2_min_pixels) {
    if (short_side >= cfg.x2_min_side) return {Tier::X2, "above the 2x pixel floor"};
    return {Tier::Rejected, "short side " + std::to_string(short_side) + " below " +
                                std::to_string(cfg.x2_min_side)};
  }
  if (pixels >= cfg.x4_min_pixels) {
    if (short_side >= cfg.x4_min_side) return {Tier::X4, "within the 4x pixel range"};
    return {Tier::Rejected, "short side " + std::to_string(short_side) + " below " +
                                std::to_string(cfg.x4_min_side)};
  }
  return {Tier::Rejected, "pixel count " + std::to_string(pixels) + " below " +
                              std::to_string(cfg.x4_min_pixels)};
}

namespace {

// Mean |a - b| over `lines` parallel pixel pairs. `at(line, k)` returns the
// sample pointer for position k along the cross-seam axis.
struct AxisView {
  const ImageBuffer& img;
  bool vertical;  // seam is a column boundary; cross-seam axis is x

  int cross_len() const { return vertical ? img.width() : img.height(); }
  int lines() const { return vertical ? img.height() : img.width(); }
  int sample(int line, int k, int c) const {
    return vertical ? img.at(k, line, c) : img.at(line, k, c);
  }
};

double seam_ratio(const AxisView& v, int pos, const SeamConfig& cfg) {
  const int ch = v.img.channels();
  const int n = v.cross_len();
  std::uint64_t seam_sum = 0;
  std::uint64_t base_sum = 0;
  std::uint64_t base_count = 0;
  const int left_lo = std::max(pos - cfg.band, 0);
  const int right_hi = std::min(pos + cfg.band - 1, n - 1);
  for (int line = 0; line < v.lines(); ++line) {
    for (int c = 0; c < ch; ++c) {
      seam_sum += static_cast<std::uint64_t>(std::abs(v.sample(line, pos, c) - v.sample(line, pos - 1, c)));
      for (int k = left_lo; k + 1 <= pos - 1; ++k) {
        base_sum += static_cast<std::uint64_t>(std::abs(v.sample(line, k + 1, c) - v.sample(line, k, c)));
        ++base_count;
      }
      for (int k = pos; k + 1 <= right_hi; ++k) {
        base_sum += static_cast<std::uint64_t>(std::abs(v.sample(line, k + 1, c) - v.sample(line, k, c)));
        ++base_count;
      }
    }
  }
  const double seam_mean =
      static_cast<double>(seam_sum) / (static_cast<double>(v.lines()) * static_cast<double>(ch));
  const double base_mean =
      base_count > 0 ? static_cast<double>(base_sum) / static_cast<double>(base_count) : 0.0;
  return (seam_mean + cfg.epsilon) / (base_mean + cfg.epsilon);
}

}  // namespace

SeamReport seam_ratios(const ImageBuffer& img, const SeamConfig& cfg) {
  if (cfg.stride < 16) throw ValidationError("seam stride must be at least 16");
  if (cfg.band < 1) throw ValidationError("seam band must be at least 1 pixel");
  if (img.width() <= cfg.stride && img.height() <= cfg.stride) {
    throw ValidationError("image is not larger than the seam stride on either axis");
  }
  SeamReport report;
  report.stride = cfg.stride;
  const AxisView cols{img, true};
  for (int x = cfg.stride; x < img.width(); x += cfg.stride) {
    report.ratios.push_back({SeamOrientation::Vertical, x, seam_ratio(cols, x, cfg)});
  }
  const AxisView rows{img, false};
  for (int y = cfg.stride; y < img.height(); y += cfg.stride) {
    report.ratios.push_back({SeamOrientation::Horizontal, y, seam_ratio(rows, y, cfg)});
  }
  for (const auto& r : report.ratios) report.max_ratio = std::max(report.max_ratio, r.ratio);
  return report;
}

bool seam_passes(const SeamReport& report, const SeamConfig& cfg) {
  return report.max_ratio <= cfg.max_ratio;
}

ConsistencyReport consistency_check(const ImageBuffer& sr, const ImageBuffer& original,
                                    const ConsistencyThresholds& thresholds,
                                    const PerceptualDistance& perceptual) {
  if (sr.channels() != original.channels()) {
    throw ValidationError("SR output and original differ in channel count");
  }
  const bool multiple = sr.width() % original.width() == 0 && sr.height() % original.height() == 0;
  const int fx = multiple ? sr.width() / original.width() : 0;
  const int fy = multiple ? sr.height() / original.height() : 0;
  if (!multiple || fx != fy || (fx != 2 && fx != 4)) {
    throw ValidationError("SR output " + std::to_string(sr.width()) + "x" +
                          std::to_string(sr.height()) + " is not a 2x or 4x enlargement of " +
                          std::to_string(original.width()) + "x" +
                          std::to_string(original.height()));
  }
  const ImageBuffer reduced = resample(sr, original.width(), original.height());
  ConsistencyReport report;
  report.psnr = psnr(reduced, original);
  report.ssim = ssim(reduced, original);
  if (thresholds.perceptual_max && perceptual) report.perceptual = perceptual(reduced, original);

  if (thresholds.psnr_min && report.psnr < *thresholds.psnr_min) {
    report.failed_metrics.emplace_back("psnr");
  }
  if (thresholds.ssim_min && report.ssim < *thresholds.ssim_min) {
    report.failed_metrics.emplace_back("ssim");
  }
  if (thresholds.perceptual_max && report.perceptual &&
      *report.perceptual > *thresholds.perceptual_max) {
    report.failed_metrics.emplace_back("perceptual");
  }
  report.passed = report.failed_metrics.empty();
  return report;
}

std::vector<PatchSpec> hybrid_sample(const GrayBuffer& g, int patch, int k_texture, int k_random,
                                     std::uint64_t seed) {
  if (k_texture < 0 || k_random < 0) throw ValidationError("sample counts must be non-negative");
  const auto grid = patch_grid(g.width(), g.height(), patch, /*drop_partial=*/true);
  const auto want = static_cast<std::size_t>(k_texture) + static_cast<std::size_t>(k_random);
  if (grid.size() < want) {
    throw ValidationError("image holds " + std::to_string(grid.size()) + " full " +
                          std::to_string(patch) + "px patches, " + std::to_string(want) +
                          " requested");
  }
  std::vector<double> variance(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) variance[i] = sobel_magnitude_variance(g, grid[i]);

  std::vector<std::size_t> rank(grid.size());
  std::iota(rank.begin(), rank.end(), std::size_t{0});
  std::stable_sort(rank.begin(), rank.end(),
                   [&](std::size_t a, std::size_t b) { return variance[a] > variance[b]; });

  std::vector<PatchSpec> picks;
  picks.reserve(want);
  for (int i = 0; i < k_texture; ++i) picks.push_back(grid[rank[static_cast<std::size_t>(i)]]);

  std::vector<std::size_t> rest(rank.begin() + k_texture, rank.end());
  std::sort(rest.begin(), rest.end());
  Xoshiro256 rng(seed);
  for (const std::size_t j :
       sample_without_replacement(rng, rest.size(), static_cast<std::size_t>(k_random))) {
    picks.push_back(grid[rest[j]]);
  }
  return picks;
}

int fidelity_patch_size(int width, int height) {
  if (width < 1 || height < 1) throw ValidationError("dimensions must be positive");
  return std::max(width, height) < 8192 ? 512 : 1024;
}

}  // namespace pixcurate
