#include <cmath>
#include <string>

#include "pixcurate/errors.hpp"
#include "pixcurate/metrics.hpp"
#include "pixcurate/parallel.hpp"

namespace pixcurate {

namespace {

void validate(const GLCMConfig& cfg) {
  if (cfg.levels < 2 || cfg.levels > 256) throw ValidationError("GLCM levels must be in [2, 256]");
  if (cfg.patch < 1) throw ValidationError("GLCM patch must be positive");
  if (cfg.distances.empty() || cfg.angles.empty()) {
    throw ValidationError("GLCM needs at least one distance and one angle");
  }
  for (const int d : cfg.distances) {
    if (d < 1) throw ValidationError("GLCM distances must be positive");
  }
  for (const double a : cfg.angles) {
    if (!(a >= 0.0 && a < std::numbers::pi)) throw ValidationError("GLCM angles must lie in [0, pi)");
  }
}

}  // namespace

PixelOffset glcm_offset(int distance, double angle) {
  const auto dx = static_cast<int>(std::lround(distance * std::cos(angle)));
  const auto dy = -static_cast<int>(std::lround(distance * std::sin(angle)));
  return {dx, dy};
}

double glcm_patch_entropy(const GrayBuffer& quantized, const PatchSpec& patch,
                          const GLCMConfig& cfg) {
  const auto levels = static_cast<std::size_t>(cfg.levels);
  std::vector<std::uint32_t> counts(levels * levels);
  double total = 0.0;
  std::size_t pairs_used = 0;
  for (const int d : cfg.distances) {
    for (const double a : cfg.angles) {
      const PixelOffset off = glcm_offset(d, a);
      const int x_lo = patch.x0 + std::max(0, -off.dx);
      const int x_hi = patch.x1() - std::max(0, off.dx);
      const int y_lo = patch.y0 + std::max(0, -off.dy);
      const int y_hi = patch.y1() - std::max(0, off.dy);
      if (x_lo >= x_hi || y_lo >= y_hi) {
        throw ValidationError("GLCM offset exceeds the patch size");
      }
      std::fill(counts.begin(), counts.end(), 0);
      for (int y = y_lo; y < y_hi; ++y) {
        const auto src = quantized.row(y);
        const auto dst = quantized.row(y + off.dy);
        for (int x = x_lo; x < x_hi; ++x) {
          const std::size_t i = src[static_cast<std::size_t>(x)];
          const std::size_t j = dst[static_cast<std::size_t>(x + off.dx)];
          ++counts[i * levels + j];
        }
      }
      const double n = static_cast<double>(x_hi - x_lo) * static_cast<double>(y_hi - y_lo);
      double h = 0.0;
      for (const auto c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / n;
        h -= p * std::log2(p);
      }
      total += h;
      ++pairs_used;
    }
  }
  const double mean = total / static_cast<double>(pairs_used);
  return mean == 0.0 ? 0.0 : mean;
}

double glcm_score(const GrayBuffer& g, const GLCMConfig& cfg, int workers) {
  validate(cfg);
  if (g.width() < cfg.patch || g.height() < cfg.patch) {
    throw ValidationError("image " + std::to_string(g.width()) + "x" +
                          std::to_string(g.height()) + " is smaller than one " +
                          std::to_string(cfg.patch) + "px GLCM patch");
  }
  const GrayBuffer q = quantize_levels(g, cfg.levels);
  const auto grid = patch_grid(g.width(), g.height(), cfg.patch, /*drop_partial=*/true);
  std::vector<double> per_patch(grid.size());
  parallel_for(grid.size(), workers,
               [&](std::size_t i) { per_patch[i] = glcm_patch_entropy(q, grid[i], cfg); });
  double sum = 0.0;
  for (const double h : per_patch) sum += h;
  return sum / static_cast<double>(grid.size());
}

}  // namespace pixcurate
