#include "pixcurate/filters.hpp"

#include <algorithm>
#include <cmath>

#include "pixcurate/errors.hpp"

namespace pixcurate {

double laplacian_variance_of(const GrayBuffer& g) {
  const int w = g.width();
  const int h = g.height();
  std::int64_t sum = 0;
  std::int64_t sum_sq = 0;
  for (int y = 0; y < h; ++y) {
    const auto up = g.row(std::max(y - 1, 0));
    const auto mid = g.row(y);
    const auto down = g.row(std::min(y + 1, h - 1));
    for (int x = 0; x < w; ++x) {
      const int left = mid[static_cast<std::size_t>(std::max(x - 1, 0))];
      const int right = mid[static_cast<std::size_t>(std::min(x + 1, w - 1))];
      const auto xi = static_cast<std::size_t>(x);
      const std::int64_t r = up[xi] + down[xi] + left + right - 4 * static_cast<int>(mid[xi]);
      sum += r;
      sum_sq += r * r;
    }
  }
  // n*sum_sq - sum^2 needs up to ~2^93 for 400MP rasters.
  const auto n = static_cast<__int128>(g.pixel_count());
  const __int128 numer = n * static_cast<__int128>(sum_sq) -
                         static_cast<__int128>(sum) * static_cast<__int128>(sum);
  return static_cast<double>(static_cast<long double>(numer) /
                             (static_cast<long double>(n) * static_cast<long double>(n)));
}

double sobel_magnitude_variance(const GrayBuffer& g, const PatchSpec& region) {
  if (region.w < 1 || region.h < 1 || region.x0 < 0 || region.y0 < 0 ||
      region.x1() > g.width() || region.y1() > g.height()) {
    throw ValidationError("Sobel region out of bounds");
  }
  const int x_last = region.x1() - 1;
  const int y_last = region.y1() - 1;
  auto px = [&](int x, int y) -> int {
    return g.at(std::clamp(x, region.x0, x_last), std::clamp(y, region.y0, y_last));
  };
  std::int64_t sum_sq = 0;
  double sum = 0.0;
  for (int y = region.y0; y <= y_last; ++y) {
    for (int x = region.x0; x <= x_last; ++x) {
      const int a = px(x - 1, y - 1), b = px(x, y - 1), c = px(x + 1, y - 1);
      const int d = px(x - 1, y), f = px(x + 1, y);
      const int p = px(x - 1, y + 1), q = px(x, y + 1), r = px(x + 1, y + 1);
      const std::int64_t gx = (c + 2 * f + r) - (a + 2 * d + p);
      const std::int64_t gy = (p + 2 * q + r) - (a + 2 * b + c);
      const std::int64_t m2 = gx * gx + gy * gy;
      sum_sq += m2;
      sum += std::sqrt(static_cast<double>(m2));
    }
  }
  const double n = static_cast<double>(region.w) * static_cast<double>(region.h);
  const double mean = sum / n;
  return std::max(0.0, static_cast<double>(sum_sq) / n - mean * mean);
}

}  // namespace pixcurate
