#include <fftw3.h>

#include <cmath>
#include <memory>
#include <mutex>

#include "pixcurate/errors.hpp"
#include "pixcurate/metrics.hpp"

namespace pixcurate {

namespace {

// FFTW's planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

// Signed frequency of DFT index k on an axis of length n, in the fftshift
// convention [-n/2, (n+1)/2).
long centred_frequency(long k, long n) { return k >= (n + 1) / 2 ? k - n : k; }

}  // namespace

std::vector<double> raps(const GrayBuffer& g) {
  const long w = g.width();
  const long h = g.height();
  if (w < 8 || h < 8) throw ValidationError("RAPS needs an image of at least 8x8 pixels");

  const auto n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  const long half_w = w / 2 + 1;
  std::unique_ptr<double, FftwFree> in(static_cast<double*>(fftw_malloc(sizeof(double) * n)));
  std::unique_ptr<fftw_complex, FftwFree> out(static_cast<fftw_complex*>(
      fftw_malloc(sizeof(fftw_complex) * static_cast<std::size_t>(h) * static_cast<std::size_t>(half_w))));
  if (!in || !out) throw std::bad_alloc();

  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_r2c_2d(static_cast<int>(h), static_cast<int>(w), in.get(), out.get(),
                                FFTW_ESTIMATE);
  }
  if (plan == nullptr) throw ValidationError("FFTW could not plan the transform");

  std::uint64_t sum = 0;
  for (const std::uint8_t v : g.data()) sum += v;
  const double mean = static_cast<double>(sum) / static_cast<double>(n);
  const auto src = g.data();
  for (std::size_t i = 0; i < n; ++i) in.get()[i] = static_cast<double>(src[i]) - mean;

  fftw_execute(plan);
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }

  const auto bins = static_cast<std::size_t>(std::min(w, h) / 2);
  std::vector<double> power(bins, 0.0);
  std::vector<std::uint64_t> counts(bins, 0);
  const fftw_complex* spec = out.get();
  for (long ky = 0; ky < h; ++ky) {
    const long v = centred_frequency(ky, h);
    for (long kx = 0; kx < w; ++kx) {
      const long u = centred_frequency(kx, w);
      const auto r = static_cast<std::size_t>(
          std::lround(std::sqrt(static_cast<double>(u * u + v * v))));
      if (r >= bins) continue;
      // r2c stores kx <= w/2; the rest follows from Hermitian symmetry.
      const fftw_complex* c = kx < half_w ? &spec[ky * half_w + kx]
                                          : &spec[((h - ky) % h) * half_w + (w - kx)];
      power[r] += (*c)[0] * (*c)[0] + (*c)[1] * (*c)[1];
      ++counts[r];
    }
  }
  for (std::size_t r = 0; r < bins; ++r) {
    if (counts[r] > 0) power[r] /= static_cast<double>(counts[r]);
  }
  return power;
}

}  // namespace pixcurate
