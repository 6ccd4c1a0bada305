#include <array>
#include <cmath>

#include "pixcurate/errors.hpp"
#include "pixcurate/metrics.hpp"

namespace pixcurate {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = (0.01 * 255.0) * (0.01 * 255.0);
constexpr double kC2 = (0.03 * 255.0) * (0.03 * 255.0);

void check_same_shape(const ImageBuffer& a, const ImageBuffer& b) {
  if (a.width() != b.width() || a.height() != b.height() || a.channels() != b.channels()) {
    throw ValidationError("full-reference metrics need identically shaped images");
  }
}

std::array<double, kWindow> gaussian_taps() {
  std::array<double, kWindow> taps{};
  double sum = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - kWindow / 2;
    taps[static_cast<std::size_t>(i)] = std::exp(-(d * d) / (2 * kSigma * kSigma));
    sum += taps[static_cast<std::size_t>(i)];
  }
  for (auto& t : taps) t /= sum;
  return taps;
}

// Horizontally filtered moments of one row for one channel.
struct RowMoments {
  std::vector<double> a, b, aa, bb, ab;
  explicit RowMoments(std::size_t n) : a(n), b(n), aa(n), bb(n), ab(n) {}
};

void filter_row(const ImageBuffer& x, const ImageBuffer& y, int row, int c,
                const std::array<double, kWindow>& taps, RowMoments& out) {
  const auto ra = x.row(row);
  const auto rb = y.row(row);
  const auto ch = static_cast<std::size_t>(x.channels());
  const std::size_t n = out.a.size();
  for (std::size_t i = 0; i < n; ++i) {
    double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
    for (std::size_t k = 0; k < kWindow; ++k) {
      const double va = ra[(i + k) * ch + static_cast<std::size_t>(c)];
      const double vb = rb[(i + k) * ch + static_cast<std::size_t>(c)];
      const double t = taps[k];
      sa += t * va;
      sb += t * vb;
      saa += t * va * va;
      sbb += t * vb * vb;
      sab += t * va * vb;
    }
    out.a[i] = sa;
    out.b[i] = sb;
    out.aa[i] = saa;
    out.bb[i] = sbb;
    out.ab[i] = sab;
  }
}

// Mean SSIM of one channel; rows are filtered once and kept in a ring of
// kWindow entries so memory stays O(width).
double ssim_channel(const ImageBuffer& x, const ImageBuffer& y, int c) {
  const auto taps = gaussian_taps();
  const auto out_w = static_cast<std::size_t>(x.width() - kWindow + 1);
  const int out_h = x.height() - kWindow + 1;
  std::vector<RowMoments> ring(kWindow, RowMoments(out_w));
  for (int r = 0; r < kWindow - 1; ++r) filter_row(x, y, r, c, taps, ring[static_cast<std::size_t>(r)]);
  double total = 0.0;
  for (int oy = 0; oy < out_h; ++oy) {
    const int newest = oy + kWindow - 1;
    filter_row(x, y, newest, c, taps, ring[static_cast<std::size_t>(newest % kWindow)]);
    double row_sum = 0.0;
    for (std::size_t i = 0; i < out_w; ++i) {
      double ma = 0, mb = 0, maa = 0, mbb = 0, mab = 0;
      for (int k = 0; k < kWindow; ++k) {
        const RowMoments& m = ring[static_cast<std::size_t>((oy + k) % kWindow)];
        const double t = taps[static_cast<std::size_t>(k)];
        ma += t * m.a[i];
        mb += t * m.b[i];
        maa += t * m.aa[i];
        mbb += t * m.bb[i];
        mab += t * m.ab[i];
      }
      const double va = maa - ma * ma;
      const double vb = mbb - mb * mb;
      const double cov = mab - ma * mb;
      row_sum += ((2 * ma * mb + kC1) * (2 * cov + kC2)) /
                 ((ma * ma + mb * mb + kC1) * (va + vb + kC2));
    }
    total += row_sum;
  }
  return total / (static_cast<double>(out_w) * static_cast<double>(out_h));
}

}  // namespace

double psnr(const ImageBuffer& a, const ImageBuffer& b) {
  check_same_shape(a, b);
  const auto da = a.data();
  const auto db = b.data();
  std::uint64_t sse = 0;
  for (std::size_t i = 0; i < da.size(); ++i) {
    const std::int64_t d = static_cast<std::int64_t>(da[i]) - static_cast<std::int64_t>(db[i]);
    sse += static_cast<std::uint64_t>(d * d);
  }
  if (sse == 0) return kPsnrCap;
  const double mse = static_cast<double>(sse) / static_cast<double>(da.size());
  return std::min(kPsnrCap, 10.0 * std::log10(255.0 * 255.0 / mse));
}

double ssim(const ImageBuffer& a, const ImageBuffer& b) {
  check_same_shape(a, b);
  if (a.width() < kWindow || a.height() < kWindow) {
    throw ValidationError("SSIM needs images of at least 11x11 pixels");
  }
  double sum = 0.0;
  for (int c = 0; c < a.channels(); ++c) sum += ssim_channel(a, b, c);
  return sum / a.channels();
}

FullReferenceScores full_reference_scores(const ImageBuffer& a, const ImageBuffer& b) {
  return {psnr(a, b), ssim(a, b)};
}

}  // namespace pixcurate
