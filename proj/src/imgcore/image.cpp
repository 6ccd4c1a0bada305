#include "pixcurate/image.hpp"

#include <algorithm>
#include <string>

#include "pixcurate/errors.hpp"

namespace pixcurate {

namespace {

void check_dims(int width, int height) {
  if (width < 1 || height < 1) {
    throw ValidationError("image dimensions must be positive, got " + std::to_string(width) +
                          "x" + std::to_string(height));
  }
}

std::size_t samples_for(int width, int height, int channels) {
  return static_cast<std::size_t>(width) * static_cast<std::size_t>(height) *
         static_cast<std::size_t>(channels);
}

// Overlap of source cell [i*tw, (i+1)*tw) with destination cell
// [o*sw, (o+1)*sw), both measured in units of 1/(sw*tw) of the image extent.
// For each destination index, the contributing source range and weights sum
// to sw exactly.
struct AreaTap {
  int first = 0;
  std::vector<std::uint32_t> weights;
};

std::vector<AreaTap> area_taps(int src, int dst) {
  std::vector<AreaTap> taps(static_cast<std::size_t>(dst));
  const std::int64_t s = src;
  const std::int64_t t = dst;
  for (int o = 0; o < dst; ++o) {
    const std::int64_t lo = o * s;
    const std::int64_t hi = (o + 1) * s;
    const auto first = static_cast<int>(lo / t);
    const auto last = static_cast<int>((hi - 1) / t);
    AreaTap& tap = taps[static_cast<std::size_t>(o)];
    tap.first = first;
    for (int i = first; i <= last; ++i) {
      const std::int64_t cell_lo = std::max<std::int64_t>(i * t, lo);
      const std::int64_t cell_hi = std::min<std::int64_t>((i + 1) * t, hi);
      tap.weights.push_back(static_cast<std::uint32_t>(cell_hi - cell_lo));
    }
  }
  return taps;
}

// Shrinks both axes (target <= source on each). Each output sample is
// sum(v * wx * wy) / (sw * sh) rounded half up, accumulated in uint64.
ImageBuffer area_resize(const ImageBuffer& img, int tw, int th) {
  const int ch = img.channels();
  const auto xt = area_taps(img.width(), tw);
  const auto yt = area_taps(img.height(), th);
  const std::uint64_t denom =
      static_cast<std::uint64_t>(img.width()) * static_cast<std::uint64_t>(img.height());
  ImageBuffer out(tw, th, ch);
  std::vector<std::uint64_t> hsum(static_cast<std::size_t>(tw) * ch);
  std::vector<std::uint64_t> acc(static_cast<std::size_t>(tw) * ch);
  for (int oy = 0; oy < th; ++oy) {
    std::fill(acc.begin(), acc.end(), 0);
    const AreaTap& ty = yt[static_cast<std::size_t>(oy)];
    for (std::size_t k = 0; k < ty.weights.size(); ++k) {
      const auto src = img.row(ty.first + static_cast<int>(k));
      const std::uint64_t wy = ty.weights[k];
      for (int ox = 0; ox < tw; ++ox) {
        const AreaTap& tx = xt[static_cast<std::size_t>(ox)];
        for (int c = 0; c < ch; ++c) {
          std::uint64_t s = 0;
          for (std::size_t j = 0; j < tx.weights.size(); ++j) {
            s += static_cast<std::uint64_t>(
                     src[(static_cast<std::size_t>(tx.first) + j) * ch + static_cast<std::size_t>(c)]) *
                 tx.weights[j];
          }
          hsum[static_cast<std::size_t>(ox) * ch + static_cast<std::size_t>(c)] = s;
        }
      }
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += hsum[i] * wy;
    }
    auto dst = out.row(oy);
    for (std::size_t i = 0; i < acc.size(); ++i) {
      dst[i] = static_cast<std::uint8_t>((acc[i] + denom / 2) / denom);
    }
  }
  return out;
}

// Source coordinate of output index o under half-pixel centers, expressed as
// an integer position base and a fraction over denominator 2*dst.
struct LinearTap {
  int lo = 0;
  int hi = 0;
  std::uint64_t frac = 0;
};

std::vector<LinearTap> linear_taps(int src, int dst) {
  std::vector<LinearTap> taps(static_cast<std::size_t>(dst));
  const std::int64_t d = 2 * static_cast<std::int64_t>(dst);
  for (int o = 0; o < dst; ++o) {
    std::int64_t pos = (2 * static_cast<std::int64_t>(o) + 1) * src - dst;
    pos = std::max<std::int64_t>(pos, 0);
    LinearTap& tap = taps[static_cast<std::size_t>(o)];
    tap.lo = static_cast<int>(pos / d);
    tap.frac = static_cast<std::uint64_t>(pos % d);
    if (tap.lo >= src - 1) {
      tap.lo = src - 1;
      tap.frac = 0;
    }
    tap.hi = std::min(tap.lo + 1, src - 1);
  }
  return taps;
}

// Grows both axes (target >= source on each).
ImageBuffer bilinear_resize(const ImageBuffer& img, int tw, int th) {
  const int ch = img.channels();
  const auto xt = linear_taps(img.width(), tw);
  const auto yt = linear_taps(img.height(), th);
  const std::uint64_t dx = 2 * static_cast<std::uint64_t>(tw);
  const std::uint64_t dy = 2 * static_cast<std::uint64_t>(th);
  const std::uint64_t denom = dx * dy;
  ImageBuffer out(tw, th, ch);
  for (int oy = 0; oy < th; ++oy) {
    const LinearTap& ty = yt[static_cast<std::size_t>(oy)];
    const auto r0 = img.row(ty.lo);
    const auto r1 = img.row(ty.hi);
    auto dst = out.row(oy);
    for (int ox = 0; ox < tw; ++ox) {
      const LinearTap& tx = xt[static_cast<std::size_t>(ox)];
      const std::uint64_t w00 = (dx - tx.frac) * (dy - ty.frac);
      const std::uint64_t w01 = tx.frac * (dy - ty.frac);
      const std::uint64_t w10 = (dx - tx.frac) * ty.frac;
      const std::uint64_t w11 = tx.frac * ty.frac;
      const std::size_t a = static_cast<std::size_t>(tx.lo) * ch;
      const std::size_t b = static_cast<std::size_t>(tx.hi) * ch;
      for (int c = 0; c < ch; ++c) {
        const auto cc = static_cast<std::size_t>(c);
        const std::uint64_t v = r0[a + cc] * w00 + r0[b + cc] * w01 + r1[a + cc] * w10 +
                                r1[b + cc] * w11;
        dst[static_cast<std::size_t>(ox) * ch + cc] =
            static_cast<std::uint8_t>((v + denom / 2) / denom);
      }
    }
  }
  return out;
}

}  // namespace

ImageBuffer::ImageBuffer(int width, int height, int channels)
    : ImageBuffer(width, height, channels,
                  std::vector<std::uint8_t>(width > 0 && height > 0 && channels > 0
                                                ? samples_for(width, height, channels)
                                                : 0)) {}

ImageBuffer::ImageBuffer(int width, int height, int channels, std::vector<std::uint8_t> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  check_dims(width, height);
  if (channels != 1 && channels != 3) {
    throw ValidationError("channel count must be 1 or 3, got " + std::to_string(channels));
  }
  if (data_.size() != samples_for(width, height, channels)) {
    throw ValidationError("sample buffer length does not match width*height*channels");
  }
}

GrayBuffer::GrayBuffer(int width, int height)
    : GrayBuffer(width, height,
                 std::vector<std::uint8_t>(width > 0 && height > 0 ? samples_for(width, height, 1)
                                                                   : 0)) {}

GrayBuffer::GrayBuffer(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  check_dims(width, height);
  if (data_.size() != samples_for(width, height, 1)) {
    throw ValidationError("sample buffer length does not match width*height");
  }
}

GrayBuffer to_grayscale(const ImageBuffer& img) {
  if (img.channels() == 1) {
    auto src = img.data();
    return GrayBuffer(img.width(), img.height(), std::vector<std::uint8_t>(src.begin(), src.end()));
  }
  GrayBuffer out(img.width(), img.height());
  auto src = img.data();
  auto dst = out.data();
  for (std::size_t i = 0, n = out.pixel_count(); i < n; ++i) {
    const std::uint32_t r = src[3 * i];
    const std::uint32_t g = src[3 * i + 1];
    const std::uint32_t b = src[3 * i + 2];
    dst[i] = static_cast<std::uint8_t>((299 * r + 587 * g + 114 * b + 500) / 1000);
  }
  return out;
}

ImageBuffer to_image(const GrayBuffer& g) {
  auto src = g.data();
  return ImageBuffer(g.width(), g.height(), 1, std::vector<std::uint8_t>(src.begin(), src.end()));
}

std::vector<PatchSpec> patch_grid(int width, int height, int patch, bool drop_partial) {
  check_dims(width, height);
  if (patch < 1) throw ValidationError("patch size must be at least 1");
  std::vector<PatchSpec> grid;
  int index = 0;
  for (int y = 0; y < height; y += patch) {
    const int h = std::min(patch, height - y);
    if (drop_partial && h < patch) break;
    for (int x = 0; x < width; x += patch) {
      const int w = std::min(patch, width - x);
      if (drop_partial && w < patch) break;
      grid.push_back(PatchSpec{x, y, w, h, index++});
    }
  }
  if (grid.empty()) {
    throw ValidationError("no full " + std::to_string(patch) + "px patch fits in " +
                          std::to_string(width) + "x" + std::to_string(height));
  }
  return grid;
}

ImageBuffer resample(const ImageBuffer& img, int target_w, int target_h) {
  if (target_w < 1 || target_h < 1) throw ValidationError("resample target must be positive");
  const int sw = img.width();
  const int sh = img.height();
  if (target_w == sw && target_h == sh) return img;
  if (target_w <= sw && target_h <= sh) return area_resize(img, target_w, target_h);
  if (target_w >= sw && target_h >= sh) return bilinear_resize(img, target_w, target_h);
  // One axis shrinks, the other grows: handle the axes in two passes.
  if (target_w < sw) return bilinear_resize(area_resize(img, target_w, sh), target_w, target_h);
  return bilinear_resize(area_resize(img, sw, target_h), target_w, target_h);
}

GrayBuffer quantize_levels(const GrayBuffer& g, int levels) {
  if (levels < 2 || levels > 256) {
    throw ValidationError("quantization levels must be in [2, 256], got " +
                          std::to_string(levels));
  }
  GrayBuffer out(g.width(), g.height());
  auto src = g.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i] = static_cast<std::uint8_t>((static_cast<unsigned>(src[i]) * levels) >> 8);
  }
  return out;
}

namespace {

void check_region(int width, int height, const PatchSpec& r) {
  if (r.w < 1 || r.h < 1 || r.x0 < 0 || r.y0 < 0 || r.x1() > width || r.y1() > height) {
    throw ValidationError("region out of image bounds");
  }
}

}  // namespace

ImageBuffer crop(const ImageBuffer& img, const PatchSpec& region) {
  check_region(img.width(), img.height(), region);
  const auto ch = static_cast<std::size_t>(img.channels());
  ImageBuffer out(region.w, region.h, img.channels());
  for (int y = 0; y < region.h; ++y) {
    auto src = img.row(region.y0 + y).subspan(static_cast<std::size_t>(region.x0) * ch,
                                               static_cast<std::size_t>(region.w) * ch);
    std::copy(src.begin(), src.end(), out.row(y).begin());
  }
  return out;
}

GrayBuffer crop(const GrayBuffer& g, const PatchSpec& region) {
  check_region(g.width(), g.height(), region);
  GrayBuffer out(region.w, region.h);
  for (int y = 0; y < region.h; ++y) {
    auto src = g.row(region.y0 + y).subspan(static_cast<std::size_t>(region.x0),
                                             static_cast<std::size_t>(region.w));
    std::copy(src.begin(), src.end(), out.row(y).begin());
  }
  return out;
}

}  // namespace pixcurate
