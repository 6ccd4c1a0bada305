#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace pixcurate {

// Decoded raster: 8-bit samples, row-major, channels interleaved.
class ImageBuffer {
 public:
  ImageBuffer() = default;
  // Zero-filled raster. Throws ValidationError on non-positive dimensions or
  // channel counts other than 1 and 3.
  ImageBuffer(int width, int height, int channels);
  ImageBuffer(int width, int height, int channels, std::vector<std::uint8_t> data);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  std::size_t sample_count() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<const std::uint8_t> data() const { return data_; }
  std::span<std::uint8_t> data() { return data_; }

  std::span<const std::uint8_t> row(int y) const {
    return std::span<const std::uint8_t>(data_).subspan(row_offset(y), row_stride());
  }
  std::span<std::uint8_t> row(int y) {
    return std::span<std::uint8_t>(data_).subspan(row_offset(y), row_stride());
  }

  std::uint8_t at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }
  std::uint8_t& at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }

  bool operator==(const ImageBuffer&) const = default;

 private:
  std::size_t row_stride() const {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(channels_);
  }
  std::size_t row_offset(int y) const { return static_cast<std::size_t>(y) * row_stride(); }
  std::size_t index(int x, int y, int c) const {
    return row_offset(y) + static_cast<std::size_t>(x) * static_cast<std::size_t>(channels_) +
           static_cast<std::size_t>(c);
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<std::uint8_t> data_;
};

// Single-channel luma raster.
class GrayBuffer {
 public:
  GrayBuffer() = default;
  GrayBuffer(int width, int height);
  GrayBuffer(int width, int height, std::vector<std::uint8_t> data);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }

  std::span<const std::uint8_t> data() const { return data_; }
  std::span<std::uint8_t> data() { return data_; }
  std::span<const std::uint8_t> row(int y) const {
    return std::span<const std::uint8_t>(data_).subspan(
        static_cast<std::size_t>(y) * static_cast<std::size_t>(width_),
        static_cast<std::size_t>(width_));
  }
  std::span<std::uint8_t> row(int y) {
    return std::span<std::uint8_t>(data_).subspan(
        static_cast<std::size_t>(y) * static_cast<std::size_t>(width_),
        static_cast<std::size_t>(width_));
  }

  std::uint8_t at(int x, int y) const {
    return data_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                 static_cast<std::size_t>(x)];
  }
  std::uint8_t& at(int x, int y) {
    return data_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                 static_cast<std::size_t>(x)];
  }

  bool operator==(const GrayBuffer&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

// Rectangular region of an image grid. index is the ordinal in row-major grid
// order when the patch came from patch_grid, otherwise 0.
struct PatchSpec {
  int x0 = 0;
  int y0 = 0;
  int w = 0;
  int h = 0;
  int index = 0;

  int x1() const { return x0 + w; }
  int y1() const { return y0 + h; }
  bool operator==(const PatchSpec&) const = default;
};

// luma = round(0.299 R + 0.587 G + 0.114 B), evaluated exactly in integers.
GrayBuffer to_grayscale(const ImageBuffer& img);

// Wraps a single-channel luma raster back into an ImageBuffer.
ImageBuffer to_image(const GrayBuffer& g);

// Non-overlapping row-major grid with stride == patch. With drop_partial only
// full patches are emitted, otherwise edge patches are clipped remainders.
// Throws ValidationError when patch < 1 or when drop_partial leaves no patch.
std::vector<PatchSpec> patch_grid(int width, int height, int patch, bool drop_partial = true);

// Area-average when shrinking an axis, bilinear (half-pixel centers) when
// growing it. All arithmetic is integer, so output is bit-identical across
// platforms.
ImageBuffer resample(const ImageBuffer& img, int target_w, int target_h);

// q = floor(v * levels / 256). levels in [2, 256].
GrayBuffer quantize_levels(const GrayBuffer& g, int levels);

ImageBuffer crop(const ImageBuffer& img, const PatchSpec& region);
GrayBuffer crop(const GrayBuffer& g, const PatchSpec& region);

}  // namespace pixcurate
