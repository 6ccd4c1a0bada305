#include "pixcurate/codec.hpp"

#include <jpeglib.h>
#include <openssl/evp.h>
#include <png.h>

#include <algorithm>
#include <bit>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

#include "pixcurate/errors.hpp"

namespace pixcurate {

namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

void check_limits(std::uint64_t w, std::uint64_t h, const DecodeLimits& limits) {
  if (w == 0 || h == 0) throw IoError("image has zero dimension");
  if (w > static_cast<std::uint64_t>(limits.max_width) ||
      h > static_cast<std::uint64_t>(limits.max_height)) {
    throw ValidationError("image " + std::to_string(w) + "x" + std::to_string(h) +
                          " exceeds the configured maximum " + std::to_string(limits.max_width) +
                          "x" + std::to_string(limits.max_height));
  }
}

// ---- PNM -------------------------------------------------------------------

class PnmHeaderReader {
 public:
  explicit PnmHeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint64_t next_number() {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || bytes_[pos_] < '0' || bytes_[pos_] > '9') {
      throw IoError("malformed PNM header");
    }
    std::uint64_t v = 0;
    while (pos_ < bytes_.size() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
      v = v * 10 + (bytes_[pos_] - '0');
      if (v > (1u << 30)) throw IoError("PNM header value out of range");
      ++pos_;
    }
    return v;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_offset() {
    if (pos_ >= bytes_.size() || !is_space(bytes_[pos_])) throw IoError("malformed PNM header");
    return pos_ + 1;
  }

  void skip(std::size_t n) { pos_ += n; }

 private:
  static bool is_space(std::uint8_t c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
  }
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (is_space(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

ImageBuffer decode_pnm(std::span<const std::uint8_t> bytes, const DecodeLimits& limits) {
  const int channels = bytes[1] == '5' ? 1 : 3;
  PnmHeaderReader header(bytes);
  header.skip(2);
  const auto w = header.next_number();
  const auto h = header.next_number();
  const auto maxval = header.next_number();
  if (maxval == 0 || maxval > 65535) throw IoError("PNM maxval out of range");
  check_limits(w, h, limits);
  const std::size_t offset = header.raster_offset();
  const std::size_t samples = static_cast<std::size_t>(w * h) * static_cast<std::size_t>(channels);
  const std::size_t bytes_per_sample = maxval > 255 ? 2 : 1;
  if (bytes.size() - std::min(bytes.size(), offset) < samples * bytes_per_sample) {
    throw IoError("truncated PNM raster");
  }
  std::vector<std::uint8_t> data(samples);
  const std::uint8_t* src = bytes.data() + offset;
  if (bytes_per_sample == 2) {
    // Keep the top 8 significant bits of the declared bit depth.
    const int shift = std::bit_width(static_cast<std::uint32_t>(maxval)) - 8;
    for (std::size_t i = 0; i < samples; ++i) {
      const std::uint32_t v = (static_cast<std::uint32_t>(src[2 * i]) << 8) | src[2 * i + 1];
      data[i] = static_cast<std::uint8_t>(std::min<std::uint32_t>(v >> shift, 255));
    }
  } else if (maxval == 255) {
    std::memcpy(data.data(), src, samples);
  } else {
    for (std::size_t i = 0; i < samples; ++i) {
      const std::uint64_t v = std::min<std::uint64_t>(src[i], maxval);
      data[i] = static_cast<std::uint8_t>((v * 255 + maxval / 2) / maxval);
    }
  }
  return ImageBuffer(static_cast<int>(w), static_cast<int>(h), channels, std::move(data));
}

// ---- PNG -------------------------------------------------------------------

struct PngSource {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;
};

void png_read_from_span(png_structp png, png_bytep out, png_size_t n) {
  auto* src = static_cast<PngSource*>(png_get_io_ptr(png));
  if (src->bytes.size() - src->pos < n) png_error(png, "truncated PNG stream");
  std::memcpy(out, src->bytes.data() + src->pos, n);
  src->pos += n;
}

struct PngHeader {
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  int channels = 0;
};

// No objects with destructors live in this frame: png_error longjmps here.
bool png_read_header(png_structp png, png_infop info, PngHeader* hdr, char* err) {
  if (setjmp(png_jmpbuf(png))) {
    std::snprintf(err, 128, "corrupt PNG header");
    return false;
  }
  png_read_info(png, info);
  const int color_type = png_get_color_type(png, info);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_packing(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  png_set_interlace_handling(png);
  png_read_update_info(png, info);
  hdr->width = png_get_image_width(png, info);
  hdr->height = png_get_image_height(png, info);
  hdr->channels = png_get_channels(png, info);
  return true;
}

bool png_read_rows(png_structp png, png_infop info, png_bytepp rows, char* err) {
  if (setjmp(png_jmpbuf(png))) {
    std::snprintf(err, 128, "corrupt or truncated PNG data");
    return false;
  }
  png_read_image(png, rows);
  png_read_end(png, info);
  return true;
}

void png_error_quiet(png_structp png, png_const_charp) { png_longjmp(png, 1); }
void png_warning_quiet(png_structp, png_const_charp) {}

ImageBuffer decode_png(std::span<const std::uint8_t> bytes, const DecodeLimits& limits) {
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_quiet, png_warning_quiet);
  if (png == nullptr) throw IoError("libpng initialisation failed");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* png;
    png_infop* info;
    ~Guard() { png_destroy_read_struct(png, info, nullptr); }
  } guard{&png, &info};
  if (info == nullptr) throw IoError("libpng initialisation failed");

  PngSource source{bytes, 0};
  png_set_read_fn(png, &source, png_read_from_span);
  png_set_user_limits(png, 0x7fffffff, 0x7fffffff);

  char err[128] = {0};
  PngHeader hdr;
  if (!png_read_header(png, info, &hdr, err)) throw IoError(err);
  check_limits(hdr.width, hdr.height, limits);
  if ((hdr.channels != 1 && hdr.channels != 3) ||
      png_get_rowbytes(png, info) !=
      static_cast<png_size_t>(hdr.width) * static_cast<png_size_t>(hdr.channels)) {
    throw ValidationError("unsupported PNG sample layout");
  }

  ImageBuffer img(static_cast<int>(hdr.width), static_cast<int>(hdr.height), hdr.channels);
  std::vector<png_bytep> rows(hdr.height);
  for (png_uint_32 y = 0; y < hdr.height; ++y) rows[y] = img.row(static_cast<int>(y)).data();
  if (!png_read_rows(png, info, rows.data(), err)) throw IoError(err);
  return img;
}

// ---- JPEG ------------------------------------------------------------------

struct JpegError {
  jpeg_error_mgr mgr;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegError*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

void jpeg_silent(j_common_ptr) {}

bool jpeg_start(jpeg_decompress_struct* cinfo, JpegError* err,
                std::span<const std::uint8_t> bytes) {
  if (setjmp(err->jump)) return false;
  jpeg_mem_src(cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(cinfo, TRUE);
  if (cinfo->jpeg_color_space == JCS_GRAYSCALE) {
    cinfo->out_color_space = JCS_GRAYSCALE;
  } else if (cinfo->jpeg_color_space == JCS_YCbCr || cinfo->jpeg_color_space == JCS_RGB) {
    cinfo->out_color_space = JCS_RGB;
  } else {
    std::snprintf(err->message, sizeof(err->message), "unsupported JPEG color space");
    return false;
  }
  return true;
}

bool jpeg_decode_rows(jpeg_decompress_struct* cinfo, JpegError* err, std::uint8_t* data,
                      std::size_t stride) {
  if (setjmp(err->jump)) return false;
  jpeg_start_decompress(cinfo);
  while (cinfo->output_scanline < cinfo->output_height) {
    JSAMPROW row = data + static_cast<std::size_t>(cinfo->output_scanline) * stride;
    jpeg_read_scanlines(cinfo, &row, 1);
  }
  jpeg_finish_decompress(cinfo);
  return true;
}

ImageBuffer decode_jpeg(std::span<const std::uint8_t> bytes, const DecodeLimits& limits) {
  jpeg_decompress_struct cinfo{};
  JpegError err{};
  cinfo.err = jpeg_std_error(&err.mgr);
  err.mgr.error_exit = jpeg_error_exit;
  err.mgr.output_message = jpeg_silent;
  jpeg_create_decompress(&cinfo);
  struct Guard {
    jpeg_decompress_struct* c;
    ~Guard() { jpeg_destroy_decompress(c); }
  } guard{&cinfo};

  if (!jpeg_start(&cinfo, &err, bytes)) throw IoError(std::string("JPEG: ") + err.message);
  check_limits(cinfo.image_width, cinfo.image_height, limits);
  const int channels = cinfo.out_color_space == JCS_GRAYSCALE ? 1 : 3;
  ImageBuffer img(static_cast<int>(cinfo.image_width), static_cast<int>(cinfo.image_height),
                  channels);
  const std::size_t stride = static_cast<std::size_t>(img.width()) * channels;
  if (!jpeg_decode_rows(&cinfo, &err, img.data().data(), stride)) {
    throw IoError(std::string("JPEG: ") + err.message);
  }
  return img;
}

}  // namespace

ImageBuffer decode_image_bytes(std::span<const std::uint8_t> bytes, const DecodeLimits& limits) {
  static constexpr std::uint8_t kPngMagic[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() >= 8 && std::equal(std::begin(kPngMagic), std::end(kPngMagic), bytes.begin())) {
    return decode_png(bytes, limits);
  }
  if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF) {
    return decode_jpeg(bytes, limits);
  }
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6')) {
    return decode_pnm(bytes, limits);
  }
  throw ValidationError("unsupported image format");
}

ImageBuffer decode_image(const std::filesystem::path& path, const DecodeLimits& limits) {
  const auto bytes = read_file(path);
  try {
    return decode_image_bytes(bytes, limits);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_pnm(const ImageBuffer& img) {
  const std::string header = std::string(img.channels() == 1 ? "P5" : "P6") + "\n" +
                             std::to_string(img.width()) + " " + std::to_string(img.height()) +
                             "\n255\n";
  std::vector<std::uint8_t> out;
  out.reserve(header.size() + img.sample_count());
  out.insert(out.end(), header.begin(), header.end());
  auto data = img.data();
  out.insert(out.end(), data.begin(), data.end());
  return out;
}

void write_pnm(const ImageBuffer& img, const std::filesystem::path& path) {
  write_file(path, encode_pnm(img));
}

std::vector<std::uint8_t> encode_png(const ImageBuffer& img) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = img.channels() == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, img.data().data(), 0, nullptr)) {
    png_image_free(&image);
    throw IoError(std::string("PNG encode failed: ") + image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, img.data().data(), 0, nullptr)) {
    png_image_free(&image);
    throw IoError(std::string("PNG encode failed: ") + image.message);
  }
  out.resize(size);
  return out;
}

void write_png(const ImageBuffer& img, const std::filesystem::path& path) {
  write_file(path, encode_png(img));
}

void write_image(const ImageBuffer& img, const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".png") {
    write_png(img, path);
  } else if (ext == ".pnm" || ext == ".ppm" || ext == ".pgm") {
    write_pnm(img, path);
  } else {
    throw ValidationError("cannot encode to '" + ext + "'; use .png or .pnm/.ppm/.pgm");
  }
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  // EVP_EncodeBlock takes an int length; feed large payloads in 3-byte-aligned slices.
  constexpr std::size_t kSlice = 3u << 20;
  std::size_t written = 0;
  for (std::size_t off = 0; off < bytes.size(); off += kSlice) {
    const std::size_t n = std::min(kSlice, bytes.size() - off);
    written += static_cast<std::size_t>(
        EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data() + written), bytes.data() + off,
                        static_cast<int>(n)));
  }
  out.resize(written);
  return out;
}

bool is_image_path(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".pnm" || ext == ".ppm" ||
         ext == ".pgm";
}

}  // namespace pixcurate
