#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pixcurate/image.hpp"

namespace pixcurate {

struct DecodeLimits {
  int max_width = 20000;
  int max_height = 20000;
};

// Decodes PNG, JPEG or binary PNM (P5/P6), sniffing the format from the
// leading bytes. Alpha is dropped, palettes expanded, and 16-bit samples are
// truncated to their high byte. Throws IoError on unreadable or malformed
// files and ValidationError on unsupported formats or oversized rasters.
ImageBuffer decode_image(const std::filesystem::path& path, const DecodeLimits& limits = {});
ImageBuffer decode_image_bytes(std::span<const std::uint8_t> bytes,
                               const DecodeLimits& limits = {});

// Binary PNM: P5 for one channel, P6 for three; maxval 255 and exactly one
// whitespace byte after each header token.
std::vector<std::uint8_t> encode_pnm(const ImageBuffer& img);
void write_pnm(const ImageBuffer& img, const std::filesystem::path& path);

// Lossless PNG, used for endpoint payloads and fixtures.
std::vector<std::uint8_t> encode_png(const ImageBuffer& img);
void write_png(const ImageBuffer& img, const std::filesystem::path& path);

// Picks the encoder from the extension (.png, .pgm/.ppm/.pnm).
void write_image(const ImageBuffer& img, const std::filesystem::path& path);

std::string base64_encode(std::span<const std::uint8_t> bytes);

bool is_image_path(const std::filesystem::path& path);

}  // namespace pixcurate
