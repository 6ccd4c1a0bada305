#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <thread>

#include "httplib.h"
#include "pixcurate/image.hpp"

namespace testsupport {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

pixcurate::ImageBuffer constant_image(int w, int h, int ch, std::uint8_t v);
pixcurate::ImageBuffer noise_image(int w, int h, int ch, std::uint32_t seed, int lo = 0, int hi = 255);
pixcurate::GrayBuffer noise_gray(int w, int h, std::uint32_t seed, int lo = 0, int hi = 255);

// Horizontal ramp whose phase shifts per row so no column boundary stands out.
pixcurate::ImageBuffer phased_ramp(int w, int h, double slope, std::uint32_t seed);

// Coarse noise enlarged with bilinear filtering: textured, but smooth enough
// that enlarging it again and shrinking back reproduces it closely.
pixcurate::ImageBuffer smooth_texture(int w, int h, int ch, std::uint32_t seed, int cell = 4);

// Local HTTP server on an ephemeral port, running on a background thread.
class StubServer {
 public:
  StubServer();
  ~StubServer();
  StubServer(const StubServer&) = delete;
  StubServer& operator=(const StubServer&) = delete;

  httplib::Server& server() { return server_; }
  // Starts listening; register handlers first.
  void start();
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

// "<json>{...}</json>" response text with every key of the template set to v.
std::string judge_fixture(const std::string& template_id, int v);

// OpenAI-style chat reply wrapping `content`.
std::string chat_reply(const std::string& content);

}  // namespace testsupport
