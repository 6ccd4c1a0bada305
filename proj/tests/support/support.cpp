#include "support.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

#include "json.hpp"
#include "pixcurate/judge.hpp"

namespace testsupport {

TempDir::TempDir() {
  std::string tmpl = (std::filesystem::temp_directory_path() / "pixcurate-test-XXXXXX").string();
  if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
  path_ = tmpl;
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

pixcurate::ImageBuffer constant_image(int w, int h, int ch, std::uint8_t v) {
  pixcurate::ImageBuffer img(w, h, ch);
  std::fill(img.data().begin(), img.data().end(), v);
  return img;
}

pixcurate::ImageBuffer noise_image(int w, int h, int ch, std::uint32_t seed, int lo, int hi) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> dist(lo, hi);
  pixcurate::ImageBuffer img(w, h, ch);
  for (auto& v : img.data()) v = static_cast<std::uint8_t>(dist(rng));
  return img;
}

pixcurate::GrayBuffer noise_gray(int w, int h, std::uint32_t seed, int lo, int hi) {
  return pixcurate::to_grayscale(noise_image(w, h, 1, seed, lo, hi));
}

pixcurate::ImageBuffer phased_ramp(int w, int h, double slope, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 1.0);
  pixcurate::ImageBuffer img(w, h, 1);
  for (int y = 0; y < h; ++y) {
    const double phi = phase(rng);
    for (int x = 0; x < w; ++x) {
      const double v = std::floor(slope * x + phi);
      img.at(x, y, 0) = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
    }
  }
  return img;
}

pixcurate::ImageBuffer smooth_texture(int w, int h, int ch, std::uint32_t seed, int cell) {
  const auto coarse = noise_image(w / cell + 2, h / cell + 2, ch, seed, 20, 235);
  return pixcurate::resample(coarse, w, h);
}

StubServer::StubServer() = default;

void StubServer::start() {
  port_ = server_.bind_to_any_port("127.0.0.1");
  if (port_ <= 0) throw std::runtime_error("stub server could not bind");
  thread_ = std::thread([this] { server_.listen_after_bind(); });
  server_.wait_until_ready();
}

StubServer::~StubServer() {
  server_.stop();
  if (thread_.joinable()) thread_.join();
}

std::string judge_fixture(const std::string& template_id, int v) {
  nlohmann::ordered_json j;
  for (const auto& key : pixcurate::required_keys(pixcurate::parse_template_id(template_id))) j[key] = v;
  j["reasoning"] = "fixture";
  return "Assessment follows.\n<json>" + j.dump() + "</json>";
}

std::string chat_reply(const std::string& content) {
  nlohmann::json j{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}};
  return j.dump();
}

}  // namespace testsupport
