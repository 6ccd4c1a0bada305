#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "pixcurate/errors.hpp"
#include "pixcurate/metrics.hpp"
#include "support.hpp"

using namespace pixcurate;

namespace {

std::vector<std::vector<int>> plane_of(const GrayBuffer& g) {
  std::vector<std::vector<int>> p(static_cast<std::size_t>(g.height()),
                                  std::vector<int>(static_cast<std::size_t>(g.width())));
  for (int y = 0; y < g.height(); ++y)
    for (int x = 0; x < g.width(); ++x) p[y][x] = g.at(x, y);
  return p;
}

GaussianStats stats(std::vector<double> mean, std::vector<double> cov) {
  GaussianStats s;
  s.mean = std::move(mean);
  s.covariance = std::move(cov);
  s.n = 10;
  return s;
}

// Textbook SSIM: explicit 11x11 Gaussian sums at every valid window position.
double ssim_oracle(const ImageBuffer& a, const ImageBuffer& b) {
  double w[11][11];
  double wsum = 0;
  for (int j = 0; j < 11; ++j)
    for (int i = 0; i < 11; ++i) {
      w[j][i] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / (2 * 1.5 * 1.5));
      wsum += w[j][i];
    }
  for (auto& row : w)
    for (double& v : row) v /= wsum;
  const double c1 = (0.01 * 255) * (0.01 * 255), c2 = (0.03 * 255) * (0.03 * 255);
  double total = 0;
  for (int c = 0; c < a.channels(); ++c) {
    double acc = 0;
    int n = 0;
    for (int y = 0; y + 11 <= a.height(); ++y) {
      for (int x = 0; x + 11 <= a.width(); ++x) {
        double mx = 0, my = 0;
        for (int j = 0; j < 11; ++j)
          for (int i = 0; i < 11; ++i) {
            mx += w[j][i] * a.at(x + i, y + j, c);
            my += w[j][i] * b.at(x + i, y + j, c);
          }
        double vx = 0, vy = 0, cxy = 0;
        for (int j = 0; j < 11; ++j)
          for (int i = 0; i < 11; ++i) {
            const double dx = a.at(x + i, y + j, c) - mx, dy = b.at(x + i, y + j, c) - my;
            vx += w[j][i] * dx * dx;
            vy += w[j][i] * dy * dy;
            cxy += w[j][i] * dx * dy;
          }
        acc += ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
        ++n;
      }
    }
    total += acc / n;
  }
  return total / a.channels();
}

// Quadratic greedy NMS written from the definition.
std::vector<BBox> nms_oracle(std::vector<BBox> boxes, double thr) {
  std::vector<std::size_t> order(boxes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return boxes[a].score > boxes[b].score; });
  auto overlap = [](const BBox& a, const BBox& b) {
    const double iw = std::max(0.0, std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min));
    const double ih = std::max(0.0, std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min));
    const double inter = iw * ih;
    const double uni = (a.x_max - a.x_min) * (a.y_max - a.y_min) +
                       (b.x_max - b.x_min) * (b.y_max - b.y_min) - inter;
    return uni > 0 ? inter / uni : 0.0;
  };
  std::vector<BBox> kept;
  for (std::size_t i : order) {
    bool keep = true;
    for (const auto& k : kept)
      if (overlap(k, boxes[i]) > thr) keep = false;
    if (keep) kept.push_back(boxes[i]);
  }
  return kept;
}

}  // namespace

TEST_CASE("glcm_offset follows the rounded polar rule") {
  CHECK(glcm_offset(1, 0.0) == PixelOffset{1, 0});
  CHECK(glcm_offset(1, std::numbers::pi / 4) == PixelOffset{1, -1});
  CHECK(glcm_offset(1, std::numbers::pi / 2) == PixelOffset{0, -1});
  CHECK(glcm_offset(1, 3 * std::numbers::pi / 4) == PixelOffset{-1, -1});
  CHECK(glcm_offset(4, 0.0) == PixelOffset{4, 0});
  CHECK(glcm_offset(2, std::numbers::pi / 4) == PixelOffset{1, -1});  // round(1.414) = 1
  CHECK(glcm_offset(4, std::numbers::pi / 4) == PixelOffset{3, -3});
}

TEST_CASE("glcm_score: constant image is 0") {
  const auto g = to_grayscale(testsupport::constant_image(128, 128, 1, 200));
  CHECK(glcm_score(g) == 0.0);
}

TEST_CASE("glcm_score: checkerboard against an all-pairs oracle") {
  GrayBuffer g(64, 64);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) g.at(x, y) = ((x + y) % 2) ? 255 : 0;
  GLCMConfig cfg;
  cfg.levels = 2;

  // Every ordered pair of pixels, kept when the displacement equals the offset.
  const int n = 64 * 64;
  double expected = 0;
  for (int d : cfg.distances) {
    for (double t : cfg.angles) {
      const int dx = static_cast<int>(std::lround(d * std::cos(t)));
      const int dy = -static_cast<int>(std::lround(d * std::sin(t)));
      double counts[2][2] = {{0, 0}, {0, 0}};
      double pairs = 0;
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          if (j % 64 - i % 64 != dx || j / 64 - i / 64 != dy) continue;
          counts[g.data()[i] / 128][g.data()[j] / 128] += 1;
          pairs += 1;
        }
      }
      double h = 0;
      for (auto& row : counts)
        for (double c : row)
          if (c > 0) h -= (c / pairs) * std::log2(c / pairs);
      expected += h;
    }
  }
  expected /= 16;
  CHECK(glcm_score(g, cfg) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("glcm_score: random images match the enumeration oracle") {
  for (unsigned seed = 0; seed < 4; ++seed) {
    const auto g = testsupport::noise_gray(160, 130, seed);
    GLCMConfig cfg;
    const double want = oracle::glcm_score(plane_of(g), cfg.levels, cfg.patch, cfg.distances, cfg.angles);
    CHECK(glcm_score(g, cfg) == doctest::Approx(want).epsilon(1e-12));
    CHECK(glcm_score(g, cfg, 3) == glcm_score(g, cfg, 1));
  }
}

TEST_CASE("glcm_patch_entropy never exceeds log2(levels^2)") {
  GLCMConfig cfg;
  for (unsigned seed = 0; seed < 5; ++seed) {
    const auto q = quantize_levels(testsupport::noise_gray(64, 64, 100 + seed), cfg.levels);
    const double h = glcm_patch_entropy(q, PatchSpec{0, 0, 64, 64}, cfg);
    CHECK(h >= 0.0);
    CHECK(h <= 12.0);
  }
}

TEST_CASE("glcm_score: too small") {
  CHECK_THROWS_AS(glcm_score(testsupport::noise_gray(63, 200, 1)), ValidationError);
}

TEST_CASE("raps: constant image has a zero spectrum") {
  const auto r = raps(to_grayscale(testsupport::constant_image(64, 48, 1, 9)));
  CHECK(r.size() == 24);
  for (double v : r) CHECK(v == doctest::Approx(0.0));
}

TEST_CASE("raps: horizontal sinusoid of period 16 peaks at radius 16") {
  GrayBuffer g(256, 256);
  for (int y = 0; y < 256; ++y)
    for (int x = 0; x < 256; ++x)
      g.at(x, y) = static_cast<std::uint8_t>(std::lround(128 + 100 * std::sin(2 * std::numbers::pi * x / 16)));
  const auto r = raps(g);
  REQUIRE(r.size() == 128);
  CHECK(std::max_element(r.begin(), r.end()) - r.begin() == 16);
}

TEST_CASE("raps: matches a direct DFT on a small image") {
  const auto g = testsupport::noise_gray(20, 14, 8);
  const int w = 20, h = 14;
  double mean = 0;
  for (auto v : g.data()) mean += v;
  mean /= w * h;
  std::vector<double> power(7, 0.0), count(7, 0.0);
  for (int ky = 0; ky < h; ++ky) {
    for (int kx = 0; kx < w; ++kx) {
      std::complex<double> f = 0;
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          f += (g.at(x, y) - mean) *
               std::polar(1.0, -2 * std::numbers::pi * (double(kx) * x / w + double(ky) * y / h));
      const int u = kx >= (w + 1) / 2 ? kx - w : kx;
      const int v = ky >= (h + 1) / 2 ? ky - h : ky;
      const auto r = static_cast<std::size_t>(std::lround(std::sqrt(double(u * u + v * v))));
      if (r >= power.size()) continue;
      power[r] += std::norm(f);
      count[r] += 1;
    }
  }
  const auto got = raps(g);
  REQUIRE(got.size() == power.size());
  for (std::size_t r = 0; r < power.size(); ++r)
    CHECK(got[r] == doctest::Approx(power[r] / count[r]).epsilon(1e-9));
}

TEST_CASE("raps: white noise is flat and transposition does not matter") {
  const auto g = testsupport::noise_gray(256, 256, 2024);
  const auto r = raps(g);
  double m = 0;
  for (int i = 20; i <= 100; ++i) m += r[static_cast<std::size_t>(i)];
  m /= 81;
  double var = 0;
  for (int i = 20; i <= 100; ++i) var += (r[static_cast<std::size_t>(i)] - m) * (r[static_cast<std::size_t>(i)] - m);
  CHECK(std::sqrt(var / 81) / m < 0.25);

  GrayBuffer t(256, 256);
  for (int y = 0; y < 256; ++y)
    for (int x = 0; x < 256; ++x) t.at(x, y) = g.at(y, x);
  const auto rt = raps(t);
  for (std::size_t i = 0; i < r.size(); ++i) CHECK(rt[i] == doctest::Approx(r[i]).epsilon(1e-9));
  CHECK_THROWS_AS(raps(GrayBuffer(7, 40)), ValidationError);
}

TEST_CASE("gaussian_stats") {
  const auto s = gaussian_stats({{0.0}, {2.0}});
  CHECK(s.mean[0] == 1.0);
  CHECK(s.covariance[0] == 2.0);
  CHECK(s.n == 2);

  const auto same = gaussian_stats({{1, 2, 3}, {1, 2, 3}, {1, 2, 3}});
  for (double c : same.covariance) CHECK(c == 0.0);

  std::vector<std::vector<double>> pts{{1, 5}, {2, -1}, {0.5, 3}, {7, 2}};
  const auto a = gaussian_stats(pts);
  std::reverse(pts.begin(), pts.end());
  const auto b = gaussian_stats(pts);
  for (std::size_t i = 0; i < 4; ++i) CHECK(a.covariance[i] == doctest::Approx(b.covariance[i]).epsilon(1e-15));
  CHECK(a.covariance[1] == a.covariance[2]);
  CHECK_THROWS_AS(gaussian_stats({{1.0}}), ValidationError);
  CHECK_THROWS_AS(gaussian_stats({{1.0}, {1.0, 2.0}}), ValidationError);
}

TEST_CASE("frechet_distance: closed forms") {
  const auto a = stats({0}, {1});
  const auto b = stats({1}, {4});
  CHECK(frechet_distance(a, b) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(frechet_distance(a, a) == doctest::Approx(0.0));

  const auto c = stats({1, 2, 3}, {1, 0, 0, 0, 9, 0, 0, 0, 0.25});
  const auto d = stats({0, 2, 5}, {4, 0, 0, 0, 1, 0, 0, 0, 1});
  // squared mean gaps 1 + 0 + 4, then (sd_a - sd_b)^2 per axis: 1 + 4 + 0.25
  const double want = (1 + 0 + 4) + (1 + 4 + 0.25);
  CHECK(frechet_distance(c, d) == doctest::Approx(want).epsilon(1e-10));
  CHECK(frechet_distance(d, c) == doctest::Approx(want).epsilon(1e-10));
  CHECK_THROWS_AS(frechet_distance(a, c), ValidationError);
}

TEST_CASE("frechet_distance: symmetric and non-negative on random full covariances") {
  std::mt19937 rng(31);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::vector<double>> xs, ys;
    for (int i = 0; i < 12; ++i) {
      std::vector<double> x(4), y(4);
      for (auto& v : x) v = n01(rng);
      for (auto& v : y) v = 0.5 + 2 * n01(rng);
      xs.push_back(x);
      ys.push_back(y);
    }
    const auto a = gaussian_stats(xs), b = gaussian_stats(ys);
    const double ab = frechet_distance(a, b), ba = frechet_distance(b, a);
    CHECK(ab >= 0);
    CHECK(ab == doctest::Approx(ba).epsilon(1e-8));
    CHECK(std::abs(frechet_distance(a, a)) < 1e-8);
  }
}

TEST_CASE("patch_fid_prepare") {
  const auto empty = patch_fid_prepare({{4096, 4096}}, 512, 0, 1);
  REQUIRE(empty.size() == 1);
  CHECK(empty[0].empty());
  const auto plan = patch_fid_prepare({{4096, 4096}, {600, 900}}, 512, 8, 77);
  CHECK(plan == patch_fid_prepare({{4096, 4096}, {600, 900}}, 512, 8, 77));
  CHECK(plan != patch_fid_prepare({{4096, 4096}, {600, 900}}, 512, 8, 78));
  const int dims[2][2] = {{4096, 4096}, {600, 900}};
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(plan[i].size() == 8);
    for (const auto& p : plan[i]) {
      CHECK(p.w == 512);
      CHECK(p.h == 512);
      CHECK(p.x0 >= 0);
      CHECK(p.y0 >= 0);
      CHECK(p.x1() <= dims[i][0]);
      CHECK(p.y1() <= dims[i][1]);
    }
  }
  CHECK_THROWS_AS(patch_fid_prepare({{100, 100}}, 512, 1, 0), ValidationError);
}

TEST_CASE("cosine_alignment_score") {
  const std::vector<double> u{1, 0}, v{0, 1}, w{-1, 0}, u2{3, 0};
  CHECK(cosine_alignment_score(u, u2) == doctest::Approx(100.0));
  CHECK(cosine_alignment_score(u, v) == 0.0);
  CHECK(cosine_alignment_score(u, w) == 0.0);
  const std::vector<double> a{1, 1};
  CHECK(cosine_alignment_score(u, a, 2.5) == doctest::Approx(2.5 / std::sqrt(2.0)));
  const std::vector<double> zero{0, 0};
  CHECK_THROWS_AS(cosine_alignment_score(u, zero), ValidationError);
}

TEST_CASE("psnr and ssim") {
  const auto a = testsupport::noise_image(32, 32, 3, 1, 10, 200);
  const auto fr = full_reference_scores(a, a);
  CHECK(fr.psnr == 100.0);
  CHECK(fr.ssim == doctest::Approx(1.0).epsilon(1e-12));

  ImageBuffer b = a;
  for (auto& v : b.data()) v = static_cast<std::uint8_t>(v + 1);
  CHECK(psnr(a, b) == doctest::Approx(10 * std::log10(255.0 * 255.0)).epsilon(1e-12));
  CHECK(psnr(a, b) == doctest::Approx(48.13).epsilon(1e-4));

  const auto x = testsupport::noise_image(16, 16, 1, 5);
  auto y = x;
  std::mt19937 rng(6);
  for (auto& v : y.data()) v = static_cast<std::uint8_t>(std::clamp(int(v) + int(rng() % 41) - 20, 0, 255));
  CHECK(ssim(x, y) == doctest::Approx(ssim_oracle(x, y)).epsilon(1e-9));
  const auto xc = testsupport::noise_image(20, 13, 3, 9);
  const auto yc = testsupport::noise_image(20, 13, 3, 10);
  CHECK(ssim(xc, yc) == doctest::Approx(ssim_oracle(xc, yc)).epsilon(1e-9));

  CHECK_THROWS_AS(ssim(testsupport::noise_image(10, 20, 1, 0), testsupport::noise_image(10, 20, 1, 1)),
                  ValidationError);
  CHECK_THROWS_AS(psnr(x, xc), ValidationError);
}

TEST_CASE("psnr decreases as noise grows") {
  const auto a = testsupport::noise_image(64, 64, 1, 3, 60, 190);
  double last = 101;
  for (int amp : {1, 3, 8, 20, 50}) {
    auto b = a;
    std::mt19937 rng(amp);
    std::uniform_int_distribution<int> d(-amp, amp);
    for (auto& v : b.data()) v = static_cast<std::uint8_t>(int(v) + d(rng));
    const double p = psnr(a, b);
    CHECK(p < last);
    last = p;
  }
}

TEST_CASE("iou and nms") {
  const BBox a{0, 0, 10, 10, 0.9};
  const BBox b{5, 0, 15, 10, 0.8};
  CHECK(iou(a, b) == doctest::Approx(50.0 / 150.0));
  CHECK(iou(a, a) == 1.0);

  CHECK(nms({a}, 0.5).size() == 1);
  BBox low = a;
  low.score = 0.1;
  const auto two = nms({low, a}, 0.5);
  REQUIRE(two.size() == 1);
  CHECK(two[0].score == 0.9);
  CHECK(nms_indices({low, a}, 0.5) == std::vector<std::size_t>{1});
}

TEST_CASE("nms: 200 random boxes against the greedy oracle") {
  std::mt19937 rng(12);
  std::uniform_real_distribution<double> pos(0, 900), ext(10, 150), sc(0, 1);
  std::vector<BBox> boxes;
  for (int i = 0; i < 200; ++i) {
    const double x = pos(rng), y = pos(rng);
    boxes.push_back({x, y, x + ext(rng), y + ext(rng), std::round(sc(rng) * 20) / 20});
  }
  CHECK(nms(boxes, 0.5) == nms_oracle(boxes, 0.5));
  CHECK(nms(boxes, 0.2) == nms_oracle(boxes, 0.2));
}

TEST_CASE("filter_by_area") {
  const std::vector<BBox> boxes{{0, 0, 10, 10, 1}, {0, 0, 40, 40, 1}};
  const auto kept = filter_by_area(boxes, 1024);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].x_max == 40);
}

TEST_CASE("crop_with_padding") {
  CHECK(crop_with_padding({100, 100, 200, 200, 1}, 1000, 1000, 0.05) == PatchSpec{95, 95, 110, 110, 0});
  const auto corner = crop_with_padding({0, 0, 50, 50, 1}, 1000, 1000, 0.05);
  CHECK(corner.x0 == 0);
  CHECK(corner.y0 == 0);
  CHECK(crop_with_padding({0, 0, 640, 480, 1}, 640, 480, 0.05) == PatchSpec{0, 0, 640, 480, 0});
  CHECK_THROWS_AS(crop_with_padding({10, 10, 5, 20, 1}, 100, 100), ValidationError);
}
