#pragma once

#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "pixcurate/image.hpp"

namespace pixcurate {

// ---- texture granularity (GLCM Score) ---------------------------------------

struct GLCMConfig {
  int levels = 64;
  int patch = 64;
  std::vector<int> distances{1, 2, 3, 4};
  std::vector<double> angles{0.0, std::numbers::pi / 4, std::numbers::pi / 2,
                             3 * std::numbers::pi / 4};
};

struct PixelOffset {
  int dx = 0;
  int dy = 0;
  bool operator==(const PixelOffset&) const = default;
};

// (round(d cos t), -round(d sin t)) in column/row terms; rows grow downward,
// so t = pi/2 points up.
PixelOffset glcm_offset(int distance, double angle);

// Mean Shannon entropy (bits) of the normalised, non-symmetrised
// co-occurrence matrices of one already-quantised patch, averaged over every
// (distance, angle) pair of cfg.
double glcm_patch_entropy(const GrayBuffer& quantized, const PatchSpec& patch,
                          const GLCMConfig& cfg);

// Quantise to cfg.levels, tile into full cfg.patch squares (partial edge
// tiles dropped) and average glcm_patch_entropy over the tiles. Patches are
// evaluated on `workers` threads and reduced in tile order.
double glcm_score(const GrayBuffer& g, const GLCMConfig& cfg = {}, int workers = 1);

// ---- spectra -----------------------------------------------------------------

// Radially averaged power spectrum of the mean-subtracted image. Bin r holds
// the mean |F(u,v)|^2 over centred frequencies with round(sqrt(u^2+v^2)) == r;
// the result has floor(min(W,H)/2) bins. Needs W, H >= 8.
std::vector<double> raps(const GrayBuffer& g);

// ---- Frechet distance -------------------------------------------------------

struct GaussianStats {
  std::vector<double> mean;
  // Row-major dim x dim, symmetric.
  std::vector<double> covariance;
  std::size_t n = 0;

  std::size_t dim() const { return mean.size(); }
};

// Sample mean and unbiased (n-1) covariance. Needs n >= 2 equal-length vectors.
GaussianStats gaussian_stats(const std::vector<std::vector<double>>& embeddings);

// |mu_a - mu_b|^2 + Tr(S_a + S_b - 2 (S_a^1/2 S_b S_a^1/2)^1/2), matrix roots by
// symmetric eigendecomposition with negative eigenvalues clamped to zero.
double frechet_distance(const GaussianStats& a, const GaussianStats& b);

struct ImageSize {
  int width = 0;
  int height = 0;
};

// Seeded uniform placement of per_image square patches inside each image,
// one generator stream over the images in order.
std::vector<std::vector<PatchSpec>> patch_fid_prepare(const std::vector<ImageSize>& images,
                                                      int patch, int per_image,
                                                      std::uint64_t seed);

// ---- alignment ---------------------------------------------------------------

// scale * max(cos(u, v), 0).
double cosine_alignment_score(std::span<const double> u, std::span<const double> v,
                              double scale = 100.0);

// ---- full-reference fidelity -----------------------------------------------

struct FullReferenceScores {
  double psnr = 0.0;
  double ssim = 0.0;
};

inline constexpr double kPsnrCap = 100.0;

// 10 log10(255^2 / MSE) over all samples, capped at 100 dB.
double psnr(const ImageBuffer& a, const ImageBuffer& b);

// Mean SSIM over the valid region of an 11x11 Gaussian window (sigma 1.5),
// K1 = 0.01, K2 = 0.03, L = 255, averaged over channels. Needs W, H >= 11.
double ssim(const ImageBuffer& a, const ImageBuffer& b);

FullReferenceScores full_reference_scores(const ImageBuffer& a, const ImageBuffer& b);

// ---- boxes -------------------------------------------------------------------

struct BBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;
  double score = 0.0;

  double area() const { return (x_max - x_min) * (y_max - y_min); }
  bool operator==(const BBox&) const = default;
};

double iou(const BBox& a, const BBox& b);

// Greedy non-maximum suppression: visit boxes by descending score (ties by
// input order) and drop any box whose IoU with an already kept box exceeds
// iou_threshold. Returns kept input indices in visiting order.
std::vector<std::size_t> nms_indices(const std::vector<BBox>& boxes, double iou_threshold);
std::vector<BBox> nms(const std::vector<BBox>& boxes, double iou_threshold);

// Drops boxes whose area is below min_area.
std::vector<BBox> filter_by_area(const std::vector<BBox>& boxes, double min_area);

// Grows each side by pad times the box extent on that axis, clamps to the
// image and rounds outward to whole pixels.
PatchSpec crop_with_padding(const BBox& box, int img_w, int img_h, double pad = 0.05);

}  // namespace pixcurate
