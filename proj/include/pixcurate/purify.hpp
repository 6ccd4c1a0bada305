#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "pixcurate/image.hpp"

namespace pixcurate {

struct PurifyConfig {
  int exposure_bright = 250;
  int exposure_dark = 5;
  double exposure_max_fraction = 0.20;
  double sharpness_min = 10.0;
  int flatness_patch = 240;
  double flatness_var_min = 750.0;
  double flatness_max_fraction = 0.975;
  double entropy_keep = 0.60;
  double aesthetics_keep = 0.60;
  bool aesthetics_enabled = true;
};

// Detector names used in reject_reasons, in evaluation order.
inline constexpr const char* kExposure = "exposure";
inline constexpr const char* kSharpness = "sharpness";
inline constexpr const char* kFlatness = "flatness";
inline constexpr const char* kEntropy = "entropy";
inline constexpr const char* kAesthetics = "aesthetics";

struct DetectorScores {
  double exposure_fraction = 0.0;
  double laplacian_variance = 0.0;
  // Absent when the image holds no full flatness patch (counts as a failure).
  std::optional<double> flatness_ratio;
  double shannon_entropy = 0.0;
  std::optional<double> aesthetic_a;  // S_L, LAION-style predictor
  std::optional<double> aesthetic_b;  // S_A, MLLM aesthetics evaluator

  bool operator==(const DetectorScores&) const = default;
};

struct FilterVerdict {
  std::string image_id;
  DetectorScores scores;
  bool passed = false;
  std::vector<std::string> reject_reasons;

  bool operator==(const FilterVerdict&) const = default;
};

struct AestheticScores {
  double s_l = 0.0;
  double s_a = 0.0;
};

using ScoredId = std::pair<std::string, double>;

// Fraction of samples (all channels pooled) above `bright` or below `dark`.
double exposure_fraction(const ImageBuffer& img, int bright = 250, int dark = 5);
bool exposure_passes(double fraction, const PurifyConfig& cfg = {});

// Laplacian response variance; needs at least 3x3 pixels.
double laplacian_variance(const GrayBuffer& g);
bool sharpness_passes(double variance, const PurifyConfig& cfg = {});

// Fraction of full patch x patch tiles whose Sobel magnitude variance is below
// var_min. Throws ValidationError when no full tile fits.
double flatness_ratio(const GrayBuffer& g, int patch = 240, double var_min = 750.0);
bool flatness_passes(double ratio, const PurifyConfig& cfg = {});

// Shannon entropy in bits of the 256-bin luma histogram.
double shannon_entropy(const GrayBuffer& g);

// Keeps the ceil(keep_fraction * N) highest scores; ties go to the smaller id.
std::set<std::string> cohort_percentile_gate(const std::vector<ScoredId>& scores,
                                             double keep_fraction);

struct AestheticEntry {
  std::string id;
  double s_l = 0.0;
  double s_a = 0.0;
};

// Union of the percentile gates on S_L and on S_A.
std::set<std::string> aesthetics_gate(const std::vector<AestheticEntry>& cohort,
                                      double keep_fraction);

// Computes the per-image detectors (not the cohort gates).
DetectorScores score_image(const ImageBuffer& img, const PurifyConfig& cfg = {});

struct ScoredImage {
  std::string id;
  DetectorScores scores;
};

// Applies the per-image thresholds and the two cohort gates. An image passes
// only when it survives all five detectors; every failed detector is listed.
// Throws ValidationError on an empty cohort, duplicate ids, or missing
// aesthetic scores while the aesthetics gate is enabled.
std::vector<FilterVerdict> gate_cohort(std::vector<ScoredImage> cohort,
                                       const PurifyConfig& cfg = {});

struct CohortImage {
  std::string id;
  ImageBuffer image;
};

// score_image over the cohort on `workers` threads, attaching external
// aesthetic scores, then gate_cohort. Output order follows input order and
// is independent of the worker count.
std::vector<FilterVerdict> purify_cohort(const std::vector<CohortImage>& records,
                                         const std::map<std::string, AestheticScores>& external,
                                         const PurifyConfig& cfg = {}, int workers = 1);

// Scores sidecar: JSON Lines {"id": string, "s_l": number, "s_a": number}.
std::map<std::string, AestheticScores> read_aesthetic_scores(const std::filesystem::path& path);

}  // namespace pixcurate
