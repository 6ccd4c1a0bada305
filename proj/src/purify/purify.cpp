#include "pixcurate/purify.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include "json.hpp"

#include "pixcurate/errors.hpp"
#include "pixcurate/filters.hpp"
#include "pixcurate/parallel.hpp"

namespace pixcurate {

double exposure_fraction(const ImageBuffer& img, int bright, int dark) {
  std::array<std::uint64_t, 256> hist{};
  for (const std::uint8_t v : img.data()) ++hist[v];
  std::uint64_t hits = 0;
  for (int v = 0; v < 256; ++v) {
    if (v > bright || v < dark) hits += hist[static_cast<std::size_t>(v)];
  }
  return static_cast<double>(hits) / static_cast<double>(img.sample_count());
}

bool exposure_passes(double fraction, const PurifyConfig& cfg) {
  return fraction <= cfg.exposure_max_fraction;
}

double laplacian_variance(const GrayBuffer& g) {
  if (g.width() < 3 || g.height() < 3) {
    throw ValidationError("Laplacian variance needs at least 3x3 pixels");
  }
  return laplacian_variance_of(g);
}

bool sharpness_passes(double variance, const PurifyConfig& cfg) {
  return variance >= cfg.sharpness_min;
}

double flatness_ratio(const GrayBuffer& g, int patch, double var_min) {
  const auto grid = patch_grid(g.width(), g.height(), patch, /*drop_partial=*/true);
  std::size_t flat = 0;
  for (const auto& p : grid) {
    if (sobel_magnitude_variance(g, p) < var_min) ++flat;
  }
  return static_cast<double>(flat) / static_cast<double>(grid.size());
}

bool flatness_passes(double ratio, const PurifyConfig& cfg) {
  return ratio <= cfg.flatness_max_fraction;
}

double shannon_entropy(const GrayBuffer& g) {
  std::array<std::uint64_t, 256> hist{};
  for (const std::uint8_t v : g.data()) ++hist[v];
  const double n = static_cast<double>(g.pixel_count());
  double h = 0.0;
  for (const auto count : hist) {
    if (count == 0) continue;
    const double p = static_cast<double>(count) / n;
    h -= p * std::log2(p);
  }
  return h == 0.0 ? 0.0 : h;
}

namespace {

void check_keep_fraction(double f) {
  if (!(f > 0.0 && f <= 1.0)) throw ValidationError("keep fraction must be in (0, 1]");
}

std::size_t keep_count(double f, std::size_t n) {
  // Guard against products like 0.1 * 30 landing a hair above the integer.
  return std::min(n, static_cast<std::size_t>(std::ceil(f * static_cast<double>(n) - 1e-9)));
}

}  // namespace

std::set<std::string> cohort_percentile_gate(const std::vector<ScoredId>& scores,
                                             double keep_fraction) {
  check_keep_fraction(keep_fraction);
  if (scores.empty()) throw ValidationError("percentile gate needs a non-empty cohort");
  std::vector<const ScoredId*> order;
  order.reserve(scores.size());
  for (const auto& s : scores) order.push_back(&s);
  std::sort(order.begin(), order.end(), [](const ScoredId* a, const ScoredId* b) {
    if (a->second != b->second) return a->second > b->second;
    return a->first < b->first;
  });
  std::set<std::string> ids;
  for (const auto& s : scores) {
    if (!ids.insert(s.first).second) throw ValidationError("duplicate id in cohort: " + s.first);
  }
  std::set<std::string> kept;
  const std::size_t k = keep_count(keep_fraction, order.size());
  for (std::size_t i = 0; i < k; ++i) kept.insert(order[i]->first);
  return kept;
}

std::set<std::string> aesthetics_gate(const std::vector<AestheticEntry>& cohort,
                                      double keep_fraction) {
  if (cohort.empty()) throw ValidationError("aesthetics gate needs a non-empty cohort");
  std::vector<ScoredId> by_l;
  std::vector<ScoredId> by_a;
  for (const auto& e : cohort) {
    by_l.emplace_back(e.id, e.s_l);
    by_a.emplace_back(e.id, e.s_a);
  }
  auto kept = cohort_percentile_gate(by_l, keep_fraction);
  kept.merge(cohort_percentile_gate(by_a, keep_fraction));
  return kept;
}

DetectorScores score_image(const ImageBuffer& img, const PurifyConfig& cfg) {
  DetectorScores s;
  s.exposure_fraction = exposure_fraction(img, cfg.exposure_bright, cfg.exposure_dark);
  const GrayBuffer gray = to_grayscale(img);
  s.laplacian_variance = gray.width() >= 3 && gray.height() >= 3 ? laplacian_variance(gray) : 0.0;
  if (gray.width() >= cfg.flatness_patch && gray.height() >= cfg.flatness_patch) {
    s.flatness_ratio = flatness_ratio(gray, cfg.flatness_patch, cfg.flatness_var_min);
  }
  s.shannon_entropy = shannon_entropy(gray);
  return s;
}

std::vector<FilterVerdict> gate_cohort(std::vector<ScoredImage> cohort, const PurifyConfig& cfg) {
  if (cohort.empty()) throw ValidationError("cannot purify an empty cohort");

  std::vector<ScoredId> entropies;
  entropies.reserve(cohort.size());
  for (const auto& c : cohort) entropies.emplace_back(c.id, c.scores.shannon_entropy);
  const auto entropy_kept = cohort_percentile_gate(entropies, cfg.entropy_keep);

  std::set<std::string> aesthetic_kept;
  if (cfg.aesthetics_enabled) {
    std::vector<AestheticEntry> entries;
    for (const auto& c : cohort) {
      if (!c.scores.aesthetic_a || !c.scores.aesthetic_b) {
        throw ValidationError("missing aesthetic scores for '" + c.id +
                              "' while the aesthetics gate is enabled");
      }
      entries.push_back({c.id, *c.scores.aesthetic_a, *c.scores.aesthetic_b});
    }
    aesthetic_kept = aesthetics_gate(entries, cfg.aesthetics_keep);
  }

  std::vector<FilterVerdict> verdicts;
  verdicts.reserve(cohort.size());
  for (auto& c : cohort) {
    FilterVerdict v;
    v.image_id = std::move(c.id);
    v.scores = c.scores;
    if (!exposure_passes(v.scores.exposure_fraction, cfg)) v.reject_reasons.emplace_back(kExposure);
    if (!sharpness_passes(v.scores.laplacian_variance, cfg)) {
      v.reject_reasons.emplace_back(kSharpness);
    }
    if (!v.scores.flatness_ratio || !flatness_passes(*v.scores.flatness_ratio, cfg)) {
      v.reject_reasons.emplace_back(kFlatness);
    }
    if (!entropy_kept.contains(v.image_id)) v.reject_reasons.emplace_back(kEntropy);
    if (cfg.aesthetics_enabled && !aesthetic_kept.contains(v.image_id)) {
      v.reject_reasons.emplace_back(kAesthetics);
    }
    v.passed = v.reject_reasons.empty();
    verdicts.push_back(std::move(v));
  }
  return verdicts;
}

std::vector<FilterVerdict> purify_cohort(const std::vector<CohortImage>& records,
                                         const std::map<std::string, AestheticScores>& external,
                                         const PurifyConfig& cfg, int workers) {
  if (records.empty()) throw ValidationError("cannot purify an empty cohort");
  std::vector<ScoredImage> scored(records.size());
  parallel_for(records.size(), workers, [&](std::size_t i) {
    scored[i].id = records[i].id;
    scored[i].scores = score_image(records[i].image, cfg);
  });
  for (auto& s : scored) {
    if (auto it = external.find(s.id); it != external.end()) {
      s.scores.aesthetic_a = it->second.s_l;
      s.scores.aesthetic_b = it->second.s_a;
    }
  }
  return gate_cohort(std::move(scored), cfg);
}

std::map<std::string, AestheticScores> read_aesthetic_scores(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scores file " + path.string());
  std::map<std::string, AestheticScores> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto id = j.at("id").get<std::string>();
      AestheticScores s{j.at("s_l").get<double>(), j.at("s_a").get<double>()};
      if (!out.emplace(id, s).second) {
        throw ValidationError("duplicate id '" + id + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace pixcurate
