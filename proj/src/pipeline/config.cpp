#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>

#include "pixcurate/errors.hpp"
#include "pixcurate/pipeline.hpp"

namespace pixcurate {

namespace {

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string fmt(std::int64_t v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }

template <typename T>
T parse_number(const std::string& key, const std::string& s) {
  T v{};
  const char* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    throw ValidationError("config " + key + ": '" + s + "' is not a valid number");
  }
  return v;
}

int parse_int(const std::string& key, const std::string& s) { return parse_number<int>(key, s); }

double parse_double(const std::string& key, const std::string& s) {
  const double v = parse_number<double>(key, s);
  if (!std::isfinite(v)) throw ValidationError("config " + key + " must be finite");
  return v;
}

bool parse_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ValidationError("config " + key + ": '" + s + "' is not a boolean");
}

// Empty or "off" disables an optional threshold.
std::optional<double> parse_optional(const std::string& key, const std::string& s) {
  if (s.empty() || s == "off" || s == "none") return std::nullopt;
  return parse_double(key, s);
}

std::string fmt_optional(const std::optional<double>& v) { return v ? fmt(*v) : "off"; }

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) continue;
    out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

struct Key {
  const char* name;
  std::function<void(PipelineConfig&, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

#define PC_INT(NAME, FIELD)                                                             \
  Key {                                                                                 \
    NAME, [](PipelineConfig& c, const std::string& v) { c.FIELD = parse_int(NAME, v); }, \
        [](const PipelineConfig& c) { return fmt(static_cast<std::int64_t>(c.FIELD)); }  \
  }
#define PC_U64(NAME, FIELD)                                                           \
  Key {                                                                               \
    NAME,                                                                             \
        [](PipelineConfig& c, const std::string& v) {                                 \
          c.FIELD = parse_number<std::uint64_t>(NAME, v);                             \
        },                                                                            \
        [](const PipelineConfig& c) { return std::to_string(c.FIELD); }               \
  }
#define PC_DBL(NAME, FIELD)                                                                 \
  Key {                                                                                     \
    NAME, [](PipelineConfig& c, const std::string& v) { c.FIELD = parse_double(NAME, v); }, \
        [](const PipelineConfig& c) { return fmt(c.FIELD); }                                \
  }
#define PC_BOOL(NAME, FIELD)                                                              \
  Key {                                                                                   \
    NAME, [](PipelineConfig& c, const std::string& v) { c.FIELD = parse_bool(NAME, v); }, \
        [](const PipelineConfig& c) { return fmt(c.FIELD); }                              \
  }
#define PC_OPT(NAME, FIELD)                                                                   \
  Key {                                                                                       \
    NAME, [](PipelineConfig& c, const std::string& v) { c.FIELD = parse_optional(NAME, v); }, \
        [](const PipelineConfig& c) { return fmt_optional(c.FIELD); }                         \
  }
#define PC_STR(NAME, FIELD)                                                     \
  Key {                                                                         \
    NAME, [](PipelineConfig& c, const std::string& v) { c.FIELD = v; },         \
        [](const PipelineConfig& c) { return std::string(c.FIELD); }            \
  }

const std::vector<Key>& keys() {
  static const std::vector<Key> table{
      PC_INT("exposure.bright", purify.exposure_bright),
      PC_INT("exposure.dark", purify.exposure_dark),
      PC_DBL("exposure.max_fraction", purify.exposure_max_fraction),
      PC_DBL("sharpness.min", purify.sharpness_min),
      PC_INT("flatness.patch", purify.flatness_patch),
      PC_DBL("flatness.var_min", purify.flatness_var_min),
      PC_DBL("flatness.max_fraction", purify.flatness_max_fraction),
      PC_DBL("entropy.keep", purify.entropy_keep),
      PC_BOOL("aesthetics.enabled", purify.aesthetics_enabled),
      PC_DBL("aesthetics.keep", purify.aesthetics_keep),
      PC_STR("aesthetics.scores", aesthetic_scores),
      PC_U64("srqa.native_pixels", tier.native_pixels),
      PC_U64("srqa.x2_min_pixels", tier.x2_min_pixels),
      PC_INT("srqa.x2_min_side", tier.x2_min_side),
      PC_U64("srqa.x4_min_pixels", tier.x4_min_pixels),
      PC_INT("srqa.x4_min_side", tier.x4_min_side),
      PC_INT("srqa.seam_stride", seam.stride),
      PC_INT("srqa.seam_band", seam.band),
      PC_DBL("srqa.seam_epsilon", seam.epsilon),
      PC_DBL("srqa.seam_max_ratio", seam.max_ratio),
      PC_OPT("srqa.psnr_min", consistency.psnr_min),
      PC_OPT("srqa.ssim_min", consistency.ssim_min),
      PC_OPT("srqa.perceptual_max", consistency.perceptual_max),
      PC_INT("srqa.region_patch", region.patch),
      PC_INT("srqa.region_k_texture", region.k_texture),
      PC_INT("srqa.region_k_random", region.k_random),
      PC_INT("srqa.region_max_flagged", region.max_flagged),
      PC_DBL("instance.nms_iou", instance.nms_iou),
      PC_DBL("instance.min_area", instance.min_area),
      PC_DBL("instance.pad", instance.pad),
      PC_STR("instance.boxes", instance_boxes),
      PC_INT("glcm.levels", glcm.levels),
      PC_INT("glcm.patch", glcm.patch),
      Key{"glcm.distances",
          [](PipelineConfig& c, const std::string& v) {
            c.glcm.distances.clear();
            for (const auto& item : split_list(v)) c.glcm.distances.push_back(parse_int("glcm.distances", item));
          },
          [](const PipelineConfig& c) {
            std::string s;
            for (const int d : c.glcm.distances) s += (s.empty() ? "" : ",") + std::to_string(d);
            return s;
          }},
      Key{"glcm.angles_deg",
          [](PipelineConfig& c, const std::string& v) {
            c.glcm.angles.clear();
            for (const auto& item : split_list(v)) {
              c.glcm.angles.push_back(parse_double("glcm.angles_deg", item) * std::numbers::pi / 180.0);
            }
          },
          [](const PipelineConfig& c) {
            std::string s;
            for (const double a : c.glcm.angles) {
              s += (s.empty() ? "" : ",") + fmt(std::round(a * 180.0 / std::numbers::pi * 1e6) / 1e6);
            }
            return s;
          }},
      PC_STR("judge.url", judge_url),
      PC_STR("judge.model", judge_model),
      PC_INT("judge.max_in_flight", judge_max_in_flight),
      PC_DBL("judge.alpha", judge_weights.alpha),
      PC_DBL("judge.beta", judge_weights.beta),
      PC_INT("retry.max_attempts", retry.max_attempts),
      Key{"retry.base_delay_ms",
          [](PipelineConfig& c, const std::string& v) {
            c.retry.base_delay = std::chrono::milliseconds(parse_int("retry.base_delay_ms", v));
          },
          [](const PipelineConfig& c) { return std::to_string(c.retry.base_delay.count()); }},
      PC_DBL("retry.factor", retry.factor),
      PC_INT("decode.max_width", decode.max_width),
      PC_INT("decode.max_height", decode.max_height),
      PC_INT("pipeline.workers", workers),
      PC_U64("pipeline.seed", seed),
      PC_STR("embedder.url", embedder_url),
      PC_STR("fg_embedder.url", fg_embedder_url),
      PC_STR("scorer.url", scorer_url),
      PC_STR("flag.url", flag_url),
      PC_INT("bench.fid_patch", bench.fid_patch),
      PC_INT("bench.fid_patches_per_image", bench.fid_patches_per_image),
      PC_INT("bench.local_patches_texture", bench.local_patches_texture),
      PC_INT("bench.local_patches_random", bench.local_patches_random),
      PC_BOOL("bench.glcm", bench.glcm),
      PC_BOOL("bench.raps", bench.raps),
  };
  return table;
}

#undef PC_INT
#undef PC_U64
#undef PC_DBL
#undef PC_BOOL
#undef PC_OPT
#undef PC_STR

constexpr std::string_view kWeightPrefix = "judge.weight.";

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError("config: " + what);
}

void validate(const PipelineConfig& c) {
  const auto& p = c.purify;
  require(p.exposure_dark >= 0 && p.exposure_bright <= 255 && p.exposure_dark <= p.exposure_bright,
          "exposure.dark and exposure.bright must satisfy 0 <= dark <= bright <= 255");
  require(p.exposure_max_fraction >= 0 && p.exposure_max_fraction <= 1,
          "exposure.max_fraction must lie in [0, 1]");
  require(p.sharpness_min >= 0, "sharpness.min must be non-negative");
  require(p.flatness_patch >= 3, "flatness.patch must be at least 3");
  require(p.flatness_max_fraction >= 0 && p.flatness_max_fraction <= 1,
          "flatness.max_fraction must lie in [0, 1]");
  require(p.entropy_keep > 0 && p.entropy_keep <= 1, "entropy.keep must lie in (0, 1]");
  require(p.aesthetics_keep > 0 && p.aesthetics_keep <= 1, "aesthetics.keep must lie in (0, 1]");
  require(c.tier.x4_min_pixels <= c.tier.x2_min_pixels && c.tier.x2_min_pixels < c.tier.native_pixels,
          "tier pixel bounds must satisfy x4_min <= x2_min < native");
  require(c.seam.stride >= 16 && c.seam.band >= 1 && c.seam.epsilon > 0 && c.seam.max_ratio > 0,
          "seam settings out of range");
  require(c.region.patch >= 3 && c.region.k_texture >= 0 && c.region.k_random >= 0 &&
              c.region.max_flagged >= 0,
          "region settings out of range");
  require(c.instance.nms_iou >= 0 && c.instance.nms_iou <= 1 && c.instance.min_area >= 0 &&
              c.instance.pad >= 0,
          "instance settings out of range");
  require(c.glcm.levels >= 2 && c.glcm.levels <= 256, "glcm.levels must lie in [2, 256]");
  require(c.glcm.patch >= 2, "glcm.patch must be at least 2");
  require(!c.glcm.distances.empty() && !c.glcm.angles.empty(), "glcm needs distances and angles");
  for (const int d : c.glcm.distances) require(d >= 1, "glcm.distances must be positive");
  require(c.judge_max_in_flight >= 1, "judge.max_in_flight must be at least 1");
  c.judge_weights.validate();
  require(c.retry.max_attempts >= 1 && c.retry.base_delay.count() >= 0 && c.retry.factor >= 1,
          "retry settings out of range");
  require(c.decode.max_width >= 1 && c.decode.max_height >= 1, "decode limits must be positive");
  require(c.workers >= 1, "pipeline.workers must be at least 1");
  require(c.bench.fid_patch >= 1 && c.bench.fid_patches_per_image >= 0 &&
              c.bench.local_patches_texture >= 0 && c.bench.local_patches_random >= 0,
          "bench settings out of range");
}

}  // namespace

PipelineConfig parse_config(const std::string& text) {
  // property_tree's INI reader only knows ';' comments.
  std::string cleaned;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    const auto first = line.find_first_not_of(" \t");
    if (first != std::string::npos && line[first] == '#') continue;
    cleaned += line;
    cleaned += '\n';
  }
  boost::property_tree::ptree tree;
  std::istringstream in(cleaned);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }

  PipelineConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ValidationError("config: key '" + section + "' is outside a section");
    for (const auto& [name, value] : body) {
      const std::string full = section + "." + name;
      const std::string v = value.get_value<std::string>();
      if (full.rfind(kWeightPrefix, 0) == 0) {
        cfg.judge_weights.weights[full.substr(kWeightPrefix.size())] = parse_int(full, v);
        continue;
      }
      const auto& table = keys();
      const auto it = std::find_if(table.begin(), table.end(), [&](const Key& k) { return full == k.name; });
      if (it == table.end()) throw ValidationError("config: unknown key '" + full + "'");
      it->set(cfg, v);
    }
  }
  validate(cfg);
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const PipelineConfig& cfg) {
  std::string out;
  for (const auto& k : keys()) out += std::string(k.name) + " = " + k.get(cfg) + "\n";
  for (const auto& [key, w] : cfg.judge_weights.weights) {
    out += std::string(kWeightPrefix) + key + " = " + std::to_string(w) + "\n";
  }
  return out;
}

EndpointConfig endpoint_config(const PipelineConfig& cfg, const std::string& url) {
  EndpointConfig e;
  e.base_url = url;
  e.max_in_flight = cfg.judge_max_in_flight;
  e.api_key = judge_api_key_from_env();
  return e;
}

}  // namespace pixcurate
