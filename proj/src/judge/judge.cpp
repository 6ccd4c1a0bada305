#include "pixcurate/judge.hpp"

#include <charconv>
#include <algorithm>
#include <cmath>
#include <set>

#include "json.hpp"

#include "pixcurate/codec.hpp"

namespace pixcurate {

namespace assets {
extern const std::string_view kGlobalFidelityPrompt;
extern const std::string_view kLocalFidelityPrompt;
extern const std::string_view kIcsPrompt;
}  // namespace assets

TemplateId parse_template_id(std::string_view name) {
  if (name == "global_fidelity") return TemplateId::GlobalFidelity;
  if (name == "local_fidelity") return TemplateId::LocalFidelity;
  if (name == "ics") return TemplateId::Ics;
  throw ValidationError("unknown template id '" + std::string(name) +
                        "' (expected global_fidelity, local_fidelity or ics)");
}

const char* template_name(TemplateId id) {
  switch (id) {
    case TemplateId::GlobalFidelity:
      return "global_fidelity";
    case TemplateId::LocalFidelity:
      return "local_fidelity";
    case TemplateId::Ics:
      return "ics";
  }
  return "ics";
}

std::string_view template_text(TemplateId id) {
  switch (id) {
    case TemplateId::GlobalFidelity:
      return assets::kGlobalFidelityPrompt;
    case TemplateId::LocalFidelity:
      return assets::kLocalFidelityPrompt;
    case TemplateId::Ics:
      return assets::kIcsPrompt;
  }
  return {};
}

namespace {

bool is_placeholder_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

// Calls on_text for literal runs and on_var for {name} placeholders.
template <typename OnText, typename OnVar>
void scan_template(std::string_view t, OnText&& on_text, OnVar&& on_var) {
  std::size_t i = 0;
  while (i < t.size()) {
    if (t.compare(i, 2, "{{") == 0) {
      on_text("{");
      i += 2;
    } else if (t.compare(i, 2, "}}") == 0) {
      on_text("}");
      i += 2;
    } else if (t[i] == '{') {
      std::size_t j = i + 1;
      while (j < t.size() && is_placeholder_char(t[j])) ++j;
      if (j < t.size() && t[j] == '}' && j > i + 1) {
        on_var(t.substr(i + 1, j - i - 1));
        i = j + 1;
      } else {
        on_text(t.substr(i, 1));
        ++i;
      }
    } else {
      const std::size_t next = t.find_first_of("{}", i + 1);
      const std::size_t end = next == std::string_view::npos ? t.size() : next;
      on_text(t.substr(i, end - i));
      i = end;
    }
  }
}

}  // namespace

std::vector<std::string> template_placeholders(TemplateId id) {
  std::vector<std::string> names;
  scan_template(
      template_text(id), [](std::string_view) {},
      [&](std::string_view name) {
        if (std::find(names.begin(), names.end(), name) == names.end()) names.emplace_back(name);
      });
  return names;
}

ImagePayload png_payload(const ImageBuffer& img) {
  return ImagePayload{"image/png", base64_encode(encode_png(img))};
}

int expected_image_count(TemplateId id) { return id == TemplateId::LocalFidelity ? 2 : 1; }

std::vector<ChatMessage> render_prompt(TemplateId id, const std::map<std::string, std::string>& vars,
                                       std::vector<ImagePayload> images) {
  if (!images.empty() && static_cast<int>(images.size()) != expected_image_count(id)) {
    throw ValidationError(std::string(template_name(id)) + " takes " +
                          std::to_string(expected_image_count(id)) + " image(s), got " +
                          std::to_string(images.size()));
  }
  std::string text;
  scan_template(
      template_text(id), [&](std::string_view s) { text.append(s); },
      [&](std::string_view name) {
        const auto it = vars.find(std::string(name));
        if (it == vars.end()) {
          throw ValidationError(std::string(template_name(id)) + " needs a value for {" +
                                std::string(name) + "}");
        }
        text.append(it->second);
      });
  return {ChatMessage{"user", std::move(text), std::move(images)}};
}

std::string format_relative_coords(const PatchSpec& patch, int img_w, int img_h) {
  if (img_w < 1 || img_h < 1) throw ValidationError("image dimensions must be positive");
  const double values[4] = {static_cast<double>(patch.x0) / img_w, static_cast<double>(patch.y0) / img_h,
                            static_cast<double>(patch.x1()) / img_w,
                            static_cast<double>(patch.y1()) / img_h};
  std::string out = "[";
  for (int i = 0; i < 4; ++i) {
    const double rounded = std::round(values[i] * 1e4) / 1e4;
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), rounded);
    if (i > 0) out += ", ";
    out.append(buf, res.ptr);
  }
  out += "]";
  return out;
}

const std::vector<std::string>& required_keys(TemplateId id) {
  static const std::vector<std::string> kGlobal{"SC-global", "PI", "LC", "CH"};
  static const std::vector<std::string> kLocal{"NGE", "GA", "TF", "MGC", "SC-local"};
  static const std::vector<std::string> kIcs{"IEV", "AAA", "SRA"};
  switch (id) {
    case TemplateId::GlobalFidelity:
      return kGlobal;
    case TemplateId::LocalFidelity:
      return kLocal;
    case TemplateId::Ics:
      return kIcs;
  }
  return kIcs;
}

ScoreRange score_range(TemplateId id) {
  return id == TemplateId::Ics ? ScoreRange{1, 10} : ScoreRange{1, 5};
}

JudgeResult extract_judge_json(std::string_view raw, TemplateId id) {
  using Kind = JudgeFormatError::Kind;
  const std::size_t open = raw.find("<json>");
  const std::size_t close = open == std::string_view::npos ? open : raw.find("</json>", open + 6);
  if (open == std::string_view::npos || close == std::string_view::npos) {
    throw JudgeFormatError(Kind::MissingTag, "response has no <json>...</json> block");
  }
  const std::string_view body = raw.substr(open + 6, close - open - 6);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body, nullptr, /*allow_exceptions=*/true, /*ignore_comments=*/false);
  } catch (const nlohmann::json::parse_error& e) {
    throw JudgeFormatError(Kind::MalformedJson, std::string("malformed judge JSON: ") + e.what());
  }
  if (!j.is_object()) throw JudgeFormatError(Kind::MalformedJson, "judge JSON is not an object");

  JudgeResult result;
  result.raw = std::string(raw);
  const ScoreRange range = score_range(id);
  for (const auto& key : required_keys(id)) {
    const auto it = j.find(key);
    if (it == j.end()) throw JudgeFormatError(Kind::MissingKey, "judge JSON lacks \"" + key + "\"");
    if (!it->is_number_integer()) {
      throw JudgeFormatError(Kind::MalformedJson, "\"" + key + "\" is not an integer");
    }
    const auto v = it->get<std::int64_t>();
    if (v < range.lo || v > range.hi) {
      throw JudgeFormatError(Kind::OutOfRange, "\"" + key + "\" = " + std::to_string(v) +
                                                   " outside [" + std::to_string(range.lo) + ", " +
                                                   std::to_string(range.hi) + "]");
    }
    result.scores.emplace(key, static_cast<int>(v));
  }
  const auto reasoning = j.find("reasoning");
  if (reasoning == j.end()) throw JudgeFormatError(Kind::MissingKey, "judge JSON lacks \"reasoning\"");
  if (!reasoning->is_string()) {
    throw JudgeFormatError(Kind::MalformedJson, "\"reasoning\" is not a string");
  }
  result.reasoning = reasoning->get<std::string>();
  return result;
}

int WeightConfig::weight(const std::string& key) const {
  const auto it = weights.find(key);
  return it == weights.end() ? 1 : it->second;
}

void WeightConfig::validate() const {
  for (const auto& [key, w] : weights) {
    if (w < 1) throw ValidationError("weight for " + key + " must be positive");
  }
  if (alpha < 0.0 || beta < 0.0 || std::abs(alpha + beta - 1.0) > 1e-9) {
    throw ValidationError("ICS alpha and beta must be non-negative and sum to 1");
  }
}

double msfi_dimension_score(std::span<const double> scores, std::span<const double> weights) {
  if (scores.empty()) throw ValidationError("dimension score needs at least one sub-score");
  if (scores.size() != weights.size()) {
    throw ValidationError("sub-score and weight lists differ in length");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] < 1.0 || scores[i] > 5.0) throw ValidationError("sub-score outside [1, 5]");
    if (!(weights[i] > 0.0)) throw ValidationError("weights must be positive");
    num += weights[i] * scores[i];
    den += weights[i];
  }
  return num / den;
}

double dimension_score(const JudgeResult& result, TemplateId id, const WeightConfig& weights) {
  std::vector<double> s;
  std::vector<double> w;
  for (const auto& key : required_keys(id)) {
    const auto it = result.scores.find(key);
    if (it == result.scores.end()) throw ValidationError("judge result lacks \"" + key + "\"");
    s.push_back(it->second);
    w.push_back(weights.weight(key));
  }
  return msfi_dimension_score(s, w);
}

double msfi_index(const JudgeResult& global, const std::vector<JudgeResult>& locals,
                  const WeightConfig& weights) {
  if (locals.size() != kMsfiLocalPatches) {
    throw ValidationError("MSFI needs exactly 10 local results, got " +
                          std::to_string(locals.size()));
  }
  weights.validate();
  const double s_global = dimension_score(global, TemplateId::GlobalFidelity, weights);
  double local_sum = 0.0;
  for (const auto& l : locals) local_sum += dimension_score(l, TemplateId::LocalFidelity, weights);
  const double w_l = s_global / 5.0;
  return s_global + w_l * (local_sum / kMsfiLocalPatches);
}

double ics_score(int iev, int aaa, int sra, double alpha, double beta) {
  for (const int v : {iev, aaa, sra}) {
    if (v < 1 || v > 10) throw ValidationError("ICS inputs must be integers in [1, 10]");
  }
  return std::sqrt(iev / 10.0) * (alpha * aaa + beta * sra);
}

double ics_score(const JudgeResult& result, const WeightConfig& weights) {
  weights.validate();
  auto get = [&](const char* key) {
    const auto it = result.scores.find(key);
    if (it == result.scores.end()) throw ValidationError(std::string("judge result lacks ") + key);
    return it->second;
  };
  return ics_score(get("IEV"), get("AAA"), get("SRA"), weights.alpha, weights.beta);
}

}  // namespace pixcurate
