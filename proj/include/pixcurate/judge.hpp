#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pixcurate/errors.hpp"
#include "pixcurate/image.hpp"

namespace pixcurate {

enum class TemplateId { GlobalFidelity, LocalFidelity, Ics };

// "global_fidelity", "local_fidelity" or "ics"; anything else is a
// ValidationError.
TemplateId parse_template_id(std::string_view name);
const char* template_name(TemplateId id);

// Raw template text, with {name} placeholders and {{ }} brace escapes.
std::string_view template_text(TemplateId id);

// Placeholders the template requires, in first-appearance order.
std::vector<std::string> template_placeholders(TemplateId id);

struct ImagePayload {
  std::string mime = "image/png";
  std::string base64;
};

ImagePayload png_payload(const ImageBuffer& img);

struct ChatMessage {
  std::string role;
  std::string text;
  // Attached ahead of the text, in order.
  std::vector<ImagePayload> images;
};

// Number of images each template expects: the local template takes the patch
// first and the full image second.
int expected_image_count(TemplateId id);

// Substitutes every placeholder and unescapes braces. Throws ValidationError
// when a placeholder has no value or when images are given but their count
// does not match the template.
std::vector<ChatMessage> render_prompt(TemplateId id, const std::map<std::string, std::string>& vars,
                                       std::vector<ImagePayload> images = {});

// "[x_min, y_min, x_max, y_max]" normalised to the image, 4 decimals at most.
std::string format_relative_coords(const PatchSpec& patch, int img_w, int img_h);

// ---- response parsing ---------------------------------------------------------

class JudgeFormatError : public ValidationError {
 public:
  enum class Kind { MissingTag, MalformedJson, MissingKey, OutOfRange };
  JudgeFormatError(Kind kind, const std::string& what) : ValidationError(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct JudgeResult {
  std::map<std::string, int> scores;
  std::string reasoning;
  std::string raw;
};

struct ScoreRange {
  int lo = 1;
  int hi = 5;
};

// Sub-dimension keys a response must carry, in rubric order.
const std::vector<std::string>& required_keys(TemplateId id);
ScoreRange score_range(TemplateId id);

// Takes the first <json>...</json> span, parses it as strict JSON and checks
// that every sub-dimension is an integer inside the template's range and that
// "reasoning" is a string.
JudgeResult extract_judge_json(std::string_view raw, TemplateId id);

// ---- aggregation ----------------------------------------------------------------

struct WeightConfig {
  // Per sub-dimension integer importance weights; missing keys weigh 1.
  std::map<std::string, int> weights;
  double alpha = 0.6;
  double beta = 0.4;

  int weight(const std::string& key) const;
  void validate() const;
};

// sum(w_i * s_i) / sum(w_i) over scores in [1, 5].
double msfi_dimension_score(std::span<const double> scores, std::span<const double> weights);

// Weighted dimension score of one judge result under the template's keys.
double dimension_score(const JudgeResult& result, TemplateId id, const WeightConfig& weights);

inline constexpr int kMsfiLocalPatches = 10;

// S_global + (S_global / 5) * mean(S_local) over exactly ten local results.
double msfi_index(const JudgeResult& global, const std::vector<JudgeResult>& locals,
                  const WeightConfig& weights = {});

// sqrt(iev / 10) * (alpha * aaa + beta * sra), inputs in [1, 10].
double ics_score(int iev, int aaa, int sra, double alpha = 0.6, double beta = 0.4);
double ics_score(const JudgeResult& result, const WeightConfig& weights = {});

}  // namespace pixcurate
