#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "pixcurate/client.hpp"
#include "pixcurate/codec.hpp"
#include "pixcurate/judge.hpp"
#include "pixcurate/metrics.hpp"
#include "pixcurate/purify.hpp"
#include "pixcurate/srqa.hpp"

namespace pixcurate {

// ---- configuration ------------------------------------------------------------

struct RegionConfig {
  int patch = 768;
  int k_texture = 6;
  int k_random = 4;
  // An image is dropped when more than this many sampled patches are flagged.
  int max_flagged = 1;
};

struct InstanceConfig {
  double nms_iou = 0.5;
  double min_area = 1024.0;
  double pad = 0.05;
};

struct BenchConfig {
  int fid_patch = 512;
  int fid_patches_per_image = 8;
  int local_patches_texture = 6;
  int local_patches_random = 4;
  bool glcm = true;
  bool raps = true;
};

struct PipelineConfig {
  PurifyConfig purify;
  TierConfig tier;
  SeamConfig seam;
  ConsistencyThresholds consistency;
  RegionConfig region;
  InstanceConfig instance;
  GLCMConfig glcm;
  WeightConfig judge_weights;
  BenchConfig bench;
  RetryPolicy retry;
  DecodeLimits decode;
  int workers = 1;
  std::uint64_t seed = 0;

  // Optional external services; an empty URL disables the service.
  std::string judge_url;
  std::string judge_model;
  int judge_max_in_flight = 4;
  std::string embedder_url;     // FID, FID_patch, CLIPScore, perceptual distance
  std::string fg_embedder_url;  // FG-CLIP2 score
  std::string scorer_url;       // aesthetics column of the bench
  std::string flag_url;         // region and instance artifact checks
  std::filesystem::path aesthetic_scores;  // S_L / S_A sidecar for purification
  std::filesystem::path instance_boxes;    // detection sidecar for the final stage
};

// INI-style file: [section] headers and key = value lines. Unknown sections or
// keys are a ValidationError so typos do not silently fall back to defaults.
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig parse_config(const std::string& text);

// Every key with its effective value, one "section.key = value" per line in a
// fixed order.
std::string dump_config(const PipelineConfig& cfg);

EndpointConfig endpoint_config(const PipelineConfig& cfg, const std::string& url);

// ---- manifest ---------------------------------------------------------------------

enum class Stage { Collected, Purified, Tiered, SrChecked, Final };

const char* stage_name(Stage s);
Stage parse_stage(std::string_view name);

struct ManifestRecord {
  std::string id;
  std::string path;
  Stage stage = Stage::Collected;
  bool passed = true;
  std::vector<std::string> reasons;
  std::map<std::string, double> scores;
  std::map<std::string, std::string> tags;
  std::string timestamp;

  bool operator==(const ManifestRecord&) const = default;
};

// One compact JSON object, no trailing newline.
std::string manifest_line(const ManifestRecord& r);
ManifestRecord parse_manifest_line(const std::string& line);

struct ManifestContents {
  std::vector<ManifestRecord> records;
  // True when the file ends in an unterminated line, which is ignored.
  bool truncated_tail = false;
};

// Reads every complete line. A missing file reads as empty. Corrupt complete
// lines raise ValidationError naming each bad line number.
ManifestContents read_manifest(const std::filesystem::path& path);

// Single-writer appender. Opening trims an unterminated trailing line left by
// an interrupted run; each append is one write(2) on an O_APPEND descriptor.
class ManifestWriter {
 public:
  explicit ManifestWriter(const std::filesystem::path& path);
  ~ManifestWriter();
  ManifestWriter(const ManifestWriter&) = delete;
  ManifestWriter& operator=(const ManifestWriter&) = delete;

  // Fills an empty timestamp, then appends. Throws ValidationError on a
  // duplicate (id, stage) and IoError on write failure.
  void append(ManifestRecord r);
  bool contains(const std::string& id, Stage stage) const;

  // Replaces the wall clock, mainly for reproducible tests.
  void set_clock(std::function<std::string()> clock) { clock_ = std::move(clock); }

 private:
  int fd_ = -1;
  std::filesystem::path path_;
  std::set<std::pair<std::string, Stage>> keys_;
  std::function<std::string()> clock_;
};

std::string utc_timestamp();

// ---- stages -------------------------------------------------------------------------

struct StageSummary {
  Stage stage = Stage::Collected;
  std::size_t input = 0;
  std::size_t kept = 0;
  std::size_t rejected = 0;
  std::size_t skipped = 0;  // already recorded for this stage
  std::map<std::string, std::size_t> reasons;
};

// Walks image_root recursively (sorted) and records every image file. The id
// is the path relative to the root without its extension.
StageSummary run_collect_stage(const std::filesystem::path& image_root, ManifestWriter& out);

// Purifies the collected records not yet purified. Undecodable images are
// rejected with reason "decode_error".
StageSummary run_purify_stage(const ManifestContents& manifest, ManifestWriter& out,
                              const PipelineConfig& cfg);

StageSummary run_tier_stage(const ManifestContents& manifest, ManifestWriter& out,
                            const PipelineConfig& cfg);

// Native images pass through. X2/X4 images need a super-resolved file named
// "<id>.<ext>" under sr_root and must pass the seam and consistency checks.
StageSummary run_sr_check_stage(const ManifestContents& manifest, ManifestWriter& out,
                                const std::filesystem::path& sr_root, const PipelineConfig& cfg,
                                const PerceptualDistance& perceptual = nullptr);

// Returns true when the image region shows a noticeable artifact.
using ArtifactCheck = std::function<bool(const std::string& id, const ImageBuffer& region)>;

struct FinalChecks {
  ArtifactCheck region;    // applied to hybrid-sampled patches
  ArtifactCheck instance;  // applied to padded instance crops
  // Per-image detections for the instance check.
  std::map<std::string, std::vector<BBox>> boxes;
};

StageSummary run_final_stage(const ManifestContents& manifest, ManifestWriter& out,
                             const PipelineConfig& cfg, const FinalChecks& checks);

// Detection sidecar: JSON Lines {"id", "boxes": [[x_min, y_min, x_max, y_max, score], ...]}.
std::map<std::string, std::vector<BBox>> read_instance_boxes(const std::filesystem::path& path);

// Stable per-image seed derived from the run seed and the image id.
std::uint64_t image_seed(std::uint64_t seed, const std::string& id);

// ---- reporting ------------------------------------------------------------------------

struct DataflowRow {
  std::string stage;
  std::string subset;
  std::size_t count = 0;
};

// Up to three rows: images collected, images that passed purification, and
// images that passed the final stage. Rows appear only for stages present.
std::vector<DataflowRow> dataflow_report(const ManifestContents& manifest);

// Per-stage pass/reject counts and reject reasons.
std::vector<StageSummary> stage_summaries(const ManifestContents& manifest);

// ---- benchmark ---------------------------------------------------------------------------

struct BenchImage {
  std::string id;
  std::filesystem::path path;
};

struct Caption {
  std::string short_text;
  std::string long_text;
};

// Caption sidecar: JSON Lines {"id", "short", "long"}.
std::map<std::string, Caption> read_captions(const std::filesystem::path& path);

struct BenchRow {
  std::string method;
  std::optional<double> fid;
  std::optional<double> fid_patch;
  std::optional<double> aesthetics;
  std::optional<double> glcm_score;
  std::optional<double> msfi;
  std::optional<double> clip_score;
  std::optional<double> fg_clip2_score;
  std::optional<double> ics;
  std::optional<std::vector<double>> raps;
  // Metric name -> reason, for cells left empty after an endpoint failure.
  std::map<std::string, std::string> failures;
};

struct BenchServices {
  std::optional<EmbedderClient> embedder;
  std::optional<EmbedderClient> fg_embedder;
  std::optional<ScorerClient> scorer;
  std::optional<JudgeClient> judge;
};

BenchServices bench_services(const PipelineConfig& cfg);

// 1 - cos(embedding(a), embedding(b)); the embedder must outlive the result.
PerceptualDistance embedding_perceptual_distance(const EmbedderClient& embedder);

// Computes every enabled metric. Endpoint failures leave the cell empty; if
// no local metric is enabled and every requested remote metric failed the run
// throws EndpointError.
BenchRow run_bench(const std::string& method, const std::vector<BenchImage>& generated,
                   const std::vector<BenchImage>& reference,
                   const std::map<std::string, Caption>& captions, const BenchServices& services,
                   const PipelineConfig& cfg);

std::string bench_json(const BenchRow& row);
std::string bench_csv(const std::vector<BenchRow>& rows);

// Image files under a directory, sorted, with ids relative to it.
std::vector<BenchImage> list_images(const std::filesystem::path& root);

}  // namespace pixcurate
