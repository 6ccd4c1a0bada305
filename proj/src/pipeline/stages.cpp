#include <algorithm>
#include <array>
#include <fstream>

#include "json.hpp"
#include "pixcurate/errors.hpp"
#include "pixcurate/parallel.hpp"
#include "pixcurate/pipeline.hpp"

namespace pixcurate {

namespace {

// Passed records of `stage`, in manifest order, first entry per id.
std::vector<const ManifestRecord*> passed_at(const ManifestContents& m, Stage stage) {
  std::vector<const ManifestRecord*> out;
  std::set<std::string> seen;
  for (const auto& r : m.records) {
    if (r.stage == stage && r.passed && seen.insert(r.id).second) out.push_back(&r);
  }
  return out;
}

struct Pending {
  std::vector<const ManifestRecord*> todo;
  std::size_t skipped = 0;
};

Pending pending_for(const ManifestContents& m, Stage from, Stage to, const ManifestWriter& out) {
  Pending p;
  for (const auto* r : passed_at(m, from)) {
    if (out.contains(r->id, to)) {
      ++p.skipped;
    } else {
      p.todo.push_back(r);
    }
  }
  return p;
}

void tally(StageSummary& s, const ManifestRecord& r) {
  ++s.input;
  if (r.passed) {
    ++s.kept;
  } else {
    ++s.rejected;
    for (const auto& reason : r.reasons) ++s.reasons[reason];
  }
}

void write_all(StageSummary& s, ManifestWriter& out, std::vector<ManifestRecord>& records) {
  for (auto& r : records) {
    tally(s, r);
    out.append(std::move(r));
  }
}

ManifestRecord next_record(const ManifestRecord& prev, Stage stage) {
  ManifestRecord r;
  r.id = prev.id;
  r.path = prev.path;
  r.stage = stage;
  r.tags = prev.tags;
  return r;
}

void reject(ManifestRecord& r, std::string reason) {
  r.passed = false;
  r.reasons.push_back(std::move(reason));
}

constexpr const char* kDecodeError = "decode_error";

}  // namespace

std::uint64_t image_seed(std::uint64_t seed, const std::string& id) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (const unsigned char c : id) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h ^ (seed * 0x9e3779b97f4a7c15ULL);
}

std::vector<BenchImage> list_images(const std::filesystem::path& root) {
  if (!std::filesystem::is_directory(root)) throw IoError(root.string() + " is not a directory");
  std::vector<BenchImage> out;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file() || !is_image_path(entry.path())) continue;
    auto rel = std::filesystem::relative(entry.path(), root);
    rel.replace_extension();
    out.push_back({rel.generic_string(), entry.path()});
  }
  std::sort(out.begin(), out.end(), [](const BenchImage& a, const BenchImage& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i].id == out[i - 1].id) {
      throw ValidationError("two images share the id '" + out[i].id + "' under " + root.string());
    }
  }
  return out;
}

StageSummary run_collect_stage(const std::filesystem::path& image_root, ManifestWriter& out) {
  const auto images = list_images(image_root);
  if (images.empty()) throw ValidationError("no images found under " + image_root.string());
  StageSummary s;
  s.stage = Stage::Collected;
  std::vector<ManifestRecord> records;
  for (const auto& img : images) {
    if (out.contains(img.id, Stage::Collected)) {
      ++s.skipped;
      continue;
    }
    ManifestRecord r;
    r.id = img.id;
    r.path = img.path.string();
    r.stage = Stage::Collected;
    records.push_back(std::move(r));
  }
  write_all(s, out, records);
  return s;
}

StageSummary run_purify_stage(const ManifestContents& manifest, ManifestWriter& out,
                              const PipelineConfig& cfg) {
  if (passed_at(manifest, Stage::Collected).empty()) {
    throw ValidationError("manifest holds no collected images to purify");
  }
  const auto pending = pending_for(manifest, Stage::Collected, Stage::Purified, out);
  StageSummary s;
  s.stage = Stage::Purified;
  s.skipped = pending.skipped;
  if (pending.todo.empty()) return s;

  std::map<std::string, AestheticScores> aesthetics;
  if (cfg.purify.aesthetics_enabled) {
    if (cfg.aesthetic_scores.empty()) {
      throw ValidationError("the aesthetics gate is enabled but aesthetics.scores is not set");
    }
    aesthetics = read_aesthetic_scores(cfg.aesthetic_scores);
  }

  const std::size_t n = pending.todo.size();
  struct Slot {
    std::optional<DetectorScores> scores;
    int width = 0;
    int height = 0;
    std::string reason;
    std::string error;
  };
  std::vector<Slot> slots(n);
  parallel_for(n, cfg.workers, [&](std::size_t i) {
    const auto& rec = *pending.todo[i];
    ImageBuffer img(1, 1, 1);
    try {
      img = decode_image(rec.path, cfg.decode);
    } catch (const std::runtime_error& e) {
      slots[i].reason = kDecodeError;
      slots[i].error = e.what();
      return;
    }
    slots[i].width = img.width();
    slots[i].height = img.height();
    try {
      slots[i].scores = score_image(img, cfg.purify);
    } catch (const ValidationError& e) {
      slots[i].reason = "unscorable";
      slots[i].error = e.what();
    }
  });

  std::vector<ScoredImage> cohort;
  for (std::size_t i = 0; i < n; ++i) {
    if (!slots[i].scores) continue;
    ScoredImage si{pending.todo[i]->id, *slots[i].scores};
    if (const auto it = aesthetics.find(si.id); it != aesthetics.end()) {
      si.scores.aesthetic_a = it->second.s_l;
      si.scores.aesthetic_b = it->second.s_a;
    }
    cohort.push_back(std::move(si));
  }
  std::map<std::string, FilterVerdict> verdicts;
  if (!cohort.empty()) {
    for (auto& v : gate_cohort(cohort, cfg.purify)) verdicts.emplace(v.image_id, std::move(v));
  }

  std::vector<ManifestRecord> records;
  for (std::size_t i = 0; i < n; ++i) {
    ManifestRecord r = next_record(*pending.todo[i], Stage::Purified);
    if (!slots[i].scores) {
      reject(r, slots[i].reason);
      r.tags["error"] = slots[i].error;
    } else {
      const auto& v = verdicts.at(r.id);
      r.passed = v.passed;
      r.reasons = v.reject_reasons;
      const auto& sc = v.scores;
      r.scores["width"] = slots[i].width;
      r.scores["height"] = slots[i].height;
      r.scores["exposure_fraction"] = sc.exposure_fraction;
      r.scores["laplacian_variance"] = sc.laplacian_variance;
      if (sc.flatness_ratio) r.scores["flatness_ratio"] = *sc.flatness_ratio;
      r.scores["shannon_entropy"] = sc.shannon_entropy;
      if (sc.aesthetic_a) r.scores["aesthetic_s_l"] = *sc.aesthetic_a;
      if (sc.aesthetic_b) r.scores["aesthetic_s_a"] = *sc.aesthetic_b;
    }
    records.push_back(std::move(r));
  }
  write_all(s, out, records);
  return s;
}

StageSummary run_tier_stage(const ManifestContents& manifest, ManifestWriter& out,
                            const PipelineConfig& cfg) {
  const auto pending = pending_for(manifest, Stage::Purified, Stage::Tiered, out);
  StageSummary s;
  s.stage = Stage::Tiered;
  s.skipped = pending.skipped;
  std::vector<ManifestRecord> records;
  for (const auto* prev : pending.todo) {
    ManifestRecord r = next_record(*prev, Stage::Tiered);
    int w = 0;
    int h = 0;
    const auto wi = prev->scores.find("width");
    const auto hi = prev->scores.find("height");
    if (wi != prev->scores.end() && hi != prev->scores.end()) {
      w = static_cast<int>(wi->second);
      h = static_cast<int>(hi->second);
    } else {
      try {
        const ImageBuffer img = decode_image(prev->path, cfg.decode);
        w = img.width();
        h = img.height();
      } catch (const std::runtime_error& e) {
        reject(r, kDecodeError);
        r.tags["error"] = e.what();
        records.push_back(std::move(r));
        continue;
      }
    }
    const auto t = upscale_tier(w, h, cfg.tier);
    r.scores["width"] = w;
    r.scores["height"] = h;
    r.scores["factor"] = upscale_factor(t.tier);
    r.tags["tier"] = tier_name(t.tier);
    if (t.tier == Tier::Rejected) {
      reject(r, "resolution");
      r.tags["tier_reason"] = t.reason;
    }
    records.push_back(std::move(r));
  }
  write_all(s, out, records);
  return s;
}

namespace {

std::optional<std::filesystem::path> find_sr_output(const std::filesystem::path& root,
                                                    const std::string& id) {
  static const std::array<const char*, 6> kExts{".png", ".ppm", ".pgm", ".pnm", ".jpg", ".jpeg"};
  for (const char* ext : kExts) {
    std::filesystem::path p = root / (id + ext);
    if (std::filesystem::is_regular_file(p)) return p;
  }
  return std::nullopt;
}

}  // namespace

StageSummary run_sr_check_stage(const ManifestContents& manifest, ManifestWriter& out,
                                const std::filesystem::path& sr_root, const PipelineConfig& cfg,
                                const PerceptualDistance& perceptual) {
  const auto pending = pending_for(manifest, Stage::Tiered, Stage::SrChecked, out);
  StageSummary s;
  s.stage = Stage::SrChecked;
  s.skipped = pending.skipped;
  const std::size_t n = pending.todo.size();
  std::vector<ManifestRecord> records(n);
  parallel_for(n, cfg.workers, [&](std::size_t i) {
    const auto& prev = *pending.todo[i];
    ManifestRecord& r = records[i] = next_record(prev, Stage::SrChecked);
    const auto tier = prev.tags.count("tier") ? prev.tags.at("tier") : std::string();
    if (tier == "Native") return;
    const int factor = tier == "X2" ? 2 : tier == "X4" ? 4 : 0;
    if (factor == 0) throw ValidationError("tiered record " + prev.id + " carries no usable tier");
    const auto sr_path = find_sr_output(sr_root, prev.id);
    if (!sr_path) {
      reject(r, "sr_missing");
      return;
    }
    r.tags["sr_path"] = sr_path->string();
    ImageBuffer original(1, 1, 1);
    ImageBuffer sr(1, 1, 1);
    try {
      original = decode_image(prev.path, cfg.decode);
      DecodeLimits sr_limits = cfg.decode;
      sr_limits.max_width *= factor;
      sr_limits.max_height *= factor;
      sr = decode_image(*sr_path, sr_limits);
    } catch (const std::runtime_error& e) {
      reject(r, kDecodeError);
      r.tags["error"] = e.what();
      return;
    }
    if (sr.width() != original.width() * factor || sr.height() != original.height() * factor ||
        sr.channels() != original.channels()) {
      reject(r, "sr_scale");
      return;
    }
    if (sr.width() > cfg.seam.stride || sr.height() > cfg.seam.stride) {
      const auto seams = seam_ratios(sr, cfg.seam);
      r.scores["seam_max_ratio"] = seams.max_ratio;
      if (!seam_passes(seams, cfg.seam)) reject(r, "seam");
    }
    const auto rep = consistency_check(sr, original, cfg.consistency, perceptual);
    r.scores["psnr"] = rep.psnr;
    r.scores["ssim"] = rep.ssim;
    if (rep.perceptual) r.scores["perceptual"] = *rep.perceptual;
    for (const auto& m : rep.failed_metrics) reject(r, "consistency_" + m);
  });
  write_all(s, out, records);
  return s;
}

StageSummary run_final_stage(const ManifestContents& manifest, ManifestWriter& out,
                             const PipelineConfig& cfg, const FinalChecks& checks) {
  const auto pending = pending_for(manifest, Stage::SrChecked, Stage::Final, out);
  StageSummary s;
  s.stage = Stage::Final;
  s.skipped = pending.skipped;
  const std::size_t n = pending.todo.size();
  std::vector<ManifestRecord> records(n);
  parallel_for(n, cfg.workers, [&](std::size_t i) {
    const auto& prev = *pending.todo[i];
    ManifestRecord& r = records[i] = next_record(prev, Stage::Final);
    const auto box_it = checks.boxes.find(prev.id);
    const bool want_instance = checks.instance && box_it != checks.boxes.end();
    if (!checks.region && !want_instance) return;

    const auto sr = prev.tags.find("sr_path");
    const std::string path = sr != prev.tags.end() ? sr->second : prev.path;
    ImageBuffer img(1, 1, 1);
    try {
      DecodeLimits limits = cfg.decode;
      limits.max_width *= 4;
      limits.max_height *= 4;
      img = decode_image(path, limits);
    } catch (const std::runtime_error& e) {
      reject(r, kDecodeError);
      r.tags["error"] = e.what();
      return;
    }

    if (checks.region) {
      const int p = cfg.region.patch;
      const int cells = (img.width() / p) * (img.height() / p);
      const int kt = std::min(cfg.region.k_texture, cells);
      const int kr = std::min(cfg.region.k_random, cells - kt);
      int flagged = 0;
      if (kt + kr > 0) {
        const auto picks = hybrid_sample(to_grayscale(img), p, kt, kr, image_seed(cfg.seed, prev.id));
        for (const auto& patch : picks) {
          if (checks.region(prev.id, crop(img, patch))) ++flagged;
        }
      }
      r.scores["region_patches"] = kt + kr;
      r.scores["region_flagged"] = flagged;
      if (flagged > cfg.region.max_flagged) reject(r, "region_artifact");
    }

    if (want_instance) {
      auto kept = filter_by_area(nms(box_it->second, cfg.instance.nms_iou), cfg.instance.min_area);
      int flagged = 0;
      for (const auto& box : kept) {
        const auto region = crop_with_padding(box, img.width(), img.height(), cfg.instance.pad);
        if (checks.instance(prev.id, crop(img, region))) ++flagged;
      }
      r.scores["instances"] = static_cast<double>(kept.size());
      r.scores["instances_flagged"] = flagged;
      if (flagged > 0) reject(r, "instance_artifact");
    }
  });
  write_all(s, out, records);
  return s;
}

std::map<std::string, std::vector<BBox>> read_instance_boxes(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read detections " + path.string());
  std::map<std::string, std::vector<BBox>> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      auto& boxes = out[j.at("id").get<std::string>()];
      for (const auto& b : j.at("boxes")) {
        const auto v = b.get<std::vector<double>>();
        if (v.size() != 4 && v.size() != 5) throw ValidationError("box needs 4 or 5 numbers");
        if (v[2] < v[0] || v[3] < v[1]) throw ValidationError("box has negative extent");
        boxes.push_back({v[0], v[1], v[2], v[3], v.size() == 5 ? v[4] : 1.0});
      }
    } catch (const std::exception& e) {
      throw ValidationError(path.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<DataflowRow> dataflow_report(const ManifestContents& manifest) {
  std::set<Stage> present;
  for (const auto& r : manifest.records) present.insert(r.stage);
  std::vector<DataflowRow> rows;
  if (present.count(Stage::Collected)) {
    rows.push_back({"Image Data Collection", "Raw Data Pool",
                    passed_at(manifest, Stage::Collected).size()});
  }
  if (present.count(Stage::Purified)) {
    rows.push_back({"Preliminary Data Purification", "Candidate Data Pool",
                    passed_at(manifest, Stage::Purified).size()});
  }
  if (present.count(Stage::Final)) {
    rows.push_back({"Final Data Filtering", "Final Data", passed_at(manifest, Stage::Final).size()});
  }
  return rows;
}

std::vector<StageSummary> stage_summaries(const ManifestContents& manifest) {
  std::map<Stage, StageSummary> by_stage;
  for (const auto& r : manifest.records) {
    auto& s = by_stage[r.stage];
    s.stage = r.stage;
    tally(s, r);
  }
  std::vector<StageSummary> out;
  for (auto& [stage, s] : by_stage) out.push_back(std::move(s));
  return out;
}

}  // namespace pixcurate
