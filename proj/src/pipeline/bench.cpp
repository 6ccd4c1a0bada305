#include <charconv>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "pixcurate/errors.hpp"
#include "pixcurate/parallel.hpp"
#include "pixcurate/pipeline.hpp"

namespace pixcurate {

std::map<std::string, Caption> read_captions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read captions " + path.string());
  std::map<std::string, Caption> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Caption c;
      c.short_text = j.value("short", "");
      c.long_text = j.value("long", "");
      out[j.at("id").get<std::string>()] = std::move(c);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(path.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

BenchServices bench_services(const PipelineConfig& cfg) {
  BenchServices s;
  if (!cfg.embedder_url.empty()) s.embedder.emplace(endpoint_config(cfg, cfg.embedder_url), cfg.retry);
  if (!cfg.fg_embedder_url.empty()) {
    s.fg_embedder.emplace(endpoint_config(cfg, cfg.fg_embedder_url), cfg.retry);
  }
  if (!cfg.scorer_url.empty()) s.scorer.emplace(endpoint_config(cfg, cfg.scorer_url), cfg.retry);
  if (!cfg.judge_url.empty()) {
    s.judge.emplace(endpoint_config(cfg, cfg.judge_url), cfg.judge_model, cfg.retry);
  }
  return s;
}

namespace {

enum Metric { kMFid, kMFidPatch, kMAesthetics, kMGlcm, kMRaps, kMMsfi, kMClip, kMFgClip, kMIcs, kMMetricCount };

constexpr const char* kMetricNames[kMMetricCount] = {
    "fid", "fid_patch", "aesthetics", "glcm_score", "raps", "msfi", "clip_score", "fg_clip2_score", "ics"};

struct ImageOutputs {
  std::optional<double> value[kMMetricCount];
  std::string error[kMMetricCount];
  std::vector<double> embedding;
  std::vector<std::vector<double>> patch_embeddings;
  std::vector<double> spectrum;
};

const Caption& caption_for(const std::map<std::string, Caption>& captions, const std::string& id) {
  const auto it = captions.find(id);
  if (it == captions.end()) throw ValidationError("no caption for '" + id + "'");
  return it->second;
}

double msfi_for(const JudgeClient& judge, const ImageBuffer& img, const GrayBuffer& gray,
                const std::string& id, const PipelineConfig& cfg) {
  const int patch = fidelity_patch_size(img.width(), img.height());
  const auto picks = hybrid_sample(gray, patch, cfg.bench.local_patches_texture,
                                   cfg.bench.local_patches_random, image_seed(cfg.seed, id));
  const ImagePayload global_payload = png_payload(img);
  const JudgeResult global = judge.judge(TemplateId::GlobalFidelity, {}, {global_payload});
  std::vector<JudgeResult> locals;
  for (const auto& p : picks) {
    const std::map<std::string, std::string> vars{
        {"relative_coords", format_relative_coords(p, img.width(), img.height())}};
    locals.push_back(judge.judge(TemplateId::LocalFidelity, vars, {png_payload(crop(img, p)), global_payload}));
  }
  return msfi_index(global, locals, cfg.judge_weights);
}

template <typename Fn>
void guarded(ImageOutputs& out, Metric m, Fn&& fn) {
  try {
    fn();
  } catch (const EndpointError& e) {
    out.error[m] = e.what();
  } catch (const ValidationError& e) {
    out.error[m] = e.what();
  }
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (const double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

PerceptualDistance embedding_perceptual_distance(const EmbedderClient& embedder) {
  return [&embedder](const ImageBuffer& a, const ImageBuffer& b) {
    const auto ea = embedder.embed_image("a", a);
    const auto eb = embedder.embed_image("b", b);
    return 1.0 - cosine_alignment_score(ea, eb, 1.0);
  };
}

BenchRow run_bench(const std::string& method, const std::vector<BenchImage>& generated,
                   const std::vector<BenchImage>& reference,
                   const std::map<std::string, Caption>& captions, const BenchServices& services,
                   const PipelineConfig& cfg) {
  if (generated.empty()) throw ValidationError("the generated set is empty");
  bool enabled[kMMetricCount] = {};
  enabled[kMGlcm] = cfg.bench.glcm;
  enabled[kMRaps] = cfg.bench.raps;
  enabled[kMFid] = services.embedder.has_value();
  enabled[kMFidPatch] = services.embedder.has_value() && cfg.bench.fid_patches_per_image > 0;
  enabled[kMClip] = services.embedder.has_value();
  enabled[kMFgClip] = services.fg_embedder.has_value();
  enabled[kMAesthetics] = services.scorer.has_value();
  enabled[kMMsfi] = services.judge.has_value();
  enabled[kMIcs] = services.judge.has_value();
  const bool any_local = enabled[kMGlcm] || enabled[kMRaps];
  bool any_remote = false;
  for (const Metric m : {kMFid, kMFidPatch, kMClip, kMFgClip, kMAesthetics, kMMsfi, kMIcs}) any_remote |= enabled[m];
  if (!any_local && !any_remote) throw ValidationError("no benchmark metric is enabled");
  if ((enabled[kMFid] || enabled[kMFidPatch]) && reference.empty()) {
    throw ValidationError("FID needs a non-empty reference set");
  }

  auto process = [&](const std::vector<BenchImage>& set, bool is_generated, std::uint64_t salt) {
    std::vector<ImageOutputs> outs(set.size());
    parallel_for(set.size(), cfg.workers, [&](std::size_t i) {
      const auto& item = set[i];
      ImageOutputs& o = outs[i];
      const ImageBuffer img = decode_image(item.path, cfg.decode);
      const GrayBuffer gray = to_grayscale(img);
      if (enabled[kMFid]) guarded(o, kMFid, [&] { o.embedding = services.embedder->embed_image(item.id, img); });
      if (enabled[kMFidPatch]) {
        guarded(o, kMFidPatch, [&] {
          const auto plan = patch_fid_prepare({{img.width(), img.height()}}, cfg.bench.fid_patch,
                                              cfg.bench.fid_patches_per_image,
                                              image_seed(cfg.seed ^ salt, item.id));
          for (const auto& p : plan.front()) {
            o.patch_embeddings.push_back(services.embedder->embed_image(item.id, crop(img, p)));
          }
        });
      }
      if (!is_generated) return;
      if (enabled[kMGlcm]) guarded(o, kMGlcm, [&] { o.value[kMGlcm] = glcm_score(gray, cfg.glcm); });
      if (enabled[kMRaps]) guarded(o, kMRaps, [&] { o.spectrum = raps(gray); });
      if (enabled[kMAesthetics]) {
        guarded(o, kMAesthetics, [&] { o.value[kMAesthetics] = services.scorer->score(item.id, img); });
      }
      if (enabled[kMClip]) {
        guarded(o, kMClip, [&] {
          const auto& cap = caption_for(captions, item.id);
          const auto& emb = o.embedding.empty() ? services.embedder->embed_image(item.id, img) : o.embedding;
          o.value[kMClip] = cosine_alignment_score(emb, services.embedder->embed_text(cap.short_text));
        });
      }
      if (enabled[kMFgClip]) {
        guarded(o, kMFgClip, [&] {
          const auto& cap = caption_for(captions, item.id);
          o.value[kMFgClip] = cosine_alignment_score(services.fg_embedder->embed_image(item.id, img),
                                                    services.fg_embedder->embed_text(cap.long_text));
        });
      }
      if (enabled[kMMsfi]) {
        guarded(o, kMMsfi, [&] { o.value[kMMsfi] = msfi_for(*services.judge, img, gray, item.id, cfg); });
      }
      if (enabled[kMIcs]) {
        guarded(o, kMIcs, [&] {
          const auto& cap = caption_for(captions, item.id);
          const auto result =
              services.judge->judge(TemplateId::Ics, {{"long_caption", cap.long_text}}, {png_payload(img)});
          o.value[kMIcs] = ics_score(result, cfg.judge_weights);
        });
      }
    });
    return outs;
  };

  const auto gen = process(generated, true, 0x67656eULL);
  std::vector<ImageOutputs> ref;
  if (enabled[kMFid] || enabled[kMFidPatch]) ref = process(reference, false, 0x726566ULL);

  BenchRow row;
  row.method = method;
  auto first_error = [&](Metric m, const std::vector<ImageOutputs>& outs) -> std::string {
    for (const auto& o : outs) {
      if (!o.error[m].empty()) return o.error[m];
    }
    return {};
  };
  auto fail = [&](Metric m, std::string why) { row.failures[kMetricNames[m]] = std::move(why); };

  auto per_image_mean = [&](Metric m) -> std::optional<double> {
    if (!enabled[m]) return std::nullopt;
    if (auto e = first_error(m, gen); !e.empty()) {
      fail(m, e);
      return std::nullopt;
    }
    std::vector<double> v;
    for (const auto& o : gen) v.push_back(*o.value[m]);
    return mean_of(v);
  };
  row.aesthetics = per_image_mean(kMAesthetics);
  row.glcm_score = per_image_mean(kMGlcm);
  row.msfi = per_image_mean(kMMsfi);
  row.clip_score = per_image_mean(kMClip);
  row.fg_clip2_score = per_image_mean(kMFgClip);
  row.ics = per_image_mean(kMIcs);

  if (enabled[kMRaps]) {
    if (auto e = first_error(kMRaps, gen); !e.empty()) {
      fail(kMRaps, e);
    } else {
      std::size_t bins = gen.front().spectrum.size();
      for (const auto& o : gen) bins = std::min(bins, o.spectrum.size());
      std::vector<double> mean(bins, 0.0);
      for (const auto& o : gen) {
        for (std::size_t b = 0; b < bins; ++b) mean[b] += o.spectrum[b];
      }
      for (double& x : mean) x /= static_cast<double>(gen.size());
      row.raps = std::move(mean);
    }
  }

  auto fid_from = [&](Metric m, auto&& collect) -> std::optional<double> {
    if (!enabled[m]) return std::nullopt;
    std::string e = first_error(m, gen);
    if (e.empty()) e = first_error(m, ref);
    if (!e.empty()) {
      fail(m, e);
      return std::nullopt;
    }
    std::vector<std::vector<double>> a;
    std::vector<std::vector<double>> b;
    for (const auto& o : gen) collect(o, a);
    for (const auto& o : ref) collect(o, b);
    try {
      return frechet_distance(gaussian_stats(a), gaussian_stats(b));
    } catch (const ValidationError& err) {
      fail(m, err.what());
      return std::nullopt;
    }
  };
  row.fid = fid_from(kMFid, [](const ImageOutputs& o, auto& dst) { dst.push_back(o.embedding); });
  row.fid_patch = fid_from(kMFidPatch, [](const ImageOutputs& o, auto& dst) {
    dst.insert(dst.end(), o.patch_embeddings.begin(), o.patch_embeddings.end());
  });

  if (!any_local) {
    const bool all_failed = !row.fid && !row.fid_patch && !row.aesthetics && !row.msfi &&
                            !row.clip_score && !row.fg_clip2_score && !row.ics;
    if (all_failed) {
      std::string msg = "every requested endpoint metric failed";
      for (const auto& [k, v] : row.failures) msg += "\n  " + k + ": " + v;
      throw EndpointError(msg);
    }
  }
  return row;
}

namespace {

std::string num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<std::pair<const char*, const std::optional<double>*>> cells(const BenchRow& r) {
  return {{"fid", &r.fid},
          {"fid_patch", &r.fid_patch},
          {"aesthetics", &r.aesthetics},
          {"glcm_score", &r.glcm_score},
          {"msfi", &r.msfi},
          {"clip_score", &r.clip_score},
          {"fg_clip2_score", &r.fg_clip2_score},
          {"ics", &r.ics}};
}

}  // namespace

std::string bench_json(const BenchRow& row) {
  nlohmann::ordered_json j;
  j["method"] = row.method;
  for (const auto& [name, cell] : cells(row)) {
    j[name] = *cell ? nlohmann::ordered_json(**cell) : nlohmann::ordered_json(nullptr);
  }
  j["raps"] = row.raps ? nlohmann::ordered_json(*row.raps) : nlohmann::ordered_json(nullptr);
  nlohmann::ordered_json failures = nlohmann::ordered_json::object();
  for (const auto& [k, v] : row.failures) failures[k] = v;
  j["failures"] = std::move(failures);
  return j.dump(2) + "\n";
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::string out = "method,fid,fid_patch,aesthetics,glcm_score,msfi,clip_score,fg_clip2_score,ics\n";
  for (const auto& r : rows) {
    std::string m = r.method;
    if (m.find_first_of(",\"\n") != std::string::npos) {
      std::string q = "\"";
      for (const char c : m) q += c == '"' ? std::string("\"\"") : std::string(1, c);
      m = q + "\"";
    }
    out += m;
    for (const auto& [name, cell] : cells(r)) out += "," + (*cell ? num(**cell) : std::string("--"));
    out += "\n";
  }
  return out;
}

}  // namespace pixcurate
