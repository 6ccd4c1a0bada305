#include "pixcurate/cli.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "pixcurate/errors.hpp"
#include "pixcurate/pipeline.hpp"

namespace pixcurate {

namespace {

using ojson = nlohmann::ordered_json;

// Shortest round-trip form, always with a decimal point.
std::string number(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, res.ptr);
  if (std::isfinite(v) && s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f || !(f << text) || !f.flush()) throw IoError("cannot write " + path);
}

struct Common {
  std::string config;
  std::string in;
  std::string out;
  std::string manifest;
  std::uint64_t seed = 0;
  int workers = 0;
  bool json = false;
  int verbose = 0;
};

void add_common(CLI::App* app, Common& c, bool with_seed) {
  app->add_option("--config", c.config, "INI configuration file")->check(CLI::ExistingFile);
  app->add_option("--workers", c.workers, "Worker threads (overrides pipeline.workers)")
      ->check(CLI::PositiveNumber);
  if (with_seed) app->add_option("--seed", c.seed, "Random seed (default 0)");
  app->add_flag("--json", c.json, "Machine-readable output on stdout");
  app->add_flag("-v,--verbose", c.verbose, "Log progress to stderr");
}

PipelineConfig effective_config(const Common& c, bool seed_given) {
  PipelineConfig cfg = c.config.empty() ? PipelineConfig{} : load_config(c.config);
  if (c.workers > 0) cfg.workers = c.workers;
  if (seed_given) cfg.seed = c.seed;
  return cfg;
}

void log_summary(std::ostream& err, const StageSummary& s) {
  err << stage_name(s.stage) << ": input " << s.input << ", kept " << s.kept << ", rejected "
      << s.rejected << ", skipped " << s.skipped;
  for (const auto& [reason, n] : s.reasons) err << ", " << reason << " " << n;
  err << "\n";
}

ojson summary_json(const StageSummary& s) {
  ojson reasons = ojson::object();
  for (const auto& [k, v] : s.reasons) reasons[k] = v;
  return {{"stage", stage_name(s.stage)}, {"input", s.input},     {"kept", s.kept},
          {"rejected", s.rejected},       {"skipped", s.skipped}, {"reasons", std::move(reasons)}};
}

void emit_summary(std::ostream& out, std::ostream& err, const StageSummary& s, const Common& c) {
  if (c.verbose > 0) log_summary(err, s);
  if (c.json) {
    out << summary_json(s).dump() << "\n";
  } else {
    out << stage_name(s.stage) << "\t" << s.input << "\t" << s.kept << "\t" << s.rejected << "\n";
  }
}

ImageBuffer load(const std::string& path, const PipelineConfig& cfg) { return decode_image(path, cfg.decode); }

std::vector<double> parse_numbers(const std::string& text, std::size_t want, const char* what) {
  std::vector<double> v;
  std::string cleaned = text;
  for (char& ch : cleaned) {
    if (ch == '[' || ch == ']' || ch == ',') ch = ' ';
  }
  std::istringstream ss(cleaned);
  double x = 0;
  while (ss >> x) v.push_back(x);
  if (!ss.eof() || v.size() != want) {
    throw ValidationError(std::string(what) + " needs " + std::to_string(want) + " numbers");
  }
  return v;
}

FinalChecks final_checks(const PipelineConfig& cfg, std::optional<FlagClient>& flagger) {
  FinalChecks checks;
  if (!cfg.flag_url.empty()) {
    flagger.emplace(endpoint_config(cfg, cfg.flag_url), cfg.retry);
    const FlagClient* f = &*flagger;
    checks.region = [f](const std::string& id, const ImageBuffer& img) { return f->flagged(id, img); };
    checks.instance = checks.region;
  }
  if (!cfg.instance_boxes.empty()) checks.boxes = read_instance_boxes(cfg.instance_boxes);
  return checks;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gigapixel image curation and quality assessment toolkit", "pixcurate"};
  app.require_subcommand(1, 1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  // purify
  Common purify_c;
  auto* purify = app.add_subcommand(
      "purify",
      "Score one image (--in FILE), or collect and purify a directory into a manifest "
      "(--in DIR --manifest FILE)");
  add_common(purify, purify_c, false);
  purify->add_option("--in", purify_c.in, "Image file or image directory")->required();
  purify->add_option("--manifest", purify_c.manifest, "Manifest to append to (directory mode)");

  // tier
  Common tier_c;
  int tier_w = 0;
  int tier_h = 0;
  auto* tier = app.add_subcommand(
      "tier", "Classify dimensions (--w --h), an image (--in), or a manifest's purified images");
  tier->set_help_flag("--help", "Print this help message and exit");  // frees -h for --h
  add_common(tier, tier_c, false);
  auto* tier_w_opt = tier->add_option("--w", tier_w, "Width in pixels")->check(CLI::PositiveNumber);
  auto* tier_h_opt = tier->add_option("--h", tier_h, "Height in pixels")->check(CLI::PositiveNumber);
  tier_w_opt->needs(tier_h_opt);
  tier_h_opt->needs(tier_w_opt);
  auto* tier_in = tier->add_option("--in", tier_c.in, "Image file");
  auto* tier_manifest = tier->add_option("--manifest", tier_c.manifest, "Manifest to advance");
  tier_w_opt->excludes(tier_in)->excludes(tier_manifest);
  tier_in->excludes(tier_manifest);

  // seamcheck
  Common seam_c;
  auto* seamcheck = app.add_subcommand("seamcheck", "Seam continuity ratios of a super-resolved image");
  add_common(seamcheck, seam_c, false);
  seamcheck->add_option("--in", seam_c.in, "Super-resolved image")->required();

  // consistency
  Common cons_c;
  std::string cons_original;
  std::string sr_root;
  auto* consistency = app.add_subcommand(
      "consistency",
      "Compare an SR output with its original (--in SR --original FILE), or run the SR checks of a "
      "manifest (--manifest --sr-root)");
  add_common(consistency, cons_c, false);
  auto* cons_in = consistency->add_option("--in", cons_c.in, "Super-resolved image");
  auto* cons_orig = consistency->add_option("--original", cons_original, "Original image");
  auto* cons_manifest = consistency->add_option("--manifest", cons_c.manifest, "Manifest to advance");
  auto* cons_root = consistency->add_option("--sr-root", sr_root, "Directory holding <id>.<ext> SR outputs");
  cons_in->needs(cons_orig);
  cons_orig->needs(cons_in);
  cons_manifest->needs(cons_root);
  cons_in->excludes(cons_manifest);

  // sample
  Common sample_c;
  int sample_patch = 768;
  int sample_kt = 6;
  int sample_kr = 4;
  auto* sample = app.add_subcommand(
      "sample",
      "Hybrid patch sampling of one image (--in), or the final filtering stage of a manifest");
  add_common(sample, sample_c, true);
  auto* sample_in = sample->add_option("--in", sample_c.in, "Image file");
  auto* sample_manifest = sample->add_option("--manifest", sample_c.manifest, "Manifest to advance");
  sample->add_option("--out", sample_c.out, "Directory for sampled patch PNGs");
  sample->add_option("--patch", sample_patch, "Patch size in pixels")->check(CLI::PositiveNumber);
  sample->add_option("--k-texture", sample_kt, "Patches picked by Sobel variance")->check(CLI::NonNegativeNumber);
  sample->add_option("--k-random", sample_kr, "Patches picked at random")->check(CLI::NonNegativeNumber);
  sample_in->excludes(sample_manifest);

  // glcm
  Common glcm_c;
  auto* glcm = app.add_subcommand("glcm", "GLCM Score of an image");
  add_common(glcm, glcm_c, false);
  glcm->add_option("--in", glcm_c.in, "Image file")->required();

  // raps
  Common raps_c;
  auto* raps_cmd = app.add_subcommand("raps", "Radially averaged power spectrum of an image");
  add_common(raps_cmd, raps_c, false);
  raps_cmd->add_option("--in", raps_c.in, "Image file")->required();
  raps_cmd->add_option("--out", raps_c.out, "CSV output (radius,power)");

  // bench
  Common bench_c;
  std::string bench_ref;
  std::string bench_captions;
  std::string bench_method = "method";
  auto* bench = app.add_subcommand("bench", "Benchmark row for a set of generated images");
  add_common(bench, bench_c, true);
  bench->add_option("--in", bench_c.in, "Directory of generated images")->required();
  bench->add_option("--ref", bench_ref, "Directory of reference images (for FID)");
  bench->add_option("--captions", bench_captions, "Caption sidecar, JSON Lines {id, short, long}");
  bench->add_option("--method", bench_method, "Method name for the row");
  bench->add_option("--out", bench_c.out, "Output prefix; writes PREFIX.json and PREFIX.csv");

  // judge-dryrun
  Common judge_c;
  std::string judge_template;
  std::string judge_caption;
  std::string judge_coords;
  std::string judge_response;
  std::vector<std::string> judge_locals;
  auto* judge = app.add_subcommand(
      "judge-dryrun", "Render a judge prompt and validate fixture responses without an endpoint");
  add_common(judge, judge_c, false);
  judge->add_option("--template", judge_template, "global_fidelity, local_fidelity or ics")->required();
  judge->add_option("--caption", judge_caption, "Long caption (ics)");
  judge->add_option("--coords", judge_coords, "Normalised x_min,y_min,x_max,y_max (local_fidelity)");
  judge->add_option("--response", judge_response, "Fixture response to validate");
  judge->add_option("--local-response", judge_locals,
                    "Ten local_fidelity fixture responses; with a global --response prints MSFI")
      ->expected(0, -1);
  judge->add_option("--out", judge_c.out, "Write the rendered prompt here instead of stdout");

  // report
  Common report_c;
  auto* report = app.add_subcommand("report", "Dataflow table and per-stage summaries of a manifest");
  add_common(report, report_c, false);
  report->add_option("--manifest", report_c.manifest, "Manifest to summarise")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return 1;
  }

  try {
    if (purify->parsed()) {
      const auto cfg = effective_config(purify_c, false);
      if (std::filesystem::is_directory(purify_c.in)) {
        if (purify_c.manifest.empty()) throw ValidationError("directory mode needs --manifest");
        ManifestWriter writer(purify_c.manifest);
        const auto collected = run_collect_stage(purify_c.in, writer);
        if (purify_c.verbose > 0) log_summary(err, collected);
        const auto s = run_purify_stage(read_manifest(purify_c.manifest), writer, cfg);
        emit_summary(out, err, s, purify_c);
        return 0;
      }
      const ImageBuffer img = load(purify_c.in, cfg);
      const auto sc = score_image(img, cfg.purify);
      const bool exp_ok = exposure_passes(sc.exposure_fraction, cfg.purify);
      const bool sharp_ok = sharpness_passes(sc.laplacian_variance, cfg.purify);
      const bool flat_ok = sc.flatness_ratio && flatness_passes(*sc.flatness_ratio, cfg.purify);
      if (purify_c.json) {
        ojson j{{"exposure_fraction", sc.exposure_fraction},
                {"laplacian_variance", sc.laplacian_variance},
                {"flatness_ratio", sc.flatness_ratio ? ojson(*sc.flatness_ratio) : ojson(nullptr)},
                {"shannon_entropy", sc.shannon_entropy},
                {"exposure_passed", exp_ok},
                {"sharpness_passed", sharp_ok},
                {"flatness_passed", flat_ok}};
        out << j.dump() << "\n";
      } else {
        out << "exposure_fraction\t" << number(sc.exposure_fraction) << "\t" << (exp_ok ? "pass" : "fail") << "\n";
        out << "laplacian_variance\t" << number(sc.laplacian_variance) << "\t" << (sharp_ok ? "pass" : "fail")
            << "\n";
        out << "flatness_ratio\t" << (sc.flatness_ratio ? number(*sc.flatness_ratio) : "none") << "\t"
            << (flat_ok ? "pass" : "fail") << "\n";
        out << "shannon_entropy\t" << number(sc.shannon_entropy) << "\tcohort\n";
      }
      return 0;
    }

    if (tier->parsed()) {
      const auto cfg = effective_config(tier_c, false);
      if (!tier_c.manifest.empty()) {
        ManifestWriter writer(tier_c.manifest);
        emit_summary(out, err, run_tier_stage(read_manifest(tier_c.manifest), writer, cfg), tier_c);
        return 0;
      }
      int w = tier_w;
      int h = tier_h;
      if (!tier_c.in.empty()) {
        const ImageBuffer img = load(tier_c.in, cfg);
        w = img.width();
        h = img.height();
      } else if (tier_w == 0) {
        throw ValidationError("tier needs --w and --h, --in, or --manifest");
      }
      const auto t = upscale_tier(w, h, cfg.tier);
      if (tier_c.json) {
        out << ojson{{"width", w}, {"height", h}, {"tier", tier_name(t.tier)}, {"factor", upscale_factor(t.tier)},
                     {"reason", t.reason}}
                   .dump()
            << "\n";
      } else {
        out << tier_name(t.tier) << "\n";
      }
      return 0;
    }

    if (seamcheck->parsed()) {
      const auto cfg = effective_config(seam_c, false);
      const auto rep = seam_ratios(load(seam_c.in, cfg), cfg.seam);
      const bool ok = seam_passes(rep, cfg.seam);
      if (seam_c.json) {
        ojson seams = ojson::array();
        for (const auto& r : rep.ratios) {
          seams.push_back({{"orientation", r.orientation == SeamOrientation::Vertical ? "vertical" : "horizontal"},
                           {"position", r.position},
                           {"ratio", r.ratio}});
        }
        out << ojson{{"stride", rep.stride}, {"max_ratio", rep.max_ratio}, {"passed", ok}, {"seams", seams}}.dump()
            << "\n";
      } else {
        out << number(rep.max_ratio) << "\t" << (ok ? "pass" : "fail") << "\n";
      }
      return 0;
    }

    if (consistency->parsed()) {
      const auto cfg = effective_config(cons_c, false);
      std::optional<EmbedderClient> embedder;
      PerceptualDistance perceptual;
      if (!cfg.embedder_url.empty()) {
        embedder.emplace(endpoint_config(cfg, cfg.embedder_url), cfg.retry);
        perceptual = embedding_perceptual_distance(*embedder);
      }
      if (!cons_c.manifest.empty()) {
        ManifestWriter writer(cons_c.manifest);
        const auto s = run_sr_check_stage(read_manifest(cons_c.manifest), writer, sr_root, cfg, perceptual);
        emit_summary(out, err, s, cons_c);
        return 0;
      }
      if (cons_c.in.empty()) throw ValidationError("consistency needs --in/--original or --manifest/--sr-root");
      const auto rep = consistency_check(load(cons_c.in, cfg), load(cons_original, cfg), cfg.consistency, perceptual);
      if (cons_c.json) {
        out << ojson{{"psnr", rep.psnr},
                     {"ssim", rep.ssim},
                     {"perceptual", rep.perceptual ? ojson(*rep.perceptual) : ojson(nullptr)},
                     {"passed", rep.passed},
                     {"failed", rep.failed_metrics}}
                   .dump()
            << "\n";
      } else {
        out << "psnr\t" << number(rep.psnr) << "\nssim\t" << number(rep.ssim) << "\n";
        if (rep.perceptual) out << "perceptual\t" << number(*rep.perceptual) << "\n";
        out << (rep.passed ? "pass" : "fail") << "\n";
      }
      return 0;
    }

    if (sample->parsed()) {
      const auto cfg = effective_config(sample_c, sample->count("--seed") > 0);
      if (!sample_c.manifest.empty()) {
        std::optional<FlagClient> flagger;
        const auto checks = final_checks(cfg, flagger);
        if (!checks.region && !checks.instance) err << "note: flag.url is unset; final stage applies no artifact checks\n";
        ManifestWriter writer(sample_c.manifest);
        emit_summary(out, err, run_final_stage(read_manifest(sample_c.manifest), writer, cfg, checks), sample_c);
        return 0;
      }
      if (sample_c.in.empty()) throw ValidationError("sample needs --in or --manifest");
      const ImageBuffer img = load(sample_c.in, cfg);
      const auto picks = hybrid_sample(to_grayscale(img), sample_patch, sample_kt, sample_kr, cfg.seed);
      if (!sample_c.out.empty()) {
        std::filesystem::create_directories(sample_c.out);
        for (std::size_t i = 0; i < picks.size(); ++i) {
          write_png(crop(img, picks[i]),
                    std::filesystem::path(sample_c.out) / ("patch_" + std::to_string(i) + ".png"));
        }
      }
      if (sample_c.json) {
        ojson arr = ojson::array();
        for (std::size_t i = 0; i < picks.size(); ++i) {
          const auto& p = picks[i];
          arr.push_back({{"x0", p.x0}, {"y0", p.y0}, {"w", p.w}, {"h", p.h}, {"index", p.index},
                         {"kind", static_cast<int>(i) < sample_kt ? "texture" : "random"}});
        }
        out << arr.dump() << "\n";
      } else {
        for (std::size_t i = 0; i < picks.size(); ++i) {
          const auto& p = picks[i];
          out << p.index << "\t" << p.x0 << "\t" << p.y0 << "\t" << p.w << "\t" << p.h << "\t"
              << (static_cast<int>(i) < sample_kt ? "texture" : "random") << "\n";
        }
      }
      return 0;
    }

    if (glcm->parsed()) {
      const auto cfg = effective_config(glcm_c, false);
      const double score = glcm_score(to_grayscale(load(glcm_c.in, cfg)), cfg.glcm, cfg.workers);
      if (glcm_c.json) {
        out << ojson{{"glcm_score", score}}.dump() << "\n";
      } else {
        out << number(score) << "\n";
      }
      return 0;
    }

    if (raps_cmd->parsed()) {
      const auto cfg = effective_config(raps_c, false);
      const auto spectrum = raps(to_grayscale(load(raps_c.in, cfg)));
      std::string csv = "radius,power\n";
      for (std::size_t r = 0; r < spectrum.size(); ++r) csv += std::to_string(r) + "," + number(spectrum[r]) + "\n";
      if (!raps_c.out.empty()) write_text(raps_c.out, csv);
      if (raps_c.json) {
        out << ojson{{"raps", spectrum}}.dump() << "\n";
      } else if (raps_c.out.empty()) {
        out << csv;
      }
      return 0;
    }

    if (bench->parsed()) {
      const auto cfg = effective_config(bench_c, bench->count("--seed") > 0);
      const auto generated = list_images(bench_c.in);
      const auto reference = bench_ref.empty() ? std::vector<BenchImage>{} : list_images(bench_ref);
      const auto captions = bench_captions.empty() ? std::map<std::string, Caption>{} : read_captions(bench_captions);
      const auto row = run_bench(bench_method, generated, reference, captions, bench_services(cfg), cfg);
      for (const auto& [metric, why] : row.failures) err << "warning: " << metric << " left empty: " << why << "\n";
      if (!bench_c.out.empty()) {
        write_text(bench_c.out + ".json", bench_json(row));
        write_text(bench_c.out + ".csv", bench_csv({row}));
      }
      if (bench_c.json || bench_c.out.empty()) {
        out << bench_json(row);
      } else {
        out << bench_csv({row});
      }
      return 0;
    }

    if (judge->parsed()) {
      const TemplateId id = parse_template_id(judge_template);
      std::map<std::string, std::string> vars;
      if (!judge_caption.empty()) vars["long_caption"] = judge_caption;
      if (!judge_coords.empty()) {
        const auto c = parse_numbers(judge_coords, 4, "--coords");
        std::string s = "[";
        for (int i = 0; i < 4; ++i) {
          char buf[32];
          const auto res = std::to_chars(buf, buf + sizeof(buf), std::round(c[static_cast<std::size_t>(i)] * 1e4) / 1e4);
          s += (i ? ", " : "") + std::string(buf, res.ptr);
        }
        vars["relative_coords"] = s + "]";
      }
      const auto messages = render_prompt(id, vars);
      const std::string prompt = messages.front().text;
      if (!judge_c.out.empty()) write_text(judge_c.out, prompt);

      std::optional<JudgeResult> parsed;
      ojson j{{"template", template_name(id)}, {"images_expected", expected_image_count(id)}};
      if (!judge_response.empty()) {
        parsed = extract_judge_json(read_text(judge_response), id);
        ojson scores = ojson::object();
        for (const auto& key : required_keys(id)) scores[key] = parsed->scores.at(key);
        j["scores"] = scores;
        const WeightConfig weights = judge_c.config.empty() ? WeightConfig{} : load_config(judge_c.config).judge_weights;
        if (id == TemplateId::Ics) {
          j["ics"] = ics_score(*parsed, weights);
        } else {
          j["dimension_score"] = dimension_score(*parsed, id, weights);
        }
        if (!judge_locals.empty()) {
          if (id != TemplateId::GlobalFidelity) throw ValidationError("--local-response needs a global_fidelity --response");
          std::vector<JudgeResult> locals;
          for (const auto& p : judge_locals) locals.push_back(extract_judge_json(read_text(p), TemplateId::LocalFidelity));
          j["msfi"] = msfi_index(*parsed, locals, weights);
        }
      } else if (!judge_locals.empty()) {
        throw ValidationError("--local-response needs a global_fidelity --response");
      }
      if (judge_c.json) {
        j["prompt"] = prompt;
        out << j.dump() << "\n";
      } else {
        if (judge_c.out.empty()) out << prompt << (prompt.empty() || prompt.back() == '\n' ? "" : "\n");
        if (j.contains("scores")) {
          for (const auto& [k, v] : j["scores"].items()) out << k << "\t" << v.get<int>() << "\n";
          for (const char* key : {"dimension_score", "ics", "msfi"}) {
            if (j.contains(key)) out << key << "\t" << number(j[key].get<double>()) << "\n";
          }
        }
      }
      return 0;
    }

    if (report->parsed()) {
      const auto manifest = read_manifest(report_c.manifest);
      if (manifest.truncated_tail) err << "warning: ignoring an unterminated last line\n";
      const auto rows = dataflow_report(manifest);
      const auto summaries = stage_summaries(manifest);
      if (report_c.json) {
        ojson table = ojson::array();
        for (const auto& r : rows) table.push_back({{"stage", r.stage}, {"subset", r.subset}, {"count", r.count}});
        ojson stages = ojson::array();
        for (const auto& s : summaries) stages.push_back(summary_json(s));
        out << ojson{{"dataflow", table}, {"stages", stages}}.dump() << "\n";
      } else {
        for (const auto& r : rows) out << r.stage << "\t" << r.subset << "\t" << r.count << "\n";
        if (report_c.verbose > 0) {
          for (const auto& s : summaries) log_summary(err, s);
        }
      }
      return 0;
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const EndpointError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  err << app.help();
  return 1;
}

}  // namespace pixcurate
