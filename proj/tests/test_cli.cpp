#include <sys/wait.h>

#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "pixcurate/cli.hpp"
#include "pixcurate/judge.hpp"
#include "pixcurate/pipeline.hpp"
#include "support.hpp"

using namespace pixcurate;
using testsupport::TempDir;

namespace {

struct Run {
  int rc;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "pixcurate");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int rc = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {rc, out.str(), err.str()};
}

int shell_status(const std::string& args) {
  const std::string cmd = std::string(PIXCURATE_CLI_BIN) + " " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spill(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

}  // namespace

TEST_CASE("glcm on a constant image prints 0.0") {
  TempDir dir;
  write_png(testsupport::constant_image(128, 128, 3, 77), dir / "flat.png");
  const auto r = cli({"glcm", "--in", (dir / "flat.png").string()});
  CHECK(r.rc == 0);
  CHECK(r.out == "0.0\n");
  CHECK(r.err.empty());
  const auto j = cli({"glcm", "--in", (dir / "flat.png").string(), "--json"});
  CHECK(nlohmann::json::parse(j.out)["glcm_score"] == 0.0);
}

TEST_CASE("tier by dimensions") {
  auto r = cli({"tier", "--w", "12000", "--h", "9000"});
  CHECK(r.rc == 0);
  CHECK(r.out == "Native\n");
  CHECK(cli({"tier", "--w", "6000", "--h", "5000"}).out == "X2\n");
  CHECK(cli({"tier", "--w", "4000", "--h", "3000"}).out == "X4\n");
  CHECK(cli({"tier", "--w", "2000", "--h", "2000"}).out == "Rejected\n");
  r = cli({"tier", "--w", "4000", "--h", "3000", "--json"});
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["tier"] == "X4");
  CHECK(j["factor"] == 4);
  CHECK(cli({"tier", "--w", "4000"}).rc == 1);
  CHECK(cli({"tier"}).rc == 1);
}

TEST_CASE("missing required flag prints usage on stderr and exits 1") {
  const auto r = cli({"glcm"});
  CHECK(r.rc == 1);
  CHECK(r.out.empty());
  CHECK(r.err.find("--in") != std::string::npos);
  CHECK(r.err.find("Usage") != std::string::npos);
}

TEST_CASE("unknown or absent subcommand exits 1 with usage") {
  auto r = cli({"frobnicate"});
  CHECK(r.rc == 1);
  CHECK(r.err.find("Usage") != std::string::npos);
  r = cli({});
  CHECK(r.rc == 1);
  CHECK(r.err.find("Usage") != std::string::npos);
}

TEST_CASE("--help on every subcommand exits 0 and lists its flags") {
  const std::map<std::string, std::vector<std::string>> flags{
      {"purify", {"--in", "--manifest", "--config", "--workers", "--json"}},
      {"tier", {"--w", "--h", "--in", "--manifest"}},
      {"seamcheck", {"--in"}},
      {"consistency", {"--in", "--original", "--manifest", "--sr-root"}},
      {"sample", {"--in", "--manifest", "--out", "--seed", "--patch", "--k-texture", "--k-random"}},
      {"glcm", {"--in"}},
      {"raps", {"--in", "--out"}},
      {"bench", {"--in", "--ref", "--captions", "--method", "--out", "--seed"}},
      {"judge-dryrun", {"--template", "--caption", "--coords", "--response", "--local-response", "--out"}},
      {"report", {"--manifest"}}};
  for (const auto& [sub, expected] : flags) {
    CAPTURE(sub);
    const auto r = cli({sub, "--help"});
    CHECK(r.rc == 0);
    for (const auto& f : expected) {
      CAPTURE(f);
      CHECK(r.out.find(f) != std::string::npos);
    }
  }
  CHECK(cli({"--help"}).rc == 0);
}

TEST_CASE("I/O and validation failures map to exit codes") {
  TempDir dir;
  auto r = cli({"glcm", "--in", (dir / "missing.png").string()});
  CHECK(r.rc == 2);
  CHECK(r.err.rfind("error:", 0) == 0);
  spill(dir / "junk.png", "not an image at all");
  CHECK(cli({"glcm", "--in", (dir / "junk.png").string()}).rc == 1);  // unsupported format
  spill(dir / "cut.png", "\x89PNG\r\n\x1a\n\0\0\0\rIHDR");
  CHECK(cli({"glcm", "--in", (dir / "cut.png").string()}).rc == 2);
  write_png(testsupport::constant_image(8, 8, 1, 0), dir / "small.png");
  CHECK(cli({"glcm", "--in", (dir / "small.png").string()}).rc == 1);
  spill(dir / "bad.ini", "[exposure]\nbrite = 1\n");
  r = cli({"glcm", "--in", (dir / "small.png").string(), "--config", (dir / "bad.ini").string()});
  CHECK(r.rc == 1);
  CHECK(r.err.find("brite") != std::string::npos);
}

TEST_CASE("purify on one image") {
  TempDir dir;
  write_png(testsupport::noise_image(480, 480, 3, 5), dir / "a.png");
  auto r = cli({"purify", "--in", (dir / "a.png").string()});
  CHECK(r.rc == 0);
  CHECK(r.out.find("exposure_fraction\t") == 0);
  CHECK(r.out.find("laplacian_variance\t") != std::string::npos);
  CHECK(r.out.find("fail") == std::string::npos);
  r = cli({"purify", "--in", (dir / "a.png").string(), "--json"});
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["sharpness_passed"] == true);
  CHECK(j["flatness_passed"] == true);
  CHECK(cli({"purify", "--in", dir.path().string()}).rc == 1);  // directory mode needs --manifest
}

TEST_CASE("full pipeline through the subcommands, then report") {
  TempDir dir;
  std::filesystem::create_directories(dir / "img");
  std::filesystem::create_directories(dir / "sr");
  for (int i = 0; i < 4; ++i) {
    const auto img = testsupport::smooth_texture(400, 300, 3, static_cast<std::uint32_t>(i + 1));
    write_png(img, dir / "img" / ("t" + std::to_string(i) + ".png"));
    if (i != 3) write_png(resample(img, 1600, 1200), dir / "sr" / ("t" + std::to_string(i) + ".png"));
  }
  write_png(testsupport::constant_image(400, 300, 3, 128), dir / "img" / "blank.png");
  spill(dir / "desk.ini",
        "[aesthetics]\nenabled = false\n[srqa]\nnative_pixels = 1000000\nx2_min_pixels = 250000\n"
        "x2_min_side = 300\nx4_min_pixels = 100000\nx4_min_side = 150\nregion_patch = 64\n");
  const std::string ini = (dir / "desk.ini").string();
  const std::string manifest = (dir / "m.jsonl").string();

  auto r = cli({"purify", "--in", (dir / "img").string(), "--manifest", manifest, "--config", ini});
  CHECK(r.rc == 0);
  CHECK(r.out == "purified\t5\t3\t2\n");  // entropy keeps ceil(0.6*5) = 3 of the 4 textured images
  r = cli({"tier", "--manifest", manifest, "--config", ini, "--json"});
  CHECK(r.rc == 0);
  CHECK(nlohmann::json::parse(r.out)["kept"] == 3);
  r = cli({"consistency", "--manifest", manifest, "--sr-root", (dir / "sr").string(), "--config", ini});
  CHECK(r.rc == 0);
  r = cli({"sample", "--manifest", manifest, "--config", ini});
  CHECK(r.rc == 0);
  CHECK(r.err.find("flag.url") != std::string::npos);

  r = cli({"report", "--manifest", manifest});
  CHECK(r.rc == 0);
  std::istringstream rows(r.out);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(rows, line)) lines.push_back(line);
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == "Image Data Collection\tRaw Data Pool\t5");
  CHECK(lines[1] == "Preliminary Data Purification\tCandidate Data Pool\t3");
  const auto final_count = std::stoi(lines[2].substr(lines[2].rfind('\t') + 1));
  CHECK(final_count <= 3);
  const auto j = nlohmann::json::parse(cli({"report", "--manifest", manifest, "--json"}).out);
  CHECK(j["dataflow"].size() == 3);
  CHECK(j["stages"].size() == 5);

  const std::string before = slurp(manifest);
  r = cli({"purify", "--in", (dir / "img").string(), "--manifest", manifest, "--config", ini, "--json"});
  CHECK(r.rc == 0);
  CHECK(nlohmann::json::parse(r.out)["skipped"] == 5);
  CHECK(slurp(manifest) == before);
}

TEST_CASE("seamcheck and consistency on single images") {
  TempDir dir;
  const auto orig = testsupport::smooth_texture(400, 300, 3, 9);
  const auto sr = resample(orig, 800, 600);
  write_png(orig, dir / "orig.png");
  write_png(sr, dir / "sr.png");
  auto stepped = sr;
  for (int y = 0; y < stepped.height(); ++y)
    for (int x = 384; x < stepped.width(); ++x)
      for (int c = 0; c < 3; ++c) stepped.at(x, y, c) = static_cast<std::uint8_t>(std::min(255, stepped.at(x, y, c) + 40));
  write_png(stepped, dir / "step.png");

  auto r = cli({"seamcheck", "--in", (dir / "sr.png").string()});
  CHECK(r.rc == 0);
  CHECK(r.out.find("\tpass\n") != std::string::npos);
  r = cli({"seamcheck", "--in", (dir / "step.png").string(), "--json"});
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["passed"] == false);
  CHECK(j["max_ratio"].get<double>() > 2.5);

  r = cli({"consistency", "--in", (dir / "sr.png").string(), "--original", (dir / "orig.png").string()});
  CHECK(r.rc == 0);
  CHECK(r.out.find("psnr\t") == 0);
  CHECK(r.out.find("pass\n") != std::string::npos);
  CHECK(cli({"consistency", "--in", (dir / "orig.png").string(), "--original", (dir / "orig.png").string()}).rc == 1);
}

TEST_CASE("sample is reproducible for a seed and writes patches") {
  TempDir dir;
  write_png(testsupport::smooth_texture(512, 384, 3, 4), dir / "a.png");
  const std::vector<std::string> base{"sample", "--in", (dir / "a.png").string(), "--patch", "64", "--seed", "3"};
  const auto a = cli(base);
  const auto b = cli(base);
  CHECK(a.rc == 0);
  CHECK(a.out == b.out);
  std::size_t n = 0;
  for (const char c : a.out) n += c == '\n';
  CHECK(n == 10);
  auto with_out = base;
  with_out.insert(with_out.end(), {"--out", (dir / "patches").string(), "--json"});
  const auto c = cli(with_out);
  CHECK(nlohmann::json::parse(c.out).size() == 10);
  CHECK(std::filesystem::exists(dir / "patches" / "patch_9.png"));
  CHECK(decode_image(dir / "patches" / "patch_0.png").width() == 64);
  CHECK(cli({"sample", "--in", (dir / "a.png").string()}).rc == 1);  // too small for 10 patches of 768
}

TEST_CASE("raps writes CSV") {
  TempDir dir;
  write_png(testsupport::noise_image(64, 64, 1, 2), dir / "a.png");
  auto r = cli({"raps", "--in", (dir / "a.png").string()});
  CHECK(r.rc == 0);
  CHECK(r.out.rfind("radius,power\n0,", 0) == 0);
  r = cli({"raps", "--in", (dir / "a.png").string(), "--out", (dir / "r.csv").string()});
  CHECK(r.out.empty());
  CHECK(slurp(dir / "r.csv").rfind("radius,power\n", 0) == 0);
}

TEST_CASE("bench writes JSON and CSV") {
  TempDir dir;
  std::filesystem::create_directories(dir / "gen");
  for (int i = 0; i < 3; ++i)
    write_png(testsupport::smooth_texture(128, 128, 1, static_cast<std::uint32_t>(i)), dir / "gen" / ("g" + std::to_string(i) + ".png"));
  const std::string prefix = (dir / "row").string();
  const auto r = cli({"bench", "--in", (dir / "gen").string(), "--method", "ours", "--out", prefix});
  CHECK(r.rc == 0);
  CHECK(r.out.rfind("method,fid", 0) == 0);
  const auto j = nlohmann::json::parse(slurp(prefix + ".json"));
  CHECK(j["method"] == "ours");
  CHECK(j["glcm_score"].is_number());
  CHECK(j["fid"].is_null());
  CHECK(slurp(prefix + ".csv").find("ours,--,--,--,") != std::string::npos);
  CHECK(cli({"bench", "--in", (dir / "nope").string()}).rc == 2);
}

TEST_CASE("judge-dryrun renders prompts and validates fixtures offline") {
  TempDir dir;
  auto r = cli({"judge-dryrun", "--template", "global_fidelity"});
  CHECK(r.rc == 0);
  const std::string rendered = render_prompt(TemplateId::GlobalFidelity, {}).front().text;
  CHECK(r.out == rendered + (rendered.back() == '\n' ? "" : "\n"));

  r = cli({"judge-dryrun", "--template", "local_fidelity", "--coords", "0.25,0.25,0.5,0.5", "--json"});
  CHECK(r.rc == 0);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j["images_expected"] == 2);
  CHECK(j["prompt"].get<std::string>().find("[0.25, 0.25, 0.5, 0.5]") != std::string::npos);

  spill(dir / "g.txt", testsupport::judge_fixture("global_fidelity", 5));
  std::vector<std::string> args{"judge-dryrun", "--template", "global_fidelity", "--response", (dir / "g.txt").string(),
                                "--json", "--local-response"};
  for (int i = 0; i < 10; ++i) {
    const auto p = dir / ("l" + std::to_string(i) + ".txt");
    spill(p, testsupport::judge_fixture("local_fidelity", 5));
    args.push_back(p.string());
  }
  r = cli(args);
  CHECK(r.rc == 0);
  j = nlohmann::json::parse(r.out);
  CHECK(j["msfi"] == 10.0);
  CHECK(j["dimension_score"] == 5.0);

  spill(dir / "ics.txt", "<json>{\"IEV\": 6, \"AAA\": 8, \"SRA\": 9, \"reasoning\": \"x\"}</json>");
  r = cli({"judge-dryrun", "--template", "ics", "--caption", "a cat", "--response", (dir / "ics.txt").string(), "--out",
           (dir / "prompt.txt").string()});
  CHECK(r.rc == 0);
  CHECK(r.out.find("IEV\t6\n") != std::string::npos);
  CHECK(r.out.find("ics\t6.506") != std::string::npos);
  CHECK(slurp(dir / "prompt.txt").find("a cat") != std::string::npos);

  spill(dir / "bad.txt", "<json>{\"IEV\": 11, \"AAA\": 8, \"SRA\": 9}</json>");
  r = cli({"judge-dryrun", "--template", "ics", "--response", (dir / "bad.txt").string()});
  CHECK(r.rc == 1);
  CHECK_FALSE(r.err.empty());
  CHECK(cli({"judge-dryrun", "--template", "nope"}).rc == 1);
  CHECK(cli({"judge-dryrun", "--template", "ics", "--caption", "c", "--response", (dir / "missing.txt").string()}).rc == 2);
}

TEST_CASE("the installed binary returns the same exit codes") {
  CHECK(shell_status("tier --w 12000 --h 9000") == 0);
  CHECK(shell_status("glcm") == 1);
  CHECK(shell_status("nosuch") == 1);
  CHECK(shell_status("glcm --in /nonexistent/x.png") == 2);
}
