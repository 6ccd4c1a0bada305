#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <ctime>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "pixcurate/errors.hpp"
#include "pixcurate/pipeline.hpp"

namespace pixcurate {

using ojson = nlohmann::ordered_json;

const char* stage_name(Stage s) {
  switch (s) {
    case Stage::Collected:
      return "collected";
    case Stage::Purified:
      return "purified";
    case Stage::Tiered:
      return "tiered";
    case Stage::SrChecked:
      return "sr_checked";
    case Stage::Final:
      return "final";
  }
  return "final";
}

Stage parse_stage(std::string_view name) {
  for (const Stage s : {Stage::Collected, Stage::Purified, Stage::Tiered, Stage::SrChecked, Stage::Final}) {
    if (name == stage_name(s)) return s;
  }
  throw ValidationError("unknown stage '" + std::string(name) + "'");
}

std::string manifest_line(const ManifestRecord& r) {
  ojson scores = ojson::object();
  for (const auto& [k, v] : r.scores) {
    if (!std::isfinite(v)) throw ValidationError("score " + k + " of " + r.id + " is not finite");
    scores[k] = v;
  }
  ojson tags = ojson::object();
  for (const auto& [k, v] : r.tags) tags[k] = v;
  ojson j;
  j["id"] = r.id;
  j["path"] = r.path;
  j["stage"] = stage_name(r.stage);
  j["verdict"] = {{"passed", r.passed}, {"reasons", r.reasons}};
  j["scores"] = std::move(scores);
  j["tags"] = std::move(tags);
  j["timestamp"] = r.timestamp;
  return j.dump();
}

ManifestRecord parse_manifest_line(const std::string& line) {
  ManifestRecord r;
  try {
    const auto j = nlohmann::json::parse(line);
    r.id = j.at("id").get<std::string>();
    r.path = j.at("path").get<std::string>();
    r.stage = parse_stage(j.at("stage").get<std::string>());
    const auto& verdict = j.at("verdict");
    r.passed = verdict.at("passed").get<bool>();
    r.reasons = verdict.at("reasons").get<std::vector<std::string>>();
    for (const auto& [k, v] : j.at("scores").items()) r.scores[k] = v.get<double>();
    if (const auto t = j.find("tags"); t != j.end()) {
      for (const auto& [k, v] : t->items()) r.tags[k] = v.get<std::string>();
    }
    r.timestamp = j.at("timestamp").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(e.what());
  }
  if (r.id.empty()) throw ValidationError("empty id");
  return r;
}

namespace {

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read manifest " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

ManifestContents read_manifest(const std::filesystem::path& path) {
  ManifestContents out;
  if (!std::filesystem::exists(path)) return out;
  const std::string text = read_all(path);
  std::vector<std::string> bad;
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start < text.size()) {
    const auto nl = text.find('\n', start);
    ++line_no;
    if (nl == std::string::npos) {
      out.truncated_tail = true;
      break;
    }
    const std::string line = text.substr(start, nl - start);
    start = nl + 1;
    if (line.empty()) continue;
    try {
      out.records.push_back(parse_manifest_line(line));
    } catch (const ValidationError& e) {
      bad.push_back("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!bad.empty()) {
    std::string msg = path.string() + " has " + std::to_string(bad.size()) + " corrupt line(s)";
    for (const auto& b : bad) msg += "\n  " + b;
    throw ValidationError(msg);
  }
  return out;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

ManifestWriter::ManifestWriter(const std::filesystem::path& path) : path_(path), clock_(utc_timestamp) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (std::filesystem::exists(path)) {
    const std::string text = read_all(path);
    const auto last_nl = text.rfind('\n');
    const std::size_t complete = last_nl == std::string::npos ? 0 : last_nl + 1;
    if (complete < text.size()) std::filesystem::resize_file(path, complete);
    for (const auto& r : read_manifest(path).records) keys_.emplace(r.id, r.stage);
  }
  fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd_ < 0) throw IoError("cannot open manifest " + path.string() + ": " + std::strerror(errno));
}

ManifestWriter::~ManifestWriter() {
  if (fd_ >= 0) ::close(fd_);
}

bool ManifestWriter::contains(const std::string& id, Stage stage) const {
  return keys_.count({id, stage}) > 0;
}

void ManifestWriter::append(ManifestRecord r) {
  if (contains(r.id, r.stage)) {
    throw ValidationError("manifest already holds (" + r.id + ", " + stage_name(r.stage) + ")");
  }
  if (r.timestamp.empty()) r.timestamp = clock_();
  const std::string line = manifest_line(r) + "\n";
  const ssize_t n = ::write(fd_, line.data(), line.size());
  if (n != static_cast<ssize_t>(line.size())) {
    throw IoError("short write to manifest " + path_.string() + ": " +
                  (n < 0 ? std::strerror(errno) : "partial line"));
  }
  keys_.emplace(r.id, r.stage);
}

}  // namespace pixcurate
