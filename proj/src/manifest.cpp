#include "relalign/manifest.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace relalign::cli {

using nlohmann::json;
namespace fs = std::filesystem;

bool RunManifest::matches(const RunManifest& other) const {
  return command == other.command && config_hash == other.config_hash && inputs == other.inputs &&
         inputs_fingerprint == other.inputs_fingerprint && tool_version == other.tool_version &&
         seeds == other.seeds;
}

std::string fingerprint_paths(const std::vector<std::string>& paths) {
  std::vector<std::string> files;
  for (const auto& p : paths) {
    if (fs::is_directory(p)) {
      for (const auto& entry : fs::recursive_directory_iterator(p)) {
        if (entry.is_regular_file()) files.push_back(entry.path().string());
      }
    } else if (fs::exists(p)) {
      files.push_back(p);
    } else {
      files.push_back(p + ":missing");
    }
  }
  std::sort(files.begin(), files.end());
  std::uint64_t h = 14695981039346656037ull;
  for (const auto& f : files) {
    h = fnv1a64(f, h);
    std::ifstream in(f, std::ios::binary);
    if (in) {
      std::stringstream ss;
      ss << in.rdbuf();
      h = fnv1a64(ss.str(), h);
    }
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void save_manifest(const RunManifest& manifest, const std::string& dir) {
  fs::create_directories(dir);
  json j;
  j["command"] = manifest.command;
  j["config_hash"] = manifest.config_hash;
  j["inputs"] = manifest.inputs;
  j["inputs_fingerprint"] = manifest.inputs_fingerprint;
  j["outputs"] = manifest.outputs;
  j["tool_version"] = manifest.tool_version;
  j["started"] = manifest.started;
  j["finished"] = manifest.finished;
  j["seeds"] = manifest.seeds;
  std::ofstream out(fs::path(dir) / "manifest.json");
  if (!out) throw RuntimeFailure("cannot write manifest in " + dir);
  out << j.dump(2) << "\n";
}

RunManifest load_manifest(const std::string& dir) {
  std::ifstream in(fs::path(dir) / "manifest.json");
  if (!in) throw RuntimeFailure("no manifest in " + dir);
  json j;
  in >> j;
  RunManifest m;
  m.command = j.value("command", "");
  m.config_hash = j.value("config_hash", "");
  m.inputs = j.value("inputs", std::vector<std::string>{});
  m.inputs_fingerprint = j.value("inputs_fingerprint", "");
  m.outputs = j.value("outputs", std::vector<std::string>{});
  m.tool_version = j.value("tool_version", "");
  m.started = j.value("started", "");
  m.finished = j.value("finished", "");
  m.seeds = j.value("seeds", std::vector<std::uint64_t>{});
  return m;
}

bool manifest_exists(const std::string& dir) {
  return fs::exists(fs::path(dir) / "manifest.json");
}

std::string timestamp_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

}  // namespace relalign::cli
