#pragma once

#include <string>
#include <vector>

#include "relalign/types.hpp"

namespace relalign::cli {

inline constexpr const char* kToolVersion = "0.1.0";

/// Provenance record written into every stage output directory. Reruns skip
/// a stage when the stored manifest matches the pending one on everything
/// except timestamps.
struct RunManifest {
  std::string command;
  std::string config_hash;
  std::vector<std::string> inputs;
  std::string inputs_fingerprint;  // content hash over the input files
  std::vector<std::string> outputs;
  std::string tool_version = kToolVersion;
  std::string started;
  std::string finished;
  std::vector<std::uint64_t> seeds;

  bool matches(const RunManifest& other) const;
};

/// Content fingerprint over files (directories are walked recursively in
/// sorted order).
std::string fingerprint_paths(const std::vector<std::string>& paths);

void save_manifest(const RunManifest& manifest, const std::string& dir);
RunManifest load_manifest(const std::string& dir);
bool manifest_exists(const std::string& dir);

std::string timestamp_now();

}  // namespace relalign::cli
