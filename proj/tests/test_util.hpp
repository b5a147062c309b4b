#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>

#include "relalign/instance.hpp"
#include "relalign/taxonomy.hpp"

namespace testutil {

/// Fresh directory under the build tree; leaked on purpose so failures can
/// be inspected.
inline std::string temp_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  const auto dir = std::filesystem::temp_directory_path() /
                   ("relalign_" + tag + "_" + std::to_string(counter++) + "_" +
                    std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  return dir.string();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

inline relalign::RelationTaxonomy tiny_taxonomy(int k, const std::string& prefix = "label-") {
  relalign::RelationTaxonomy tax;
  tax.framework_name = "other";
  for (int i = 0; i < k; ++i) {
    tax.labels.push_back({prefix + std::to_string(i), {}, {}});
  }
  return tax;
}

inline relalign::RelationInstance instance(const std::string& a1, const std::string& a2, int label,
                                           const std::string& doc = "doc_01") {
  relalign::RelationInstance inst;
  inst.arg1 = a1;
  inst.arg2 = a2;
  inst.label = label;
  inst.doc_id = doc;
  return inst;
}

}  // namespace testutil
