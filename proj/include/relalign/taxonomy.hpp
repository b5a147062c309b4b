#pragma once

#include <optional>
#include <string>
#include <vector>

#include "relalign/types.hpp"

namespace relalign {

struct LabelRecord {
  std::string name;
  std::optional<std::string> description;
  std::optional<std::vector<std::string>> hierarchy_path;  // level names, L1 first
};

/// Ordered label inventory for one annotation framework. Label ids are row
/// indices into this list; names never appear in matrices.
struct RelationTaxonomy {
  std::string framework_name;
  std::vector<LabelRecord> labels;

  int size() const { return static_cast<int>(labels.size()); }

  /// Index of a label name, or -1.
  int find(const std::string& name) const;

  /// Checks name uniqueness and hierarchy-path consistency (all-or-none,
  /// equal depth). Throws ValidationError.
  void validate() const;

  /// For hierarchical taxonomies: parent group index per label, with group
  /// names in first-seen order. Throws if any label lacks a path.
  std::pair<std::vector<int>, std::vector<std::string>> level1_groups() const;
};

RelationTaxonomy load_taxonomy(const std::string& path);
void save_taxonomy(const RelationTaxonomy& tax, const std::string& path);

/// Attaches descriptions from a "label<TAB>description" file ('#' comments)
/// to matching labels; labels without a row keep none.
void attach_descriptions(RelationTaxonomy& tax, const std::string& path);

}  // namespace relalign
