#pragma once

#include <optional>
#include <string>
#include <vector>

#include "relalign/taxonomy.hpp"
#include "relalign/types.hpp"

namespace relalign {

enum class Framework { RST, PDTB, OTHER };
enum class RelationKind { EXPLICIT, IMPLICIT, OTHER, NA };
enum class InstanceSource { ORIGINAL, AUGMENTED, RELABELED };

std::string to_string(Framework f);
std::string to_string(RelationKind k);
std::string to_string(InstanceSource s);
Framework framework_from_string(const std::string& s);
RelationKind relation_kind_from_string(const std::string& s);
InstanceSource instance_source_from_string(const std::string& s);

/// One argument pair with its relation label; the atomic training example.
struct RelationInstance {
  std::string arg1;
  std::string arg2;
  int label = -1;  // row index into the associated taxonomy
  Framework framework = Framework::OTHER;
  RelationKind relation_kind = RelationKind::NA;
  std::optional<std::string> connective;
  std::string doc_id;
  InstanceSource source = InstanceSource::ORIGINAL;

  /// Throws ValidationError on empty arguments or label out of range.
  void validate(const RelationTaxonomy& tax) const;
};

struct DatasetSplits {
  std::vector<RelationInstance> train;
  std::vector<RelationInstance> dev;
  std::vector<RelationInstance> test;
};

}  // namespace relalign
