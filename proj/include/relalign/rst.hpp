#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "relalign/instance.hpp"
#include "relalign/taxonomy.hpp"
#include "relalign/types.hpp"

namespace relalign::ingest {

enum class Nuclearity { NUCLEUS, SATELLITE, ROOT };

/// One node of a discourse tree. Leaves cover a single elementary unit;
/// `relation` is the fine-grained relation holding between the node's
/// children (empty for leaves and for purely structural nodes).
struct RstNode {
  int span_lo = 0;  // inclusive 1-based EDU indices
  int span_hi = 0;
  Nuclearity nuclearity = Nuclearity::ROOT;
  std::string relation;
  std::vector<std::unique_ptr<RstNode>> children;

  bool is_leaf() const { return children.empty(); }
};

struct RstTree {
  std::string doc_id;
  std::unique_ptr<RstNode> root;
  std::vector<std::string> edus;  // 1-based via index+1

  /// Structural checks: leaves correspond one-to-one with EDUs, sibling spans
  /// adjacent and non-overlapping, root covers everything.
  void validate() const;
};

/// Parses the treebank's bracketed tree format:
///   ( Root (span 1 3) (ss
///     ( Nucleus (leaf 1) (rel2par span) (text _!...!_) ) ... )
/// Node relations are derived from children's rel2par fields: the satellite's
/// for mononuclear relations, the shared nucleus label for multinuclear ones.
RstTree parse_dis(const std::string& content, const std::string& doc_id);
RstTree load_dis_file(const std::string& path);

/// Right-branching binarization: n-ary nodes are expanded so every internal
/// node has exactly two children, with the original relation replicated on
/// the introduced nodes and nuclearity preserved on original children.
RstTree binarize_rst_tree(const RstTree& tree);

/// Total map from fine-grained relation names to coarse classes. Lookups
/// normalize case and strip the embedded-variant suffix ("-e").
struct RelationNameMap {
  std::map<std::string, std::string> entries;

  std::string coarse(const std::string& fine) const;  // throws on unknown names
  std::vector<std::string> coarse_classes() const;    // sorted distinct targets
};

/// Tab-separated "fine<TAB>coarse" rows; '#' comments allowed.
RelationNameMap load_relation_name_map(const std::string& path);

/// One instance per internal node carrying a relation: arg1 is the
/// concatenated EDU text of the left child's span, arg2 of the right child's.
/// The tree must be binary.
std::vector<RelationInstance> extract_rst_instances(const RstTree& tree,
                                                    const RelationNameMap& name_map,
                                                    const RelationTaxonomy& taxonomy);

/// Taxonomy of the coarse classes present in extracted data, alphabetical.
RelationTaxonomy rst_taxonomy_from_data(const std::vector<std::string>& coarse_names);

/// Deterministic stratified held-out split: `fraction` of each class moves to
/// dev; classes with a single instance stay in train. Test is left empty.
DatasetSplits split_rst_validation(const std::vector<RelationInstance>& train, double fraction,
                                   std::uint64_t seed);

}  // namespace relalign::ingest
