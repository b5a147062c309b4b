#pragma once

#include <string>
#include <vector>

#include "relalign/instance.hpp"
#include "relalign/taxonomy.hpp"
#include "relalign/types.hpp"

namespace relalign::ingest {

/// One relation record as supplied by the corpus: argument texts, relation
/// type, connective, dot-delimited sense labels, and the document id whose
/// first two digits encode the WSJ section.
struct PdtbRecord {
  std::string doc_id;
  std::string relation_type;  // Explicit / Implicit / AltLex / ...
  std::string connective;
  std::vector<std::string> senses;  // one or more full sense paths
  std::string arg1;
  std::string arg2;
};

/// Reads delimited relation records. The first non-comment line is a header
/// naming the columns (doc_id, type, conn, sense1, sense2, arg1, arg2);
/// the delimiter is '|' or tab, detected from the header.
std::vector<PdtbRecord> load_pdtb_records(const std::string& path);

/// Expands records into instances, one per sense (a pair annotated with two
/// senses yields two instances). Labels hold the full sense path as a name
/// until sense filtering assigns taxonomy ids. Relation types other than
/// Explicit/Implicit are dropped unless include_other is set; EntRel/NoRel
/// carry no sense hierarchy and are always dropped.
struct PdtbRawInstance {
  RelationInstance instance;  // label is -1 at this stage
  std::string sense;
};
std::vector<PdtbRawInstance> pdtb_instances(const std::vector<PdtbRecord>& records,
                                            bool include_other = false,
                                            bool prepend_connective = false);

/// Truncates senses to the given hierarchy level and keeps senses with more
/// than min_count occurrences over the whole dataset (counted before any
/// splitting). The returned taxonomy lists retained senses alphabetically.
struct SenseFilterResult {
  std::vector<RelationInstance> instances;
  RelationTaxonomy taxonomy;
  std::vector<std::pair<std::string, int>> dropped;  // sense -> count
};
SenseFilterResult filter_pdtb_senses(const std::vector<PdtbRawInstance>& raw, int level = 2,
                                     int min_count = 100);

/// WSJ section from a doc id such as "wsj_2100" -> 21.
int wsj_section(const std::string& doc_id);

/// Sections 2-20 train, 0-1 dev, 21-22 test; anything later is excluded.
DatasetSplits split_pdtb_by_section(const std::vector<RelationInstance>& instances);

}  // namespace relalign::ingest
