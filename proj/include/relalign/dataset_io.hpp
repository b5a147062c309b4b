#pragma once

#include <string>
#include <vector>

#include "relalign/instance.hpp"
#include "relalign/taxonomy.hpp"

namespace relalign {

/// Line-delimited interchange format: one JSON record per line with fields
/// arg1, arg2, label (name, resolved to id here), framework, relation_kind,
/// connective, doc_id, source. Malformed lines and unknown labels are
/// reported with line numbers.
std::vector<RelationInstance> load_jsonl_dataset(const std::string& path,
                                                 const RelationTaxonomy& taxonomy);

void save_jsonl_dataset(const std::vector<RelationInstance>& instances,
                        const RelationTaxonomy& taxonomy, const std::string& path);

/// Directory layout used throughout: train.jsonl / dev.jsonl / test.jsonl
/// next to taxonomy.json.
DatasetSplits load_splits(const std::string& dir, const RelationTaxonomy& taxonomy);
void save_splits(const DatasetSplits& splits, const RelationTaxonomy& taxonomy,
                 const std::string& dir);

}  // namespace relalign
