#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "relalign/artifact.hpp"
#include "relalign/encoder.hpp"
#include "relalign/instance.hpp"
#include "relalign/types.hpp"

namespace relalign::align {

/// Cosine matrix between the label tables of two frameworks. Row i belongs
/// to source label i, column j to target label j; the transposed view gives
/// the other perspective.
struct CrossFrameworkMatrix {
  Mat raw;  // k x c
  RelationTaxonomy source_taxonomy;
  RelationTaxonomy target_taxonomy;
  std::string source_provenance;
  std::string target_provenance;
};

/// Refuses incomparable embedding spaces: both artifacts must carry a
/// pretrained (non-random) label-encoder family, and the families plus input
/// encoder families must match. Randomly initialized label spaces from
/// independent runs are unrelated, so comparing them would be meaningless.
CrossFrameworkMatrix cross_similarity(const TrainedArtifact& source,
                                      const TrainedArtifact& target);

/// Direct table-level variant for tests and tools that manage provenance
/// themselves.
Mat cross_similarity_tables(const Mat& source_table, const Mat& target_table);

struct MappingEntry {
  int target_label = -1;
  double similarity = 0.0;
};

struct MappingReport {
  // Per source label: qualifying targets sorted by descending similarity.
  std::vector<std::vector<MappingEntry>> rows;
  double threshold = 0.10;
  int top_n = 2;
  std::vector<int> excluded_sources;  // labels dropped via the exclusion list
};

/// Per-row ranking of target labels above the similarity threshold,
/// truncated to top_n. Rows in `exclude_sources` are reported with empty
/// mappings.
MappingReport mapping_report(const CrossFrameworkMatrix& matrix, double threshold = 0.10,
                             int top_n = 2, const std::set<int>& exclude_sources = {});

/// Total mapping from source labels to a target label or exclusion.
struct RelabelingMap {
  enum class Provenance { THIS_METHOD, EXTERNAL_TABLE };
  struct Entry {
    std::string source;
    std::optional<std::string> target;  // nullopt = excluded
    double strength = 0.0;
    std::string note;  // required for exclusions
  };
  std::vector<Entry> entries;
  Provenance provenance = Provenance::THIS_METHOD;

  const Entry* find(const std::string& source_label) const;
  void validate() const;
};

/// Human-editable mapping table: "source<TAB>target<TAB>strength[<TAB>note]",
/// '#' comments; target "-" or "EXCLUDE" marks exclusion (note required).
RelabelingMap load_relabeling_map(const std::string& path,
                                  RelabelingMap::Provenance provenance);
void save_relabeling_map(const RelabelingMap& map, const std::string& path,
                         const std::string& header_comment = "");

/// Derives an editable map from a mapping report (top-1 per source label);
/// sources without a qualifying target become exclusions.
RelabelingMap map_from_report(const MappingReport& report, const RelationTaxonomy& source_tax,
                              const RelationTaxonomy& target_tax);

struct RelabelResult {
  std::vector<RelationInstance> instances;
  int relabeled = 0;
  int excluded = 0;
};

/// Re-tags instances into the target taxonomy. Excluded labels are dropped,
/// everything else keeps its arguments and doc id, gains the relabeled
/// source tag, and counts are reported.
RelabelResult relabel_dataset(const std::vector<RelationInstance>& instances,
                              const RelabelingMap& map, const RelationTaxonomy& source_taxonomy,
                              const RelationTaxonomy& target_taxonomy);

/// Appends relabeled data to the train split only; dev and test stay pure.
/// A relabeled instance sharing a doc id with dev or test is contamination.
DatasetSplits merge_for_extrinsic(const DatasetSplits& target_splits,
                                  const std::vector<RelationInstance>& relabeled);

/// Arithmetic mean of per-member distributions; every row sums to 1.
Mat average_distributions(const std::vector<Mat>& distributions);

/// Mean of the member distributions (contrastive, label-embedding and
/// classifier members each expose a distribution over the shared taxonomy);
/// every member encodes the data with its own encoder.
Mat ensemble_distribution(const std::vector<const TrainedArtifact*>& members,
                          const std::vector<RelationInstance>& data);

/// Argmax of the ensemble distribution, ties toward the lowest label id.
std::vector<int> ensemble_predict(const std::vector<const TrainedArtifact*>& members,
                                  const std::vector<RelationInstance>& data);

}  // namespace relalign::align
