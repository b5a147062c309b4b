#pragma once

#include <string>
#include <vector>

#include "relalign/eval.hpp"
#include "relalign/taxonomy.hpp"
#include "relalign/trainer.hpp"
#include "relalign/types.hpp"

namespace relalign::report {

/// "69.34(± 0.46)" with values scaled by `scale` (metrics tables use 100).
std::string mean_std_cell(double mean, double std_dev, double scale = 100.0);

struct RunSummary {
  std::string name;  // experiment tag, e.g. the label-encoder kind
  train::AggregateReport aggregate;
};

/// Markdown metrics table (accuracy / macro-F1 / label-embedding quality,
/// mean(± std) per row); missing cells render as an em-dash. When three or
/// more rows carry a quality score, the Pearson correlation between accuracy
/// and quality (and macro-F1 and quality) is appended below the table.
std::string render_metrics_table(const std::vector<RunSummary>& rows);

/// Markdown mapping table: one row per source label with its qualifying
/// targets, empty mappings shown as an em-dash.
std::string render_mapping_table(const std::vector<std::string>& source_labels,
                                 const std::vector<std::string>& target_labels,
                                 const std::vector<std::vector<std::pair<int, double>>>& rows);

/// Correlation heatmap; excluded (absent/degenerate) rows are hatched and
/// listed in the legend.
void write_heatmap_svg(const eval::CorrelationMatrix& corr,
                       const std::vector<std::string>& labels, const std::string& path);

/// 2-D projection of label embeddings (squares) and class proxies (circles)
/// via principal components; deterministic, advisory only.
void write_projection_svg(const Mat& label_table, const Mat& proxies,
                          const std::vector<std::string>& labels, const std::string& path);

/// Text matrix dump (shared by the evaluate and map commands).
void write_matrix_tsv(const Mat& m, const std::vector<std::string>& row_labels,
                      const std::vector<std::string>& col_labels, const std::string& path);

}  // namespace relalign::report
