#include "relalign/report.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace relalign::report {

namespace {

std::string fmt(double v, const char* spec = "%.2f") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

/// Blue (low) to red (high) ramp for heat cells.
std::string heat_color(double v) {
  v = std::clamp(v, 0.0, 1.0);
  const int r = static_cast<int>(40 + 205 * v);
  const int g = static_cast<int>(60 + 60 * (1 - std::abs(2 * v - 1)));
  const int b = static_cast<int>(40 + 205 * (1 - v));
  char buf[16];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string mean_std_cell(double mean, double std_dev, double scale) {
  return fmt(mean * scale) + "(± " + fmt(std_dev * scale) + ")";
}

std::string render_metrics_table(const std::vector<RunSummary>& rows) {
  std::ostringstream out;
  out << "| Experiment | Acc. | F1 | Label emb. |\n";
  out << "|---|---|---|---|\n";
  for (const auto& row : rows) {
    const auto& a = row.aggregate;
    out << "| " << row.name << " | " << mean_std_cell(a.mean_accuracy, a.std_accuracy) << " | "
        << mean_std_cell(a.mean_macro_f1, a.std_macro_f1) << " | "
        << (a.leq_available ? mean_std_cell(a.mean_leq, a.std_leq) : std::string("—")) << " |\n";
    if (a.single_run) out << "| " << row.name << " (single run) | | | |\n";
  }

  std::vector<std::pair<double, double>> acc_leq, f1_leq;
  for (const auto& row : rows) {
    for (const auto& seed : row.aggregate.per_seed) {
      if (seed.metrics.leq) {
        acc_leq.emplace_back(seed.metrics.accuracy, *seed.metrics.leq);
        f1_leq.emplace_back(seed.metrics.macro_f1, *seed.metrics.leq);
      }
    }
  }
  if (acc_leq.size() >= 3) {
    try {
      out << "\nPearson r (accuracy vs label-embedding quality): "
          << fmt(eval::metric_correlation(acc_leq), "%.4f") << "\n";
      out << "Pearson r (macro-F1 vs label-embedding quality): "
          << fmt(eval::metric_correlation(f1_leq), "%.4f") << "\n";
    } catch (const ValidationError&) {
      // constant series; nothing to report
    }
  }
  return out.str();
}

std::string render_mapping_table(const std::vector<std::string>& source_labels,
                                 const std::vector<std::string>& target_labels,
                                 const std::vector<std::vector<std::pair<int, double>>>& rows) {
  std::ostringstream out;
  out << "| Source | Closest targets |\n|---|---|\n";
  for (std::size_t i = 0; i < source_labels.size(); ++i) {
    out << "| " << source_labels[i] << " | ";
    if (i >= rows.size() || rows[i].empty()) {
      out << "—";
    } else {
      for (std::size_t j = 0; j < rows[i].size(); ++j) {
        if (j) out << ", ";
        out << target_labels[rows[i][j].first] << "(" << fmt(rows[i][j].second) << ")";
      }
    }
    out << " |\n";
  }
  return out.str();
}

void write_heatmap_svg(const eval::CorrelationMatrix& corr,
                       const std::vector<std::string>& labels, const std::string& path) {
  const Index k = corr.normalized.rows();
  const int cell = 28, margin = 120, legend = 40;
  const int width = margin + cell * static_cast<int>(k) + 20;
  const int height = margin + cell * static_cast<int>(k) + legend + 20;

  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot write heatmap: " + path);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
      << "' font-family='monospace' font-size='10'>\n";
  out << "<rect width='100%' height='100%' fill='white'/>\n";
  for (Index i = 0; i < k; ++i) {
    const std::string name = i < static_cast<Index>(labels.size()) ? labels[i] : std::to_string(i);
    out << "<text x='" << margin - 6 << "' y='" << margin + i * cell + cell / 2 + 3
        << "' text-anchor='end'>" << xml_escape(name) << (corr.excluded[i] ? " *" : "")
        << "</text>\n";
    out << "<text x='" << margin + i * cell + cell / 2 << "' y='" << margin - 6
        << "' text-anchor='start' transform='rotate(-60 " << margin + i * cell + cell / 2 << " "
        << margin - 6 << ")'>" << xml_escape(name) << "</text>\n";
  }
  for (Index i = 0; i < k; ++i) {
    for (Index j = 0; j < k; ++j) {
      out << "<rect x='" << margin + j * cell << "' y='" << margin + i * cell << "' width='"
          << cell - 1 << "' height='" << cell - 1 << "' fill='"
          << (corr.excluded[i] ? "#dddddd" : heat_color(corr.normalized(i, j))) << "'/>\n";
      out << "<text x='" << margin + j * cell + cell / 2 << "' y='"
          << margin + i * cell + cell / 2 + 3 << "' text-anchor='middle' fill='white'>"
          << fmt(corr.normalized(i, j), "%.2f") << "</text>\n";
    }
  }
  int excluded = 0;
  for (bool e : corr.excluded) excluded += e ? 1 : 0;
  out << "<text x='10' y='" << height - 14 << "'>rows: class proxies, columns: label embeddings"
      << (excluded ? "; * " + std::to_string(excluded) +
                         " row(s) excluded (absent or degenerate)"
                   : "")
      << "</text>\n";
  out << "</svg>\n";
}

void write_projection_svg(const Mat& label_table, const Mat& proxies,
                          const std::vector<std::string>& labels, const std::string& path) {
  if (label_table.cols() != proxies.cols()) {
    throw ValidationError("projection: dimension mismatch");
  }
  Mat stacked(label_table.rows() + proxies.rows(), label_table.cols());
  stacked << label_table, proxies;
  const Eigen::RowVectorXd mean = stacked.colwise().mean();
  Mat centered = stacked.rowwise() - mean;
  const Mat cov = centered.transpose() * centered / std::max<double>(1.0, stacked.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Mat> solver(cov);
  // Two leading components (eigenvalues ascend, take the last two columns).
  const Index d = cov.cols();
  Mat basis(d, 2);
  basis.col(0) = solver.eigenvectors().col(d - 1);
  basis.col(1) = solver.eigenvectors().col(d - 2);
  Mat coords = centered * basis;

  const double lo_x = coords.col(0).minCoeff(), hi_x = coords.col(0).maxCoeff();
  const double lo_y = coords.col(1).minCoeff(), hi_y = coords.col(1).maxCoeff();
  const double span_x = std::max(hi_x - lo_x, 1e-9), span_y = std::max(hi_y - lo_y, 1e-9);
  const int width = 640, height = 480, pad = 60;
  auto sx = [&](double v) { return pad + (v - lo_x) / span_x * (width - 2 * pad); };
  auto sy = [&](double v) { return height - pad - (v - lo_y) / span_y * (height - 2 * pad); };

  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot write projection: " + path);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
      << "' font-family='monospace' font-size='10'>\n";
  out << "<rect width='100%' height='100%' fill='white'/>\n";
  const Index k = label_table.rows();
  for (Index i = 0; i < k; ++i) {
    const std::string name = i < static_cast<Index>(labels.size()) ? labels[i] : std::to_string(i);
    out << "<rect x='" << sx(coords(i, 0)) - 4 << "' y='" << sy(coords(i, 1)) - 4
        << "' width='8' height='8' fill='#c0392b'/>\n";
    out << "<text x='" << sx(coords(i, 0)) + 6 << "' y='" << sy(coords(i, 1)) - 4 << "'>"
        << xml_escape(name) << "</text>\n";
  }
  for (Index i = 0; i < proxies.rows(); ++i) {
    const std::string name = i < static_cast<Index>(labels.size()) ? labels[i] : std::to_string(i);
    out << "<circle cx='" << sx(coords(k + i, 0)) << "' cy='" << sy(coords(k + i, 1))
        << "' r='5' fill='none' stroke='#2980b9' stroke-width='2'/>\n";
    out << "<text x='" << sx(coords(k + i, 0)) + 6 << "' y='" << sy(coords(k + i, 1)) + 12
        << "' fill='#2980b9'>" << xml_escape(name) << "</text>\n";
  }
  out << "<text x='10' y='16'>squares: label embeddings, circles: class proxies "
         "(principal-component projection)</text>\n";
  out << "</svg>\n";
}

void write_matrix_tsv(const Mat& m, const std::vector<std::string>& row_labels,
                      const std::vector<std::string>& col_labels, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot write matrix: " + path);
  out << ".";
  for (const auto& c : col_labels) out << "\t" << c;
  out << "\n";
  for (Index i = 0; i < m.rows(); ++i) {
    out << (i < static_cast<Index>(row_labels.size()) ? row_labels[i] : std::to_string(i));
    for (Index j = 0; j < m.cols(); ++j) out << "\t" << fmt(m(i, j), "%.6f");
    out << "\n";
  }
}

}  // namespace relalign::report
