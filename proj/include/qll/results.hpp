#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qll/experiment.hpp"

namespace qll {

/// Mean and sample standard deviation; the deviation needs at least two
/// values.
struct CellStats {
  std::size_t n = 0;
  double mean = 0.0;
  std::optional<double> stddev;
};

/// Throws std::invalid_argument on empty input.
CellStats summarize(std::span<const double> values);

/// "0.8000 ± 0.0200", or "0.8000 ± n/a" for a single value.
std::string format_cell(const CellStats& s, int precision = 4);

/// Rows are run labels, columns dataset variants, cells best test accuracy
/// over seeds. Rows are sorted by ascending mean (average of the row's cell
/// means), ties by label.
struct ResultsTable {
  struct Row {
    std::string label;
    std::vector<std::optional<CellStats>> cells;
    double mean = 0.0;
  };
  std::vector<std::string> variants;
  std::vector<Row> rows;
};

ResultsTable build_results_table(std::span<const RunRecord> runs);
std::string render_text(const ResultsTable& table);
/// Long form: label,variant,n,mean,std.
std::string render_csv(const ResultsTable& table);

/// Every directory under `root` holding run.meta and metrics.csv, in path
/// order. Best accuracy is recomputed from metrics.csv.
std::vector<RunRecord> collect_runs(const std::filesystem::path& root);

}  // namespace qll
