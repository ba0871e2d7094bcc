#include "qll/results.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

#include "qll/io_util.hpp"
#include "qll/trainer.hpp"

namespace qll {

namespace {

std::string fixed(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

std::string fmt_g9(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

// Display columns of a UTF-8 string (one per code point).
std::size_t display_width(const std::string& s) {
  return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char ch) {
    return (static_cast<unsigned char>(ch) & 0xC0) != 0x80;
  }));
}

std::string pad(const std::string& s, std::size_t width, bool left) {
  const std::size_t w = display_width(s);
  const std::string fill(w < width ? width - w : 0, ' ');
  return left ? s + fill : fill + s;
}

}  // namespace

CellStats summarize(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("summarize: no values");
  CellStats s;
  s.n = values.size();
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  return s;
}

std::string format_cell(const CellStats& s, int precision) {
  return fixed(s.mean, precision) + " ± " + (s.stddev ? fixed(*s.stddev, precision) : std::string("n/a"));
}

ResultsTable build_results_table(std::span<const RunRecord> runs) {
  ResultsTable table;
  std::map<std::string, std::map<std::string, std::vector<double>>> grouped;
  for (const auto& r : runs) {
    grouped[r.label][r.variant].push_back(r.best_test_accuracy);
    if (std::find(table.variants.begin(), table.variants.end(), r.variant) == table.variants.end()) {
      table.variants.push_back(r.variant);
    }
  }
  std::sort(table.variants.begin(), table.variants.end());
  for (const auto& [label, by_variant] : grouped) {
    ResultsTable::Row row;
    row.label = label;
    double total = 0.0;
    std::size_t filled = 0;
    for (const auto& v : table.variants) {
      const auto it = by_variant.find(v);
      if (it == by_variant.end()) {
        row.cells.emplace_back();
        continue;
      }
      row.cells.push_back(summarize(it->second));
      total += row.cells.back()->mean;
      ++filled;
    }
    row.mean = total / static_cast<double>(filled);
    table.rows.push_back(std::move(row));
  }
  std::stable_sort(table.rows.begin(), table.rows.end(),
                   [](const auto& a, const auto& b) { return a.mean < b.mean; });
  return table;
}

std::string render_text(const ResultsTable& table) {
  std::vector<std::vector<std::string>> grid;
  std::vector<std::string> header{"method"};
  header.insert(header.end(), table.variants.begin(), table.variants.end());
  grid.push_back(header);
  for (const auto& row : table.rows) {
    std::vector<std::string> line{row.label};
    for (const auto& cell : row.cells) line.push_back(cell ? format_cell(*cell) : "-");
    grid.push_back(std::move(line));
  }
  std::vector<std::size_t> widths(header.size(), 0);
  for (const auto& line : grid) {
    for (std::size_t k = 0; k < line.size(); ++k) widths[k] = std::max(widths[k], display_width(line[k]));
  }
  std::string out;
  for (const auto& line : grid) {
    for (std::size_t k = 0; k < line.size(); ++k) {
      if (k) out += "  ";
      out += pad(line[k], widths[k], k == 0);
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    out += "\n";
  }
  return out;
}

std::string render_csv(const ResultsTable& table) {
  std::string out = "label,variant,n,mean,std\n";
  for (const auto& row : table.rows) {
    for (std::size_t k = 0; k < table.variants.size(); ++k) {
      if (!row.cells[k]) continue;
      const CellStats& s = *row.cells[k];
      out += row.label + "," + table.variants[k] + "," + std::to_string(s.n) + "," + fmt_g9(s.mean) + "," +
             (s.stddev ? fmt_g9(*s.stddev) : std::string("n/a")) + "\n";
    }
  }
  return out;
}

std::vector<RunRecord> collect_runs(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  std::vector<fs::path> dirs;
  if (!fs::is_directory(root)) return {};
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file() && entry.path().filename() == "run.meta" &&
        fs::is_regular_file(entry.path().parent_path() / "metrics.csv")) {
      dirs.push_back(entry.path().parent_path());
    }
  }
  std::sort(dirs.begin(), dirs.end());
  std::vector<RunRecord> runs;
  for (const auto& dir : dirs) {
    RunRecord r;
    for (const auto& [key, value] : parse_key_values(read_file(dir / "run.meta"))) {
      if (key == "method") r.method = value;
      if (key == "label") r.label = value;
      if (key == "variant") r.variant = value;
      if (key == "seed") r.seed = std::stoull(value);
    }
    if (r.label.empty()) r.label = r.method;
    const auto epochs = parse_metrics_csv(read_file(dir / "metrics.csv"));
    if (epochs.empty()) throw FormatError("run " + dir.string() + ": metrics.csv has no epochs");
    for (const auto& e : epochs) r.best_test_accuracy = std::max(r.best_test_accuracy, e.test_accuracy);
    runs.push_back(std::move(r));
  }
  return runs;
}

}  // namespace qll
