#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qll/ambigen.hpp"
#include "qll/core.hpp"
#include "qll/trainer.hpp"

namespace qll {

/// Bad command-line or configuration input (exit code 1 in the CLI).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// $QLL_OUT if set and non-empty, otherwise the current directory.
std::filesystem::path output_root();
/// Relative paths are taken relative to output_root().
std::filesystem::path resolve_output(const std::filesystem::path& p);

/// Training knobs shared by `train` and `sweep`. Unset optionals fall back to
/// the method preset.
struct TrainOptions {
  std::string method = "cpu-sjs";
  double pi1 = 0.1;
  std::string pi2 = "auto";
  std::uint64_t seed = 1;
  std::uint32_t epochs = 60;
  std::uint32_t batch_size = 16;
  std::optional<double> lr;
  double momentum = 0.9;
  std::optional<double> weight_decay;
  std::string model = "mlp";
  std::uint32_t hidden = 32;
  std::string u_mode = "complement";
  std::optional<double> alpha;  // fixes the SJS weight for cpu-sjs
  std::optional<double> beta;
  std::optional<double> gce_q;
  std::optional<double> sce_a;
  std::optional<double> sce_b;
  std::optional<double> js_pi1;
};

/// "auto" gives m / c from the dataset's generation metadata; otherwise the
/// text must be a number in (0, 1]. Throws UsageError.
double resolve_pi2(const std::string& text, const AmbiguousDataset& train_set);

/// Throws UsageError for unknown names or out-of-range values.
TrainConfig build_train_config(const TrainOptions& opts, const AmbiguousDataset& train_set);

/// Short name of how a dataset was produced, e.g. "mixup-m2-r4" or "clean".
std::string dataset_variant(const AmbiguousDataset& ds);

struct RunRecord {
  std::string method;
  std::string label;
  std::string variant;
  std::uint64_t seed = 0;
  double best_test_accuracy = 0.0;
};

/// Trains and writes metrics.csv, model.qllm and run.meta into `run_dir`.
/// Every artifact is a deterministic function of the inputs.
TrainReport execute_run(const AmbiguousDataset& train_set, const AmbiguousDataset& test_set, const TrainConfig& cfg,
                        const RunRecord& identity, const std::filesystem::path& run_dir);

/// run.meta text for a finished run (no timing, so it is reproducible).
std::string render_run_meta(const RunRecord& identity, const TrainConfig& cfg, const TrainReport& report);

/// Parsed `key = value` lines; '#' starts a comment.
std::vector<std::pair<std::string, std::string>> parse_key_values(std::string_view text);

/// Sweep experiment: every PU method runs at each (pi1, pi2) grid point and
/// every seed; other methods run once per seed.
struct ExperimentConfig {
  std::filesystem::path train_path;
  std::filesystem::path test_path;
  std::vector<std::string> methods{"cpu-sjs"};
  std::vector<double> pi1_grid{0.1};
  std::vector<std::string> pi2_grid{"auto"};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  TrainOptions train;
  std::filesystem::path out_dir = "sweep";

  /// Throws UsageError on unknown methods, empty grids or an empty seed list.
  void validate() const;
};

}  // namespace qll
