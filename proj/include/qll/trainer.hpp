#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qll/core.hpp"
#include "qll/losses.hpp"
#include "qll/model.hpp"
#include "qll/parallel.hpp"
#include "qll/risk.hpp"

namespace qll {

/// Class-wise PU risk over per-class sigmoid outputs, or a softmax baseline.
using TrainLoss = std::variant<BinaryLossKind, MulticlassLossKind>;

struct TrainConfig {
  std::uint32_t epochs = 60;
  std::uint32_t batch_size = 16;
  double lr = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  TrainLoss loss = BinaryLossKind::scaled_sjs();
  ClassPriors priors{0.1, 0.5};  // read only by binary (PU) losses
  std::uint64_t seed = 1;
  ModelKind model_kind = ModelKind::kMlp;
  std::uint32_t hidden = 32;
  UMode u_mode = UMode::kComplement;
  Exec exec = Exec::kParallel;

  /// Throws std::invalid_argument on out-of-range fields.
  void validate() const;
};

struct EpochMetrics {
  std::uint32_t epoch = 0;  // 1-based
  double train_objective = 0.0;
  double test_accuracy = 0.0;

  friend bool operator==(const EpochMetrics&, const EpochMetrics&) = default;
};

struct TrainReport {
  std::vector<EpochMetrics> epochs;
  double best_test_accuracy = 0.0;
  /// Mean test accuracy over the last min(5, epochs) epochs.
  double last5_test_accuracy = 0.0;
  /// PU minibatches whose labels covered a single class; the risk is
  /// undefined there, so they are skipped without an update.
  std::size_t skipped_batches = 0;
  Model final_model;
  double wall_time_seconds = 0.0;
};

/// v <- momentum v + grad + weight_decay param; param <- param - lr v.
/// Throws std::invalid_argument on a shape mismatch.
void sgd_step(Parameters& params, const Parameters& grads, Parameters& velocity, double lr, double momentum,
              double weight_decay);

/// Step decay: lr for epochs [0, E/2), 0.1 lr for [E/2, 3E/4), 0.01 lr after.
/// `epoch` is 0-based.
double lr_at_epoch(double base_lr, std::uint32_t epoch, std::uint32_t total_epochs) noexcept;

/// Example visiting order for one epoch: a Fisher-Yates shuffle driven by
/// substream `epoch` of the batching stream. Depends only on (seed, epoch, n).
std::vector<std::size_t> batch_order(std::uint64_t seed, std::uint32_t epoch, std::size_t n);

/// Dataset features as an n x d matrix.
Matrix feature_matrix(const AmbiguousDataset& data);

/// 1 - zero-one risk of argmax predictions. Throws std::invalid_argument on an
/// empty set or a dimension mismatch.
double evaluate(const Model& model, const AmbiguousDataset& test_set, Exec exec = Exec::kParallel);

/// Fully deterministic given cfg.seed: init from the init substream, epoch
/// shuffles from the batching substream, one SJS weight per iteration from the
/// alpha substream. Test accuracy is measured after every epoch.
TrainReport train(const AmbiguousDataset& train_set, const AmbiguousDataset& test_set, const TrainConfig& cfg);

/// `epoch,train_objective,test_accuracy` with a header line. Values use a
/// fixed %.9g rendering so reruns are byte-identical.
std::string render_metrics_csv(const std::vector<EpochMetrics>& epochs);
std::vector<EpochMetrics> parse_metrics_csv(std::string_view text);
void write_metrics_csv(const std::filesystem::path& path, const std::vector<EpochMetrics>& epochs);

/// Named training method with its default optimizer settings.
struct MethodPreset {
  std::string name;
  TrainLoss loss;
  double lr = 0.1;
  double weight_decay = 1e-4;
};

/// ce, bs, gce, sce, js, cpu-sjs, cpu-kl, cpu-js. Throws std::invalid_argument
/// for an unknown name.
MethodPreset method_preset(const std::string& name);
const std::vector<std::string>& known_methods();
bool is_pu_method(const TrainLoss& loss) noexcept;

}  // namespace qll
