#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qll/core.hpp"
#include "qll/parallel.hpp"
#include "qll/rng.hpp"

namespace qll {

enum class ModelKind : std::uint8_t { kLinear = 0, kMlp = 1 };

ModelKind parse_model_kind(const std::string& name);
const char* model_kind_name(ModelKind kind) noexcept;

struct ModelDims {
  std::uint32_t input = 0;    // d
  std::uint32_t hidden = 0;   // h, ignored by the linear model
  std::uint32_t classes = 0;  // c

  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

/// y = W x + b with W stored out x in.
struct DenseLayer {
  Matrix weight;
  std::vector<double> bias;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Parameter blocks in declaration order: for each layer, weight then bias.
/// Gradients and optimizer state use the same structure.
struct Parameters {
  std::vector<DenseLayer> layers;

  std::size_t count() const noexcept;
  Parameters zeros_like() const;
  double squared_norm() const noexcept;
  /// Mutable views of every block, in declaration order.
  std::vector<std::span<double>> blocks();
  std::vector<std::span<const double>> blocks() const;

  friend bool operator==(const Parameters&, const Parameters&) = default;
};

/// Per-class logit producer f(x) = [g_1(x), ..., g_c(x)]: a linear map, or a
/// one-hidden-layer rectifier network.
class Model {
 public:
  /// Zero-initialized parameters. Throws std::invalid_argument on zero dims.
  Model(ModelKind kind, ModelDims dims);

  ModelKind kind() const noexcept { return kind_; }
  const ModelDims& dims() const noexcept { return dims_; }
  Parameters& params() noexcept { return params_; }
  const Parameters& params() const noexcept { return params_; }

  friend bool operator==(const Model&, const Model&) = default;

 private:
  ModelKind kind_;
  ModelDims dims_;
  Parameters params_;
};

/// Weights ~ N(0, 2 / fan_in), biases zero.
Model init_model(ModelKind kind, ModelDims dims, RngStream& rng);

struct ForwardCache {
  std::vector<double> input;
  std::vector<double> hidden_pre;  // MLP only
  std::vector<double> hidden_act;  // MLP only
};

struct ForwardResult {
  std::vector<double> logits;
  ForwardCache cache;
};

ForwardResult forward(const Model& model, std::span<const double> x);

/// Parameter gradient for one example. Throws std::invalid_argument if the
/// cache or dL/dlogits do not match the model.
Parameters backward(const Model& model, const ForwardCache& cache, std::span<const double> dlogits);

/// Batched activations; row i corresponds to input row i.
struct BatchCache {
  Matrix logits;
  Matrix hidden_pre;
  Matrix hidden_act;
};

/// OpenMP over examples; each row is computed independently.
BatchCache forward_batch(const Model& model, const Matrix& inputs, Exec exec = Exec::kParallel);

/// Summed parameter gradient over the batch. Each output parameter row is
/// reduced over examples in index order, so results do not depend on the
/// thread count.
Parameters backward_batch(const Model& model, const Matrix& inputs, const BatchCache& cache, const Matrix& dlogits,
                          Exec exec = Exec::kParallel);

/// Argmax; ties go to the lowest index.
ClassIndex predict(std::span<const double> logits) noexcept;

// Checkpoint layout (little-endian): "QLLM", u8 kind, u32 input, u32 hidden,
// u32 classes, then float32 blocks in declaration order (row-major weight,
// then bias, per layer).
inline constexpr std::string_view kModelMagic = "QLLM";

std::string encode_model(const Model& model);
Model decode_model(std::string_view bytes);
void save_model(const std::filesystem::path& path, const Model& model);
Model load_model(const std::filesystem::path& path);

}  // namespace qll
