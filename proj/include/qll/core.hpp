#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qll/rng.hpp"

namespace qll {

/// Class index, stored 0-based. Documentation that speaks of classes 1..c
/// maps class k to index k-1.
using ClassIndex = std::uint32_t;

/// A generator input (mix spec, base spec) that cannot produce valid output.
class DegenerateSpecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A file that does not conform to one of the binary or text formats.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

/// Ground-truth per-class probability vector of an ambiguous instance.
///
/// Construction normalizes raw nonnegative weights to sum to one and rejects
/// negative, non-finite, or all-zero input.
class SoftLabel {
 public:
  explicit SoftLabel(std::vector<double> raw_weights);
  static SoftLabel one_hot(std::size_t class_count, ClassIndex k);

  std::span<const double> weights() const noexcept { return weights_; }
  std::size_t class_count() const noexcept { return weights_.size(); }
  double operator[](std::size_t k) const { return weights_[k]; }
  /// True when all mass sits on a single class.
  bool is_one_hot() const noexcept;

  friend bool operator==(const SoftLabel&, const SoftLabel&) = default;

 private:
  std::vector<double> weights_;
};

struct LabeledExample {
  std::vector<double> features;
  ClassIndex label = 0;

  friend bool operator==(const LabeledExample&, const LabeledExample&) = default;
};

enum class MixKind : std::uint8_t { kNone = 0, kMixup = 1, kPatchMix = 2 };

const char* mix_kind_name(MixKind kind) noexcept;
MixKind parse_mix_kind(const std::string& name);

/// Provenance of a dataset. `extra` carries free-form key/value pairs that are
/// written to the human-readable sidecar (e.g. the class-mean layout).
struct GenMeta {
  MixKind kind = MixKind::kNone;
  std::uint32_t m = 0;
  std::uint32_t r = 0;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> extra;

  /// Value for `key` in `extra`, if present.
  std::optional<std::string> find(const std::string& key) const;

  friend bool operator==(const GenMeta&, const GenMeta&) = default;
};

/// Feature vectors with quantized hard labels plus optional diagnostic soft
/// labels. Training code never reads `diagnostics`.
struct AmbiguousDataset {
  std::uint32_t class_count = 0;
  std::uint32_t feature_dim = 0;
  std::vector<LabeledExample> examples;
  std::optional<std::vector<SoftLabel>> diagnostics;
  GenMeta gen_meta;

  std::size_t size() const noexcept { return examples.size(); }
  /// Throws std::invalid_argument if any invariant is violated.
  void validate() const;

  friend bool operator==(const AmbiguousDataset&, const AmbiguousDataset&) = default;
};

/// The two practical class priors: pi1 weights the positive risk, pi2 the
/// negative risk on positive data.
class ClassPriors {
 public:
  ClassPriors(double pi1, double pi2);
  /// pi1 = 0.1, pi2 = m / c.
  static ClassPriors defaults(std::uint32_t m, std::uint32_t c);

  double pi1() const noexcept { return pi1_; }
  double pi2() const noexcept { return pi2_; }

  friend bool operator==(const ClassPriors&, const ClassPriors&) = default;

 private:
  double pi1_;
  double pi2_;
};

/// Shannon entropy in nats, with 0 ln 0 := 0.
double entropy(const SoftLabel& s) noexcept;

/// Draws a hard label with probability s_k. Consumes exactly one draw.
ClassIndex quantize_label(const SoftLabel& s, RngStream& rng) noexcept;

/// Fraction of mismatched predictions. Throws std::invalid_argument on empty
/// or unequal-length input.
double zero_one_test_risk(std::span<const ClassIndex> predictions, std::span<const ClassIndex> labels);

}  // namespace qll
