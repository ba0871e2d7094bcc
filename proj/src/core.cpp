#include "qll/core.hpp"

#include <cmath>
#include <numeric>

namespace qll {

SoftLabel::SoftLabel(std::vector<double> raw_weights) : weights_(std::move(raw_weights)) {
  if (weights_.empty()) throw std::invalid_argument("SoftLabel: empty weight vector");
  double total = 0.0;
  for (double w : weights_) {
    if (!std::isfinite(w)) throw std::invalid_argument("SoftLabel: non-finite weight");
    if (w < 0.0) throw std::invalid_argument("SoftLabel: negative weight");
    total += w;
  }
  if (!(total > 0.0)) throw std::invalid_argument("SoftLabel: weights sum to zero");
  for (double& w : weights_) w /= total;
}

SoftLabel SoftLabel::one_hot(std::size_t class_count, ClassIndex k) {
  if (k >= class_count) throw std::invalid_argument("SoftLabel::one_hot: class index out of range");
  std::vector<double> w(class_count, 0.0);
  w[k] = 1.0;
  return SoftLabel(std::move(w));
}

bool SoftLabel::is_one_hot() const noexcept {
  std::size_t nonzero = 0;
  for (double w : weights_) nonzero += (w > 0.0);
  return nonzero == 1;
}

const char* mix_kind_name(MixKind kind) noexcept {
  switch (kind) {
    case MixKind::kMixup: return "mixup";
    case MixKind::kPatchMix: return "patchmix";
    case MixKind::kNone: break;
  }
  return "none";
}

MixKind parse_mix_kind(const std::string& name) {
  if (name == "mixup") return MixKind::kMixup;
  if (name == "patchmix") return MixKind::kPatchMix;
  if (name == "none") return MixKind::kNone;
  throw std::invalid_argument("unknown mix kind '" + name + "' (expected mixup|patchmix|none)");
}

std::optional<std::string> GenMeta::find(const std::string& key) const {
  for (const auto& [k, v] : extra) {
    if (k == key) return v;
  }
  return std::nullopt;
}

void AmbiguousDataset::validate() const {
  if (class_count < 2) throw std::invalid_argument("dataset: at least two classes required");
  if (feature_dim == 0) throw std::invalid_argument("dataset: feature dimension must be positive");
  for (const auto& ex : examples) {
    if (ex.features.size() != feature_dim) throw std::invalid_argument("dataset: feature length mismatch");
    if (ex.label >= class_count) throw std::invalid_argument("dataset: label out of range");
    for (double v : ex.features) {
      if (!std::isfinite(v)) throw std::invalid_argument("dataset: non-finite feature");
    }
  }
  if (diagnostics) {
    if (diagnostics->size() != examples.size()) {
      throw std::invalid_argument("dataset: diagnostics length differs from example count");
    }
    for (const auto& s : *diagnostics) {
      if (s.class_count() != class_count) throw std::invalid_argument("dataset: soft label length mismatch");
    }
  }
}

ClassPriors::ClassPriors(double pi1, double pi2) : pi1_(pi1), pi2_(pi2) {
  if (!(pi1 > 0.0 && pi1 <= 1.0)) throw std::invalid_argument("ClassPriors: pi1 must lie in (0, 1]");
  if (!(pi2 > 0.0 && pi2 <= 1.0)) throw std::invalid_argument("ClassPriors: pi2 must lie in (0, 1]");
}

ClassPriors ClassPriors::defaults(std::uint32_t m, std::uint32_t c) {
  if (c == 0) throw std::invalid_argument("ClassPriors::defaults: zero class count");
  return ClassPriors(0.1, static_cast<double>(m) / static_cast<double>(c));
}

double entropy(const SoftLabel& s) noexcept {
  double h = 0.0;
  for (double w : s.weights()) {
    if (w > 0.0) h -= w * std::log(w);
  }
  return h < 0.0 ? 0.0 : h;
}

ClassIndex quantize_label(const SoftLabel& s, RngStream& rng) noexcept {
  const double u = rng.uniform();
  const auto w = s.weights();
  double cumulative = 0.0;
  std::size_t last_nonzero = 0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (w[k] <= 0.0) continue;
    last_nonzero = k;
    cumulative += w[k];
    if (u < cumulative) return static_cast<ClassIndex>(k);
  }
  // Rounding can leave the cumulative sum a hair below 1.
  return static_cast<ClassIndex>(last_nonzero);
}

double zero_one_test_risk(std::span<const ClassIndex> predictions, std::span<const ClassIndex> labels) {
  if (predictions.empty()) throw std::invalid_argument("zero_one_test_risk: empty evaluation set");
  if (predictions.size() != labels.size()) {
    throw std::invalid_argument("zero_one_test_risk: prediction and label counts differ");
  }
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) wrong += (predictions[i] != labels[i]);
  return static_cast<double>(wrong) / static_cast<double>(predictions.size());
}

}  // namespace qll
