#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qll/core.hpp"
#include "qll/rng.hpp"

namespace qll {

/// Probabilities are clamped to [kProbEps, 1 - kProbEps] before logarithms.
inline constexpr double kProbEps = 1e-7;
/// Lower bound on a sampled SJS weight; keeps the 1/alpha-like scale finite.
inline constexpr double kAlphaFloor = 1e-3;

enum class AlphaSource { kStochastic, kFixed };

/// Pointwise binary loss l(g(x), +-1) used inside the PU risks.
struct BinaryLossKind {
  enum class Variant { kScaledSjs, kKl, kJsFixed };

  Variant variant = Variant::kScaledSjs;
  AlphaSource alpha_source = AlphaSource::kStochastic;
  double fixed_alpha = 0.5;

  static BinaryLossKind scaled_sjs() { return {}; }
  static BinaryLossKind scaled_sjs_fixed(double alpha) { return {Variant::kScaledSjs, AlphaSource::kFixed, alpha}; }
  static BinaryLossKind kl() { return {Variant::kKl, AlphaSource::kFixed, 0.5}; }
  static BinaryLossKind js_fixed(double alpha = 0.5) { return {Variant::kJsFixed, AlphaSource::kFixed, alpha}; }

  /// True when a per-iteration alpha must be sampled.
  bool stochastic() const noexcept { return variant == Variant::kScaledSjs && alpha_source == AlphaSource::kStochastic; }
  /// The alpha this kind actually uses, given the iteration's sampled alpha.
  double effective_alpha(double sampled_alpha) const noexcept { return stochastic() ? sampled_alpha : fixed_alpha; }
  /// Throws std::invalid_argument if a fixed alpha lies outside (0, 0.5].
  void validate() const;

  friend bool operator==(const BinaryLossKind&, const BinaryLossKind&) = default;
};

enum class Target : std::int8_t { kPositive = 1, kNegative = -1 };

/// Bernoulli distribution (sigmoid(logit), 1 - sigmoid(logit)), each entry
/// clamped to [kProbEps, 1 - kProbEps].
struct BernoulliPair {
  double pos = 0.5;
  double neg = 0.5;
  bool clamped = false;

  static BernoulliPair from_logit(double logit) noexcept;
};

double sigmoid(double x) noexcept;

/// KL(p || q) in nats; q entries are clamped below at kProbEps and 0 ln 0 := 0.
/// Throws std::invalid_argument on a support-size mismatch.
double kl_div(std::span<const double> p, std::span<const double> q);

/// alpha KL(p || M) + (1 - alpha) KL(q || M), M = alpha p + (1 - alpha) q.
/// Throws std::invalid_argument unless alpha is in (0, 0.5].
double sjs_div(std::span<const double> p, std::span<const double> q, double alpha);

/// -1 / [(1 - alpha) ln(1 - alpha)].
double sjs_scale(double alpha);

/// sjs_scale(alpha) * sjs_div(p, q, alpha).
double scaled_sjs(std::span<const double> p, std::span<const double> q, double alpha);

/// One alpha per training iteration: u ~ Beta(0.5, 0.5), alpha = max(u/2,
/// kAlphaFloor). Consumes one draw.
double sample_alpha(RngStream& rng) noexcept;

/// Loss of a single per-class logit against a +-1 target. `alpha` is the
/// iteration's sampled alpha (ignored by kinds that do not use it). Throws
/// std::invalid_argument on a non-finite logit.
double binary_loss(const BinaryLossKind& kind, double logit, Target target, double alpha);

/// d binary_loss / d logit. Zero where the probability clamp is active.
double binary_loss_grad(const BinaryLossKind& kind, double logit, Target target, double alpha);

struct ValueGrad {
  double value = 0.0;
  double grad = 0.0;
};

/// Value and derivative in one evaluation.
ValueGrad binary_loss_value_grad(const BinaryLossKind& kind, double logit, Target target, double alpha);

/// Multi-class baseline losses over softmax probabilities.
struct MulticlassLossKind {
  enum class Variant { kCe, kBootstrap, kGce, kSce, kJsPi };

  Variant variant = Variant::kCe;
  double beta = 0.4;     // Bootstrap: weight on the given label
  double q = 0.7;        // GCE exponent
  double a = 0.1;        // SCE: CE weight
  double b = 1.0;        // SCE: reverse-CE weight
  double pi1 = 0.1;      // JS: weight on the label distribution
  bool scaled = true;    // JS: apply -1/[(1-pi1) ln(1-pi1)]

  static MulticlassLossKind ce() { return {}; }
  static MulticlassLossKind bootstrap(double beta);
  static MulticlassLossKind gce(double q);
  static MulticlassLossKind sce(double a, double b);
  static MulticlassLossKind js(double pi1, bool scaled = true);

  void validate() const;

  friend bool operator==(const MulticlassLossKind&, const MulticlassLossKind&) = default;
};

/// Reverse-CE clamp for the zero entries of the one-hot label, ln A = -4.
inline constexpr double kSceLogClamp = -4.0;

/// Writes d loss / d logits into `grad` (length c) and returns the loss.
/// Throws std::invalid_argument on non-finite logits or a bad label.
double baseline_loss(const MulticlassLossKind& kind, std::span<const double> logits, ClassIndex label,
                     std::span<double> grad);

struct LossWithGrad {
  double value = 0.0;
  std::vector<double> grad;
};

LossWithGrad baseline_loss(const MulticlassLossKind& kind, std::span<const double> logits, ClassIndex label);

}  // namespace qll
