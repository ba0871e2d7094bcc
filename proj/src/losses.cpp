#include "qll/losses.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace qll {

namespace {

// a ln(a / m) with 0 ln 0 := 0.
double xlogx_over(double a, double m) noexcept { return a > 0.0 ? a * std::log(a / m) : 0.0; }

// Weighted JS without range checks: w KL(p||M) + (1-w) KL(q||M).
double weighted_js(std::span<const double> p, std::span<const double> q, double w) noexcept {
  double dp = 0.0;
  double dq = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double m = w * p[k] + (1.0 - w) * q[k];
    dp += xlogx_over(p[k], m);
    dq += xlogx_over(q[k], m);
  }
  const double d = w * dp + (1.0 - w) * dq;
  return d > 0.0 ? d : 0.0;
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha <= 0.5)) throw std::invalid_argument("SJS weight alpha must lie in (0, 0.5]");
}

void check_logit(double logit) {
  if (!std::isfinite(logit)) throw std::invalid_argument("binary loss: non-finite logit");
}

// Softmax into `p`; returns nothing, logits assumed finite.
void softmax(std::span<const double> logits, std::span<double> p) noexcept {
  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    p[k] = std::exp(logits[k] - top);
    total += p[k];
  }
  for (double& v : p) v /= total;
}

}  // namespace

void BinaryLossKind::validate() const {
  if (!stochastic()) check_alpha(fixed_alpha);
}

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

BernoulliPair BernoulliPair::from_logit(double logit) noexcept {
  BernoulliPair b{sigmoid(logit), sigmoid(-logit), false};
  if (b.pos < kProbEps || b.neg < kProbEps) {
    b.clamped = true;
    b.pos = std::clamp(b.pos, kProbEps, 1.0 - kProbEps);
    b.neg = 1.0 - b.pos;
  }
  return b;
}

double kl_div(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("kl_div: support size mismatch");
  double d = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) d += xlogx_over(p[k], std::max(q[k], kProbEps));
  return d > 0.0 ? d : 0.0;
}

double sjs_div(std::span<const double> p, std::span<const double> q, double alpha) {
  check_alpha(alpha);
  if (p.size() != q.size()) throw std::invalid_argument("sjs_div: support size mismatch");
  return weighted_js(p, q, alpha);
}

double sjs_scale(double alpha) {
  check_alpha(alpha);
  return -1.0 / ((1.0 - alpha) * std::log1p(-alpha));
}

double scaled_sjs(std::span<const double> p, std::span<const double> q, double alpha) {
  return sjs_scale(alpha) * sjs_div(p, q, alpha);
}

double sample_alpha(RngStream& rng) noexcept {
  // Beta(1/2, 1/2) is the arcsine law: sin^2(pi U / 2).
  const double s = std::sin(0.5 * std::numbers::pi * rng.uniform());
  return std::max(0.5 * s * s, kAlphaFloor);
}

ValueGrad binary_loss_value_grad(const BinaryLossKind& kind, double logit, Target target, double alpha) {
  check_logit(logit);
  const BernoulliPair q = BernoulliPair::from_logit(logit);
  const bool positive = target == Target::kPositive;
  // Probability mass on the target side and on the other side.
  const double q_t = positive ? q.pos : q.neg;
  const double q_o = positive ? q.neg : q.pos;
  // d q_t / d logit.
  const double dq_t = q.clamped ? 0.0 : (positive ? 1.0 : -1.0) * q.pos * q.neg;

  if (kind.variant == BinaryLossKind::Variant::kKl) {
    return {-std::log(q_t), -dq_t / q_t};
  }

  const double a = kind.effective_alpha(alpha);
  const double scale = sjs_scale(a);
  // Target distribution is a point mass: M = (a + (1-a) q_t, (1-a) q_o).
  const std::array<double, 2> t{1.0, 0.0};
  const std::array<double, 2> qq{q_t, q_o};
  const double d = weighted_js(t, qq, a);
  const double m_t = a + (1.0 - a) * q_t;
  const double m_o = (1.0 - a) * q_o;
  // dD/dq_k = (1-a) ln(q_k / M_k); q_o = 1 - q_t.
  const double dd_dqt = (1.0 - a) * (std::log(q_t / m_t) - std::log(q_o / m_o));
  return {scale * d, scale * dd_dqt * dq_t};
}

double binary_loss(const BinaryLossKind& kind, double logit, Target target, double alpha) {
  return binary_loss_value_grad(kind, logit, target, alpha).value;
}

double binary_loss_grad(const BinaryLossKind& kind, double logit, Target target, double alpha) {
  return binary_loss_value_grad(kind, logit, target, alpha).grad;
}

MulticlassLossKind MulticlassLossKind::bootstrap(double beta) {
  MulticlassLossKind k;
  k.variant = Variant::kBootstrap;
  k.beta = beta;
  return k;
}

MulticlassLossKind MulticlassLossKind::gce(double q) {
  MulticlassLossKind k;
  k.variant = Variant::kGce;
  k.q = q;
  return k;
}

MulticlassLossKind MulticlassLossKind::sce(double a, double b) {
  MulticlassLossKind k;
  k.variant = Variant::kSce;
  k.a = a;
  k.b = b;
  return k;
}

MulticlassLossKind MulticlassLossKind::js(double pi1, bool scaled) {
  MulticlassLossKind k;
  k.variant = Variant::kJsPi;
  k.pi1 = pi1;
  k.scaled = scaled;
  return k;
}

void MulticlassLossKind::validate() const {
  switch (variant) {
    case Variant::kCe: break;
    case Variant::kBootstrap:
      if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("bootstrap beta must lie in (0, 1)");
      break;
    case Variant::kGce:
      if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("GCE q must lie in (0, 1]");
      break;
    case Variant::kSce:
      if (!(a > 0.0 && b > 0.0)) throw std::invalid_argument("SCE weights must be positive");
      break;
    case Variant::kJsPi:
      if (!(pi1 > 0.0 && pi1 < 1.0)) throw std::invalid_argument("JS pi1 must lie in (0, 1)");
      break;
  }
}

double baseline_loss(const MulticlassLossKind& kind, std::span<const double> logits, ClassIndex label,
                     std::span<double> grad) {
  const std::size_t c = logits.size();
  if (c == 0 || label >= c) throw std::invalid_argument("baseline_loss: label out of range");
  if (grad.size() != c) throw std::invalid_argument("baseline_loss: gradient buffer has wrong length");
  for (double z : logits) {
    if (!std::isfinite(z)) throw std::invalid_argument("baseline_loss: non-finite logit");
  }

  // Loss as a function of p = softmax(logits); grad first holds dL/dp.
  std::vector<double> p(c);
  softmax(logits, p);
  std::fill(grad.begin(), grad.end(), 0.0);
  double loss = 0.0;
  const double py = p[label];

  const auto ce_into = [&](double weight) {
    loss += -weight * std::log(std::max(py, kProbEps));
    if (py >= kProbEps) grad[label] += -weight / py;
  };

  switch (kind.variant) {
    case MulticlassLossKind::Variant::kCe:
      ce_into(1.0);
      break;
    case MulticlassLossKind::Variant::kBootstrap:
      for (std::size_t k = 0; k < c; ++k) {
        const double t = kind.beta * (k == label ? 1.0 : 0.0) + (1.0 - kind.beta) * p[k];
        const double lp = std::log(std::max(p[k], kProbEps));
        loss -= t * lp;
        grad[k] += -(1.0 - kind.beta) * lp - (p[k] >= kProbEps ? t / p[k] : 0.0);
      }
      break;
    case MulticlassLossKind::Variant::kGce:
      loss = (1.0 - std::pow(py, kind.q)) / kind.q;
      grad[label] = -std::pow(py, kind.q - 1.0);
      break;
    case MulticlassLossKind::Variant::kSce:
      ce_into(kind.a);
      // RCE = -sum_k p_k ln(max(onehot_k, A)) = -ln A * (1 - p_y).
      loss += kind.b * (-kSceLogClamp) * (1.0 - py);
      for (std::size_t k = 0; k < c; ++k) {
        if (k != label) grad[k] += kind.b * (-kSceLogClamp);
      }
      break;
    case MulticlassLossKind::Variant::kJsPi: {
      const double w = kind.pi1;
      const double scale = kind.scaled ? -1.0 / ((1.0 - w) * std::log1p(-w)) : 1.0;
      std::vector<double> onehot(c, 0.0);
      onehot[label] = 1.0;
      loss = scale * weighted_js(onehot, p, w);
      // dD/dp_k = (1-w) ln(p_k / M_k); off-label M_k = (1-w) p_k.
      const double off = -(1.0 - w) * std::log1p(-w);
      for (std::size_t k = 0; k < c; ++k) grad[k] = scale * off;
      const double py_safe = std::max(py, std::numeric_limits<double>::min());
      grad[label] = scale * (1.0 - w) * std::log(py_safe / (w + (1.0 - w) * py));
      break;
    }
  }

  // Back through softmax: dL/dz_j = p_j (g_j - sum_k p_k g_k).
  double dot = 0.0;
  for (std::size_t k = 0; k < c; ++k) dot += p[k] * grad[k];
  for (std::size_t k = 0; k < c; ++k) grad[k] = p[k] * (grad[k] - dot);
  return loss;
}

LossWithGrad baseline_loss(const MulticlassLossKind& kind, std::span<const double> logits, ClassIndex label) {
  LossWithGrad out;
  out.grad.resize(logits.size());
  out.value = baseline_loss(kind, logits, label, out.grad);
  return out;
}

}  // namespace qll
