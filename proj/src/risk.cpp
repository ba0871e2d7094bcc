#include "qll/risk.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace qll {

namespace {

double mean_loss(std::span<const double> logits, Target target, const BinaryLossKind& loss, double alpha) {
  if (logits.empty()) return 0.0;
  double total = 0.0;
  for (double z : logits) total += binary_loss(loss, z, target, alpha);
  return total / static_cast<double>(logits.size());
}

// Fills value/objective/corrected from the three means.
void finish_breakdown(ClassRiskBreakdown& b, const ClassPriors& priors) {
  const double negative_part = b.r_u_minus - priors.pi2() * b.r_p_minus;
  b.corrected = negative_part < 0.0;
  const double positive_part = priors.pi1() * b.r_p_plus;
  b.value = positive_part + (b.corrected ? 0.0 : negative_part);
  b.objective = b.corrected ? -negative_part : positive_part + negative_part;
}

void check_batch(const Matrix& logits, std::span<const ClassIndex> labels) {
  if (logits.rows != labels.size()) throw std::invalid_argument("cpu_risk: logit rows differ from label count");
  if (labels.size() < 2) throw std::invalid_argument("cpu_risk: batch needs at least two examples");
  if (logits.cols < 2) throw std::invalid_argument("cpu_risk: need at least two classes");
  bool spans_two = false;
  for (ClassIndex y : labels) {
    if (y >= logits.cols) throw std::invalid_argument("cpu_risk: label out of range");
    spans_two = spans_two || y != labels.front();
  }
  for (double z : logits.data) {
    if (!std::isfinite(z)) throw std::invalid_argument("cpu_risk: non-finite logit");
  }
  if (!spans_two) throw std::invalid_argument("cpu_risk: batch labels must span at least two classes");
}

}  // namespace

UMode parse_u_mode(const std::string& name) {
  if (name == "complement") return UMode::kComplement;
  if (name == "full") return UMode::kFull;
  throw std::invalid_argument("unknown u-mode '" + name + "' (expected complement|full)");
}

const char* u_mode_name(UMode mode) noexcept { return mode == UMode::kFull ? "full" : "complement"; }

ClassPartition class_partition(std::span<const ClassIndex> labels, ClassIndex j, UMode mode) {
  ClassPartition part;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == j) {
      part.positive.push_back(i);
      if (mode == UMode::kFull) part.unlabeled.push_back(i);
    } else {
      part.unlabeled.push_back(i);
    }
  }
  return part;
}

double pu_risk_unbiased(std::span<const double> pos_logits, std::span<const double> unl_logits, double pi,
                        const BinaryLossKind& loss, double alpha) {
  if (pos_logits.empty() && unl_logits.empty()) throw std::invalid_argument("pu_risk_unbiased: both sets empty");
  if (!(pi > 0.0 && pi <= 1.0)) throw std::invalid_argument("pu_risk_unbiased: prior must lie in (0, 1]");
  return pu_risk_from_means(pi, mean_loss(pos_logits, Target::kPositive, loss, alpha),
                            mean_loss(unl_logits, Target::kNegative, loss, alpha),
                            mean_loss(pos_logits, Target::kNegative, loss, alpha));
}

double pu_risk_from_means(double pi, double r_p_plus, double r_u_minus, double r_p_minus) noexcept {
  return pi * r_p_plus + r_u_minus - pi * r_p_minus;
}

ClassRiskBreakdown combine_class_risk(double r_p_plus, double r_u_minus, double r_p_minus,
                                      const ClassPriors& priors) noexcept {
  ClassRiskBreakdown b;
  b.r_p_plus = r_p_plus;
  b.r_u_minus = r_u_minus;
  b.r_p_minus = r_p_minus;
  finish_breakdown(b, priors);
  return b;
}

ClassRiskBreakdown nnpu_class_risk(std::span<const double> pos_logits, std::span<const double> unl_logits,
                                   const ClassPriors& priors, const BinaryLossKind& loss, double alpha) {
  if (unl_logits.empty()) throw std::invalid_argument("nnpu_class_risk: empty unlabeled set");
  ClassRiskBreakdown b;
  b.n_p = pos_logits.size();
  b.n_u = unl_logits.size();
  b.r_p_plus = mean_loss(pos_logits, Target::kPositive, loss, alpha);
  b.r_p_minus = mean_loss(pos_logits, Target::kNegative, loss, alpha);
  b.r_u_minus = mean_loss(unl_logits, Target::kNegative, loss, alpha);
  finish_breakdown(b, priors);
  return b;
}

CpuRiskWithGrad cpu_risk_with_grad(const Matrix& logits, std::span<const ClassIndex> labels,
                                   const ClassPriors& priors, const BinaryLossKind& loss, double alpha,
                                   UMode mode, Exec exec) {
  check_batch(logits, labels);
  loss.validate();
  // Surface a bad alpha here rather than inside the parallel region.
  if (loss.variant != BinaryLossKind::Variant::kKl) (void)sjs_scale(loss.effective_alpha(alpha));
  const std::size_t n = logits.rows;
  const std::size_t c = logits.cols;
  const bool par = exec == Exec::kParallel;
  const auto ni = static_cast<std::int64_t>(n);
  const auto nc = static_cast<std::int64_t>(c);

  // Stage 1, elementwise: l(z_ij, -1) for every entry, l(z_iy, +1) at the label.
  Matrix neg_loss(n, c);
  Matrix neg_grad(n, c);
  std::vector<double> pos_loss(n);
  std::vector<double> pos_grad(n);
#pragma omp parallel for schedule(static) if (par)
  for (std::int64_t i = 0; i < ni; ++i) {
    const auto row = static_cast<std::size_t>(i);
    for (std::size_t j = 0; j < c; ++j) {
      const ValueGrad vg = binary_loss_value_grad(loss, logits(row, j), Target::kNegative, alpha);
      neg_loss(row, j) = vg.value;
      neg_grad(row, j) = vg.grad;
    }
    const ValueGrad vg = binary_loss_value_grad(loss, logits(row, labels[row]), Target::kPositive, alpha);
    pos_loss[row] = vg.value;
    pos_grad[row] = vg.grad;
  }

  // Stage 2, one independent reduction per class (fixed summation order).
  CpuRiskWithGrad out;
  out.report.per_class.resize(c);
#pragma omp parallel for schedule(static) if (par)
  for (std::int64_t jj = 0; jj < nc; ++jj) {
    const auto j = static_cast<std::size_t>(jj);
    double sum_pp = 0.0;
    double sum_pm = 0.0;
    double sum_um = 0.0;
    std::size_t n_p = 0;
    std::size_t n_u = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool positive = labels[i] == j;
      if (positive) {
        sum_pp += pos_loss[i];
        sum_pm += neg_loss(i, j);
        ++n_p;
      }
      if (!positive || mode == UMode::kFull) {
        sum_um += neg_loss(i, j);
        ++n_u;
      }
    }
    ClassRiskBreakdown& b = out.report.per_class[j];
    b.n_p = n_p;
    b.n_u = n_u;
    b.r_p_plus = n_p ? sum_pp / static_cast<double>(n_p) : 0.0;
    b.r_p_minus = n_p ? sum_pm / static_cast<double>(n_p) : 0.0;
    b.r_u_minus = sum_um / static_cast<double>(n_u);
    finish_breakdown(b, priors);
  }

  double value = 0.0;
  double objective = 0.0;
  for (const auto& b : out.report.per_class) {
    value += b.value;
    objective += b.objective;
  }
  out.report.value = value / static_cast<double>(c);
  out.report.objective_value = objective / static_cast<double>(c);

  // Stage 3, elementwise chain rule through each class's branch objective.
  out.grad = Matrix(n, c);
  const double inv_c = 1.0 / static_cast<double>(c);
#pragma omp parallel for schedule(static) if (par)
  for (std::int64_t i = 0; i < ni; ++i) {
    const auto row = static_cast<std::size_t>(i);
    for (std::size_t j = 0; j < c; ++j) {
      const ClassRiskBreakdown& b = out.report.per_class[j];
      // Not corrected: +pi1 R_p^+ + R_u^- - pi2 R_p^-. Corrected: -R_u^- + pi2 R_p^-.
      const double sign = b.corrected ? -1.0 : 1.0;
      const bool positive = labels[row] == j;
      double g = 0.0;
      if (positive) {
        const double inv_np = 1.0 / static_cast<double>(b.n_p);
        if (!b.corrected) g += priors.pi1() * inv_np * pos_grad[row];
        g -= sign * priors.pi2() * inv_np * neg_grad(row, j);
      }
      if (!positive || mode == UMode::kFull) {
        g += sign * neg_grad(row, j) / static_cast<double>(b.n_u);
      }
      out.grad(row, j) = g * inv_c;
    }
  }
  return out;
}

CpuRiskReport cpu_risk(const Matrix& logits, std::span<const ClassIndex> labels, const ClassPriors& priors,
                       const BinaryLossKind& loss, double alpha, UMode mode, Exec exec) {
  return cpu_risk_with_grad(logits, labels, priors, loss, alpha, mode, exec).report;
}

Matrix cpu_risk_grad(const Matrix& logits, std::span<const ClassIndex> labels, const ClassPriors& priors,
                     const BinaryLossKind& loss, double alpha, UMode mode, Exec exec) {
  return cpu_risk_with_grad(logits, labels, priors, loss, alpha, mode, exec).grad;
}

}  // namespace qll
