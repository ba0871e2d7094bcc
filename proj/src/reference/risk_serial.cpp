#include <vector>

#include "qll/reference.hpp"

namespace qll::reference {

CpuRiskWithGrad cpu_risk_with_grad(const Matrix& logits, std::span<const ClassIndex> labels,
                                   const ClassPriors& priors, const BinaryLossKind& loss, double alpha,
                                   UMode mode) {
  if (logits.rows != labels.size() || logits.cols < 2 || labels.size() < 2) {
    throw std::invalid_argument("reference::cpu_risk_with_grad: bad batch shape");
  }
  const std::size_t c = logits.cols;
  CpuRiskWithGrad out;
  out.grad = Matrix(logits.rows, c);
  for (std::size_t j = 0; j < c; ++j) {
    const ClassPartition part = class_partition(labels, static_cast<ClassIndex>(j), mode);
    std::vector<double> pos;
    std::vector<double> unl;
    for (std::size_t i : part.positive) pos.push_back(logits(i, j));
    for (std::size_t i : part.unlabeled) unl.push_back(logits(i, j));
    const ClassRiskBreakdown b = nnpu_class_risk(pos, unl, priors, loss, alpha);
    out.report.per_class.push_back(b);
    out.report.value += b.value;
    out.report.objective_value += b.objective;

    const double sign = b.corrected ? -1.0 : 1.0;
    for (std::size_t i : part.positive) {
      const double z = logits(i, j);
      double g = 0.0;
      if (!b.corrected) g += priors.pi1() * binary_loss_grad(loss, z, Target::kPositive, alpha) / static_cast<double>(b.n_p);
      g -= sign * priors.pi2() * binary_loss_grad(loss, z, Target::kNegative, alpha) / static_cast<double>(b.n_p);
      out.grad(i, j) += g / static_cast<double>(c);
    }
    for (std::size_t i : part.unlabeled) {
      const double g = sign * binary_loss_grad(loss, logits(i, j), Target::kNegative, alpha) / static_cast<double>(b.n_u);
      out.grad(i, j) += g / static_cast<double>(c);
    }
  }
  out.report.value /= static_cast<double>(c);
  out.report.objective_value /= static_cast<double>(c);
  return out;
}

}  // namespace qll::reference
