#pragma once

// Straightforward serial implementations of the batched kernels. They are
// kept for equivalence tests and as the baseline in the kernel benchmark;
// production code calls the OpenMP versions.

#include <span>
#include <vector>

#include "qll/core.hpp"
#include "qll/losses.hpp"
#include "qll/model.hpp"
#include "qll/risk.hpp"

namespace qll::reference {

/// Class-by-class loop: partition, gather logits, nnpu_class_risk, and a
/// direct per-class gradient accumulation.
CpuRiskWithGrad cpu_risk_with_grad(const Matrix& logits, std::span<const ClassIndex> labels,
                                   const ClassPriors& priors, const BinaryLossKind& loss, double alpha,
                                   UMode mode = UMode::kComplement);

/// Per-example forward into an n x c logit matrix.
Matrix forward_batch(const Model& model, const Matrix& inputs);

/// Per-example backward, summed over the batch.
Parameters backward_batch(const Model& model, const Matrix& inputs, const Matrix& dlogits);

}  // namespace qll::reference
