#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "qll/core.hpp"
#include "qll/losses.hpp"
#include "qll/parallel.hpp"

namespace qll {

/// How the unlabeled set of class j is formed from a minibatch.
/// kComplement: U_j = examples whose label is not j (P_j and U_j partition
/// the batch). kFull: U_j = the whole batch.
enum class UMode { kComplement, kFull };

UMode parse_u_mode(const std::string& name);
const char* u_mode_name(UMode mode) noexcept;

struct ClassPartition {
  std::vector<std::size_t> positive;
  std::vector<std::size_t> unlabeled;
};

/// P = {i : y_i = j}; U per `mode`. Either set may be empty.
ClassPartition class_partition(std::span<const ClassIndex> labels, ClassIndex j, UMode mode = UMode::kComplement);

/// nnPU components for one class.
///
/// `value` is the reported estimate
///   pi1 R_p^+ + max{R_u^- - pi2 R_p^-, 0};
/// `objective` is what training differentiates: `value` when the correction
/// is inactive, otherwise pi2 R_p^- - R_u^- (the positive term is dropped).
struct ClassRiskBreakdown {
  double r_p_plus = 0.0;
  double r_u_minus = 0.0;
  double r_p_minus = 0.0;
  std::size_t n_p = 0;
  std::size_t n_u = 0;
  bool corrected = false;
  double value = 0.0;
  double objective = 0.0;

  friend bool operator==(const ClassRiskBreakdown&, const ClassRiskBreakdown&) = default;
};

struct CpuRiskReport {
  double value = 0.0;            // mean over classes of ClassRiskBreakdown::value
  double objective_value = 0.0;  // mean over classes of ClassRiskBreakdown::objective
  std::vector<ClassRiskBreakdown> per_class;

  friend bool operator==(const CpuRiskReport&, const CpuRiskReport&) = default;
};

/// pi R_p^+ + R_u^- - pi R_p^- from the three mean losses.
double pu_risk_from_means(double pi, double r_p_plus, double r_u_minus, double r_p_minus) noexcept;

/// Non-negative value, branch flag and objective from the three mean losses.
/// Leaves n_p and n_u at zero.
ClassRiskBreakdown combine_class_risk(double r_p_plus, double r_u_minus, double r_p_minus,
                                      const ClassPriors& priors) noexcept;

/// Unbiased PU estimate pi R_p^+ + R_u^- - pi R_p^-. May be negative.
/// Throws std::invalid_argument if both sets are empty or pi is not in (0, 1].
double pu_risk_unbiased(std::span<const double> pos_logits, std::span<const double> unl_logits, double pi,
                        const BinaryLossKind& loss, double alpha);

/// Two-prior non-negative estimate for one class. An empty positive set
/// contributes R_p^{+-} = 0. Throws std::invalid_argument on an empty
/// unlabeled set.
ClassRiskBreakdown nnpu_class_risk(std::span<const double> pos_logits, std::span<const double> unl_logits,
                                   const ClassPriors& priors, const BinaryLossKind& loss, double alpha);

/// Class-wise PU risk over an n x c logit matrix. Requires n >= 2 and labels
/// spanning at least two classes (std::invalid_argument otherwise).
CpuRiskReport cpu_risk(const Matrix& logits, std::span<const ClassIndex> labels, const ClassPriors& priors,
                       const BinaryLossKind& loss, double alpha, UMode mode = UMode::kComplement,
                       Exec exec = Exec::kParallel);

struct CpuRiskWithGrad {
  CpuRiskReport report;
  Matrix grad;  // d objective_value / d logits, n x c
};

CpuRiskWithGrad cpu_risk_with_grad(const Matrix& logits, std::span<const ClassIndex> labels,
                                   const ClassPriors& priors, const BinaryLossKind& loss, double alpha,
                                   UMode mode = UMode::kComplement, Exec exec = Exec::kParallel);

/// Gradient of the training objective (objective_value) with respect to
/// every logit.
Matrix cpu_risk_grad(const Matrix& logits, std::span<const ClassIndex> labels, const ClassPriors& priors,
                     const BinaryLossKind& loss, double alpha, UMode mode = UMode::kComplement,
                     Exec exec = Exec::kParallel);

}  // namespace qll
