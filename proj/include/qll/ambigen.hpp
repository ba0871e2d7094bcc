#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "qll/core.hpp"
#include "qll/parallel.hpp"
#include "qll/rng.hpp"

namespace qll {

/// How ambiguous instances are synthesized.
///
/// For Mixup, `r` is the number of multinomial trials behind the weights; for
/// PatchMix it is the number of contiguous feature blocks.
struct MixSpec {
  MixKind kind = MixKind::kMixup;
  std::uint32_t m = 2;
  std::uint32_t r = 4;
  bool reject_degenerate = false;

  /// Throws std::invalid_argument for m < 2, r < 1, an unknown kind, or a
  /// PatchMix block count exceeding `feature_dim`.
  void validate(std::uint32_t feature_dim) const;
};

/// Mixing weights lambda with lambda_i = counts_i / r.
struct MixWeights {
  std::vector<std::uint32_t> counts;
  std::uint32_t trials = 0;

  std::size_t size() const noexcept { return counts.size(); }
  double lambda(std::size_t i) const noexcept { return static_cast<double>(counts[i]) / trials; }
  std::vector<double> lambdas() const;
};

/// Source index for each of the r contiguous feature blocks.
struct BlockAssignment {
  std::vector<std::uint32_t> assign;
  std::uint32_t sources = 0;

  /// Area fractions: lambda_i = (#blocks from source i) / r.
  MixWeights induced_weights() const;
};

/// Parameters of the synthetic Gaussian-cluster base data.
struct BaseSpec {
  std::uint32_t c = 4;
  std::uint32_t d = 8;
  std::uint32_t n_per_class = 500;
  double separation = 6.0;
  double noise_sigma = 1.0;

  void validate() const;
};

/// r-trial multinomial draw over m equiprobable categories. Consumes r
/// uniform-int draws.
MixWeights sample_mix_weights(std::uint32_t m, std::uint32_t r, RngStream& rng);

/// sum_i lambda_i x_i. Throws std::invalid_argument on shape mismatch.
std::vector<double> mixup(std::span<const std::span<const double>> instances, const MixWeights& w);

/// Each block independently takes a uniform source in [0, m).
BlockAssignment sample_block_assignment(std::uint32_t m, std::uint32_t r, RngStream& rng);

/// Half-open coordinate ranges of the r blocks over d coordinates. Sizes are
/// floor(d/r) or ceil(d/r); the larger blocks come first.
std::vector<std::pair<std::size_t, std::size_t>> block_ranges(std::size_t d, std::size_t r);

/// Copies block b from source a[b]. Throws std::invalid_argument on shape
/// mismatch or r > d.
std::vector<double> patchmix(std::span<const std::span<const double>> instances, const BlockAssignment& a);

/// s_k = sum over sources with label k of lambda_i.
SoftLabel mixed_soft_label(std::span<const ClassIndex> labels, const MixWeights& w, std::uint32_t class_count);

/// Per-example provenance, kept so soft labels can be reconstructed.
struct MixRecord {
  std::vector<std::uint32_t> sources;
  MixWeights weights;
  std::vector<std::uint32_t> blocks;  // PatchMix only
  std::uint32_t attempts = 1;
};

struct GeneratedDataset {
  AmbiguousDataset data;
  std::vector<MixRecord> records;
};

/// Builds `n_out` ambiguous examples from a clean base set. Example i draws
/// exclusively from rng.substream(i), so the result does not depend on the
/// execution policy or thread count.
///
/// Throws DegenerateSpecError if a group cannot be drawn (fewer than m base
/// examples) or, with reject_degenerate, if 100 retries all yield a one-hot
/// soft label.
GeneratedDataset generate_with_records(const AmbiguousDataset& base, const MixSpec& spec, std::size_t n_out,
                                       const RngStream& rng, Exec exec = Exec::kParallel);

AmbiguousDataset generate_ambiguous_dataset(const AmbiguousDataset& base, const MixSpec& spec, std::size_t n_out,
                                            const RngStream& rng, Exec exec = Exec::kParallel);

/// c isotropic Gaussian clusters. Class means depend only on rng.seed() (they
/// come from the class-means stream), so calling this with a different
/// stream id yields a paired sample from the same distribution, e.g. a clean
/// test set.
AmbiguousDataset synth_base(const BaseSpec& spec, const RngStream& rng, Exec exec = Exec::kParallel);

/// Class means used by synth_base; row k is the mean of class k.
Matrix class_means(const BaseSpec& spec, std::uint64_t seed);

struct EntropySummary {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

/// Entropy statistics of the diagnostic soft labels. Throws
/// std::invalid_argument when the dataset carries none.
EntropySummary summarize_entropy(const AmbiguousDataset& ds);

}  // namespace qll
