#include "qll/ambigen.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

namespace qll {

namespace {

constexpr std::uint32_t kMaxRetries = 100;

std::string format_real(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

void check_instances(std::span<const std::span<const double>> instances, std::size_t expected_m) {
  if (instances.size() != expected_m) {
    throw std::invalid_argument("mix: number of instances differs from number of weights");
  }
  if (instances.empty()) throw std::invalid_argument("mix: no instances");
  const std::size_t d = instances.front().size();
  for (const auto& x : instances) {
    if (x.size() != d) throw std::invalid_argument("mix: feature dimension mismatch");
  }
}

// m distinct indices from [0, n), rejection on duplicates (m is small).
std::vector<std::uint32_t> sample_group(std::size_t n, std::uint32_t m, RngStream& rng) {
  std::vector<std::uint32_t> group;
  group.reserve(m);
  while (group.size() < m) {
    const auto idx = static_cast<std::uint32_t>(rng.uniform_int(n));
    if (std::find(group.begin(), group.end(), idx) == group.end()) group.push_back(idx);
  }
  return group;
}

}  // namespace

void MixSpec::validate(std::uint32_t feature_dim) const {
  if (kind != MixKind::kMixup && kind != MixKind::kPatchMix) {
    throw std::invalid_argument("MixSpec: kind must be mixup or patchmix");
  }
  if (m < 2) throw std::invalid_argument("MixSpec: m must be at least 2");
  if (r < 1) throw std::invalid_argument("MixSpec: r must be at least 1");
  if (kind == MixKind::kPatchMix && r > feature_dim) {
    throw std::invalid_argument("MixSpec: PatchMix block count r=" + std::to_string(r) +
                                " exceeds feature dimension d=" + std::to_string(feature_dim));
  }
}

std::vector<double> MixWeights::lambdas() const {
  std::vector<double> out(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) out[i] = lambda(i);
  return out;
}

MixWeights BlockAssignment::induced_weights() const {
  MixWeights w;
  w.counts.assign(sources, 0);
  w.trials = static_cast<std::uint32_t>(assign.size());
  for (auto src : assign) ++w.counts.at(src);
  return w;
}

void BaseSpec::validate() const {
  if (c < 2) throw std::invalid_argument("BaseSpec: at least two classes required");
  if (d == 0) throw std::invalid_argument("BaseSpec: feature dimension must be positive");
  if (n_per_class == 0) throw std::invalid_argument("BaseSpec: n_per_class must be positive");
  if (!(separation > 0.0) || !std::isfinite(separation)) throw std::invalid_argument("BaseSpec: separation must be positive");
  if (!(noise_sigma > 0.0) || !std::isfinite(noise_sigma)) throw std::invalid_argument("BaseSpec: noise_sigma must be positive");
}

MixWeights sample_mix_weights(std::uint32_t m, std::uint32_t r, RngStream& rng) {
  if (m < 2) throw std::invalid_argument("sample_mix_weights: m must be at least 2");
  if (r < 1) throw std::invalid_argument("sample_mix_weights: r must be at least 1");
  MixWeights w;
  w.counts.assign(m, 0);
  w.trials = r;
  for (std::uint32_t t = 0; t < r; ++t) ++w.counts[rng.uniform_int(m)];
  return w;
}

std::vector<double> mixup(std::span<const std::span<const double>> instances, const MixWeights& w) {
  check_instances(instances, w.size());
  const std::size_t d = instances.front().size();
  std::vector<double> out(d, 0.0);
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (w.counts[i] == 0) continue;
    // A full-weight source is copied so that lambda = e_i reproduces x_i bit-exactly.
    if (w.counts[i] == w.trials) return {instances[i].begin(), instances[i].end()};
    const double lam = w.lambda(i);
    for (std::size_t k = 0; k < d; ++k) out[k] += lam * instances[i][k];
  }
  return out;
}

BlockAssignment sample_block_assignment(std::uint32_t m, std::uint32_t r, RngStream& rng) {
  if (m < 2) throw std::invalid_argument("sample_block_assignment: m must be at least 2");
  if (r < 1) throw std::invalid_argument("sample_block_assignment: r must be at least 1");
  BlockAssignment a;
  a.sources = m;
  a.assign.resize(r);
  for (auto& src : a.assign) src = static_cast<std::uint32_t>(rng.uniform_int(m));
  return a;
}

std::vector<std::pair<std::size_t, std::size_t>> block_ranges(std::size_t d, std::size_t r) {
  if (r == 0 || r > d) throw std::invalid_argument("block_ranges: need 1 <= r <= d");
  const std::size_t base = d / r;
  const std::size_t larger = d % r;
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  ranges.reserve(r);
  std::size_t begin = 0;
  for (std::size_t b = 0; b < r; ++b) {
    const std::size_t len = base + (b < larger ? 1 : 0);
    ranges.emplace_back(begin, begin + len);
    begin += len;
  }
  return ranges;
}

std::vector<double> patchmix(std::span<const std::span<const double>> instances, const BlockAssignment& a) {
  check_instances(instances, a.sources);
  const std::size_t d = instances.front().size();
  const auto ranges = block_ranges(d, a.assign.size());
  std::vector<double> out(d);
  for (std::size_t b = 0; b < ranges.size(); ++b) {
    const auto& src = instances[a.assign[b]];
    std::copy(src.begin() + static_cast<std::ptrdiff_t>(ranges[b].first),
              src.begin() + static_cast<std::ptrdiff_t>(ranges[b].second),
              out.begin() + static_cast<std::ptrdiff_t>(ranges[b].first));
  }
  return out;
}

SoftLabel mixed_soft_label(std::span<const ClassIndex> labels, const MixWeights& w, std::uint32_t class_count) {
  if (labels.size() != w.size()) throw std::invalid_argument("mixed_soft_label: label/weight count mismatch");
  // Accumulate integer counts so that shared classes merge exactly.
  std::vector<std::uint32_t> counts(class_count, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= class_count) throw std::invalid_argument("mixed_soft_label: label out of range");
    counts[labels[i]] += w.counts[i];
  }
  std::vector<double> s(class_count);
  for (std::size_t k = 0; k < class_count; ++k) s[k] = static_cast<double>(counts[k]) / w.trials;
  return SoftLabel(std::move(s));
}

GeneratedDataset generate_with_records(const AmbiguousDataset& base, const MixSpec& spec, std::size_t n_out,
                                       const RngStream& rng, Exec exec) {
  base.validate();
  spec.validate(base.feature_dim);
  if (n_out == 0) throw std::invalid_argument("generate: n_out must be positive");
  if (base.size() < spec.m) {
    throw DegenerateSpecError("generate: base set has " + std::to_string(base.size()) + " examples, fewer than m=" +
                              std::to_string(spec.m));
  }
  if (base.size() > std::numeric_limits<std::uint32_t>::max()) throw std::invalid_argument("generate: base too large");

  GeneratedDataset out;
  out.data.class_count = base.class_count;
  out.data.feature_dim = base.feature_dim;
  out.data.examples.resize(n_out);
  out.data.diagnostics.emplace(n_out, SoftLabel::one_hot(base.class_count, 0));
  out.records.resize(n_out);

  std::atomic<bool> exhausted{false};
  const auto build_one = [&](std::size_t i) {
    RngStream stream = rng.substream(i);
    std::vector<std::span<const double>> sources(spec.m);
    std::vector<ClassIndex> labels(spec.m);
    for (std::uint32_t attempt = 1; attempt <= kMaxRetries + 1; ++attempt) {
      MixRecord rec;
      rec.attempts = attempt;
      rec.sources = sample_group(base.size(), spec.m, stream);
      for (std::uint32_t j = 0; j < spec.m; ++j) {
        const auto& ex = base.examples[rec.sources[j]];
        sources[j] = ex.features;
        labels[j] = ex.label;
      }
      std::vector<double> features;
      if (spec.kind == MixKind::kMixup) {
        rec.weights = sample_mix_weights(spec.m, spec.r, stream);
        features = mixup(sources, rec.weights);
      } else {
        BlockAssignment a = sample_block_assignment(spec.m, spec.r, stream);
        features = patchmix(sources, a);
        rec.weights = a.induced_weights();
        rec.blocks = std::move(a.assign);
      }
      SoftLabel soft = mixed_soft_label(labels, rec.weights, base.class_count);
      if (spec.reject_degenerate && soft.is_one_hot()) continue;

      out.data.examples[i].label = quantize_label(soft, stream);
      out.data.examples[i].features = std::move(features);
      (*out.data.diagnostics)[i] = std::move(soft);
      out.records[i] = std::move(rec);
      return;
    }
    exhausted.store(true, std::memory_order_relaxed);
  };

  const auto n = static_cast<std::int64_t>(n_out);
  if (exec == Exec::kParallel) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) build_one(static_cast<std::size_t>(i));
  } else {
    for (std::int64_t i = 0; i < n; ++i) build_one(static_cast<std::size_t>(i));
  }

  if (exhausted.load()) {
    throw DegenerateSpecError(std::string("generate: spec (") + mix_kind_name(spec.kind) + ", m=" +
                              std::to_string(spec.m) + ", r=" + std::to_string(spec.r) +
                              ") is degenerate for this base set: 100 retries produced only one-hot soft labels");
  }

  GenMeta& meta = out.data.gen_meta;
  meta.kind = spec.kind;
  meta.m = spec.m;
  meta.r = spec.r;
  meta.seed = rng.seed();
  meta.extra = base.gen_meta.extra;
  meta.extra.emplace_back("stream_id", std::to_string(rng.stream_id()));
  meta.extra.emplace_back("n_out", std::to_string(n_out));
  meta.extra.emplace_back("base_size", std::to_string(base.size()));
  meta.extra.emplace_back("reject_degenerate", spec.reject_degenerate ? "true" : "false");
  return out;
}

AmbiguousDataset generate_ambiguous_dataset(const AmbiguousDataset& base, const MixSpec& spec, std::size_t n_out,
                                            const RngStream& rng, Exec exec) {
  return generate_with_records(base, spec, n_out, rng, exec).data;
}

Matrix class_means(const BaseSpec& spec, std::uint64_t seed) {
  spec.validate();
  Matrix means(spec.c, spec.d, 0.0);
  const double scale = spec.separation / std::sqrt(2.0);
  if (spec.d >= spec.c) {
    // Centered simplex: (e_k - 1/c) * separation / sqrt(2); every pair of
    // means is exactly `separation` apart.
    const double shift = 1.0 / spec.c;
    for (std::uint32_t k = 0; k < spec.c; ++k) {
      for (std::uint32_t j = 0; j < spec.c; ++j) means(k, j) = scale * ((j == k ? 1.0 : 0.0) - shift);
    }
    return means;
  }
  RngStream rng(seed, streams::kClassMeans);
  for (std::uint32_t k = 0; k < spec.c; ++k) {
    double norm2 = 0.0;
    for (std::uint32_t j = 0; j < spec.d; ++j) {
      means(k, j) = rng.normal();
      norm2 += means(k, j) * means(k, j);
    }
    const double inv = scale / std::sqrt(norm2);
    for (std::uint32_t j = 0; j < spec.d; ++j) means(k, j) *= inv;
  }
  return means;
}

AmbiguousDataset synth_base(const BaseSpec& spec, const RngStream& rng, Exec exec) {
  spec.validate();
  const Matrix means = class_means(spec, rng.seed());

  AmbiguousDataset ds;
  ds.class_count = spec.c;
  ds.feature_dim = spec.d;
  const std::size_t n = static_cast<std::size_t>(spec.c) * spec.n_per_class;
  ds.examples.resize(n);
  ds.diagnostics.emplace(n, SoftLabel::one_hot(spec.c, 0));

  const auto build_one = [&](std::size_t i) {
    const auto label = static_cast<ClassIndex>(i / spec.n_per_class);
    RngStream stream = rng.substream(i);
    auto& ex = ds.examples[i];
    ex.label = label;
    ex.features.resize(spec.d);
    for (std::uint32_t j = 0; j < spec.d; ++j) ex.features[j] = means(label, j) + spec.noise_sigma * stream.normal();
    (*ds.diagnostics)[i] = SoftLabel::one_hot(spec.c, label);
  };
  const auto count = static_cast<std::int64_t>(n);
  if (exec == Exec::kParallel) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < count; ++i) build_one(static_cast<std::size_t>(i));
  } else {
    for (std::int64_t i = 0; i < count; ++i) build_one(static_cast<std::size_t>(i));
  }

  ds.gen_meta.kind = MixKind::kNone;
  ds.gen_meta.seed = rng.seed();
  ds.gen_meta.extra = {
      {"base_layout", spec.d >= spec.c ? "simplex" : "random_unit"},
      {"base_separation", format_real(spec.separation)},
      {"base_noise_sigma", format_real(spec.noise_sigma)},
      {"base_n_per_class", std::to_string(spec.n_per_class)},
      {"base_stream_id", std::to_string(rng.stream_id())},
  };
  return ds;
}

EntropySummary summarize_entropy(const AmbiguousDataset& ds) {
  if (!ds.diagnostics || ds.diagnostics->empty()) {
    throw std::invalid_argument("summarize_entropy: dataset has no diagnostic soft labels");
  }
  EntropySummary s;
  s.min = std::numeric_limits<double>::infinity();
  s.max = -std::numeric_limits<double>::infinity();
  double total = 0.0;
  for (const auto& soft : *ds.diagnostics) {
    const double h = entropy(soft);
    total += h;
    s.min = std::min(s.min, h);
    s.max = std::max(s.max, h);
  }
  s.mean = total / static_cast<double>(ds.diagnostics->size());
  return s;
}

}  // namespace qll
