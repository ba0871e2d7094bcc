#include "qll/dataset_io.hpp"

#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "qll/io_util.hpp"

namespace qll {

namespace {

const std::set<std::string>& header_keys() {
  static const std::set<std::string> keys = {"class_count", "feature_dim", "examples", "has_diagnostics",
                                             "mix_kind",    "m",           "r",        "seed"};
  return keys;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

std::string encode_dataset(const AmbiguousDataset& ds) {
  ds.validate();
  if (ds.class_count > std::numeric_limits<std::uint16_t>::max() + 1u) {
    throw std::invalid_argument("encode_dataset: labels must fit in u16");
  }
  ByteWriter w;
  w.raw(kDatasetMagic);
  w.u32(ds.class_count);
  w.u32(ds.feature_dim);
  w.u64(ds.examples.size());
  w.u8(ds.diagnostics ? 1 : 0);
  w.u8(static_cast<std::uint8_t>(ds.gen_meta.kind));
  w.u32(ds.gen_meta.m);
  w.u32(ds.gen_meta.r);
  w.u64(ds.gen_meta.seed);
  for (const auto& ex : ds.examples) {
    for (double v : ex.features) w.f32(static_cast<float>(v));
    w.u16(static_cast<std::uint16_t>(ex.label));
  }
  if (ds.diagnostics) {
    for (const auto& s : *ds.diagnostics) {
      for (double v : s.weights()) w.f32(static_cast<float>(v));
    }
  }
  return w.take();
}

AmbiguousDataset decode_dataset(std::string_view bytes) {
  ByteReader r(bytes);
  if (r.remaining() < kDatasetMagic.size() || r.raw(kDatasetMagic.size()) != kDatasetMagic) {
    throw FormatError("dataset: bad magic (expected QLL1)");
  }
  AmbiguousDataset ds;
  ds.class_count = r.u32();
  ds.feature_dim = r.u32();
  const std::uint64_t n = r.u64();
  const std::uint8_t has_diag = r.u8();
  const std::uint8_t kind = r.u8();
  if (has_diag > 1) throw FormatError("dataset: has_diagnostics must be 0 or 1");
  if (kind > 2) throw FormatError("dataset: unknown mix kind " + std::to_string(kind));
  ds.gen_meta.kind = static_cast<MixKind>(kind);
  ds.gen_meta.m = r.u32();
  ds.gen_meta.r = r.u32();
  ds.gen_meta.seed = r.u64();

  const std::uint64_t record = static_cast<std::uint64_t>(ds.feature_dim) * 4 + 2;
  const std::uint64_t diag = has_diag ? static_cast<std::uint64_t>(ds.class_count) * 4 : 0;
  const std::uint64_t per_example = record + diag;
  if (r.remaining() % per_example != 0 || r.remaining() / per_example != n) {
    throw FormatError("dataset: body size does not match header");
  }

  ds.examples.resize(n);
  for (auto& ex : ds.examples) {
    ex.features.resize(ds.feature_dim);
    for (auto& v : ex.features) v = r.f32();
    ex.label = r.u16();
  }
  if (has_diag) {
    std::vector<SoftLabel> soft;
    soft.reserve(n);
    std::vector<double> w(ds.class_count);
    for (std::uint64_t i = 0; i < n; ++i) {
      for (auto& v : w) v = r.f32();
      try {
        soft.emplace_back(w);
      } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("dataset: invalid soft label: ") + e.what());
      }
    }
    ds.diagnostics = std::move(soft);
  }
  try {
    ds.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("dataset: ") + e.what());
  }
  return ds;
}

std::filesystem::path sidecar_path(const std::filesystem::path& data_path) {
  std::filesystem::path p = data_path;
  p.replace_extension(".meta");
  return p;
}

std::string render_sidecar(const AmbiguousDataset& ds) {
  std::ostringstream out;
  out << "# qll dataset metadata\n";
  out << "class_count = " << ds.class_count << '\n';
  out << "feature_dim = " << ds.feature_dim << '\n';
  out << "examples = " << ds.examples.size() << '\n';
  out << "has_diagnostics = " << (ds.diagnostics ? 1 : 0) << '\n';
  out << "mix_kind = " << mix_kind_name(ds.gen_meta.kind) << '\n';
  out << "m = " << ds.gen_meta.m << '\n';
  out << "r = " << ds.gen_meta.r << '\n';
  out << "seed = " << ds.gen_meta.seed << '\n';
  for (const auto& [k, v] : ds.gen_meta.extra) out << k << " = " << v << '\n';
  return out.str();
}

void apply_sidecar(std::string_view text, GenMeta& meta) {
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = trim(text.substr(start, end - start));
    start = end + 1;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw FormatError("sidecar: expected 'key = value', got '" + std::string(line) + "'");
    std::string key(trim(line.substr(0, eq)));
    std::string value(trim(line.substr(eq + 1)));
    if (header_keys().count(key)) continue;
    bool replaced = false;
    for (auto& [k, v] : meta.extra) {
      if (k == key) {
        v = value;
        replaced = true;
      }
    }
    if (!replaced) meta.extra.emplace_back(std::move(key), std::move(value));
  }
}

void write_dataset(const std::filesystem::path& path, const AmbiguousDataset& ds) {
  atomic_write_file(path, encode_dataset(ds));
  atomic_write_file(sidecar_path(path), render_sidecar(ds));
}

AmbiguousDataset read_dataset(const std::filesystem::path& path) {
  AmbiguousDataset ds = decode_dataset(read_file(path));
  const auto meta = sidecar_path(path);
  if (std::filesystem::exists(meta)) apply_sidecar(read_file(meta), ds.gen_meta);
  return ds;
}

}  // namespace qll
