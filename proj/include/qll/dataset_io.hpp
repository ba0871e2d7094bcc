#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "qll/core.hpp"

namespace qll {

// Dataset binary layout (little-endian):
//
//   "QLL1"
//   u32 c, u32 d, u64 N, u8 has_diagnostics, u8 mix_kind, u32 m, u32 r, u64 seed
//   N x (d x f32 features, u16 label)
//   if has_diagnostics: N x (c x f32 soft-label entries)
//
// Features and soft labels are narrowed to float32 on write; a decoded
// dataset therefore equals the original only up to float rounding.

inline constexpr std::string_view kDatasetMagic = "QLL1";

std::string encode_dataset(const AmbiguousDataset& ds);
/// Throws FormatError on bad magic, truncation, trailing bytes or invalid
/// content.
AmbiguousDataset decode_dataset(std::string_view bytes);

/// Same stem as the data file with extension ".meta".
std::filesystem::path sidecar_path(const std::filesystem::path& data_path);
/// Human-readable `key = value` rendering of the header and gen_meta.
std::string render_sidecar(const AmbiguousDataset& ds);
/// Merges the non-header keys of a sidecar into meta.extra.
void apply_sidecar(std::string_view text, GenMeta& meta);

/// Atomically writes the binary file and its sidecar.
void write_dataset(const std::filesystem::path& path, const AmbiguousDataset& ds);
/// Reads the binary file and, if present, its sidecar.
AmbiguousDataset read_dataset(const std::filesystem::path& path);

}  // namespace qll
