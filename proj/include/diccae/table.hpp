#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "diccae/matrix.hpp"

namespace diccae {

inline constexpr std::int64_t kUnlabeled = -1;

// Labeled feature vectors (one row per sample).
struct EmbeddingTable {
  std::vector<std::int64_t> labels;
  Matrix features;

  std::size_t n() const noexcept { return features.rows(); }
  std::size_t d() const noexcept { return features.cols(); }
  bool fully_labeled() const;
  // Throws kShape when labels and rows disagree, kFormat on non-finite values.
  void validate() const;

  bool operator==(const EmbeddingTable&) const = default;
};

// DICE binary format, little-endian throughout:
//   "DICE"  u32 version(=1)  u64 n  u64 d  i64 labels[n]  f32 features[n*d]
// Features are stored as 32-bit floats; tables whose values are representable
// in float32 round-trip bit-exactly. Writes go to a temp file then rename.
inline constexpr std::uint32_t kDiceVersion = 1;

void write_table(const EmbeddingTable& table, const std::filesystem::path& path);
EmbeddingTable read_table(const std::filesystem::path& path);

// CSV export: header `id,label,f0,...,f{d-1}`, values printed with 9
// significant digits.
void write_table_csv(const EmbeddingTable& table, const std::filesystem::path& path);
EmbeddingTable read_table_csv(const std::filesystem::path& path);

// Writes `bytes` to a sibling temp file, then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

// Rounds every feature to the nearest float32, the precision DICE stores.
EmbeddingTable quantize_to_float(EmbeddingTable table);

}  // namespace diccae
