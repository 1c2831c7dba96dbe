// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "zst/corpus.hpp"
#include "zst/tensor.hpp"

namespace zst {

/// Word vectors aligned with `words`: row i of `matrix` belongs to words[i].
struct EmbeddingTable {
  std::vector<std::string> words;
  Tensor matrix;  // [word_count x dim]

  std::size_t word_count() const noexcept { return words.size(); }
  std::size_t dim() const noexcept { return matrix.cols(); }
  /// Number of stored floats: word_count * dim.
  std::size_t stored_floats() const noexcept { return matrix.size(); }
};

struct VecLoadReport {
  std::size_t duplicates = 0;  // later rows for an already-seen word (first one wins)
  std::size_t malformed = 0;   // blank lines and rows with unparsable numbers, skipped
};

/// Reads the `.vec` text format: a "N D" header, then "word f1 ... fD" rows.
EmbeddingTable load_vec(const std::filesystem::path& path, VecLoadReport* report = nullptr);
/// Writes the same format with 6 significant digits per value.
void save_vec(const EmbeddingTable& table, const std::filesystem::path& path);

double cosine_similarity(std::span<const double> x, std::span<const double> y);

/// Centers the rows and removes their projections onto the `count` leading
/// principal directions.
Tensor remove_dominant_components(const Tensor& data, std::size_t count);

struct PcaProjection {
  Tensor projected;                  // [rows x target_dim]
  std::vector<double> eigenvalues;   // full spectrum of the centered covariance, descending
  double retained_variance = 0.0;    // total variance of `projected`
};
/// Centers `data` and projects it onto its `target_dim` leading principal axes.
PcaProjection pca_project(const Tensor& data, std::size_t target_dim);

struct CompressOptions {
  std::size_t target_dim = 0;          // 0: half the input dimension
  bool post_process = true;
  std::size_t removed_components = 0;  // 0: ceil(dim / 100) at each post-processing pass
};

/// Post-process, PCA-project to target_dim, post-process again.
EmbeddingTable compress(const EmbeddingTable& table, const CompressOptions& options = {});

/// Model embedding matrix for `vocab`: pretrained rows where the table has the
/// word, seeded uniform(-0.1, 0.1) elsewhere, zeros for <pad>.
Tensor build_matrix(const Vocabulary& vocab, const EmbeddingTable& table, std::size_t dim, std::uint64_t seed);

}  // namespace zst
