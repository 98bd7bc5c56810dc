#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "trl/core/vocabulary.hpp"

namespace trl::core {

/// |V| x dim row-major table. When `normalized`, every row except pad has
/// unit Euclidean norm; the pad row is all zero.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::size_t rows, std::size_t dim);

  std::size_t rows() const { return rows_; }
  std::size_t dim() const { return dim_; }
  bool normalized() const { return normalized_; }

  std::span<const double> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
  std::span<double> row(std::size_t i) { return {data_.data() + i * dim_, dim_}; }
  const std::vector<double>& data() const { return data_; }

  /// Rescales every non-pad row to unit norm and zeroes the pad row.
  void normalize();

  friend bool operator==(const EmbeddingTable&, const EmbeddingTable&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> data_;
  bool normalized_ = false;
};

/// Parses GloVe-style text (`word v1 v2 ...`). Vocabulary words missing from
/// the file get seeded Gaussian rows. Malformed lines and inconsistent
/// dimensions raise trl::Error naming the line number.
EmbeddingTable parse_embeddings(std::istream& in, const Vocabulary& vocab, bool normalize,
                                std::uint64_t seed = 0);
EmbeddingTable load_embeddings(const std::filesystem::path& path, const Vocabulary& vocab, bool normalize,
                               std::uint64_t seed = 0);

/// Writes every non-pad row in GloVe-style text.
void write_embeddings(const EmbeddingTable& table, const Vocabulary& vocab, std::ostream& out);
void save_embeddings(const EmbeddingTable& table, const Vocabulary& vocab, const std::filesystem::path& path);

double euclidean_distance(std::span<const double> a, std::span<const double> b);
/// Cosine similarity; 0 when either vector is zero.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

}  // namespace trl::core
