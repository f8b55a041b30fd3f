#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace conflict {

/// Malformed EMB1 input; `offset` is the byte position where reading failed.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : std::runtime_error(what + " at byte offset " + std::to_string(offset)), offset_(offset) {}
  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

/// Row-major float32 vectors keyed by text id.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  /// Validates shape, id uniqueness and finiteness.
  EmbeddingMatrix(std::vector<std::string> ids, std::size_t dim, std::vector<float> values);

  std::size_t size() const { return ids_.size(); }
  std::size_t dim() const { return dim_; }
  const std::vector<std::string>& ids() const { return ids_; }
  std::span<const float> row(std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }
  std::optional<std::size_t> index_of(const std::string& id) const;
  const std::vector<float>& values() const { return values_; }

 private:
  std::vector<std::string> ids_;
  std::size_t dim_ = 0;
  std::vector<float> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// EMB1: "EMB1", u32 count, u32 dim, then per row u32 id length, id bytes,
/// dim float32. All little-endian, no padding.
EmbeddingMatrix load_embeddings(std::istream& in);
void write_embeddings(std::ostream& out, const EmbeddingMatrix& m);

/// (cos(u, v) + 1) / 2 clamped to [0, 1], accumulated in double.
/// Throws std::domain_error for zero-norm input or a length mismatch.
double normalized_cosine(std::span<const float> u, std::span<const float> v);

/// Dense symmetric similarity, stored once per unordered pair.
class SimilarityMatrix {
 public:
  SimilarityMatrix(std::vector<std::string> ids, std::vector<double> upper);

  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }
  double operator()(std::size_t i, std::size_t j) const {
    if (i == j) return 1.0;
    if (i > j) std::swap(i, j);
    return upper_[pair_index(i, j)];
  }
  /// Pair (i, j), i < j, in row-major order of the strict upper triangle.
  std::size_t pair_index(std::size_t i, std::size_t j) const {
    return i * (2 * size() - i - 1) / 2 + (j - i - 1);
  }
  /// Strict upper triangle, row-major.
  const std::vector<double>& upper() const { return upper_; }

 private:
  std::vector<std::string> ids_;
  std::vector<double> upper_;
};

/// Throws std::domain_error naming the first zero-norm row.
SimilarityMatrix pairwise_similarity(const EmbeddingMatrix& m);

}  // namespace conflict
