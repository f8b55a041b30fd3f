#include "conflict/embedding.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <istream>
#include <ostream>
#include <thread>
#include <unordered_set>

namespace conflict {

EmbeddingMatrix::EmbeddingMatrix(std::vector<std::string> ids, std::size_t dim,
                                 std::vector<float> values)
    : ids_(std::move(ids)), dim_(dim), values_(std::move(values)) {
  if (dim_ == 0) throw std::invalid_argument("embedding dimension must be positive");
  if (values_.size() != ids_.size() * dim_) {
    throw std::invalid_argument("embedding values do not match count x dim");
  }
  for (float v : values_) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite embedding value");
  }
  index_.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!index_.emplace(ids_[i], i).second) {
      throw std::invalid_argument("duplicate embedding id '" + ids_[i] + "'");
    }
  }
}

std::optional<std::size_t> EmbeddingMatrix::index_of(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

namespace {

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::uint32_t u32(const char* what) {
    std::array<unsigned char, 4> b{};
    bytes(b.data(), b.size(), what);
    return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
           static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
  }

  void bytes(void* dst, std::size_t n, const char* what) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    const auto got = static_cast<std::uint64_t>(in_.gcount());
    if (got != n) {
      throw FormatError(std::string("truncated EMB1 file reading ") + what, offset_ + got);
    }
    offset_ += n;
  }

  std::uint64_t offset() const { return offset_; }

 private:
  std::istream& in_;
  std::uint64_t offset_ = 0;
};

void put_u32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                              static_cast<char>((v >> 16) & 0xFF),
                              static_cast<char>((v >> 24) & 0xFF)};
  out.write(b.data(), b.size());
}

}  // namespace

EmbeddingMatrix load_embeddings(std::istream& in) {
  Reader reader(in);
  std::array<char, 4> magic{};
  reader.bytes(magic.data(), magic.size(), "magic");
  if (std::string_view(magic.data(), magic.size()) != "EMB1") {
    throw FormatError("bad EMB1 magic", 0);
  }
  const std::uint32_t count = reader.u32("count");
  const std::uint32_t dim = reader.u32("dim");
  if (dim == 0) throw FormatError("zero embedding dimension", 8);

  std::vector<std::string> ids;
  std::vector<float> values;
  std::unordered_set<std::string> seen;
  ids.reserve(count);
  values.reserve(static_cast<std::size_t>(count) * dim);
  for (std::uint32_t r = 0; r < count; ++r) {
    const std::uint32_t len = reader.u32("id length");
    std::string id(len, '\0');
    const std::uint64_t id_offset = reader.offset();
    reader.bytes(id.data(), len, "id");
    if (!seen.insert(id).second) throw FormatError("duplicate id '" + id + "'", id_offset);
    for (std::uint32_t k = 0; k < dim; ++k) {
      const std::uint64_t at = reader.offset();
      const float v = std::bit_cast<float>(reader.u32("vector"));
      if (!std::isfinite(v)) {
        throw FormatError("non-finite value in row '" + id + "'", at);
      }
      values.push_back(v);
    }
    ids.push_back(std::move(id));
  }
  return EmbeddingMatrix(std::move(ids), dim, std::move(values));
}

void write_embeddings(std::ostream& out, const EmbeddingMatrix& m) {
  out.write("EMB1", 4);
  put_u32(out, static_cast<std::uint32_t>(m.size()));
  put_u32(out, static_cast<std::uint32_t>(m.dim()));
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto& id = m.ids()[i];
    put_u32(out, static_cast<std::uint32_t>(id.size()));
    out.write(id.data(), static_cast<std::streamsize>(id.size()));
    for (float v : m.row(i)) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
}

namespace {

double norm(std::span<const float> u) {
  double s = 0.0;
  for (float x : u) s += static_cast<double>(x) * x;
  return std::sqrt(s);
}

double cosine_from_norms(std::span<const float> u, std::span<const float> v, double nu,
                         double nv) {
  double dot = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) dot += static_cast<double>(u[k]) * v[k];
  return std::clamp((dot / (nu * nv) + 1.0) / 2.0, 0.0, 1.0);
}

}  // namespace

double normalized_cosine(std::span<const float> u, std::span<const float> v) {
  if (u.size() != v.size()) throw std::domain_error("vector length mismatch");
  const double nu = norm(u);
  const double nv = norm(v);
  if (nu == 0.0 || nv == 0.0) throw std::domain_error("zero-norm vector");
  return cosine_from_norms(u, v, nu, nv);
}

SimilarityMatrix::SimilarityMatrix(std::vector<std::string> ids, std::vector<double> upper)
    : ids_(std::move(ids)), upper_(std::move(upper)) {
  const std::size_t n = ids_.size();
  if (upper_.size() != n * (n - (n > 0 ? 1 : 0)) / 2) {
    throw std::invalid_argument("similarity triangle does not match node count");
  }
}

SimilarityMatrix pairwise_similarity(const EmbeddingMatrix& m) {
  const std::size_t n = m.size();
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    norms[i] = norm(m.row(i));
    if (norms[i] == 0.0) throw std::domain_error("zero-norm embedding for id '" + m.ids()[i] + "'");
  }

  std::vector<double> upper(n > 1 ? n * (n - 1) / 2 : 0);
  auto fill_rows = [&](std::size_t worker, std::size_t workers) {
    // interleaved rows balance the shrinking triangle across workers
    for (std::size_t i = worker; i < n; i += workers) {
      std::size_t at = i * (2 * n - i - 1) / 2;
      for (std::size_t j = i + 1; j < n; ++j) {
        upper[at++] = cosine_from_norms(m.row(i), m.row(j), norms[i], norms[j]);
      }
    }
  };

  const std::size_t workers =
      std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, n < 256 ? 1 : 16);
  if (workers == 1) {
    fill_rows(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(fill_rows, w, workers);
  }
  return SimilarityMatrix(m.ids(), std::move(upper));
}

}  // namespace conflict
