#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

#include "conflict/embedding.hpp"
#include "conflict/rng.hpp"

using namespace conflict;

namespace {

EmbeddingMatrix random_matrix(Rng& rng, std::size_t rows, std::size_t dim) {
  std::vector<std::string> ids;
  std::vector<float> values;
  for (std::size_t r = 0; r < rows; ++r) {
    ids.push_back("row-" + std::to_string(r));
    for (std::size_t d = 0; d < dim; ++d) values.push_back(static_cast<float>(rng.uniform() * 2 - 1));
  }
  return {std::move(ids), dim, std::move(values)};
}

std::string bytes_of(const EmbeddingMatrix& m) {
  std::ostringstream out;
  write_embeddings(out, m);
  return out.str();
}

std::uint64_t format_error_offset(const std::string& bytes) {
  std::istringstream in(bytes);
  try {
    load_embeddings(in);
  } catch (const FormatError& e) {
    return e.offset();
  }
  FAIL("expected a FormatError");
  return 0;
}

}  // namespace

TEST_SUITE("embedding") {
  TEST_CASE("header count 2, dim 3 loads as 2x3") {
    const EmbeddingMatrix m({"a", "b"}, 3, {1, 2, 3, 4, 5, 6});
    std::istringstream in(bytes_of(m));
    const auto back = load_embeddings(in);
    CHECK(back.size() == 2);
    CHECK(back.dim() == 3);
    CHECK(back.row(1)[2] == 6.0f);
  }

  TEST_CASE("exact byte layout") {
    const EmbeddingMatrix m({"xy"}, 1, {1.0f});
    const std::string expected("EMB1\x01\x00\x00\x00\x01\x00\x00\x00\x02\x00\x00\x00xy\x00\x00\x80\x3f", 22);
    CHECK(bytes_of(m) == expected);
  }

  TEST_CASE("write-then-read of 100 rows is bit-identical") {
    Rng rng(1);
    const auto m = random_matrix(rng, 100, 24);
    const std::string bytes = bytes_of(m);
    std::istringstream in(bytes);
    const auto back = load_embeddings(in);
    CHECK(back.ids() == m.ids());
    REQUIRE(back.values().size() == m.values().size());
    CHECK(std::memcmp(back.values().data(), m.values().data(), m.values().size() * sizeof(float)) == 0);
    CHECK(bytes_of(back) == bytes);
  }

  TEST_CASE("format errors carry byte offsets") {
    const EmbeddingMatrix m({"a", "b"}, 2, {1, 2, 3, 4});
    const std::string good = bytes_of(m);
    CHECK(format_error_offset("EMB2" + good.substr(4)) == 0);
    CHECK(format_error_offset(good.substr(0, 12)) == 12);  // truncated after header
    CHECK(format_error_offset(good.substr(0, 20)) == 20);  // inside the first row's floats
    CHECK(format_error_offset(good.substr(0, 2)) == 2);

    std::string nan = good;
    const float q = std::numeric_limits<float>::quiet_NaN();
    std::memcpy(nan.data() + 12 + 4 + 1 + 4, &q, sizeof q);  // second value of row a
    CHECK(format_error_offset(nan) == 21);

    std::string dup = good;
    dup[12 + 4 + 1 + 8 + 4] = 'a';  // rename row b to a
    CHECK(format_error_offset(dup) == 29);
  }

  TEST_CASE("matrix construction validates its input") {
    CHECK_THROWS_AS(EmbeddingMatrix({"a"}, 0, {}), std::invalid_argument);
    CHECK_THROWS_AS(EmbeddingMatrix({"a"}, 2, {1.0f}), std::invalid_argument);
    CHECK_THROWS_AS(EmbeddingMatrix({"a", "a"}, 1, {1.0f, 2.0f}), std::invalid_argument);
    CHECK_THROWS_AS(EmbeddingMatrix({"a"}, 1, {std::numeric_limits<float>::infinity()}),
                    std::invalid_argument);
  }

  TEST_CASE("normalized cosine reference points") {
    const std::vector<float> e1{1, 0, 0};
    const std::vector<float> e2{0, 1, 0};
    const std::vector<float> neg{-1, 0, 0};
    const std::vector<float> zero{0, 0, 0};
    CHECK(normalized_cosine(e1, e1) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(normalized_cosine(e1, e2) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(normalized_cosine(e1, neg) == doctest::Approx(0.0));
    CHECK_THROWS_AS(normalized_cosine(e1, zero), std::domain_error);
    CHECK_THROWS_AS(normalized_cosine(e1, std::vector<float>{1, 0}), std::domain_error);
  }

  TEST_CASE("normalized cosine is scale invariant and within [0, 1]") {
    Rng rng(2);
    for (int trial = 0; trial < 500; ++trial) {
      std::vector<float> u(8), v(8);
      for (auto& x : u) x = static_cast<float>(rng.uniform() * 2 - 1);
      for (auto& x : v) x = static_cast<float>(rng.uniform() * 2 - 1);
      const double base = normalized_cosine(u, v);
      CHECK(base >= 0.0);
      CHECK(base <= 1.0);
      const float a = static_cast<float>(0.01 + 100 * rng.uniform());
      const float b = static_cast<float>(0.01 + 100 * rng.uniform());
      auto su = u;
      auto sv = v;
      for (auto& x : su) x *= a;
      for (auto& x : sv) x *= b;
      CHECK(std::abs(normalized_cosine(su, sv) - base) <= 1e-6);
    }
  }

  TEST_CASE("pairwise similarity basics") {
    const EmbeddingMatrix one({"x"}, 4, {1, 2, 3, 4});
    const auto s1 = pairwise_similarity(one);
    CHECK(s1.size() == 1);
    CHECK(s1(0, 0) == 1.0);

    const EmbeddingMatrix m({"a", "b", "c"}, 2, {1, 0, 0, 1, 1, 0});
    const auto s = pairwise_similarity(m);
    CHECK(s(0, 2) == doctest::Approx(1.0));
    CHECK(s(0, 1) == doctest::Approx(0.5));

    const EmbeddingMatrix bad({"ok", "dead"}, 2, {1, 0, 0, 0});
    try {
      pairwise_similarity(bad);
      FAIL("zero-norm row accepted");
    } catch (const std::domain_error& e) {
      CHECK(std::string(e.what()).find("dead") != std::string::npos);
    }
  }

  TEST_CASE("pairwise similarity matches a naive double loop") {
    Rng rng(3);
    const auto m = random_matrix(rng, 50, 12);
    const auto s = pairwise_similarity(m);
    for (std::size_t i = 0; i < m.size(); ++i) {
      for (std::size_t j = 0; j < m.size(); ++j) {
        double dot = 0, ni = 0, nj = 0;
        for (std::size_t d = 0; d < m.dim(); ++d) {
          dot += m.row(i)[d] * m.row(j)[d];
          ni += m.row(i)[d] * m.row(i)[d];
          nj += m.row(j)[d] * m.row(j)[d];
        }
        const double expected = (dot / std::sqrt(ni * nj) + 1.0) / 2.0;
        CHECK(std::abs(s(i, j) - expected) <= 1e-6);
        CHECK(s(i, j) == s(j, i));
      }
    }
  }

  TEST_CASE("large matrices take the threaded path with identical results") {
    Rng rng(4);
    const auto m = random_matrix(rng, 300, 8);
    const auto s = pairwise_similarity(m);
    for (std::size_t i = 0; i < m.size(); i += 37) {
      for (std::size_t j = i + 1; j < m.size(); j += 11) {
        CHECK(s(i, j) == normalized_cosine(m.row(i), m.row(j)));
      }
    }
  }
}
