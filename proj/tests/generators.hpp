#pragma once

// Small seeded generators for property tests.

#include <cstdint>
#include <string>
#include <vector>

#include "conflict/annotation.hpp"
#include "conflict/graph_cluster.hpp"
#include "conflict/rng.hpp"

namespace gen {

inline std::vector<std::uint32_t> labels(conflict::Rng& rng, std::size_t n, std::uint32_t k) {
  std::vector<std::uint32_t> out(n);
  for (auto& v : out) v = static_cast<std::uint32_t>(rng.below(k));
  return out;
}

inline std::vector<unsigned char> bits(conflict::Rng& rng, std::size_t n, double p_one = 0.5) {
  std::vector<unsigned char> out(n);
  for (auto& v : out) v = rng.uniform() < p_one ? 1 : 0;
  return out;
}

/// Random graph on n nodes; each pair present with probability `density`.
inline conflict::SimilarityGraph graph(conflict::Rng& rng, std::size_t n, double density) {
  conflict::SimilarityGraph g;
  for (std::size_t i = 0; i < n; ++i) g.node_ids.push_back("n" + std::to_string(i));
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = i + 1; j < n; ++j) {
      if (rng.uniform() < density) g.edges.push_back({i, j, 0.05 + 0.95 * rng.uniform()});
    }
  }
  return g;
}

/// Clique blocks joined in a chain by single weak edges.
inline conflict::SimilarityGraph cliques(std::size_t count, std::size_t size, double bridge) {
  conflict::SimilarityGraph g;
  const std::size_t n = count * size;
  for (std::size_t i = 0; i < n; ++i) g.node_ids.push_back("v" + std::to_string(i));
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = i + 1; j < n; ++j) {
      if (i / size == j / size) {
        g.edges.push_back({i, j, 1.0});
      } else if (j == i + 1) {
        g.edges.push_back({i, j, bridge});
      }
    }
  }
  return g;
}

inline std::vector<conflict::AnnotationRecord> annotations(conflict::Rng& rng, std::size_t posts,
                                                          std::size_t max_annotators) {
  using namespace conflict;
  std::vector<AnnotationRecord> out;
  for (std::size_t p = 0; p < posts; ++p) {
    const std::size_t count = 1 + rng.below(max_annotators);
    for (std::size_t a = 0; a < count; ++a) {
      AnnotationRecord r;
      r.post_id = "p" + std::to_string(p);
      r.annotator_id = "a" + std::to_string(a);
      for (std::size_t k = 0; k < kAspectCount; ++k) {
        const auto raw = raw_labels(kAspects[k]);
        r.labels[k] = raw[rng.below(raw.size())];
      }
      r.attention_check_1_pass = rng.uniform() > 0.1;
      r.attention_check_2_pass = rng.uniform() > 0.1;
      out.push_back(r);
    }
  }
  return out;
}

}  // namespace gen
