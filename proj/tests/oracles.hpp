#pragma once

// Brute-force reference implementations used by the unit and acceptance
// tests. They deliberately avoid the library's formulas.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "conflict/graph_cluster.hpp"
#include "conflict/stats.hpp"

namespace oracle {

/// ARI from explicit pair counts (Hubert and Arabie's 2x2 form).
inline double ari_pairs(const std::vector<std::uint32_t>& p, const std::vector<std::uint32_t>& q) {
  double a = 0, b = 0, c = 0, d = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = i + 1; j < p.size(); ++j) {
      const bool sp = p[i] == p[j];
      const bool sq = q[i] == q[j];
      if (sp && sq) {
        ++a;
      } else if (sp) {
        ++b;
      } else if (sq) {
        ++c;
      } else {
        ++d;
      }
    }
  }
  const double denom = (a + b) * (b + d) + (a + c) * (c + d);
  if (denom == 0.0) return 1.0;
  return 2.0 * (a * d - b * c) / denom;
}

/// Pearson correlation of two 0/1 vectors; 0 when either is constant.
inline double pearson(const std::vector<unsigned char>& x, const std::vector<unsigned char>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
    syy += (y[k] - my) * (y[k] - my);
  }
  if (sxx == 0 || syy == 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

inline std::uint64_t choose(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  std::uint64_t c = 1;
  for (std::uint64_t i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

/// Two-sided Fisher p with exact integer weights C(r0, x) C(r1, c0 - x).
inline double fisher_enumerated(const conflict::ContingencyTable2x2& t) {
  const std::uint64_t r0 = t.counts[0][0] + t.counts[0][1];
  const std::uint64_t r1 = t.counts[1][0] + t.counts[1][1];
  const std::uint64_t c0 = t.counts[0][0] + t.counts[1][0];
  if (r0 == 0 || r1 == 0 || c0 == 0 || c0 == r0 + r1) return 1.0;
  const std::uint64_t observed = choose(r0, t.counts[0][0]) * choose(r1, c0 - t.counts[0][0]);
  std::uint64_t total = 0;
  std::uint64_t tail = 0;
  for (std::uint64_t x = 0; x <= std::min(r0, c0); ++x) {
    if (c0 - x > r1) continue;
    const std::uint64_t w = choose(r0, x) * choose(r1, c0 - x);
    total += w;
    if (w <= observed) tail += w;
  }
  return static_cast<double>(tail) / static_cast<double>(total);
}

/// One-sided permutation p by visiting every subset of size |a|.
inline double permutation_enumerated(const std::vector<unsigned char>& a,
                                     const std::vector<unsigned char>& b) {
  std::vector<unsigned char> pooled(a);
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::size_t n = pooled.size();
  const std::size_t na = a.size();
  const int total = std::accumulate(pooled.begin(), pooled.end(), 0);
  const int obs_a = std::accumulate(a.begin(), a.end(), 0);
  // compare na*nb*diff in integers: nb*sum_a - na*sum_b
  const auto scaled = [&](int sum_a) {
    return static_cast<long>(n - na) * sum_a - static_cast<long>(na) * (total - sum_a);
  };
  const long observed = scaled(obs_a);
  std::uint64_t hits = 0;
  std::uint64_t count = 0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != na) continue;
    int s = 0;
    for (std::size_t k = 0; k < n; ++k) {
      if (mask >> k & 1u) s += pooled[k];
    }
    ++count;
    hits += scaled(s) >= observed;
  }
  return static_cast<double>(hits) / static_cast<double>(count);
}

/// Q = (1/2m) sum_ij [A_ij - k_i k_j / 2m] delta(c_i, c_j), by double loop.
inline double modularity_direct(const conflict::SimilarityGraph& g,
                                const std::vector<std::uint32_t>& labels) {
  const std::size_t n = g.node_count();
  std::vector<std::vector<double>> adj(n, std::vector<double>(n, 0.0));
  for (const auto& e : g.edges) {
    adj[e.i][e.j] += e.weight;
    adj[e.j][e.i] += e.weight;
  }
  std::vector<double> k(n, 0.0);
  double two_m = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) k[i] += adj[i][j];
    two_m += k[i];
  }
  double q = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (labels[i] == labels[j]) q += adj[i][j] - k[i] * k[j] / two_m;
    }
  }
  return q / two_m;
}

namespace detail {
inline void grow(std::size_t pos, std::uint32_t top, std::vector<std::uint32_t>& a,
                 std::vector<std::vector<std::uint32_t>>& out) {
  if (pos == a.size()) {
    out.push_back(a);
    return;
  }
  for (std::uint32_t v = 0; v <= top + 1; ++v) {
    a[pos] = v;
    grow(pos + 1, std::max(top, v), a, out);
  }
}
}  // namespace detail

/// Every set partition of {0..n-1} as a restricted growth string.
inline std::vector<std::vector<std::uint32_t>> set_partitions(std::size_t n) {
  std::vector<std::vector<std::uint32_t>> out;
  std::vector<std::uint32_t> a(n, 0);
  if (n == 0) return {a};
  detail::grow(1, 0, a, out);
  return out;
}

}  // namespace oracle
