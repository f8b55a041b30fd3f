#include "conflict/stats.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <unordered_map>

#include "conflict/rng.hpp"

namespace conflict {

void ConfusionCounts::add(bool gold, bool predicted) {
  if (gold && predicted) {
    ++tp;
  } else if (!gold && !predicted) {
    ++tn;
  } else if (predicted) {
    ++fp;
  } else {
    ++fn;
  }
}

namespace {

double f1(double hits, double false_pos, double false_neg) {
  const double denom = 2.0 * hits + false_pos + false_neg;
  return denom > 0.0 ? 2.0 * hits / denom : 0.0;
}

struct WeightedCounts {
  double tp = 0, fp = 0, fn = 0, tn = 0;
  double total() const { return tp + fp + fn + tn; }
};

double macro_from(double tp, double fp, double fn, double tn) {
  return (f1(tp, fp, fn) + f1(tn, fn, fp)) / 2.0;
}

MetricsReport make_report(std::string group, const ConfusionCounts& c) {
  MetricsReport r;
  r.group = std::move(group);
  r.counts = c;
  r.accuracy = accuracy(c);
  r.micro_f1 = micro_f1(c);
  r.macro_f1 = macro_f1(c);
  return r;
}

}  // namespace

double accuracy(const ConfusionCounts& c) {
  if (c.total() == 0) return 0.0;
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

double micro_f1(const ConfusionCounts& c) {
  // pooled over both classes: every error is one false positive for the
  // predicted class and one false negative for the gold class
  const double hits = static_cast<double>(c.tp + c.tn);
  const double errors = static_cast<double>(c.fp + c.fn);
  return f1(hits, errors, errors);
}

double macro_f1(const ConfusionCounts& c) {
  return macro_from(static_cast<double>(c.tp), static_cast<double>(c.fp),
                    static_cast<double>(c.fn), static_cast<double>(c.tn));
}

Evaluation evaluate(std::span<const unsigned char> predictions,
                    std::span<const unsigned char> golds, std::span<const std::string> groups,
                    std::span<const std::string> expected_groups,
                    std::span<const std::string> post_ids) {
  if (predictions.size() != golds.size() || groups.size() != golds.size()) {
    throw std::invalid_argument("predictions, golds and groups must be aligned");
  }
  if (!post_ids.empty() && post_ids.size() != golds.size()) {
    throw std::invalid_argument("post ids must be aligned with golds");
  }

  Evaluation out;
  ConfusionCounts all;
  std::map<std::string, ConfusionCounts> by_group;
  for (std::size_t k = 0; k < golds.size(); ++k) {
    all.add(golds[k] != 0, predictions[k] != 0);
    by_group[groups[k]].add(golds[k] != 0, predictions[k] != 0);
  }

  std::map<std::string, WeightedCounts> weighted;
  if (!post_ids.empty()) {
    std::unordered_map<std::string, std::size_t> per_post;
    for (const auto& id : post_ids) ++per_post[id];
    for (std::size_t k = 0; k < golds.size(); ++k) {
      const double w = 1.0 / static_cast<double>(per_post[post_ids[k]]);
      const bool g = golds[k] != 0;
      const bool p = predictions[k] != 0;
      for (const std::string& key : {std::string("all"), "g:" + groups[k]}) {
        auto& c = weighted[key];
        (g && p ? c.tp : !g && !p ? c.tn : p ? c.fp : c.fn) += w;
      }
    }
  }
  auto attach_weighted = [&](MetricsReport& r, const std::string& key) {
    auto it = weighted.find(key);
    if (it == weighted.end()) return;
    const auto& c = it->second;
    r.post_weighted_accuracy = c.total() > 0 ? (c.tp + c.tn) / c.total() : 0.0;
    r.post_weighted_macro_f1 = macro_from(c.tp, c.fp, c.fn, c.tn);
  };

  if (all.total() == 0) {
    out.warnings.push_back("no examples to evaluate");
  } else {
    out.reports.push_back(make_report("All", all));
    attach_weighted(out.reports.back(), "all");
  }
  for (const auto& name : expected_groups) {
    if (!by_group.contains(name)) out.warnings.push_back("group " + name + " is empty, omitted");
  }
  for (const auto& [name, counts] : by_group) {
    out.reports.push_back(make_report(name, counts));
    attach_weighted(out.reports.back(), "g:" + name);
  }
  return out;
}

namespace {

std::string pct(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(1) << 100.0 * v;
  return s.str();
}

}  // namespace

void write_metrics_tsv(std::ostream& out, const std::vector<MetricsReport>& reports) {
  out << "group\tsupport\ttp\tfp\tfn\ttn\taccuracy\tmicro_f1\tmacro_f1\t"
         "post_weighted_accuracy\tpost_weighted_macro_f1\n";
  for (const auto& r : reports) {
    out << r.group << '\t' << r.counts.total() << '\t' << r.counts.tp << '\t' << r.counts.fp
        << '\t' << r.counts.fn << '\t' << r.counts.tn << '\t' << pct(r.accuracy) << '\t'
        << pct(r.micro_f1) << '\t' << pct(r.macro_f1) << '\t'
        << (r.post_weighted_accuracy ? pct(*r.post_weighted_accuracy) : "-") << '\t'
        << (r.post_weighted_macro_f1 ? pct(*r.post_weighted_macro_f1) : "-") << '\n';
  }
}

void write_metrics_markdown(std::ostream& out, const std::vector<MetricsReport>& reports,
                            const std::string& title) {
  out << "| " << title << " | F1% | Acc% |\n|---|---|---|\n";
  for (const auto& r : reports) {
    out << "| " << r.group << " | " << pct(r.macro_f1) << " | " << pct(r.accuracy) << " |\n";
  }
}

namespace {

// C(n, k) saturating at `cap` + 1.
std::uint64_t binomial_capped(std::uint64_t n, std::uint64_t k, std::uint64_t cap) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t c = 1;  // c <= cap before each step, so c * n stays small
  for (std::uint64_t i = 1; i <= k; ++i) {
    c = c * (n - k + i) / i;
    if (c > cap) return cap + 1;
  }
  return static_cast<std::uint64_t>(c);
}

std::uint64_t count_ones(std::span<const unsigned char> v) {
  std::uint64_t ones = 0;
  for (unsigned char x : v) {
    if (x > 1) throw std::invalid_argument("permutation test expects 0/1 values");
    ones += x;
  }
  return ones;
}

// (1 + hits) / (1 + resamples) over fixed chunks with derived seeds, so the
// result does not depend on the thread count.
template <class Draw>
double monte_carlo_p(const PermutationOptions& options, Draw draw) {
  if (options.resamples == 0) throw std::invalid_argument("permutation test needs resamples > 0");
  constexpr std::uint64_t kChunks = 64;
  std::vector<std::uint64_t> hits(kChunks, 0);
  auto run_chunk = [&](std::uint64_t chunk) {
    const std::uint64_t begin = options.resamples * chunk / kChunks;
    const std::uint64_t end = options.resamples * (chunk + 1) / kChunks;
    Rng rng(derive_seed(options.seed, chunk));
    std::uint64_t local = 0;
    for (std::uint64_t r = begin; r < end; ++r) local += draw(rng) ? 1 : 0;
    hits[chunk] = local;
  };
  const std::uint64_t workers =
      std::clamp<std::uint64_t>(std::thread::hardware_concurrency(), 1, kChunks);
  if (workers == 1) {
    for (std::uint64_t c = 0; c < kChunks; ++c) run_chunk(c);
  } else {
    std::vector<std::jthread> pool;
    for (std::uint64_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::uint64_t c = w; c < kChunks; c += workers) run_chunk(c);
      });
    }
  }
  std::uint64_t total = 0;
  for (std::uint64_t h : hits) total += h;
  return static_cast<double>(1 + total) / static_cast<double>(1 + options.resamples);
}

}  // namespace

PermutationResult permutation_test(std::span<const unsigned char> a,
                                   std::span<const unsigned char> b,
                                   const PermutationOptions& options) {
  if (a.empty() || b.empty()) throw std::invalid_argument("permutation test needs two non-empty groups");
  const std::uint64_t na = a.size();
  const std::uint64_t nb = b.size();
  const std::uint64_t n = na + nb;
  const std::uint64_t ones_a = count_ones(a);
  const std::uint64_t ones = ones_a + count_ones(b);

  PermutationResult result;
  result.observed_difference = static_cast<double>(ones_a) / static_cast<double>(na) -
                               static_cast<double>(ones - ones_a) / static_cast<double>(nb);

  // The mean difference grows strictly with the number of ones landing in
  // group a, so "difference >= observed" is exactly "ones in a >= ones_a".
  const std::uint64_t assignments = binomial_capped(n, na, options.exact_limit);
  if (assignments <= options.exact_limit) {
    std::uint64_t hits = 0;
    const std::uint64_t k_max = std::min(ones, na);
    for (std::uint64_t k = ones_a; k <= k_max; ++k) {
      hits += binomial_capped(ones, k, options.exact_limit) *
              binomial_capped(n - ones, na - k, options.exact_limit);
    }
    result.exact = true;
    result.p_value = static_cast<double>(hits) / static_cast<double>(assignments);
    return result;
  }

  result.p_value = monte_carlo_p(options, [&](Rng& rng) {
    // draw na of the n pooled values without replacement; each step picks a
    // uniformly random remaining element
    std::uint64_t ones_left = ones;
    std::uint64_t drawn_ones = 0;
    for (std::uint64_t remaining = n; remaining > n - na; --remaining) {
      if (rng.below(remaining) < ones_left) {
        --ones_left;
        ++drawn_ones;
      }
    }
    return drawn_ones >= ones_a;
  });
  return result;
}

PermutationResult permutation_test_means(std::span<const double> a, std::span<const double> b,
                                         const PermutationOptions& options) {
  if (a.empty() || b.empty()) throw std::invalid_argument("permutation test needs two non-empty groups");
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  for (double v : pooled) {
    if (!std::isfinite(v)) throw std::invalid_argument("permutation test values must be finite");
  }
  const std::size_t na = a.size();
  const std::size_t n = pooled.size();
  double sum_a = 0.0;
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) (k < na ? sum_a : total) += pooled[k];
  total += sum_a;

  PermutationResult result;
  result.observed_difference =
      sum_a / static_cast<double>(na) - (total - sum_a) / static_cast<double>(n - na);
  // the difference grows with the sum of group a; slack absorbs summation order
  const double threshold = sum_a - 1e-9 * std::max(1.0, std::abs(total));

  const std::uint64_t assignments = binomial_capped(n, na, options.exact_limit);
  if (assignments <= options.exact_limit) {
    std::vector<std::size_t> pick(na);
    for (std::size_t k = 0; k < na; ++k) pick[k] = k;
    std::uint64_t hits = 0;
    for (;;) {
      double s = 0.0;
      for (std::size_t k : pick) s += pooled[k];
      hits += s >= threshold;
      // next combination in lexicographic order
      std::size_t k = na;
      while (k > 0 && pick[k - 1] == n - na + k - 1) --k;
      if (k == 0) break;
      ++pick[k - 1];
      for (std::size_t j = k; j < na; ++j) pick[j] = pick[j - 1] + 1;
    }
    result.exact = true;
    result.p_value = static_cast<double>(hits) / static_cast<double>(assignments);
    return result;
  }

  result.p_value = monte_carlo_p(options, [&](Rng& rng) {
    std::vector<double> pool = pooled;
    double s = 0.0;
    for (std::size_t k = 0; k < na; ++k) {
      const auto j = k + static_cast<std::size_t>(rng.below(n - k));
      std::swap(pool[k], pool[j]);
      s += pool[k];
    }
    return s >= threshold;
  });
  return result;
}

namespace {

struct Margins {
  std::uint64_t row0;
  std::uint64_t row1;
  std::uint64_t col0;
  std::uint64_t lo;  // feasible range of the top-left cell
  std::uint64_t hi;
};

Margins margins_of(const ContingencyTable2x2& t) {
  Margins m{t.row(0), t.row(1), t.col(0), 0, 0};
  m.lo = m.col0 > m.row1 ? m.col0 - m.row1 : 0;
  m.hi = std::min(m.row0, m.col0);
  return m;
}

// log of the unnormalised hypergeometric weight of each feasible table, by
// the ratio recurrence from the lowest feasible top-left cell
std::vector<long double> log_weights(const Margins& m) {
  std::vector<long double> lw;
  lw.reserve(m.hi - m.lo + 1);
  long double acc = 0.0L;
  for (std::uint64_t x = m.lo; x <= m.hi; ++x) {
    lw.push_back(acc);
    if (x == m.hi) break;
    const long double num = static_cast<long double>(m.row0 - x) * static_cast<long double>(m.col0 - x);
    const long double den = static_cast<long double>(x + 1) *
                            static_cast<long double>(m.row1 - m.col0 + x + 1);
    acc += std::log(num) - std::log(den);
  }
  return lw;
}

PermutationOptions aspect_options(PermutationOptions options, Aspect a) {
  options.seed = derive_seed(options.seed, static_cast<std::uint64_t>(a));
  return options;
}

}  // namespace

std::vector<double> hypergeometric_tables(const ContingencyTable2x2& t) {
  const Margins m = margins_of(t);
  const auto lw = log_weights(m);
  const long double top = *std::max_element(lw.begin(), lw.end());
  long double norm = 0.0L;
  for (long double v : lw) norm += std::exp(v - top);
  std::vector<double> probs;
  probs.reserve(lw.size());
  for (long double v : lw) probs.push_back(static_cast<double>(std::exp(v - top) / norm));
  return probs;
}

double fisher_exact(const ContingencyTable2x2& t) {
  if (t.degenerate()) return 1.0;
  const Margins m = margins_of(t);
  const auto lw = log_weights(m);
  const long double observed = lw[t.counts[0][0] - m.lo];
  const long double top = *std::max_element(lw.begin(), lw.end());
  constexpr long double kSlack = 1e-12L;  // relative, absorbs rounding on tied tables
  long double total = 0.0L;
  long double tail = 0.0L;
  for (long double v : lw) {
    const long double w = std::exp(v - top);
    total += w;
    if (v <= observed + kSlack) tail += w;
  }
  const double p = static_cast<double>(tail / total);
  return std::clamp(p, std::numeric_limits<double>::min(), 1.0);
}

std::optional<double> verdict_ratio_difference(const VerdictCounts& first,
                                               const VerdictCounts& second) {
  if (first.nta == 0 || second.nta == 0) return std::nullopt;
  const double r1 = static_cast<double>(first.yta) / static_cast<double>(first.nta);
  const double r2 = static_cast<double>(second.yta) / static_cast<double>(second.nta);
  return std::abs(r1 - r2) * 100.0;
}

std::vector<DyadResult> dyad_analysis(const std::vector<ScoredVerdict>& verdicts,
                                      const std::vector<GoldLabels>& gold,
                                      const PermutationOptions& options) {
  std::unordered_map<std::string, const GoldLabels*> by_post;
  for (const auto& g : gold) by_post.emplace(g.post_id, &g);

  std::vector<DyadResult> results;
  for (Aspect a : kAspects) {
    DyadResult d;
    d.aspect = a;
    const auto values = merged_labels(a);
    std::array<ConfusionCounts, 2> counts{};
    std::array<std::vector<unsigned char>, 2> correct;
    // per value: post id -> (correct, total), in first-seen order
    std::array<std::vector<std::pair<std::string, std::array<std::size_t, 2>>>, 2> per_post;
    std::array<std::unordered_map<std::string, std::size_t>, 2> post_slot;
    for (const auto& v : verdicts) {
      auto it = by_post.find(v.post_id);
      if (it == by_post.end() || !it->second->label(a)) continue;
      const std::size_t k = merged_index(a, *it->second->label(a));
      counts[k].add(v.gold != 0, v.predicted != 0);
      correct[k].push_back(v.gold == v.predicted);
      auto [slot, fresh] = post_slot[k].emplace(v.post_id, per_post[k].size());
      if (fresh) per_post[k].push_back({v.post_id, {0, 0}});
      auto& tally = per_post[k][slot->second].second;
      tally[0] += v.gold == v.predicted;
      ++tally[1];
      (v.gold ? d.verdicts[k].yta : d.verdicts[k].nta) += 1;
    }
    for (std::size_t k = 0; k < 2; ++k) {
      d.values[k] = make_report(std::string(to_string(values[k])), counts[k]);
    }

    if (!correct[0].empty() && !correct[1].empty()) {
      d.better_value = d.values[1].accuracy > d.values[0].accuracy ? 1 : 0;
      d.permutation = permutation_test(correct[d.better_value], correct[1 - d.better_value],
                                       aspect_options(options, a));
      std::array<std::vector<double>, 2> post_acc;
      for (std::size_t k = 0; k < 2; ++k) {
        for (const auto& [id, tally] : per_post[k]) {
          post_acc[k].push_back(static_cast<double>(tally[0]) / static_cast<double>(tally[1]));
        }
      }
      PermutationOptions post_options = aspect_options(options, a);
      post_options.seed = derive_seed(post_options.seed, kAspectCount);
      d.post_permutation = permutation_test_means(post_acc[d.better_value],
                                                  post_acc[1 - d.better_value], post_options);
    } else {
      d.warnings.push_back(std::string(column_name(a)) +
                           ": a value has no verdicts, permutation test skipped");
    }

    ContingencyTable2x2 table;
    for (std::size_t k = 0; k < 2; ++k) {
      table.counts[0][k] = d.verdicts[k].nta;
      table.counts[1][k] = d.verdicts[k].yta;
    }
    if (table.degenerate()) {
      d.warnings.push_back(std::string(column_name(a)) + ": degenerate verdict table, Fisher p = 1");
    }
    if (table.row(0) + table.row(1) > 0) d.fisher_p = fisher_exact(table);
    d.ratio_difference_pct = verdict_ratio_difference(d.verdicts[0], d.verdicts[1]);
    results.push_back(std::move(d));
  }
  return results;
}

namespace {

std::string p_text(const std::optional<double>& p) {
  if (!p) return "-";
  std::ostringstream s;
  s << std::setprecision(3) << *p;
  return s.str();
}

std::string ratio_text(const std::optional<double>& r) {
  if (!r) return "undefined";
  std::ostringstream s;
  s << std::fixed << std::setprecision(1) << *r;
  return s.str();
}

}  // namespace

void write_dyad_markdown(std::ostream& out, const std::vector<DyadResult>& dyads) {
  out << "|  |";
  for (const auto& d : dyads) out << ' ' << display_name(d.aspect) << " | |";
  out << "\n|---|";
  for (std::size_t k = 0; k < dyads.size(); ++k) out << "---|---|";
  out << "\n| Diff. |";
  for (const auto& d : dyads) {
    out << " p=" << p_text(d.permutation ? std::optional<double>(d.permutation->p_value)
                                          : std::nullopt)
        << " | |";
  }
  out << "\n| Diff. (posts) |";
  for (const auto& d : dyads) {
    out << " p=" << p_text(d.post_permutation ? std::optional<double>(d.post_permutation->p_value)
                                               : std::nullopt)
        << " | |";
  }
  out << "\n|  |";
  for (const auto& d : dyads) out << ' ' << d.values[0].group << " | " << d.values[1].group << " |";
  const std::array<std::pair<const char*, double MetricsReport::*>, 3> rows{{
      {"Acc%", &MetricsReport::accuracy},
      {"Micro F1%", &MetricsReport::micro_f1},
      {"Macro F1%", &MetricsReport::macro_f1},
  }};
  for (const auto& [name, field] : rows) {
    out << "\n| " << name << " |";
    for (const auto& d : dyads) {
      for (const auto& v : d.values) out << ' ' << (v.counts.total() ? pct(v.*field) : "-") << " |";
    }
  }
  out << "\n\n| Aspect | Fisher p | YTA/NTA diff % | YTA/NTA (" << "value 1) | YTA/NTA (value 2) |\n"
      << "|---|---|---|---|---|\n";
  for (const auto& d : dyads) {
    out << "| " << display_name(d.aspect) << " | " << p_text(d.fisher_p) << " | "
        << ratio_text(d.ratio_difference_pct) << " | " << d.values[0].group << ' '
        << d.verdicts[0].yta << '/' << d.verdicts[0].nta << " | " << d.values[1].group << ' '
        << d.verdicts[1].yta << '/' << d.verdicts[1].nta << " |\n";
  }
}

void write_dyad_tsv(std::ostream& out, const std::vector<DyadResult>& dyads) {
  out << "aspect\tvalue\tsupport\taccuracy\tmicro_f1\tmacro_f1\tyta\tnta\t"
         "permutation_p\tpermutation_exact\tpost_permutation_p\ttested_better\tfisher_p\t"
         "ratio_diff_pct\n";
  for (const auto& d : dyads) {
    for (std::size_t k = 0; k < 2; ++k) {
      const auto& v = d.values[k];
      out << column_name(d.aspect) << '\t' << v.group << '\t' << v.counts.total() << '\t'
          << pct(v.accuracy) << '\t' << pct(v.micro_f1) << '\t' << pct(v.macro_f1) << '\t'
          << d.verdicts[k].yta << '\t' << d.verdicts[k].nta << '\t'
          << p_text(d.permutation ? std::optional<double>(d.permutation->p_value) : std::nullopt)
          << '\t' << (d.permutation ? (d.permutation->exact ? "exact" : "monte_carlo") : "-")
          << '\t'
          << p_text(d.post_permutation ? std::optional<double>(d.post_permutation->p_value)
                                       : std::nullopt)
          << '\t' << (d.permutation ? (d.better_value == k ? "yes" : "no") : "-") << '\t'
          << p_text(d.fisher_p) << '\t' << ratio_text(d.ratio_difference_pct) << '\n';
    }
  }
}

}  // namespace conflict
