#include <doctest.h>

#include <map>
#include <numeric>
#include <sstream>

#include "conflict/rng.hpp"
#include "conflict/stats.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace conflict;

namespace {

double f1_of(double tp, double fp, double fn) {
  const double d = 2 * tp + fp + fn;
  return d == 0 ? 0.0 : 2 * tp / d;
}

struct Expected {
  double accuracy, macro;
  std::size_t support;
};

// Per-group metrics straight from the definitions.
std::map<std::string, Expected> metrics_oracle(const std::vector<unsigned char>& pred,
                                               const std::vector<unsigned char>& gold,
                                               const std::vector<std::string>& groups) {
  std::map<std::string, std::array<double, 4>> c;  // tp fp fn tn, YTA positive
  for (std::size_t k = 0; k < gold.size(); ++k) {
    for (const std::string& key : {std::string("All"), groups[k]}) {
      auto& x = c[key];
      if (gold[k] && pred[k]) x[0]++;
      if (!gold[k] && pred[k]) x[1]++;
      if (gold[k] && !pred[k]) x[2]++;
      if (!gold[k] && !pred[k]) x[3]++;
    }
  }
  std::map<std::string, Expected> out;
  for (const auto& [key, x] : c) {
    const double n = x[0] + x[1] + x[2] + x[3];
    const double yta = f1_of(x[0], x[1], x[2]);
    const double nta = f1_of(x[3], x[2], x[1]);
    out[key] = {(x[0] + x[3]) / n, (yta + nta) / 2, static_cast<std::size_t>(n)};
  }
  return out;
}

std::vector<unsigned char> ones_then_zeros(std::size_t ones, std::size_t zeros) {
  std::vector<unsigned char> v(ones, 1);
  v.insert(v.end(), zeros, 0);
  return v;
}

}  // namespace

TEST_SUITE("stats") {
  TEST_CASE("metrics match a direct oracle on random instances") {
    Rng rng(31);
    const std::vector<std::string> names{"c0", "c1", "c2", "unclustered"};
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t n = 1 + rng.below(60);
      const auto pred = gen::bits(rng, n, rng.uniform());
      const auto gold = gen::bits(rng, n, rng.uniform());
      std::vector<std::string> groups;
      for (std::size_t k = 0; k < n; ++k) groups.push_back(names[rng.below(names.size())]);
      const auto eval = evaluate(pred, gold, groups);
      const auto expected = metrics_oracle(pred, gold, groups);
      REQUIRE(eval.reports.size() == expected.size());
      CHECK(eval.reports.front().group == "All");
      for (const auto& r : eval.reports) {
        CAPTURE(r.group);
        const auto& e = expected.at(r.group);
        CHECK(r.counts.total() == e.support);
        CHECK(std::abs(r.accuracy - e.accuracy) <= 1e-10);
        CHECK(std::abs(r.macro_f1 - e.macro) <= 1e-10);
        CHECK(std::abs(r.micro_f1 - r.accuracy) <= 1e-12);
        CHECK_FALSE(r.post_weighted_accuracy.has_value());
      }
      for (std::size_t k = 2; k < eval.reports.size(); ++k) {
        CHECK(eval.reports[k - 1].group < eval.reports[k].group);
      }
    }
  }

  TEST_CASE("metric edge cases") {
    ConfusionCounts all_nta;
    for (int k = 0; k < 10; ++k) all_nta.add(false, false);
    CHECK(accuracy(all_nta) == 1.0);
    CHECK(macro_f1(all_nta) == 0.5);  // YTA has no gold and no predictions
    CHECK(accuracy(ConfusionCounts{}) == 0.0);

    const std::vector<unsigned char> p{1, 0}, g{1, 0};
    const std::vector<std::string> groups{"a", "a"};
    const std::vector<std::string> expected{"a", "b"};
    const auto eval = evaluate(p, g, groups, expected);
    CHECK(eval.reports.size() == 2);
    REQUIRE(eval.warnings.size() == 1);
    CHECK(eval.warnings[0].find("b") != std::string::npos);
    CHECK_THROWS_AS(evaluate(p, std::vector<unsigned char>{1}, groups), std::invalid_argument);

    const auto empty = evaluate({}, {}, {});
    CHECK(empty.reports.empty());
    CHECK_FALSE(empty.warnings.empty());
  }

  TEST_CASE("post-weighted metrics give each post equal mass") {
    // post x: 3 verdicts all wrong; post y: 1 verdict right
    const std::vector<unsigned char> pred{1, 1, 1, 0}, gold{0, 0, 0, 0};
    const std::vector<std::string> groups(4, "g"), posts{"x", "x", "x", "y"};
    const auto eval = evaluate(pred, gold, groups, {}, posts);
    REQUIRE(eval.reports[0].post_weighted_accuracy.has_value());
    CHECK(eval.reports[0].accuracy == 0.25);
    CHECK(*eval.reports[0].post_weighted_accuracy == doctest::Approx(0.5));
    CHECK(*eval.reports[1].post_weighted_accuracy == doctest::Approx(0.5));
  }

  TEST_CASE("metrics TSV and markdown") {
    const auto eval = evaluate(std::vector<unsigned char>{1, 0, 1}, std::vector<unsigned char>{1, 0, 0},
                               std::vector<std::string>{"g", "g", "h"});
    std::ostringstream tsv, md;
    write_metrics_tsv(tsv, eval.reports);
    write_metrics_markdown(md, eval.reports, "Cluster");
    CHECK(tsv.str().rfind("group\tsupport", 0) == 0);
    CHECK(tsv.str().find("\nAll\t3\t1\t1\t0\t1\t") != std::string::npos);
    CHECK(md.str().find("| Cluster | F1% | Acc% |") == 0);
    CHECK(md.str().find("| g | 100.0 | 100.0 |") != std::string::npos);
  }

  TEST_CASE("permutation test reference values") {
    const auto a = ones_then_zeros(10, 0);
    const auto b = ones_then_zeros(0, 10);
    const auto r = permutation_test(a, b);
    CHECK(r.exact);
    CHECK(r.p_value == doctest::Approx(1.0 / 184756).epsilon(1e-12));
    CHECK(r.observed_difference == 1.0);

    const auto same = permutation_test(ones_then_zeros(5, 5), ones_then_zeros(5, 5));
    CHECK(same.p_value >= 0.5);
    CHECK(same.observed_difference == 0.0);

    CHECK_THROWS(permutation_test(a, std::vector<unsigned char>{}));
  }

  TEST_CASE("exact permutation matches subset enumeration") {
    Rng rng(32);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t na = 1 + rng.below(8);
      const std::size_t nb = 1 + rng.below(8);
      const auto a = gen::bits(rng, na, rng.uniform());
      const auto b = gen::bits(rng, nb, rng.uniform());
      PermutationOptions opts;
      opts.seed = rng.below(1000);
      const auto r = permutation_test(a, b, opts);
      REQUIRE(r.exact);
      CHECK(std::abs(r.p_value - oracle::permutation_enumerated(a, b)) <= 1e-12);
      opts.seed += 17;
      CHECK(permutation_test(a, b, opts).p_value == r.p_value);

      std::vector<double> da(a.begin(), a.end()), db(b.begin(), b.end());
      CHECK(std::abs(permutation_test_means(da, db, opts).p_value - r.p_value) <= 1e-12);
    }
  }

  TEST_CASE("Monte Carlo permutation approaches the exact value") {
    Rng rng(33);
    for (int trial = 0; trial < 5; ++trial) {
      const auto a = gen::bits(rng, 6, 0.7);
      const auto b = gen::bits(rng, 6, 0.3);
      PermutationOptions opts;
      opts.exact_limit = 0;
      opts.resamples = 100000;
      opts.seed = 100 + static_cast<std::uint64_t>(trial);
      const auto mc = permutation_test(a, b, opts);
      CHECK_FALSE(mc.exact);
      CHECK(std::abs(mc.p_value - oracle::permutation_enumerated(a, b)) <= 0.01);
      CHECK(mc.p_value >= 1.0 / 100001);
      CHECK(permutation_test(a, b, opts).p_value == mc.p_value);
    }
  }

  TEST_CASE("permutation on real-valued units") {
    const std::vector<double> a{1.0, 0.9, 0.8}, b{0.1, 0.2, 0.0};
    const auto r = permutation_test_means(a, b);
    CHECK(r.exact);
    CHECK(r.p_value == doctest::Approx(1.0 / 20).epsilon(1e-12));
    CHECK(r.observed_difference == doctest::Approx(0.8));

    // brute force over every subset of the pooled units
    Rng rng(34);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> x(1 + rng.below(5)), y(1 + rng.below(5));
      for (auto& v : x) v = static_cast<double>(rng.below(5)) / 4;
      for (auto& v : y) v = static_cast<double>(rng.below(5)) / 4;
      std::vector<double> pool(x);
      pool.insert(pool.end(), y.begin(), y.end());
      const double total = std::accumulate(pool.begin(), pool.end(), 0.0);
      const double obs = std::accumulate(x.begin(), x.end(), 0.0);
      std::size_t hits = 0, count = 0;
      for (std::uint32_t mask = 0; mask < (1u << pool.size()); ++mask) {
        if (static_cast<std::size_t>(__builtin_popcount(mask)) != x.size()) continue;
        double s = 0;
        for (std::size_t k = 0; k < pool.size(); ++k) {
          if (mask >> k & 1u) s += pool[k];
        }
        ++count;
        hits += s >= obs - 1e-9 * std::max(1.0, std::abs(total));
      }
      CHECK(permutation_test_means(x, y).p_value ==
            doctest::Approx(static_cast<double>(hits) / static_cast<double>(count)).epsilon(1e-12));

      PermutationOptions mc;
      mc.exact_limit = 0;
      mc.resamples = 50000;
      mc.seed = 9;
      CHECK(std::abs(permutation_test_means(x, y, mc).p_value -
                     static_cast<double>(hits) / static_cast<double>(count)) <= 0.02);
    }
  }

  TEST_CASE("Fisher exact test reference values") {
    ContingencyTable2x2 t;
    t.counts = {{{5, 0}, {0, 5}}};
    CHECK(fisher_exact(t) == doctest::Approx(2.0 / 252).epsilon(1e-12));
    t.counts = {{{2, 2}, {2, 2}}};
    CHECK(fisher_exact(t) == doctest::Approx(1.0));
    t.counts = {{{3, 0}, {0, 0}}};
    CHECK(t.degenerate());
    CHECK(fisher_exact(t) == 1.0);
  }

  TEST_CASE("Fisher matches integer enumeration for all small tables") {
    std::size_t tables = 0;
    for (std::uint64_t a = 0; a <= 6; ++a) {
      for (std::uint64_t b = 0; b <= 6; ++b) {
        for (std::uint64_t c = 0; c <= 6; ++c) {
          for (std::uint64_t d = 0; d <= 6; ++d) {
            ContingencyTable2x2 t;
            t.counts = {{{a, b}, {c, d}}};
            CAPTURE(a);
            CAPTURE(b);
            CAPTURE(c);
            CAPTURE(d);
            const double p = fisher_exact(t);
            CHECK(std::abs(p - oracle::fisher_enumerated(t)) <= 1e-10);
            CHECK(p > 0.0);
            CHECK(p <= 1.0);
            if (!t.degenerate()) {
              const auto probs = hypergeometric_tables(t);
              CHECK(std::abs(std::accumulate(probs.begin(), probs.end(), 0.0) - 1.0) <= 1e-12);
            }
            ++tables;
          }
        }
      }
    }
    CHECK(tables == 2401);
  }

  TEST_CASE("YTA/NTA ratio difference") {
    CHECK(*verdict_ratio_difference({10, 20}, {3, 30}) == doctest::Approx(40.0));
    CHECK(*verdict_ratio_difference({50, 100}, {39, 100}) == doctest::Approx(11.0));
    CHECK(*verdict_ratio_difference({7, 9}, {7, 9}) == 0.0);
    CHECK_FALSE(verdict_ratio_difference({4, 0}, {1, 1}).has_value());
    CHECK_FALSE(verdict_ratio_difference({1, 1}, {4, 0}).has_value());
  }

  TEST_CASE("dyad analysis on a small crafted set") {
    std::vector<GoldLabels> gold;
    std::vector<ScoredVerdict> verdicts;
    for (int p = 0; p < 20; ++p) {
      GoldLabels g;
      g.post_id = "p" + std::to_string(p);
      g.annotators = 2;
      for (Aspect a : kAspects) g.labels[static_cast<std::size_t>(a)] = merged_labels(a)[p % 2];
      if (p == 0) g.labels[0].reset();  // tied disagreement
      gold.push_back(g);
      for (int v = 0; v < 3; ++v) {
        const unsigned char gl = (p + v) % 3 == 0;
        // posts with value 0 are always right, value 1 posts miss every other verdict
        const unsigned char pr = (p % 2 == 0 || v % 2 == 0) ? gl : 1 - gl;
        verdicts.push_back({g.post_id, gl, pr});
      }
    }
    verdicts.push_back({"unknown", 1, 1});
    PermutationOptions opts;
    opts.resamples = 2000;
    opts.seed = 1;
    const auto dyads = dyad_analysis(verdicts, gold, opts);
    REQUIRE(dyads.size() == kAspectCount);
    const auto& d = dyads[1];
    CHECK(d.values[0].counts.total() == 30);
    CHECK(d.values[1].counts.total() == 30);
    CHECK(d.values[0].accuracy == 1.0);
    CHECK(d.better_value == 0);
    REQUIRE(d.permutation.has_value());
    REQUIRE(d.post_permutation.has_value());
    CHECK(d.permutation->p_value < 0.01);
    CHECK(d.post_permutation->p_value < 0.01);
    CHECK(d.verdicts[0].yta + d.verdicts[0].nta == 30);
    REQUIRE(d.fisher_p.has_value());
    CHECK(dyads[0].values[0].counts.total() == 27);  // tied post left out

    CHECK(dyad_analysis(verdicts, gold, opts)[1].permutation->p_value == d.permutation->p_value);

    std::ostringstream md, tsv;
    write_dyad_markdown(md, dyads);
    write_dyad_tsv(tsv, dyads);
    CHECK(md.str().find("Num. People") != std::string::npos);
    const std::string rows = tsv.str();
    CHECK(std::count(rows.begin(), rows.end(), '\n') == 1 + 2 * kAspectCount);

    const auto one_sided = dyad_analysis({{"p1", 1, 1}}, gold, opts);
    CHECK_FALSE(one_sided[1].permutation.has_value());
    CHECK_FALSE(one_sided[1].warnings.empty());
  }
}
