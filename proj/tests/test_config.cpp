#include <doctest.h>

#include "conflict/config.hpp"

using namespace conflict;

namespace {

const std::string kMinimal =
    "[paths]\noutput_dir = out\n"
    "[cluster]\nseed = 1\n"
    "[split]\nseed = 2\n"
    "[train]\nseed = 3\n"
    "[analyze]\nseed = 4\n";

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("defaults and required seeds") {
    const auto cfg = parse_config(kMinimal, {}, "/base");
    CHECK(cfg.paths.output_dir == std::filesystem::path("/base/out"));
    CHECK(cfg.paths.corpus.empty());
    CHECK(cfg.cluster.cutoffs() == std::vector<int>{0, 10, 20, 30, 40, 50, 60, 70, 80, 90});
    CHECK(cfg.cluster.min_cluster_size == 26);
    CHECK_FALSE(cfg.cluster.situation_cutoff.has_value());
    CHECK(cfg.train.epochs == 10);
    CHECK(cfg.train.learning_rate == 1e-4);
    CHECK(cfg.train.focal_gamma == 2.0);
    CHECK_FALSE(cfg.train.focal_alpha.has_value());
    CHECK(cfg.train.batch_size == 32);
    CHECK(cfg.split.ratios.train == 70);
    CHECK(cfg.split.stratify_by == StratifyBy::FullTextCluster);
    CHECK(cfg.permutation.resamples == 100000);
    CHECK(cfg.cluster.seed == 1);
    CHECK(cfg.permutation.seed == 4);
    CHECK(cfg.sha256.size() == 64);
    CHECK(cfg.sha256 == sha256_hex(cfg.canonical));
    CHECK(cfg.canonical.find("train.learning_rate = 1e-4\n") != std::string::npos);

    for (const char* seed : {"cluster", "split", "train", "analyze"}) {
      std::string text = kMinimal;
      const auto at = text.find("[" + std::string(seed) + "]\nseed");
      text.erase(text.find('\n', at + 1) + 1, text.find('\n', text.find('\n', at + 1) + 1) -
                                                  text.find('\n', at + 1));
      CAPTURE(text);
      CHECK_THROWS_AS(parse_config(text), ConfigError);
    }
  }

  TEST_CASE("overrides win over the file and change the hash") {
    const auto base = parse_config(kMinimal);
    const auto over = parse_config(kMinimal, {"train.epochs=3", "cluster.seed=9"});
    CHECK(over.train.epochs == 3);
    CHECK(over.cluster.seed == 9);
    CHECK(over.sha256 != base.sha256);
    CHECK(parse_config(kMinimal).sha256 == base.sha256);
    // same effective values, same hash
    std::string explicit_default = kMinimal;
    explicit_default.replace(explicit_default.find("[train]\n"), 8, "[train]\nepochs = 10\n");
    CHECK(parse_config(explicit_default).sha256 == base.sha256);
    CHECK_THROWS_AS(parse_config(kMinimal + "[train]\nepochs = 10\n"), ConfigError);
    CHECK(parse_config(kMinimal, {"train.epochs=10"}).sha256 == base.sha256);
  }

  TEST_CASE("invalid configurations") {
    CHECK_THROWS_AS(parse_config(kMinimal + "[train]\nepoch = 3\n"), ConfigError);
    CHECK_THROWS_AS(parse_config(kMinimal, {"train.epoch=3"}), ConfigError);
    CHECK_THROWS_AS(parse_config(kMinimal, {"no_equals_sign"}), ConfigError);
    CHECK_THROWS_AS(parse_config(kMinimal, {"train.epochs=0"}), ConfigError);
    CHECK_THROWS_AS(parse_config(kMinimal, {"train.epochs=ten"}), ConfigError);
    CHECK_THROWS_AS(parse_config(kMinimal, {"train.learning_rate=-1"}), ConfigError);
    CHECK_THROWS_AS(parse_config(kMinimal, {"split.train=80"}), ConfigError);
    CHECK_THROWS_AS(parse_config(kMinimal, {"split.stratify_by=topic"}), ConfigError);
    CHECK_THROWS_AS(parse_config(kMinimal, {"cluster.situation_cutoff=45"}), ConfigError);
    CHECK_THROWS_AS(parse_config("stray = 1\n" + kMinimal), ConfigError);
    CHECK_THROWS_AS(parse_config("[paths\n"), ConfigError);
    CHECK(parse_config(kMinimal, {"cluster.situation_cutoff=40"}).cluster.situation_cutoff == 40);
    CHECK(parse_config(kMinimal, {"train.focal_alpha=0.25"}).train.focal_alpha == 0.25);
    CHECK_THROWS_AS(load_config("/nonexistent/pipeline.ini"), ConfigError);
  }

  TEST_CASE("sha256 reference digests") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  }
}
