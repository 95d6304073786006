#include <doctest.h>

#include <cmath>

#include "ccppm/error.hpp"
#include "ccppm/simgen.hpp"
#include "oracles.hpp"

using namespace ccppm;

namespace {

// Batch-means estimate of E[f] and its standard error.
struct Est {
  double mean;
  double se;
};
Est batch(const std::vector<double>& v, std::size_t batches = 100) {
  const std::size_t m = v.size() / batches;
  std::vector<double> means;
  for (std::size_t b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t k = 0; k < m; ++k) s += v[b * m + k];
    means.push_back(s / m);
  }
  return {oracle::mean(means), std::sqrt(oracle::variance(means) / batches)};
}

StudyConfig quick_config() {
  StudyConfig cfg;
  cfg.mcmc.n_burn = 20;
  cfg.mcmc.n_thin = 1;
  cfg.mcmc.n_save = 20;
  cfg.marglik = MargLikParams{0, 1, 2, 1};
  cfg.seed = 77;
  cfg.threads = 2;
  return cfg;
}

}  // namespace

TEST_CASE("presets") {
  const auto t2 = scenario_preset("type2");
  CHECK(t2.kind == ScenarioKind::FixedBlocks);
  CHECK(t2.locations == std::vector<std::size_t>{25, 50, 75});
  CHECK(t2.mu_star[1] == std::vector<double>{2, 1, 0, -1});
  CHECK(t2.sigma_star[0] == std::vector<double>{0.1, 0.25, 0.5, 0.75});
  const auto t3 = scenario_preset("type3");
  CHECK(t3.sigma_star[1] == std::vector<double>{0.1, 2.0, 0.5, 1.0});
  const auto t1 = scenario_preset("type1");
  CHECK(t1.kind == ScenarioKind::Type1);
  CHECK(t1.generating_prior->sigma0()(0, 1) == doctest::Approx(9.0));
  CHECK_THROWS_AS(scenario_preset("type4"), ConfigError);

  auto bad = t2;
  bad.locations = {25, 25, 75};
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  bad.locations = {0, 50, 75};
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  bad.locations = {25, 50, 100};
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  bad = t2;
  bad.sigma_star[0][2] = 0.0;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
}

TEST_CASE("fixed blocks") {
  for (const char* name : {"type2", "type3"}) {
    const auto spec = scenario_preset(name);
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      Rng rng(seed);
      const auto d = gen_fixed(spec, rng);
      REQUIRE(d.series.size() == 2);
      for (std::size_t i = 0; i < 2; ++i) {
        CHECK(d.series[i].y.size() == 100);
        CHECK(d.truth[i].change_times() == std::vector<std::size_t>{26, 51, 76});
        const auto blocks = blocks_from_indicators(d.truth[i]);
        REQUIRE(blocks.num_blocks() == 4);
        for (std::size_t b = 0; b < 4; ++b) {
          const auto& iv = blocks.blocks()[b];
          CHECK(iv.size() == 25);
          double m = 0.0;
          for (std::size_t t = iv.first; t <= iv.last; ++t) m += d.series[i].y[t - 1];
          m /= 25.0;
          CHECK(std::abs(m - spec.mu_star[i][b]) < 4 * spec.sigma_star[i][b] / 5.0);
        }
        // truth round trip
        CHECK(indicators_from_labels(labels_from_indicators(d.truth[i])) == d.truth[i]);
        CHECK(indicators_from_blocks(blocks) == d.truth[i]);
      }
    }
    Rng a(9), b(9);
    const auto x = gen_fixed(spec, a), y = gen_fixed(spec, b);
    CHECK(x.series[0].y == y.series[0].y);
    CHECK(x.series[1].y == y.series[1].y);
  }
}

TEST_CASE("sigma as variance") {
  ScenarioSpec s;
  s.kind = ScenarioKind::FixedBlocks;
  s.n = 20000;
  s.L = 1;
  s.locations = {10000};
  s.mu_star = {{0.0, 0.0}};
  s.sigma_star = {{4.0, 0.25}};
  s.sigma_is_sd = false;
  Rng rng(3);
  const auto d = gen_fixed(s, rng);
  const std::span<const double> y(d.series[0].y);
  CHECK(std::sqrt(oracle::variance(y.subspan(0, 10000))) == doctest::Approx(2.0).epsilon(0.03));
  CHECK(std::sqrt(oracle::variance(y.subspan(10000))) == doctest::Approx(0.5).epsilon(0.03));
  s.sigma_is_sd = true;
  Rng rng2(3);
  const auto e = gen_fixed(s, rng2);
  CHECK(std::sqrt(oracle::variance(std::span<const double>(e.series[0].y).subspan(0, 10000))) ==
        doctest::Approx(4.0).epsilon(0.03));
}

TEST_CASE("type1 change counts follow the generating prior") {
  const auto spec = scenario_preset("type1");
  const auto& prior = *spec.generating_prior;
  const auto cm = count_moments(prior, 0, 1, spec.n);
  Rng rng(42);
  const std::size_t reps = 10000;
  std::vector<double> k1, k2, prod, sq1, y2;
  for (std::size_t r = 0; r < reps; ++r) {
    const auto d = gen_type1(spec, rng);
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(d.truth[i].num_blocks() == d.truth[i].num_changes() + 1);
      CHECK(blocks_from_indicators(d.truth[i]).num_blocks() == d.truth[i].num_blocks());
    }
    k1.push_back(static_cast<double>(d.truth[0].num_changes()));
    k2.push_back(static_cast<double>(d.truth[1].num_changes()));
    y2.push_back(oracle::mean(d.series[1].y));
  }
  const auto m1 = batch(k1), m2 = batch(k2);
  CHECK(std::abs(m1.mean - cm.mean_i) < 3 * m1.se);
  CHECK(std::abs(m2.mean - cm.mean_s) < 3 * m2.se);
  for (std::size_t r = 0; r < reps; ++r) prod.push_back((k1[r] - cm.mean_i) * (k2[r] - cm.mean_s));
  const auto cov = batch(prod);
  CHECK(std::abs(cov.mean - cm.covariance) < 3 * cov.se);
  const double corr = cov.mean / std::sqrt(oracle::variance(k1) * oracle::variance(k2));
  CHECK(corr > 0.0);
  CHECK(cm.correlation > 0.0);
  // series 2 block means are centred at 4
  CHECK(std::abs(oracle::mean(y2) - 4.0) < 0.05);
}

TEST_CASE("study harness") {
  const auto spec = scenario_preset("type2");
  auto cfg = quick_config();
  const std::vector<Method> both{Method::CcpPpm, Method::IndepPpm};

  const auto empty = run_study(0, spec, both, cfg);
  CHECK(empty.replicates.empty());

  std::size_t done = 0;
  const auto five = run_study(5, spec, both, cfg, [&](std::size_t) { ++done; });
  CHECK(done == 5);
  REQUIRE(five.replicates.size() == 5);
  for (std::size_t r = 0; r < 5; ++r) {
    const auto& rep = five.replicates[r];
    CHECK(rep.replicate == r);
    CHECK(rep.data_seed == derive_seed(cfg.seed, 2 * r));
    CHECK(rep.fit_seed == derive_seed(cfg.seed, 2 * r + 1));
    REQUIRE(rep.metrics.size() == 2);
    CHECK(rep.metrics[0].method == Method::CcpPpm);
    for (const auto& m : rep.metrics) {
      for (double a : m.ari) CHECK(a <= 1.0 + 1e-12);
      CHECK((m.pooled.misclassification >= 0.0 && m.pooled.misclassification <= 1.0));
      if (m.pooled.sensitivity) CHECK((*m.pooled.sensitivity >= 0.0 && *m.pooled.sensitivity <= 1.0));
      if (m.pooled.specificity) CHECK((*m.pooled.specificity >= 0.0 && *m.pooled.specificity <= 1.0));
      if (m.acceptance_rate) CHECK((*m.acceptance_rate >= 0.0 && *m.acceptance_rate <= 1.0));
    }
    CHECK(rep.metrics[0].acceptance_rate.has_value());
    CHECK_FALSE(rep.metrics[1].acceptance_rate.has_value());
  }
  CHECK(five.summaries().size() == 2);

  // replicate r depends only on (seed, r): fewer replicates and one thread give the same data and fits
  cfg.threads = 1;
  const auto three = run_study(3, spec, both, cfg);
  for (std::size_t r = 0; r < 3; ++r) {
    CHECK(three.replicates[r].data.series[0].y == five.replicates[r].data.series[0].y);
    CHECK(three.replicates[r].metrics[0].ari == five.replicates[r].metrics[0].ari);
  }
  cfg.seed = 78;
  CHECK(run_study(1, spec, both, cfg).replicates[0].data.series[0].y != five.replicates[0].data.series[0].y);

  CHECK(parse_method("ccp_ppm") == Method::CcpPpm);
  CHECK(parse_method("indep") == Method::IndepPpm);
  CHECK(to_string(Method::IndepPpm) == "indep_ppm");
  CHECK_THROWS_AS(parse_method("loschi"), ConfigError);
}
