#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <numeric>

#include "cran/model.hpp"

using namespace cran;

TEST_CASE("offered load") {
  SUBCASE("half load") {
    auto l = offered_load(WorkloadSpec(1.0, BatchLaw::deterministic(2), 1.0), 4);
    CHECK(l.rho == doctest::Approx(0.5));
    CHECK(l.stable);
  }
  SUBCASE("boundary is unstable") {
    auto l = offered_load(WorkloadSpec(1.0, BatchLaw::deterministic(4), 1.0), 4);
    CHECK(l.rho == doctest::Approx(1.0));
    CHECK_FALSE(l.stable);
  }
  SUBCASE("100 cells on 151 cores") {
    auto l = offered_load(WorkloadSpec(100.0, BatchLaw::geometric(0.5), 2.0), 151);
    CHECK(l.rho == doctest::Approx(200.0 / 302.0).epsilon(1e-12));
    CHECK(l.stable);
  }
  SUBCASE("monotone in C and lambda") {
    const WorkloadSpec w(3.0, BatchLaw::geometric(0.3), 1.5);
    for (int c = 1; c < 40; ++c) CHECK(offered_load(w, c + 1).rho < offered_load(w, c).rho);
    for (double lam = 0.5; lam < 10.0; lam += 0.5)
      CHECK(offered_load(WorkloadSpec(lam, w.batch, 1.5), 7).rho <
            offered_load(WorkloadSpec(lam + 0.5, w.batch, 1.5), 7).rho);
  }
  CHECK_THROWS_AS(offered_load(WorkloadSpec(1.0, BatchLaw::deterministic(1), 1.0), 0), ValidationError);
}

TEST_CASE("subframe service mean") {
  CHECK(subframe_service_mean(WorkloadSpec(1.0, BatchLaw::geometric(0.0), 1.0)) == doctest::Approx(1.0));
  CHECK(subframe_service_mean(WorkloadSpec(1.0, BatchLaw::geometric(0.5), 2.0)) == doctest::Approx(1.0));
  CHECK(subframe_service_mean(WorkloadSpec(1.0, BatchLaw::geometric(0.9), 1.0)) == doctest::Approx(10.0));
  CHECK_THROWS_AS(subframe_service_mean(WorkloadSpec(1.0, BatchLaw::deterministic(3), 1.0)), ValidationError);
}

TEST_CASE("batch law validation and moments") {
  CHECK_THROWS_AS(BatchLaw::geometric(1.0), ValidationError);
  CHECK_THROWS_AS(BatchLaw::geometric(-0.1), ValidationError);
  CHECK_THROWS_AS(BatchLaw::deterministic(0), ValidationError);
  CHECK_THROWS_AS(BatchLaw::empirical({{1, 0.5}, {2, 0.4}}), ValidationError);
  CHECK_THROWS_AS(BatchLaw::empirical({{0, 0.5}, {2, 0.5}}), ValidationError);
  CHECK_THROWS_AS(WorkloadSpec(0.0, BatchLaw::deterministic(1), 1.0), ValidationError);
  CHECK_THROWS_AS(WorkloadSpec(1.0, BatchLaw::deterministic(1), -1.0), ValidationError);

  auto e = BatchLaw::empirical({{1, 0.25}, {3, 0.75}});
  CHECK(e.mean() == doctest::Approx(2.5));
  CHECK(e.at_least(2) == doctest::Approx(0.75));
  CHECK(BatchLaw::geometric(0.5).at_least(3) == doctest::Approx(0.25));

  auto pmf = BatchLaw::geometric(0.6).truncated_pmf(1e-12);
  CHECK(pmf[0] == 0.0);
  CHECK(std::accumulate(pmf.begin(), pmf.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::pow(0.6, static_cast<double>(pmf.size() - 1)) < 1e-12);
}

TEST_CASE("geometric sample mean converges") {
  for (double q : {0.0, 0.3, 0.6, 0.9}) {
    Rng rng(17);
    auto law = BatchLaw::geometric(q);
    double sum = 0.0;
    const int n = 1'000'000;
    for (int i = 0; i < n; ++i) sum += law.sample(rng);
    CHECK(std::abs(sum / n - law.mean()) / law.mean() < 0.01);
  }
}

TEST_CASE("system and target validation") {
  CHECK_THROWS_AS(SystemSpec(0), ValidationError);
  CHECK_THROWS_AS(SystemSpec(4, Dedicated{{2, 1}}), ValidationError);
  CHECK_THROWS_AS(SystemSpec(4, Dedicated{{4, 0}}), ValidationError);
  CHECK_NOTHROW(SystemSpec(4, Dedicated{{3, 1}}));
  CHECK_THROWS_AS(SystemSpec(4, GreedyFcfs{}, BatchDeadline{0.0}), ValidationError);
  CHECK_THROWS_AS(LatencyTarget(0.0, 0.1), ValidationError);
  CHECK_THROWS_AS(LatencyTarget(1.0, 1.0), ValidationError);
  CHECK_THROWS_AS(LatencyTarget(1.0, 0.0), ValidationError);
}

TEST_CASE("code block segmentation") {
  CHECK(code_block_count(6144, 6144) == 1);
  CHECK(code_block_count(6145, 6144) == 2);
  CHECK(code_block_count(12000, 6144) == 2);  // ceil(12000 / 6120)
  CHECK(code_block_count(12241, 6144) == 3);
  CHECK(code_block_count(40, 6144) == 1);

  auto cbs = decompose({12000}, Parallelism::PerCB, 6144);
  CHECK(cbs.size() == 2);
  auto ues = decompose({100, 200, 300}, Parallelism::PerUE, 6144);
  CHECK(ues.size() == 3);
  auto sf = decompose({100, 200, 300}, Parallelism::Subframe, 6144);
  REQUIRE(sf.size() == 1);
  CHECK(sf[0] == 600);

  RadioWorkload bad;
  bad.cb_max_bits = 39;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("decomposition conserves bits for every seed and mode") {
  RadioWorkload r;
  r.ue_law = BatchLaw::geometric(0.7);
  r.tb_bits_law = UniformBits{1, 75376};
  r.validate();
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    Rng rng(seed);
    const auto tbs = sample_subframe(r, rng);
    const auto total = std::accumulate(tbs.begin(), tbs.end(), std::int64_t{0});
    for (auto mode : {Parallelism::Subframe, Parallelism::PerUE, Parallelism::PerCB}) {
      const auto jobs = decompose(tbs, mode, r.cb_max_bits);
      CHECK(std::accumulate(jobs.begin(), jobs.end(), std::int64_t{0}) == total);
      for (auto j : jobs) CHECK(j >= 1);
      if (mode == Parallelism::PerCB) {
        std::int64_t expected = 0;
        for (auto tb : tbs) expected += code_block_count(tb, r.cb_max_bits);
        CHECK(static_cast<std::int64_t>(jobs.size()) == expected);
        for (auto j : jobs) CHECK(j <= r.cb_max_bits);
      }
    }
  }
}
