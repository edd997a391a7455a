#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "cran/fronthaul.hpp"

using namespace cran;
using namespace cran::fronthaul;

TEST_CASE("CPRI line rate") {
  FronthaulSpec s;
  CHECK(cpri_rate_bps(s) == doctest::Approx(1.2288e9).epsilon(1e-12));
  auto two = s;
  two.antennas = 2;
  CHECK(cpri_rate_bps(two) == doctest::Approx(2.0 * cpri_rate_bps(s)).epsilon(1e-14));
  auto idle = s;
  idle.cell_load = 0.0;
  CHECK(cpri_rate_bps(idle) == cpri_rate_bps(s));
  for (int bits : {2, 4, 6}) {
    auto m = s;
    m.modulation_bits = bits;
    CHECK(cpri_rate_bps(m) == cpri_rate_bps(s));
  }
}

TEST_CASE("split downlink hard bits") {
  FronthaulSpec s;
  CHECK(split6_downlink_rate_bps(s) == doctest::Approx(100.8e6).epsilon(1e-12));
  CHECK(std::abs(split6_downlink_rate_bps(s) - 100e6) / 100e6 < 0.01);
  auto qpsk = s;
  qpsk.modulation_bits = 2;
  CHECK(split6_downlink_rate_bps(qpsk) == doctest::Approx(split6_downlink_rate_bps(s) / 3.0).epsilon(1e-14));
  auto layers = s;
  layers.antennas = 2;
  CHECK(split6_downlink_rate_bps(layers) == doctest::Approx(2.0 * split6_downlink_rate_bps(s)));
  auto half = s;
  half.cell_load = 0.5;
  CHECK(split6_downlink_rate_bps(half) == doctest::Approx(0.5 * split6_downlink_rate_bps(s)));
}

TEST_CASE("split uplink soft bits") {
  FronthaulSpec s;
  CHECK(split6_uplink_rate_bps(s) == doctest::Approx(806.4e6).epsilon(1e-12));
  auto hard = s;
  hard.llr_bits = 1;
  CHECK(split6_uplink_rate_bps(hard) == doctest::Approx(split6_downlink_rate_bps(s)));
  CHECK(split6_uplink_rate_bps(s) / split6_downlink_rate_bps(s) == doctest::Approx(8.0));
}

TEST_CASE("rates are monotone in modulation and LLR width") {
  FronthaulSpec s;
  double prev_dl = 0.0, prev_ul = 0.0;
  for (int bits : {2, 4, 6}) {
    s.modulation_bits = bits;
    CHECK(split6_downlink_rate_bps(s) > prev_dl);
    CHECK(split6_uplink_rate_bps(s) > prev_ul);
    prev_dl = split6_downlink_rate_bps(s);
    prev_ul = split6_uplink_rate_bps(s);
  }
  prev_ul = 0.0;
  for (int llr = 1; llr <= 16; ++llr) {
    s.llr_bits = llr;
    CHECK(split6_uplink_rate_bps(s) > prev_ul);
    prev_ul = split6_uplink_rate_bps(s);
  }
}

TEST_CASE("latency and distance") {
  CHECK(latency_to_distance_km(1.130) == doctest::Approx(254.25).epsilon(1e-12));
  CHECK(std::abs(latency_to_distance_km(1.130) - 250.0) / 250.0 < 0.02);
  CHECK(latency_to_distance_km(0.0) == 0.0);
  for (double ms : {0.0, 0.001, 0.1, 1.13, 2.5, 17.0})
    CHECK(std::abs(distance_to_latency_ms(latency_to_distance_km(ms)) - ms) < 1e-12);
  CHECK_THROWS_AS(latency_to_distance_km(-1.0), ValidationError);
}

TEST_CASE("aggregation report") {
  const FronthaulSpec s;
  const auto r = aggregation_report(100, s);
  CHECK(r.cpri_total_bps == doctest::Approx(122.88e9));
  CHECK(r.split_dl_total_bps == doctest::Approx(10.08e9));
  CHECK(r.cpri_over_split_dl == doctest::Approx(1.2288e9 / 100.8e6));
  CHECK(r.cpri_over_split_dl == doctest::Approx(12.2).epsilon(0.01));
  CHECK_FALSE(r.cpri_traffic_dependent);
  CHECK(r.split_traffic_dependent);

  const auto one = aggregation_report(1, s);
  CHECK(one.cpri_total_bps == cpri_rate_bps(s));
  CHECK(one.split_dl_total_bps == split6_downlink_rate_bps(s));
  CHECK(one.split_ul_total_bps == split6_uplink_rate_bps(s));
  CHECK_THROWS_AS(aggregation_report(0, s), ValidationError);
}

TEST_CASE("numerology and validation") {
  const auto s10 = FronthaulSpec::for_bandwidth(10.0);
  CHECK(s10.n_prb == 50);
  CHECK(cpri_rate_bps(s10) == doctest::Approx(cpri_rate_bps(FronthaulSpec{}) / 2.0));
  CHECK_THROWS_AS(FronthaulSpec::for_bandwidth(7.0), ValidationError);
  FronthaulSpec bad;
  bad.modulation_bits = 3;
  CHECK_THROWS_AS(cpri_rate_bps(bad), ValidationError);
  bad = {};
  bad.line_coding_overhead = 0.9;
  CHECK_THROWS_AS(split6_downlink_rate_bps(bad), ValidationError);
}
