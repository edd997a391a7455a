#include "cran/fronthaul.hpp"

#include <array>
#include <cmath>
#include <string>

namespace cran::fronthaul {

namespace {

struct Numerology {
  double mhz;
  int n_prb;
  double msps;
};

constexpr std::array<Numerology, 6> kLte{{
    {1.4, 6, 1.92},
    {3.0, 15, 3.84},
    {5.0, 25, 7.68},
    {10.0, 50, 15.36},
    {15.0, 75, 23.04},
    {20.0, 100, 30.72},
}};

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError("fronthaul: " + what);
}

// resource elements per millisecond subframe, all counted as data
double coded_bits_per_subframe(const FronthaulSpec& s) {
  return static_cast<double>(s.n_prb) * s.subcarriers_per_prb * s.symbols_per_subframe * s.modulation_bits *
         s.antennas;
}

}  // namespace

void FronthaulSpec::validate() const {
  bool known = false;
  for (const auto& n : kLte) known |= std::abs(n.mhz - cell_bandwidth_mhz) < 1e-9;
  require(known, "cell bandwidth must be one of 1.4, 3, 5, 10, 15, 20 MHz");
  require(n_prb > 0 && antennas > 0 && iq_sample_bits > 0 && llr_bits > 0, "counts must be positive");
  require(symbols_per_subframe > 0 && subcarriers_per_prb > 0, "counts must be positive");
  require(sample_rate_msps > 0.0 && fiber_speed_mps > 0.0, "rates must be positive");
  require(modulation_bits == 2 || modulation_bits == 4 || modulation_bits == 6, "modulation bits must be 2, 4 or 6");
  require(line_coding_overhead >= 1.0 && cpri_control_overhead >= 1.0, "overheads must be >= 1");
  require(cell_load >= 0.0 && cell_load <= 1.0, "cell load must lie in [0, 1]");
}

FronthaulSpec FronthaulSpec::for_bandwidth(double mhz) {
  for (const auto& n : kLte) {
    if (std::abs(n.mhz - mhz) < 1e-9) {
      FronthaulSpec s;
      s.cell_bandwidth_mhz = n.mhz;
      s.n_prb = n.n_prb;
      s.sample_rate_msps = n.msps;
      return s;
    }
  }
  throw ValidationError("fronthaul: unsupported cell bandwidth " + std::to_string(mhz) + " MHz");
}

double cpri_rate_bps(const FronthaulSpec& s) {
  s.validate();
  return s.sample_rate_msps * 1e6 * 2.0 * s.iq_sample_bits * s.antennas * s.cpri_control_overhead *
         s.line_coding_overhead;
}

double split6_downlink_rate_bps(const FronthaulSpec& s) {
  s.validate();
  return coded_bits_per_subframe(s) * 1e3 * s.cell_load;
}

double split6_uplink_rate_bps(const FronthaulSpec& s) {
  s.validate();
  return coded_bits_per_subframe(s) * s.llr_bits * 1e3 * s.cell_load;
}

double latency_to_distance_km(double budget_ms, const FronthaulSpec& s) {
  if (!(budget_ms >= 0.0)) throw ValidationError("fronthaul: latency budget must be >= 0");
  return s.fiber_speed_mps * budget_ms * 1e-3 / 1e3;
}

double distance_to_latency_ms(double km, const FronthaulSpec& s) {
  if (!(km >= 0.0)) throw ValidationError("fronthaul: distance must be >= 0");
  return km * 1e3 / s.fiber_speed_mps * 1e3;
}

AggregationReport aggregation_report(int n_cells, const FronthaulSpec& s) {
  if (n_cells < 1) throw ValidationError("fronthaul: n_cells must be >= 1");
  AggregationReport r;
  r.n_cells = n_cells;
  r.cpri_per_cell_bps = cpri_rate_bps(s);
  r.split_dl_per_cell_bps = split6_downlink_rate_bps(s);
  r.split_ul_per_cell_bps = split6_uplink_rate_bps(s);
  r.cpri_total_bps = n_cells * r.cpri_per_cell_bps;
  r.split_dl_total_bps = n_cells * r.split_dl_per_cell_bps;
  r.split_ul_total_bps = n_cells * r.split_ul_per_cell_bps;
  r.cpri_over_split_dl = r.split_dl_per_cell_bps > 0.0 ? r.cpri_per_cell_bps / r.split_dl_per_cell_bps : 0.0;
  r.cpri_over_split_ul = r.split_ul_per_cell_bps > 0.0 ? r.cpri_per_cell_bps / r.split_ul_per_cell_bps : 0.0;
  return r;
}

}  // namespace cran::fronthaul
