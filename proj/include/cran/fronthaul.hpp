#pragma once

// Fronthaul bandwidth for CPRI and the intra-PHY split that keeps channel
// coding central (hard bits downlink, LLR soft bits uplink), and the
// fiber latency/distance conversion.

#include "cran/model.hpp"

namespace cran::fronthaul {

struct FronthaulSpec {
  double cell_bandwidth_mhz = 20.0;
  int n_prb = 100;
  int antennas = 1;  // antennas for CPRI, spatial layers for the split
  double sample_rate_msps = 30.72;
  int iq_sample_bits = 15;
  double line_coding_overhead = 10.0 / 8.0;
  double cpri_control_overhead = 16.0 / 15.0;
  int modulation_bits = 6;
  int llr_bits = 8;
  int symbols_per_subframe = 14;
  int subcarriers_per_prb = 12;
  double fiber_speed_mps = 2.25e8;
  double cell_load = 1.0;  // average-rate factor for the split, 1 = peak

  void validate() const;

  /// Default numerology for a standard LTE channel bandwidth.
  static FronthaulSpec for_bandwidth(double mhz);
};

double cpri_rate_bps(const FronthaulSpec& s);
double split6_downlink_rate_bps(const FronthaulSpec& s);
double split6_uplink_rate_bps(const FronthaulSpec& s);

/// One-way fiber distance covered in `budget_ms`.
double latency_to_distance_km(double budget_ms, const FronthaulSpec& s = {});
double distance_to_latency_ms(double km, const FronthaulSpec& s = {});

struct AggregationReport {
  int n_cells = 0;
  double cpri_per_cell_bps = 0.0;
  double split_dl_per_cell_bps = 0.0;
  double split_ul_per_cell_bps = 0.0;
  double cpri_total_bps = 0.0;
  double split_dl_total_bps = 0.0;
  double split_ul_total_bps = 0.0;
  double cpri_over_split_dl = 0.0;
  double cpri_over_split_ul = 0.0;
  bool cpri_traffic_dependent = false;
  bool split_traffic_dependent = true;
};

AggregationReport aggregation_report(int n_cells, const FronthaulSpec& s);

}  // namespace cran::fronthaul
