#include "cran/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "cran/analytic.hpp"
#include "cran/dimension.hpp"
#include "cran/fronthaul.hpp"
#include "cran/simulate.hpp"

#ifndef CRAN_VERSION
#define CRAN_VERSION "0.0.0"
#endif

namespace cran::cli {

namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

Json meta(const ExperimentConfig& cfg, const std::string& command) {
  return Json{{"command", command},
              {"config_hash", config_hash(cfg.raw)},
              {"seed", cfg.simulation.seed},
              {"version", CRAN_VERSION}};
}

std::string csv_preamble(const ExperimentConfig& cfg, const std::string& command) {
  std::ostringstream os;
  os << "# command: " << command << '\n'
     << "# config_hash: " << config_hash(cfg.raw) << '\n'
     << "# seed: " << cfg.simulation.seed << '\n'
     << "# version: " << CRAN_VERSION << '\n';
  return os.str();
}

std::string write_file(const ExperimentConfig& cfg, const std::string& name, const std::string& content) {
  const fs::path dir(cfg.out_dir);
  fs::create_directories(dir);
  const fs::path target = dir / name;
  const fs::path tmp = dir / ("." + name + ".tmp");
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + tmp.string());
    os << content;
    if (!os.flush()) throw std::runtime_error("cannot write " + tmp.string());
  }
  fs::rename(tmp, target);
  return target.string();
}

std::string write_json(const ExperimentConfig& cfg, const std::string& name, const Json& j) {
  return write_file(cfg, name, j.dump(2) + "\n");
}

Json interval_json(const sim::Interval& iv) {
  return Json{{"value", iv.value}, {"half_width", iv.half_width}, {"std_error", iv.std_error}};
}

const WorkloadSpec& need_workload(const ExperimentConfig& cfg, const char* command) {
  if (!cfg.workload) throw ValidationError(std::string(command) + " needs a \"workload\" section");
  return *cfg.workload;
}

const SystemSpec& need_system(const ExperimentConfig& cfg, const char* command) {
  if (!cfg.system) throw ValidationError(std::string(command) + " needs a \"system\" section");
  return *cfg.system;
}

const LatencyTarget& need_target(const ExperimentConfig& cfg, const char* command) {
  if (!cfg.target) throw ValidationError(std::string(command) + " needs a \"target\" section");
  return *cfg.target;
}

sim::SimConfig sim_config(const ExperimentConfig& cfg, std::variant<WorkloadSpec, RadioWorkload> workload,
                          const SystemSpec& system) {
  sim::SimConfig sc{std::move(workload), system, cfg.simulation.horizon_ms, cfg.simulation.warmup_ms};
  sc.seed = cfg.simulation.seed;
  sc.replications = cfg.simulation.replications;
  sc.radio_arrivals = cfg.radio_arrivals;
  return sc;
}

dimension::SearchOptions search_options(const ExperimentConfig& cfg, const WorkloadSpec& w) {
  dimension::SearchOptions opts;
  opts.backend = cfg.dimension.backend;
  opts.c_max = cfg.dimension.c_max;
  opts.accelerate = cfg.dimension.accelerate;
  if (opts.backend == dimension::Backend::Simulation) opts.sim_template = sim_config(cfg, w, SystemSpec(1));
  return opts;
}

const char* mode_name(Parallelism p) {
  switch (p) {
    case Parallelism::Subframe: return "subframe";
    case Parallelism::PerUE: return "per_ue";
    case Parallelism::PerCB: return "per_cb";
  }
  return "?";
}

const char* backend_name(dimension::Backend b) {
  return b == dimension::Backend::Analytic ? "analytic" : "sim";
}

struct ModeRuns {
  std::string mode;
  std::vector<sim::SimMetrics> runs;
};

Json mode_json(const ModeRuns& m, const std::optional<LatencyTarget>& target) {
  const sim::ReplicatedMetrics rep{m.runs};
  const bool many = m.runs.size() >= 2;
  const sim::SimMetrics& first = m.runs.front();

  std::size_t observed = 0;
  std::uint64_t violations = 0;
  double little = 0.0, util_err = 0.0, fairness = 0.0, load = 0.0;
  bool unstable = false;
  for (const auto& r : m.runs) {
    observed += r.batches_observed;
    violations += r.work_conservation_violations;
    fairness = std::max(fairness, r.ps_fairness_max_error);
    load += r.offered_load / static_cast<double>(m.runs.size());
    unstable = unstable || r.unstable;
    if (r.mean_jobs_in_system > 0.0) {
      little = std::max(little, std::abs(r.mean_jobs_in_system - r.job_arrival_rate * r.mean_job_sojourn) /
                                    r.mean_jobs_in_system);
    }
    if (r.offered_load > 0.0 && r.reneged_fraction == 0.0)
      util_err = std::max(util_err, std::abs(r.core_utilization - r.offered_load) / r.offered_load);
  }

  Json j{{"mode", m.mode},
         {"replications", m.runs.size()},
         {"batches_observed", observed},
         {"offered_load", load},
         {"unstable", unstable},
         {"core_utilization", many ? interval_json(rep.core_utilization())
                                   : interval_json({first.core_utilization, 0.0, 0.0})},
         {"reneged_fraction", many ? interval_json(rep.reneged_fraction())
                                   : interval_json({first.reneged_fraction, 0.0, 0.0})},
         {"mean_sojourn_ms", many ? interval_json(rep.mean_sojourn()) : interval_json(first.mean_sojourn())},
         {"p99_ms", many ? interval_json(rep.p99()) : interval_json({first.p99(), 0.0, 0.0})},
         {"audits",
          {{"little_law_relative_error", little},
           {"utilization_relative_error", util_err},
           {"work_conservation_violations", violations},
           {"ps_fairness_max_error_ms", fairness}}}};
  if (target) {
    const auto iv = many ? rep.exceedance(target->deadline_ms) : first.exceedance(target->deadline_ms);
    j["exceedance"] = interval_json(iv);
    j["exceedance"]["deadline_ms"] = target->deadline_ms;
    j["meets_tolerance"] = iv.value + iv.half_width < target->tolerance;
  }
  return j;
}

std::string samples_csv(const ExperimentConfig& cfg, const sim::SimMetrics& m) {
  std::string s = csv_preamble(cfg, "simulate") + "batch_id,arrival_ms,sojourn_ms,reneged\n";
  for (std::size_t i = 0; i < m.batches.size(); ++i) {
    const auto& b = m.batches[i];
    s += std::to_string(i) + ',' + num(b.arrival_ms) + ',' + num(b.sojourn_ms) + ',' + (b.reneged ? "1" : "0") +
         '\n';
  }
  return s;
}

std::string fronthaul_table(const fronthaul::AggregationReport& r, const std::optional<double>& distance_km,
                            const std::optional<double>& budget_ms) {
  struct Row {
    std::string name;
    double per_cell, total;
  };
  const std::vector<Row> rows = {
      {"cpri", r.cpri_per_cell_bps / 1e6, r.cpri_total_bps / 1e6},
      {"split_downlink", r.split_dl_per_cell_bps / 1e6, r.split_dl_total_bps / 1e6},
      {"split_uplink", r.split_ul_per_cell_bps / 1e6, r.split_ul_total_bps / 1e6},
  };
  std::ostringstream os;
  char line[128];
  std::snprintf(line, sizeof line, "%-16s %16s %16s\n", "link", "per_cell_mbps", "total_mbps");
  os << line;
  for (const auto& row : rows) {
    std::snprintf(line, sizeof line, "%-16s %16.4f %16.4f\n", row.name.c_str(), row.per_cell, row.total);
    os << line;
  }
  os << "\ncells: " << r.n_cells << '\n'
     << "cpri/split downlink: " << num(r.cpri_over_split_dl) << '\n'
     << "cpri/split uplink: " << num(r.cpri_over_split_ul) << '\n'
     << "cpri depends on traffic: " << (r.cpri_traffic_dependent ? "yes" : "no") << '\n'
     << "split depends on traffic: " << (r.split_traffic_dependent ? "yes" : "no") << '\n';
  if (distance_km) os << "distance for " << num(*budget_ms) << " ms: " << num(*distance_km) << " km\n";
  return os.str();
}

}  // namespace

void apply_overrides(Json& raw, const Overrides& o) {
  if (!raw.is_object()) throw ValidationError("config: expected an object");
  if (o.seed) raw["simulation"]["seed"] = *o.seed;
  if (o.replications) raw["simulation"]["replications"] = *o.replications;
  if (o.format) raw["output"]["format"] = *o.format;
  if (o.out_dir) raw["output"]["dir"] = *o.out_dir;
  if (o.backend) raw["dimension"]["backend"] = *o.backend;
}

std::vector<std::string> cmd_analyze(const ExperimentConfig& cfg) {
  const auto& w = need_workload(cfg, "analyze");
  const auto& sys = need_system(cfg, "analyze");
  if (!std::holds_alternative<GreedyFcfs>(sys.discipline) || !std::holds_alternative<NoImpatience>(sys.impatience))
    throw ValidationError("analyze: the analytic model covers greedy_fcfs without a deadline only");
  const auto load = offered_load(w, sys.cores);
  if (!load.stable) throw InstabilityError("analyze: offered load rho = " + num(load.rho) + " >= 1");

  const auto pi = cfg.analysis.truncation > 0 ? analytic::mxmc_stationary(w, sys.cores, cfg.analysis.truncation)
                                              : analytic::mxmc_stationary(w, sys.cores);
  analytic::TailOptions to;
  to.n_trunc = cfg.analysis.truncation;
  const auto tail = analytic::batch_sojourn_tail(w, sys.cores, cfg.analysis.grid, to);

  std::vector<std::string> files;
  std::string s = csv_preamble(cfg, "analyze") + "n,prob\n";
  for (std::size_t n = 0; n < pi.probs.size(); ++n) s += std::to_string(n) + ',' + num(pi.probs[n]) + '\n';
  files.push_back(write_file(cfg, "stationary.csv", s));

  s = csv_preamble(cfg, "analyze") + "t,survival\n";
  for (std::size_t i = 0; i < tail.grid.size(); ++i) s += num(tail.grid[i]) + ',' + num(tail.survival[i]) + '\n';
  files.push_back(write_file(cfg, "tail.csv", s));

  Json j{{"meta", meta(cfg, "analyze")},
         {"cores", sys.cores},
         {"rho", load.rho},
         {"truncation", pi.truncation},
         {"tail_mass_bound", pi.tail_mass_bound},
         {"mean_jobs_in_system", pi.mean()}};
  if (cfg.target) {
    const double p = analytic::batch_sojourn_tail(w, sys.cores, {cfg.target->deadline_ms}, to).survival[0];
    j["exceedance"] = {{"deadline_ms", cfg.target->deadline_ms}, {"value", p}};
    j["meets_tolerance"] = p < cfg.target->tolerance;
  }
  files.push_back(write_json(cfg, "summary.json", j));
  return files;
}

std::vector<std::string> cmd_simulate(const ExperimentConfig& cfg) {
  const auto& sys = need_system(cfg, "simulate");
  if (cfg.workload && cfg.radio) throw ValidationError("simulate: give either \"workload\" or \"radio\", not both");
  if (!cfg.workload && !cfg.radio) throw ValidationError("simulate needs a \"workload\" or \"radio\" section");
  if (cfg.workload) {
    const auto load = offered_load(*cfg.workload, sys.cores);
    if (!load.stable) throw InstabilityError("simulate: offered load rho = " + num(load.rho) + " >= 1");
  }

  std::vector<ModeRuns> modes;
  if (cfg.radio && cfg.radio_all_modes) {
    const int reps = cfg.simulation.replications;
    std::vector<std::vector<sim::ModeMetrics>> per_rep(reps);
    std::vector<std::exception_ptr> errors(reps);
    auto base = sim_config(cfg, *cfg.radio, sys);
    base.validate();
#pragma omp parallel for schedule(dynamic, 1)
    for (int r = 0; r < reps; ++r) {
      try {
        auto sc = base;
        sc.replications = 1;
        if (reps >= 2) sc.seed = sim::replication_seed(base.seed, r);
        per_rep[r] = sim::run_radio(sc);
      } catch (...) {
        errors[r] = std::current_exception();
      }
    }
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
    for (std::size_t m = 0; m < per_rep.front().size(); ++m) {
      ModeRuns mr{mode_name(per_rep.front()[m].mode), {}};
      for (auto& rep : per_rep) mr.runs.push_back(std::move(rep[m].metrics));
      modes.push_back(std::move(mr));
    }
  } else {
    const auto sc = cfg.workload ? sim_config(cfg, *cfg.workload, sys) : sim_config(cfg, *cfg.radio, sys);
    ModeRuns mr{cfg.workload ? "batch" : mode_name(cfg.radio->parallelism), {}};
    if (sc.replications >= 2) mr.runs = sim::replicate(sc).runs;
    else mr.runs.push_back(sim::run(sc));
    modes.push_back(std::move(mr));
  }

  std::vector<std::string> files;
  Json j{{"meta", meta(cfg, "simulate")},
         {"horizon_ms", cfg.simulation.horizon_ms},
         {"warmup_ms", cfg.simulation.warmup_ms.value_or(0.1 * cfg.simulation.horizon_ms)},
         {"cores", sys.cores},
         {"modes", Json::array()}};
  for (const auto& m : modes) j["modes"].push_back(mode_json(m, cfg.target));
  files.push_back(write_json(cfg, "metrics.json", j));

  std::string s = csv_preamble(cfg, "simulate") + "mode,t,F\n";
  for (const auto& m : modes)
    for (const auto& [t, f] : m.runs.front().empirical_cdf()) s += m.mode + ',' + num(t) + ',' + num(f) + '\n';
  files.push_back(write_file(cfg, "cdf.csv", s));

  if (cfg.simulation.samples_csv) {
    for (const auto& m : modes) {
      const std::string name = modes.size() == 1 ? "samples.csv" : "samples_" + m.mode + ".csv";
      files.push_back(write_file(cfg, name, samples_csv(cfg, m.runs.front())));
    }
  }
  return files;
}

std::vector<std::string> cmd_dimension(const ExperimentConfig& cfg) {
  const auto& w = need_workload(cfg, "dimension");
  const auto& target = need_target(cfg, "dimension");
  const auto opts = search_options(cfg, w);
  const auto res = dimension::required_cores(w, target, opts);

  std::map<int, dimension::CurvePoint> curve;
  for (const auto& p : res.curve) curve[p.cores] = p;
  const int from = cfg.dimension.curve_from > 0 ? cfg.dimension.curve_from : std::max(1, res.c_stability - 5);
  if (cfg.dimension.curve_to >= from) {
    for (const auto& p : dimension::exceedance_curve(w, target.deadline_ms, from, cfg.dimension.curve_to, opts))
      curve.emplace(p.cores, p);
  }

  std::vector<std::string> files;
  Json j{{"meta", meta(cfg, "dimension")},
         {"backend", backend_name(res.backend)},
         {"c_required", res.c_required},
         {"c_stability", res.c_stability},
         {"target", {{"deadline_ms", target.deadline_ms}, {"tolerance", target.tolerance}}},
         {"curve", Json::array()}};
  const auto& at = curve.at(res.c_required);
  j["exceedance_at_c_required"] = {{"value", at.exceedance}, {"ci_half_width", at.ci_half_width}};
  for (const auto& [c, p] : curve) {
    j["curve"].push_back(
        {{"cores", c}, {"exceedance", p.exceedance}, {"ci_half_width", p.ci_half_width}, {"stable", p.stable}});
  }
  files.push_back(write_json(cfg, "result.json", j));

  std::string s = csv_preamble(cfg, "dimension") + "C,exceedance,ci_half_width\n";
  for (const auto& [c, p] : curve) s += std::to_string(c) + ',' + num(p.exceedance) + ',' + num(p.ci_half_width) + '\n';
  files.push_back(write_file(cfg, "curve.csv", s));
  return files;
}

std::vector<std::string> cmd_fronthaul(const ExperimentConfig& cfg) {
  const auto r = fronthaul::aggregation_report(cfg.fronthaul_cells, cfg.fronthaul);
  std::optional<double> distance;
  if (cfg.fronthaul_budget_ms) distance = fronthaul::latency_to_distance_km(*cfg.fronthaul_budget_ms, cfg.fronthaul);

  const auto format = cfg.format.value_or(OutputFormat::Json);
  if (format == OutputFormat::Json) {
    Json j{{"meta", meta(cfg, "fronthaul")},
           {"n_cells", r.n_cells},
           {"cpri_per_cell_bps", r.cpri_per_cell_bps},
           {"split_downlink_per_cell_bps", r.split_dl_per_cell_bps},
           {"split_uplink_per_cell_bps", r.split_ul_per_cell_bps},
           {"cpri_total_bps", r.cpri_total_bps},
           {"split_downlink_total_bps", r.split_dl_total_bps},
           {"split_uplink_total_bps", r.split_ul_total_bps},
           {"cpri_over_split_downlink", r.cpri_over_split_dl},
           {"cpri_over_split_uplink", r.cpri_over_split_ul},
           {"cpri_traffic_dependent", r.cpri_traffic_dependent},
           {"split_traffic_dependent", r.split_traffic_dependent}};
    if (distance) j["distance"] = {{"latency_budget_ms", *cfg.fronthaul_budget_ms}, {"km", *distance}};
    return {write_json(cfg, "fronthaul.json", j)};
  }
  if (format == OutputFormat::Csv) {
    std::string s = csv_preamble(cfg, "fronthaul") + "link,per_cell_mbps,total_mbps\n";
    s += "cpri," + num(r.cpri_per_cell_bps / 1e6) + ',' + num(r.cpri_total_bps / 1e6) + '\n';
    s += "split_downlink," + num(r.split_dl_per_cell_bps / 1e6) + ',' + num(r.split_dl_total_bps / 1e6) + '\n';
    s += "split_uplink," + num(r.split_ul_per_cell_bps / 1e6) + ',' + num(r.split_ul_total_bps / 1e6) + '\n';
    return {write_file(cfg, "fronthaul.csv", s)};
  }
  std::string s = csv_preamble(cfg, "fronthaul") + fronthaul_table(r, distance, cfg.fronthaul_budget_ms);
  return {write_file(cfg, "fronthaul.txt", s)};
}

std::vector<std::string> cmd_sweep(const ExperimentConfig& cfg) {
  if (!cfg.sweep) throw ValidationError("sweep needs a \"sweep\" section");
  const auto& sw = *cfg.sweep;
  if (!numeric_at(cfg.raw, sw.parameter))
    throw ValidationError("sweep: unknown or non-numeric field \"" + sw.parameter + "\"");

  std::vector<ExperimentConfig> points;
  for (double v : sw.values) {
    Json raw = cfg.raw;
    raw.erase("sweep");
    set_numeric_at(raw, sw.parameter, v);
    points.push_back(parse_config(raw));
  }

  const bool link = sw.parameter.rfind("fronthaul.", 0) == 0;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows(points.size());
  if (link) {
    header = {"value", "cpri_mbps", "split_downlink_mbps", "split_uplink_mbps"};
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto r = fronthaul::aggregation_report(points[i].fronthaul_cells, points[i].fronthaul);
      rows[i] = {sw.values[i], r.cpri_total_bps / 1e6, r.split_dl_total_bps / 1e6, r.split_ul_total_bps / 1e6};
    }
  } else {
    header = {"value", "rho", "stable", "exceedance", "ci_half_width"};
    for (const auto& p : points) {
      need_workload(p, "sweep");
      need_system(p, "sweep");
      need_target(p, "sweep");
    }
    std::vector<std::exception_ptr> errors(points.size());
    const int n = static_cast<int>(points.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (int i = 0; i < n; ++i) {
      try {
        const auto& p = points[i];
        auto opts = search_options(p, *p.workload);
        opts.kernel = analytic::KernelMode::Serial;
        const auto pt = dimension::exceedance_at(*p.workload, p.system->cores, p.target->deadline_ms, opts);
        rows[i] = {sw.values[i], offered_load(*p.workload, p.system->cores).rho, pt.stable ? 1.0 : 0.0,
                   pt.exceedance, pt.ci_half_width};
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  if (cfg.format == OutputFormat::Json) {
    Json j{{"meta", meta(cfg, "sweep")}, {"parameter", sw.parameter}, {"rows", Json::array()}};
    for (const auto& row : rows) {
      Json o;
      for (std::size_t k = 0; k < header.size(); ++k) {
        if (header[k] == "stable") o[header[k]] = row[k] != 0.0;
        else o[header[k]] = row[k];
      }
      j["rows"].push_back(o);
    }
    return {write_json(cfg, "sweep.json", j)};
  }
  std::string s = csv_preamble(cfg, "sweep") + "# parameter: " + sw.parameter + '\n';
  for (std::size_t k = 0; k < header.size(); ++k) s += (k ? "," : "") + header[k];
  s += '\n';
  for (const auto& row : rows) {
    for (std::size_t k = 0; k < row.size(); ++k) s += (k ? "," : "") + num(row[k]);
    s += '\n';
  }
  return {write_file(cfg, "sweep.csv", s)};
}

int run_command(const std::string& command, const std::string& config_path, const Overrides& overrides,
                std::ostream& out, std::ostream& err) {
  auto report = [&](int code, const char* kind, const std::string& message) {
    err << Json{{"level", "error"}, {"exit_code", code}, {"kind", kind}, {"message", message}}.dump() << '\n';
    return code;
  };
  try {
    Json raw = load_json_file(config_path);
    apply_overrides(raw, overrides);
    const ExperimentConfig cfg = parse_config(raw);

    std::vector<std::string> files;
    if (command == "analyze") files = cmd_analyze(cfg);
    else if (command == "simulate") files = cmd_simulate(cfg);
    else if (command == "dimension") files = cmd_dimension(cfg);
    else if (command == "fronthaul") files = cmd_fronthaul(cfg);
    else if (command == "sweep") files = cmd_sweep(cfg);
    else throw ValidationError("unknown command \"" + command + "\"");
    for (const auto& f : files) out << f << '\n';
    return kOk;
  } catch (const TruncationError& e) {
    return report(kTruncation, "truncation", e.what());
  } catch (const InstabilityError& e) {
    return report(kInstability, "instability", e.what());
  } catch (const NotFoundError& e) {
    return report(kNotFound, "not_found", e.what());
  } catch (const ValidationError& e) {
    return report(kValidation, "validation", e.what());
  } catch (const nlohmann::json::exception& e) {
    return report(kValidation, "validation", e.what());
  } catch (const std::exception& e) {
    return report(kFailure, "failure", e.what());
  }
}

}  // namespace cran::cli
