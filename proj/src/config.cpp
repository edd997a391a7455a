#include "cran/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

namespace cran::cli {

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ValidationError(where + ": " + what);
}

void allow_keys(const Json& obj, const std::string& where, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) fail(where, "expected an object");
  std::set<std::string> ok(keys.begin(), keys.end());
  for (const auto& [k, v] : obj.items()) {
    if (!ok.count(k)) fail(where, "unknown key \"" + k + "\"");
  }
}

double number(const Json& obj, const std::string& where, const char* key) {
  if (!obj.contains(key)) fail(where, std::string("missing \"") + key + "\"");
  const Json& v = obj.at(key);
  if (!v.is_number()) fail(where, std::string("\"") + key + "\" must be a number");
  return v.get<double>();
}

double number_or(const Json& obj, const std::string& where, const char* key, double dflt) {
  return obj.contains(key) ? number(obj, where, key) : dflt;
}

int integer(const Json& obj, const std::string& where, const char* key) {
  const double v = number(obj, where, key);
  if (v != std::floor(v) || std::abs(v) > 2e9) fail(where, std::string("\"") + key + "\" must be an integer");
  return static_cast<int>(v);
}

int integer_or(const Json& obj, const std::string& where, const char* key, int dflt) {
  return obj.contains(key) ? integer(obj, where, key) : dflt;
}

std::string text(const Json& obj, const std::string& where, const char* key, const std::string& dflt) {
  if (!obj.contains(key)) return dflt;
  if (!obj.at(key).is_string()) fail(where, std::string("\"") + key + "\" must be a string");
  return obj.at(key).get<std::string>();
}

bool flag(const Json& obj, const std::string& where, const char* key, bool dflt) {
  if (!obj.contains(key)) return dflt;
  if (!obj.at(key).is_boolean()) fail(where, std::string("\"") + key + "\" must be a boolean");
  return obj.at(key).get<bool>();
}

BatchLaw parse_batch(const Json& j, const std::string& where) {
  if (!j.is_object()) fail(where, "expected an object");
  const std::string type = text(j, where, "type", "");
  if (type == "geometric") {
    allow_keys(j, where, {"type", "q"});
    return BatchLaw::geometric(number(j, where, "q"));
  }
  if (type == "deterministic") {
    allow_keys(j, where, {"type", "k"});
    return BatchLaw::deterministic(integer(j, where, "k"));
  }
  if (type == "empirical") {
    allow_keys(j, where, {"type", "pmf"});
    if (!j.contains("pmf") || !j.at("pmf").is_object()) fail(where, "\"pmf\" must be an object");
    std::map<int, double> pmf;
    for (const auto& [k, v] : j.at("pmf").items()) {
      if (!v.is_number()) fail(where, "pmf values must be numbers");
      int size = 0;
      try {
        size = std::stoi(k);
      } catch (const std::exception&) {
        fail(where, "pmf keys must be integers");
      }
      pmf[size] = v.get<double>();
    }
    return BatchLaw::empirical(std::move(pmf));
  }
  fail(where, "\"type\" must be geometric, deterministic or empirical");
}

TbSizeLaw parse_tb(const Json& j, const std::string& where) {
  if (!j.is_object()) fail(where, "expected an object");
  const std::string type = text(j, where, "type", "");
  if (type == "fixed") {
    allow_keys(j, where, {"type", "bits"});
    return FixedBits{static_cast<std::int64_t>(number(j, where, "bits"))};
  }
  if (type == "uniform") {
    allow_keys(j, where, {"type", "lo", "hi"});
    return UniformBits{static_cast<std::int64_t>(number(j, where, "lo")),
                       static_cast<std::int64_t>(number(j, where, "hi"))};
  }
  if (type == "empirical") {
    allow_keys(j, where, {"type", "pmf"});
    if (!j.contains("pmf") || !j.at("pmf").is_object()) fail(where, "\"pmf\" must be an object");
    EmpiricalBits e;
    for (const auto& [k, v] : j.at("pmf").items()) {
      if (!v.is_number()) fail(where, "pmf values must be numbers");
      e.pmf[std::stoll(k)] = v.get<double>();
    }
    return e;
  }
  fail(where, "\"type\" must be fixed, uniform or empirical");
}

std::vector<double> parse_grid(const Json& j, const std::string& where) {
  std::vector<double> grid;
  if (j.contains("grid")) {
    if (!j.at("grid").is_array()) fail(where, "\"grid\" must be an array");
    for (const auto& v : j.at("grid")) {
      if (!v.is_number()) fail(where, "grid entries must be numbers");
      grid.push_back(v.get<double>());
    }
    return grid;
  }
  const double t_max = number_or(j, where, "t_max_ms", 10.0);
  const int points = integer_or(j, where, "points", 101);
  if (!(t_max > 0.0) || points < 2) fail(where, "need t_max_ms > 0 and points >= 2");
  for (int i = 0; i < points; ++i) grid.push_back(t_max * i / (points - 1));
  return grid;
}

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < text.size() && i + 1 < byte; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

const Json* walk(const Json& raw, const std::string& dotted) {
  const Json* node = &raw;
  std::stringstream ss(dotted);
  std::string part;
  while (std::getline(ss, part, '.')) {
    if (!node->is_object() || !node->contains(part)) return nullptr;
    node = &node->at(part);
  }
  return node;
}

}  // namespace

Json parse_json_text(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte);
    throw ConfigError("malformed JSON at line " + std::to_string(line) + ", column " + std::to_string(col) + ": " +
                      e.what());
  }
}

Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_json_text(ss.str());
}

ExperimentConfig parse_config(const Json& raw) {
  ExperimentConfig cfg;
  cfg.raw = raw;
  allow_keys(raw, "config", {"workload", "radio", "system", "target", "simulation", "analysis", "dimension",
                             "fronthaul", "sweep", "output"});

  if (raw.contains("workload")) {
    const Json& w = raw.at("workload");
    allow_keys(w, "workload", {"arrival_rate", "service_rate", "batch"});
    if (!w.contains("batch")) fail("workload", "missing \"batch\"");
    cfg.workload.emplace(number(w, "workload", "arrival_rate"), parse_batch(w.at("batch"), "workload.batch"),
                         number(w, "workload", "service_rate"));
  }

  if (raw.contains("radio")) {
    const Json& r = raw.at("radio");
    allow_keys(r, "radio", {"n_cells", "tti_ms", "ue", "tb_bits", "cb_max_bits", "parallelism",
                            "decode_rate_bits_per_ms", "per_job_overhead_ms", "noise", "arrivals"});
    RadioWorkload rw;
    rw.n_cells = integer_or(r, "radio", "n_cells", rw.n_cells);
    rw.tti_ms = number_or(r, "radio", "tti_ms", rw.tti_ms);
    if (r.contains("ue")) rw.ue_law = parse_batch(r.at("ue"), "radio.ue");
    if (r.contains("tb_bits")) rw.tb_bits_law = parse_tb(r.at("tb_bits"), "radio.tb_bits");
    rw.cb_max_bits = integer_or(r, "radio", "cb_max_bits", rw.cb_max_bits);
    rw.decode_rate_bits_per_ms = number_or(r, "radio", "decode_rate_bits_per_ms", rw.decode_rate_bits_per_ms);
    rw.per_job_overhead_ms = number_or(r, "radio", "per_job_overhead_ms", rw.per_job_overhead_ms);
    const std::string par = text(r, "radio", "parallelism", "all");
    if (par == "subframe") rw.parallelism = Parallelism::Subframe;
    else if (par == "per_ue") rw.parallelism = Parallelism::PerUE;
    else if (par == "per_cb") rw.parallelism = Parallelism::PerCB;
    else if (par == "all") cfg.radio_all_modes = true;
    else fail("radio", "\"parallelism\" must be subframe, per_ue, per_cb or all");
    const std::string noise = text(r, "radio", "noise", "exponential");
    if (noise == "exponential") rw.noise = ServiceNoise::Exponential;
    else if (noise == "deterministic") rw.noise = ServiceNoise::Deterministic;
    else fail("radio", "\"noise\" must be exponential or deterministic");
    const std::string arr = text(r, "radio", "arrivals", "tti");
    if (arr == "tti") cfg.radio_arrivals = sim::RadioArrivals::TtiClock;
    else if (arr == "poisson") cfg.radio_arrivals = sim::RadioArrivals::Poisson;
    else fail("radio", "\"arrivals\" must be tti or poisson");
    rw.validate();
    cfg.radio = rw;
  }

  if (raw.contains("system")) {
    const Json& s = raw.at("system");
    allow_keys(s, "system", {"cores", "discipline", "partition", "deadline_ms"});
    const int cores = integer(s, "system", "cores");
    const std::string disc = text(s, "system", "discipline", "greedy_fcfs");
    Discipline d = GreedyFcfs{};
    if (disc == "processor_sharing") {
      d = ProcessorSharing{};
    } else if (disc == "dedicated") {
      if (!s.contains("partition") || !s.at("partition").is_array()) fail("system", "dedicated needs \"partition\"");
      Dedicated ded;
      for (const auto& v : s.at("partition")) {
        if (!v.is_number_integer()) fail("system", "partition entries must be integers");
        ded.partition.push_back(v.get<int>());
      }
      d = ded;
    } else if (disc != "greedy_fcfs") {
      fail("system", "\"discipline\" must be greedy_fcfs, processor_sharing or dedicated");
    }
    if (s.contains("partition") && disc != "dedicated") fail("system", "\"partition\" only applies to dedicated");
    Impatience imp = NoImpatience{};
    if (s.contains("deadline_ms")) imp = BatchDeadline{number(s, "system", "deadline_ms")};
    cfg.system.emplace(cores, d, imp);
  }

  if (raw.contains("target")) {
    const Json& t = raw.at("target");
    allow_keys(t, "target", {"deadline_ms", "tolerance"});
    cfg.target.emplace(number(t, "target", "deadline_ms"), number(t, "target", "tolerance"));
  }

  if (raw.contains("simulation")) {
    const Json& s = raw.at("simulation");
    allow_keys(s, "simulation", {"horizon_ms", "warmup_ms", "replications", "seed", "samples_csv"});
    cfg.simulation.horizon_ms = number_or(s, "simulation", "horizon_ms", cfg.simulation.horizon_ms);
    if (s.contains("warmup_ms")) cfg.simulation.warmup_ms = number(s, "simulation", "warmup_ms");
    cfg.simulation.replications = integer_or(s, "simulation", "replications", 1);
    if (s.contains("seed")) {
      if (!s.at("seed").is_number_unsigned()) fail("simulation", "\"seed\" must be a non-negative integer");
      cfg.simulation.seed = s.at("seed").get<std::uint64_t>();
    }
    cfg.simulation.samples_csv = flag(s, "simulation", "samples_csv", false);
    if (!(cfg.simulation.horizon_ms > 0.0)) fail("simulation", "\"horizon_ms\" must be > 0");
    if (cfg.simulation.replications < 1) fail("simulation", "\"replications\" must be >= 1");
  }

  {
    const Json a = raw.contains("analysis") ? raw.at("analysis") : Json::object();
    allow_keys(a, "analysis", {"grid", "t_max_ms", "points", "truncation"});
    cfg.analysis.grid = parse_grid(a, "analysis");
    cfg.analysis.truncation = integer_or(a, "analysis", "truncation", 0);
  }

  if (raw.contains("dimension")) {
    const Json& d = raw.at("dimension");
    allow_keys(d, "dimension", {"backend", "c_max", "accelerate", "curve_from", "curve_to"});
    const std::string b = text(d, "dimension", "backend", "analytic");
    if (b == "analytic") cfg.dimension.backend = dimension::Backend::Analytic;
    else if (b == "sim") cfg.dimension.backend = dimension::Backend::Simulation;
    else fail("dimension", "\"backend\" must be analytic or sim");
    cfg.dimension.c_max = integer_or(d, "dimension", "c_max", 0);
    cfg.dimension.accelerate = flag(d, "dimension", "accelerate", false);
    cfg.dimension.curve_from = integer_or(d, "dimension", "curve_from", 0);
    cfg.dimension.curve_to = integer_or(d, "dimension", "curve_to", 0);
    if (cfg.dimension.curve_from < 0 || cfg.dimension.curve_to < 0) fail("dimension", "curve bounds must be >= 0");
  }

  if (raw.contains("fronthaul")) {
    const Json& f = raw.at("fronthaul");
    allow_keys(f, "fronthaul", {"cell_bandwidth_mhz", "n_prb", "antennas", "sample_rate_msps", "iq_sample_bits",
                                "line_coding_overhead", "cpri_control_overhead", "modulation_bits", "llr_bits",
                                "symbols_per_subframe", "subcarriers_per_prb", "fiber_speed_mps", "cell_load",
                                "n_cells", "latency_budget_ms"});
    auto& s = cfg.fronthaul;
    s = fronthaul::FronthaulSpec::for_bandwidth(number_or(f, "fronthaul", "cell_bandwidth_mhz", 20.0));
    s.n_prb = integer_or(f, "fronthaul", "n_prb", s.n_prb);
    s.antennas = integer_or(f, "fronthaul", "antennas", s.antennas);
    s.sample_rate_msps = number_or(f, "fronthaul", "sample_rate_msps", s.sample_rate_msps);
    s.iq_sample_bits = integer_or(f, "fronthaul", "iq_sample_bits", s.iq_sample_bits);
    s.line_coding_overhead = number_or(f, "fronthaul", "line_coding_overhead", s.line_coding_overhead);
    s.cpri_control_overhead = number_or(f, "fronthaul", "cpri_control_overhead", s.cpri_control_overhead);
    s.modulation_bits = integer_or(f, "fronthaul", "modulation_bits", s.modulation_bits);
    s.llr_bits = integer_or(f, "fronthaul", "llr_bits", s.llr_bits);
    s.symbols_per_subframe = integer_or(f, "fronthaul", "symbols_per_subframe", s.symbols_per_subframe);
    s.subcarriers_per_prb = integer_or(f, "fronthaul", "subcarriers_per_prb", s.subcarriers_per_prb);
    s.fiber_speed_mps = number_or(f, "fronthaul", "fiber_speed_mps", s.fiber_speed_mps);
    s.cell_load = number_or(f, "fronthaul", "cell_load", s.cell_load);
    s.validate();
    cfg.fronthaul_cells = integer_or(f, "fronthaul", "n_cells", 1);
    if (cfg.fronthaul_cells < 1) fail("fronthaul", "\"n_cells\" must be >= 1");
    if (f.contains("latency_budget_ms")) cfg.fronthaul_budget_ms = number(f, "fronthaul", "latency_budget_ms");
  }

  if (raw.contains("sweep")) {
    const Json& s = raw.at("sweep");
    allow_keys(s, "sweep", {"parameter", "values", "from", "to", "step"});
    SweepSettings sw;
    sw.parameter = text(s, "sweep", "parameter", "");
    if (sw.parameter.empty()) fail("sweep", "missing \"parameter\"");
    if (s.contains("values")) {
      if (!s.at("values").is_array()) fail("sweep", "\"values\" must be an array");
      for (const auto& v : s.at("values")) {
        if (!v.is_number()) fail("sweep", "values must be numbers");
        sw.values.push_back(v.get<double>());
      }
    } else {
      const double from = number(s, "sweep", "from"), to = number(s, "sweep", "to");
      const double step = number_or(s, "sweep", "step", 1.0);
      if (!(step > 0.0) || to < from) fail("sweep", "need from <= to and step > 0");
      const auto n = static_cast<long>(std::floor((to - from) / step + 1e-9));
      for (long i = 0; i <= n; ++i) sw.values.push_back(from + static_cast<double>(i) * step);
    }
    if (sw.values.empty()) fail("sweep", "no values to sweep");
    cfg.sweep = sw;
  }

  if (raw.contains("output")) {
    const Json& o = raw.at("output");
    allow_keys(o, "output", {"format", "dir"});
    const std::string f = text(o, "output", "format", "");
    if (f.empty()) cfg.format.reset();
    else if (f == "json") cfg.format = OutputFormat::Json;
    else if (f == "csv") cfg.format = OutputFormat::Csv;
    else if (f == "text") cfg.format = OutputFormat::Text;
    else fail("output", "\"format\" must be json, csv or text");
    cfg.out_dir = text(o, "output", "dir", ".");
  }
  return cfg;
}

std::string config_hash(const Json& raw) {
  Json content = raw;
  if (content.contains("output") && content["output"].is_object()) {
    content["output"].erase("dir");
    if (content["output"].empty()) content.erase("output");
  }
  const std::string canon = content.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canon) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::optional<double> numeric_at(const Json& raw, const std::string& dotted) {
  const Json* node = walk(raw, dotted);
  if (node == nullptr || !node->is_number()) return std::nullopt;
  return node->get<double>();
}

void set_numeric_at(Json& raw, const std::string& dotted, double value) {
  Json* node = &raw;
  std::stringstream ss(dotted);
  std::string part;
  while (std::getline(ss, part, '.')) node = &(*node)[part];
  if (node->is_number_integer() && value == std::floor(value)) {
    *node = static_cast<std::int64_t>(value);
  } else {
    *node = value;
  }
}

}  // namespace cran::cli
