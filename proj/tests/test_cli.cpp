#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cran/analytic.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

const fs::path kSource = CRAN_SOURCE_DIR;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cran_cli_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write(const fs::path& dir, const std::string& name, const std::string& text) {
  const fs::path p = dir / name;
  std::ofstream(p) << text;
  return p;
}

struct Result {
  int code;
  std::string out, err;
};

Result run_cli(const std::string& args, const fs::path& dir) {
  const fs::path out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = std::string(CRAN_CLI_PATH) + " " + args + " > " + out.string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

// data rows of a CSV with '#' comment lines and one header line
std::vector<std::vector<std::string>> rows(const fs::path& p, std::string* header = nullptr) {
  std::ifstream in(p);
  std::string line;
  std::vector<std::vector<std::string>> out;
  bool seen_header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!seen_header) {
      seen_header = true;
      if (header) *header = line;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    out.push_back(cells);
  }
  return out;
}

std::vector<std::string> comments(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::vector<std::string> out;
  while (std::getline(in, line) && !line.empty() && line[0] == '#') out.push_back(line);
  return out;
}

const char* kRadio = R"({
  "radio": {"n_cells": 10, "ue": {"type": "geometric", "q": 0.6},
            "tb_bits": {"type": "uniform", "lo": 1000, "hi": 30000}, "parallelism": "all"},
  "system": {"cores": 40},
  "target": {"deadline_ms": 2.0, "tolerance": 0.01},
  "simulation": {"horizon_ms": 300, "seed": 5}
})";

}  // namespace

TEST_CASE("analyze reproduces the M/M/1 tail and the golden file") {
  const auto dir = scratch("analyze");
  const auto r = run_cli("analyze --config " + (kSource / "configs/mm1_tail.json").string() + " --out " + dir.string(), dir);
  REQUIRE(r.code == 0);
  CHECK(r.out.find("tail.csv") != std::string::npos);

  std::string header;
  const auto tail = rows(dir / "tail.csv", &header);
  CHECK(header == "t,survival");
  REQUIRE(tail.size() == 41);
  for (const auto& row : tail) {
    const double t = std::stod(row[0]);
    CHECK(std::abs(std::stod(row[1]) - cran::analytic::mmc_sojourn_tail(1, 0.7, 1.0, t)) < 1e-6);
  }
  const auto golden = rows(kSource / "tests/golden/mm1_tail.csv");
  REQUIRE(golden.size() == tail.size());
  for (std::size_t i = 0; i < tail.size(); ++i) {
    CHECK(golden[i][0] == tail[i][0]);
    CHECK(std::abs(std::stod(golden[i][1]) - std::stod(tail[i][1])) < 1e-9);
  }

  const auto pi = rows(dir / "stationary.csv", &header);
  CHECK(header == "n,prob");
  CHECK(std::stod(pi[0][1]) == doctest::Approx(0.3).epsilon(1e-9));
  const auto summary = Json::parse(slurp(dir / "summary.json"));
  CHECK(summary["rho"].get<double>() == doctest::Approx(0.7));
  CHECK(summary["meta"]["version"].is_string());
}

TEST_CASE("every output carries the header block") {
  const auto dir = scratch("header");
  REQUIRE(run_cli("analyze --config " + (kSource / "configs/mm1_tail.json").string() + " --out " + dir.string(), dir)
              .code == 0);
  const auto head = comments(dir / "tail.csv");
  REQUIRE(head.size() >= 4);
  CHECK(head[1].rfind("# config_hash: ", 0) == 0);
  CHECK(head[1].size() == std::string("# config_hash: ").size() + 16);
  CHECK(head[2] == "# seed: 1");
  CHECK(head[3].rfind("# version: ", 0) == 0);

  const auto other = scratch("header_seed");
  REQUIRE(run_cli("analyze --seed 9 --config " + (kSource / "configs/mm1_tail.json").string() + " --out " +
                   other.string(),
               other)
              .code == 0);
  const auto head9 = comments(other / "tail.csv");
  CHECK(head9[2] == "# seed: 9");
  CHECK(head9[1] != head[1]);
}

TEST_CASE("malformed JSON exits 2 with a position") {
  const auto dir = scratch("malformed");
  const auto cfg = write(dir, "bad.json", "{\n  \"workload\": {\n    \"arrival_rate\": 0.5,,\n  }\n}\n");
  const auto r = run_cli("analyze --config " + cfg.string() + " --out " + dir.string(), dir);
  CHECK(r.code == 2);
  CHECK(r.err.find("line 3") != std::string::npos);
  CHECK(r.err.find("column") != std::string::npos);
  const auto diag = Json::parse(r.err.substr(0, r.err.find('\n')));
  CHECK(diag["exit_code"] == 2);
  CHECK(diag["kind"] == "validation");
}

TEST_CASE("schema violations exit 2") {
  const auto dir = scratch("schema");
  const auto unknown = write(dir, "unknown.json", R"({"workload": {"arrival_rate": 0.5, "service_rate": 1,
      "batch": {"type": "deterministic", "k": 1}, "colour": 3}, "system": {"cores": 1}})");
  CHECK(run_cli("analyze --config " + unknown.string() + " --out " + dir.string(), dir).code == 2);
  const auto negative = write(dir, "negative.json", R"({"workload": {"arrival_rate": -1, "service_rate": 1,
      "batch": {"type": "deterministic", "k": 1}}, "system": {"cores": 1}})");
  CHECK(run_cli("analyze --config " + negative.string() + " --out " + dir.string(), dir).code == 2);
  CHECK(run_cli("analyze --config " + (dir / "missing.json").string(), dir).code == 2);
}

TEST_CASE("overload exits 3") {
  const auto dir = scratch("overload");
  const auto cfg = write(dir, "hot.json", R"({"workload": {"arrival_rate": 1.2, "service_rate": 1,
      "batch": {"type": "deterministic", "k": 1}}, "system": {"cores": 1}})");
  const auto r = run_cli("analyze --config " + cfg.string() + " --out " + dir.string(), dir);
  CHECK(r.code == 3);
  CHECK(Json::parse(r.err.substr(0, r.err.find('\n')))["kind"] == "instability");
  CHECK(run_cli("simulate --config " + cfg.string() + " --out " + dir.string(), dir).code == 3);
  CHECK_FALSE(fs::exists(dir / "tail.csv"));
}

TEST_CASE("truncation failure exits 4") {
  const auto dir = scratch("truncation");
  const auto cfg = write(dir, "short.json", R"({"workload": {"arrival_rate": 0.95, "service_rate": 1,
      "batch": {"type": "deterministic", "k": 1}}, "system": {"cores": 1}, "analysis": {"truncation": 20}})");
  CHECK(run_cli("analyze --config " + cfg.string() + " --out " + dir.string(), dir).code == 4);
}

TEST_CASE("simulate is byte-identical for a fixed seed") {
  const auto a = scratch("sim_a"), b = scratch("sim_b"), c = scratch("sim_c");
  const auto cfg = write(a, "cfg.json", R"({"workload": {"arrival_rate": 2, "service_rate": 1,
      "batch": {"type": "geometric", "q": 0.5}}, "system": {"cores": 6},
      "target": {"deadline_ms": 3, "tolerance": 0.01},
      "simulation": {"horizon_ms": 2000, "seed": 11, "samples_csv": true, "replications": 3}})");
  REQUIRE(run_cli("simulate --config " + cfg.string() + " --out " + a.string(), a).code == 0);
  REQUIRE(run_cli("simulate --config " + cfg.string() + " --out " + b.string(), b).code == 0);
  REQUIRE(run_cli("simulate --seed 12 --config " + cfg.string() + " --out " + c.string(), c).code == 0);
  for (const char* f : {"metrics.json", "cdf.csv", "samples.csv"}) {
    CAPTURE(f);
    REQUIRE(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
    CHECK(slurp(a / f) != slurp(c / f));
  }
  std::string header;
  const auto samples = rows(a / "samples.csv", &header);
  CHECK(header == "batch_id,arrival_ms,sojourn_ms,reneged");
  CHECK(samples.size() > 100);

  const auto m = Json::parse(slurp(a / "metrics.json"));
  CHECK(m["meta"]["seed"] == 11);
  const auto& mode = m["modes"][0];
  CHECK(mode["replications"] == 3);
  CHECK(mode["exceedance"]["half_width"].get<double>() > 0.0);
  CHECK(mode["audits"]["little_law_relative_error"].get<double>() < 0.05);
}

TEST_CASE("three parallelism modes land in one CDF file") {
  const auto dir = scratch("radio");
  const auto cfg = write(dir, "radio.json", kRadio);
  REQUIRE(run_cli("simulate --config " + cfg.string() + " --out " + dir.string(), dir).code == 0);
  std::string header;
  const auto cdf = rows(dir / "cdf.csv", &header);
  CHECK(header == "mode,t,F");
  std::set<std::string> modes;
  for (const auto& r : cdf) modes.insert(r[0]);
  CHECK(modes == std::set<std::string>{"subframe", "per_ue", "per_cb"});
  const auto m = Json::parse(slurp(dir / "metrics.json"));
  CHECK(m["modes"].size() == 3);
}

TEST_CASE("dimension writes the result and the curve") {
  const auto dir = scratch("dimension");
  const auto r =
      run_cli("dimension --config " + (kSource / "configs/dimension_toy.json").string() + " --out " + dir.string(), dir);
  REQUIRE(r.code == 0);
  const auto j = Json::parse(slurp(dir / "result.json"));
  CHECK(j["c_required"] == 1);
  CHECK(j["c_stability"] == 1);
  CHECK(j["backend"] == "analytic");

  const auto cal = scratch("dimension_cal");
  REQUIRE(run_cli("dimension --config " + (kSource / "configs/calibration_100cells.json").string() + " --out " +
                   cal.string(),
               cal)
              .code == 0);
  std::string header;
  const auto curve = rows(cal / "curve.csv", &header);
  CHECK(header == "C,exceedance,ci_half_width");
  REQUIRE(curve.size() > 5);
  for (std::size_t i = 1; i < curve.size(); ++i) CHECK(std::stoi(curve[i][0]) > std::stoi(curve[i - 1][0]));

  const auto sim = scratch("dimension_sim");
  REQUIRE(run_cli("dimension --backend sim --replications 2 --config " +
                   (kSource / "configs/dimension_toy.json").string() + " --out " + sim.string(),
               sim)
              .code == 0);
  const auto js = Json::parse(slurp(sim / "result.json"));
  CHECK(js["backend"] == "sim");
  CHECK(js["c_required"] == 1);
}

TEST_CASE("dimension exits 5 when the core budget is too small") {
  const auto dir = scratch("notfound");
  const auto cfg = write(dir, "tight.json", R"({"workload": {"arrival_rate": 3, "service_rate": 1,
      "batch": {"type": "geometric", "q": 0.5}}, "target": {"deadline_ms": 0.01, "tolerance": 1e-6},
      "dimension": {"c_max": 8}})");
  CHECK(run_cli("dimension --config " + cfg.string() + " --out " + dir.string(), dir).code == 5);
}

TEST_CASE("fronthaul report") {
  const auto dir = scratch("fronthaul");
  const auto cfg = kSource / "configs/fronthaul_20mhz.json";
  REQUIRE(run_cli("fronthaul --config " + cfg.string() + " --out " + dir.string(), dir).code == 0);
  const std::string table = slurp(dir / "fronthaul.txt");
  CHECK(table.find("100.8000") != std::string::npos);
  CHECK(table.find("254.25 km") != std::string::npos);

  REQUIRE(run_cli("fronthaul --format csv --config " + cfg.string() + " --out " + dir.string(), dir).code == 0);
  bool found = false;
  for (const auto& r : rows(dir / "fronthaul.csv"))
    if (r[0] == "split_downlink") found = std::abs(std::stod(r[1]) - 100.8) < 1e-9;
  CHECK(found);

  REQUIRE(run_cli("fronthaul --format json --config " + cfg.string() + " --out " + dir.string(), dir).code == 0);
  const auto j = Json::parse(slurp(dir / "fronthaul.json"));
  CHECK(j["split_downlink_per_cell_bps"].get<double>() == doctest::Approx(100.8e6));
  CHECK(j["cpri_per_cell_bps"].get<double>() == doctest::Approx(1228.8e6));
}

TEST_CASE("sweep over the core count") {
  const auto dir = scratch("sweep_cores");
  REQUIRE(run_cli("sweep --config " + (kSource / "configs/sweep_cores.json").string() + " --out " + dir.string(), dir)
              .code == 0);
  std::string header;
  const auto r = rows(dir / "sweep.csv", &header);
  CHECK(header == "value,rho,stable,exceedance,ci_half_width");
  REQUIRE(r.size() == 51);
  CHECK(r.front()[0] == "5");
  CHECK(r.back()[0] == "55");
  for (std::size_t i = 1; i < r.size(); ++i) CHECK(std::stod(r[i][3]) <= std::stod(r[i - 1][3]) + 1e-9);
}

TEST_CASE("sweep over the batch parameter is monotone") {
  const auto dir = scratch("sweep_q");
  REQUIRE(run_cli("sweep --config " + (kSource / "configs/sweep_q.json").string() + " --out " + dir.string(), dir)
              .code == 0);
  const auto r = rows(dir / "sweep.csv");
  REQUIRE(r.size() == 9);
  for (std::size_t i = 1; i < r.size(); ++i) CHECK(std::stod(r[i][3]) >= std::stod(r[i - 1][3]));
}

TEST_CASE("sweep rejects unknown fields and sweeps fronthaul parameters") {
  const auto dir = scratch("sweep_bad");
  const auto bad = write(dir, "bad.json", R"({"workload": {"arrival_rate": 1, "service_rate": 1,
      "batch": {"type": "deterministic", "k": 1}}, "system": {"cores": 2},
      "target": {"deadline_ms": 2, "tolerance": 0.01},
      "sweep": {"parameter": "workload.nonsense", "values": [1, 2]}})");
  CHECK(run_cli("sweep --config " + bad.string() + " --out " + dir.string(), dir).code == 2);

  const auto fh = write(dir, "fh.json", R"({"fronthaul": {"modulation_bits": 2},
      "sweep": {"parameter": "fronthaul.modulation_bits", "values": [2, 4, 6]}})");
  REQUIRE(run_cli("sweep --config " + fh.string() + " --out " + dir.string(), dir).code == 0);
  std::string header;
  const auto r = rows(dir / "sweep.csv", &header);
  CHECK(header == "value,cpri_mbps,split_downlink_mbps,split_uplink_mbps");
  REQUIRE(r.size() == 3);
  CHECK(std::stod(r[2][2]) == doctest::Approx(100.8));
  CHECK(r[0][1] == r[2][1]);
}
