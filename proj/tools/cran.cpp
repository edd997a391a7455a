#include <cstdlib>
#include <iostream>
#include <string>

#include <omp.h>

#include "CLI11.hpp"
#include "cran/commands.hpp"

int main(int argc, char** argv) {
  if (const char* workers = std::getenv("CRAN_WORKERS")) {
    const int n = std::atoi(workers);
    if (n > 0) omp_set_num_threads(n);
  }

  CLI::App app{"Cloud-RAN processing pool dimensioning toolkit"};
  app.set_version_flag("--version", std::string(CRAN_VERSION));
  app.require_subcommand(1);

  std::string config_path;
  cran::cli::Overrides o;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option_function<std::uint64_t>("--seed", [&](const std::uint64_t& v) { o.seed = v; }, "base seed");
    sub->add_option_function<int>("--replications", [&](const int& v) { o.replications = v; },
                                  "independent replications");
    sub->add_option_function<std::string>("--format", [&](const std::string& v) { o.format = v; }, "output format")
        ->check(CLI::IsMember({"json", "csv", "text"}));
    sub->add_option_function<std::string>("--out", [&](const std::string& v) { o.out_dir = v; }, "output directory");
    sub->add_option_function<std::string>("--backend", [&](const std::string& v) { o.backend = v; },
                                          "dimensioning backend")
        ->check(CLI::IsMember({"analytic", "sim"}));
  };

  const std::pair<const char*, const char*> commands[] = {
      {"analyze", "stationary distribution and sojourn-time tail of the batch queue"},
      {"simulate", "discrete-event simulation of the processing pool"},
      {"dimension", "smallest core count meeting the latency target"},
      {"fronthaul", "CPRI and split fronthaul rates"},
      {"sweep", "vary one numeric config field over a range"},
  };
  for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cran::cli::kValidation;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  return cran::cli::run_command(command, config_path, o, std::cout, std::cerr);
}
