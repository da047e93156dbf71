#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mhdrt/io.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Spectral stability solver for the two-layer viscous non-resistive MHD "
               "Rayleigh-Taylor problem"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::string format = "json";
  int threads = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;

  for (const char* name :
       {"mc", "dispersion", "critical-field", "stability-map", "ivp", "verify"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON configuration file")->required();
    sub->add_option("--out", out_path, "output path (stdout when omitted)");
    sub->add_option("--format", format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--threads", threads, "worker threads (MHDRT_THREADS, then hardware)");
    sub->add_option("--seed", seed, "seed for oracle sampling and random initial data")
        ->each([&](const std::string&) { seed_set = true; });
  }

  CLI11_PARSE(app, argc, argv);

  try {
    std::ifstream in(config_path);
    if (!in) {
      throw std::runtime_error("cannot open config file: " + config_path);
    }
    std::stringstream buf;
    buf << in.rdbuf();
    const mhdrt::RunConfig config = mhdrt::parse_config(buf.str());

    mhdrt::RunOptions options;
    options.threads = threads;
    if (seed_set) options.seed = seed;

    const auto subcommand = mhdrt::subcommand_from_string(app.get_subcommands().front()->get_name());
    const mhdrt::ResultBundle bundle = mhdrt::run(subcommand, config, options);
    if (out_path.empty()) {
      mhdrt::emit(bundle, format, std::cout);
    } else {
      mhdrt::emit_to_file(bundle, format, out_path);
    }
    return 0;
  } catch (const std::exception& e) {
    nlohmann::json err;
    err["error"] = e.what();
    std::cerr << err.dump(2) << std::endl;
    return 1;
  }
}
