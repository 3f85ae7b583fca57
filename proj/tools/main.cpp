// Command-line front end: experiment configuration, execution and
// reproducible report emission. Flags override config-file values; sweep
// commands refuse to run without an explicit seed.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "dnlab/errors.hpp"
#include "dnlab/runner.hpp"
#include "dnlab/version.hpp"

namespace {

using nlohmann::json;

json load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw dnlab::ConfigError("cannot open config: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    size_t line = 1, col = 1;
    const size_t stop = e.byte > 0 ? std::min(text.size(), static_cast<size_t>(e.byte) - 1)
                                   : 0;
    for (size_t i = 0; i < stop; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw dnlab::ConfigError(path + ":" + std::to_string(line) + ":" + std::to_string(col) +
                             ": " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dirichlet-to-Neumann laboratory: flat-case oracles, coercivity "
               "certificates and interface evolution"};
  app.set_version_flag("--version", dnlab::kVersion);
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  int threads = 1;
  std::optional<long long> seed;
  std::optional<int> nx, nz;
  std::optional<double> depth;

  const std::pair<const char*, const char*> commands[] = {
      {"flat-check", "compare the solver against the closed-form flat multipliers"},
      {"coercivity", "seeded sweep of quadratic coercivity certificates"},
      {"convex", "seeded sweep of convex-pairing certificates"},
      {"lp", "L^p pairing bounds and empirical Poincare constants"},
      {"sharp", "sharp coercivity constant by Rayleigh-quotient minimization"},
      {"muskat", "one-phase interface evolution with decay diagnostics"},
  };
  for (const auto& [name, desc] : commands) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", config_path, "JSON config (or a manifest to re-run)");
    sub->add_option("--seed", seed, "override the sweep seed");
    sub->add_option("--out", out_dir, "output directory")->capture_default_str();
    sub->add_option("--threads", threads, "worker threads for sweeps")
        ->capture_default_str();
    sub->add_option("--nx", nx, "override horizontal resolution");
    sub->add_option("--nz", nz, "override vertical cells");
    sub->add_option("--depth", depth, "override depth / truncation depth");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    json config = json::object();
    if (!config_path.empty()) {
      config = load_config_file(config_path);
      if (config.is_object() && config.contains("command") && config.contains("config")) {
        // Manifest re-run: commands must agree.
        const std::string recorded = config.at("command").get<std::string>();
        if (recorded != command) {
          throw dnlab::ConfigError("manifest records command '" + recorded +
                                   "' but '" + command + "' was requested");
        }
        config = config.at("config");
      }
    }
    if (seed) config["seed"] = *seed;
    if (nx) config["nx"] = *nx;
    if (nz) config["nz"] = *nz;
    if (depth) config["depth"] = *depth;
    return dnlab::runner::run_command(command, config, out_dir, threads);
  } catch (const dnlab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return dnlab::runner::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return dnlab::runner::kExitTolerance;
  }
}
