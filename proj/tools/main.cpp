// Batch front door: parse experiment configs, run experiments, emit
// machine-readable results.

#include <CLI11.hpp>
#include <iostream>
#include <sstream>

#include "swlab/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Stark-Wannier lattice dynamics laboratory"};
  app.require_subcommand(1);

  swlab::RunManifest manifest;
  manifest.out_dir = "out";

  CLI::App* run = app.add_subcommand("run", "run configured experiments");
  run->add_option("--config", manifest.config_path, "config file path")
      ->required();
  run->add_option("--out", manifest.out_dir, "output directory");
  std::string only;
  run->add_option("--only", only, "comma-separated experiment names");
  run->add_option("--threads", manifest.threads, "worker threads");
  run->add_option("--seed", manifest.seed, "seed for randomized checks");

  CLI::App* verify = app.add_subcommand("verify", "built-in identity suite");
  std::string inject;
  verify->add_option("--inject-fault", inject,
                     "corrupt an input to exercise a failure path (hermitian)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(run)) {
      if (!only.empty()) {
        std::string item;
        std::stringstream ss(only);
        while (std::getline(ss, item, ',')) {
          if (!item.empty()) manifest.only.push_back(item);
        }
      }
      return swlab::run_experiments(manifest, std::cout);
    }
    return swlab::run_verify(std::cout, inject);
  } catch (const swlab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return swlab::kExitConfig;
  } catch (const swlab::ToleranceError& e) {
    std::cerr << "tolerance error: " << e.what() << "\n";
    return swlab::kExitTolerance;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return swlab::kExitInternal;
  }
}
