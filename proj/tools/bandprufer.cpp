#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "bandprufer/config.hpp"
#include "bandprufer/runner.hpp"
#include "bandprufer/util.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Band structure, Prufer dynamics and embedded-eigenvalue analysis "
               "for periodic operators with decaying perturbations"};

  std::string config_path;
  std::string out_dir = ".";
  int threads = 0;
  int seed = 0;
  app.add_option("config", config_path, "Run description file (key = value lines)")
      ->required();
  app.add_option("--out", out_dir, "Directory for the CSV/JSON artifacts")
      ->capture_default_str();
  app.add_option("--threads", threads, "Worker threads (0: hardware concurrency)")
      ->capture_default_str();
  app.add_option("--seed", seed, "Recorded in the summary metadata; runs are deterministic")
      ->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  using namespace bandprufer;
  try {
    const RunConfig cfg = parse_config_file(config_path);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
      std::fprintf(stderr, "error: cannot create output directory '%s': %s\n", out_dir.c_str(),
                   ec.message().c_str());
      return 3;
    }
    const RunOutput out = execute_run(cfg, out_dir, threads, seed);
    for (const std::string& f : out.files_written) BP_INFO("wrote %s", f.c_str());
    if (out.exit_code != 0) std::fprintf(stderr, "bound check failed\n");
    return out.exit_code;
  } catch (const ConfigError& e) {
    if (e.line() > 0)
      std::fprintf(stderr, "config error (line %d, key '%s'): %s\n", e.line(), e.key().c_str(),
                   e.what());
    else if (!e.key().empty())
      std::fprintf(stderr, "config error (key '%s'): %s\n", e.key().c_str(), e.what());
    else
      std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numerical failure [%s]: %s\n", e.code().c_str(), e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
