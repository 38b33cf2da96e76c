#include "atomarray/errors.hpp"
#include "atomarray/runner.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

int main(int argc, char** argv) {
  CLI::App app{"Stochastic-wavefunction simulation of a sub-wavelength atom-array mirror"};
  std::string config_path;
  std::string preset_name;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trajectories;
  std::optional<unsigned> threads;
  std::string out_dir;
  std::string format;
  bool list = false;

  app.add_option("--config", config_path, "INI configuration file")->check(CLI::ExistingFile);
  app.add_option("--preset", preset_name, "Start from a named parameter set");
  app.add_option("--seed", seed, "Base random seed");
  app.add_option("--trajectories", trajectories, "Trajectories per point")->check(CLI::Range(2, 1 << 30));
  app.add_option("--threads", threads, "Worker threads (0: all cores)");
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--format", format, "Spectrum format")->check(CLI::IsMember({"csv", "json", "both"}));
  app.add_flag("--list-presets", list, "Print the preset names and exit");
  CLI11_PARSE(app, argc, argv);

  using namespace atomarray;
  if (list) {
    for (const auto& n : preset_names()) std::cout << n << '\n';
    return 0;
  }
  try {
    RunConfig config = preset_name.empty() ? RunConfig{} : preset(preset_name);
    if (!config_path.empty()) config = load_config(config_path, config);
    if (seed) config.seed = *seed;
    if (trajectories) config.trajectories = *trajectories;
    if (threads) config.threads = *threads;
    if (!out_dir.empty()) config.out_dir = out_dir;
    if (format == "csv") config.format = OutputFormat::csv;
    if (format == "json") config.format = OutputFormat::json;
    if (format == "both") config.format = OutputFormat::both;
    run(config, std::cerr);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
