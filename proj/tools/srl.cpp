#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "srl/broad.hpp"
#include "srl/grid_io.hpp"
#include "srl/scenario.hpp"

namespace {

using srl::ScenarioConfig;

void add_config_flags(CLI::App& app, ScenarioConfig& c) {
  app.add_option("--gamma", c.gammas, "gamma values")->delimiter(',');
  app.add_option("--R", c.Rs, "R values")->delimiter(',');
  app.add_option("--K", c.K, "cap scale K")->capture_default_str();
  app.add_option("--epsilon", c.epsilon)->capture_default_str();
  app.add_option("--alpha", c.alpha, "broadness threshold, 0 for K^-epsilon")->capture_default_str();
  app.add_option("--mu", c.mu, "cap multiplicity")->capture_default_str();
  app.add_option("--p", c.ps, "Lebesgue exponents")->delimiter(',');
  app.add_option("--q", c.qs, "right side exponents")->delimiter(',');
  app.add_option("--N", c.N, "samples per unit length, 0 for 4R")->capture_default_str();
  app.add_option("--M", c.M, "grid points per axis, 0 for 2R rounded to a power of two")
      ->capture_default_str();
  app.add_option("--seed", c.seed)->capture_default_str();
  app.add_option("--samples", c.samples, "random functions or fuzz trials")->capture_default_str();
  app.add_option("--D", c.D, "partition degree parameter")->capture_default_str();
  app.add_option("--delta", c.delta)->capture_default_str();
  app.add_option("--output", c.output, "output directory")->capture_default_str();
}

srl::SampledFunction source(const std::string& kind, const ScenarioConfig& c, double R) {
  if (kind == "knapp") return srl::knapp(R, {0.5, 0.5});
  if (kind == "random") return srl::random_gaussian(c.samples_for(R), c.seed);
  throw CLI::ValidationError("--f", "expected random or knapp");
}

std::string in_output(const ScenarioConfig& c, const std::string& name) {
  std::filesystem::create_directories(c.output);
  return (std::filesystem::path(c.output) / name).string();
}

int run_named(ScenarioConfig c, const std::string& scenario) {
  c.scenario = scenario;
  c.validate();
  std::cout << srl::run(c) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Saddle restriction experiments. Thread count: SRL_THREADS."};
  app.require_subcommand(1);

  ScenarioConfig cfg;
  cfg.gammas = {0.5};
  cfg.Rs = {32};
  std::string f_kind = "random";
  std::string grid_path;

  auto* eval = app.add_subcommand("eval", "evaluate E f on the cube grid and write a binary grid");
  add_config_flags(*eval, cfg);
  eval->add_option("--f", f_kind, "random or knapp")->capture_default_str();
  eval->add_option("--grid", grid_path, "output grid file (default <output>/eval.srl)");

  auto* norms = app.add_subcommand("norms", "norm-sweep scenario");
  add_config_flags(*norms, cfg);

  auto* broad = app.add_subcommand("broad", "broad-stats scenario");
  add_config_flags(*broad, cfg);

  auto* classify = app.add_subcommand("classify", "label grid points A/B/C/D and write the labels");
  add_config_flags(*classify, cfg);
  classify->add_option("--f", f_kind, "random or knapp")->capture_default_str();
  classify->add_option("--grid", grid_path, "output grid file (default <output>/labels.srl)");

  auto* knapp = app.add_subcommand("knapp", "knapp-sweep scenario");
  add_config_flags(*knapp, cfg);

  auto* geolemma = app.add_subcommand("geolemma", "geolemma-fuzz scenario");
  add_config_flags(*geolemma, cfg);

  auto* packets = app.add_subcommand("packets", "packet-audit scenario");
  add_config_flags(*packets, cfg);

  auto* partition = app.add_subcommand("partition", "partition-audit scenario");
  add_config_flags(*partition, cfg);

  std::string config_path;
  std::string output_override;
  auto* scan = app.add_subcommand("scan", "run a scenario from a configuration file");
  scan->add_option("config", config_path, "key = value configuration")->required()->check(
      CLI::ExistingFile);
  scan->add_option("--output", output_override, "override the output directory");
  bool print_config = false;
  scan->add_flag("--print-config", print_config, "print the normalised configuration and exit");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*eval || *classify) {
      cfg.scenario = "norm-sweep";
      cfg.validate();
      const double gamma = cfg.gammas.front();
      const double R = cfg.Rs.front();
      const srl::SampledFunction f = source(f_kind, cfg, R);
      const std::size_t M = cfg.grid_for(R);
      if (*eval) {
        const srl::Field3 field = srl::evaluate_extension(f, gamma, R, M);
        const std::string path = grid_path.empty() ? in_output(cfg, "eval.srl") : grid_path;
        srl::write_grid_file(path, field, gamma);
        std::cout << path << '\n';
      } else {
        const srl::ScaleParams params{R, cfg.K, cfg.epsilon, cfg.effective_alpha(), cfg.mu};
        const srl::ClassifiedField cls =
            srl::classify_points(f, srl::Surface(gamma), params, M);
        const std::vector<double> labels(cls.labels.begin(), cls.labels.end());
        const std::string path = grid_path.empty() ? in_output(cfg, "labels.srl") : grid_path;
        srl::write_grid_file(path, cls.grid, labels, gamma);
        std::cout << "label,count\n";
        static constexpr char names[4] = {'A', 'B', 'C', 'D'};
        for (int k = 0; k < 4; ++k) std::cout << names[k] << ',' << cls.counts[k] << '\n';
        std::cout << path << '\n';
      }
      return 0;
    }
    if (*norms) return run_named(cfg, "norm-sweep");
    if (*broad) return run_named(cfg, "broad-stats");
    if (*knapp) return run_named(cfg, "knapp-sweep");
    if (*geolemma) return run_named(cfg, "geolemma-fuzz");
    if (*packets) return run_named(cfg, "packet-audit");
    if (*partition) return run_named(cfg, "partition-audit");

    ScenarioConfig c = srl::parse_config_file(config_path);
    if (!output_override.empty()) c.output = output_override;
    if (print_config) {
      std::cout << srl::format_config(c);
      return 0;
    }
    std::cout << srl::run(c) << '\n';
    return 0;
  } catch (const srl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
