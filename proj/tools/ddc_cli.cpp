// ddc: collect data, analyze, synthesize and simulate from the command line.
//
// Exit codes: 0 success, 2 invalid input, 3 no solution, 4 numerical failure.

#include <functional>
#include <iostream>
#include <vector>

#include "CLI11.hpp"
#include "ddc/ddc.hpp"

namespace {

using ddc::pipeline::PipelineConfig;

// Flags shared by all subcommands. Values given on the command line override
// the config file, which overrides the built-in defaults.
struct Flags {
  PipelineConfig raw;
  std::string config_file;
  std::vector<std::pair<CLI::Option*, std::function<void(PipelineConfig&)>>> overrides;

  template <class T>
  void add(CLI::App* app, const std::string& name, T PipelineConfig::*field, const std::string& help) {
    CLI::Option* opt = app->add_option(name, raw.*field, help);
    overrides.emplace_back(opt, [this, field](PipelineConfig& c) { c.*field = raw.*field; });
  }

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "JSON file with pipeline settings");
    add(app, "--plant", &PipelineConfig::plant_file, "plant transfer matrix (JSON)");
    add(app, "--data", &PipelineConfig::data_file, "trajectory CSV");
    add(app, "--controller", &PipelineConfig::controller_file, "controller JSON");
    add(app, "-L,--lag", &PipelineConfig::L, "window lag L (windows span L+1 samples)");
    add(app, "-T,--samples", &PipelineConfig::T, "data length; collect writes T+1 samples");
    add(app, "--seed", &PipelineConfig::seed, "excitation seed");
    add(app, "--amplitude", &PipelineConfig::amplitude, "excitation amplitude");
    add(app, "--tol", &PipelineConfig::tol_rel, "relative rank tolerance");
    add(app, "--eps", &PipelineConfig::eps, "decrease margin for the constrained step");
    add(app, "--horizon", &PipelineConfig::horizon, "closed-loop steps");
    add(app, "--out", &PipelineConfig::output_dir, "output directory");
    add(app, "--decay", &PipelineConfig::decay, "closed-loop decay rate bound in (0,1]");
    add(app, "--init-steps", &PipelineConfig::init_steps, "open-loop steps before closing the loop");
    add(app, "--init-amplitude", &PipelineConfig::init_amplitude, "excitation amplitude of that run");
    add(app, "--zero-init", &PipelineConfig::zero_init, "start the closed loop from rest");
    CLI::Option* n = app->add_option("--n-hint", n_hint, "state dimension for the rank check");
    overrides.emplace_back(n, [this](PipelineConfig& c) { c.n_hint = n_hint; });
  }

  [[nodiscard]] PipelineConfig resolve() const {
    PipelineConfig c;
    if (!config_file.empty()) {
      auto in = ddc::pipeline::open_input(config_file, "config file");
      ddc::pipeline::apply_config_json(c, ddc::io::parse_json(in, "config file '" + config_file + "'"));
    }
    for (const auto& [opt, apply] : overrides) {
      if (opt->count() > 0) apply(c);
    }
    return c;
  }

  Eigen::Index n_hint = 0;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data-driven analysis and control through the Hankel parameterizer"};
  app.require_subcommand(1);

  Flags flags;
  std::function<void(const PipelineConfig&)> action;

  auto* collect = app.add_subcommand("collect", "simulate the plant open loop and write data.csv");
  flags.attach(collect);
  collect->callback([&] { action = [](const PipelineConfig& c) { ddc::pipeline::cmd_collect(c); }; });

  auto* analyze = app.add_subcommand("analyze", "identify the transition model and write analysis.json");
  flags.attach(analyze);
  analyze->callback([&] { action = [](const PipelineConfig& c) { ddc::pipeline::cmd_analyze(c); }; });

  auto* synth = app.add_subcommand("synthesize", "design a stabilizing controller and write controller.json");
  flags.attach(synth);
  synth->callback([&] { action = [](const PipelineConfig& c) { ddc::pipeline::cmd_synthesize(c); }; });

  auto* sim = app.add_subcommand("simulate", "run the plant in closed loop and write closed_loop.csv");
  flags.attach(sim);
  sim->callback([&] { action = [](const PipelineConfig& c) { ddc::pipeline::cmd_simulate(c); }; });

  auto* run = app.add_subcommand("run", "collect, synthesize and simulate in one go");
  flags.attach(run);
  run->callback([&] {
    action = [](const PipelineConfig& c) {
      PipelineConfig cfg = c;
      const auto collected = ddc::pipeline::cmd_collect(cfg);
      cfg.data_file = collected.csv_path.string();
      const auto synthesized = ddc::pipeline::cmd_synthesize(cfg);
      cfg.controller_file = synthesized.json_path.string();
      ddc::pipeline::cmd_simulate(cfg);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    action(flags.resolve());
  } catch (const ddc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
