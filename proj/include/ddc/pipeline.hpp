#pragma once

// End-to-end commands behind the `ddc` command line tool. Each command checks
// all of its inputs before it writes any file.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "ddc/io.hpp"

namespace ddc::pipeline {

namespace fs = std::filesystem;

struct PipelineConfig {
  std::string plant_file;
  std::string data_file;
  std::string controller_file;
  Eigen::Index L = 8;
  Eigen::Index T = 60;
  std::uint64_t seed = 42;
  double amplitude = 1.0;
  double tol_rel = kDefaultRankTol;
  double eps = 1e-6;
  Eigen::Index horizon = 60;
  std::string output_dir = ".";
  double decay = 0.8;
  std::optional<Eigen::Index> n_hint;  // defaults to the plant realization order
  Eigen::Index init_steps = 20;        // open-loop run that seeds the closed loop
  double init_amplitude = 0.1;
  bool zero_init = false;

  void validate() const {
    if (L < 1) throw InvalidInput("L must be positive");
    if (T < 1) throw InvalidInput("T must be positive");
    if (horizon < 1) throw InvalidInput("horizon must be positive");
    if (!(tol_rel > 0.0 && tol_rel < 1.0)) throw InvalidInput("tol must lie in (0, 1)");
    if (!(eps > 0.0 && eps < 1.0)) throw InvalidInput("eps must lie in (0, 1)");
    if (!(decay > 0.0 && decay <= 1.0)) throw InvalidInput("decay must lie in (0, 1]");
    if (!std::isfinite(amplitude) || amplitude < 0.0) throw InvalidInput("amplitude must be >= 0");
    if (init_steps < L + 1) throw InvalidInput("init-steps must be at least L+1");
  }
};

/// Applies the keys present in a JSON config document.
inline void apply_config_json(PipelineConfig& c, const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidInput("config file must hold a JSON object");
  try {
    if (j.contains("plant")) c.plant_file = j["plant"].get<std::string>();
    if (j.contains("data")) c.data_file = j["data"].get<std::string>();
    if (j.contains("controller")) c.controller_file = j["controller"].get<std::string>();
    if (j.contains("L")) c.L = j["L"].get<Eigen::Index>();
    if (j.contains("T")) c.T = j["T"].get<Eigen::Index>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("amplitude")) c.amplitude = j["amplitude"].get<double>();
    if (j.contains("tol")) c.tol_rel = j["tol"].get<double>();
    if (j.contains("eps")) c.eps = j["eps"].get<double>();
    if (j.contains("horizon")) c.horizon = j["horizon"].get<Eigen::Index>();
    if (j.contains("out")) c.output_dir = j["out"].get<std::string>();
    if (j.contains("decay")) c.decay = j["decay"].get<double>();
    if (j.contains("n_hint")) c.n_hint = j["n_hint"].get<Eigen::Index>();
    if (j.contains("init_steps")) c.init_steps = j["init_steps"].get<Eigen::Index>();
    if (j.contains("init_amplitude")) c.init_amplitude = j["init_amplitude"].get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("config file: ") + e.what());
  }
}

inline std::ifstream open_input(const std::string& path, const std::string& what) {
  if (path.empty()) throw InvalidInput(what + " path not given");
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + what + " '" + path + "'");
  return in;
}

[[nodiscard]] inline TransferMatrix load_plant(const std::string& path) {
  auto in = open_input(path, "plant file");
  return io::plant_from_json(io::parse_json(in, "plant file '" + path + "'"));
}

[[nodiscard]] inline Trajectory load_trajectory(const std::string& path) {
  auto in = open_input(path, "data file");
  try {
    return io::read_trajectory_csv(in);
  } catch (const InvalidInput& e) {
    throw InvalidInput(path + ": " + e.what());
  }
}

[[nodiscard]] inline Controller load_controller(const std::string& path, double tol_rel) {
  auto in = open_input(path, "controller file");
  return io::controller_from_json(io::parse_json(in, "controller file '" + path + "'"), tol_rel);
}

inline void write_text(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write '" + path.string() + "'");
  out << content;
}

[[nodiscard]] inline std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------

struct CollectResult {
  Trajectory data;
  ExcitationReport excitation;
  fs::path csv_path, meta_path;
};

/// Open-loop data collection with a uniform random excitation.
inline CollectResult cmd_collect(const PipelineConfig& c, std::ostream& log = std::cout) {
  c.validate();
  if (c.T < c.L + 1) {
    throw InvalidInput("T=" + std::to_string(c.T) + " is shorter than L+1=" +
                       std::to_string(c.L + 1) + "; the Hankel matrix needs T+1 >= L+2 samples");
  }
  const PlantRealization pr = realize(load_plant(c.plant_file));
  const Matrix u = generate_excitation(pr.m, c.T + 1, c.seed, c.amplitude);
  SimulationRun run = simulate_open(pr, u);
  run.seed = c.seed;

  const Eigen::Index n_hint = c.n_hint.value_or(pr.order());
  CollectResult res{run.trajectory, check_excitation(build_hankel(run.trajectory, c.L), n_hint, c.tol_rel),
                    fs::path(c.output_dir) / "data.csv", fs::path(c.output_dir) / "data.meta.json"};

  std::ostringstream csv;
  io::write_trajectory_csv(csv, res.data);
  nlohmann::json meta = {{"mode", "open"},       {"seed", c.seed},           {"T", c.T},
                         {"L", c.L},             {"amplitude", c.amplitude}, {"samples", res.data.size()},
                         {"m", pr.m},            {"p", pr.p},                {"plant_order", pr.order()},
                         {"rank", res.excitation.rank}, {"rank_target", (c.L + 1) * pr.m + n_hint},
                         {"excitation_satisfied", res.excitation.satisfied}};
  write_text(res.csv_path, csv.str());
  write_text(res.meta_path, dump(meta));

  log << "collected " << res.data.size() << " samples -> " << res.csv_path.string() << "\n";
  log << "Hankel rank " << res.excitation.rank << " (target " << (c.L + 1) * pr.m + n_hint
      << " = (L+1)*m + n, n=" << n_hint << ")\n";
  if (!res.excitation.satisfied) {
    log << "warning: rank condition cannot hold with this data; the behavior will not be fully identified\n";
  }
  return res;
}

struct Identified {
  Trajectory data;
  HankelMatrix hankel;
  ExcitationReport excitation;
  BehaviorBasis basis;
  TransitionModel tm;
};

[[nodiscard]] inline Identified identify(const PipelineConfig& c) {
  Trajectory data = load_trajectory(c.data_file);
  if (!c.plant_file.empty()) {
    const TransferMatrix g = load_plant(c.plant_file);
    const Partition want{g.inputs(), g.outputs()};
    if (data.partition() != want) {
      throw InvalidInput("data header partition " + to_string(data.partition()) +
                         " does not match plant " + to_string(want));
    }
  }
  std::optional<Eigen::Index> hint = c.n_hint;
  if (!hint && !c.plant_file.empty()) hint = realize(load_plant(c.plant_file)).order();
  HankelMatrix h = build_hankel(data, c.L);
  ExcitationReport rep = check_excitation(h, hint, c.tol_rel);
  BehaviorBasis basis = extract_basis(h, c.tol_rel);
  TransitionModel tm = build_transition(basis, c.tol_rel);
  return {std::move(data), std::move(h), std::move(rep), std::move(basis), std::move(tm)};
}

struct AnalyzeResult {
  io::AnalysisSummary summary;
  fs::path json_path;
};

inline AnalyzeResult cmd_analyze(const PipelineConfig& c, std::ostream& log = std::cout) {
  c.validate();
  const Identified id = identify(c);
  io::AnalysisSummary s;
  s.excitation = id.excitation;
  s.spectrum = eigenvalues(id.tm.A);
  s.autonomous = id.tm.virtual_inputs() == 0;
  if (s.autonomous) {
    s.stability = autonomous_stability(id.tm);
  } else {
    s.stabilizability = stabilizable(id.tm, c.tol_rel);
  }
  AnalyzeResult res{s, fs::path(c.output_dir) / "analysis.json"};
  write_text(res.json_path, dump(io::analysis_to_json(s)));

  log << "rank " << s.excitation.rank << ", inferred n " << s.excitation.inferred_n
      << ", excitation " << (s.excitation.satisfied ? "ok" : "NOT satisfied") << "\n";
  log << "spectral radius of A: " << s.spectrum.spectral_radius << "\n";
  if (s.stability) log << "autonomous behavior is " << (s.stability->stable ? "stable" : "unstable") << "\n";
  if (s.stabilizability) {
    log << "stabilizable: " << (s.stabilizability->stabilizable ? "true" : "false")
        << ", uncontrollable eigenvalues " << format_eigenvalues(s.stabilizability->uncontrollable_eigs)
        << "\n";
  }
  log << "wrote " << res.json_path.string() << "\n";
  return res;
}

struct SynthesizeResult {
  Controller controller;
  double lmi_min_eigenvalue = 0.0;
  double closed_loop_radius = 0.0;
  fs::path json_path;
};

inline SynthesizeResult cmd_synthesize(const PipelineConfig& c, std::ostream& log = std::cout) {
  c.validate();
  const Identified id = identify(c);
  SynthesisOptions opt;
  opt.decay_rate = c.decay;
  opt.tol_rel = c.tol_rel;
  SynthesizeResult res{synthesize(id.tm, opt), 0.0, 0.0, fs::path(c.output_dir) / "controller.json"};
  res.lmi_min_eigenvalue = verify_lmi(res.controller);
  res.closed_loop_radius = spectral_radius(res.controller.A_cl);
  write_text(res.json_path, dump(io::controller_to_json(res.controller)));
  log << "LMI min eigenvalue " << res.lmi_min_eigenvalue << "\n";
  log << "closed-loop spectral radius " << res.closed_loop_radius << "\n";
  log << "wrote " << res.json_path.string() << "\n";
  return res;
}

struct SimulateResult {
  SimulationRun run;
  double initial_max = 0.0;  // max |w| over the seed window
  double tail_max = 0.0;     // max |w| over the last 10 closed-loop steps
  fs::path csv_path, meta_path, svg_path;
};

inline SimulateResult cmd_simulate(const PipelineConfig& c, std::ostream& log = std::cout) {
  c.validate();
  const PlantRealization pr = realize(load_plant(c.plant_file));
  const Controller ctrl = load_controller(c.controller_file, c.tol_rel);
  const Partition plant_part{pr.m, pr.p};
  if (ctrl.tm.basis.part != plant_part) {
    throw InvalidInput("controller built for " + to_string(ctrl.tm.basis.part) + " but plant is " +
                       to_string(plant_part));
  }
  const Eigen::Index L = ctrl.tm.basis.L;
  if (c.init_steps < L + 1) throw InvalidInput("init-steps must be at least the controller's L+1");

  Trajectory init;
  Vector x;
  if (c.zero_init) {
    init = Trajectory(plant_part, Matrix::Zero(L + 1, plant_part.w()));
    x = Vector::Zero(pr.order());
  } else {
    const Matrix u0 = generate_excitation(pr.m, c.init_steps, c.seed + 1, c.init_amplitude);
    const SimulationRun seed_run = simulate_open(pr, u0);
    init = seed_run.trajectory.slice(c.init_steps - (L + 1), L + 1);
    x = seed_run.final_state;
  }
  SimulateResult res;
  res.run = simulate_closed(pr, ctrl, init, c.horizon, x);
  res.run.seed = c.seed;
  const Matrix& s = res.run.trajectory.samples();
  res.initial_max = s.topRows(L + 1).cwiseAbs().maxCoeff();
  const Eigen::Index tail = std::min<Eigen::Index>(10, c.horizon);
  res.tail_max = s.bottomRows(tail).cwiseAbs().maxCoeff();

  const fs::path out(c.output_dir);
  res.csv_path = out / "closed_loop.csv";
  res.meta_path = out / "closed_loop.meta.json";
  res.svg_path = out / "closed_loop.svg";
  std::ostringstream csv, svg;
  io::write_trajectory_csv(csv, res.run.trajectory);
  io::write_svg_plot(svg, res.run.trajectory, "closed loop");
  nlohmann::json meta = {{"mode", "closed"},
                         {"seed", c.seed},
                         {"L", L},
                         {"horizon", c.horizon},
                         {"samples", res.run.trajectory.size()},
                         {"zero_init", c.zero_init},
                         {"initial_window_max_abs", res.initial_max},
                         {"last10_max_abs", res.tail_max},
                         {"final_state_norm", res.run.final_state.norm()}};
  write_text(res.csv_path, csv.str());
  write_text(res.meta_path, dump(meta));
  write_text(res.svg_path, svg.str());

  log << "closed loop: " << c.horizon << " steps, max|w| initial window " << res.initial_max
      << ", last " << tail << " steps " << res.tail_max;
  if (res.initial_max > 0.0) log << " (ratio " << res.tail_max / res.initial_max << ")";
  log << "\nwrote " << res.csv_path.string() << ", " << res.svg_path.string() << "\n";
  return res;
}

}  // namespace ddc::pipeline
