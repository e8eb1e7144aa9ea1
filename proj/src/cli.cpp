/* ------------------------------------------------------------------------- *
 * crawl - dynamic inchworm crawling simulation and optimization toolkit
 *
 * Licensed under the Apache License, Version 2.0 (the "License"); you may
 * not use this file except in compliance with the License. You may obtain a
 * copy of the License at http://www.apache.org/licenses/LICENSE-2.0.
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * ------------------------------------------------------------------------- */
#include "crawl/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace crawl::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void report_error(const std::string& kind, const json& extra) {
  json e = extra;
  e["error"] = kind;
  std::cerr << e.dump() << "\n";
}

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

// Steady-window slip fractions: everything after the transient cycles.
SlipFractions tail_fractions(const Trajectory& traj, const InputSpec& in,
                             int n_ss) {
  const double t0 = std::min(n_ss * in.period(), traj.t_end);
  return slip_fractions(traj, t0, traj.t_end);
}

int run_simulate(const ExperimentConfig& cfg, const std::string& out) {
  const Trajectory traj =
      simulate(cfg.robot, cfg.input, cfg.cycles * cfg.input.period(),
               cfg.sim);
  const StepMetrics m = step_metrics(traj, cfg.input, cfg.n_ss);
  const SlipFractions sf = tail_fractions(traj, cfg.input, cfg.n_ss);
  const json rc = cfg.resolved();
  write_file(join(out, "trajectory.csv"), trajectory_csv(traj, rc));
  write_file(join(out, "events.csv"), events_csv(traj, rc));
  write_file(join(out, "metrics.csv"), metrics_csv(m, sf, rc));
  if (traj.termination != Termination::Normal) {
    report_error("termination", {{"termination", to_string(traj.termination)},
                                 {"detail", traj.detail},
                                 {"t_end", traj.t_end}});
    return kExitTermination;
  }
  return kExitOk;
}

int run_control(const ExperimentConfig& cfg, const std::string& out) {
  const ClosedLoopResult res = simulate_closed_loop(
      cfg.robot, cfg.controller, cfg.input,
      cfg.cycles * cfg.input.period(), cfg.sim, std::nullopt, cfg.n_ss);
  const SlipFractions sf = tail_fractions(res.traj, cfg.input, cfg.n_ss);
  const json rc = cfg.resolved();
  write_file(join(out, "control_trajectory.csv"),
             trajectory_csv(res.traj, rc, true));
  write_file(join(out, "control_events.csv"), events_csv(res.traj, rc));
  write_file(join(out, "control_metrics.csv"),
             metrics_csv(res.metrics, sf, rc));
  if (res.traj.termination != Termination::Normal) {
    report_error("termination",
                 {{"termination", to_string(res.traj.termination)},
                  {"detail", res.traj.detail},
                  {"t_end", res.traj.t_end}});
    return kExitTermination;
  }
  return kExitOk;
}

SweepSettings sweep_settings(const ExperimentConfig& cfg) {
  SweepSettings s;
  s.cycles = cfg.cycles;
  s.n_ss = cfg.n_ss;
  s.sim = cfg.sim;
  s.jobs = cfg.jobs;
  s.robust_eps = cfg.robustness.eps;
  s.robust_grid = cfg.robustness.grid_n;
  return s;
}

int run_sweep(const ExperimentConfig& cfg, const std::string& out) {
  const SweepResult r = sweep(cfg.robot, cfg.input, cfg.sweep.axes,
                              cfg.sweep.objective, sweep_settings(cfg));
  write_file(join(out, "sweep.csv"), sweep_csv(r, cfg.resolved()));
  return kExitOk;
}

int run_phase(const ExperimentConfig& cfg, const std::string& out) {
  const PhaseCurve c = optimal_phase_curve(
      cfg.robot, cfg.input, cfg.phase.omega, cfg.phase.psi,
      cfg.phase.objective, cfg.phase.ma_window, sweep_settings(cfg));
  write_file(join(out, "phase.csv"), phase_csv(c, cfg.resolved()));
  return kExitOk;
}

int run_robustness(const ExperimentConfig& cfg, const std::string& out) {
  const auto& axes = cfg.robustness.axes;
  long total = 1;
  for (const Axis& a : axes) total *= static_cast<long>(a.values.size());

  std::ostringstream os;
  for (const Axis& a : axes) os << a.name << ",";
  os << "S,S_min,S_max,S_mu,ok,status\n";

  for (long idx = 0; idx < total; ++idx) {
    RobotParams p = cfg.robot;
    InputSpec in = cfg.input;
    long rem = idx;
    std::vector<double> coords(axes.size());
    for (int a = static_cast<int>(axes.size()) - 1; a >= 0; --a) {
      const long n = static_cast<long>(axes[a].values.size());
      coords[a] = axes[a].values[rem % n];
      rem /= n;
    }
    double S = std::numeric_limits<double>::quiet_NaN();
    RobustnessResult rr;
    std::string status;
    try {
      for (size_t a = 0; a < axes.size(); ++a)
        apply_axis(p, in, axes[a].name, coords[a]);
      in.validate();
      const GaitEval eval =
          make_distance_eval(in, cfg.cycles, cfg.sim, cfg.n_ss);
      S = eval(p);
      rr = uncertain_friction_distance(p, cfg.robustness.eps,
                                       cfg.robustness.grid_n, eval,
                                       cfg.jobs);
      if (!rr.ok) status = "all robustness cells failed";
    } catch (const std::exception& e) {
      status = e.what();
    }
    for (char& c : status)
      if (c == ',') c = ';';
    for (const double c : coords) os << csv_number(c) << ",";
    os << csv_number(S) << "," << csv_number(rr.S_min) << ","
       << csv_number(rr.S_max) << "," << csv_number(rr.S_mu) << ","
       << (rr.ok && status.empty() ? 1 : 0) << "," << status << "\n";
  }
  write_file(join(out, "robustness.csv"),
             csv_header("robustness", cfg.resolved(), os.str()));
  return kExitOk;
}

int run_optimize(const ExperimentConfig& cfg, const std::string& out) {
  const auto& ob = cfg.optimize;
  const BoObjective f = [&cfg, &ob](const Eigen::VectorXd& x) {
    RobotParams p = cfg.robot;
    InputSpec in = cfg.input;
    for (size_t i = 0; i < ob.params.size(); ++i)
      apply_axis(p, in, ob.params[i], x[static_cast<int>(i)]);
    in.validate();
    const GaitEval eval =
        make_distance_eval(in, cfg.cycles, cfg.sim, cfg.n_ss);
    if (ob.objective == Objective::Smu) {
      const RobustnessResult rr = uncertain_friction_distance(
          p, cfg.robustness.eps, cfg.robustness.grid_n, eval, cfg.jobs);
      if (!rr.ok) throw std::runtime_error("all robustness cells failed");
      return rr.S_mu;
    }
    const double S = eval(p);
    return ob.objective == Objective::V ? S / in.period() : S;
  };
  const BoResult r = bayes_optimize(f, ob.bounds, ob.bo);
  write_file(join(out, "optimize.csv"),
             bo_csv(r, ob.params, cfg.resolved()));
  return kExitOk;
}

// Directory holding the committed reproduce configs: --configs flag,
// CRAWL_CONFIG_DIR, or ./configs/reproduce.
std::string reproduce_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("CRAWL_CONFIG_DIR")) return env;
  return "configs/reproduce";
}

}  // namespace

int run_command(const std::string& command, const ExperimentConfig& cfg,
                const std::string& out_dir) {
  try {
    fs::create_directories(out_dir);
    if (command == "simulate") return run_simulate(cfg, out_dir);
    if (command == "control") return run_control(cfg, out_dir);
    if (command == "sweep") return run_sweep(cfg, out_dir);
    if (command == "phase") return run_phase(cfg, out_dir);
    if (command == "robustness") return run_robustness(cfg, out_dir);
    if (command == "optimize") return run_optimize(cfg, out_dir);
    report_error("usage", {{"detail", "unknown command " + command}});
    return kExitConfig;
  } catch (const std::exception& e) {
    report_error("config", {{"detail", e.what()}});
    return kExitConfig;
  }
}

int main_entry(int argc, char** argv) {
  CLI::App app{
      "crawl: simulation and optimization toolkit for dynamic inchworm "
      "crawling of a three-link robot with frictional point contacts"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".", configs_flag;
  std::string figure_id;
  int jobs = -1;
  long seed = -1;
  double tol_scale = 0;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    if (needs_config)
      sub->add_option("--config", config_path, "experiment config (JSON)")
          ->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--jobs", jobs,
                    "parallel jobs (0 = all cores; also CRAWL_JOBS)");
    sub->add_option("--seed", seed, "override the optimizer seed");
    sub->add_option("--tol-scale", tol_scale,
                    "multiply integrator tolerances (CI speed knob)");
  };

  std::vector<std::string> commands = {"simulate", "sweep", "robustness",
                                       "optimize", "control", "phase"};
  for (const std::string& c : commands) add_common(app.add_subcommand(c), true);

  CLI::App* rep = app.add_subcommand(
      "reproduce", "rerun a committed figure-data config by id");
  rep->add_option("id", figure_id, "figure id, e.g. fig4")->required();
  rep->add_option("--configs", configs_flag,
                  "directory with the committed reproduce configs");
  add_common(rep, false);

  CLI::App* val = app.add_subcommand(
      "validate", "schema-check a config and report findings");
  val->add_option("--config", config_path, "experiment config (JSON)")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    report_error("usage", {{"detail", e.what()}});
    return kExitConfig;
  }

  try {
    if (val->parsed()) {
      std::ifstream f(config_path);
      if (!f) throw std::invalid_argument("config: cannot open " +
                                          config_path);
      json j;
      try {
        f >> j;
      } catch (const json::parse_error& e) {
        json rep_json;
        rep_json["valid"] = false;
        rep_json["findings"] = json::array({std::string("config: ") +
                                            e.what()});
        std::cout << rep_json.dump(2) << "\n";
        return kExitOk;
      }
      const std::vector<std::string> findings = validate_config(j);
      json rep_json;
      rep_json["valid"] = findings.empty();
      rep_json["findings"] = findings;
      std::cout << rep_json.dump(2) << "\n";
      return kExitOk;
    }

    std::string command;
    ExperimentConfig cfg;
    if (rep->parsed()) {
      const std::string dir = reproduce_dir(configs_flag);
      const std::string path = join(dir, figure_id + ".json");
      if (!fs::exists(path)) {
        report_error("usage",
                     {{"detail", "no reproduce config " + path}});
        return kExitConfig;
      }
      cfg = load_config(path);
      if (cfg.command.empty()) {
        report_error("config",
                     {{"detail", path + " lacks a \"command\" field"}});
        return kExitConfig;
      }
      command = cfg.command;
    } else {
      for (const std::string& c : commands)
        if (app.get_subcommand(c)->parsed()) command = c;
      cfg = load_config(config_path);
    }

    if (jobs >= 0) cfg.jobs = jobs;
    else if (const char* env = std::getenv("CRAWL_JOBS"))
      cfg.jobs = std::atoi(env);
    if (seed >= 0) cfg.optimize.bo.seed = static_cast<uint64_t>(seed);
    if (tol_scale > 0) cfg.sim.tol_scale *= tol_scale;

    return run_command(command, cfg, out_dir);
  } catch (const std::exception& e) {
    report_error("config", {{"detail", e.what()}});
    return kExitConfig;
  }
}

}  // namespace crawl::cli
