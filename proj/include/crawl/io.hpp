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
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "crawl/controller.hpp"
#include "crawl/metrics.hpp"
#include "crawl/optimize.hpp"
#include "crawl/sim.hpp"

namespace crawl {

// Experiment configuration, one JSON file per run. Angles may be given in
// degrees by suffixing the key (or axis/parameter name) with _deg; values
// are normalized to SI on load. Unknown keys are rejected with their path.
struct SweepBlock {
  std::vector<Axis> axes;
  Objective objective = Objective::S;
};

struct RobustnessBlock {
  std::vector<Axis> axes;  // points at which S_mu is evaluated
  double eps = 0.1;
  int grid_n = 3;
};

struct PhaseBlock {
  std::vector<double> omega, psi;
  Objective objective = Objective::S;
  int ma_window = 5;
};

struct OptimizeBlock {
  std::vector<std::string> params;  // axis names, _deg accepted
  std::vector<std::pair<double, double>> bounds;
  Objective objective = Objective::S;
  BoSettings bo;
};

struct ExperimentConfig {
  RobotParams robot;
  InputSpec input;
  SimOptions sim;
  ControllerConfig controller;
  double cycles = 10;  // horizon for simulate/control, in periods
  int n_ss = 5;        // discarded transient cycles
  int jobs = 0;        // 0: all cores; excluded from the resolved dump
  std::string command;  // embedded command, used by `reproduce`

  SweepBlock sweep;
  RobustnessBlock robustness;
  PhaseBlock phase;
  OptimizeBlock optimize;

  // Fully resolved settings (defaults filled in, SI units) for the CSV
  // provenance header. Deliberately leaves out the parallelism degree so
  // output bytes do not depend on it.
  nlohmann::json resolved() const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

// Schema/invariant findings for the whole file, empty when valid. Each
// finding carries the offending field path.
std::vector<std::string> validate_config(const nlohmann::json& j);

// 64-bit FNV-1a, used as the CSV content hash.
uint64_t fnv1a64(std::string_view s);

// CSV emission. Every file starts with a YAML-like comment block holding
// the resolved config and an FNV-1a hash of the data section; numbers are
// written with %.17g so reruns are byte-identical.
std::string csv_number(double v);
std::string csv_header(const std::string& kind, const nlohmann::json& config,
                       const std::string& data);

std::string trajectory_csv(const Trajectory& traj,
                           const nlohmann::json& config,
                           bool commanded_columns = false);
std::string events_csv(const Trajectory& traj, const nlohmann::json& config);
std::string metrics_csv(const StepMetrics& m, const SlipFractions& sf,
                        const nlohmann::json& config);
std::string sweep_csv(const SweepResult& r, const nlohmann::json& config);
std::string phase_csv(const PhaseCurve& c, const nlohmann::json& config);
std::string bo_csv(const BoResult& r, const std::vector<std::string>& names,
                   const nlohmann::json& config);

void write_file(const std::string& path, const std::string& text);

}  // namespace crawl
