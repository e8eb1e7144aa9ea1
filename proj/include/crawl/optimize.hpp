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
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "crawl/metrics.hpp"
#include "crawl/sim.hpp"

namespace crawl {

// ----------------------------------------------------------------------
// Parameter sweeps

struct Axis {
  std::string name;  // omega, psi, phi0, A, alpha, upsilon, mu,
                     // m1_over_m2, leg_mass_fraction
  std::vector<double> values;
};

enum class Objective { S, V, Smu };

Objective objective_from_string(const std::string& s);
const char* to_string(Objective o);

struct SweepSettings {
  double cycles = 10;   // simulated duration in input periods
  int n_ss = 5;         // transient cycles discarded by the metrics
  SimOptions sim;
  int jobs = 1;         // 0: all hardware threads
  bool parallel = true;  // false: serial reference path
  double robust_eps = 0.1;  // friction uncertainty for Objective::Smu
  int robust_grid = 3;
};

struct SweepRow {
  std::vector<double> coords;  // one value per axis, same order
  double objective = 0;
  double S = 0, V = 0;
  bool steady = false;
  bool ok = false;
  std::string status;  // failure description when !ok
};

struct SweepResult {
  std::vector<Axis> axes;
  Objective objective = Objective::S;
  std::vector<SweepRow> rows;  // row-major over the axis grid
};

// Apply one named sweep coordinate to the robot/input pair. Mass axes
// rescale leg inertias proportionally (m1_over_m2 redistributes the leg
// mass sum; leg_mass_fraction sets (m1 + m2) / 2 relative to m0). Throws
// std::invalid_argument for unknown names.
void apply_axis(RobotParams& p, InputSpec& in, const std::string& name,
                double value);

// Cartesian-product sweep of up to a few axes. Rows are ordered row-major
// over the grid regardless of worker count, and every cell is evaluated
// by the same serial code path, so results are bit-identical between the
// parallel and serial variants.
SweepResult sweep(const RobotParams& base_p, const InputSpec& base_in,
                  const std::vector<Axis>& axes, Objective obj,
                  const SweepSettings& s);

// ----------------------------------------------------------------------
// Optimal phase curve

struct PhaseCurve {
  std::vector<double> omega;
  std::vector<double> psi_raw;    // parabola-refined argmax per frequency
  std::vector<double> psi;        // centered moving average of psi_raw
  std::vector<double> value;      // objective at the grid argmax
};

// psi*(omega): argmax of the objective over the psi grid per frequency,
// refined by a parabolic fit through the winning grid point and its
// neighbors, then smoothed with a centered moving average that shrinks
// symmetrically near the ends.
PhaseCurve optimal_phase_curve(const RobotParams& p, const InputSpec& base,
                               const std::vector<double>& omega_grid,
                               const std::vector<double>& psi_grid,
                               Objective obj, int ma_window,
                               const SweepSettings& s);

// ----------------------------------------------------------------------
// Gaussian-process model and Bayesian optimization

class GpModel {
 public:
  // Fit a squared-exponential ARD kernel with noise by maximizing the log
  // marginal likelihood over log hyperparameters (multistart Nelder-Mead,
  // deterministic in `seed`).
  void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
           uint64_t seed = 0, int starts = 4);

  void posterior(const Eigen::VectorXd& x, double& mean, double& var) const;

  double lml() const { return lml_; }
  const Eigen::VectorXd& hyper() const { return hyper_; }

 private:
  double lml_at(const Eigen::VectorXd& h);
  void factorize(const Eigen::VectorXd& h);

  Eigen::MatrixXd X_;
  Eigen::VectorXd y_;       // centered/scaled targets
  double y_mean_ = 0, y_scale_ = 1;
  Eigen::VectorXd hyper_;   // [log ls_1..d, log sf, log sn]
  Eigen::MatrixXd L_;       // Cholesky factor of K
  Eigen::VectorXd alpha_;
  double lml_ = 0;
};

struct BoSettings {
  int budget = 40;
  int init = 8;          // latin-hypercube design size (clipped to budget)
  int candidates = 2048;  // random acquisition candidates per iteration
  uint64_t seed = 0;
  double explore = 0.01;  // expected-improvement exploration offset
};

struct BoStep {
  Eigen::VectorXd x;
  double y = 0;
};

struct BoResult {
  Eigen::VectorXd best_x;
  double best_y = 0;
  std::vector<BoStep> history;  // exactly `budget` evaluations
};

using BoObjective = std::function<double(const Eigen::VectorXd&)>;

// Maximize f over a box by expected improvement on a GP surrogate.
// Evaluations never leave the bounds; with budget <= init the result is
// the best of the initial design. Deterministic for a fixed seed.
BoResult bayes_optimize(const BoObjective& f,
                        const std::vector<std::pair<double, double>>& bounds,
                        const BoSettings& s);

}  // namespace crawl
