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

#include <functional>
#include <string>
#include <vector>

#include "crawl/sim.hpp"

namespace crawl {

struct StepMetrics {
  double S = 0;   // advancement per cycle over the steady orbit [m]
  double V = 0;   // mean speed S / T [m/s]
  std::vector<double> per_cycle;  // foot-1 displacement per input cycle
  bool steady = false;
  int k = 0;      // period multiple of the matched orbit (0: none found)
  double spread = 0;  // relative mismatch of the best block comparison
  Termination termination = Termination::Normal;
};

// Cycle-resolved advancement of foot 1. The first n_ss cycles are treated
// as transient; the orbit is steady once two consecutive k-cycle blocks of
// displacement agree to steady_rel_tol (k = 1 then 2). S is the per-cycle
// mean over the final matched block pair.
StepMetrics step_metrics(const Trajectory& traj, const InputSpec& in,
                         int n_ss = 5, double steady_rel_tol = 0.01);

// Foot x-position at time t by linear interpolation of the recorded
// samples (same frame as the trajectory).
double foot_x(const Trajectory& traj, double t, int foot);

struct SlipFractions {
  // Index 0: foot 1, index 1: foot 2. Fractions are over [t0, t1].
  double time_frac[2] = {0, 0};  // dwell-time share of backward slip
  double dist_frac[2] = {0, 0};  // path-length share of backward motion
  bool both_forward = false;     // some dwell has both feet slipping forward
};

// Event-exact slip statistics from the mode spans: backward means slip
// direction opposite to advancement in the trajectory's frame. Distances
// use the foot positions at span boundaries, exact within a dwell because
// the slip sign is constant there.
SlipFractions slip_fractions(const Trajectory& traj, double t0, double t1);

struct RobustnessCell {
  double ratio = 1;  // mu1/mu2 perturbation factor
  double mu1 = 0, mu2 = 0;
  double S = 0;
  bool ok = false;
  std::string status;  // failure description when !ok
};

struct RobustnessResult {
  double S_mu = 0, S_min = 0, S_max = 0;
  bool ok = false;  // at least one cell evaluated
  std::vector<RobustnessCell> cells;
};

// Gait evaluation hook: robot parameters -> advancement per cycle.
using GaitEval = std::function<double(const RobotParams&)>;

// Worst-case-centered advancement under friction-ratio uncertainty.
// Scans mu1/mu2 = r over a reciprocal-closed geometric grid of grid_n
// points spanning [1/(1+eps), 1+eps], splitting the perturbation evenly
// (mu1 = mu sqrt(r), mu2 = mu / sqrt(r)) so the nominal friction scale is
// preserved. Returns the midpoint of the extreme advancements,
// S_mu = (S_min + S_max) / 2. Odd grid_n values nest under refinement.
// Cells run in parallel when jobs != 1.
RobustnessResult uncertain_friction_distance(const RobotParams& p,
                                             double eps, int grid_n,
                                             const GaitEval& eval,
                                             int jobs = 1);

// Default evaluation hook: simulate `cycles` input periods and take the
// steady-orbit advancement.
GaitEval make_distance_eval(const InputSpec& in, double cycles,
                            const SimOptions& opts, int n_ss = 5);

}  // namespace crawl
