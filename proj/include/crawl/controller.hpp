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

#include <limits>
#include <optional>
#include <vector>

#include "crawl/inputs.hpp"
#include "crawl/metrics.hpp"
#include "crawl/sim.hpp"
#include "crawl/types.hpp"

namespace crawl {

// Hybrid feedback law: inverse-dynamics tracking of the ideal contact
// velocities while both feet slip and both joints sit inside the angle
// window, PD tracking of the joint reference otherwise.
struct ControllerConfig {
  Mat2 Kv = 10.0 * Mat2::Identity();
  Mat2 KP = 80.0 * Mat2::Identity();
  Mat2 KD = 100.0 * Mat2::Identity();
  double phi_min = rad(90.0);
  double phi_max = rad(130.0);

  // Anti-chatter policy: the branch is re-evaluated only at contact events
  // and at accepted step ends, and switches are rate-limited by min_dwell.
  // A dwell never holds the velocity branch in a mode that cannot supply
  // it; that structural demotion bypasses the rate limit.
  double min_dwell = 1e-4;     // [s]
  double s1_cond_max = 1e8;    // velocity branch requires cond(S1) below this
  std::optional<double> switch_phase;  // reference anchor override

  // Throws std::invalid_argument when a gain is not symmetric positive
  // definite or the angle window is empty.
  void validate() const;
};

// Affine map from commanded joint accelerations to contact x-accelerations
// in the given mode: vdot_x = S1 qdd_c + S0.
struct InverseDynamics {
  Vec2 S0 = Vec2::Zero();
  Mat2 S1 = Mat2::Zero();
  double cond = std::numeric_limits<double>::infinity();  // cond_2(S1)
  bool ok = false;  // all underlying mode solves were nonsingular
};

// Built from three mode solves: one at qdd_c = 0 for S0 and one per unit
// command for the columns of S1 (the constrained system is affine in
// qdd_c, so probes recover the map exactly).
InverseDynamics inverse_dynamics_matrices(const Vec5& q, const Vec5& qd,
                                          const RobotParams& p,
                                          const ContactMode& mode);

struct ControlRefs {
  Vec2 qr = Vec2::Zero(), qdr = Vec2::Zero(), qddr = Vec2::Zero();
  Vec2 vxr = Vec2::Zero(), vdxr = Vec2::Zero();
};

ControlRefs control_refs(double t, const InputSpec& in,
                         const ContactReference& cref);

enum class ControlBranch { Tracking, Velocity };

struct ControlDecision {
  Vec2 qdd_c = Vec2::Zero();
  ControlBranch branch = ControlBranch::Tracking;
  bool fallback = false;  // velocity branch wanted but S1 unusable
  double s1_cond = 0;     // cond(S1) when the velocity branch was evaluated
};

// The law itself, stateless. `force` pins the branch (used by the
// closed-loop simulator to hold the latched branch between evaluation
// points); a forced velocity branch still falls back to tracking when S1
// is unusable at the query state.
ControlDecision control_law(double t, const Vec5& q, const Vec5& qd,
                            const ContactMode& mode,
                            const ControllerConfig& cfg,
                            const ControlRefs& refs, const RobotParams& p,
                            std::optional<ControlBranch> force = std::nullopt);

struct BranchSpan {
  double t_begin = 0;
  ControlBranch branch = ControlBranch::Tracking;
};

struct ClosedLoopResult {
  Trajectory traj;
  StepMetrics metrics;
  std::vector<BranchSpan> branch_spans;
  long n_switches = 0;
  long n_suppressed = 0;   // switch requests blocked by dwell or cap
  double max_s1_cond = 0;  // worst conditioning the velocity branch ran with
};

// Initial joint tracking error, for convergence experiments.
struct JointPerturbation {
  Vec2 dq = Vec2::Zero();
  Vec2 dqd = Vec2::Zero();
};

// Closed-loop hybrid simulation. The joints become dynamic states driven
// by the commanded acceleration (ideal acceleration-level servo); contact
// modes switch exactly as in the open-loop simulator. Samples carry the
// commanded qdd_c.
ClosedLoopResult simulate_closed_loop(
    const RobotParams& p, const ControllerConfig& cfg, const InputSpec& in,
    double duration, const SimOptions& opts = {},
    const std::optional<JointPerturbation>& perturb = std::nullopt,
    int n_ss = 5);

}  // namespace crawl
