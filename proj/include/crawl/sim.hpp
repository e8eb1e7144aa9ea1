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

#include <string>
#include <vector>

#include "crawl/contact.hpp"
#include "crawl/inputs.hpp"
#include "crawl/model.hpp"
#include "crawl/types.hpp"

namespace crawl {

struct SimOptions {
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double stick_vel_tol = 1e-6;  // [m/s]
  double event_tol = 1e-9;      // event localization width [s]
  double max_step = 0;          // 0: period / 50
  double record_dt = 0;         // 0: period / 400
  // First integration window after a mode change, as a fraction of the
  // input period. At its end the mode is probed for consistency before
  // the regular guards take over; this is what lets a freshly entered
  // mode survive the near-zero guard values it was created with.
  double arm_window_frac = 1e-3;
  int guard_subdiv = 4;         // dense-output samples per step when
                                // scanning guards
  double tol_scale = 1.0;       // scales rel/abs tolerances (CI knob)
  bool record_world = true;     // record in the advancement-positive frame
  long max_events = 1000000;

  double scaled_rtol() const { return rel_tol * tol_scale; }
  double scaled_atol() const { return abs_tol * tol_scale; }

  ContactTols contact_tols() const {
    ContactTols t;
    t.stick_vel = stick_vel_tol;
    return t;
  }
};

// One recorded state. When the trajectory is recorded in the output frame
// (record_world), x, theta, the x-velocities, the contact-force and foot
// x-components, and the slip directions inside mode_id are sign-flipped
// relative to the internal dynamics frame so that steady advancement of
// the standard gait has positive x. Joint quantities and y-components are
// frame-invariant.
struct Sample {
  double t = 0;
  Vec5 q, qd;
  Vec2 f1, f2;   // contact forces per foot
  Vec2 tau;      // joint torques
  Vec2 qdd_c;    // commanded joint accelerations
  Vec2 r1, r2;   // foot positions
  int mode_id = -1;
};

struct SimEvent {
  double t = 0;
  std::string guard;  // "detach1", "cone2", "v1", "probe", ...
  ContactMode from, to;
};

struct ModeSpan {
  double t_begin = 0;
  ContactMode mode;  // same frame as the samples
};

enum class Termination { Normal, Detachment, Singular, Painleve };

const char* to_string(Termination t);

struct Trajectory {
  std::vector<Sample> samples;
  std::vector<SimEvent> events;
  std::vector<ModeSpan> spans;  // dwell i spans [spans[i].t_begin, next)
  double t_end = 0;
  Termination termination = Termination::Normal;
  std::string detail;
  bool world_frame = true;
  bool initial_mode_ambiguous = false;

  // End time of span i (t_end for the last one).
  double span_end(size_t i) const {
    return i + 1 < spans.size() ? spans[i + 1].t_begin : t_end;
  }
};

// Simulate the crawler under prescribed joint inputs from a grounded rest
// posture at x = 0. Runs for `duration` seconds unless terminated early by
// detachment, a singular mode system, or an unresolvable transition.
Trajectory simulate(const RobotParams& p, const InputSpec& in,
                    double duration, const SimOptions& opts = {});

// Transition bookkeeping shared with the closed-loop simulator.
namespace detail {

struct TransitionResult {
  bool terminated = false;
  Termination termination = Termination::Normal;
  std::string detail;
  ContactMode mode;
};

// Resolve the successor mode after `guard` fired, trying the physically
// ordered candidates first and falling back to a stick-preferring scan of
// all modes. `f_stuck_x` is the tangential force of the stuck foot in the
// outgoing mode (slip-direction heuristic); pass 0 when no foot is stuck.
TransitionResult resolve_transition(const Vec5& q, const Vec5& qd,
                                    const Vec2& qdd_c, const RobotParams& p,
                                    const ContactMode& mode,
                                    const std::string& guard,
                                    double f_stuck_x,
                                    const ContactTols& tols);

// Project positions onto the grounded closure (theta, y from the joint
// angles) and body velocities onto the mode's contact constraints with a
// minimum-norm correction. Throws if the closure Newton fails.
void project_state(Vec5& q, Vec5& qd, const RobotParams& p,
                   const ContactMode& mode);

// Minimum-norm body velocity satisfying both ground-height rates; used
// for the initial condition before a mode exists.
void project_heights_only(Vec5& q, Vec5& qd, const RobotParams& p);

}  // namespace detail

}  // namespace crawl
