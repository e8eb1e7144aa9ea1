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

#include <optional>
#include <string>
#include <vector>

#include "crawl/model.hpp"
#include "crawl/types.hpp"

namespace crawl {

// Contact modes of the crawler. Both feet stay on the ground in every mode
// (detachment terminates the simulation), so a mode is characterized by
// which feet slip and in which direction. Having both feet stuck
// overconstrains the closed chain and is excluded.
enum class ModeKind { StickSlip, SlipStick, SlipSlip };

struct ContactMode {
  ModeKind kind = ModeKind::StickSlip;
  // Slip direction per foot: +1 / -1 while slipping, 0 while stuck.
  int sigma1 = 0;
  int sigma2 = 0;

  static ContactMode stick_slip(int s2) {
    return {ModeKind::StickSlip, 0, s2};
  }
  static ContactMode slip_stick(int s1) {
    return {ModeKind::SlipStick, s1, 0};
  }
  static ContactMode slip_slip(int s1, int s2) {
    return {ModeKind::SlipSlip, s1, s2};
  }

  bool stuck(int foot) const { return sigma(foot) == 0; }
  int sigma(int foot) const { return foot == 1 ? sigma1 : sigma2; }

  // Stable small integer used as the mode-id trajectory column.
  int id() const;
  std::string name() const;

  // Same mode with both slip directions reversed (x-axis reflection).
  ContactMode mirrored() const { return {kind, -sigma1, -sigma2}; }

  bool operator==(const ContactMode& o) const {
    return kind == o.kind && sigma1 == o.sigma1 && sigma2 == o.sigma2;
  }
};

// Friction direction for a slipping contact: the contact force is
// W_i^T Gamma_i f_i^y with tangential component -mu f^y sigma. The solver
// adds the unit normal so a single scalar carries the full contact force.
Vec2 friction_direction(int sigma, double mu);

struct ModeSolution {
  Vec3 qdd_b;      // body accelerations [xdd, ydd, thetadd]
  Vec2 tau;        // joint torques realizing the prescribed qdd_c
  Vec2 f1, f2;     // full contact forces (x, y) per foot
  double rcond = 0;  // reciprocal condition estimate of the mode system
  bool singular = false;

  Vec5 qdd(const Vec2& qdd_c) const {
    Vec5 a;
    a << qdd_b, qdd_c;
    return a;
  }
};

// Solve the mode-specific linear system for body accelerations, torques
// and contact forces, given prescribed joint accelerations qdd_c.
// Stuck feet contribute both rows of their contact Jacobian as
// acceleration constraints; slipping feet contribute only the normal row
// plus the Coulomb force coupling.
ModeSolution solve_mode(const Vec5& q, const Vec5& qd, const Vec2& qdd_c,
                        const RobotParams& p, const ContactMode& mode);

struct ContactTols {
  double stick_vel = 1e-6;      // |v| below this counts as sticking [m/s]
  double cone_slack_rel = 1e-9;
  double cone_slack_abs = 1e-12;
  double accel_band = 1e-6;     // slip-sign acceptance on sigma*a at v ~ 0
  double probe_vel_band = 1e-10;  // sigma*v slack for post-event probes
};

// Friction-cone margin of a stuck foot: mu f^y - |f^x|, negative when the
// required tangential force leaves the cone.
double cone_margin(const Vec2& f, double mu);

// Consistency check of a candidate mode at the given state. Returns
// nullopt when consistent, otherwise a short reason ("detach1", "cone2",
// "slipdir1", "singular", ...). With probe = true the slip-direction check
// relaxes to sigma*v >= -probe_vel_band, which is the right test just
// after an event where slip velocities are still within the stick band.
std::optional<std::string> check_mode(const Vec5& q, const Vec5& qd,
                                      const Vec2& qdd_c,
                                      const RobotParams& p,
                                      const ContactMode& mode,
                                      const ModeSolution& sol,
                                      const ContactTols& tols,
                                      bool probe = false);

// solve_mode + check_mode in one call.
std::optional<std::string> mode_inconsistency(const Vec5& q, const Vec5& qd,
                                              const Vec2& qdd_c,
                                              const RobotParams& p,
                                              const ContactMode& mode,
                                              const ContactTols& tols,
                                              bool probe = false);

// All eight modes in deterministic stick-preferring order; used as the
// fallback candidate list during transitions and by initial_mode.
const std::vector<ContactMode>& all_modes();

struct InitialMode {
  ContactMode mode;
  bool ambiguous = false;  // more than one mode was consistent
  int n_consistent = 0;
};

// Select a consistent starting mode for the initial state by scanning
// all_modes() with the full check (the accel-sign band decides slip
// directions at rest). Ties are broken by the scan order, which prefers
// stick modes and positive slip directions.
InitialMode initial_mode(const Vec5& q, const Vec5& qd, const Vec2& qdd_c,
                         const RobotParams& p, const ContactTols& tols);

}  // namespace crawl
