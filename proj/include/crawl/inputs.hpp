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

#include "crawl/model.hpp"
#include "crawl/types.hpp"

namespace crawl {

// Prescribed joint-angle waveform
//   phi_i(t) = phi0 + A sin(s(omega t +/- psi/2)),
// where leg 1 leads by the phase difference psi and s is the monotone
// time-scaling map s(xi) = xi + alpha sin(xi + upsilon). alpha = 0 gives
// plain harmonic inputs. All angles are radians.
struct InputSpec {
  double phi0 = rad(110.0);
  double A = rad(18.0);
  double omega = 1.0;       // [rad/s]
  double psi = rad(20.0);
  double alpha = 0.0;
  double upsilon = 0.0;

  double period() const { return 2 * kPi / omega; }

  // Throws std::invalid_argument naming the offending field when the spec
  // is outside the admissible range (|alpha| <= 1, omega > 0, A >= 0,
  // joint excursion inside (0, pi)).
  void validate() const;
};

struct TimeScale {
  double s, sp, spp;  // s(xi) and its first two xi-derivatives
};

// Monotone (for |alpha| <= 1) phase reparameterization; adds 2 pi per
// cycle, so the period is preserved for any alpha, upsilon.
TimeScale time_scale(double xi, double alpha, double upsilon);

struct JointCommand {
  Vec2 q, qd, qdd;
};

// Prescribed joint angles with analytic time derivatives.
JointCommand eval_input(double t, const InputSpec& in);

// Quasistatic contact-velocity reference in the internal dynamics frame.
//
// With both feet grounded the joint angles determine the foot separation
// D(t) through the closed-chain tilt. The reference anchors one foot and
// lets the other carry the full separation rate: during extension
// (Ddot > 0) foot 1 advances at -Ddot with foot 2 anchored, during
// retraction foot 2 advances at Ddot. The anchored foot thus alternates
// each half-cycle. switch_phase overrides the anchor schedule with the
// sign of sin(omega t + switch_phase); unset keeps the Ddot-sign rule.
class ContactReference {
 public:
  ContactReference(const InputSpec& in, const RobotParams& p,
                   std::optional<double> switch_phase = std::nullopt)
      : in_(in), p_(p), switch_phase_(switch_phase) {}

  // Foot separation and its first two time derivatives (analytic; the
  // closed-chain tilt enters through implicit differentiation).
  void separation(double t, double& D, double& Ddot, double& Dddot) const;

  // Reference foot x-velocities [v1, v2]; at most one is nonzero.
  Vec2 v(double t) const;

  // One-sided analytic derivative of v; at a switching instant the value
  // belongs to the side the anchor rule assigns at t itself.
  Vec2 vdot(double t) const;

  const InputSpec& input() const { return in_; }

 private:
  bool foot1_anchored(double t, double Ddot) const;

  InputSpec in_;
  RobotParams p_;
  std::optional<double> switch_phase_;
};

}  // namespace crawl
