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
#include "crawl/inputs.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace crawl {

void InputSpec::validate() const {
  auto fail = [](const std::string& field, const std::string& what) {
    throw std::invalid_argument("input." + field + ": " + what);
  };
  if (!(omega > 0)) fail("omega", "must be positive");
  if (A < 0) fail("A", "amplitude must be nonnegative");
  if (std::abs(alpha) > 1)
    fail("alpha", "|alpha| > 1 makes the time scaling non-monotone");
  if (!(phi0 - A > 0) || !(phi0 + A < kPi))
    fail("phi0", "joint excursion phi0 +/- A must stay inside (0, pi)");
}

TimeScale time_scale(double xi, double alpha, double upsilon) {
  return {xi + alpha * std::sin(xi + upsilon),
          1 + alpha * std::cos(xi + upsilon),
          -alpha * std::sin(xi + upsilon)};
}

JointCommand eval_input(double t, const InputSpec& in) {
  JointCommand out;
  const double w = in.omega;
  for (int i = 0; i < 2; ++i) {
    const double xi = w * t + (i == 0 ? 0.5 : -0.5) * in.psi;
    const TimeScale ts = time_scale(xi, in.alpha, in.upsilon);
    const double si = std::sin(ts.s), ci = std::cos(ts.s);
    out.q[i] = in.phi0 + in.A * si;
    out.qd[i] = in.A * ci * ts.sp * w;
    out.qdd[i] = in.A * (ci * ts.spp - si * ts.sp * ts.sp) * w * w;
  }
  return out;
}

void ContactReference::separation(double t, double& D, double& Ddot,
                                  double& Dddot) const {
  const JointCommand jc = eval_input(t, in_);
  const double th = ground_theta(jc.q[0], jc.q[1], p_);

  const double s0 = std::sin(th), c0 = std::cos(th);
  const double s1 = std::sin(jc.q[0] - th), c1 = std::cos(jc.q[0] - th);
  const double s2 = std::sin(jc.q[1] + th), c2 = std::cos(jc.q[1] + th);

  // Closure residual g = l0 sin th + l1 sin(phi1-th) - l2 sin(phi2+th);
  // its theta-derivative happens to equal the foot separation D.
  const double g_th = p_.l0 * c0 - p_.l1 * c1 - p_.l2 * c2;
  const double g_1 = p_.l1 * c1;
  const double g_2 = -p_.l2 * c2;

  const double thd = -(g_1 * jc.qd[0] + g_2 * jc.qd[1]) / g_th;
  const double a1 = jc.qd[0] - thd;  // d(phi1 - th)/dt
  const double a2 = jc.qd[1] + thd;  // d(phi2 + th)/dt

  const double g_th_dot = -p_.l0 * s0 * thd + p_.l1 * s1 * a1 +
                          p_.l2 * s2 * a2;
  const double g_1_dot = -p_.l1 * s1 * a1;
  const double g_2_dot = p_.l2 * s2 * a2;
  const double thdd = -(g_th_dot * thd + g_1_dot * jc.qd[0] +
                        g_1 * jc.qdd[0] + g_2_dot * jc.qd[1] +
                        g_2 * jc.qdd[1]) /
                      g_th;

  D = g_th;
  Ddot = g_th_dot;
  Dddot = -p_.l0 * (c0 * thd * thd + s0 * thdd) +
          p_.l1 * (c1 * a1 * a1 + s1 * (jc.qdd[0] - thdd)) +
          p_.l2 * (c2 * a2 * a2 + s2 * (jc.qdd[1] + thdd));
}

bool ContactReference::foot1_anchored(double t, double Ddot) const {
  if (switch_phase_)
    return std::sin(in_.omega * t + *switch_phase_) > 0;
  // Default rule: foot 2 anchors while the feet separate, foot 1 while
  // they close, so the moving foot always advances.
  return Ddot < 0;
}

Vec2 ContactReference::v(double t) const {
  double D, Dd, Ddd;
  separation(t, D, Dd, Ddd);
  if (foot1_anchored(t, Dd)) return {0.0, Dd};
  return {-Dd, 0.0};
}

Vec2 ContactReference::vdot(double t) const {
  double D, Dd, Ddd;
  separation(t, D, Dd, Ddd);
  if (foot1_anchored(t, Dd)) return {0.0, Ddd};
  return {-Ddd, 0.0};
}

}  // namespace crawl
