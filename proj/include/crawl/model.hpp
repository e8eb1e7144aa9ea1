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

#include "crawl/types.hpp"

namespace crawl {

// Three-link planar crawler. Generalized coordinates q = [x, y, theta,
// phi1, phi2]: (x, y) is the main-link center, theta its absolute tilt,
// phi1/phi2 the joint angles of the leading and trailing leg. The legs are
// massed rods with point feet; both joint angles are position-controlled.
//
// All model-level quantities live in the internal dynamics frame. The
// simulator's recording layer converts to the advancement-positive output
// frame; see sim.hpp.
struct RobotParams {
  double m0 = 0.194;      // main link mass [kg]
  double l0 = 0.187;      // main link length [m]
  double J0 = 7.763e-4;   // main link inertia about its COM [kg m^2]
  double m1 = 0.021;      // leg 1 mass [kg]
  double l1 = 0.17;       // leg 1 length [m]
  double J1 = 9.87e-5;    // leg 1 inertia about its COM [kg m^2]
  double m2 = 0.021;      // leg 2 mass [kg]
  double l2 = 0.17;       // leg 2 length [m]
  double J2 = 9.87e-5;    // leg 2 inertia about its COM [kg m^2]
  double mu1 = 0.172;     // friction coefficient at foot 1
  double mu2 = 0.172;     // friction coefficient at foot 2
  double g = 9.81;        // gravity [m/s^2]

  static RobotParams hard_tips() { return RobotParams{}; }
  static RobotParams soft_tips() {
    RobotParams p;
    p.mu1 = p.mu2 = 0.398;
    return p;
  }

  // Replace the leg masses, scaling each leg inertia proportionally to its
  // mass (slender-rod scaling at fixed length). Used by the mass-ratio
  // sweeps so that shifting mass between legs keeps J_i/m_i constant.
  RobotParams with_leg_masses(double new_m1, double new_m2) const;

  double mu(int foot) const { return foot == 1 ? mu1 : mu2; }
};

// Inertia matrix M(q), symmetric positive definite away from singular
// postures. Assembled from per-body COM Jacobians, which keeps the
// expression valid for asymmetric leg masses and lengths.
Mat55 mass_matrix(const Vec5& q, const RobotParams& p);

// Velocity-product (Coriolis/centrifugal) generalized force B(q, qd),
// quadratic in qd.
Vec5 velocity_bias(const Vec5& q, const Vec5& qd, const RobotParams& p);

// Gravity generalized force G(q); equations of motion read
//   M(q) qdd + B(q, qd) + G(q) = E tau + sum_i W_i^T f_i.
Vec5 gravity_vector(const Vec5& q, const RobotParams& p);

// Kinetic energy, computed from explicit per-body COM velocities rather
// than through M; test oracles difference the two paths.
double kinetic_energy(const Vec5& q, const Vec5& qd, const RobotParams& p);

// Foot (contact point) positions.
Vec2 contact_pos(const Vec5& q, const RobotParams& p, int foot);

// Contact Jacobian W_i = d r_i / d q (2x5) and its time derivative.
Mat25 contact_jac(const Vec5& q, const RobotParams& p, int foot);
Mat25 contact_jac_dot(const Vec5& q, const Vec5& qd, const RobotParams& p,
                      int foot);

// Actuation map: tau enters the equations of motion as E tau.
Mat52 actuation_map();

// Main-link tilt theta that puts both feet at the same height, solving
//   l0 sin(theta) + l1 sin(phi1 - theta) - l2 sin(phi2 + theta) = 0
// by Newton iteration seeded at theta0. Throws std::runtime_error if the
// iteration fails to converge (posture outside the closed four-bar range).
double ground_theta(double phi1, double phi2, const RobotParams& p,
                    double theta0 = 0.0);

// Height of the main-link center that places foot 1 exactly on the ground
// for the given tilt and joint angle.
double ground_height(double theta, double phi1, const RobotParams& p);

// Both-feet-grounded posture for prescribed joint angles: returns
// q = [x, y, theta, phi1, phi2] with theta from ground_theta and y from
// ground_height (x is taken as given).
Vec5 grounded_posture(double x, double phi1, double phi2,
                      const RobotParams& p, double theta0 = 0.0);

}  // namespace crawl
