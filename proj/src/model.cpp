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
#include "crawl/model.hpp"

#include <cmath>
#include <stdexcept>

namespace crawl {
namespace {

// Per-body planar kinematics: 2x5 COM Jacobian, constant 1x5 angular
// velocity row, and the time derivative of the COM Jacobian. Body 0 is the
// main link; leg 1 hangs off the -x end of the main link and leg 2 off the
// +x end. Leg absolute angles: alpha1 = theta - phi1, alpha2 = theta + phi2.
struct BodyJacs {
  Mat25 Jc[3];
  Eigen::Matrix<double, 1, 5> Jw[3];
  Mat25 Jcd[3];
};

BodyJacs body_jacs(const Vec5& q, const Vec5& qd, const RobotParams& p,
                   bool with_dots) {
  const double th = q[2], f1 = q[3], f2 = q[4];
  const double thd = qd[2], f1d = qd[3], f2d = qd[4];
  const double s0 = std::sin(th), c0 = std::cos(th);
  const double s1 = std::sin(f1 - th), c1 = std::cos(f1 - th);
  const double s2 = std::sin(f2 + th), c2 = std::cos(f2 + th);
  const double h0 = p.l0 / 2, h1 = p.l1 / 2, h2 = p.l2 / 2;

  BodyJacs B;
  for (auto& J : B.Jc) J.setZero();
  for (auto& J : B.Jw) J.setZero();
  for (auto& J : B.Jcd) J.setZero();

  // Main link: COM at (x, y).
  B.Jc[0](0, 0) = 1;
  B.Jc[0](1, 1) = 1;
  B.Jw[0](0, 2) = 1;

  // Leg 1 COM: (x - h0 c0 + h1 c1, y - h0 s0 - h1 s1).
  B.Jc[1](0, 0) = 1;
  B.Jc[1](1, 1) = 1;
  B.Jc[1](0, 2) = h0 * s0 + h1 * s1;
  B.Jc[1](1, 2) = -h0 * c0 + h1 * c1;
  B.Jc[1](0, 3) = -h1 * s1;
  B.Jc[1](1, 3) = -h1 * c1;
  B.Jw[1](0, 2) = 1;
  B.Jw[1](0, 3) = -1;

  // Leg 2 COM: (x + h0 c0 - h2 c2, y + h0 s0 - h2 s2).
  B.Jc[2](0, 0) = 1;
  B.Jc[2](1, 1) = 1;
  B.Jc[2](0, 2) = -h0 * s0 + h2 * s2;
  B.Jc[2](1, 2) = h0 * c0 - h2 * c2;
  B.Jc[2](0, 4) = h2 * s2;
  B.Jc[2](1, 4) = -h2 * c2;
  B.Jw[2](0, 2) = 1;
  B.Jw[2](0, 4) = 1;

  if (with_dots) {
    const double a1d = f1d - thd;  // d(phi1 - theta)/dt
    const double a2d = f2d + thd;  // d(phi2 + theta)/dt

    B.Jcd[1](0, 2) = h0 * c0 * thd + h1 * c1 * a1d;
    B.Jcd[1](1, 2) = h0 * s0 * thd - h1 * s1 * a1d;
    B.Jcd[1](0, 3) = -h1 * c1 * a1d;
    B.Jcd[1](1, 3) = h1 * s1 * a1d;

    B.Jcd[2](0, 2) = -h0 * c0 * thd + h2 * c2 * a2d;
    B.Jcd[2](1, 2) = -h0 * s0 * thd + h2 * s2 * a2d;
    B.Jcd[2](0, 4) = h2 * c2 * a2d;
    B.Jcd[2](1, 4) = h2 * s2 * a2d;
  }
  return B;
}

}  // namespace

RobotParams RobotParams::with_leg_masses(double new_m1, double new_m2) const {
  RobotParams out = *this;
  out.J1 = J1 * (new_m1 / m1);
  out.J2 = J2 * (new_m2 / m2);
  out.m1 = new_m1;
  out.m2 = new_m2;
  return out;
}

Mat55 mass_matrix(const Vec5& q, const RobotParams& p) {
  const BodyJacs B = body_jacs(q, Vec5::Zero(), p, false);
  const double m[3] = {p.m0, p.m1, p.m2};
  const double J[3] = {p.J0, p.J1, p.J2};
  Mat55 M = Mat55::Zero();
  for (int i = 0; i < 3; ++i) {
    M += m[i] * B.Jc[i].transpose() * B.Jc[i];
    M += J[i] * B.Jw[i].transpose() * B.Jw[i];
  }
  // The assembly is symmetric in exact arithmetic; enforce it bit-exactly.
  M = (0.5 * (M + M.transpose())).eval();
  return M;
}

Vec5 velocity_bias(const Vec5& q, const Vec5& qd, const RobotParams& p) {
  const BodyJacs B = body_jacs(q, qd, p, true);
  const double m[3] = {p.m0, p.m1, p.m2};
  // Angular rows are configuration-independent, so only the COM Jacobian
  // rates contribute: B = sum_i m_i Jc_i^T (Jcdot_i qd).
  Vec5 b = Vec5::Zero();
  for (int i = 0; i < 3; ++i)
    b += m[i] * B.Jc[i].transpose() * (B.Jcd[i] * qd);
  return b;
}

Vec5 gravity_vector(const Vec5& q, const RobotParams& p) {
  const BodyJacs B = body_jacs(q, Vec5::Zero(), p, false);
  const double m[3] = {p.m0, p.m1, p.m2};
  Vec5 g = Vec5::Zero();
  for (int i = 0; i < 3; ++i) g += m[i] * p.g * B.Jc[i].row(1).transpose();
  return g;
}

double kinetic_energy(const Vec5& q, const Vec5& qd, const RobotParams& p) {
  const double th = q[2], f1 = q[3], f2 = q[4];
  const double thd = qd[2], f1d = qd[3], f2d = qd[4];
  const double s0 = std::sin(th), c0 = std::cos(th);
  const double s1 = std::sin(f1 - th), c1 = std::cos(f1 - th);
  const double s2 = std::sin(f2 + th), c2 = std::cos(f2 + th);
  const double h0 = p.l0 / 2, h1 = p.l1 / 2, h2 = p.l2 / 2;
  const double a1d = f1d - thd, a2d = f2d + thd;

  const double v0x = qd[0], v0y = qd[1];
  const double v1x = qd[0] + (h0 * s0) * thd - h1 * s1 * a1d;
  const double v1y = qd[1] - (h0 * c0) * thd - h1 * c1 * a1d;
  const double v2x = qd[0] - (h0 * s0) * thd + h2 * s2 * a2d;
  const double v2y = qd[1] + (h0 * c0) * thd - h2 * c2 * a2d;

  return 0.5 * p.m0 * (v0x * v0x + v0y * v0y) + 0.5 * p.J0 * thd * thd +
         0.5 * p.m1 * (v1x * v1x + v1y * v1y) + 0.5 * p.J1 * a1d * a1d +
         0.5 * p.m2 * (v2x * v2x + v2y * v2y) + 0.5 * p.J2 * a2d * a2d;
}

Vec2 contact_pos(const Vec5& q, const RobotParams& p, int foot) {
  const double th = q[2];
  if (foot == 1) {
    const double s1 = std::sin(q[3] - th), c1 = std::cos(q[3] - th);
    return {q[0] - (p.l0 / 2) * std::cos(th) + p.l1 * c1,
            q[1] - (p.l0 / 2) * std::sin(th) - p.l1 * s1};
  }
  const double s2 = std::sin(q[4] + th), c2 = std::cos(q[4] + th);
  return {q[0] + (p.l0 / 2) * std::cos(th) - p.l2 * c2,
          q[1] + (p.l0 / 2) * std::sin(th) - p.l2 * s2};
}

Mat25 contact_jac(const Vec5& q, const RobotParams& p, int foot) {
  const double th = q[2];
  const double h0 = p.l0 / 2;
  Mat25 W = Mat25::Zero();
  W(0, 0) = 1;
  W(1, 1) = 1;
  if (foot == 1) {
    const double s1 = std::sin(q[3] - th), c1 = std::cos(q[3] - th);
    W(0, 2) = h0 * std::sin(th) + p.l1 * s1;
    W(1, 2) = -h0 * std::cos(th) + p.l1 * c1;
    W(0, 3) = -p.l1 * s1;
    W(1, 3) = -p.l1 * c1;
  } else {
    const double s2 = std::sin(q[4] + th), c2 = std::cos(q[4] + th);
    W(0, 2) = -h0 * std::sin(th) + p.l2 * s2;
    W(1, 2) = h0 * std::cos(th) - p.l2 * c2;
    W(0, 4) = p.l2 * s2;
    W(1, 4) = -p.l2 * c2;
  }
  return W;
}

Mat25 contact_jac_dot(const Vec5& q, const Vec5& qd, const RobotParams& p,
                      int foot) {
  const double th = q[2], thd = qd[2];
  const double h0 = p.l0 / 2;
  Mat25 Wd = Mat25::Zero();
  if (foot == 1) {
    const double s1 = std::sin(q[3] - th), c1 = std::cos(q[3] - th);
    const double a1d = qd[3] - thd;
    Wd(0, 2) = h0 * std::cos(th) * thd + p.l1 * c1 * a1d;
    Wd(1, 2) = h0 * std::sin(th) * thd - p.l1 * s1 * a1d;
    Wd(0, 3) = -p.l1 * c1 * a1d;
    Wd(1, 3) = p.l1 * s1 * a1d;
  } else {
    const double s2 = std::sin(q[4] + th), c2 = std::cos(q[4] + th);
    const double a2d = qd[4] + thd;
    Wd(0, 2) = -h0 * std::cos(th) * thd + p.l2 * c2 * a2d;
    Wd(1, 2) = -h0 * std::sin(th) * thd + p.l2 * s2 * a2d;
    Wd(0, 4) = p.l2 * c2 * a2d;
    Wd(1, 4) = p.l2 * s2 * a2d;
  }
  return Wd;
}

Mat52 actuation_map() {
  Mat52 E = Mat52::Zero();
  E(3, 0) = 1;
  E(4, 1) = 1;
  return E;
}

double ground_theta(double phi1, double phi2, const RobotParams& p,
                    double theta0) {
  // Closure residual: foot heights coincide when
  //   g(theta) = l0 sin th + l1 sin(phi1 - th) - l2 sin(phi2 + th) = 0.
  double th = theta0;
  for (int it = 0; it < 60; ++it) {
    const double g = p.l0 * std::sin(th) + p.l1 * std::sin(phi1 - th) -
                     p.l2 * std::sin(phi2 + th);
    const double dg = p.l0 * std::cos(th) - p.l1 * std::cos(phi1 - th) -
                      p.l2 * std::cos(phi2 + th);
    const double step = g / dg;
    th -= step;
    if (std::abs(step) < 1e-14) return th;
  }
  throw std::runtime_error("ground_theta: Newton iteration did not converge");
}

double ground_height(double theta, double phi1, const RobotParams& p) {
  return (p.l0 / 2) * std::sin(theta) + p.l1 * std::sin(phi1 - theta);
}

Vec5 grounded_posture(double x, double phi1, double phi2,
                      const RobotParams& p, double theta0) {
  const double th = ground_theta(phi1, phi2, p, theta0);
  Vec5 q;
  q << x, ground_height(th, phi1, p), th, phi1, phi2;
  return q;
}

}  // namespace crawl
