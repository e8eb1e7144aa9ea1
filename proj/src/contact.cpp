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
#include "crawl/contact.hpp"

#include <cmath>

namespace crawl {
namespace {

constexpr double kRcondFloor = 1e-12;  // reciprocal of the cond threshold

// Shared assembly pieces for the three mode systems.
struct Assembly {
  Mat55 M;
  Vec5 rhs;  // -B - G - M[:,3:5] qdd_c
  Mat25 W1, W2, W1d, W2d;
  Mat52 E;
  Vec2 wdot1, wdot2;  // Wdot_i qd
};

Assembly assemble(const Vec5& q, const Vec5& qd, const Vec2& qdd_c,
                  const RobotParams& p) {
  Assembly a;
  a.M = mass_matrix(q, p);
  a.rhs = -velocity_bias(q, qd, p) - gravity_vector(q, p) -
          a.M.rightCols<2>() * qdd_c;
  a.W1 = contact_jac(q, p, 1);
  a.W2 = contact_jac(q, p, 2);
  a.W1d = contact_jac_dot(q, qd, p, 1);
  a.W2d = contact_jac_dot(q, qd, p, 2);
  a.E = actuation_map();
  a.wdot1 = a.W1d * qd;
  a.wdot2 = a.W2d * qd;
  return a;
}

Vec2 gamma_full(int sigma, double mu) {
  return friction_direction(sigma, mu) + Vec2(0, 1);
}

}  // namespace

int ContactMode::id() const {
  switch (kind) {
    case ModeKind::StickSlip:
      return sigma2 > 0 ? 0 : 1;
    case ModeKind::SlipStick:
      return sigma1 > 0 ? 2 : 3;
    case ModeKind::SlipSlip:
      return 4 + (sigma1 > 0 ? 0 : 2) + (sigma2 > 0 ? 0 : 1);
  }
  return -1;
}

std::string ContactMode::name() const {
  auto sgn = [](int s) { return s > 0 ? "+" : "-"; };
  switch (kind) {
    case ModeKind::StickSlip:
      return std::string("ss") + sgn(sigma2);
    case ModeKind::SlipStick:
      return std::string("st") + sgn(sigma1);
    case ModeKind::SlipSlip:
      return std::string("pp") + sgn(sigma1) + sgn(sigma2);
  }
  return "??";
}

Vec2 friction_direction(int sigma, double mu) {
  return {-mu * sigma, 0.0};
}

double cone_margin(const Vec2& f, double mu) {
  return mu * f[1] - std::abs(f[0]);
}

ModeSolution solve_mode(const Vec5& q, const Vec5& qd, const Vec2& qdd_c,
                        const RobotParams& p, const ContactMode& mode) {
  const Assembly a = assemble(q, qd, qdd_c, p);

  ModeSolution sol;
  switch (mode.kind) {
    case ModeKind::StickSlip: {
      // Unknowns: [qdd_b(3), tau(2), f1x, f1y, f2y].
      Eigen::Matrix<double, 8, 8> A = Eigen::Matrix<double, 8, 8>::Zero();
      Eigen::Matrix<double, 8, 1> b;
      const Vec2 g2 = gamma_full(mode.sigma2, p.mu2);
      A.block<5, 3>(0, 0) = a.M.leftCols<3>();
      A.block<5, 2>(0, 3) = -a.E;
      A.block<5, 2>(0, 5) = -a.W1.transpose();
      A.block<5, 1>(0, 7) = -a.W2.transpose() * g2;
      b.head<5>() = a.rhs;
      A.block<2, 3>(5, 0) = a.W1.leftCols<3>();
      b.segment<2>(5) = -a.wdot1 - a.W1.rightCols<2>() * qdd_c;
      A.block<1, 3>(7, 0) = a.W2.row(1).head<3>();
      b[7] = -a.wdot2[1] - a.W2.row(1).tail<2>() * qdd_c;

      Eigen::PartialPivLU<Eigen::Matrix<double, 8, 8>> lu(A);
      sol.rcond = lu.rcond();
      Eigen::Matrix<double, 8, 1> z = lu.solve(b);
      sol.singular =
          !(sol.rcond > kRcondFloor) || !z.allFinite();
      sol.qdd_b = z.head<3>();
      sol.tau = z.segment<2>(3);
      sol.f1 = z.segment<2>(5);
      sol.f2 = g2 * z[7];
      break;
    }
    case ModeKind::SlipStick: {
      // Unknowns: [qdd_b(3), tau(2), f1y, f2x, f2y].
      Eigen::Matrix<double, 8, 8> A = Eigen::Matrix<double, 8, 8>::Zero();
      Eigen::Matrix<double, 8, 1> b;
      const Vec2 g1 = gamma_full(mode.sigma1, p.mu1);
      A.block<5, 3>(0, 0) = a.M.leftCols<3>();
      A.block<5, 2>(0, 3) = -a.E;
      A.block<5, 1>(0, 5) = -a.W1.transpose() * g1;
      A.block<5, 2>(0, 6) = -a.W2.transpose();
      b.head<5>() = a.rhs;
      A.block<1, 3>(5, 0) = a.W1.row(1).head<3>();
      b[5] = -a.wdot1[1] - a.W1.row(1).tail<2>() * qdd_c;
      A.block<2, 3>(6, 0) = a.W2.leftCols<3>();
      b.segment<2>(6) = -a.wdot2 - a.W2.rightCols<2>() * qdd_c;

      Eigen::PartialPivLU<Eigen::Matrix<double, 8, 8>> lu(A);
      sol.rcond = lu.rcond();
      Eigen::Matrix<double, 8, 1> z = lu.solve(b);
      sol.singular =
          !(sol.rcond > kRcondFloor) || !z.allFinite();
      sol.qdd_b = z.head<3>();
      sol.tau = z.segment<2>(3);
      sol.f1 = g1 * z[5];
      sol.f2 = z.segment<2>(6);
      break;
    }
    case ModeKind::SlipSlip: {
      // Unknowns: [qdd_b(3), tau(2), f1y, f2y].
      Eigen::Matrix<double, 7, 7> A = Eigen::Matrix<double, 7, 7>::Zero();
      Eigen::Matrix<double, 7, 1> b;
      const Vec2 g1 = gamma_full(mode.sigma1, p.mu1);
      const Vec2 g2 = gamma_full(mode.sigma2, p.mu2);
      A.block<5, 3>(0, 0) = a.M.leftCols<3>();
      A.block<5, 2>(0, 3) = -a.E;
      A.block<5, 1>(0, 5) = -a.W1.transpose() * g1;
      A.block<5, 1>(0, 6) = -a.W2.transpose() * g2;
      b.head<5>() = a.rhs;
      A.block<1, 3>(5, 0) = a.W1.row(1).head<3>();
      b[5] = -a.wdot1[1] - a.W1.row(1).tail<2>() * qdd_c;
      A.block<1, 3>(6, 0) = a.W2.row(1).head<3>();
      b[6] = -a.wdot2[1] - a.W2.row(1).tail<2>() * qdd_c;

      Eigen::PartialPivLU<Eigen::Matrix<double, 7, 7>> lu(A);
      sol.rcond = lu.rcond();
      Eigen::Matrix<double, 7, 1> z = lu.solve(b);
      sol.singular =
          !(sol.rcond > kRcondFloor) || !z.allFinite();
      sol.qdd_b = z.head<3>();
      sol.tau = z.segment<2>(3);
      sol.f1 = g1 * z[5];
      sol.f2 = g2 * z[6];
      break;
    }
  }
  return sol;
}

std::optional<std::string> check_mode(const Vec5& q, const Vec5& qd,
                                      const Vec2& qdd_c,
                                      const RobotParams& p,
                                      const ContactMode& mode,
                                      const ModeSolution& sol,
                                      const ContactTols& tols, bool probe) {
  if (sol.singular) return "singular";
  if (!(sol.f1[1] > 0)) return "detach1";
  if (!(sol.f2[1] > 0)) return "detach2";

  const Vec5 qdd = sol.qdd(qdd_c);
  for (int foot : {1, 2}) {
    const Vec2& f = foot == 1 ? sol.f1 : sol.f2;
    const double mu = p.mu(foot);
    if (mode.stuck(foot)) {
      const double slack = tols.cone_slack_rel * mu * f[1] +
                           tols.cone_slack_abs;
      if (std::abs(f[0]) > mu * f[1] + slack)
        return foot == 1 ? "cone1" : "cone2";
    } else {
      const double sg = mode.sigma(foot);
      const Mat25 W = contact_jac(q, p, foot);
      const double v = W.row(0) * qd;
      if (probe) {
        if (sg * v < -tols.probe_vel_band)
          return foot == 1 ? "slipdir1" : "slipdir2";
      } else if (std::abs(v) > tols.stick_vel) {
        if (sg * v <= 0) return foot == 1 ? "slipdir1" : "slipdir2";
      } else {
        const Mat25 Wd = contact_jac_dot(q, qd, p, foot);
        const double acc = (W.row(0) * qdd)(0) + (Wd.row(0) * qd)(0);
        if (sg * acc < -tols.accel_band)
          return foot == 1 ? "slipdir1" : "slipdir2";
      }
    }
  }
  return std::nullopt;
}

std::optional<std::string> mode_inconsistency(const Vec5& q, const Vec5& qd,
                                              const Vec2& qdd_c,
                                              const RobotParams& p,
                                              const ContactMode& mode,
                                              const ContactTols& tols,
                                              bool probe) {
  const ModeSolution sol = solve_mode(q, qd, qdd_c, p, mode);
  return check_mode(q, qd, qdd_c, p, mode, sol, tols, probe);
}

const std::vector<ContactMode>& all_modes() {
  static const std::vector<ContactMode> modes = {
      ContactMode::stick_slip(+1), ContactMode::stick_slip(-1),
      ContactMode::slip_stick(+1), ContactMode::slip_stick(-1),
      ContactMode::slip_slip(+1, +1), ContactMode::slip_slip(+1, -1),
      ContactMode::slip_slip(-1, +1), ContactMode::slip_slip(-1, -1)};
  return modes;
}

InitialMode initial_mode(const Vec5& q, const Vec5& qd, const Vec2& qdd_c,
                         const RobotParams& p, const ContactTols& tols) {
  InitialMode out;
  bool found = false;
  for (const ContactMode& m : all_modes()) {
    // At a fresh state slip velocities usually sit inside the stick band,
    // so the accel-sign branch of check_mode decides slip directions.
    if (!mode_inconsistency(q, qd, qdd_c, p, m, tols, false)) {
      if (!found) {
        out.mode = m;
        found = true;
      }
      ++out.n_consistent;
    }
  }
  if (!found) {
    // No consistent mode at the initial state; report the stick-slip
    // candidate anyway so the caller can surface a useful error.
    out.mode = ContactMode::stick_slip(+1);
    out.n_consistent = 0;
  }
  out.ambiguous = out.n_consistent > 1;
  return out;
}

}  // namespace crawl
