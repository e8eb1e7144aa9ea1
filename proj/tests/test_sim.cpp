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
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "crawl/metrics.hpp"
#include "crawl/sim.hpp"

using namespace crawl;

namespace {

InputSpec input_at(double omega) {
  InputSpec in;  // defaults: phi0 110 deg, A 18 deg, psi 20 deg
  in.omega = omega;
  return in;
}

// Slow reference gait, shared across cases (simulate is deterministic).
const Trajectory& golden() {
  static const Trajectory t = [] {
    const InputSpec in = input_at(0.3);
    return simulate(RobotParams{}, in, 10 * in.period());
  }();
  return t;
}

size_t span_of(const Trajectory& traj, double t) {
  size_t i = 0;
  while (i + 1 < traj.spans.size() && traj.spans[i + 1].t_begin <= t) ++i;
  return i;
}

// Fixed-step RK4 integration of the smoothed-friction bilateral model:
// feet glued to the ground in y, tangential force mu tanh(v/eps) f_y
// opposing the slip velocity. An independent oracle for the hybrid
// event-driven dynamics: no modes, no events, no cone logic. Joints are
// substituted from the command, as in the hybrid model; the integrated
// state is the base (x, y, theta) and its rates.
double regularized_per_cycle(const RobotParams& p, const InputSpec& in,
                             int cycles, int n_ss) {
  const double eps_v = 1e-4;

  using Vec6 = Eigen::Matrix<double, 6, 1>;
  const auto rhs_of = [&](const Vec6& s, double t) {
    const JointCommand c = eval_input(t, in);
    Vec5 q_, qd_;
    q_ << s[0], s[1], s[2], c.q[0], c.q[1];
    qd_ << s[3], s[4], s[5], c.qd[0], c.qd[1];
    const Mat55 M = mass_matrix(q_, p);
    const Vec5 B = velocity_bias(q_, qd_, p);
    const Vec5 G = gravity_vector(q_, p);
    const Mat25 W1 = contact_jac(q_, p, 1);
    const Mat25 W2 = contact_jac(q_, p, 2);
    const Mat25 W1d = contact_jac_dot(q_, qd_, p, 1);
    const Mat25 W2d = contact_jac_dot(q_, qd_, p, 2);
    const double g1 = -p.mu1 * std::tanh((W1.row(0) * qd_)(0) / eps_v);
    const double g2 = -p.mu2 * std::tanh((W2.row(0) * qd_)(0) / eps_v);

    // Unknowns u = [xdd, ydd, thdd, tau1, tau2, f1y, f2y].
    Eigen::Matrix<double, 7, 7> A = Eigen::Matrix<double, 7, 7>::Zero();
    Eigen::Matrix<double, 7, 1> b;
    const Mat52 E = actuation_map();
    A.block<5, 3>(0, 0) = M.leftCols<3>();
    A.block<5, 2>(0, 3) = -E;
    A.block<5, 1>(0, 5) = -(W1.row(0).transpose() * g1 + W1.row(1).transpose());
    A.block<5, 1>(0, 6) = -(W2.row(0).transpose() * g2 + W2.row(1).transpose());
    b.head<5>() = -(M.rightCols<2>() * c.qdd + B + G);
    A.block<1, 3>(5, 0) = W1.row(1).head<3>();
    A.block<1, 3>(6, 0) = W2.row(1).head<3>();
    b[5] = -(W1.row(1).tail<2>() * c.qdd)(0) - (W1d.row(1) * qd_)(0);
    b[6] = -(W2.row(1).tail<2>() * c.qdd)(0) - (W2d.row(1) * qd_)(0);
    const Eigen::Matrix<double, 7, 1> u = A.partialPivLu().solve(b);

    Vec6 ds;
    ds << s[3], s[4], s[5], u[0], u[1], u[2];
    return ds;
  };

  const JointCommand c0 = eval_input(0.0, in);
  const Vec5 q0 = grounded_posture(0.0, c0.q[0], c0.q[1], p);
  Vec6 s;
  s << q0[0], q0[1], q0[2], 0, 0, 0;
  {
    // Base rates with minimum norm such that both feet start with zero
    // vertical velocity (the glue constraint is enforced at acceleration
    // level, so the initial condition must satisfy it at velocity level).
    Eigen::Matrix<double, 2, 3> Cb;
    Vec2 rhs;
    for (int foot = 1; foot <= 2; ++foot) {
      const Mat25 W = contact_jac(q0, p, foot);
      Cb.row(foot - 1) = W.row(1).head<3>();
      rhs[foot - 1] = -(W.row(1).tail<2>() * c0.qd)(0);
    }
    s.tail<3>() =
        Cb.transpose() * (Cb * Cb.transpose()).ldlt().solve(rhs);
  }

  const auto foot1_x = [&](const Vec6& st, double t) {
    const JointCommand c = eval_input(t, in);
    Vec5 q_;
    q_ << st[0], st[1], st[2], c.q[0], c.q[1];
    return contact_pos(q_, p, 1)[0];
  };

  // dt divides the period exactly so cycle marks land on step boundaries.
  const double T = in.period();
  const long n_per = std::lround(std::ceil(T / 1e-5));
  const double dt = T / double(n_per);
  std::vector<double> marks;
  double t = 0.0;
  for (long k = 0; k < cycles * n_per; ++k) {
    if (k % n_per == 0 && k >= n_ss * n_per)
      marks.push_back(foot1_x(s, t));
    const Vec6 k1 = rhs_of(s, t);
    const Vec6 k2 = rhs_of(s + dt / 2 * k1, t + dt / 2);
    const Vec6 k3 = rhs_of(s + dt / 2 * k2, t + dt / 2);
    const Vec6 k4 = rhs_of(s + dt * k3, t + dt);
    s += dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    t += dt;
  }
  marks.push_back(foot1_x(s, t));
  REQUIRE(marks.size() >= 2);
  return (marks.back() - marks.front()) / double(marks.size() - 1);
}

}  // namespace

TEST_CASE("slow gait: frozen regression and steady metrics") {
  const InputSpec in = input_at(0.3);
  const Trajectory& traj = golden();
  REQUIRE(traj.termination == Termination::Normal);
  CHECK(traj.t_end == doctest::Approx(10 * in.period()).epsilon(1e-12));

  const StepMetrics m = step_metrics(traj, in, 5);
  CHECK(m.steady);
  CHECK(m.k == 1);
  CHECK(m.spread < 1e-4);
  // Frozen value from this implementation; the loose window is the
  // physical sanity band.
  CHECK(m.S == doctest::Approx(0.19387737987877429).epsilon(1e-9));
  CHECK(m.S > 0.18);
  CHECK(m.S < 0.21);
  CHECK(m.V == doctest::Approx(m.S / in.period()).epsilon(1e-12));
}

TEST_CASE("slow gait: near-zero backward slip share") {
  const InputSpec in = input_at(0.3);
  const Trajectory& traj = golden();
  const SlipFractions sf =
      slip_fractions(traj, 5 * in.period(), traj.t_end);
  CHECK(sf.time_frac[0] < 0.05);
  CHECK(sf.time_frac[1] < 0.05);
  CHECK(sf.time_frac[0] == doctest::Approx(0.048614735209857339).epsilon(1e-6));
  CHECK(sf.time_frac[1] == doctest::Approx(0.0084263597785650939).epsilon(1e-6));
  CHECK(!sf.both_forward);
}

TEST_CASE("slow gait: feet never leave the ground") {
  const Trajectory& traj = golden();
  double worst = 0;
  for (const auto& s : traj.samples) {
    worst = std::max(worst, std::abs(s.r1[1]));
    worst = std::max(worst, std::abs(s.r2[1]));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("slow gait: normal forces stay positive") {
  const Trajectory& traj = golden();
  for (const auto& s : traj.samples) {
    CHECK(s.f1[1] > 0.0);
    CHECK(s.f2[1] > 0.0);
  }
}

TEST_CASE("slow gait: stuck feet respect the friction cone") {
  const RobotParams p;
  const Trajectory& traj = golden();
  double worst = 1e300;
  for (const auto& s : traj.samples) {
    const size_t i = span_of(traj, s.t);
    // Skip samples at dwell boundaries, where the margin legitimately
    // touches zero as the cone guard fires.
    if (s.t - traj.spans[i].t_begin < 1e-6 ||
        traj.span_end(i) - s.t < 1e-6)
      continue;
    const ContactMode m = traj.spans[i].mode;
    if (m.stuck(1)) worst = std::min(worst, cone_margin(s.f1, p.mu1));
    if (m.stuck(2)) worst = std::min(worst, cone_margin(s.f2, p.mu2));
  }
  CHECK(worst >= -1e-9);
}

TEST_CASE("slow gait: slipping feet move with their slip sign") {
  const Trajectory& traj = golden();
  for (size_t i = 0; i < traj.spans.size(); ++i) {
    const ContactMode m = traj.spans[i].mode;
    const double a = traj.spans[i].t_begin, b = traj.span_end(i);
    const Sample* prev = nullptr;
    for (const auto& s : traj.samples) {
      if (s.t < a + 1e-12 || s.t > b - 1e-12) continue;
      if (prev) {
        const double d1 = s.r1[0] - prev->r1[0];
        const double d2 = s.r2[0] - prev->r2[0];
        if (m.sigma1 != 0) CHECK(d1 * m.sigma1 >= -1e-9);
        if (m.sigma2 != 0) CHECK(d2 * m.sigma2 >= -1e-9);
        // A stuck foot moves at most stick_vel_tol over the interval.
        const double cap = 1e-6 * (s.t - prev->t) + 1e-9;
        if (m.sigma1 == 0) CHECK(std::abs(d1) < cap);
        if (m.sigma2 == 0) CHECK(std::abs(d2) < cap);
      }
      prev = &s;
    }
  }
}

TEST_CASE("slow gait: alternating single-foot slip dominates") {
  const Trajectory& traj = golden();
  int n_ss = 0, n_st = 0;
  for (const auto& sp : traj.spans) {
    if (sp.mode.kind == ModeKind::StickSlip) ++n_ss;
    if (sp.mode.kind == ModeKind::SlipStick) ++n_st;
  }
  CHECK(n_ss >= 10);
  CHECK(n_st >= 10);
}

TEST_CASE("events and spans form a consistent chain") {
  const Trajectory& traj = golden();
  REQUIRE(traj.spans.size() == traj.events.size() + 1);
  CHECK(traj.spans.front().t_begin == 0.0);
  for (size_t j = 0; j < traj.events.size(); ++j) {
    const SimEvent& ev = traj.events[j];
    CHECK(traj.spans[j + 1].t_begin == ev.t);
    CHECK(traj.spans[j + 1].mode == ev.to);
    CHECK(traj.spans[j].mode == ev.from);
    CHECK(!ev.guard.empty());
    if (j) CHECK(traj.events[j - 1].t <= ev.t);
  }
}

TEST_CASE("samples are recorded on a clean monotone grid") {
  const Trajectory& traj = golden();
  REQUIRE(traj.samples.size() > 100);
  CHECK(traj.samples.front().t == 0.0);
  CHECK(traj.samples.back().t ==
        doctest::Approx(traj.t_end).epsilon(1e-12));
  for (size_t i = 1; i < traj.samples.size(); ++i)
    CHECK(traj.samples[i].t > traj.samples[i - 1].t);
}

TEST_CASE("energy balance holds along the slow gait") {
  const RobotParams p;
  // Internal-frame recording: the model kinematics below are evaluated on
  // the samples directly, and they are only valid in the dynamics frame.
  const InputSpec in = input_at(0.3);
  SimOptions opts;
  opts.record_world = false;
  const Trajectory traj = simulate(p, in, 3 * in.period(), opts);
  REQUIRE(traj.termination == Termination::Normal);

  const auto energy = [&](const Sample& s) {
    const double T = 0.5 * s.qd.dot(mass_matrix(s.q, p) * s.qd);
    const double th = s.q[2];
    const double y0 = s.q[1];
    const double y1 = y0 - p.l0 / 2 * std::sin(th) -
                      p.l1 / 2 * std::sin(s.q[3] - th);
    const double y2 = y0 + p.l0 / 2 * std::sin(th) -
                      p.l2 / 2 * std::sin(s.q[4] + th);
    return T + p.g * (p.m0 * y0 + p.m1 * y1 + p.m2 * y2);
  };
  const auto power = [&](const Sample& s) {
    const Vec2 v1 = contact_jac(s.q, p, 1) * s.qd;
    const Vec2 v2 = contact_jac(s.q, p, 2) * s.qd;
    return s.tau[0] * s.qd[3] + s.tau[1] * s.qd[4] + s.f1.dot(v1) +
           s.f2.dot(v2);
  };

  double residual = 0, work = 0;
  for (size_t i = 1; i < traj.samples.size(); ++i) {
    const Sample& a = traj.samples[i - 1];
    const Sample& b = traj.samples[i];
    const double dt = b.t - a.t;
    const double dw = 0.5 * (power(a) + power(b)) * dt;
    residual += std::abs(energy(b) - energy(a) - dw);
    work += std::abs(dw);
  }
  REQUIRE(work > 0.01);
  CHECK(residual / work < 0.01);
}

TEST_CASE("frozen joints give a standing robot") {
  RobotParams p;
  InputSpec in = input_at(1.0);
  in.A = 0.0;
  const Trajectory traj = simulate(p, in, 5 * in.period());
  REQUIRE(traj.termination == Termination::Normal);
  const Sample& last = traj.samples.back();
  CHECK(std::abs(last.q[0]) < 1e-9);
  CHECK(last.qd.cwiseAbs().maxCoeff() < 1e-8);
  const StepMetrics m = step_metrics(traj, in, 2);
  CHECK(std::abs(m.S) < 1e-9);
}

TEST_CASE("zero phase lag produces no net advancement") {
  RobotParams p;
  InputSpec in = input_at(3.0);
  in.psi = 0.0;
  const Trajectory traj = simulate(p, in, 10 * in.period());
  REQUIRE(traj.termination == Termination::Normal);
  const StepMetrics m = step_metrics(traj, in, 5);
  CHECK(std::abs(m.S) < 1e-6);
}

TEST_CASE("reversing the phase lag mirrors the gait") {
  RobotParams p;
  InputSpec fwd = input_at(3.0);
  InputSpec rev = fwd;
  rev.psi = -fwd.psi;
  const Trajectory tf = simulate(p, fwd, 10 * fwd.period());
  const Trajectory tr = simulate(p, rev, 10 * rev.period());
  REQUIRE(tf.termination == Termination::Normal);
  REQUIRE(tr.termination == Termination::Normal);
  const double sf = step_metrics(tf, fwd, 5).S;
  const double sr = step_metrics(tr, rev, 5).S;
  CHECK(sf > 1e-4);
  CHECK(sr == doctest::Approx(-sf).epsilon(1e-6));
}

TEST_CASE("fast gait: both feet slip forward together") {
  RobotParams p;
  const InputSpec in = input_at(16.0);
  const Trajectory traj = simulate(p, in, 10 * in.period());
  REQUIRE(traj.termination == Termination::Normal);
  const StepMetrics m = step_metrics(traj, in, 5);
  CHECK(m.S == doctest::Approx(0.0075694114390335021).epsilon(1e-9));
  const SlipFractions sf = slip_fractions(traj, 5 * in.period(), traj.t_end);
  CHECK(sf.both_forward);
  // Substantial backward slip is what the controller later removes.
  CHECK(sf.time_frac[0] > 0.2);
  CHECK(sf.time_frac[1] > 0.2);
}

TEST_CASE("mid-range gait: frozen regression near the collapse") {
  RobotParams p;
  const InputSpec in = input_at(8.0);
  const Trajectory traj = simulate(p, in, 30 * in.period());
  REQUIRE(traj.termination == Termination::Normal);
  const StepMetrics m = step_metrics(traj, in, 20);
  CHECK(m.S == doctest::Approx(0.0028304425379699905).epsilon(1e-8));
  const SlipFractions sf = slip_fractions(traj, 20 * in.period(), traj.t_end);
  CHECK(sf.dist_frac[0] == doctest::Approx(0.49).epsilon(0.02));
  CHECK(sf.dist_frac[1] == doctest::Approx(0.49).epsilon(0.02));
}

TEST_CASE("halving the tolerances barely moves the answer") {
  RobotParams p;
  const InputSpec in = input_at(3.0);
  SimOptions tight;
  tight.tol_scale = 0.5;
  const Trajectory t1 = simulate(p, in, 10 * in.period());
  const Trajectory t2 = simulate(p, in, 10 * in.period(), tight);
  const double s1 = step_metrics(t1, in, 5).S;
  const double s2 = step_metrics(t2, in, 5).S;
  REQUIRE(std::abs(s1) > 1e-4);
  CHECK(std::abs(s2 - s1) / std::abs(s1) < 0.005);
}

TEST_CASE("internal-frame recording is the exact mirror of the output frame") {
  RobotParams p;
  const InputSpec in = input_at(3.0);
  SimOptions world, internal;
  internal.record_world = false;
  const Trajectory tw = simulate(p, in, 3 * in.period(), world);
  const Trajectory ti = simulate(p, in, 3 * in.period(), internal);
  REQUIRE(tw.samples.size() == ti.samples.size());
  for (size_t i = 0; i < tw.samples.size(); ++i) {
    const Sample& w = tw.samples[i];
    const Sample& s = ti.samples[i];
    CHECK(w.t == s.t);
    CHECK(w.q[0] == -s.q[0]);
    CHECK(w.q[1] == s.q[1]);
    CHECK(w.q[2] == -s.q[2]);
    CHECK(w.q[3] == s.q[3]);
    CHECK(w.q[4] == s.q[4]);
    CHECK(w.qd[0] == -s.qd[0]);
    CHECK(w.f1[0] == -s.f1[0]);
    CHECK(w.f1[1] == s.f1[1]);
    CHECK(w.f2[0] == -s.f2[0]);
    CHECK(w.r1[0] == -s.r1[0]);
    CHECK(w.r2[0] == -s.r2[0]);
    CHECK(w.tau[0] == s.tau[0]);
    CHECK(w.tau[1] == s.tau[1]);
  }
}

TEST_CASE("smoothed-friction oracle confirms the hybrid dynamics") {
  RobotParams p;
  const InputSpec in = input_at(3.0);
  const Trajectory traj = simulate(p, in, 10 * in.period());
  REQUIRE(traj.termination == Termination::Normal);
  const double S = step_metrics(traj, in, 5).S;
  const double S_reg = regularized_per_cycle(p, in, 8, 5);
  REQUIRE(std::abs(S) > 1e-4);
  CHECK(std::abs(std::abs(S_reg) - std::abs(S)) / std::abs(S) < 0.05);
}
