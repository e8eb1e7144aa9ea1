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

#include <cmath>
#include <stdexcept>
#include <vector>

#include "crawl/controller.hpp"
#include "crawl/metrics.hpp"
#include "crawl/rng.hpp"

using namespace crawl;

namespace {

InputSpec mid_input() {
  InputSpec in;  // defaults: phi0 110 deg, A 18 deg, psi 20 deg
  in.omega = 8.0;
  return in;
}

// Contact x-accelerations from a full mode solve, the direct route the
// inverse-dynamics map must reproduce.
Vec2 xacc_direct(const Vec5& q, const Vec5& qd, const Vec2& qdd_c,
                 const RobotParams& p, const ContactMode& mode) {
  const ModeSolution sol = solve_mode(q, qd, qdd_c, p, mode);
  REQUIRE(!sol.singular);
  const Vec5 a = sol.qdd(qdd_c);
  return Vec2{(contact_jac(q, p, 1).row(0) * a)(0) +
                  (contact_jac_dot(q, qd, p, 1).row(0) * qd)(0),
              (contact_jac(q, p, 2).row(0) * a)(0) +
                  (contact_jac_dot(q, qd, p, 2).row(0) * qd)(0)};
}

// Least-squares slope of ys over ts.
double fit_slope(const std::vector<double>& ts, const std::vector<double>& ys) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = double(ts.size());
  for (size_t i = 0; i < ts.size(); ++i) {
    sx += ts[i];
    sy += ys[i];
    sxx += ts[i] * ts[i];
    sxy += ts[i] * ys[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// Angle window the gait never enters: pins the law to the tracking branch.
ControllerConfig tracking_only() {
  ControllerConfig cfg;
  cfg.phi_min = rad(89.0);
  cfg.phi_max = rad(89.5);
  return cfg;
}

}  // namespace

TEST_CASE("controller config validation") {
  ControllerConfig cfg;
  CHECK_NOTHROW(cfg.validate());

  SUBCASE("asymmetric gain") {
    cfg.KP(0, 1) = 1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  }
  SUBCASE("indefinite gain") {
    cfg.Kv = -1.0 * Mat2::Identity();
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  }
  SUBCASE("zero gain is not positive definite") {
    cfg.KD.setZero();
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  }
  SUBCASE("empty angle window") {
    cfg.phi_min = cfg.phi_max;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  }
  SUBCASE("negative dwell") {
    cfg.min_dwell = -1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  }
}

TEST_CASE("inverse dynamics map matches direct solves for random commands") {
  const RobotParams p;
  Rng rng(271828);
  const ContactMode modes[] = {
      ContactMode::slip_slip(+1, -1), ContactMode::slip_slip(-1, +1),
      ContactMode::slip_slip(+1, +1), ContactMode::slip_slip(-1, -1)};

  int tested = 0;
  for (int trial = 0; trial < 25; ++trial) {
    const double phi1 = rng.uniform(rad(95.0), rad(125.0));
    const double phi2 = rng.uniform(rad(95.0), rad(125.0));
    const Vec5 q =
        grounded_posture(rng.uniform(-0.2, 0.2), phi1, phi2, p,
                         rng.uniform(-0.2, 0.2));
    Vec5 qd;
    for (int i = 0; i < 5; ++i) qd[i] = rng.uniform(-0.5, 0.5);
    Vec2 qdd_c;
    qdd_c << rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0);

    for (const ContactMode& mode : modes) {
      const InverseDynamics id = inverse_dynamics_matrices(q, qd, p, mode);
      if (!id.ok) continue;
      const Vec2 direct = xacc_direct(q, qd, qdd_c, p, mode);
      const Vec2 mapped = id.S1 * qdd_c + id.S0;
      for (int i = 0; i < 2; ++i)
        CHECK(std::abs(direct[i] - mapped[i]) <
              1e-9 * (1.0 + std::abs(direct[i])));
      ++tested;
    }
  }
  CHECK(tested > 80);
}

TEST_CASE("inverse dynamics S0: gravity at rest, quadratic in velocity") {
  const RobotParams p;
  const Vec5 q = grounded_posture(0.0, rad(105.0), rad(118.0), p);
  const ContactMode mode = ContactMode::slip_slip(+1, -1);

  const InverseDynamics at_rest =
      inverse_dynamics_matrices(q, Vec5::Zero(), p, mode);
  REQUIRE(at_rest.ok);
  // At rest the remainder is exactly the gravity-driven solve.
  const Vec2 grav = xacc_direct(q, Vec5::Zero(), Vec2::Zero(), p, mode);
  CHECK((at_rest.S0 - grav).cwiseAbs().maxCoeff() < 1e-10);

  Vec5 qd;
  qd << 0.1, -0.05, 0.2, 0.3, -0.25;
  const InverseDynamics v1 = inverse_dynamics_matrices(q, qd, p, mode);
  const InverseDynamics v2 =
      inverse_dynamics_matrices(q, (2 * qd).eval(), p, mode);
  REQUIRE(v1.ok);
  REQUIRE(v2.ok);
  // Velocity products are quadratic: doubling qd quadruples S0 - S0(0).
  const Vec2 d1 = v1.S0 - at_rest.S0;
  const Vec2 d2 = v2.S0 - at_rest.S0;
  for (int i = 0; i < 2; ++i)
    CHECK(d2[i] == doctest::Approx(4.0 * d1[i]).epsilon(1e-8));
  // S1 is velocity-independent only through its Jacobian factors; at equal
  // q it must not change with qd at all (the system matrix ignores qd).
  CHECK((v1.S1 - at_rest.S1).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("control references pass through the input and contact curves") {
  const RobotParams p;
  const InputSpec in = mid_input();
  const ContactReference cref(in, p);
  const double t = 0.37;
  const ControlRefs r = control_refs(t, in, cref);
  const JointCommand jc = eval_input(t, in);
  CHECK(r.qr == jc.q);
  CHECK(r.qdr == jc.qd);
  CHECK(r.qddr == jc.qdd);
  CHECK(r.vxr == cref.v(t));
  CHECK(r.vdxr == cref.vdot(t));
}

TEST_CASE("tracking branch on the reference commands the reference") {
  const RobotParams p;
  const InputSpec in = mid_input();
  const ContactReference cref(in, p);
  const double t = 0.52;
  const ControlRefs refs = control_refs(t, in, cref);

  Vec5 q = grounded_posture(0.1, refs.qr[0], refs.qr[1], p);
  Vec5 qd;
  qd << 0.02, -0.01, 0.05, refs.qdr[0], refs.qdr[1];

  const ControllerConfig cfg;
  const ControlDecision dec = control_law(
      t, q, qd, ContactMode::stick_slip(+1), cfg, refs, p);
  CHECK(dec.branch == ControlBranch::Tracking);
  CHECK(dec.qdd_c == refs.qddr);  // zero error: PD terms vanish exactly
  CHECK(!dec.fallback);
}

TEST_CASE("velocity branch enforces the contact-velocity error dynamics") {
  const RobotParams p;
  const InputSpec in = mid_input();
  const ContactReference cref(in, p);
  const ControllerConfig cfg;
  const double t = 0.1;
  const ControlRefs refs = control_refs(t, in, cref);

  const Vec5 q = grounded_posture(0.0, rad(110.0), rad(112.0), p);
  Vec5 qd;
  qd << 0.01, 0.0, -0.02, 0.1, -0.15;
  const ContactMode mode = ContactMode::slip_slip(+1, -1);

  const ControlDecision dec = control_law(t, q, qd, mode, cfg, refs, p);
  REQUIRE(dec.branch == ControlBranch::Velocity);
  CHECK(dec.s1_cond < 1e3);

  // Substituting the command back into the dynamics must produce
  // vdot_x = vdot_x^r - Kv (v_x - v_x^r): the closed-loop error equation.
  const Vec2 vx{(contact_jac(q, p, 1).row(0) * qd)(0),
                (contact_jac(q, p, 2).row(0) * qd)(0)};
  const Vec2 target = refs.vdxr - cfg.Kv * (vx - refs.vxr);
  const Vec2 achieved = xacc_direct(q, qd, dec.qdd_c, p, mode);
  for (int i = 0; i < 2; ++i)
    CHECK(std::abs(achieved[i] - target[i]) <
          1e-8 * (1.0 + std::abs(target[i])));
}

TEST_CASE("velocity branch guards: angle window, mode, conditioning") {
  const RobotParams p;
  const InputSpec in = mid_input();
  const ContactReference cref(in, p);
  const ControlRefs refs = control_refs(0.1, in, cref);
  ControllerConfig cfg;

  Vec5 qd;
  qd << 0.01, 0.0, -0.02, 0.1, -0.15;

  SUBCASE("joint outside the window falls back to tracking") {
    const Vec5 q = grounded_posture(0.0, rad(80.0), rad(112.0), p);
    const ControlDecision dec = control_law(
        0.1, q, qd, ContactMode::slip_slip(+1, -1), cfg, refs, p);
    CHECK(dec.branch == ControlBranch::Tracking);
    CHECK(!dec.fallback);  // the window guard is not an S1 failure
  }
  SUBCASE("single-stick modes always track") {
    const Vec5 q = grounded_posture(0.0, rad(110.0), rad(112.0), p);
    for (const ContactMode m :
         {ContactMode::stick_slip(-1), ContactMode::slip_stick(+1)}) {
      const ControlDecision dec = control_law(0.1, q, qd, m, cfg, refs, p);
      CHECK(dec.branch == ControlBranch::Tracking);
    }
  }
  SUBCASE("a forced velocity branch demotes outside slip-slip") {
    const Vec5 q = grounded_posture(0.0, rad(110.0), rad(112.0), p);
    const ControlDecision dec =
        control_law(0.1, q, qd, ContactMode::stick_slip(+1), cfg, refs, p,
                    ControlBranch::Velocity);
    CHECK(dec.branch == ControlBranch::Tracking);
  }
  SUBCASE("conditioning limit triggers the fallback") {
    const Vec5 q = grounded_posture(0.0, rad(110.0), rad(112.0), p);
    cfg.s1_cond_max = 1.0;  // unattainable: cond >= 1 always
    const ControlDecision dec = control_law(
        0.1, q, qd, ContactMode::slip_slip(+1, -1), cfg, refs, p);
    CHECK(dec.branch == ControlBranch::Tracking);
    CHECK(dec.fallback);
    CHECK(dec.s1_cond >= 1.0);
  }
}

TEST_CASE("closed loop at omega 8: frozen regression and orbit facts") {
  const RobotParams p;
  const InputSpec in = mid_input();
  const double T = in.period();
  const ControllerConfig cfg;

  const ClosedLoopResult cl =
      simulate_closed_loop(p, cfg, in, 30 * T, {}, std::nullopt, 20);
  REQUIRE(cl.traj.termination == Termination::Normal);
  CHECK(cl.metrics.steady);
  CHECK((cl.metrics.k == 1 || cl.metrics.k == 2));
  CHECK(cl.metrics.S == doctest::Approx(0.044242412336892412).epsilon(1e-6));

  // The controlled advancement recovers the low-frequency stride scale.
  CHECK(cl.metrics.S > 0.7 * 0.0484);
  CHECK(cl.metrics.S < 1.3 * 0.0484);

  const Trajectory open = simulate(p, in, 30 * T);
  const StepMetrics mo = step_metrics(open, in, 20);
  REQUIRE(open.termination == Termination::Normal);
  CHECK(cl.metrics.S >= 5.0 * mo.S);

  // The velocity branch stayed well-conditioned throughout.
  CHECK(cl.max_s1_cond > 0.0);
  CHECK(cl.max_s1_cond < 1e6);

  // Anti-chatter: no switch request was ever suppressed, consecutive
  // switches are separated by at least the dwell, and the span chain is
  // consistent with the switch count.
  CHECK(cl.n_suppressed == 0);
  REQUIRE(!cl.branch_spans.empty());
  CHECK(cl.branch_spans.front().t_begin == 0.0);
  CHECK(cl.branch_spans.size() == size_t(cl.n_switches) + 1);
  for (size_t i = 1; i < cl.branch_spans.size(); ++i) {
    CHECK(cl.branch_spans[i].t_begin - cl.branch_spans[i - 1].t_begin >=
          cfg.min_dwell);
    CHECK(cl.branch_spans[i].branch != cl.branch_spans[i - 1].branch);
  }

  // Both branches actually participate in the steady gait.
  bool any_velocity = false, any_tracking = false;
  for (const BranchSpan& bs : cl.branch_spans) {
    any_velocity = any_velocity || bs.branch == ControlBranch::Velocity;
    any_tracking = any_tracking || bs.branch == ControlBranch::Tracking;
  }
  CHECK(any_velocity);
  CHECK(any_tracking);

  // The controller strictly reduces the opposing-slip share of the path.
  const SlipFractions sfo = slip_fractions(open, 20 * T, open.t_end);
  const SlipFractions sfc = slip_fractions(cl.traj, 20 * T, cl.traj.t_end);
  for (int i = 0; i < 2; ++i) {
    CHECK(sfc.dist_frac[i] < sfo.dist_frac[i] - 0.05);
  }
  CHECK(sfc.dist_frac[0] == doctest::Approx(0.357).epsilon(0.03));
  CHECK(sfc.dist_frac[1] == doctest::Approx(0.403).epsilon(0.03));
}

TEST_CASE("closed loop converges to the same orbit from a perturbed start") {
  const RobotParams p;
  const InputSpec in = mid_input();
  const double T = in.period();
  const ControllerConfig cfg;

  const ClosedLoopResult ref =
      simulate_closed_loop(p, cfg, in, 30 * T, {}, std::nullopt, 20);
  JointPerturbation jp;
  jp.dq << 0.05, -0.03;
  const ClosedLoopResult per =
      simulate_closed_loop(p, cfg, in, 30 * T, {}, jp, 20);
  REQUIRE(per.traj.termination == Termination::Normal);
  CHECK(per.metrics.steady);
  CHECK(per.metrics.S ==
        doctest::Approx(ref.metrics.S).epsilon(1e-3));
}

TEST_CASE("zero gains with the reference start reduce to the open loop") {
  const RobotParams p;
  const InputSpec in = mid_input();
  const double T = in.period();

  ControllerConfig cfg = tracking_only();
  cfg.Kv.setZero();
  cfg.KP.setZero();
  cfg.KD.setZero();

  const ClosedLoopResult cl =
      simulate_closed_loop(p, cfg, in, 30 * T, {}, std::nullopt, 20);
  REQUIRE(cl.traj.termination == Termination::Normal);
  CHECK(cl.n_switches == 0);

  const Trajectory open = simulate(p, in, 30 * T);
  const StepMetrics mo = step_metrics(open, in, 20);
  CHECK(std::abs(cl.metrics.S - mo.S) < 1e-5);

  // With qdd_c = qddr exactly and the reference initial condition, the
  // integrated joints never leave the prescribed trajectory beyond the
  // integrator's own accumulation.
  double max_joint_err = 0;
  for (const Sample& s : cl.traj.samples) {
    const JointCommand jc = eval_input(s.t, in);
    max_joint_err = std::max(max_joint_err, std::abs(s.q[3] - jc.q[0]));
    max_joint_err = std::max(max_joint_err, std::abs(s.q[4] - jc.q[1]));
  }
  CHECK(max_joint_err < 1e-4);
}

TEST_CASE("joint-tracking error decays at the analytic PD rates") {
  // KP = 80 I, KD = 100 I: s^2 + 100 s + 80 = 0 with roots
  // s = -0.80645 and s = -99.194 per joint, independent of the base.
  const RobotParams p;
  const InputSpec in = mid_input();
  const double disc = std::sqrt(100.0 * 100.0 - 4.0 * 80.0);
  const double s_slow = (-100.0 + disc) / 2.0;
  const double s_fast = (-100.0 - disc) / 2.0;

  SUBCASE("slow mode from an angle offset") {
    SimOptions o;
    o.record_dt = 2e-3;
    JointPerturbation jp;
    jp.dq << 0.05, -0.03;
    const ClosedLoopResult r =
        simulate_closed_loop(p, tracking_only(), in, 3.0, o, jp, 1);
    REQUIRE(r.traj.termination == Termination::Normal);
    std::vector<double> ts, ls;
    for (const Sample& s : r.traj.samples) {
      if (s.t < 0.2 || s.t > 2.2) continue;
      const double e = s.q[3] - eval_input(s.t, in).q[0];
      REQUIRE(std::abs(e) > 1e-12);
      ts.push_back(s.t);
      ls.push_back(std::log(std::abs(e)));
    }
    REQUIRE(ts.size() > 100);
    const double slope = fit_slope(ts, ls);
    CHECK(slope == doctest::Approx(s_slow).epsilon(0.05));
  }
  SUBCASE("fast mode from a rate offset") {
    SimOptions o;
    o.record_dt = 5e-4;
    JointPerturbation jp;
    jp.dqd << 1.2, 0.0;
    const ClosedLoopResult r =
        simulate_closed_loop(p, tracking_only(), in, 0.3, o, jp, 1);
    REQUIRE(r.traj.termination == Termination::Normal);
    std::vector<double> ts, ls;
    for (const Sample& s : r.traj.samples) {
      if (s.t < 0.001 || s.t > 0.015) continue;
      const double ed = s.qd[3] - eval_input(s.t, in).qd[0];
      REQUIRE(std::abs(ed) > 1e-12);
      ts.push_back(s.t);
      ls.push_back(std::log(std::abs(ed)));
    }
    REQUIRE(ts.size() > 20);
    const double slope = fit_slope(ts, ls);
    CHECK(slope == doctest::Approx(s_fast).epsilon(0.10));
  }
}
