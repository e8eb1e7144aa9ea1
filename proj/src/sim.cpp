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
#include "crawl/sim.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

#include "crawl/integrate.hpp"

namespace crawl {

const char* to_string(Termination t) {
  switch (t) {
    case Termination::Normal: return "normal";
    case Termination::Detachment: return "detachment";
    case Termination::Singular: return "singular";
    case Termination::Painleve: return "painleve";
  }
  return "?";
}

namespace {

struct SingularError {
  double t;
};

}  // namespace

namespace detail {

namespace {

int sgn_or_pos(double x) { return x < 0 ? -1 : 1; }

// Physically ordered successor candidates for a fired guard. The check
// itself (accel-sign band at slip onset, cone feasibility for fresh stick)
// does the real filtering; the order only decides ties, preferring stick
// and the slip direction suggested by the stuck foot's tangential force.
std::vector<ContactMode> candidates_for(const ContactMode& m,
                                        const std::string& guard,
                                        double f_stuck_x) {
  const int hint = -sgn_or_pos(f_stuck_x);
  std::vector<ContactMode> c;
  if (guard == "v1") {
    if (m.kind == ModeKind::SlipSlip) {
      c = {ContactMode::stick_slip(m.sigma2),
           ContactMode::slip_slip(-m.sigma1, m.sigma2)};
    } else if (m.kind == ModeKind::SlipStick) {
      c = {ContactMode::stick_slip(hint), ContactMode::stick_slip(-hint),
           ContactMode::slip_stick(-m.sigma1)};
    }
  } else if (guard == "v2") {
    if (m.kind == ModeKind::SlipSlip) {
      c = {ContactMode::slip_stick(m.sigma1),
           ContactMode::slip_slip(m.sigma1, -m.sigma2)};
    } else if (m.kind == ModeKind::StickSlip) {
      c = {ContactMode::slip_stick(hint), ContactMode::slip_stick(-hint),
           ContactMode::stick_slip(-m.sigma2)};
    }
  } else if (guard == "cone1" && m.kind == ModeKind::StickSlip) {
    c = {ContactMode::slip_slip(hint, m.sigma2),
         ContactMode::slip_slip(-hint, m.sigma2)};
  } else if (guard == "cone2" && m.kind == ModeKind::SlipStick) {
    c = {ContactMode::slip_slip(m.sigma1, hint),
         ContactMode::slip_slip(m.sigma1, -hint)};
  }
  return c;
}

}  // namespace

TransitionResult resolve_transition(const Vec5& q, const Vec5& qd,
                                    const Vec2& qdd_c, const RobotParams& p,
                                    const ContactMode& mode,
                                    const std::string& guard,
                                    double f_stuck_x,
                                    const ContactTols& tols) {
  TransitionResult out;
  if (guard.rfind("detach", 0) == 0) {
    out.terminated = true;
    out.termination = Termination::Detachment;
    out.detail = "normal force reached zero (" + guard + ")";
    return out;
  }

  // Probe failures re-enter here with the inconsistency reason; those must
  // move to a different mode or give up, so the outgoing mode is excluded
  // from the fallback scan below.
  const bool from_probe = guard.rfind("probe:", 0) == 0;
  const std::string key = from_probe ? guard.substr(6) : guard;
  std::string base = key;
  if (base.rfind("slipdir", 0) == 0) base = "v" + base.substr(7);

  for (const ContactMode& cand : candidates_for(mode, base, f_stuck_x)) {
    if (!mode_inconsistency(q, qd, qdd_c, p, cand, tols)) {
      out.mode = cand;
      return out;
    }
  }

  // Fallback: deterministic stick-preferring scan. Re-selecting the
  // outgoing mode is legitimate after a grazing guard (the slip velocity
  // touched zero and recovered) but never after a failed probe.
  for (const ContactMode& cand : all_modes()) {
    if (cand == mode) continue;
    if (!mode_inconsistency(q, qd, qdd_c, p, cand, tols)) {
      out.mode = cand;
      return out;
    }
  }
  if (!from_probe &&
      !mode_inconsistency(q, qd, qdd_c, p, mode, tols)) {
    out.mode = mode;
    return out;
  }

  out.terminated = true;
  out.termination = Termination::Painleve;
  out.detail = "no consistent mode after guard " + guard + " in mode " +
               mode.name();
  return out;
}

void project_state(Vec5& q, Vec5& qd, const RobotParams& p,
                   const ContactMode& mode) {
  const double th = ground_theta(q[3], q[4], p, q[2]);
  q[2] = th;
  q[1] = ground_height(th, q[3], p);

  // Active velocity constraints: both rows for stuck feet, the normal row
  // for slipping feet.
  const Mat25 W1 = contact_jac(q, p, 1);
  const Mat25 W2 = contact_jac(q, p, 2);
  const int k = (mode.kind == ModeKind::SlipSlip) ? 2 : 3;
  Eigen::Matrix<double, Eigen::Dynamic, 5, 0, 3, 5> C(k, 5);
  int r = 0;
  if (mode.stuck(1)) {
    C.row(r++) = W1.row(0);
    C.row(r++) = W1.row(1);
  } else {
    C.row(r++) = W1.row(1);
  }
  if (mode.stuck(2)) {
    C.row(r++) = W2.row(0);
    C.row(r++) = W2.row(1);
  } else {
    C.row(r++) = W2.row(1);
  }

  const auto Cb = C.leftCols<3>();
  const Eigen::VectorXd rhs = -C.rightCols<2>() * qd.tail<2>();
  const Eigen::VectorXd defect = rhs - Cb * qd.head<3>();
  const Eigen::MatrixXd gram = Cb * Cb.transpose();
  qd.head<3>() += Cb.transpose() * gram.ldlt().solve(defect);
}

void project_heights_only(Vec5& q, Vec5& qd, const RobotParams& p) {
  const double th = ground_theta(q[3], q[4], p, q[2]);
  q[2] = th;
  q[1] = ground_height(th, q[3], p);
  Eigen::Matrix<double, 2, 5> C;
  C.row(0) = contact_jac(q, p, 1).row(1);
  C.row(1) = contact_jac(q, p, 2).row(1);
  const auto Cb = C.leftCols<3>();
  const Vec2 rhs = -C.rightCols<2>() * qd.tail<2>();
  const Vec2 defect = rhs - Cb * qd.head<3>();
  qd.head<3>() += Cb.transpose() * (Cb * Cb.transpose()).ldlt().solve(defect);
}

}  // namespace detail

namespace {

void unpack(double t, const VecX& y, const InputSpec& in, Vec5& q, Vec5& qd,
            Vec2& qdd_c) {
  const JointCommand jc = eval_input(t, in);
  q << y[0], y[1], y[2], jc.q[0], jc.q[1];
  qd << y[3], y[4], y[5], jc.qd[0], jc.qd[1];
  qdd_c = jc.qdd;
}

// Shared per-time evaluation cache so the guard closures of one segment
// do a single mode solve per scanned point.
struct GuardCtx {
  const RobotParams* p = nullptr;
  const InputSpec* in = nullptr;
  ContactMode mode;
  double t = std::numeric_limits<double>::quiet_NaN();
  Vec5 q, qd;
  Vec2 qdd_c;
  ModeSolution sol;

  void ensure(double tt, const VecX& y) {
    if (tt == t) return;
    t = tt;
    unpack(tt, y, *in, q, qd, qdd_c);
    sol = solve_mode(q, qd, qdd_c, *p, mode);
    if (sol.singular) throw SingularError{tt};
  }
};

struct Recorder {
  const RobotParams* p;
  const InputSpec* in;
  bool world;
  Trajectory* traj;
  double last_t = -std::numeric_limits<double>::infinity();

  void emit(double t, const Vec5& q_in, const Vec5& qd_in,
            const ModeSolution& sol, const Vec2& qdd_c,
            const ContactMode& mode) {
    if (t - last_t < 1e-13) return;
    last_t = t;
    Sample s;
    s.t = t;
    s.q = q_in;
    s.qd = qd_in;
    s.f1 = sol.f1;
    s.f2 = sol.f2;
    s.tau = sol.tau;
    s.qdd_c = qdd_c;
    s.r1 = contact_pos(q_in, *p, 1);
    s.r2 = contact_pos(q_in, *p, 2);
    s.mode_id = mode.id();
    if (world) {
      s.q[0] = -s.q[0];
      s.q[2] = -s.q[2];
      s.qd[0] = -s.qd[0];
      s.qd[2] = -s.qd[2];
      s.f1[0] = -s.f1[0];
      s.f2[0] = -s.f2[0];
      s.r1[0] = -s.r1[0];
      s.r2[0] = -s.r2[0];
      s.mode_id = mode.mirrored().id();
    }
    traj->samples.push_back(s);
  }

  void emit_state(double t, const VecX& y, const ContactMode& mode) {
    Vec5 q, qd;
    Vec2 qdd_c;
    unpack(t, y, *in, q, qd, qdd_c);
    const ModeSolution sol = solve_mode(q, qd, qdd_c, *p, mode);
    emit(t, q, qd, sol, qdd_c, mode);
  }
};

}  // namespace

Trajectory simulate(const RobotParams& p, const InputSpec& in,
                    double duration, const SimOptions& opts) {
  in.validate();
  const double T = in.period();
  const double record_dt = opts.record_dt > 0 ? opts.record_dt : T / 400;
  const double max_step = opts.max_step > 0 ? opts.max_step : T / 50;
  const ContactTols tols = opts.contact_tols();

  Trajectory traj;
  traj.world_frame = opts.record_world;

  auto flip = [&](const ContactMode& m) {
    return opts.record_world ? m.mirrored() : m;
  };

  // Initial condition: grounded posture at x = 0 with the minimum-norm
  // body velocity consistent with both feet staying on the ground.
  JointCommand jc0 = eval_input(0.0, in);
  Vec5 q = grounded_posture(0.0, jc0.q[0], jc0.q[1], p);
  Vec5 qd;
  qd << 0, 0, 0, jc0.qd[0], jc0.qd[1];
  detail::project_heights_only(q, qd, p);

  const InitialMode im = initial_mode(q, qd, jc0.qdd, p, tols);
  traj.initial_mode_ambiguous = im.ambiguous;
  if (im.n_consistent == 0) {
    traj.termination = Termination::Painleve;
    traj.detail = "no consistent initial mode";
    traj.t_end = 0;
    return traj;
  }
  ContactMode mode = im.mode;
  detail::project_state(q, qd, p, mode);

  VecX y(6);
  y << q[0], q[1], q[2], qd[0], qd[1], qd[2];

  StepControl ctrl;
  ctrl.rtol = opts.scaled_rtol();
  ctrl.atol = opts.scaled_atol();
  ctrl.max_step = max_step;

  Dopri5 stepper(
      [&](double t, const VecX& yy, VecX& dy) {
        Vec5 qq, qqd;
        Vec2 qdd_c;
        unpack(t, yy, in, qq, qqd, qdd_c);
        const ModeSolution sol = solve_mode(qq, qqd, qdd_c, p, mode);
        if (sol.singular) throw SingularError{t};
        dy.resize(6);
        dy << qqd[0], qqd[1], qqd[2], sol.qdd_b[0], sol.qdd_b[1],
            sol.qdd_b[2];
      },
      6, ctrl);

  auto ctx = std::make_shared<GuardCtx>();
  ctx->p = &p;
  ctx->in = &in;

  std::vector<GuardSpec> guards;
  std::vector<std::string> guard_names;
  auto build_guards = [&]() {
    guards.clear();
    guard_names.clear();
    ctx->mode = mode;
    ctx->t = std::numeric_limits<double>::quiet_NaN();
    // Priority order: detachment, stick violation, zero slip velocity.
    guards.push_back({[ctx](double t, const VecX& yy) {
                        ctx->ensure(t, yy);
                        return ctx->sol.f1[1];
                      },
                      1e-9, false});
    guard_names.push_back("detach1");
    guards.push_back({[ctx](double t, const VecX& yy) {
                        ctx->ensure(t, yy);
                        return ctx->sol.f2[1];
                      },
                      1e-9, false});
    guard_names.push_back("detach2");
    for (int foot : {1, 2}) {
      if (mode.stuck(foot)) {
        const double mu = p.mu(foot);
        guards.push_back({[ctx, foot, mu](double t, const VecX& yy) {
                            ctx->ensure(t, yy);
                            const Vec2& f =
                                foot == 1 ? ctx->sol.f1 : ctx->sol.f2;
                            return cone_margin(f, mu);
                          },
                          1e-9, false});
        guard_names.push_back(foot == 1 ? "cone1" : "cone2");
      }
    }
    for (int foot : {1, 2}) {
      if (!mode.stuck(foot)) {
        const int sg = mode.sigma(foot);
        guards.push_back({[ctx, foot, sg, &p](double t, const VecX& yy) {
                            ctx->ensure(t, yy);
                            const Mat25 W = contact_jac(ctx->q, p, foot);
                            return sg * (W.row(0) * ctx->qd)(0);
                          },
                          opts.stick_vel_tol, false});
        guard_names.push_back(foot == 1 ? "v1" : "v2");
      }
    }
  };

  Recorder rec{&p, &in, opts.record_world, &traj};

  auto log_span = [&](double t) {
    traj.spans.push_back({t, flip(mode)});
  };
  auto log_event = [&](double t, const std::string& g,
                       const ContactMode& from, const ContactMode& to) {
    traj.events.push_back({t, g, flip(from), flip(to)});
  };

  // Tangential force of the stuck foot, used as the slip-direction hint
  // when that foot has to break loose.
  auto stuck_fx = [&](const ModeSolution& sol) {
    if (mode.stuck(1)) return sol.f1[0];
    if (mode.stuck(2)) return sol.f2[0];
    return 0.0;
  };

  double t = 0;
  bool fresh = true;  // inside the arming window of a new mode
  long n_events = 0;
  double next_rec_k = 0;

  log_span(0.0);
  rec.emit_state(0.0, y, mode);
  stepper.start(0.0, y);
  build_guards();

  auto record_span = [&](const DenseStep& ds, double until) {
    // Emit grid samples with t0 < t <= until inside this dense step.
    while (true) {
      const double tg = (next_rec_k + 1) * record_dt;
      if (tg > until + 1e-13 || tg > ds.t1 + 1e-13) break;
      ++next_rec_k;
      if (tg <= ds.t0 - 1e-13) continue;
      rec.emit_state(tg, ds.eval(std::min(tg, ds.t1)), mode);
    }
  };

  try {
    while (t < duration) {
      const double window_end = fresh
          ? std::min(duration, t + opts.arm_window_frac * T)
          : duration;

      DenseStep ds;
      if (!stepper.step(window_end, ds)) {
        traj.termination = Termination::Singular;
        traj.detail = "step size underflow";
        traj.t_end = stepper.t();
        return traj;
      }

      const auto hit = detect_events(ds, guards, opts.guard_subdiv,
                                     opts.event_tol);
      if (hit) {
        const double te = hit->t;
        record_span(ds, te);
        VecX ye = ds.eval(te);
        Vec5 qe, qde;
        Vec2 qdd_ce;
        unpack(te, ye, in, qe, qde, qdd_ce);
        const ModeSolution sole = solve_mode(qe, qde, qdd_ce, p, mode);
        const std::string& gname = guard_names[hit->guard];

        const auto res = detail::resolve_transition(
            qe, qde, qdd_ce, p, mode, gname, stuck_fx(sole), tols);
        if (res.terminated) {
          rec.emit(te, qe, qde, sole, qdd_ce, mode);
          traj.termination = res.termination;
          traj.detail = res.detail;
          traj.t_end = te;
          return traj;
        }
        if (++n_events > opts.max_events) {
          traj.termination = Termination::Singular;
          traj.detail = "event budget exceeded";
          traj.t_end = te;
          return traj;
        }

        log_event(te, gname, mode, res.mode);
        mode = res.mode;
        detail::project_state(qe, qde, p, mode);
        ye << qe[0], qe[1], qe[2], qde[0], qde[1], qde[2];
        t = te;
        log_span(t);
        rec.emit_state(t, ye, mode);
        stepper.start(t, ye);
        build_guards();
        fresh = true;
        continue;
      }

      record_span(ds, ds.t1);
      t = stepper.t();

      if (fresh && t >= window_end - 1e-15 && window_end < duration) {
        // End of the arming window: probe the mode before trusting it.
        Vec5 qq, qqd;
        Vec2 qdd_c;
        unpack(t, stepper.y(), in, qq, qqd, qdd_c);
        const auto why =
            mode_inconsistency(qq, qqd, qdd_c, p, mode, tols, true);
        if (why) {
          const ModeSolution solp = solve_mode(qq, qqd, qdd_c, p, mode);
          const auto res = detail::resolve_transition(
              qq, qqd, qdd_c, p, mode, "probe:" + *why, stuck_fx(solp),
              tols);
          if (res.terminated) {
            traj.termination = res.termination;
            traj.detail = res.detail;
            traj.t_end = t;
            return traj;
          }
          if (++n_events > opts.max_events) {
            traj.termination = Termination::Singular;
            traj.detail = "event budget exceeded";
            traj.t_end = t;
            return traj;
          }
          log_event(t, "probe:" + *why, mode, res.mode);
          mode = res.mode;
          Vec5 qe = qq;
          Vec5 qde = qqd;
          detail::project_state(qe, qde, p, mode);
          VecX ye(6);
          ye << qe[0], qe[1], qe[2], qde[0], qde[1], qde[2];
          log_span(t);
          rec.emit_state(t, ye, mode);
          stepper.start(t, ye);
          build_guards();
          continue;  // stay fresh: new mode, new window
        }
        fresh = false;
      }
    }
  } catch (const SingularError& e) {
    traj.termination = Termination::Singular;
    traj.detail = "singular mode system";
    traj.t_end = e.t;
    return traj;
  } catch (const std::runtime_error& e) {
    traj.termination = Termination::Singular;
    traj.detail = e.what();
    traj.t_end = stepper.t();
    return traj;
  }

  rec.emit_state(duration, stepper.y(), mode);
  traj.termination = Termination::Normal;
  traj.t_end = duration;
  return traj;
}

}  // namespace crawl
