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
#include "crawl/controller.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "crawl/integrate.hpp"

namespace crawl {

namespace {

void check_spd(const Mat2& K, const char* field) {
  if (std::abs(K(0, 1) - K(1, 0)) > 1e-12 * (1 + K.norm()))
    throw std::invalid_argument(std::string("controller.") + field +
                                ": gain must be symmetric");
  if (K(0, 0) <= 0 || K.determinant() <= 0)
    throw std::invalid_argument(std::string("controller.") + field +
                                ": gain must be positive definite");
}

}  // namespace

void ControllerConfig::validate() const {
  check_spd(Kv, "Kv");
  check_spd(KP, "KP");
  check_spd(KD, "KD");
  if (!(phi_min < phi_max))
    throw std::invalid_argument(
        "controller.phi_limits: need phi_min < phi_max");
  if (min_dwell < 0)
    throw std::invalid_argument("controller.min_dwell: must be >= 0");
}

InverseDynamics inverse_dynamics_matrices(const Vec5& q, const Vec5& qd,
                                          const RobotParams& p,
                                          const ContactMode& mode) {
  InverseDynamics out;
  const Mat25 W1 = contact_jac(q, p, 1);
  const Mat25 W2 = contact_jac(q, p, 2);
  const Mat25 W1d = contact_jac_dot(q, qd, p, 1);
  const Mat25 W2d = contact_jac_dot(q, qd, p, 2);

  auto xacc = [&](const ModeSolution& sol, const Vec2& qdd_c) {
    const Vec5 a = sol.qdd(qdd_c);
    return Vec2{(W1.row(0) * a)(0) + (W1d.row(0) * qd)(0),
                (W2.row(0) * a)(0) + (W2d.row(0) * qd)(0)};
  };

  const ModeSolution s0 = solve_mode(q, qd, Vec2::Zero(), p, mode);
  if (s0.singular) return out;
  out.S0 = xacc(s0, Vec2::Zero());
  for (int j = 0; j < 2; ++j) {
    Vec2 e = Vec2::Zero();
    e[j] = 1;
    const ModeSolution sj = solve_mode(q, qd, e, p, mode);
    if (sj.singular) return out;
    out.S1.col(j) = xacc(sj, e) - out.S0;
  }

  const Eigen::JacobiSVD<Mat2> svd(out.S1);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(1);
  if (smin > 0) out.cond = smax / smin;
  out.ok = true;
  return out;
}

ControlRefs control_refs(double t, const InputSpec& in,
                         const ContactReference& cref) {
  ControlRefs r;
  const JointCommand jc = eval_input(t, in);
  r.qr = jc.q;
  r.qdr = jc.qd;
  r.qddr = jc.qdd;
  r.vxr = cref.v(t);
  r.vdxr = cref.vdot(t);
  return r;
}

ControlDecision control_law(double t, const Vec5& q, const Vec5& qd,
                            const ContactMode& mode,
                            const ControllerConfig& cfg,
                            const ControlRefs& refs, const RobotParams& p,
                            std::optional<ControlBranch> force) {
  (void)t;
  ControlDecision out;
  const bool in_window = q[3] >= cfg.phi_min && q[3] <= cfg.phi_max &&
                         q[4] >= cfg.phi_min && q[4] <= cfg.phi_max;
  const bool want_velocity =
      force ? (*force == ControlBranch::Velocity &&
               mode.kind == ModeKind::SlipSlip)
            : (mode.kind == ModeKind::SlipSlip && in_window);

  if (want_velocity) {
    const InverseDynamics id = inverse_dynamics_matrices(q, qd, p, mode);
    out.s1_cond = id.cond;
    if (id.ok && id.cond < cfg.s1_cond_max) {
      const Vec2 vx{(contact_jac(q, p, 1).row(0) * qd)(0),
                    (contact_jac(q, p, 2).row(0) * qd)(0)};
      out.qdd_c =
          id.S1.inverse() * (refs.vdxr - cfg.Kv * (vx - refs.vxr) - id.S0);
      out.branch = ControlBranch::Velocity;
      return out;
    }
    out.fallback = true;
  }

  out.branch = ControlBranch::Tracking;
  out.qdd_c = refs.qddr - cfg.KD * (qd.tail<2>() - refs.qdr) -
              cfg.KP * (q.tail<2>() - refs.qr);
  return out;
}

namespace {

struct SingularError {
  double t;
};

// Per-time cache of the control decision and mode solve shared by the
// guard closures, exactly like the open-loop guard context but with the
// commanded acceleration coming from the latched control branch.
struct CtlCtx {
  const RobotParams* p = nullptr;
  const InputSpec* in = nullptr;
  const ControllerConfig* cfg = nullptr;
  const ContactReference* cref = nullptr;
  ContactMode mode;
  ControlBranch latched = ControlBranch::Tracking;
  double t = std::numeric_limits<double>::quiet_NaN();
  Vec5 q, qd;
  ControlDecision dec;
  ModeSolution sol;

  void ensure(double tt, const VecX& y) {
    if (tt == t) return;
    t = tt;
    q = y.head<5>();
    qd = y.tail<5>();
    dec = control_law(tt, q, qd, mode, *cfg, control_refs(tt, *in, *cref),
                      *p, latched);
    sol = solve_mode(q, qd, dec.qdd_c, *p, mode);
    if (sol.singular) throw SingularError{tt};
  }
};

}  // namespace

ClosedLoopResult simulate_closed_loop(
    const RobotParams& p, const ControllerConfig& cfg, const InputSpec& in,
    double duration, const SimOptions& opts,
    const std::optional<JointPerturbation>& perturb, int n_ss) {
  in.validate();
  const double T = in.period();
  const double record_dt = opts.record_dt > 0 ? opts.record_dt : T / 400;
  const double max_step = opts.max_step > 0 ? opts.max_step : T / 50;
  const ContactTols tols = opts.contact_tols();
  const ContactReference cref(in, p, cfg.switch_phase);

  ClosedLoopResult out;
  Trajectory& traj = out.traj;
  traj.world_frame = opts.record_world;

  auto flip = [&](const ContactMode& m) {
    return opts.record_world ? m.mirrored() : m;
  };

  const JointCommand jc0 = eval_input(0.0, in);
  Vec2 qc0 = jc0.q, qdc0 = jc0.qd;
  if (perturb) {
    qc0 += perturb->dq;
    qdc0 += perturb->dqd;
  }
  Vec5 q = grounded_posture(0.0, qc0[0], qc0[1], p);
  Vec5 qd;
  qd << 0, 0, 0, qdc0[0], qdc0[1];
  detail::project_heights_only(q, qd, p);

  // The initial mode is selected under the tracking command; the branch
  // decision proper follows once the mode is known.
  const ControlRefs r0 = control_refs(0.0, in, cref);
  const Vec2 qddc0 = r0.qddr - cfg.KD * (qd.tail<2>() - r0.qdr) -
                     cfg.KP * (q.tail<2>() - r0.qr);
  const InitialMode im = initial_mode(q, qd, qddc0, p, tols);
  traj.initial_mode_ambiguous = im.ambiguous;
  if (im.n_consistent == 0) {
    traj.termination = Termination::Painleve;
    traj.detail = "no consistent initial mode";
    out.metrics = step_metrics(traj, in, n_ss);
    return out;
  }
  ContactMode mode = im.mode;
  detail::project_state(q, qd, p, mode);

  ControlBranch latched =
      control_law(0.0, q, qd, mode, cfg, r0, p).branch;
  double t_last_switch = -std::numeric_limits<double>::infinity();
  out.branch_spans.push_back({0.0, latched});

  VecX y(10);
  y << q, qd;

  StepControl ctrl;
  ctrl.rtol = opts.scaled_rtol();
  ctrl.atol = opts.scaled_atol();
  ctrl.max_step = max_step;

  auto ctx = std::make_shared<CtlCtx>();
  ctx->p = &p;
  ctx->in = &in;
  ctx->cfg = &cfg;
  ctx->cref = &cref;

  Dopri5 stepper(
      [&](double tt, const VecX& yy, VecX& dy) {
        const Vec5 qq = yy.head<5>();
        const Vec5 qqd = yy.tail<5>();
        const ControlDecision dec =
            control_law(tt, qq, qqd, mode, cfg,
                        control_refs(tt, in, cref), p, latched);
        const ModeSolution sol = solve_mode(qq, qqd, dec.qdd_c, p, mode);
        if (sol.singular) throw SingularError{tt};
        dy.resize(10);
        dy << qqd, sol.qdd_b, dec.qdd_c;
      },
      10, ctrl);

  std::vector<GuardSpec> guards;
  std::vector<std::string> guard_names;
  auto build_guards = [&]() {
    guards.clear();
    guard_names.clear();
    ctx->mode = mode;
    ctx->latched = latched;
    ctx->t = std::numeric_limits<double>::quiet_NaN();
    guards.push_back({[ctx](double tt, const VecX& yy) {
                        ctx->ensure(tt, yy);
                        return ctx->sol.f1[1];
                      },
                      1e-9, false});
    guard_names.push_back("detach1");
    guards.push_back({[ctx](double tt, const VecX& yy) {
                        ctx->ensure(tt, yy);
                        return ctx->sol.f2[1];
                      },
                      1e-9, false});
    guard_names.push_back("detach2");
    for (int foot : {1, 2}) {
      if (mode.stuck(foot)) {
        const double mu = p.mu(foot);
        guards.push_back({[ctx, foot, mu](double tt, const VecX& yy) {
                            ctx->ensure(tt, yy);
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
        guards.push_back({[ctx, foot, sg, &p](double tt, const VecX& yy) {
                            ctx->ensure(tt, yy);
                            const Mat25 W = contact_jac(ctx->q, p, foot);
                            return sg * (W.row(0) * ctx->qd)(0);
                          },
                          opts.stick_vel_tol, false});
        guard_names.push_back(foot == 1 ? "v1" : "v2");
      }
    }
  };

  double last_rec = -std::numeric_limits<double>::infinity();
  auto emit = [&](double tt, const Vec5& qs, const Vec5& qds,
                  const ModeSolution& sol, const Vec2& qdd_c) {
    if (tt - last_rec < 1e-13) return;
    last_rec = tt;
    Sample s;
    s.t = tt;
    s.q = qs;
    s.qd = qds;
    s.f1 = sol.f1;
    s.f2 = sol.f2;
    s.tau = sol.tau;
    s.qdd_c = qdd_c;
    s.r1 = contact_pos(qs, p, 1);
    s.r2 = contact_pos(qs, p, 2);
    s.mode_id = mode.id();
    if (opts.record_world) {
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
    traj.samples.push_back(s);
  };
  auto emit_state = [&](double tt, const VecX& yy) {
    const Vec5 qs = yy.head<5>();
    const Vec5 qds = yy.tail<5>();
    const ControlDecision dec = control_law(
        tt, qs, qds, mode, cfg, control_refs(tt, in, cref), p, latched);
    emit(tt, qs, qds, solve_mode(qs, qds, dec.qdd_c, p, mode), dec.qdd_c);
  };

  auto log_span = [&](double tt) { traj.spans.push_back({tt, flip(mode)}); };
  auto log_event = [&](double tt, const std::string& g,
                       const ContactMode& from, const ContactMode& to) {
    traj.events.push_back({tt, g, flip(from), flip(to)});
  };
  auto stuck_fx = [&](const ModeSolution& sol) {
    if (mode.stuck(1)) return sol.f1[0];
    if (mode.stuck(2)) return sol.f2[0];
    return 0.0;
  };

  // Branch re-evaluation, one switch at most per evaluation point.
  // Switches are rate-limited by min_dwell; a delayed request is honored
  // at a later evaluation if it still stands. The dwell never holds the
  // velocity branch in a mode that cannot support it.
  auto reeval_branch = [&](double tt, const Vec5& qs, const Vec5& qds) {
    const ControlDecision dec = control_law(
        tt, qs, qds, mode, cfg, control_refs(tt, in, cref), p);
    if (dec.branch == ControlBranch::Velocity)
      out.max_s1_cond = std::max(out.max_s1_cond, dec.s1_cond);
    if (dec.branch == latched) return;
    const bool structural = latched == ControlBranch::Velocity &&
                            mode.kind != ModeKind::SlipSlip;
    if (!structural && tt - t_last_switch < cfg.min_dwell) {
      ++out.n_suppressed;
      return;
    }
    latched = dec.branch;
    t_last_switch = tt;
    ++out.n_switches;
    out.branch_spans.push_back({tt, latched});
  };

  double t = 0;
  bool fresh = true;
  long n_events = 0;
  double next_rec_k = 0;

  log_span(0.0);
  emit_state(0.0, y);
  stepper.start(0.0, y);
  build_guards();

  auto record_span = [&](const DenseStep& ds, double until) {
    while (true) {
      const double tg = (next_rec_k + 1) * record_dt;
      if (tg > until + 1e-13 || tg > ds.t1 + 1e-13) break;
      ++next_rec_k;
      if (tg <= ds.t0 - 1e-13) continue;
      emit_state(tg, ds.eval(std::min(tg, ds.t1)));
    }
  };

  // Restart integration at (tt, qe, qde) after a mode change.
  auto restart = [&](double tt, Vec5 qe, Vec5 qde) {
    detail::project_state(qe, qde, p, mode);
    reeval_branch(tt, qe, qde);
    VecX ye(10);
    ye << qe, qde;
    log_span(tt);
    emit_state(tt, ye);
    stepper.start(tt, ye);
    build_guards();
    fresh = true;
  };

  auto finish = [&](Termination term, const std::string& why, double tt) {
    traj.termination = term;
    traj.detail = why;
    traj.t_end = tt;
    out.metrics = step_metrics(traj, in, n_ss);
  };

  try {
    while (t < duration) {
      const double window_end = fresh
          ? std::min(duration, t + opts.arm_window_frac * T)
          : duration;

      DenseStep ds;
      if (!stepper.step(window_end, ds)) {
        finish(Termination::Singular, "step size underflow", stepper.t());
        return out;
      }

      const auto hit = detect_events(ds, guards, opts.guard_subdiv,
                                     opts.event_tol);
      if (hit) {
        const double te = hit->t;
        record_span(ds, te);
        const VecX ye = ds.eval(te);
        Vec5 qe = ye.head<5>();
        Vec5 qde = ye.tail<5>();
        // Transitions are resolved under the pre-event latched command.
        const ControlDecision dece = control_law(
            te, qe, qde, mode, cfg, control_refs(te, in, cref), p, latched);
        const ModeSolution sole = solve_mode(qe, qde, dece.qdd_c, p, mode);
        const std::string& gname = guard_names[hit->guard];

        const auto res = detail::resolve_transition(
            qe, qde, dece.qdd_c, p, mode, gname, stuck_fx(sole), tols);
        if (res.terminated) {
          emit(te, qe, qde, sole, dece.qdd_c);
          finish(res.termination, res.detail, te);
          return out;
        }
        if (++n_events > opts.max_events) {
          finish(Termination::Singular, "event budget exceeded", te);
          return out;
        }

        log_event(te, gname, mode, res.mode);
        mode = res.mode;
        t = te;
        restart(t, qe, qde);
        continue;
      }

      record_span(ds, ds.t1);
      t = stepper.t();
      {
        const Vec5 qs = stepper.y().head<5>();
        const Vec5 qds = stepper.y().tail<5>();
        reeval_branch(t, qs, qds);
        ctx->latched = latched;
      }

      if (fresh && t >= window_end - 1e-15 && window_end < duration) {
        const Vec5 qs = stepper.y().head<5>();
        const Vec5 qds = stepper.y().tail<5>();
        const ControlDecision dec = control_law(
            t, qs, qds, mode, cfg, control_refs(t, in, cref), p, latched);
        const auto why =
            mode_inconsistency(qs, qds, dec.qdd_c, p, mode, tols, true);
        if (why) {
          const ModeSolution solp = solve_mode(qs, qds, dec.qdd_c, p, mode);
          const auto res = detail::resolve_transition(
              qs, qds, dec.qdd_c, p, mode, "probe:" + *why, stuck_fx(solp),
              tols);
          if (res.terminated) {
            finish(res.termination, res.detail, t);
            return out;
          }
          if (++n_events > opts.max_events) {
            finish(Termination::Singular, "event budget exceeded", t);
            return out;
          }
          log_event(t, "probe:" + *why, mode, res.mode);
          mode = res.mode;
          restart(t, qs, qds);
          continue;
        }
        fresh = false;
      }
    }
  } catch (const SingularError& e) {
    finish(Termination::Singular, "singular mode system", e.t);
    return out;
  } catch (const std::runtime_error& e) {
    finish(Termination::Singular, e.what(), stepper.t());
    return out;
  }

  emit_state(duration, stepper.y());
  finish(Termination::Normal, "", duration);
  return out;
}

}  // namespace crawl
