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

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace crawl {

using VecX = Eigen::VectorXd;
using Rhs = std::function<void(double t, const VecX& y, VecX& dy)>;

// One accepted integrator step with cubic Hermite dense output built from
// the endpoint values and slopes.
struct DenseStep {
  double t0 = 0, t1 = 0;
  VecX y0, y1, f0, f1;

  double h() const { return t1 - t0; }
  void eval(double t, VecX& out) const;
  VecX eval(double t) const {
    VecX out;
    eval(t, out);
    return out;
  }
};

struct StepControl {
  double rtol = 1e-8;
  double atol = 1e-10;
  double max_step = 0;   // 0: no cap
  double first_step = 0;  // 0: automatic
  double safety = 0.9;
  double min_factor = 0.2;
  double max_factor = 10.0;
};

// Explicit Dormand-Prince 5(4) pair with PI step-size control and
// first-same-as-last reuse. The hybrid simulation loop drives individual
// steps so it can scan each accepted step for guard crossings.
class Dopri5 {
 public:
  Dopri5(Rhs rhs, int dim, StepControl ctrl);

  // (Re)initialize at (t0, y0); evaluates the slope there.
  void start(double t0, const VecX& y0);

  // Advance one accepted step without passing t_limit. Returns false when
  // the step size underflows (below ~1e2 ulp of t). Retries rejected
  // steps internally.
  bool step(double t_limit, DenseStep& out);

  double t() const { return t_; }
  const VecX& y() const { return y_; }
  long n_rhs() const { return n_rhs_; }

 private:
  double initial_step(double t_limit);

  Rhs rhs_;
  int dim_;
  StepControl ctrl_;
  double t_ = 0;
  VecX y_, f_;       // current state and slope (FSAL)
  double h_ = 0;     // current step-size proposal
  double err_prev_ = 1e-4;
  long n_rhs_ = 0;
  VecX k_[7], ytmp_, yerr_;
};

// A scalar guard evaluated along dense output.
using GuardFn = std::function<double(double t, const VecX& y)>;

// Guard with arming state. A guard starts inert when armed = false and
// arms only once its value exceeds arm_tol; crossings of an unarmed guard
// are ignored. This suppresses chattering on grazing contact: a guard that
// never leaves [0, arm_tol] after a mode change cannot re-fire the event
// that created it. Defaults give a plain always-active guard.
struct GuardSpec {
  GuardFn g;
  double arm_tol = 0;
  bool armed = true;
};

// Locate the earliest zero crossing of g on [ta, tb] within a dense step,
// assuming g(ta) > 0 >= g(tb). Bisects until the bracket is narrower than
// tol and returns its midpoint.
double refine_crossing(const DenseStep& step, const GuardFn& g, double ta,
                       double tb, double tol);

struct EventHit {
  int guard = -1;
  double t = 0;
};

// Scan a dense step for downward zero crossings of the given guards,
// sampling at n_sub + 1 evenly spaced points, and refine the earliest
// crossing to within tol. Guard arming state is updated in place, so a
// persistent vector carries it across steps. Crossings that coincide
// within tol resolve in favor of the lowest guard index; callers order
// guards by priority. An armed guard already nonpositive at the left
// endpoint reports a hit at t0.
std::optional<EventHit> detect_events(const DenseStep& step,
                                      std::vector<GuardSpec>& guards,
                                      int n_sub, double tol);

}  // namespace crawl
