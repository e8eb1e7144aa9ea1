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
#include "crawl/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace crawl {
namespace {

// Dormand-Prince 5(4) coefficients.
constexpr double kC[7] = {0, 1. / 5, 3. / 10, 4. / 5, 8. / 9, 1, 1};
constexpr double kA[7][6] = {
    {},
    {1. / 5},
    {3. / 40, 9. / 40},
    {44. / 45, -56. / 15, 32. / 9},
    {19372. / 6561, -25360. / 2187, 64448. / 6561, -212. / 729},
    {9017. / 3168, -355. / 33, 46732. / 5247, 49. / 176, -5103. / 18656},
    {35. / 384, 0, 500. / 1113, 125. / 192, -2187. / 6784, 11. / 84}};
// Difference between the 5th and embedded 4th order weights.
constexpr double kE[7] = {71. / 57600,       0, -71. / 16695, 71. / 1920,
                          -17253. / 339200, 22. / 525, -1. / 40};

// PI controller exponents (classic dopri5 values).
constexpr double kBeta = 0.04;
constexpr double kAlpha = 0.2 - 0.75 * kBeta;

}  // namespace

void DenseStep::eval(double t, VecX& out) const {
  const double dt = t1 - t0;
  const double s = (t - t0) / dt;
  // Cubic Hermite basis on the endpoint values and slopes.
  const double s2 = s * s, s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1;
  const double h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2;
  const double h11 = s3 - s2;
  out = h00 * y0 + (h10 * dt) * f0 + h01 * y1 + (h11 * dt) * f1;
}

Dopri5::Dopri5(Rhs rhs, int dim, StepControl ctrl)
    : rhs_(std::move(rhs)), dim_(dim), ctrl_(ctrl) {
  y_.resize(dim);
  f_.resize(dim);
  ytmp_.resize(dim);
  yerr_.resize(dim);
  for (auto& k : k_) k.resize(dim);
}

void Dopri5::start(double t0, const VecX& y0) {
  t_ = t0;
  y_ = y0;
  rhs_(t_, y_, f_);
  ++n_rhs_;
  h_ = ctrl_.first_step;
  err_prev_ = 1e-4;
}

double Dopri5::initial_step(double t_limit) {
  // Standard two-stage estimate from the local derivative magnitudes.
  double d0 = 0, d1 = 0;
  for (int i = 0; i < dim_; ++i) {
    const double sc = ctrl_.atol + ctrl_.rtol * std::abs(y_[i]);
    d0 = std::max(d0, std::abs(y_[i]) / sc);
    d1 = std::max(d1, std::abs(f_[i]) / sc);
  }
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  h0 = std::min(h0, std::abs(t_limit - t_));

  VecX y1 = y_ + h0 * f_;
  VecX f1(dim_);
  rhs_(t_ + h0, y1, f1);
  ++n_rhs_;
  double d2 = 0;
  for (int i = 0; i < dim_; ++i) {
    const double sc = ctrl_.atol + ctrl_.rtol * std::abs(y_[i]);
    d2 = std::max(d2, std::abs(f1[i] - f_[i]) / sc);
  }
  d2 /= h0;
  double h1;
  if (std::max(d1, d2) <= 1e-15)
    h1 = std::max(1e-6, h0 * 1e-3);
  else
    h1 = std::pow(0.01 / std::max(d1, d2), 0.2);
  return std::min({100 * h0, h1, std::abs(t_limit - t_)});
}

bool Dopri5::step(double t_limit, DenseStep& out) {
  if (h_ <= 0) h_ = initial_step(t_limit);
  if (ctrl_.max_step > 0) h_ = std::min(h_, ctrl_.max_step);

  const double h_floor =
      100 * std::numeric_limits<double>::epsilon() *
      std::max(1.0, std::abs(t_));

  for (int attempt = 0; attempt < 200; ++attempt) {
    double h = std::min(h_, t_limit - t_);
    if (ctrl_.max_step > 0) h = std::min(h, ctrl_.max_step);
    if (h < h_floor) return false;
    const bool clipped = h < h_;

    k_[0] = f_;
    for (int s = 1; s < 7; ++s) {
      ytmp_ = y_;
      for (int j = 0; j < s; ++j)
        if (kA[s][j] != 0) ytmp_ += (h * kA[s][j]) * k_[j];
      rhs_(t_ + kC[s] * h, ytmp_, k_[s]);
      ++n_rhs_;
    }
    // Stage 7 is the solution: FSAL means ytmp_ already holds y1 and
    // k_[6] its slope.
    const VecX& y1 = ytmp_;

    yerr_.setZero();
    for (int s = 0; s < 7; ++s)
      if (kE[s] != 0) yerr_ += (h * kE[s]) * k_[s];

    double err = 0;
    for (int i = 0; i < dim_; ++i) {
      const double sc =
          ctrl_.atol +
          ctrl_.rtol * std::max(std::abs(y_[i]), std::abs(y1[i]));
      const double r = yerr_[i] / sc;
      err += r * r;
    }
    err = std::sqrt(err / dim_);

    if (err <= 1.0 || !std::isfinite(err)) {
      if (!std::isfinite(err)) {
        // Blow-up inside the stages: shrink hard and retry.
        h_ = 0.25 * h;
        continue;
      }
      out.t0 = t_;
      out.t1 = t_ + h;
      out.y0 = y_;
      out.f0 = f_;
      out.y1 = y1;
      out.f1 = k_[6];

      t_ += h;
      y_ = y1;
      f_ = k_[6];

      const double e = std::max(err, 1e-10);
      double fac = ctrl_.safety * std::pow(e, -kAlpha) *
                   std::pow(err_prev_, kBeta);
      fac = std::clamp(fac, ctrl_.min_factor, ctrl_.max_factor);
      err_prev_ = e;
      if (!clipped) h_ = h * fac;
      return true;
    }

    double fac = ctrl_.safety * std::pow(err, -0.2);
    h_ = h * std::clamp(fac, ctrl_.min_factor, 1.0);
  }
  return false;
}

double refine_crossing(const DenseStep& step, const GuardFn& g, double ta,
                       double tb, double tol) {
  VecX y;
  double ga = [&] {
    step.eval(ta, y);
    return g(ta, y);
  }();
  for (int it = 0; it < 128 && tb - ta > tol; ++it) {
    const double tm = 0.5 * (ta + tb);
    step.eval(tm, y);
    const double gm = g(tm, y);
    if (ga > 0 && gm > 0) {
      ta = tm;
      ga = gm;
    } else {
      tb = tm;
    }
  }
  return 0.5 * (ta + tb);
}

std::optional<EventHit> detect_events(const DenseStep& step,
                                      std::vector<GuardSpec>& guards,
                                      int n_sub, double tol) {
  const int ng = static_cast<int>(guards.size());
  if (ng == 0) return std::nullopt;

  VecX y;
  std::vector<double> prev(ng);
  std::vector<EventHit> hits;

  // Earliest hit wins; near-ties within tol resolve by guard order.
  auto resolve = [&]() -> std::optional<EventHit> {
    if (hits.empty()) return std::nullopt;
    double tmin = hits[0].t;
    for (const EventHit& h : hits) tmin = std::min(tmin, h.t);
    EventHit best{ng, 0};
    for (const EventHit& h : hits)
      if (h.t <= tmin + tol && h.guard < best.guard) best = h;
    return best;
  };

  step.eval(step.t0, y);
  for (int gi = 0; gi < ng; ++gi) {
    GuardSpec& gs = guards[gi];
    prev[gi] = gs.g(step.t0, y);
    if (!gs.armed && prev[gi] > gs.arm_tol) gs.armed = true;
    if (gs.armed && prev[gi] <= 0) hits.push_back({gi, step.t0});
  }
  if (auto h = resolve()) return h;

  for (int j = 1; j <= n_sub; ++j) {
    const double tj = step.t0 + step.h() * j / n_sub;
    step.eval(tj, y);
    for (int gi = 0; gi < ng; ++gi) {
      GuardSpec& gs = guards[gi];
      const double gj = gs.g(tj, y);
      const bool was_armed = gs.armed;
      if (!gs.armed && gj > gs.arm_tol) gs.armed = true;
      if (was_armed && prev[gi] > 0 && gj <= 0) {
        const double tprev = step.t0 + step.h() * (j - 1) / n_sub;
        hits.push_back({gi, refine_crossing(step, gs.g, tprev, tj, tol)});
      }
      prev[gi] = gj;
    }
    // A later subinterval cannot contain an earlier crossing.
    if (auto h = resolve()) return h;
  }
  return std::nullopt;
}

}  // namespace crawl
