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
#include "crawl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "crawl/parallel.hpp"

namespace crawl {

namespace {

// Index of the first sample with sample.t >= t.
size_t lower_sample(const Trajectory& traj, double t) {
  return std::lower_bound(traj.samples.begin(), traj.samples.end(), t,
                          [](const Sample& s, double tt) {
                            return s.t < tt;
                          }) -
         traj.samples.begin();
}

}  // namespace

double foot_x(const Trajectory& traj, double t, int foot) {
  const auto& ss = traj.samples;
  if (ss.empty()) throw std::runtime_error("foot_x: empty trajectory");
  if (t <= ss.front().t) return foot == 1 ? ss.front().r1[0] : ss.front().r2[0];
  if (t >= ss.back().t) return foot == 1 ? ss.back().r1[0] : ss.back().r2[0];
  const size_t hi = lower_sample(traj, t);
  const Sample& b = ss[hi];
  const Sample& a = ss[hi - 1];
  const double w = (b.t > a.t) ? (t - a.t) / (b.t - a.t) : 0.0;
  const double xa = foot == 1 ? a.r1[0] : a.r2[0];
  const double xb = foot == 1 ? b.r1[0] : b.r2[0];
  return xa + w * (xb - xa);
}

StepMetrics step_metrics(const Trajectory& traj, const InputSpec& in,
                         int n_ss, double steady_rel_tol) {
  StepMetrics m;
  m.termination = traj.termination;
  const double T = in.period();
  const int n_cycles = static_cast<int>(std::floor(traj.t_end / T + 1e-9));
  if (n_cycles < 1 || traj.samples.empty()) return m;

  std::vector<double> x1(n_cycles + 1);
  for (int j = 0; j <= n_cycles; ++j) x1[j] = foot_x(traj, j * T, 1);
  m.per_cycle.resize(n_cycles);
  for (int j = 0; j < n_cycles; ++j) m.per_cycle[j] = x1[j + 1] - x1[j];

  const int avail = n_cycles - n_ss;  // post-transient cycles
  constexpr double kAbsFloor = 1e-9;  // [m] below this, spread is noise

  for (int k = 1; k <= 2; ++k) {
    if (avail < 2 * k) break;
    double b1 = 0, b2 = 0;
    for (int j = 0; j < k; ++j) {
      b1 += m.per_cycle[n_cycles - 2 * k + j];
      b2 += m.per_cycle[n_cycles - k + j];
    }
    const double scale =
        std::max({std::abs(b1), std::abs(b2), kAbsFloor});
    const double spread = std::abs(b1 - b2) / scale;
    if (m.k == 0 || spread < m.spread) {
      m.spread = spread;
      m.S = (b1 + b2) / (2 * k);
      m.k = k;
    }
    if (spread <= steady_rel_tol) {
      m.steady = traj.termination == Termination::Normal;
      m.S = (b1 + b2) / (2 * k);
      m.k = k;
      m.spread = spread;
      break;
    }
  }
  if (m.k == 0 && n_cycles >= 2) {
    // Not enough post-transient cycles for the block test; report the
    // mean of the last two cycles without claiming steadiness.
    m.S = 0.5 * (m.per_cycle[n_cycles - 1] + m.per_cycle[n_cycles - 2]);
  } else if (m.k == 0 && n_cycles == 1) {
    m.S = m.per_cycle[0];
  }
  m.V = m.S / T;
  return m;
}

SlipFractions slip_fractions(const Trajectory& traj, double t0, double t1) {
  SlipFractions out;
  if (traj.spans.empty() || !(t1 > t0)) return out;

  double time_back[2] = {0, 0};
  double dist_back[2] = {0, 0};
  double dist_all[2] = {0, 0};

  for (size_t i = 0; i < traj.spans.size(); ++i) {
    const double a = std::max(traj.spans[i].t_begin, t0);
    const double b = std::min(traj.span_end(i), t1);
    if (!(b > a)) continue;
    const ContactMode& mode = traj.spans[i].mode;
    if (mode.sigma1 == +1 && mode.sigma2 == +1) out.both_forward = true;
    for (int foot : {1, 2}) {
      const int sg = mode.sigma(foot);
      if (sg == 0) continue;
      const double dx = foot_x(traj, b, foot) - foot_x(traj, a, foot);
      dist_all[foot - 1] += std::abs(dx);
      if (sg < 0) {
        time_back[foot - 1] += b - a;
        dist_back[foot - 1] += std::abs(dx);
      }
    }
  }
  for (int i = 0; i < 2; ++i) {
    out.time_frac[i] = time_back[i] / (t1 - t0);
    out.dist_frac[i] = dist_all[i] > 0 ? dist_back[i] / dist_all[i] : 0.0;
  }
  return out;
}

RobustnessResult uncertain_friction_distance(const RobotParams& p,
                                             double eps, int grid_n,
                                             const GaitEval& eval,
                                             int jobs) {
  if (eps < 0) throw std::invalid_argument("robustness.eps: must be >= 0");
  if (grid_n < 1)
    throw std::invalid_argument("robustness.grid_n: must be >= 1");

  RobustnessResult out;
  out.cells.resize(grid_n);
  const double mu_bar = std::sqrt(p.mu1 * p.mu2);
  const double log_top = std::log1p(eps);

  for (int i = 0; i < grid_n; ++i) {
    // Exponents form a symmetric grid on [-1, 1], so the ratio grid is
    // closed under r -> 1/r and odd sizes nest under refinement.
    const double e = grid_n == 1 ? 0.0 : 2.0 * i / (grid_n - 1) - 1.0;
    out.cells[i].ratio = std::exp(e * log_top);
    out.cells[i].mu1 = mu_bar * std::sqrt(out.cells[i].ratio);
    out.cells[i].mu2 = mu_bar / std::sqrt(out.cells[i].ratio);
  }

  const int nthreads = resolve_jobs(jobs);
#pragma omp parallel for schedule(dynamic) num_threads(nthreads) if (nthreads > 1)
  for (int i = 0; i < grid_n; ++i) {
    RobustnessCell& c = out.cells[i];
    RobotParams pp = p;
    pp.mu1 = c.mu1;
    pp.mu2 = c.mu2;
    try {
      c.S = eval(pp);
      c.ok = std::isfinite(c.S);
      if (!c.ok) c.status = "non-finite advancement";
    } catch (const std::exception& e) {
      c.ok = false;
      c.status = e.what();
    }
  }

  bool first = true;
  for (const RobustnessCell& c : out.cells) {
    if (!c.ok) continue;
    if (first) {
      out.S_min = out.S_max = c.S;
      first = false;
    } else {
      out.S_min = std::min(out.S_min, c.S);
      out.S_max = std::max(out.S_max, c.S);
    }
  }
  out.ok = !first;
  out.S_mu = out.ok ? 0.5 * (out.S_min + out.S_max) : 0.0;
  return out;
}

GaitEval make_distance_eval(const InputSpec& in, double cycles,
                            const SimOptions& opts, int n_ss) {
  return [in, cycles, opts, n_ss](const RobotParams& p) {
    const Trajectory traj = simulate(p, in, cycles * in.period(), opts);
    const StepMetrics m = step_metrics(traj, in, n_ss);
    if (traj.termination != Termination::Normal)
      throw std::runtime_error(std::string("simulation terminated: ") +
                               to_string(traj.termination) + " (" +
                               traj.detail + ")");
    return m.S;
  };
}

}  // namespace crawl
