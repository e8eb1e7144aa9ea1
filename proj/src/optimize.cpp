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
#include "crawl/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "crawl/parallel.hpp"
#include "crawl/rng.hpp"

namespace crawl {

namespace {
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
}

Objective objective_from_string(const std::string& s) {
  if (s == "S" || s == "distance") return Objective::S;
  if (s == "V" || s == "speed") return Objective::V;
  if (s == "S_mu" || s == "Smu" || s == "robust") return Objective::Smu;
  throw std::invalid_argument("objective: unknown value '" + s + "'");
}

const char* to_string(Objective o) {
  switch (o) {
    case Objective::S: return "S";
    case Objective::V: return "V";
    case Objective::Smu: return "S_mu";
  }
  return "?";
}

void apply_axis(RobotParams& p, InputSpec& in, const std::string& name,
                double value) {
  if (name == "omega") {
    in.omega = value;
  } else if (name == "psi") {
    in.psi = value;
  } else if (name == "phi0") {
    in.phi0 = value;
  } else if (name == "A") {
    in.A = value;
  } else if (name == "alpha") {
    in.alpha = value;
  } else if (name == "upsilon") {
    in.upsilon = value;
  } else if (name == "mu") {
    p.mu1 = p.mu2 = value;
  } else if (name == "m1_over_m2") {
    const double sum = p.m1 + p.m2;
    p = p.with_leg_masses(sum * value / (1 + value), sum / (1 + value));
  } else if (name == "leg_mass_fraction") {
    // value = (m1 + m2) / (2 m0); keeps the current m1/m2 split.
    const double sum = 2 * value * p.m0;
    const double r = p.m1 / p.m2;
    p = p.with_leg_masses(sum * r / (1 + r), sum / (1 + r));
  } else {
    throw std::invalid_argument("sweep.axes: unknown axis '" + name + "'");
  }
}

namespace {

SweepRow eval_cell(const RobotParams& base_p, const InputSpec& base_in,
                   const std::vector<Axis>& axes,
                   const std::vector<double>& coords, Objective obj,
                   const SweepSettings& s) {
  SweepRow row;
  row.coords = coords;
  try {
    RobotParams p = base_p;
    InputSpec in = base_in;
    for (size_t a = 0; a < axes.size(); ++a)
      apply_axis(p, in, axes[a].name, coords[a]);
    in.validate();

    if (obj == Objective::Smu) {
      const GaitEval eval = make_distance_eval(in, s.cycles, s.sim, s.n_ss);
      const RobustnessResult r = uncertain_friction_distance(
          p, s.robust_eps, s.robust_grid, eval, 1);
      if (!r.ok) throw std::runtime_error("all robustness cells failed");
      row.S = r.S_mu;
      row.V = r.S_mu / in.period();
      row.steady = true;
      for (const RobustnessCell& c : r.cells)
        if (!c.ok) row.steady = false;
      row.objective = r.S_mu;
    } else {
      const Trajectory traj = simulate(p, in, s.cycles * in.period(), s.sim);
      const StepMetrics m = step_metrics(traj, in, s.n_ss);
      if (traj.termination != Termination::Normal)
        throw std::runtime_error(std::string("terminated: ") +
                                 to_string(traj.termination) + " (" +
                                 traj.detail + ")");
      row.S = m.S;
      row.V = m.V;
      row.steady = m.steady;
      row.objective = obj == Objective::S ? m.S : m.V;
    }
    row.ok = true;
  } catch (const std::exception& e) {
    row.ok = false;
    row.status = e.what();
    row.objective = kNan;
    row.S = kNan;
    row.V = kNan;
  }
  return row;
}

}  // namespace

SweepResult sweep(const RobotParams& base_p, const InputSpec& base_in,
                  const std::vector<Axis>& axes, Objective obj,
                  const SweepSettings& s) {
  SweepResult out;
  out.axes = axes;
  out.objective = obj;

  long total = 1;
  for (const Axis& a : axes) {
    if (a.values.empty())
      throw std::invalid_argument("sweep.axes." + a.name + ": empty grid");
    total *= static_cast<long>(a.values.size());
  }
  out.rows.resize(total);

  auto coords_of = [&](long idx) {
    std::vector<double> c(axes.size());
    for (int a = static_cast<int>(axes.size()) - 1; a >= 0; --a) {
      const long n = static_cast<long>(axes[a].values.size());
      c[a] = axes[a].values[idx % n];
      idx /= n;
    }
    return c;
  };

  if (s.parallel) {
    const int nthreads = resolve_jobs(s.jobs);
#pragma omp parallel for schedule(dynamic) num_threads(nthreads) \
    if (nthreads > 1)
    for (long i = 0; i < total; ++i)
      out.rows[i] = eval_cell(base_p, base_in, axes, coords_of(i), obj, s);
  } else {
    for (long i = 0; i < total; ++i)
      out.rows[i] = eval_cell(base_p, base_in, axes, coords_of(i), obj, s);
  }
  return out;
}

PhaseCurve optimal_phase_curve(const RobotParams& p, const InputSpec& base,
                               const std::vector<double>& omega_grid,
                               const std::vector<double>& psi_grid,
                               Objective obj, int ma_window,
                               const SweepSettings& s) {
  if (psi_grid.size() < 2)
    throw std::invalid_argument("phase_curve: psi grid needs >= 2 points");

  const SweepResult sr = sweep(
      p, base, {{"omega", omega_grid}, {"psi", psi_grid}}, obj, s);

  PhaseCurve out;
  out.omega = omega_grid;
  const size_t npsi = psi_grid.size();
  out.psi_raw.assign(omega_grid.size(), kNan);
  out.value.assign(omega_grid.size(), kNan);

  for (size_t i = 0; i < omega_grid.size(); ++i) {
    int best = -1;
    for (size_t j = 0; j < npsi; ++j) {
      const SweepRow& row = sr.rows[i * npsi + j];
      if (!row.ok || !std::isfinite(row.objective)) continue;
      if (best < 0 || row.objective > sr.rows[i * npsi + best].objective)
        best = static_cast<int>(j);
    }
    if (best < 0) continue;
    // A flat row (the gait does not advance at any psi) has no meaningful
    // argmax; the phase stays undefined at this frequency.
    double amax = 0;
    for (size_t j = 0; j < npsi; ++j) {
      const SweepRow& row = sr.rows[i * npsi + j];
      if (row.ok && std::isfinite(row.objective))
        amax = std::max(amax, std::abs(row.objective));
    }
    if (amax < 1e-9) continue;
    out.value[i] = sr.rows[i * npsi + best].objective;

    double psi_star = psi_grid[best];
    if (best > 0 && best + 1 < static_cast<int>(npsi) &&
        sr.rows[i * npsi + best - 1].ok &&
        sr.rows[i * npsi + best + 1].ok) {
      // Parabolic vertex through the winning point and its neighbors,
      // supporting nonuniform grids; clamped to the bracketing interval.
      const double x0 = psi_grid[best - 1], x1 = psi_grid[best],
                   x2 = psi_grid[best + 1];
      const double y0 = sr.rows[i * npsi + best - 1].objective,
                   y1 = sr.rows[i * npsi + best].objective,
                   y2 = sr.rows[i * npsi + best + 1].objective;
      const double num = (x1 - x0) * (x1 - x0) * (y1 - y2) -
                         (x1 - x2) * (x1 - x2) * (y1 - y0);
      const double den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
      if (std::abs(den) > 1e-300) {
        psi_star = x1 - 0.5 * num / den;
        psi_star = std::clamp(psi_star, x0, x2);
      }
    }
    out.psi_raw[i] = psi_star;
  }

  // Centered moving average with symmetric shrink near the ends.
  const int n = static_cast<int>(out.psi_raw.size());
  out.psi.assign(n, kNan);
  const int half = std::max(0, ma_window / 2);
  for (int i = 0; i < n; ++i) {
    if (!std::isfinite(out.psi_raw[i])) continue;
    const int h = std::min({half, i, n - 1 - i});
    double acc = 0;
    int cnt = 0;
    for (int j = i - h; j <= i + h; ++j) {
      if (!std::isfinite(out.psi_raw[j])) continue;
      acc += out.psi_raw[j];
      ++cnt;
    }
    out.psi[i] = cnt ? acc / cnt : out.psi_raw[i];
  }
  return out;
}

// ----------------------------------------------------------------------
// Gaussian process

namespace {

double sqdist(const auto& a, const auto& b, const Eigen::VectorXd& inv_ls2) {
  double d = 0;
  for (int k = 0; k < inv_ls2.size(); ++k) {
    const double r = a[k] - b[k];
    d += r * r * inv_ls2[k];
  }
  return d;
}

// Nelder-Mead maximization of fn, deterministic. Returns best point.
Eigen::VectorXd nelder_mead(
    const std::function<double(const Eigen::VectorXd&)>& fn,
    const Eigen::VectorXd& x0, double step, int max_iter) {
  const int d = static_cast<int>(x0.size());
  struct Vertex {
    Eigen::VectorXd x;
    double f;
  };
  std::vector<Vertex> simplex(d + 1);
  simplex[0] = {x0, fn(x0)};
  for (int i = 0; i < d; ++i) {
    Eigen::VectorXd x = x0;
    x[i] += step;
    simplex[i + 1] = {x, fn(x)};
  }
  auto by_f = [](const Vertex& a, const Vertex& b) { return a.f > b.f; };

  for (int it = 0; it < max_iter; ++it) {
    std::sort(simplex.begin(), simplex.end(), by_f);
    if (std::abs(simplex[0].f - simplex[d].f) < 1e-9 * (1 + std::abs(simplex[0].f)))
      break;
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < d; ++i) centroid += simplex[i].x;
    centroid /= d;

    const Eigen::VectorXd xr = centroid + (centroid - simplex[d].x);
    const double fr = fn(xr);
    if (fr > simplex[0].f) {
      const Eigen::VectorXd xe = centroid + 2 * (centroid - simplex[d].x);
      const double fe = fn(xe);
      simplex[d] = fe > fr ? Vertex{xe, fe} : Vertex{xr, fr};
    } else if (fr > simplex[d - 1].f) {
      simplex[d] = {xr, fr};
    } else {
      const Eigen::VectorXd xc =
          centroid + 0.5 * (simplex[d].x - centroid);
      const double fc = fn(xc);
      if (fc > simplex[d].f) {
        simplex[d] = {xc, fc};
      } else {
        for (int i = 1; i <= d; ++i) {
          simplex[i].x = simplex[0].x + 0.5 * (simplex[i].x - simplex[0].x);
          simplex[i].f = fn(simplex[i].x);
        }
      }
    }
  }
  std::sort(simplex.begin(), simplex.end(), by_f);
  return simplex[0].x;
}

}  // namespace

void GpModel::factorize(const Eigen::VectorXd& h) {
  const int n = static_cast<int>(X_.rows());
  const int d = static_cast<int>(X_.cols());
  Eigen::VectorXd inv_ls2(d);
  for (int k = 0; k < d; ++k) inv_ls2[k] = std::exp(-2 * h[k]);
  const double sf2 = std::exp(2 * h[d]);
  const double sn2 = std::exp(2 * h[d + 1]) + 1e-12;

  Eigen::MatrixXd K(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double k =
          sf2 * std::exp(-0.5 * sqdist(X_.row(i), X_.row(j), inv_ls2));
      K(i, j) = k;
      K(j, i) = k;
    }
    K(i, i) += sn2;
  }

  double jitter = 0;
  for (int attempt = 0; attempt < 6; ++attempt) {
    Eigen::LLT<Eigen::MatrixXd> llt(
        jitter > 0 ? Eigen::MatrixXd(K + jitter *
                                             Eigen::MatrixXd::Identity(n, n))
                   : K);
    if (llt.info() == Eigen::Success) {
      L_ = llt.matrixL();
      alpha_ = llt.solve(y_);
      hyper_ = h;
      double logdet = 0;
      for (int i = 0; i < n; ++i) logdet += std::log(L_(i, i));
      lml_ = -0.5 * y_.dot(alpha_) - logdet - 0.5 * n * std::log(2 * kPi);
      return;
    }
    jitter = jitter == 0 ? 1e-10 * sf2 : jitter * 100;
  }
  throw std::runtime_error("gp: covariance not positive definite");
}

double GpModel::lml_at(const Eigen::VectorXd& h) {
  try {
    factorize(h);
    return lml_;
  } catch (const std::exception&) {
    return -std::numeric_limits<double>::infinity();
  }
}

void GpModel::fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                  uint64_t seed, int starts) {
  const int n = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());
  if (n < 1) throw std::invalid_argument("gp: empty training set");
  X_ = X;
  y_mean_ = y.mean();
  const double var = n > 1 ? (y.array() - y_mean_).square().sum() / (n - 1)
                           : 1.0;
  y_scale_ = std::max(std::sqrt(var), 1e-9);
  y_ = (y.array() - y_mean_) / y_scale_;

  // Heuristic center: length scales at a third of the per-dimension span,
  // unit signal, small noise (targets are normalized).
  Eigen::VectorXd h0(d + 2);
  for (int k = 0; k < d; ++k) {
    const double span = X.col(k).maxCoeff() - X.col(k).minCoeff();
    h0[k] = std::log(std::max(span / 3, 1e-3));
  }
  h0[d] = 0.0;
  h0[d + 1] = std::log(1e-2);

  Rng rng(seed ^ 0x67503bd2b9a1f2c3ull);
  Eigen::VectorXd best_h = h0;
  double best = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < std::max(1, starts); ++s) {
    Eigen::VectorXd h = h0;
    if (s > 0)
      for (int k = 0; k < h.size(); ++k) h[k] += rng.uniform(-1.5, 1.5);
    const Eigen::VectorXd opt = nelder_mead(
        [this](const Eigen::VectorXd& hh) { return lml_at(hh); }, h, 0.4,
        250);
    const double l = lml_at(opt);
    if (l > best) {
      best = l;
      best_h = opt;
    }
  }
  if (!std::isfinite(best)) best_h[d + 1] = 0.0;  // unit noise is always PD
  factorize(best_h);
}

void GpModel::posterior(const Eigen::VectorXd& x, double& mean,
                        double& var) const {
  const int n = static_cast<int>(X_.rows());
  const int d = static_cast<int>(X_.cols());
  Eigen::VectorXd inv_ls2(d);
  for (int k = 0; k < d; ++k) inv_ls2[k] = std::exp(-2 * hyper_[k]);
  const double sf2 = std::exp(2 * hyper_[d]);

  Eigen::VectorXd ks(n);
  for (int i = 0; i < n; ++i)
    ks[i] = sf2 * std::exp(-0.5 * sqdist(X_.row(i), x, inv_ls2));

  mean = y_mean_ + y_scale_ * ks.dot(alpha_);
  const Eigen::VectorXd v =
      L_.triangularView<Eigen::Lower>().solve(ks);
  var = std::max(sf2 - v.squaredNorm(), 1e-12) * y_scale_ * y_scale_;
}

// ----------------------------------------------------------------------
// Bayesian optimization

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }
double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2 * kPi);
}

}  // namespace

BoResult bayes_optimize(const BoObjective& f,
                        const std::vector<std::pair<double, double>>& bounds,
                        const BoSettings& s) {
  const int d = static_cast<int>(bounds.size());
  if (d == 0) throw std::invalid_argument("bayes: empty bounds");
  for (const auto& b : bounds)
    if (!(b.second > b.first))
      throw std::invalid_argument("bayes: degenerate bound interval");
  if (s.budget < 1) throw std::invalid_argument("bayes: budget must be >= 1");

  Rng rng(s.seed ^ 0x9b1fcb4c5d37a0efull);
  const int n_init = std::min(std::max(1, s.init), s.budget);

  auto denorm = [&](const Eigen::VectorXd& u) {
    Eigen::VectorXd x(d);
    for (int k = 0; k < d; ++k)
      x[k] = bounds[k].first + u[k] * (bounds[k].second - bounds[k].first);
    return x;
  };

  // Latin hypercube: one stratified draw per dimension, permuted.
  Eigen::MatrixXd U(s.budget, d);
  for (int k = 0; k < d; ++k) {
    std::vector<double> col(n_init);
    for (int i = 0; i < n_init; ++i)
      col[i] = (i + rng.uniform()) / n_init;
    for (int i = n_init - 1; i > 0; --i)
      std::swap(col[i], col[rng.below(i + 1)]);
    for (int i = 0; i < n_init; ++i) U(i, k) = col[i];
  }

  BoResult out;
  Eigen::VectorXd yv(s.budget);
  std::vector<double> y_for_gp(s.budget);

  auto evaluate = [&](int i) {
    const Eigen::VectorXd x = denorm(U.row(i).transpose());
    double y = kNan;
    try {
      y = f(x);
    } catch (const std::exception&) {
      y = kNan;
    }
    out.history.push_back({x, y});
    yv[i] = y;
  };

  for (int i = 0; i < n_init; ++i) evaluate(i);

  for (int i = n_init; i < s.budget; ++i) {
    // Penalize failed evaluations below the worst observed value so the
    // surrogate steers away without destroying its scale.
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int j = 0; j < i; ++j)
      if (std::isfinite(yv[j])) {
        lo = std::min(lo, yv[j]);
        hi = std::max(hi, yv[j]);
      }
    if (!std::isfinite(lo)) {
      lo = 0;
      hi = 0;
    }
    const double penalty = lo - 0.1 * (hi - lo) - 1e-6;
    for (int j = 0; j < i; ++j)
      y_for_gp[j] = std::isfinite(yv[j]) ? yv[j] : penalty;

    GpModel gp;
    gp.fit(U.topRows(i),
           Eigen::Map<const Eigen::VectorXd>(y_for_gp.data(), i),
           s.seed + 1000003ull * i, 4);

    double best_seen = hi;
    Eigen::VectorXd best_u(d);
    double best_ei = -1;
    for (int c = 0; c < s.candidates; ++c) {
      Eigen::VectorXd u(d);
      for (int k = 0; k < d; ++k) u[k] = rng.uniform();
      double mean, var;
      gp.posterior(u, mean, var);
      const double sd = std::sqrt(var);
      const double gamma = (mean - best_seen - s.explore) / sd;
      const double ei = sd * (gamma * normal_cdf(gamma) + normal_pdf(gamma));
      if (ei > best_ei) {
        best_ei = ei;
        best_u = u;
      }
    }
    U.row(i) = best_u;
    evaluate(i);
  }

  int best_i = -1;
  for (int i = 0; i < s.budget; ++i)
    if (std::isfinite(yv[i]) && (best_i < 0 || yv[i] > yv[best_i]))
      best_i = i;
  if (best_i < 0) throw std::runtime_error("bayes: every evaluation failed");
  out.best_x = denorm(U.row(best_i).transpose());
  out.best_y = yv[best_i];
  return out;
}

}  // namespace crawl
