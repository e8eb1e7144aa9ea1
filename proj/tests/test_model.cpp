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

#include "crawl/model.hpp"
#include "crawl/rng.hpp"

using namespace crawl;

namespace {

// Random posture with joints well inside (0, pi) and moderate velocities.
Vec5 random_q(Rng& rng) {
  Vec5 q;
  q << rng.uniform(-0.5, 0.5), rng.uniform(-0.1, 0.3),
      rng.uniform(-0.6, 0.6), rng.uniform(0.5, 2.6), rng.uniform(0.5, 2.6);
  return q;
}

Vec5 random_qd(Rng& rng) {
  Vec5 qd;
  for (int i = 0; i < 5; ++i) qd[i] = rng.uniform(-2.0, 2.0);
  return qd;
}

// Mass matrix from central second differences of the kinetic energy in the
// velocities. T is exactly quadratic in qd, so the difference is exact up
// to rounding.
Mat55 mass_fd(const Vec5& q, const RobotParams& p) {
  const double h = 1e-3;
  Mat55 m;
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      Vec5 pp = Vec5::Zero(), pm = Vec5::Zero(), mp = Vec5::Zero(),
           mm = Vec5::Zero();
      pp[i] += h; pp[j] += h;
      pm[i] += h; pm[j] -= h;
      mp[i] -= h; mp[j] += h;
      mm[i] -= h; mm[j] -= h;
      m(i, j) = (kinetic_energy(q, pp, p) - kinetic_energy(q, pm, p) -
                 kinetic_energy(q, mp, p) + kinetic_energy(q, mm, p)) /
                (4 * h * h);
    }
  }
  return m;
}

// Velocity bias from the Lagrangian identity B = Mdot qd - dT/dq with both
// derivatives taken by central differences of T and M.
Vec5 bias_fd(const Vec5& q, const Vec5& qd, const RobotParams& p) {
  const double h = 1e-6;
  Mat55 mdot = Mat55::Zero();
  Vec5 dTdq;
  for (int k = 0; k < 5; ++k) {
    Vec5 qp = q, qm = q;
    qp[k] += h;
    qm[k] -= h;
    mdot += (mass_matrix(qp, p) - mass_matrix(qm, p)) / (2 * h) * qd[k];
    dTdq[k] =
        (kinetic_energy(qp, qd, p) - kinetic_energy(qm, qd, p)) / (2 * h);
  }
  return mdot * qd - dTdq;
}

// Signed permutation of the x-axis reflection: x and theta flip sign, the
// legs swap roles. For symmetric leg parameters the model must commute
// with it.
Vec5 mirror_state(const Vec5& v) {
  Vec5 m;
  m << -v[0], v[1], -v[2], v[4], v[3];
  return m;
}

Mat55 mirror_map() {
  Mat55 P = Mat55::Zero();
  P(0, 0) = -1;
  P(1, 1) = 1;
  P(2, 2) = -1;
  P(3, 4) = 1;
  P(4, 3) = 1;
  return P;
}

}  // namespace

TEST_CASE("mass matrix: top-left entry is the total mass") {
  RobotParams p;
  Rng rng(11);
  for (int i = 0; i < 20; ++i) {
    const Vec5 q = random_q(rng);
    CHECK(mass_matrix(q, p)(0, 0) == doctest::Approx(0.236).epsilon(1e-12));
    CHECK(mass_matrix(q, p)(1, 1) == doctest::Approx(0.236).epsilon(1e-12));
  }
}

TEST_CASE("mass matrix: exact symmetry") {
  RobotParams p;
  Rng rng(12);
  for (int i = 0; i < 50; ++i) {
    const Mat55 M = mass_matrix(random_q(rng), p);
    CHECK((M - M.transpose()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("mass matrix: x-tilt coupling at the right-angle posture") {
  RobotParams p;
  Vec5 q;
  q << 0, 0.2, 0, rad(90), rad(90);
  const Mat55 M = mass_matrix(q, p);
  CHECK(M(0, 2) == doctest::Approx(0.00357).epsilon(1e-9));
}

TEST_CASE("mass matrix: matches kinetic-energy Hessian on random states") {
  RobotParams p;
  Rng rng(13);
  for (int i = 0; i < 30; ++i) {
    const Vec5 q = random_q(rng);
    const Mat55 M = mass_matrix(q, p);
    const Mat55 Mfd = mass_fd(q, p);
    CHECK((M - Mfd).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("mass matrix: quadratic form reproduces the kinetic energy") {
  RobotParams p;
  Rng rng(14);
  for (int i = 0; i < 50; ++i) {
    const Vec5 q = random_q(rng);
    const Vec5 qd = random_qd(rng);
    const double T = kinetic_energy(q, qd, p);
    const double Tm = 0.5 * qd.dot(mass_matrix(q, p) * qd);
    CHECK(T == doctest::Approx(Tm).epsilon(1e-12));
  }
}

TEST_CASE("mass matrix: positive definite over 1000 random states") {
  RobotParams p;
  Rng rng(15);
  double min_eig = 1e300;
  for (int i = 0; i < 1000; ++i) {
    const Mat55 M = mass_matrix(random_q(rng), p);
    Eigen::SelfAdjointEigenSolver<Mat55> es(M);
    min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
  }
  CHECK(min_eig > 0.0);
}

TEST_CASE("velocity bias: zero at rest and quadratic in the rates") {
  RobotParams p;
  Rng rng(16);
  for (int i = 0; i < 30; ++i) {
    const Vec5 q = random_q(rng);
    CHECK(velocity_bias(q, Vec5::Zero(), p).norm() == 0.0);
    const Vec5 qd = random_qd(rng);
    const Vec5 b1 = velocity_bias(q, qd, p);
    const Vec5 b2 = velocity_bias(q, 2.0 * qd, p);
    CHECK((b2 - 4.0 * b1).cwiseAbs().maxCoeff() <
          1e-12 * (1.0 + b1.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("velocity bias: joint entries vanish without tilt rate") {
  RobotParams p;
  Vec5 q, qd;
  q << 0, 0.2, 0, rad(90), rad(90);
  qd << 0.3, -0.2, 0, 1, 1;
  const Vec5 B = velocity_bias(q, qd, p);
  CHECK(B[3] == 0.0);
  CHECK(B[4] == 0.0);
}

TEST_CASE("velocity bias: matches the finite-difference Lagrangian oracle") {
  RobotParams p;
  Rng rng(17);
  for (int i = 0; i < 30; ++i) {
    const Vec5 q = random_q(rng);
    const Vec5 qd = random_qd(rng);
    const Vec5 B = velocity_bias(q, qd, p);
    const Vec5 Bfd = bias_fd(q, qd, p);
    const double scale = 1.0 + B.cwiseAbs().maxCoeff();
    CHECK((B - Bfd).cwiseAbs().maxCoeff() / scale < 1e-6);
  }
}

TEST_CASE("gravity vector: structure and magnitude") {
  RobotParams p;
  Rng rng(18);
  for (int i = 0; i < 30; ++i) {
    const Vec5 q = random_q(rng);
    const Vec5 G = gravity_vector(q, p);
    CHECK(G[0] == 0.0);
    CHECK(G[1] == doctest::Approx(2.3152).epsilon(1e-4));
  }
  Vec5 q;
  q << 0, 0.2, 0, rad(105), rad(105);
  CHECK(std::abs(gravity_vector(q, p)[2]) < 1e-15);
}

TEST_CASE("gravity vector: linear in g") {
  RobotParams p;
  RobotParams p2;
  p2.g = 2 * p.g;
  RobotParams p0;
  p0.g = 0;
  Rng rng(19);
  const Vec5 q = random_q(rng);
  CHECK((gravity_vector(q, p2) - 2.0 * gravity_vector(q, p)).norm() < 1e-14);
  CHECK(gravity_vector(q, p0).norm() == 0.0);
}

TEST_CASE("contact positions: symmetric stance foot heights") {
  RobotParams p;
  Vec5 q;
  q << 0.1, 0.2, 0, rad(110), rad(110);
  const Vec2 r1 = contact_pos(q, p, 1);
  const Vec2 r2 = contact_pos(q, p, 2);
  CHECK(r1[1] == doctest::Approx(0.2 - 0.17 * std::sin(rad(110))).epsilon(1e-12));
  CHECK(r1[1] == doctest::Approx(r2[1]).epsilon(1e-12));
  CHECK(r1[1] == doctest::Approx(0.2 - 0.1597).epsilon(1e-3));
}

TEST_CASE("contact jacobian: printed x-row at the right-angle posture") {
  RobotParams p;
  Vec5 q;
  q << 0, 0.2, 0, rad(90), rad(110);
  const Mat25 W1 = contact_jac(q, p, 1);
  Vec5 expect;
  expect << 1, 0, 0.170, -0.170, 0;
  CHECK((W1.row(0).transpose() - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("contact jacobian: sparsity against the opposite joint") {
  RobotParams p;
  Rng rng(20);
  for (int i = 0; i < 30; ++i) {
    const Vec5 q = random_q(rng);
    const Mat25 W1 = contact_jac(q, p, 1);
    const Mat25 W2 = contact_jac(q, p, 2);
    CHECK(W1(0, 4) == 0.0);
    CHECK(W1(1, 4) == 0.0);
    CHECK(W2(0, 3) == 0.0);
    CHECK(W2(1, 3) == 0.0);
  }
}

TEST_CASE("contact jacobian: finite-difference of the foot positions") {
  RobotParams p;
  Rng rng(21);
  const double h = 1e-7;
  for (int i = 0; i < 30; ++i) {
    const Vec5 q = random_q(rng);
    for (int foot : {1, 2}) {
      const Mat25 W = contact_jac(q, p, foot);
      for (int k = 0; k < 5; ++k) {
        Vec5 qp = q, qm = q;
        qp[k] += h;
        qm[k] -= h;
        const Vec2 col =
            (contact_pos(qp, p, foot) - contact_pos(qm, p, foot)) / (2 * h);
        CHECK((W.col(k) - col).cwiseAbs().maxCoeff() < 1e-6);
      }
    }
  }
}

TEST_CASE("contact jacobian rate: central difference along the flow") {
  RobotParams p;
  Rng rng(22);
  const double h = 1e-6;
  for (int i = 0; i < 30; ++i) {
    const Vec5 q = random_q(rng);
    const Vec5 qd = random_qd(rng);
    for (int foot : {1, 2}) {
      const Mat25 Wd = contact_jac_dot(q, qd, p, foot);
      const Mat25 Wfd =
          (contact_jac(q + h * qd, p, foot) - contact_jac(q - h * qd, p, foot)) /
          (2 * h);
      CHECK((Wd - Wfd).cwiseAbs().maxCoeff() < 1e-6);
      CHECK(contact_jac_dot(q, Vec5::Zero(), p, foot).cwiseAbs().maxCoeff() ==
            0.0);
    }
  }
}

TEST_CASE("contact jacobian rate: vanishing entry at a right angle") {
  RobotParams p;
  Vec5 q, qd;
  q << 0, 0.2, 0, rad(90), rad(110);
  qd << 0, 0, 1, 0, 0;
  const Mat25 Wd = contact_jac_dot(q, qd, p, 1);
  CHECK(std::abs(Wd(0, 3)) < 1e-15);
}

TEST_CASE("actuation map: joint selection structure") {
  const Mat52 E = actuation_map();
  Vec5 v;
  v << 0, 0, 0, 1, 0;
  const Vec2 tau = E.transpose() * v;
  CHECK(tau[0] == 1.0);
  CHECK(tau[1] == 0.0);
  const Mat2 gram = E.transpose() * E;
  CHECK((gram - Mat2::Identity()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("mirror symmetry: reflection swaps the legs") {
  RobotParams p;  // symmetric legs
  Rng rng(23);
  const Mat55 P = mirror_map();
  for (int i = 0; i < 30; ++i) {
    const Vec5 q = random_q(rng);
    const Vec5 qm = mirror_state(q);

    // Foot 1 of the mirrored state is the reflection of foot 2.
    const Vec2 r1m = contact_pos(qm, p, 1);
    const Vec2 r2 = contact_pos(q, p, 2);
    CHECK(r1m[0] == doctest::Approx(-r2[0]).epsilon(1e-12));
    CHECK(r1m[1] == doctest::Approx(r2[1]).epsilon(1e-12));

    // The inertia matrix commutes with the signed permutation.
    const Mat55 M = mass_matrix(q, p);
    const Mat55 Mm = mass_matrix(qm, p);
    CHECK((Mm - P * M * P).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("leg-mass rescaling keeps inertia-to-mass ratios") {
  RobotParams p;
  const RobotParams p2 = p.with_leg_masses(0.030, 0.012);
  CHECK(p2.m1 == doctest::Approx(0.030));
  CHECK(p2.m2 == doctest::Approx(0.012));
  CHECK(p2.J1 / p2.m1 == doctest::Approx(p.J1 / p.m1).epsilon(1e-12));
  CHECK(p2.J2 / p2.m2 == doctest::Approx(p.J2 / p.m2).epsilon(1e-12));
  CHECK(p2.l1 == p.l1);
  CHECK(p2.m0 == p.m0);
}

TEST_CASE("grounded posture: both feet on the ground") {
  RobotParams p;
  for (double phi1 : {rad(95.0), rad(110.0), rad(125.0)}) {
    for (double phi2 : {rad(97.0), rad(110.0), rad(121.0)}) {
      const Vec5 q = grounded_posture(0.3, phi1, phi2, p);
      CHECK(q[0] == 0.3);
      CHECK(std::abs(contact_pos(q, p, 1)[1]) < 1e-12);
      CHECK(std::abs(contact_pos(q, p, 2)[1]) < 1e-12);
    }
  }
}

TEST_CASE("grounded posture: tilt sign follows the joint asymmetry") {
  RobotParams p;
  const double t0 = ground_theta(rad(100), rad(120), p);
  const double t1 = ground_theta(rad(120), rad(100), p);
  CHECK(t0 == doctest::Approx(-t1).epsilon(1e-10));
  CHECK(std::abs(ground_theta(rad(110), rad(110), p)) < 1e-12);
}
