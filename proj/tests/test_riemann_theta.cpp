#include <doctest.h>

#include <cmath>
#include <random>

#include "pnft/riemann_theta.hpp"

using namespace pnft;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Independent box sum, |n_k| <= m.
cplx box_theta(const CVector& u, const CMatrix& tau, int m) {
  const int g = static_cast<int>(u.size());
  Eigen::VectorXi n = Eigen::VectorXi::Constant(g, -m);
  cplx s = 0.0;
  while (true) {
    CVector nd = n.cast<cplx>();
    cplx e = cplx(0, kPi) * (nd.transpose() * tau * nd)(0) + cplx(0, 2 * kPi) * nd.dot(u);
    s += std::exp(e);
    int k = 0;
    while (k < g && n[k] == m) n[k++] = -m;
    if (k == g) break;
    ++n[k];
  }
  return s;
}

PeriodMatrix random_tau(int g, std::mt19937& rng, double floor = 0.5) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  RMatrix x(g, g), a(g, g);
  for (int i = 0; i < g; ++i)
    for (int j = 0; j < g; ++j) {
      x(i, j) = u(rng);
      a(i, j) = 0.6 * u(rng);
    }
  x = (0.5 * (x + x.transpose())).eval();
  RMatrix y = a.transpose() * a + floor * RMatrix::Identity(g, g);
  CMatrix t(g, g);
  t.real() = x;
  t.imag() = y;
  return PeriodMatrix(t);
}

CVector random_u(int g, std::mt19937& rng, double im_scale) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  CVector v(g);
  for (int k = 0; k < g; ++k) v[k] = cplx(u(rng), im_scale * u(rng));
  return v;
}

PeriodMatrix tau_i(int g) {
  return PeriodMatrix(CMatrix::Identity(g, g) * cplx(0, 1));
}

}  // namespace

TEST_CASE("theta at the origin for tau = i matches a wide direct sum") {
  CVector u = CVector::Zero(1);
  cplx direct = box_theta(u, tau_i(1).tau, 50);
  cplx t = theta(u, tau_i(1));
  CHECK(std::abs(t - direct) < 1e-14);
  CHECK(std::abs(t.real() - 1.08643481121) < 1e-10);
  CHECK(std::abs(t.imag()) < 1e-15);
}

TEST_CASE("truncation radius is monotone in tol") {
  CHECK(truncation_radius(tau_i(1), 0.5) < truncation_radius(tau_i(1), 1e-15));
  CHECK(truncation_radius(tau_i(1), 1e-8) < truncation_radius(tau_i(1), 1e-15));
}

TEST_CASE("truncation radius keeps the neglected tail below tol") {
  for (double tol : {1e-4, 1e-8, 1e-12, 1e-15}) {
    double r = truncation_radius(tau_i(1), tol);
    // Largest omitted terms are n = +-(floor(r) + 1).
    double n = std::floor(r) + 1.0;
    double tail = 0.0;
    for (double k = n; k < n + 40; k += 1.0) tail += 2.0 * std::exp(-kPi * k * k);
    CHECK(tail < tol);
  }
}

TEST_CASE("diagonal genus-2 theta factorises into genus-1 thetas") {
  CVector u2(2), u1(1), v1(1);
  u2 << cplx(0.13, 0.05), cplx(-0.31, 0.2);
  u1 << u2[0];
  v1 << u2[1];
  cplx t2 = theta(u2, tau_i(2));
  cplx prod = theta(u1, tau_i(1)) * theta(v1, tau_i(1));
  CHECK(std::abs(t2 - prod) < 1e-14);
  CHECK(std::abs(t2 - box_theta(u2, tau_i(2).tau, 20)) < 1e-14);
}

TEST_CASE("non positive definite Im tau is rejected with the eigenvalue") {
  CMatrix t(2, 2);
  t << cplx(0, 1), cplx(0, 2), cplx(0, 2), cplx(0, 1);
  try {
    theta(CVector::Zero(2), PeriodMatrix(t));
    FAIL("expected an error");
  } catch (const std::domain_error& e) {
    CHECK(std::string(e.what()).find("-1") != std::string::npos);
  }
  CHECK_THROWS_AS(theta(CVector::Zero(3), tau_i(2)), std::invalid_argument);
}

TEST_CASE("periodicity, quasi-periodicity and evenness on random inputs") {
  std::mt19937 rng(7);
  const double tol = 1e-15;
  for (int g = 1; g <= 3; ++g) {
    for (int trial = 0; trial < 100; ++trial) {
      PeriodMatrix tau = random_tau(g, rng);
      CVector u = random_u(g, rng, 0.5);
      cplx t0 = theta(u, tau, tol);
      double scale = 1.0 + std::abs(t0);
      CHECK(std::abs(theta(-u, tau, tol) - t0) <= 1e-12 * scale);
      for (int j = 0; j < g; ++j) {
        CVector e = CVector::Zero(g);
        e[j] = 1.0;
        CHECK(std::abs(theta(u + e, tau, tol) - t0) <= 2 * tol * scale + 1e-14 * scale);
        cplx shifted = theta(u + tau.tau * e, tau, tol);
        cplx expect = std::exp(cplx(0, -kPi) * tau.tau(j, j) - cplx(0, 2 * kPi) * u[j]) * t0;
        CHECK(std::abs(shifted - expect) <= 1e-12 * (1.0 + std::abs(expect)));
      }
    }
  }
}

TEST_CASE("ellipsoid sum matches a wide box sum for g <= 3") {
  std::mt19937 rng(11);
  for (int g = 1; g <= 3; ++g) {
    int box = g == 3 ? 12 : 30;  // e^{-pi 0.5 13^2} is far below 1e-10
    for (int trial = 0; trial < 5; ++trial) {
      PeriodMatrix tau = random_tau(g, rng);
      CVector u = random_u(g, rng, 0.3);
      CHECK(std::abs(theta(u, tau) - box_theta(u, tau.tau, box)) < 1e-10);
    }
  }
}

TEST_CASE("log theta ratio") {
  std::mt19937 rng(3);
  PeriodMatrix tau = random_tau(2, rng);
  CVector a = random_u(2, rng, 0.4), b = random_u(2, rng, 0.4);
  CHECK(std::abs(log_theta_ratio(a, a, tau)) < 1e-15);
  cplx r = std::exp(log_theta_ratio(a, b, tau));
  CHECK(std::abs(r - theta(a, tau) / theta(b, tau)) < 1e-12 * std::abs(r));

  SUBCASE("shift by a lattice column") {
    for (int j = 0; j < 2; ++j) {
      CVector e = CVector::Zero(2);
      e[j] = 1.0;
      cplx d = log_theta_ratio(a + tau.tau * e, b + tau.tau * e, tau) - log_theta_ratio(a, b, tau);
      cplx expect = cplx(0, -2 * kPi) * (a[j] - b[j]);
      CHECK(std::abs(std::exp(d - expect) - 1.0) < 1e-12);
    }
  }

  SUBCASE("large imaginary arguments stay finite") {
    CVector big = a + CVector::Constant(2, cplx(0, 60.0));
    CVector big2 = b + CVector::Constant(2, cplx(0, 60.0));
    cplx l = log_theta_ratio(big, big2, tau);
    CHECK(std::isfinite(l.real()));
    CHECK(std::isfinite(l.imag()));
  }
}

TEST_CASE("theta series derivatives agree with finite differences") {
  std::mt19937 rng(5);
  PeriodMatrix tau = random_tau(2, rng);
  RVector y(2), x(2), d(2);
  y << 0.1, -0.2;
  x << 0.3, 0.7;
  d << 1.3, -0.4;
  ThetaSeries ts(tau, y, 1e-15);
  cplx s0, s1, s2;
  ts.jet(x, d, s0, s1, s2);
  double h = 1e-4;
  cplx fp = ts.sum(x + h * d), fm = ts.sum(x - h * d);
  CHECK(std::abs(s0 - ts.sum(x)) < 1e-15);
  CHECK(std::abs((fp - fm) / (2 * h) - s1) < 1e-6 * std::abs(s1) + 1e-8);
  CHECK(std::abs((fp - 2.0 * s0 + fm) / (h * h) - s2) < 1e-5 * std::abs(s2) + 1e-5);
}
