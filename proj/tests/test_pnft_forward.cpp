#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "pnft/fft.hpp"
#include "pnft/finite_gap.hpp"
#include "pnft/pnft_forward.hpp"

using namespace pnft;

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<cplx> constant(cplx a, int n) { return std::vector<cplx>(n, a); }

std::vector<cplx> random_signal(int n, std::mt19937& rng) {
  std::normal_distribution<double> g(0.0, 0.7);
  std::vector<cplx> q(n);
  for (auto& v : q) v = cplx(g(rng), g(rng));
  return q;
}

// Exactly periodic genus-2 test signal and its spectrum.
struct Periodic {
  std::vector<cplx> q;
  double dt;
  std::vector<cplx> spectrum;
};

Periodic genus2_periodic(int n) {
  MainSpectrum s;
  s.points = {cplx(-0.5, 1.0), cplx(0.23783, 1.5), cplx(0.5, 1.5)};
  FiniteGapParams p = quasiperiodize(compute_params(build_curve(s)));
  double period = amplitude_period(p);
  // Boost so the carrier completes an integer number of turns per period.
  double turns = std::round(p.Omega0 * period / (2 * kPi));
  double c = (p.Omega0 - turns * 2 * kPi / period) / 2;
  FiniteGapParams g = galilean_shift(p, c);
  Periodic out;
  out.dt = period / n;
  out.q = evaluate_solution(g, 0.0, 0.0, out.dt, n);
  for (cplx x : s.points) out.spectrum.push_back(x + c);
  return out;
}

double match_error(const std::vector<cplx>& got, const std::vector<cplx>& want) {
  double worst = 0.0;
  for (cplx w : want) {
    double best = 1e300;
    for (cplx g : got) best = std::min(best, std::abs(g - w));
    worst = std::max(worst, best);
  }
  return worst;
}

}  // namespace

TEST_CASE("free evolution") {
  const int n = 128;
  const double T = 2 * kPi, dt = T / n;
  auto q = constant(0.0, n);
  for (cplx lam : {cplx(0.3, 0.0), cplx(0.7, 0.4), cplx(-1.2, 0.9)}) {
    cplx expect = std::cos(lam * T);
    CHECK(std::abs(floquet_discriminant(q, dt, lam) - expect) < 1e-12 * (1 + std::abs(expect)));
  }
  for (int k = 0; k < 4; ++k) {
    cplx d = floquet_discriminant(q, dt, cplx(k * kPi / T, 0.0));
    CHECK(std::abs(std::abs(d) - 1.0) < 1e-12);
  }
}

TEST_CASE("constant potential discriminant matches the closed form") {
  const double T = 2 * kPi;
  for (double a : {0.5, 1.0, 2.0}) {
    auto q = constant(a, 256);
    for (int i = 0; i < 20; ++i)
      for (int j = 0; j < 20; ++j) {
        cplx lam(-2.0 + 4.0 * i / 19, 0.05 + 2.5 * j / 19);
        cplx expect = std::cos(T * std::sqrt(lam * lam + a * a));
        CHECK(std::abs(floquet_discriminant(q, T / 256, lam) - expect) < 1e-10 * (1 + std::abs(expect)));
      }
    // Delta(iA) = cos(0) = 1.
    CHECK(std::abs(floquet_discriminant(q, T / 256, cplx(0, a)) - 1.0) < 1e-12);
  }
}

TEST_CASE("monodromy is unimodular") {
  std::mt19937 rng(1);
  auto q = random_signal(300, rng);
  for (cplx lam : {cplx(0.1, 0.2), cplx(-1.0, 1.5), cplx(2.0, 0.01)}) {
    Monodromy m = monodromy(q, 0.02, lam);
    CHECK(std::abs(m.m.determinant() - 1.0) < 1e-8);
  }
  CHECK_THROWS_AS(monodromy({}, 0.1, cplx(0, 1)), std::invalid_argument);
}

TEST_CASE("discriminant symmetries") {
  std::mt19937 rng(2);
  auto q = random_signal(200, rng);
  const double dt = 0.03;
  cplx lam(0.4, 0.6);
  // Schwarz reflection holds for every focusing potential.
  CHECK(std::abs(floquet_discriminant(q, dt, std::conj(lam)) - std::conj(floquet_discriminant(q, dt, lam))) < 1e-10);
  // Reflection about the imaginary axis needs a real potential.
  std::vector<cplx> re(q.size());
  for (std::size_t k = 0; k < q.size(); ++k) re[k] = q[k].real();
  CHECK(std::abs(floquet_discriminant(re, dt, -std::conj(lam)) - std::conj(floquet_discriminant(re, dt, lam))) < 1e-10);
  CHECK(std::abs(floquet_discriminant(q, dt, -std::conj(lam)) - std::conj(floquet_discriminant(q, dt, lam))) > 1e-6);
}

TEST_CASE("exact lambda derivative") {
  std::mt19937 rng(3);
  auto q = random_signal(150, rng);
  const double dt = 0.04, h = 1e-6;
  for (cplx lam : {cplx(0.2, 0.3), cplx(-0.7, 1.1), cplx(1e-4, 1e-4)}) {
    cplx d, dd;
    floquet_discriminant(q, dt, lam, d, dd);
    cplx fd = (floquet_discriminant(q, dt, lam + h) - floquet_discriminant(q, dt, lam - h)) / (2 * h);
    CHECK(std::abs(d - floquet_discriminant(q, dt, lam)) < 1e-13 * (1 + std::abs(d)));
    CHECK(std::abs(dd - fd) < 1e-6 * (1 + std::abs(dd)));
  }
}

TEST_CASE("constant potential main spectrum") {
  const double T = 2 * kPi;
  SearchBox box{-1.0, 1.0, 0.0, 2.5};
  for (double a : {0.5, 1.0, 2.0}) {
    auto q = constant(a, 256);
    SpectrumEstimate est = find_main_spectrum(q, T / 256, box);
    std::vector<cplx> want;
    for (int n = 0; n * kPi / T < a; ++n) {
      double k = n * kPi / T;
      if (a * a - k * k > 1e-3 * 1e-3) want.push_back(cplx(0, std::sqrt(a * a - k * k)));
    }
    CHECK(est.points.size() == want.size());
    CHECK(match_error(est.points, want) < 1e-8);
    for (double r : est.residuals) CHECK(r < 1e-9);
  }
  SUBCASE("pi/T > A leaves a single point") {
    auto q = constant(0.4, 256);
    SpectrumEstimate est = find_main_spectrum(q, 1.0 / 256, box);  // T = 1
    REQUIRE(est.points.size() == 1);
    CHECK(std::abs(est.points[0] - cplx(0, 0.4)) < 1e-8);
  }
}

TEST_CASE("genus-2 round trip and invariances") {
  Periodic s = genus2_periodic(1024);
  SearchBox box{-2.0, 2.0, 0.0, 2.5};
  SpectrumEstimate est = find_main_spectrum(s.q, s.dt, box);
  SpectrumEstimate top = reduce_spectrum(est, 3);
  CHECK_FALSE(top.shortfall);
  CHECK(match_error(top.points, s.spectrum) < 1e-2);
  CHECK(match_error(top.points, s.spectrum) < 1e-4);

  SUBCASE("cyclic rotation") {
    std::vector<cplx> r = s.q;
    std::rotate(r.begin(), r.begin() + 333, r.end());
    SpectrumEstimate e = refine_main_spectrum(r, s.dt, top.points);
    CHECK(match_error(e.points, top.points) < 1e-6);
  }
  SUBCASE("global phase") {
    std::vector<cplx> r = s.q;
    for (auto& v : r) v *= std::polar(1.0, 1.234);
    SpectrumEstimate e = refine_main_spectrum(r, s.dt, top.points);
    CHECK(match_error(e.points, top.points) < 1e-6);
  }
  SUBCASE("oversampling a short table") {
    Periodic coarse = genus2_periodic(48);
    auto fine = fft::resample(coarse.q, 1024);
    SpectrumEstimate e = reduce_spectrum(find_main_spectrum(fine, s.dt, box), 3);
    CHECK(match_error(e.points, top.points) < 1e-2);
  }
}

TEST_CASE("reduce_spectrum") {
  SpectrumEstimate est;
  est.points = {cplx(0, 1), cplx(0.5, 3), cplx(-0.2, 2), cplx(0.1, 0.5), cplx(-0.3, 3)};
  est.residuals = {1, 2, 3, 4, 5};
  SpectrumEstimate r = reduce_spectrum(est, 3);
  REQUIRE(r.points.size() == 3);
  CHECK(r.points[0] == cplx(-0.3, 3));
  CHECK(r.points[1] == cplx(0.5, 3));
  CHECK(r.points[2] == cplx(-0.2, 2));
  CHECK(r.residuals[0] == 5);
  CHECK_FALSE(r.shortfall);

  SpectrumEstimate three = reduce_spectrum(r, 3);
  CHECK(three.points == r.points);

  SpectrumEstimate two;
  two.points = {cplx(0, 1), cplx(0, 2)};
  two.residuals = {0, 0};
  SpectrumEstimate s = reduce_spectrum(two, 3);
  CHECK(s.points.size() == 2);
  CHECK(s.shortfall);
  CHECK_THROWS_AS(reduce_spectrum(two, 0), std::invalid_argument);
}
