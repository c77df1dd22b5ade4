#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "pnft/channel.hpp"
#include "pnft/fft.hpp"
#include "pnft/finite_gap.hpp"
#include "pnft/pnft_forward.hpp"

using namespace pnft;

namespace {

constexpr double kPi = 3.14159265358979323846;

double rel_l2(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    num += std::norm(a[k] - b[k]);
    den += std::norm(b[k]);
  }
  return std::sqrt(num / den);
}

double energy(const std::vector<cplx>& a) {
  double s = 0.0;
  for (cplx v : a) s += std::norm(v);
  return s;
}

// Band-limited random physical waveform with about 1 mW mean power.
Waveform random_waveform(int n, double rate, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<cplx> X(n, 0.0);
  for (int k = 0; k < n; ++k)
    if (std::abs(fft::bin_index(k, n)) < n / 8) X[k] = cplx(g(rng), g(rng));
  Waveform w;
  w.samples = fft::inverse(X);
  double s = std::sqrt(1e-3 / mean_power(w.samples));
  for (auto& v : w.samples) v *= s;
  w.sample_rate = rate;
  return w;
}

Waveform soliton(int n, double t_len) {
  Waveform w;
  w.units = Units::dimensionless;
  w.sample_rate = n / t_len;
  for (int k = 0; k < n; ++k) w.samples.push_back(1.0 / std::cosh(-t_len / 2 + k * t_len / n));
  return w;
}

// Exactly periodic designed genus-2 signal; returns the boosted parameters.
FiniteGapParams periodic_genus2(double& period) {
  MainSpectrum s;
  s.points = {cplx(-0.5, 1.0), cplx(0.23783, 1.5), cplx(0.5, 1.5)};
  FiniteGapParams p = quasiperiodize(compute_params(build_curve(s)));
  period = amplitude_period(p);
  double turns = std::round(p.Omega0 * period / (2 * kPi));
  return galilean_shift(p, (p.Omega0 - turns * 2 * kPi / period) / 2);
}

// Two-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j]) ++i;
    else ++j;
    d = std::max(d, std::abs(double(i) / a.size() - double(j) / b.size()));
  }
  return d;
}

}  // namespace

TEST_CASE("effective nonlinearity") {
  CHECK(std::abs(gamma_effective(1.3, 1e-12, 75.0) - 1.3) < 1e-9);
  // Direct evaluation with alpha = 0.2 ln(10) / 10 per km.
  double a = 0.2 * std::log(10.0) / 10.0 * 75.0;
  double ratio = (1 - std::exp(-a)) / a;
  CHECK(std::abs(gamma_effective(1.3, 0.2, 75.0) - 1.3 * ratio) < 1e-14);
  CHECK(std::abs(ratio - 0.28037) < 1e-5);
  for (double al : {0.01, 0.2, 1.0}) CHECK(gamma_effective(1.3, al, 75.0) < 1.3);
}

TEST_CASE("linear broadening") {
  CHECK(std::abs(linear_broadening(-18.9, 2250.0, 4.5e9) - 1.2e-9) < 0.005e-9);
  CHECK(linear_broadening(-18.9, 0.0, 4.5e9) == 0.0);
  CHECK(std::abs(linear_broadening(-18.9, 100.0, 9e9) - 2 * linear_broadening(-18.9, 100.0, 4.5e9)) < 1e-24);
}

TEST_CASE("linear fiber is the exact dispersion filter") {
  Waveform w = random_waveform(1024, 64e9, 1);
  LinkConfig cfg;
  cfg.gamma = 0.0;
  cfg.alpha = 0.0;
  Waveform out = ssfm_span(w, cfg, false);
  std::vector<cplx> X = fft::forward(w.samples);
  const int n = 1024;
  for (int k = 0; k < n; ++k) {
    double om = 2 * kPi * fft::bin_index(k, n) * 64e9 / n * 1e-12;  // rad/ps
    X[k] *= std::exp(cplx(0, cfg.beta2 / 2 * om * om * cfg.span_length));
  }
  CHECK(rel_l2(out.samples, fft::inverse(X)) < 1e-10);
}

TEST_CASE("attenuation alone") {
  Waveform w = random_waveform(512, 64e9, 2);
  LinkConfig cfg;
  cfg.gamma = 0.0;
  cfg.beta2 = 0.0;
  Waveform out = ssfm_span(w, cfg, false);
  double expect = energy(w.samples) * std::exp(-alpha_per_km(0.2) * 75.0);
  CHECK(std::abs(energy(out.samples) / expect - 1.0) < 1e-12);
}

TEST_CASE("fundamental soliton over ten dispersion lengths") {
  Waveform w = soliton(1024, 60.0);
  Waveform out = propagate(w, 10.0);
  std::vector<cplx> expect = w.samples;
  for (auto& v : expect) v *= std::polar(1.0, 10.0 / 2);
  CHECK(rel_l2(out.samples, expect) < 1e-6);
}

TEST_CASE("lossless propagation conserves energy and converges in the step") {
  Waveform w = random_waveform(2048, 64e9, 3);
  for (auto& v : w.samples) v *= 3.0;
  LinkConfig cfg;
  Waveform a = ssfm_span(w, cfg, true);
  CHECK(std::abs(energy(a.samples) / energy(w.samples) - 1.0) < 1e-9);
  LinkConfig half = cfg;
  half.max_phase_step /= 2;
  Waveform b = ssfm_span(w, half, true);
  CHECK(rel_l2(a.samples, b.samples) < 1e-6);
}

TEST_CASE("aliasing guard") {
  Waveform w;
  w.sample_rate = 64e9;
  for (int k = 0; k < 256; ++k) w.samples.push_back(std::polar(0.03, kPi * 0.95 * k));
  CHECK_THROWS_AS(ssfm_span(w, LinkConfig{}, false), std::invalid_argument);
  w.units = Units::dimensionless;
  CHECK_THROWS_AS(propagate(w, 1.0), std::invalid_argument);
}

TEST_CASE("finite-gap solution propagates as predicted") {
  double period = 0.0;
  FiniteGapParams p = periodic_genus2(period);
  const int n = 256;
  Waveform w;
  w.units = Units::dimensionless;
  w.sample_rate = n / period;
  w.samples = evaluate_solution(p, 0.0, 0.0, period / n, n);
  const double z = 1.0;
  Waveform out = propagate(w, z);
  CHECK(rel_l2(out.samples, evaluate_solution(p, z, 0.0, period / n, n)) < 1e-4);

  SUBCASE("and keeps its main spectrum") {
    Waveform far = propagate(w, 10.0);
    auto fine = [](const std::vector<cplx>& x) { return fft::resample(x, 1024); };
    SearchBox box{-2.0, 2.0, 0.0, 2.5};
    SpectrumEstimate s0 = reduce_spectrum(find_main_spectrum(fine(w.samples), period / 1024, box), 3);
    SpectrumEstimate s1 = refine_main_spectrum(fine(far.samples), period / 1024, s0.points);
    REQUIRE(s1.points.size() == 3);
    for (int k = 0; k < 3; ++k) CHECK(std::abs(s1.points[k] - s0.points[k]) < 1e-3);
  }
}

TEST_CASE("amplifier noise") {
  const int n = 1 << 20;
  Waveform w;
  w.sample_rate = 64e9;
  w.samples.assign(n, 0.0);
  const double gain_db = 20.0, g = 100.0;
  std::mt19937_64 rng(5);
  Waveform out = edfa(w, gain_db, 10 * std::log10(2.0), rng);
  // NF = 2 gives n_sp = (2G - 1) / (2G - 2), close to the ideal amplifier.
  const double hnu = 6.62607015e-34 * 299792458.0 / 1550e-9;
  double psd = mean_power(out.samples) / w.sample_rate;
  CHECK(std::abs(psd / ((g - 1) * hnu) - 1.0) < 0.05);

  SUBCASE("unit gain is a passthrough") {
    Waveform x = random_waveform(256, 64e9, 6);
    Waveform y = edfa(x, 0.0, 0.0, rng);
    CHECK(y.samples == x.samples);
  }
  SUBCASE("different seeds, same statistics") {
    Waveform z;
    z.sample_rate = 64e9;
    z.samples.assign(20000, 0.0);
    std::mt19937_64 r1(11), r2(12);
    Waveform a = edfa(z, gain_db, 5.0, r1), b = edfa(z, gain_db, 5.0, r2);
    CHECK(a.samples != b.samples);
    std::vector<double> ra, rb;
    for (int k = 0; k < 20000; ++k) {
      ra.push_back(a.samples[k].real());
      rb.push_back(b.samples[k].real());
    }
    // 1% critical value for two samples of 20000.
    CHECK(ks_statistic(ra, rb) < 1.63 * std::sqrt(2.0 / 20000));
  }
}

TEST_CASE("bandpass filter") {
  const int n = 1024;
  const double rate = 64e9;
  auto tone = [&](int bin) {
    Waveform w;
    w.sample_rate = rate;
    for (int k = 0; k < n; ++k) w.samples.push_back(std::polar(1.0, 2 * kPi * bin * k / n));
    return w;
  };
  Waveform in = tone(100);  // 6.25 GHz
  CHECK(rel_l2(obpf(in, 50e9).samples, in.samples) < 1e-12);
  Waveform outband = tone(450);  // 28 GHz
  CHECK(std::sqrt(mean_power(obpf(outband, 50e9).samples)) < 1e-12);
  CHECK_THROWS_AS(obpf(in, 64e9), std::invalid_argument);

  Waveform noise;
  noise.sample_rate = rate;
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int k = 0; k < (1 << 18); ++k) noise.samples.push_back(cplx(g(rng), g(rng)));
  double ratio = mean_power(obpf(noise, 16e9).samples) / mean_power(noise.samples);
  CHECK(std::abs(ratio - 0.25) < 0.01);
}

TEST_CASE("recirculating loop") {
  Waveform w = random_waveform(4096, 64e9, 9);
  for (auto& v : w.samples) v *= std::sqrt(1.778);  // 2.5 dBm
  LinkConfig cfg;
  cfg.loops = 0;
  CHECK(recirculate(w, cfg).empty());

  // Default plan: one tap per 75 km span, so tap 30 sits at 2250 km.
  LinkConfig d;
  CHECK(d.spans_per_loop * d.span_length * 30 == doctest::Approx(2250.0));

  cfg.loops = 3;
  auto taps = recirculate(w, cfg);
  REQUIRE(taps.size() == 3);
  const double hnu = 6.62607015e-34 * 299792458.0 / 1550e-9;
  double g = std::pow(10.0, cfg.span_loss_db() / 10.0);
  double nf = std::pow(10.0, cfg.edfa_noise_figure / 10.0);
  double ase = (nf * g - 1) / 2 * hnu * 64e9 * (50.0 / 64.0);
  for (int k = 0; k < 3; ++k) {
    double p = mean_power(taps[k].samples);
    double expect = mean_power(w.samples) + (k + 1) * ase;
    CHECK(std::abs(p / expect - 1.0) < 0.01);
  }
  auto again = recirculate(w, cfg);
  CHECK(again[2].samples == taps[2].samples);
  cfg.rng_seed = 2;
  CHECK(recirculate(w, cfg)[2].samples != taps[2].samples);
}
