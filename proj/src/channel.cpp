#include "pnft/channel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

#include "pnft/fft.hpp"

namespace pnft {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kPlanck = 6.62607015e-34;
constexpr double kLight = 299792458.0;

// Coefficients of A_Z = i (beta2/2) w^2 A - (alpha/2) A + i gamma |A|^2 A in
// spectral form, in whatever consistent units the caller uses.
struct Medium {
  double beta2;
  double gamma;
  double alpha;
};

double peak_power(const std::vector<cplx>& a) {
  double p = 0.0;
  for (cplx v : a) p = std::max(p, std::norm(v));
  return p;
}

// Symmetric split step over length. Steps are taken from the ladder
// length * 2^(-k/4) so the half-step dispersion factors can be reused.
void split_step(std::vector<cplx>& a, double dt, const Medium& m, double length,
                double max_phase) {
  const int n = static_cast<int>(a.size());
  fft::Plan plan(n);
  std::vector<double> w2(n);
  for (int k = 0; k < n; ++k) {
    double w = 2 * kPi * fft::bin_index(k, n) / (n * dt);
    w2[k] = w * w;
  }
  auto half_factor = [&](double h) {
    std::vector<cplx> f(n);
    for (int k = 0; k < n; ++k)
      f[k] = std::exp(cplx(-0.25 * m.alpha * h, 0.25 * m.beta2 * w2[k] * h)) / static_cast<double>(n);
    return f;
  };
  std::map<int, std::vector<cplx>> cache;
  auto linear = [&](const std::vector<cplx>& f) {
    plan.forward(a.data());
    for (int k = 0; k < n; ++k) a[k] *= f[k];
    plan.inverse(a.data());
  };

  double z = 0.0;
  while (z < length * (1 - 1e-14)) {
    const double rest = length - z;
    double bound = rest;
    double peak = peak_power(a);
    if (m.gamma != 0.0 && peak > 0.0) bound = max_phase / (std::abs(m.gamma) * peak);
    const std::vector<cplx>* f;
    std::vector<cplx> tail;
    double h;
    int k = bound >= length ? 0 : static_cast<int>(std::ceil(-4.0 * std::log2(bound / length)));
    h = length * std::exp2(-k / 4.0);
    if (h >= rest) {
      h = rest;
      tail = half_factor(h);
      f = &tail;
    } else {
      auto it = cache.find(k);
      if (it == cache.end()) it = cache.emplace(k, half_factor(h)).first;
      f = &it->second;
    }
    linear(*f);
    if (m.gamma != 0.0)
      for (cplx& v : a) v *= std::polar(1.0, m.gamma * std::norm(v) * h);
    linear(*f);
    z += h;
  }
}

void check_alias(const std::vector<cplx>& a) {
  double f = high_band_fraction(a);
  if (f >= 0.01)
    throw std::invalid_argument("aliasing guard: " + std::to_string(100 * f) +
                                "% of energy above 80% of Nyquist");
}

}  // namespace

void Waveform::validate() const {
  if (samples.empty()) throw std::invalid_argument("waveform is empty");
  if (!(sample_rate > 0.0)) throw std::invalid_argument("sample rate must be positive");
}

void LinkConfig::validate() const {
  if (!(span_length > 0.0)) throw std::invalid_argument("span_length must be positive");
  if (spans_per_loop < 1) throw std::invalid_argument("spans_per_loop must be at least 1");
  if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be non-negative");
  if (!(beta2 < 0.0)) throw std::invalid_argument("beta2 must be negative");
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
  if (!(edfa_noise_figure >= 0.0)) throw std::invalid_argument("noise figure must be non-negative");
  if (!(obpf_bandwidth > 0.0)) throw std::invalid_argument("obpf_bandwidth must be positive");
  if (loops < 0) throw std::invalid_argument("loops must be non-negative");
  if (!(max_phase_step > 0.0)) throw std::invalid_argument("max_phase_step must be positive");
  if (!(wavelength > 0.0)) throw std::invalid_argument("wavelength must be positive");
}

double alpha_per_km(double alpha_db) { return alpha_db * std::log(10.0) / 10.0; }

double gamma_effective(double gamma, double alpha_db, double span_length) {
  double x = alpha_per_km(alpha_db) * span_length;
  if (x < 1e-8) return gamma * (1 - x / 2);
  return gamma * -std::expm1(-x) / x;
}

double high_band_fraction(const std::vector<cplx>& samples) {
  const int n = static_cast<int>(samples.size());
  std::vector<cplx> X = fft::forward(samples);
  double total = 0.0, high = 0.0;
  for (int k = 0; k < n; ++k) {
    double e = std::norm(X[k]);
    total += e;
    if (std::abs(fft::bin_index(k, n)) > 0.8 * n / 2.0) high += e;
  }
  return total > 0.0 ? high / total : 0.0;
}

Waveform ssfm_span(const Waveform& w, const LinkConfig& cfg, bool lossless) {
  // Only what the solver needs; zero alpha, beta2 or gamma isolate single effects.
  w.validate();
  if (!(cfg.span_length > 0.0) || !(cfg.max_phase_step > 0.0) || cfg.alpha < 0.0)
    throw std::invalid_argument("span_length and max_phase_step must be positive, alpha non-negative");
  if (w.units != Units::physical) throw std::invalid_argument("ssfm_span needs a physical waveform");
  check_alias(w.samples);
  // Time in ps, length in km, power in W.
  Medium m{cfg.beta2, cfg.gamma, alpha_per_km(cfg.alpha)};
  if (lossless) {
    m.gamma = gamma_effective(cfg.gamma, cfg.alpha, cfg.span_length);
    m.alpha = 0.0;
  }
  Waveform out = w;
  split_step(out.samples, 1e12 / w.sample_rate, m, cfg.span_length, cfg.max_phase_step);
  return out;
}

Waveform propagate(const Waveform& w, double distance, double max_phase_step) {
  w.validate();
  if (w.units != Units::dimensionless) throw std::invalid_argument("propagate needs a dimensionless waveform");
  if (distance < 0.0) throw std::invalid_argument("distance must be non-negative");
  check_alias(w.samples);
  Waveform out = w;
  if (distance > 0.0) split_step(out.samples, w.dt(), Medium{-1.0, 1.0, 0.0}, distance, max_phase_step);
  return out;
}

Waveform edfa(const Waveform& w, double gain_db, double noise_figure_db, std::mt19937_64& rng,
              double wavelength) {
  w.validate();
  if (gain_db < 0.0) throw std::invalid_argument("edfa gain must be at least 0 dB");
  const double g = std::pow(10.0, gain_db / 10.0);
  Waveform out = w;
  for (cplx& v : out.samples) v *= std::sqrt(g);
  if (g <= 1.0) return out;
  const double nf = std::pow(10.0, noise_figure_db / 10.0);
  const double nsp = std::max(0.0, (nf * g - 1.0) / (2.0 * (g - 1.0)));
  if (nsp == 0.0) return out;
  const double nu = kLight / wavelength;
  const double var = nsp * kPlanck * nu * (g - 1.0) * w.sample_rate;
  std::normal_distribution<double> gauss(0.0, std::sqrt(var / 2.0));
  for (cplx& v : out.samples) {
    double re = gauss(rng);
    double im = gauss(rng);
    v += cplx(re, im);
  }
  return out;
}

Waveform obpf(const Waveform& w, double bandwidth) {
  w.validate();
  if (!(bandwidth > 0.0) || bandwidth >= w.sample_rate)
    throw std::invalid_argument("obpf bandwidth must lie in (0, sample_rate)");
  const int n = static_cast<int>(w.size());
  std::vector<cplx> X = fft::forward(w.samples);
  for (int k = 0; k < n; ++k)
    if (std::abs(fft::bin_index(k, n) * w.sample_rate / n) > bandwidth / 2) X[k] = 0.0;
  Waveform out = w;
  out.samples = fft::inverse(X);
  return out;
}

std::vector<Waveform> recirculate(const Waveform& w, const LinkConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.rng_seed);
  std::vector<Waveform> taps;
  Waveform cur = w;
  for (int loop = 0; loop < cfg.loops; ++loop) {
    for (int s = 0; s < cfg.spans_per_loop; ++s) {
      cur = ssfm_span(cur, cfg, false);
      cur = edfa(cur, cfg.span_loss_db(), cfg.amplifier_noise ? cfg.edfa_noise_figure : -HUGE_VAL, rng, cfg.wavelength);
    }
    cur = obpf(cur, cfg.obpf_bandwidth * 1e9);
    taps.push_back(cur);
  }
  return taps;
}

double linear_broadening(double beta2, double distance, double bandwidth) {
  if (distance < 0.0 || bandwidth < 0.0)
    throw std::invalid_argument("distance and bandwidth must be non-negative");
  return 2 * kPi * std::abs(beta2) * 1e-24 * distance * bandwidth;
}

double mean_power(const std::vector<cplx>& x) {
  if (x.empty()) return 0.0;
  double s = 0.0;
  for (cplx v : x) s += std::norm(v);
  return s / static_cast<double>(x.size());
}

double watts_to_dbm(double p) { return 10.0 * std::log10(p / 1e-3); }

double dbm_to_watts(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }

}  // namespace pnft
