#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace pnft {

using cplx = std::complex<double>;

enum class Units { physical, dimensionless };

// Physical waveforms carry sqrt(W) samples at a rate in Hz; dimensionless ones
// carry NLSE samples with sample_rate = 1 / dt.
struct Waveform {
  std::vector<cplx> samples;
  double sample_rate = 1.0;
  Units units = Units::physical;
  std::optional<double> center_power_ref;  // dBm

  std::size_t size() const { return samples.size(); }
  double dt() const { return 1.0 / sample_rate; }
  void validate() const;
};

struct LinkConfig {
  double span_length = 75.0;       // km
  int spans_per_loop = 1;          // one tap per span
  double alpha = 0.2;              // dB/km
  double beta2 = -18.9;            // ps^2/km
  double gamma = 1.3;              // 1/(W km)
  double edfa_noise_figure = 5.0;  // dB
  double obpf_bandwidth = 50.0;    // GHz
  int loops = 40;
  std::uint64_t rng_seed = 1;
  double max_phase_step = 1e-3;    // rad of peak nonlinear phase per step
  double wavelength = 1550e-9;     // m
  bool amplifier_noise = true;     // false: noiseless gain, for isolating fiber effects

  void validate() const;
  double span_loss_db() const { return alpha * span_length; }
};

// Attenuation in 1/km from dB/km.
double alpha_per_km(double alpha_db);

// gamma (1 - exp(-a L)) / (a L) with a in 1/km.
double gamma_effective(double gamma, double alpha_db, double span_length);

// Fraction of energy above 80% of the Nyquist frequency.
double high_band_fraction(const std::vector<cplx>& samples);

// One span of i A_Z = (beta2/2) A_TT - i (alpha/2) A - gamma |A|^2 A by the
// symmetric split-step method. The lossless model drops alpha and uses gamma_eff.
Waveform ssfm_span(const Waveform& w, const LinkConfig& cfg, bool lossless);

// Lossless dimensionless propagation of i u_z + u_tt / 2 + |u|^2 u = 0.
Waveform propagate(const Waveform& w, double distance, double max_phase_step = 1e-3);

// Amplification by gain_db with circular Gaussian ASE in one polarization.
Waveform edfa(const Waveform& w, double gain_db, double noise_figure_db, std::mt19937_64& rng,
              double wavelength = 1550e-9);

// Ideal brick-wall filter of total width bandwidth (Hz) centered at baseband.
Waveform obpf(const Waveform& w, double bandwidth);

// Waveform after each loop; loops = 0 gives an empty list.
std::vector<Waveform> recirculate(const Waveform& w, const LinkConfig& cfg);

// 2 pi |beta2| L B in seconds, beta2 in ps^2/km, distance in km, bandwidth in Hz.
double linear_broadening(double beta2, double distance, double bandwidth);

double mean_power(const std::vector<cplx>& x);
double watts_to_dbm(double p);
double dbm_to_watts(double dbm);

}  // namespace pnft
