#pragma once

#include <vector>

#include "pnft/channel.hpp"
#include "pnft/finite_gap.hpp"

namespace pnft {

// Dimensionless <-> physical scales: t = T / T0, z = Z / L0, psi = A / sqrt(P0).
struct UnitMap {
  double T0 = 1.0;  // s
  double L0 = 1.0;  // m
  double P0 = 1.0;  // W

  // beta2 in ps^2/km, gamma_eff in 1/(W km).
  static UnitMap from_time_scale(double T0, double beta2, double gamma_eff);
  void validate() const;
  double time_to_physical(double t) const { return t * T0; }
  double time_to_dimensionless(double T) const { return T / T0; }
  double length_to_physical(double z) const { return z * L0; }
  double length_to_dimensionless(double Z) const { return Z / L0; }
  double amplitude_scale() const;  // sqrt(P0)
};

// Spectra {-d + i hL eta, x + i hM eta, d + i hR eta}; x is solved so the
// smaller frequency vanishes. The second level uses eta * level_ratio.
struct DesignTemplate {
  double d = 0.5;
  double h_left = 0.7;
  double h_mid = 1.0;
  double h_right = 1.0;
  double level_ratio = 0.65;
  double eta = 0.0;         // 0: solve eta for the launch power
  double x_lo = 0.0;        // bracket for the middle real part, in units of d
  double x_hi = 0.9;
  double shift = 0.0;       // real spectral shift at the common period, rounded to a multiple of 1/2
  bool align_velocity = true;  // whole-harmonic shifts so every envelope moves with symbol 0
  double min_distance_floor = 0.1;
};

struct FrameLayout {
  double symbol_period = 1e-9;  // s, CP included
  double sample_rate = 64e9;    // Hz
  int samples_per_symbol = 64;
  int cp_len = 32;
  double launch_power = 2.5;    // dBm
  int max_symbols = 1000;
  unsigned preamble_seed = 2024;

  int body_len() const { return samples_per_symbol - cp_len; }
  double body_duration() const { return body_len() / sample_rate; }
  void validate() const;
};

// Common dimensionless amplitude period of every symbol.
double design_period();

struct SymbolDefinition {
  int bits = 0;                  // MSB: amplitude level, LSB: mirror
  MainSpectrum spectrum;         // at the common period, after removing the carrier offset
  FiniteGapParams params;        // quasi-periodic, scaled and boosted
  std::vector<cplx> body_samples;  // one period, dimensionless
  int cp_len = 0;
  double phase_offset = 0.0;     // rad, applied before cumulative matching
  int join_index = 0;            // amplitude minimum of the body
};

struct SymbolTable {
  std::vector<SymbolDefinition> symbols;  // indexed by bits
  FrameLayout layout;
  UnitMap units;
  double min_distance_floor = 0.1;
  // Dimensionless angular frequency applied to the symbol section of a frame,
  // a multiple of 1/2 set by the velocity alignment.
  double carrier_offset = 0.0;

  double carrier_offset_hz() const;

  int body_len() const { return layout.body_len(); }
  // Smallest sqrt(decision metric) between two distinct symbols.
  double min_distance() const;
  // Mean power (W) of a frame where every symbol is equally likely.
  double ensemble_power() const;
  // Throws std::invalid_argument naming the violated invariant.
  void validate() const;
};

// Metric min over permutations of sum |a_k - b_perm(k)|^2 for equal-length lists.
double spectral_distance(const std::vector<cplx>& a, const std::vector<cplx>& b);

struct TemplateLevel {
  double x = 0.0;
  MainSpectrum spectrum;
  FiniteGapParams params;  // raw, before quasi-periodization
};

// Solves the middle real part for one height scale; throws when no root is bracketed.
TemplateLevel solve_level(const DesignTemplate& t, double eta);

// Builds the four-symbol table. Throws std::runtime_error naming the failing metric.
SymbolTable design_constellation(const DesignTemplate& t, const LinkConfig& link,
                                 const FrameLayout& layout = {});

// Applies psi -> a psi(a^2 z, a t) so the amplitude period becomes period.
FiniteGapParams scale_to_period(const FiniteGapParams& p, double period);

// Scales to the common dimensionless period and records the matching T0 in units.
FiniteGapParams scale_to_physical(const FiniteGapParams& p, UnitMap& units, const FrameLayout& layout,
                                  const LinkConfig& link);

// body_len uniform samples of psi(0, t) over one amplitude period.
std::vector<cplx> sample_symbol(const FiniteGapParams& p, int body_len);

struct AssembleOptions {
  bool preamble = true;
  bool phase_matching = true;
};

// Physical frame at layout.sample_rate. bits are consumed two at a time, MSB first.
Waveform assemble_frame(const SymbolTable& table, const std::vector<int>& bits,
                        const AssembleOptions& opt = {});

// Schmidl-Cox symbol of one symbol period, dimensionless and at unit mean power.
std::vector<cplx> preamble_samples(const FrameLayout& layout);

int label_of(int msb, int lsb);
std::vector<int> bits_of(int label);

struct PowerBandwidth {
  double power_dbm = 0.0;
  double bandwidth = 0.0;  // Hz, 99% energy, symmetric about the centroid
  double centroid = 0.0;   // Hz
};

PowerBandwidth power_and_bandwidth(const Waveform& w);

}  // namespace pnft
