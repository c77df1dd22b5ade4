#pragma once

#include <cstddef>
#include <vector>

#include "pnft/channel.hpp"
#include "pnft/pnft_forward.hpp"
#include "pnft/signal_design.hpp"

namespace pnft {

struct SyncResult {
  std::ptrdiff_t offset = 0;  // first preamble sample
  double cfo_hz = 0.0;
  double metric = 0.0;        // timing metric at the offset, in [0, 1]
};

// Timing metric |P(d)|^2 / R(d)^2 over two identical halves of half_len samples,
// with R the mean energy of the halves.
std::vector<double> schmidl_cox_metric(const Waveform& w, int half_len);

// Offset of the metric peak within half_len samples of the first crossing of 0.5,
// searching offsets up to max_offset (-1: all). Throws std::runtime_error("no preamble found")
// when the metric stays below 0.5.
SyncResult schmidl_cox_sync(const Waveform& w, int half_len, std::ptrdiff_t max_offset = -1);

// Multiplies sample n by exp(-2 pi i cfo n / rate).
Waveform cfo_compensate(const Waveform& w, double cfo_hz);

// Residual CFO of a synchronized symbol section from the phase of
// sum conj(prefix) * body tail over count symbols; range +-1 / (2 body duration).
double prefix_cfo(const Waveform& data, const SymbolTable& table, int count);

// Inverse of the linear fiber response: beta2 in ps^2/km, distance in km.
Waveform dispersion_compensate(const Waveform& w, double beta2, double distance);

struct SliceOptions {
  int oversample_to = 1024;
  int window_offset = -1;  // samples skipped at the symbol start; -1 centers the body in the slot
};

// w starts at the first symbol. Returns count dimensionless periods of oversample_to samples.
std::vector<std::vector<cplx>> slice_and_normalize(const Waveform& w, const SymbolTable& table, int count,
                                                   const SliceOptions& opt = {});

// Box around the constellation, half widths grown by half of the larger extent.
SearchBox constellation_box(const SymbolTable& table);

struct Decision {
  int label = -1;
  double distance = 0.0;
  bool reliable = true;
};

// Nearest symbol under min over permutations of sum |lambda_k - recv_k|^2.
// Missing points are replaced by the box centroid plus a penalty of ten
// times the constellation minimum distance, and the decision is flagged.
Decision decide(const SpectrumEstimate& recv, const SymbolTable& table, const SearchBox& box);
Decision decide(const SpectrumEstimate& recv, const SymbolTable& table);

struct RxOptions {
  double sample_rate = 80e9;  // receiver grid
  SliceOptions slice;
  RootSearchOptions roots;
  bool compensate_cfo = true;
  bool fine_timing = true;  // refine the Schmidl-Cox offset against the known preamble
  bool prefix_cfo = true;   // refine the CFO from the prefix/body-tail correlation of all symbols
  // Synchronization runs on a dispersion-compensated copy; data stays untouched.
  double sync_cd_km = 0.0;
  double beta2 = -18.9;
};

// Main spectrum of one period: Newton from the stored points, grid search as fallback.
SpectrumEstimate estimate_spectrum(const std::vector<cplx>& period, const SymbolTable& table,
                                   const RootSearchOptions& opt = {});

struct SymbolDecision {
  std::vector<cplx> points;
  int label = -1;
  double distance = 0.0;
  bool reliable = true;
};

struct DecisionReport {
  std::vector<int> tx_bits;
  std::vector<int> rx_bits;
  std::vector<SymbolDecision> per_symbol;
  double ber = 0.0;
  double evm = 0.0;
  double distance_km = 0.0;
  int unreliable = 0;
  SyncResult sync;
};

double ber(const std::vector<int>& tx_bits, const std::vector<int>& rx_bits);

// RMS of permutation-matched |lambda_recv - lambda_tx| over RMS |lambda_tx|.
double evm(const std::vector<SymbolDecision>& decisions, const std::vector<int>& tx_labels,
           const SymbolTable& table);

std::vector<double> evm_curve(const std::vector<DecisionReport>& reports);

std::vector<int> labels_of_bits(const std::vector<int>& bits);

// Resample to the receiver grid, synchronize, remove CFO, slice and decide.
DecisionReport receive(const Waveform& w, const SymbolTable& table, const std::vector<int>& tx_bits,
                       const RxOptions& opt = {});

}  // namespace pnft
