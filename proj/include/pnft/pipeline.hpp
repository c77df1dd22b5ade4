#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pnft/channel.hpp"
#include "pnft/rx_dsp.hpp"
#include "pnft/signal_design.hpp"

namespace pnft {

struct RunConfig {
  DesignTemplate design;
  FrameLayout layout;
  LinkConfig link;
  RxOptions rx;
  int symbols = 1000;
  std::uint64_t bits_seed = 7;
  int guard = 256;            // zero samples on each side of the frame
  int single_symbol = -1;     // >= 0 repeats this label instead of random bits
  double cfo_hz = 0.0;        // deterministic offset applied before the receiver
  bool sync_cd = true;        // dispersion-compensated copy for synchronization
  std::string table_path;     // empty: design from the template
  std::string output_dir = "pnft_out";

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
};

std::vector<int> frame_bits(const RunConfig& cfg);

// Reads table_path when set, otherwise designs from the template.
SymbolTable load_or_design(const RunConfig& cfg);

// Frame with preamble, padded by cfg.guard zeros on both sides.
Waveform transmit(const SymbolTable& table, const std::vector<int>& bits, const RunConfig& cfg);

struct RunResult {
  std::vector<int> bits;
  PowerBandwidth tx;
  std::vector<int> spans;               // span count of each report
  std::vector<DecisionReport> reports;  // one per tap, or one back-to-back row when loops = 0
};

using Progress = std::function<void(int spans, const DecisionReport&)>;

RunResult run_link(const RunConfig& cfg, const SymbolTable& table, const Progress& progress = {});

// Receiver applied to one tap after the given number of spans.
DecisionReport receive_tap(const Waveform& tap, const SymbolTable& table, const std::vector<int>& bits,
                           const RunConfig& cfg, int spans);

}  // namespace pnft
