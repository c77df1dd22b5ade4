#include "pnft/pipeline.hpp"

#include <random>
#include <stdexcept>
#include <string>

#include "pnft/io.hpp"

namespace pnft {

void RunConfig::validate() const {
  layout.validate();
  link.validate();
  if (symbols <= 0) throw std::invalid_argument("symbols must be positive");
  if (symbols > layout.max_symbols)
    throw std::invalid_argument("symbols exceeds layout.max_symbols (" + std::to_string(layout.max_symbols) + ")");
  if (guard < 0) throw std::invalid_argument("guard must be non-negative");
  if (single_symbol < -1 || single_symbol > 3) throw std::invalid_argument("single_symbol must be -1 or a label 0..3");
  if (!(design.d > 0.0)) throw std::invalid_argument("design.d must be positive");
  if (!(design.h_left > 0.0 && design.h_mid > 0.0 && design.h_right > 0.0))
    throw std::invalid_argument("design heights must be positive");
  if (!(design.level_ratio > 0.0 && design.level_ratio < 1.0))
    throw std::invalid_argument("design.level_ratio must lie in (0, 1)");
  if (!(design.x_lo < design.x_hi)) throw std::invalid_argument("design.x_lo must be below design.x_hi");
  if (!(design.min_distance_floor >= 0.0)) throw std::invalid_argument("design.min_distance_floor must be non-negative");
  if (!(rx.sample_rate >= 0.0)) throw std::invalid_argument("rx.sample_rate must be non-negative");
  if (rx.slice.oversample_to <= 0) throw std::invalid_argument("rx.oversample_to must be positive");
  if (rx.roots.nx < 2 || rx.roots.ny < 2) throw std::invalid_argument("rx.root_grid needs at least 2 x 2 cells");
  if (!(rx.roots.tol > 0.0)) throw std::invalid_argument("rx.root_tol must be positive");
  if (output_dir.empty()) throw std::invalid_argument("output_dir must not be empty");
}

std::vector<int> frame_bits(const RunConfig& cfg) {
  std::vector<int> bits;
  bits.reserve(2 * cfg.symbols);
  if (cfg.single_symbol >= 0) {
    std::vector<int> b = bits_of(cfg.single_symbol);
    for (int k = 0; k < cfg.symbols; ++k) bits.insert(bits.end(), b.begin(), b.end());
    return bits;
  }
  std::mt19937_64 rng(cfg.bits_seed);
  std::bernoulli_distribution coin(0.5);
  for (int k = 0; k < 2 * cfg.symbols; ++k) bits.push_back(coin(rng) ? 1 : 0);
  return bits;
}

SymbolTable load_or_design(const RunConfig& cfg) {
  if (!cfg.table_path.empty()) return io::read_table(cfg.table_path);
  return design_constellation(cfg.design, cfg.link, cfg.layout);
}

Waveform transmit(const SymbolTable& table, const std::vector<int>& bits, const RunConfig& cfg) {
  Waveform f = assemble_frame(table, bits);
  Waveform w = f;
  w.samples.assign(cfg.guard, 0.0);
  w.samples.insert(w.samples.end(), f.samples.begin(), f.samples.end());
  w.samples.insert(w.samples.end(), cfg.guard, 0.0);
  return w;
}

DecisionReport receive_tap(const Waveform& tap, const SymbolTable& table, const std::vector<int>& bits,
                           const RunConfig& cfg, int spans) {
  RxOptions rx = cfg.rx;
  const double km = spans * cfg.link.span_length;
  rx.beta2 = cfg.link.beta2;
  rx.sync_cd_km = cfg.sync_cd ? km : 0.0;
  // The deterministic offset stands in for the frequency shift of the loop hardware.
  Waveform in = cfg.cfo_hz != 0.0 ? cfo_compensate(tap, -cfg.cfo_hz) : tap;
  DecisionReport r = receive(in, table, bits, rx);
  r.distance_km = km;
  return r;
}

RunResult run_link(const RunConfig& cfg, const SymbolTable& table, const Progress& progress) {
  cfg.validate();
  RunResult out;
  out.bits = frame_bits(cfg);
  Waveform tx = transmit(table, out.bits, cfg);
  out.tx = power_and_bandwidth(assemble_frame(table, out.bits));
  auto emit = [&](int spans, DecisionReport r) {
    if (progress) progress(spans, r);
    out.spans.push_back(spans);
    out.reports.push_back(std::move(r));
  };
  if (cfg.link.loops == 0) {
    emit(0, receive_tap(tx, table, out.bits, cfg, 0));
    return out;
  }
  std::vector<Waveform> taps = recirculate(tx, cfg.link);
  for (std::size_t k = 0; k < taps.size(); ++k) {
    int spans = static_cast<int>(k + 1) * cfg.link.spans_per_loop;
    emit(spans, receive_tap(taps[k], table, out.bits, cfg, spans));
    taps[k] = Waveform{};  // release memory as we go
  }
  return out;
}

}  // namespace pnft
