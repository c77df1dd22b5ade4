#include "pnft/rx_dsp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "pnft/fft.hpp"

namespace pnft {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Samples per frame-layout sample at rate; throws unless the ratio is integral per symbol.
int scaled_count(int n, double rate, double layout_rate, const char* what) {
  double v = n * rate / layout_rate;
  int r = static_cast<int>(std::lround(v));
  if (std::abs(v - r) > 1e-9 * std::max(1.0, v))
    throw std::invalid_argument(std::string(what) + " is not an integer number of samples at the receiver rate");
  return r;
}

// Smallest permutation metric of recv against ref, with the matching order.
double matched(const std::vector<cplx>& recv, const std::vector<cplx>& ref, std::array<int, 3>& best) {
  std::array<int, 3> p{0, 1, 2};
  double out = HUGE_VAL;
  do {
    double s = 0.0;
    for (int k = 0; k < 3; ++k) s += std::norm(ref[k] - recv[p[k]]);
    if (s < out) {
      out = s;
      best = p;
    }
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

cplx centroid(const SearchBox& b) { return cplx(0.5 * (b.re_min + b.re_max), 0.5 * (b.im_min + b.im_max)); }

// Pads to three points at the box centroid; returns the number of missing points.
int padded(const std::vector<cplx>& in, const SearchBox& box, std::vector<cplx>& out) {
  out = in;
  if (out.size() > 3) out.resize(3);
  int missing = 3 - static_cast<int>(out.size());
  while (out.size() < 3) out.push_back(centroid(box));
  return missing;
}

// Three points well clear of the real axis, as expected from a clean symbol.
bool plausible(const SpectrumEstimate& e, double im_floor) {
  if (e.points.size() < 3) return false;
  for (int k = 0; k < 3; ++k)
    if (e.points[k].imag() < im_floor) return false;
  return true;
}

}  // namespace

std::vector<double> schmidl_cox_metric(const Waveform& w, int half_len) {
  w.validate();
  if (half_len <= 0) throw std::invalid_argument("half length must be positive");
  const auto& r = w.samples;
  const int n = static_cast<int>(r.size());
  const int L = half_len;
  if (n < 2 * L) return {};
  std::vector<double> m(n - 2 * L + 1, 0.0);
  const double level = mean_power(r);
  // Running sums over the window [d, d + 2L); R is the mean energy of the two
  // halves, so the metric stays in [0, 1] where the frame fades into silence.
  cplx P = 0.0;
  double R = 0.0;
  for (int k = 0; k < L; ++k) {
    P += std::conj(r[k]) * r[k + L];
    R += 0.5 * (std::norm(r[k]) + std::norm(r[k + L]));
  }
  for (int d = 0;; ++d) {
    // Near-silence (guard intervals, interpolation ripple) must not read as a match.
    if (R > 1e-2 * L * level) m[d] = std::norm(P) / (R * R);
    if (d + 2 * L >= n) break;
    P += std::conj(r[d + L]) * r[d + 2 * L] - std::conj(r[d]) * r[d + L];
    R += 0.5 * (std::norm(r[d + 2 * L]) - std::norm(r[d]));
  }
  return m;
}

SyncResult schmidl_cox_sync(const Waveform& w, int half_len, std::ptrdiff_t max_offset) {
  std::vector<double> m = schmidl_cox_metric(w, half_len);
  if (max_offset >= 0 && static_cast<std::size_t>(max_offset) + 1 < m.size()) m.resize(max_offset + 1);
  if (m.empty()) throw std::runtime_error("no preamble found");
  // Symbols whose prefix spans half the slot also consist of two identical
  // halves, so take the first crossing after silence and the peak just behind it.
  auto first = std::find_if(m.begin(), m.end(), [](double v) { return v >= 0.5; });
  if (first == m.end()) throw std::runtime_error("no preamble found");
  auto it = std::max_element(first, first + std::min<std::ptrdiff_t>(half_len, m.end() - first));
  SyncResult out;
  out.offset = it - m.begin();
  out.metric = *it;
  cplx P = 0.0;
  for (int k = 0; k < half_len; ++k) P += std::conj(w.samples[out.offset + k]) * w.samples[out.offset + k + half_len];
  out.cfo_hz = std::arg(P) / (2 * kPi * half_len / w.sample_rate);
  return out;
}

Waveform cfo_compensate(const Waveform& w, double cfo_hz) {
  w.validate();
  Waveform out = w;
  if (cfo_hz == 0.0) return out;
  const double step = -2 * kPi * cfo_hz / w.sample_rate;
  for (std::size_t k = 0; k < out.samples.size(); ++k) out.samples[k] *= std::polar(1.0, step * double(k));
  return out;
}

double prefix_cfo(const Waveform& data, const SymbolTable& table, int count) {
  data.validate();
  const FrameLayout& lay = table.layout;
  const int sps = scaled_count(lay.samples_per_symbol, data.sample_rate, lay.sample_rate, "symbol");
  const int cp = scaled_count(lay.cp_len, data.sample_rate, lay.sample_rate, "cyclic prefix");
  const int body = sps - cp;
  if (cp == 0) throw std::invalid_argument("prefix CFO needs a cyclic prefix");
  count = std::min<long>(count, static_cast<long>(data.size()) / sps);
  cplx c = 0.0;
  for (int s = 0; s < count; ++s) {
    const std::size_t a = static_cast<std::size_t>(s) * sps;
    for (int n = 0; n < cp; ++n) c += std::conj(data.samples[a + n]) * data.samples[a + n + body];
  }
  // The carrier offset turns by a known angle over one body.
  c *= std::polar(1.0, -table.carrier_offset * design_period());
  if (c == 0.0) return 0.0;
  return std::arg(c) / (2 * kPi * body / data.sample_rate);
}

Waveform dispersion_compensate(const Waveform& w, double beta2, double distance) {
  w.validate();
  Waveform out = w;
  if (beta2 == 0.0 || distance == 0.0) return out;
  const int n = static_cast<int>(w.size());
  std::vector<cplx> X = fft::forward(w.samples);
  for (int k = 0; k < n; ++k) {
    double om = 2 * kPi * fft::bin_index(k, n) * w.sample_rate / n * 1e-12;  // rad/ps
    X[k] *= std::polar(1.0, -beta2 / 2 * om * om * distance);
  }
  out.samples = fft::inverse(X);
  return out;
}

std::vector<std::vector<cplx>> slice_and_normalize(const Waveform& w, const SymbolTable& table, int count,
                                                   const SliceOptions& opt) {
  w.validate();
  const FrameLayout& lay = table.layout;
  if (count < 0) throw std::invalid_argument("symbol count must be non-negative");
  if (opt.oversample_to <= 0) throw std::invalid_argument("oversample_to must be positive");
  const int sps = scaled_count(lay.samples_per_symbol, w.sample_rate, lay.sample_rate, "symbol");
  const int cp = scaled_count(lay.cp_len, w.sample_rate, lay.sample_rate, "cyclic prefix");
  const int body = sps - cp;
  const int off = opt.window_offset < 0 ? cp / 2 : opt.window_offset;
  if (off + body > sps + cp) throw std::invalid_argument("window offset reaches past the next prefix");
  if (count > 0 && static_cast<long>(w.size()) < static_cast<long>(count - 1) * sps + off + body)
    throw std::runtime_error("frame shorter than declared symbol count");
  const double a = w.units == Units::physical ? 1.0 / table.units.amplitude_scale() : 1.0;
  std::vector<std::vector<cplx>> out;
  out.reserve(count);
  for (int s = 0; s < count; ++s) {
    auto first = w.samples.begin() + static_cast<long>(s) * sps + off;
    std::vector<cplx> b(first, first + body);
    for (auto& v : b) v *= a;
    out.push_back(opt.oversample_to == body ? b : fft::resample(b, opt.oversample_to));
  }
  return out;
}

SearchBox constellation_box(const SymbolTable& table) {
  double r0 = HUGE_VAL, r1 = -HUGE_VAL, i0 = HUGE_VAL, i1 = -HUGE_VAL;
  for (const auto& s : table.symbols)
    for (cplx p : s.spectrum.points) {
      r0 = std::min(r0, p.real());
      r1 = std::max(r1, p.real());
      i0 = std::min(i0, p.imag());
      i1 = std::max(i1, p.imag());
    }
  if (!(r0 <= r1)) throw std::invalid_argument("empty symbol table");
  double grow = 0.5 * std::max(r1 - r0, i1 - i0);
  return SearchBox{r0 - grow, r1 + grow, std::max(0.05 * i0, i0 - grow), i1 + grow};
}

Decision decide(const SpectrumEstimate& recv, const SymbolTable& table, const SearchBox& box) {
  if (table.symbols.empty()) throw std::invalid_argument("empty symbol table");
  std::vector<cplx> pts;
  int missing = padded(recv.points, box, pts);
  Decision d;
  d.distance = HUGE_VAL;
  std::array<int, 3> perm{};
  for (std::size_t s = 0; s < table.symbols.size(); ++s) {
    double m = matched(pts, table.symbols[s].spectrum.points, perm);
    if (m < d.distance) {
      d.distance = m;
      d.label = static_cast<int>(s);
    }
  }
  if (missing > 0) {
    double pen = 10.0 * table.min_distance();
    d.distance += missing * pen * pen;
    d.reliable = false;
  }
  return d;
}

Decision decide(const SpectrumEstimate& recv, const SymbolTable& table) {
  return decide(recv, table, constellation_box(table));
}

SpectrumEstimate estimate_spectrum(const std::vector<cplx>& period, const SymbolTable& table,
                                   const RootSearchOptions& opt) {
  const double dt = design_period() / period.size();
  double im_low = HUGE_VAL;
  for (const auto& s : table.symbols)
    for (cplx p : s.spectrum.points) im_low = std::min(im_low, p.imag());
  const double floor = 0.3 * im_low;

  // Stored points of each symbol in turn, then all of them together, then the grid.
  std::vector<cplx> all;
  for (const auto& s : table.symbols) {
    SpectrumEstimate e = reduce_spectrum(refine_main_spectrum(period, dt, s.spectrum.points, opt), 3);
    if (plausible(e, floor)) return e;
    all.insert(all.end(), s.spectrum.points.begin(), s.spectrum.points.end());
  }
  SpectrumEstimate e = reduce_spectrum(refine_main_spectrum(period, dt, all, opt), 3);
  if (plausible(e, floor)) return e;
  return reduce_spectrum(find_main_spectrum(period, dt, constellation_box(table), opt), 3);
}

double ber(const std::vector<int>& tx_bits, const std::vector<int>& rx_bits) {
  if (tx_bits.size() != rx_bits.size()) throw std::invalid_argument("bit sequences differ in length");
  if (tx_bits.empty()) return 0.0;
  std::size_t e = 0;
  for (std::size_t k = 0; k < tx_bits.size(); ++k) e += (tx_bits[k] != 0) != (rx_bits[k] != 0);
  return double(e) / tx_bits.size();
}

double evm(const std::vector<SymbolDecision>& decisions, const std::vector<int>& tx_labels,
           const SymbolTable& table) {
  if (decisions.size() != tx_labels.size()) throw std::invalid_argument("decision and label counts differ");
  if (decisions.empty()) return 0.0;
  SearchBox box = constellation_box(table);
  double num = 0.0, den = 0.0;
  std::array<int, 3> perm{};
  for (std::size_t k = 0; k < decisions.size(); ++k) {
    const auto& ref = table.symbols.at(tx_labels[k]).spectrum.points;
    std::vector<cplx> pts;
    padded(decisions[k].points, box, pts);
    num += matched(pts, ref, perm);
    for (cplx p : ref) den += std::norm(p);
  }
  return std::sqrt(num / den);
}

std::vector<double> evm_curve(const std::vector<DecisionReport>& reports) {
  std::vector<double> out;
  for (const auto& r : reports) out.push_back(r.evm);
  return out;
}

std::vector<int> labels_of_bits(const std::vector<int>& bits) {
  if (bits.size() % 2 != 0) throw std::invalid_argument("bit count must be even");
  std::vector<int> out;
  for (std::size_t k = 0; k < bits.size(); k += 2) out.push_back(label_of(bits[k], bits[k + 1]));
  return out;
}

DecisionReport receive(const Waveform& w, const SymbolTable& table, const std::vector<int>& tx_bits,
                       const RxOptions& opt) {
  w.validate();
  const FrameLayout& lay = table.layout;
  const std::vector<int> tx_labels = labels_of_bits(tx_bits);
  const int count = static_cast<int>(tx_labels.size());

  Waveform r = w;
  if (opt.sample_rate > 0.0 && opt.sample_rate != w.sample_rate) {
    int m = scaled_count(static_cast<int>(w.size()), opt.sample_rate, w.sample_rate, "waveform");
    r.samples = fft::resample(w.samples, m);
    r.sample_rate = opt.sample_rate;
  }
  const int half = scaled_count(lay.samples_per_symbol / 2, r.sample_rate, lay.sample_rate, "preamble half");

  DecisionReport rep;
  rep.tx_bits = tx_bits;
  Waveform probe = opt.sync_cd_km > 0.0 ? dispersion_compensate(r, opt.beta2, opt.sync_cd_km) : r;
  const int sps = scaled_count(lay.samples_per_symbol, r.sample_rate, lay.sample_rate, "symbol");
  const std::ptrdiff_t last = static_cast<std::ptrdiff_t>(r.size()) - 2 * half - static_cast<std::ptrdiff_t>(count) * sps;
  if (last < 0) throw std::runtime_error("frame shorter than declared symbol count");
  rep.sync = schmidl_cox_sync(probe, half, last);
  if (opt.fine_timing) {
    // Cross-correlate with the known preamble around the coarse estimate.
    std::vector<cplx> ref = fft::resample(preamble_samples(lay), 2 * half);
    std::ptrdiff_t best = rep.sync.offset;
    double top = -1.0;
    for (std::ptrdiff_t d = std::max<std::ptrdiff_t>(0, rep.sync.offset - half);
         d <= std::min(last, rep.sync.offset + half); ++d) {
      cplx c = 0.0;
      for (int k = 0; k < 2 * half; ++k) c += std::conj(ref[k]) * probe.samples[d + k];
      if (std::norm(c) > top) {
        top = std::norm(c);
        best = d;
      }
    }
    rep.sync.offset = best;
  }
  if (opt.compensate_cfo) r = cfo_compensate(r, rep.sync.cfo_hz);

  Waveform data = r;
  data.samples.assign(r.samples.begin() + rep.sync.offset + 2 * half, r.samples.end());
  if (opt.compensate_cfo && opt.prefix_cfo && lay.cp_len > 0) {
    // The preamble estimate is biased once nonlinearity has distorted it.
    const double fine = prefix_cfo(data, table, count);
    data = cfo_compensate(data, fine);
    rep.sync.cfo_hz += fine;
  }
  data = cfo_compensate(data, table.carrier_offset_hz());
  auto periods = slice_and_normalize(data, table, count, opt.slice);

  SearchBox box = constellation_box(table);
  rep.per_symbol.resize(count);
  rep.rx_bits.reserve(tx_bits.size());
  for (int k = 0; k < count; ++k) {
    SpectrumEstimate e = estimate_spectrum(periods[k], table, opt.roots);
    Decision d = decide(e, table, box);
    SymbolDecision& s = rep.per_symbol[k];
    s.points = e.points;
    s.label = d.label;
    s.distance = d.distance;
    s.reliable = d.reliable;
    if (!d.reliable) ++rep.unreliable;
    for (int b : bits_of(d.label)) rep.rx_bits.push_back(b);
  }
  rep.ber = ber(tx_bits, rep.rx_bits);
  rep.evm = evm(rep.per_symbol, tx_labels, table);
  return rep;
}

}  // namespace pnft
