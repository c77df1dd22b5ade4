#include "pnft/signal_design.hpp"

#include <algorithm>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "pnft/fft.hpp"
#include "pnft/pnft_forward.hpp"

namespace pnft {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

MainSpectrum template_spectrum(const DesignTemplate& t, double x, double eta) {
  MainSpectrum s;
  s.points = {cplx(-t.d, t.h_left * eta), cplx(x, t.h_mid * eta), cplx(t.d, t.h_right * eta)};
  return s;
}

// Smaller frequency of the reduced basis, signed relative to the larger one.
double small_frequency(const FiniteGapParams& p) {
  int s = std::abs(p.Omega[0]) <= std::abs(p.Omega[1]) ? 0 : 1;
  double big = p.Omega[1 - s];
  return big >= 0.0 ? p.Omega[s] : -p.Omega[s];
}

std::vector<cplx> rotated(const std::vector<cplx>& body, int start) {
  std::vector<cplx> r(body.size());
  std::rotate_copy(body.begin(), body.begin() + start, body.end(), r.begin());
  return r;
}

// CP + body as transmitted, before any phase factor.
std::vector<cplx> symbol_samples(const SymbolDefinition& s) {
  std::vector<cplx> r = rotated(s.body_samples, s.join_index);
  std::vector<cplx> out(r.end() - s.cp_len, r.end());
  out.insert(out.end(), r.begin(), r.end());
  return out;
}

double wrap(double a) { return std::remainder(a, 2 * kPi); }

SymbolDefinition make_symbol(int bits, const FiniteGapParams& p, const std::vector<cplx>& spectrum,
                             const FrameLayout& layout) {
  SymbolDefinition s;
  s.bits = bits;
  s.spectrum.points = spectrum;
  s.params = p;
  s.cp_len = layout.cp_len;
  s.body_samples = sample_symbol(p, layout.body_len());
  int j = 0;
  for (int k = 1; k < static_cast<int>(s.body_samples.size()); ++k)
    if (std::abs(s.body_samples[k]) < std::abs(s.body_samples[j])) j = k;
  s.join_index = j;
  s.phase_offset = -std::arg(s.body_samples[j]);
  return s;
}

struct Level {
  SymbolDefinition base;
  SymbolDefinition mirrored;
};

// Quasi-periodize, scale to the common period, boost so the carrier is periodic.
Level build_level(const DesignTemplate& t, const TemplateLevel& lv, int msb, const FrameLayout& layout) {
  FiniteGapParams q = quasiperiodize(lv.params);
  double raw_period = amplitude_period(q);
  if (!(raw_period > 0.0)) throw std::runtime_error("design: quasi-periodized symbol has no finite period");
  const double a = raw_period / design_period();
  FiniteGapParams s = scale_params(q, a);
  // At period 2 pi a shift c moves Omega0 by -2c; whole turns need 2c integral
  // up to Omega0, so the user shift is rounded to a multiple of 1/2.
  double user = std::round(2 * t.shift) / 2;
  double c = (s.Omega0 - std::round(s.Omega0)) / 2 + user;
  FiniteGapParams b = galilean_shift(s, c);
  std::vector<cplx> pts;
  for (cplx x : lv.spectrum.points) pts.push_back(a * x + c);
  std::vector<cplx> mpts;
  for (cplx x : pts) mpts.push_back(-std::conj(x));
  Level out;
  out.base = make_symbol(label_of(msb, 0), b, pts, layout);
  out.mirrored = make_symbol(label_of(msb, 1), mirror_params(b), mpts, layout);
  return out;
}

double symbol_power(const SymbolDefinition& s) { return mean_power(symbol_samples(s)); }

// Boost by -n/2 moves the envelope velocity by n and keeps the carrier periodic.
SymbolDefinition shifted_harmonics(const SymbolDefinition& s, int n, const FrameLayout& layout) {
  const double c = -0.5 * n;
  std::vector<cplx> pts;
  for (cplx x : s.spectrum.points) pts.push_back(x + c);
  return make_symbol(s.bits, galilean_shift(s.params, c), pts, layout);
}

// Mean envelope velocity of the table, rounded to a half harmonic.
double centering_carrier(const std::vector<SymbolDefinition>& symbols) {
  double v = 0.0;
  for (const auto& s : symbols) v += envelope_velocity(s.params);
  v /= static_cast<double>(symbols.size());
  return -std::round(2 * v) / 2;
}

}  // namespace

UnitMap UnitMap::from_time_scale(double T0, double beta2, double gamma_eff) {
  UnitMap u;
  u.T0 = T0;
  double b2 = std::abs(beta2) * 1e-27;  // s^2/m
  u.L0 = T0 * T0 / b2;
  u.P0 = 1.0 / (gamma_eff * 1e-3 * u.L0);
  u.validate();
  return u;
}

void UnitMap::validate() const {
  if (!(T0 > 0.0 && L0 > 0.0 && P0 > 0.0)) throw std::invalid_argument("unit scales must be positive");
}

double UnitMap::amplitude_scale() const { return std::sqrt(P0); }

void FrameLayout::validate() const {
  if (!(symbol_period > 0.0) || !(sample_rate > 0.0))
    throw std::invalid_argument("symbol period and sample rate must be positive");
  if (samples_per_symbol < 4 || cp_len < 0 || cp_len >= samples_per_symbol)
    throw std::invalid_argument("need 0 <= cp_len < samples_per_symbol");
  if (std::abs(samples_per_symbol - symbol_period * sample_rate) > 1e-6)
    throw std::invalid_argument("samples_per_symbol must equal symbol_period * sample_rate");
  if (samples_per_symbol % 2 != 0) throw std::invalid_argument("samples_per_symbol must be even");
  if (max_symbols < 0) throw std::invalid_argument("max_symbols must be non-negative");
}

double design_period() { return 2 * kPi; }

double SymbolTable::carrier_offset_hz() const { return carrier_offset / (2 * kPi * units.T0); }

double spectral_distance(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("spectral_distance needs equal point counts");
  std::vector<int> perm(a.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = HUGE_VAL;
  do {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += std::norm(a[k] - b[perm[k]]);
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

double SymbolTable::min_distance() const {
  double best = HUGE_VAL;
  for (std::size_t i = 0; i < symbols.size(); ++i)
    for (std::size_t j = i + 1; j < symbols.size(); ++j)
      best = std::min(best, spectral_distance(symbols[i].spectrum.points, symbols[j].spectrum.points));
  return std::sqrt(best);
}

double SymbolTable::ensemble_power() const {
  double s = 0.0;
  for (const auto& sym : symbols) s += symbol_power(sym);
  return s / static_cast<double>(symbols.size()) * units.P0;
}

void SymbolTable::validate() const {
  layout.validate();
  units.validate();
  if (symbols.size() != 4) throw std::invalid_argument("symbol table needs 4 symbols");
  for (int k = 0; k < 4; ++k) {
    const auto& s = symbols[k];
    if (s.bits != k) throw std::invalid_argument("symbol " + std::to_string(k) + " has label " + std::to_string(s.bits));
    if (static_cast<int>(s.body_samples.size()) != layout.body_len() || s.cp_len != layout.cp_len)
      throw std::invalid_argument("symbol " + std::to_string(k) + " does not match the frame layout");
    if (s.join_index < 0 || s.join_index >= layout.body_len())
      throw std::invalid_argument("symbol " + std::to_string(k) + " join index out of range");
    if (s.spectrum.points.size() != 3) throw std::invalid_argument("symbols need three spectral points");
  }
  // Velocity alignment translates one partner along the real axis.
  for (int msb = 0; msb < 2; ++msb) {
    MainSpectrum m = mirror(symbols[label_of(msb, 0)].spectrum);
    const auto& partner = symbols[label_of(msb, 1)].spectrum.points;
    double dx = 0.0;
    for (std::size_t k = 0; k < partner.size(); ++k) dx += partner[k].real() - m.points[k].real();
    dx /= static_cast<double>(partner.size());
    for (auto& x : m.points) x += dx;
    if (spectral_distance(m.points, partner) > 1e-18)
      throw std::invalid_argument("level " + std::to_string(msb) + " is not a mirror pair");
  }
  auto peak = [&](int k) {
    double p = 0.0;
    for (cplx v : symbols[k].body_samples) p = std::max(p, std::abs(v));
    return p;
  };
  if (std::abs(peak(0) - peak(2)) < 1e-2 * std::max(peak(0), peak(2)))
    throw std::invalid_argument("the two levels have the same peak amplitude");
  if (min_distance() < min_distance_floor)
    throw std::invalid_argument("minimum spectral distance " + num(min_distance()) + " below floor " +
                                num(min_distance_floor));
}

int label_of(int msb, int lsb) {
  if ((msb != 0 && msb != 1) || (lsb != 0 && lsb != 1)) throw std::invalid_argument("bits must be 0 or 1");
  return 2 * msb + lsb;
}

std::vector<int> bits_of(int label) {
  if (label < 0 || label > 3) throw std::invalid_argument("unknown label " + std::to_string(label));
  return {label >> 1, label & 1};
}

TemplateLevel solve_level(const DesignTemplate& t, double eta) {
  auto f = [&](double x) { return small_frequency(compute_params(build_curve(template_spectrum(t, x, eta)))); };
  const int n = 18;
  std::vector<double> xs(n + 1), fs(n + 1);
  for (int k = 0; k <= n; ++k) {
    xs[k] = t.d * (t.x_lo + (t.x_hi - t.x_lo) * k / n);
    try {
      fs[k] = f(xs[k]);
    } catch (const std::exception&) {
      fs[k] = NAN;
    }
  }
  // Sign changes across basis switches show up as large jumps; skip those.
  for (int k = 0; k < n; ++k) {
    if (!std::isfinite(fs[k]) || !std::isfinite(fs[k + 1])) continue;
    if ((fs[k] < 0) == (fs[k + 1] < 0) || std::abs(fs[k] - fs[k + 1]) > 0.5) continue;
    boost::uintmax_t iters = 100;
    auto tol = [](double a, double b) { return std::abs(a - b) < 1e-14; };
    auto r = boost::math::tools::toms748_solve(f, xs[k], xs[k + 1], fs[k], fs[k + 1], tol, iters);
    TemplateLevel out;
    out.x = 0.5 * (r.first + r.second);
    out.spectrum = template_spectrum(t, out.x, eta);
    out.params = compute_params(build_curve(out.spectrum));
    return out;
  }
  throw std::runtime_error("design: no middle point in [" + num(t.x_lo * t.d) + ", " + num(t.x_hi * t.d) +
                           "] gives a vanishing small frequency at eta " + num(eta));
}

FiniteGapParams scale_to_period(const FiniteGapParams& p, double period) {
  double own = amplitude_period(p);
  if (!(own > 0.0)) throw std::invalid_argument("scaling needs a finite amplitude period");
  return scale_params(p, own / period);
}

FiniteGapParams scale_to_physical(const FiniteGapParams& p, UnitMap& units, const FrameLayout& layout,
                                  const LinkConfig& link) {
  layout.validate();
  units = UnitMap::from_time_scale(layout.body_duration() / design_period(), link.beta2,
                                   gamma_effective(link.gamma, link.alpha, link.span_length));
  return scale_to_period(p, design_period());
}

std::vector<cplx> sample_symbol(const FiniteGapParams& p, int body_len) {
  double period = amplitude_period(p);
  if (!(period > 0.0)) throw std::invalid_argument("sampling needs a finite amplitude period");
  return evaluate_solution(p, 0.0, 0.0, period / body_len, body_len);
}

SymbolTable design_constellation(const DesignTemplate& t, const LinkConfig& link, const FrameLayout& layout) {
  layout.validate();
  SymbolTable table;
  table.layout = layout;
  table.min_distance_floor = t.min_distance_floor;
  table.units = UnitMap::from_time_scale(layout.body_duration() / design_period(), link.beta2,
                                         gamma_effective(link.gamma, link.alpha, link.span_length));
  const double target = dbm_to_watts(layout.launch_power);

  auto build = [&](double eta) {
    std::vector<Level> levels;
    levels.push_back(build_level(t, solve_level(t, eta), 0, layout));
    levels.push_back(build_level(t, solve_level(t, eta * t.level_ratio), 1, layout));
    SymbolTable tb = table;
    tb.symbols = {levels[0].base, levels[0].mirrored, levels[1].base, levels[1].mirrored};
    if (t.align_velocity) {
      const double v0 = envelope_velocity(tb.symbols[0].params);
      for (auto& s : tb.symbols) {
        int n = static_cast<int>(std::lround(v0 - envelope_velocity(s.params)));
        if (n != 0) s = shifted_harmonics(s, n, layout);
      }
      tb.carrier_offset = centering_carrier(tb.symbols);
    }
    return tb;
  };

  double eta = t.eta;
  if (eta <= 0.0) {
    // Mean power grows with the heights; bracket, then solve in log space.
    auto g = [&](double e) { return std::log(build(e).ensemble_power() / target); };
    double lo = 0.6, hi = 1.2;
    double glo = g(lo), ghi = g(hi);
    for (int k = 0; k < 8 && glo > 0; ++k) glo = g(lo *= 0.8);
    for (int k = 0; k < 8 && ghi < 0; ++k) ghi = g(hi *= 1.25);
    if (glo > 0 || ghi < 0) throw std::runtime_error("design: launch power not reachable with this template");
    boost::uintmax_t iters = 60;
    auto tol = [](double a, double b) { return std::abs(a - b) < 1e-13 * std::abs(a); };
    auto r = boost::math::tools::toms748_solve(g, lo, hi, glo, ghi, tol, iters);
    eta = 0.5 * (r.first + r.second);
  }
  table = build(eta);

  for (const auto& s : table.symbols) {
    ResidualGrid grid;
    double res = nlse_residual(s.params, grid);
    if (!(res < 1e-6))
      throw std::runtime_error("design: symbol " + std::to_string(s.bits) + " nlse residual " + num(res));
  }
  try {
    table.validate();
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("design: ") + e.what());
  }
  double p = watts_to_dbm(table.ensemble_power());
  if (std::abs(p - layout.launch_power) > 1e-6)
    throw std::runtime_error("design: ensemble power " + num(p) + " dBm misses the launch power");
  return table;
}

std::vector<cplx> preamble_samples(const FrameLayout& layout) {
  const int half = layout.samples_per_symbol / 2;
  std::mt19937_64 rng(layout.preamble_seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<cplx> X(half, 0.0);
  for (int k = 0; k < half; ++k)
    if (std::abs(fft::bin_index(k, half)) <= 2) X[k] = cplx(g(rng), g(rng));
  std::vector<cplx> h = fft::inverse(X);
  double s = 1.0 / std::sqrt(mean_power(h));
  for (auto& v : h) v *= s;
  std::vector<cplx> out = h;
  out.insert(out.end(), h.begin(), h.end());
  return out;
}

Waveform assemble_frame(const SymbolTable& table, const std::vector<int>& bits, const AssembleOptions& opt) {
  const FrameLayout& lay = table.layout;
  if (bits.size() % 2 != 0) throw std::invalid_argument("bit count must be even");
  if (static_cast<int>(bits.size() / 2) > lay.max_symbols)
    throw std::invalid_argument("frame exceeds " + std::to_string(lay.max_symbols) + " symbols");
  if (table.symbols.size() != 4) throw std::invalid_argument("symbol table needs 4 symbols");

  std::vector<cplx> out;
  out.reserve(bits.size() / 2 * lay.samples_per_symbol + lay.samples_per_symbol);
  // Everything below is dimensionless; one factor sqrt(P0) at the end.
  const double mean_dimless = table.ensemble_power() / table.units.P0;
  if (opt.preamble) {
    for (cplx v : preamble_samples(lay)) out.push_back(v * std::sqrt(mean_dimless));
  }
  const std::size_t data_start = out.size();
  bool first = true;
  for (std::size_t k = 0; k < bits.size(); k += 2) {
    int label = label_of(bits[k], bits[k + 1]);
    const SymbolDefinition& s = table.symbols[label];
    std::vector<cplx> sym = symbol_samples(s);
    double phi = s.phase_offset;
    if (opt.phase_matching && !first) {
      // Continue the previous symbol's phase by its last sample-to-sample slope.
      std::size_t n = out.size();
      double last = std::arg(out[n - 1]);
      double slope = wrap(last - std::arg(out[n - 2]));
      phi = last + slope - std::arg(sym[0]);
    }
    cplx f = std::polar(1.0, phi);
    for (cplx v : sym) out.push_back(v * f);
    first = false;
  }
  if (table.carrier_offset != 0.0) {
    const double dt = design_period() / lay.body_len();
    for (std::size_t n = data_start; n < out.size(); ++n)
      out[n] *= std::polar(1.0, table.carrier_offset * dt * static_cast<double>(n - data_start));
  }
  Waveform w;
  w.samples = std::move(out);
  double a = table.units.amplitude_scale();
  for (auto& v : w.samples) v *= a;
  w.sample_rate = lay.sample_rate;
  w.units = Units::physical;
  w.center_power_ref = lay.launch_power;
  return w;
}

PowerBandwidth power_and_bandwidth(const Waveform& w) {
  w.validate();
  const int n = static_cast<int>(w.size());
  std::vector<cplx> X = fft::forward(w.samples);
  std::vector<double> f(n), s(n);
  double total = 0.0, first = 0.0;
  for (int k = 0; k < n; ++k) {
    f[k] = fft::bin_index(k, n) * w.sample_rate / n;
    s[k] = std::norm(X[k]);
    total += s[k];
    first += s[k] * f[k];
  }
  PowerBandwidth out;
  out.power_dbm = watts_to_dbm(mean_power(w.samples));
  if (total == 0.0) return out;
  out.centroid = first / total;
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    return std::abs(f[a] - out.centroid) < std::abs(f[b] - out.centroid);
  });
  double acc = 0.0;
  for (int k : idx) {
    acc += s[k];
    if (acc >= 0.99 * total) {
      out.bandwidth = 2 * std::abs(f[k] - out.centroid);
      break;
    }
  }
  return out;
}

}  // namespace pnft
