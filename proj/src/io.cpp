#include "pnft/io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

namespace pnft::io {

namespace {

using json = nlohmann::json;

static_assert(std::endian::native == std::endian::little, "waveform files assume a little-endian host");

constexpr char kMagic[8] = {'P', 'N', 'F', 'T', 'W', 'A', 'V', 'E'};

// Object member reader that rejects keys nobody asked for.
class Fields {
 public:
  Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) throw std::invalid_argument(where_ + ": expected an object");
  }
  ~Fields() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw std::invalid_argument(where_ + ": unknown key '" + k + "'");
  }
  template <class T>
  void opt(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw std::invalid_argument(where_ + "." + key + ": wrong type");
    }
  }
  const json& req(const char* key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw std::invalid_argument(where_ + ": missing key '" + key + "'");
    return j_.at(key);
  }
  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key);
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

json cjson(cplx v) { return json::array({v.real(), v.imag()}); }

cplx from_cjson(const json& j) {
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument("complex value must be [re, im]");
  return cplx(j[0].get<double>(), j[1].get<double>());
}

json cvec(const std::vector<cplx>& v) {
  json a = json::array();
  for (cplx x : v) a.push_back(cjson(x));
  return a;
}

std::vector<cplx> from_cvec(const json& j) {
  if (!j.is_array()) throw std::invalid_argument("expected a list of complex values");
  std::vector<cplx> out;
  for (const auto& e : j) out.push_back(from_cjson(e));
  return out;
}

void check_version(Fields& f, const char* what) {
  int v = f.req("version").get<int>();
  if (v != kFormatVersion)
    throw std::invalid_argument(std::string(what) + ": unsupported version " + std::to_string(v));
}

json design_json(const DesignTemplate& t) {
  return {{"d", t.d},         {"h_left", t.h_left}, {"h_mid", t.h_mid},   {"h_right", t.h_right},
          {"level_ratio", t.level_ratio}, {"eta", t.eta}, {"x_lo", t.x_lo}, {"x_hi", t.x_hi},
          {"shift", t.shift}, {"align_velocity", t.align_velocity}, {"min_distance_floor", t.min_distance_floor}};
}

DesignTemplate design_from(const json& j) {
  DesignTemplate t;
  Fields f(j, "design");
  f.opt("d", t.d);
  f.opt("h_left", t.h_left);
  f.opt("h_mid", t.h_mid);
  f.opt("h_right", t.h_right);
  f.opt("level_ratio", t.level_ratio);
  f.opt("eta", t.eta);
  f.opt("x_lo", t.x_lo);
  f.opt("x_hi", t.x_hi);
  f.opt("shift", t.shift);
  f.opt("align_velocity", t.align_velocity);
  f.opt("min_distance_floor", t.min_distance_floor);
  return t;
}

json layout_json(const FrameLayout& l) {
  return {{"symbol_period", l.symbol_period}, {"sample_rate", l.sample_rate},
          {"samples_per_symbol", l.samples_per_symbol}, {"cp_len", l.cp_len},
          {"launch_power", l.launch_power}, {"max_symbols", l.max_symbols},
          {"preamble_seed", l.preamble_seed}};
}

FrameLayout layout_from(const json& j) {
  FrameLayout l;
  Fields f(j, "layout");
  f.opt("symbol_period", l.symbol_period);
  f.opt("sample_rate", l.sample_rate);
  f.opt("samples_per_symbol", l.samples_per_symbol);
  f.opt("cp_len", l.cp_len);
  f.opt("launch_power", l.launch_power);
  f.opt("max_symbols", l.max_symbols);
  f.opt("preamble_seed", l.preamble_seed);
  return l;
}

json link_json(const LinkConfig& c) {
  return {{"span_length", c.span_length}, {"spans_per_loop", c.spans_per_loop}, {"alpha", c.alpha},
          {"beta2", c.beta2}, {"gamma", c.gamma}, {"edfa_noise_figure", c.edfa_noise_figure},
          {"obpf_bandwidth", c.obpf_bandwidth}, {"loops", c.loops}, {"rng_seed", c.rng_seed},
          {"max_phase_step", c.max_phase_step}, {"wavelength", c.wavelength},
          {"amplifier_noise", c.amplifier_noise}};
}

LinkConfig link_from(const json& j) {
  LinkConfig c;
  Fields f(j, "link");
  f.opt("span_length", c.span_length);
  f.opt("spans_per_loop", c.spans_per_loop);
  f.opt("alpha", c.alpha);
  f.opt("beta2", c.beta2);
  f.opt("gamma", c.gamma);
  f.opt("edfa_noise_figure", c.edfa_noise_figure);
  f.opt("obpf_bandwidth", c.obpf_bandwidth);
  f.opt("loops", c.loops);
  f.opt("rng_seed", c.rng_seed);
  f.opt("max_phase_step", c.max_phase_step);
  f.opt("wavelength", c.wavelength);
  f.opt("amplifier_noise", c.amplifier_noise);
  return c;
}

json rx_json(const RxOptions& r) {
  return {{"sample_rate", r.sample_rate},
          {"oversample_to", r.slice.oversample_to},
          {"window_offset", r.slice.window_offset},
          {"compensate_cfo", r.compensate_cfo},
          {"fine_timing", r.fine_timing},
          {"root_grid", json::array({r.roots.nx, r.roots.ny})},
          {"root_tol", r.roots.tol}};
}

RxOptions rx_from(const json& j) {
  RxOptions r;
  Fields f(j, "rx");
  f.opt("sample_rate", r.sample_rate);
  f.opt("oversample_to", r.slice.oversample_to);
  f.opt("window_offset", r.slice.window_offset);
  f.opt("compensate_cfo", r.compensate_cfo);
  f.opt("fine_timing", r.fine_timing);
  if (f.has("root_grid")) {
    const json& g = j.at("root_grid");
    if (!g.is_array() || g.size() != 2) throw std::invalid_argument("rx.root_grid: expected [nx, ny]");
    r.roots.nx = g[0].get<int>();
    r.roots.ny = g[1].get<int>();
  }
  f.opt("root_tol", r.roots.tol);
  return r;
}

json rvec(const RVector& v) {
  json a = json::array();
  for (int k = 0; k < v.size(); ++k) a.push_back(v[k]);
  return a;
}

RVector from_rvec(const json& j) {
  RVector v(j.size());
  for (std::size_t k = 0; k < j.size(); ++k) v[k] = j[k].get<double>();
  return v;
}

json params_json(const FiniteGapParams& p) {
  json tau = json::array();
  for (int r = 0; r < p.tau.tau.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < p.tau.tau.cols(); ++c) row.push_back(cjson(p.tau.tau(r, c)));
    tau.push_back(row);
  }
  std::vector<cplx> delta(p.delta.data(), p.delta.data() + p.delta.size());
  return {{"U", cjson(p.U)},        {"Omega0", p.Omega0}, {"k0", p.k0},        {"Omega", rvec(p.Omega)},
          {"kvec", rvec(p.kvec)},   {"delta", cvec(delta)}, {"tau", tau},
          {"zeroed_index", p.zeroed_index}};
}

FiniteGapParams params_from(const json& j) {
  FiniteGapParams p;
  Fields f(j, "params");
  p.U = from_cjson(f.req("U"));
  f.opt("Omega0", p.Omega0);
  f.opt("k0", p.k0);
  p.Omega = from_rvec(f.req("Omega"));
  p.kvec = from_rvec(f.req("kvec"));
  std::vector<cplx> d = from_cvec(f.req("delta"));
  p.delta = Eigen::Map<CVector>(d.data(), d.size());
  const json& tau = f.req("tau");
  const int g = static_cast<int>(tau.size());
  CMatrix m(g, g);
  for (int r = 0; r < g; ++r) {
    if (tau[r].size() != static_cast<std::size_t>(g)) throw std::invalid_argument("params.tau: not square");
    for (int c = 0; c < g; ++c) m(r, c) = from_cjson(tau[r][c]);
  }
  p.tau = PeriodMatrix(m);
  f.opt("zeroed_index", p.zeroed_index);
  if (p.Omega.size() != g || p.kvec.size() != g || p.delta.size() != g)
    throw std::invalid_argument("params: genus mismatch between fields");
  return p;
}

}  // namespace

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path);
}

std::string config_to_text(const RunConfig& cfg) {
  json j = {{"version", kFormatVersion},
            {"design", design_json(cfg.design)},
            {"layout", layout_json(cfg.layout)},
            {"link", link_json(cfg.link)},
            {"rx", rx_json(cfg.rx)},
            {"symbols", cfg.symbols},
            {"bits_seed", cfg.bits_seed},
            {"guard", cfg.guard},
            {"single_symbol", cfg.single_symbol},
            {"cfo_hz", cfg.cfo_hz},
            {"sync_cd", cfg.sync_cd},
            {"table_path", cfg.table_path},
            {"output_dir", cfg.output_dir}};
  return j.dump(2) + "\n";
}

RunConfig config_from_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  RunConfig cfg;
  {
    Fields f(j, "config");
    check_version(f, "config");
    if (f.has("design")) cfg.design = design_from(j.at("design"));
    if (f.has("layout")) cfg.layout = layout_from(j.at("layout"));
    if (f.has("link")) cfg.link = link_from(j.at("link"));
    if (f.has("rx")) cfg.rx = rx_from(j.at("rx"));
    f.opt("symbols", cfg.symbols);
    f.opt("bits_seed", cfg.bits_seed);
    f.opt("guard", cfg.guard);
    f.opt("single_symbol", cfg.single_symbol);
    f.opt("cfo_hz", cfg.cfo_hz);
    f.opt("sync_cd", cfg.sync_cd);
    f.opt("table_path", cfg.table_path);
    f.opt("output_dir", cfg.output_dir);
  }
  cfg.validate();
  return cfg;
}

void write_config(const std::string& path, const RunConfig& cfg) { write_text(path, config_to_text(cfg)); }

RunConfig read_config(const std::string& path) { return config_from_text(read_text(path)); }

std::string table_to_text(const SymbolTable& table) {
  json syms = json::array();
  for (const auto& s : table.symbols) {
    syms.push_back({{"bits", s.bits},
                    {"spectrum", cvec(s.spectrum.points)},
                    {"params", params_json(s.params)},
                    {"body_samples", cvec(s.body_samples)},
                    {"cp_len", s.cp_len},
                    {"phase_offset", s.phase_offset},
                    {"join_index", s.join_index}});
  }
  json j = {{"version", kFormatVersion},
            {"layout", layout_json(table.layout)},
            {"units", {{"T0", table.units.T0}, {"L0", table.units.L0}, {"P0", table.units.P0}}},
            {"min_distance_floor", table.min_distance_floor},
            {"carrier_offset", table.carrier_offset},
            {"symbols", syms}};
  return j.dump(1) + "\n";
}

SymbolTable table_from_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("symbol table: ") + e.what());
  }
  SymbolTable t;
  {
    Fields f(j, "symbol table");
    check_version(f, "symbol table");
    t.layout = layout_from(f.req("layout"));
    {
      Fields u(f.req("units"), "units");
      u.opt("T0", t.units.T0);
      u.opt("L0", t.units.L0);
      u.opt("P0", t.units.P0);
    }
    f.opt("min_distance_floor", t.min_distance_floor);
    f.opt("carrier_offset", t.carrier_offset);
    for (const auto& e : f.req("symbols")) {
      SymbolDefinition s;
      Fields g(e, "symbol");
      g.opt("bits", s.bits);
      s.spectrum.points = from_cvec(g.req("spectrum"));
      s.params = params_from(g.req("params"));
      s.body_samples = from_cvec(g.req("body_samples"));
      g.opt("cp_len", s.cp_len);
      g.opt("phase_offset", s.phase_offset);
      g.opt("join_index", s.join_index);
      t.symbols.push_back(std::move(s));
    }
  }
  t.units.validate();
  t.layout.validate();
  t.validate();
  return t;
}

void write_table(const std::string& path, const SymbolTable& table) { write_text(path, table_to_text(table)); }

SymbolTable read_table(const std::string& path) { return table_from_text(read_text(path)); }

void write_waveform(const std::string& path, const Waveform& w) {
  w.validate();
  unsigned char head[64] = {};
  std::memcpy(head, kMagic, 8);
  std::uint32_t version = kFormatVersion;
  std::uint32_t unit = w.units == Units::dimensionless ? 1u : 0u;
  std::uint64_t count = w.size();
  double rate = w.sample_rate;
  double ref = w.center_power_ref ? *w.center_power_ref : std::numeric_limits<double>::quiet_NaN();
  std::memcpy(head + 8, &version, 4);
  std::memcpy(head + 12, &unit, 4);
  std::memcpy(head + 16, &count, 8);
  std::memcpy(head + 24, &rate, 8);
  std::memcpy(head + 32, &ref, 8);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(reinterpret_cast<const char*>(head), 64);
  // std::complex<double> is layout-compatible with double[2].
  out.write(reinterpret_cast<const char*>(w.samples.data()), static_cast<std::streamsize>(count * 16));
  if (!out) throw std::runtime_error("write failed for " + path);
}

Waveform read_waveform(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  unsigned char head[64];
  if (!in.read(reinterpret_cast<char*>(head), 64)) throw std::runtime_error(path + ": truncated header");
  if (std::memcmp(head, kMagic, 8) != 0) throw std::runtime_error(path + ": not a waveform file");
  std::uint32_t version, unit;
  std::uint64_t count;
  double rate, ref;
  std::memcpy(&version, head + 8, 4);
  std::memcpy(&unit, head + 12, 4);
  std::memcpy(&count, head + 16, 8);
  std::memcpy(&rate, head + 24, 8);
  std::memcpy(&ref, head + 32, 8);
  if (version != static_cast<std::uint32_t>(kFormatVersion))
    throw std::runtime_error(path + ": unsupported version " + std::to_string(version));
  if (unit > 1) throw std::runtime_error(path + ": bad unit flag");
  if (count == 0) throw std::runtime_error(path + ": empty waveform");
  Waveform w;
  w.units = unit == 1 ? Units::dimensionless : Units::physical;
  w.sample_rate = rate;
  if (!std::isnan(ref)) w.center_power_ref = ref;
  w.samples.resize(count);
  if (!in.read(reinterpret_cast<char*>(w.samples.data()), static_cast<std::streamsize>(count * 16)))
    throw std::runtime_error(path + ": truncated samples");
  w.validate();
  return w;
}

int CsvTable::column(const std::string& name) const {
  for (std::size_t k = 0; k < header.size(); ++k)
    if (header[k] == name) return static_cast<int>(k);
  throw std::invalid_argument("no column '" + name + "'");
}

void write_csv(const std::string& path, const CsvTable& table) {
  std::ostringstream ss;
  for (std::size_t k = 0; k < table.header.size(); ++k) ss << (k ? "," : "") << table.header[k];
  ss << "\n";
  char buf[40];
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) throw std::invalid_argument("csv row width differs from header");
    for (std::size_t k = 0; k < row.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", row[k]);
      ss << (k ? "," : "") << buf;
    }
    ss << "\n";
  }
  write_text(path, ss.str());
}

CsvTable read_csv(const std::string& path) {
  std::istringstream in(read_text(path));
  CsvTable t;
  std::string line;
  if (!std::getline(in, line) || line.empty()) throw std::runtime_error(path + ": missing header");
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
  };
  t.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != t.header.size()) throw std::runtime_error(path + ": ragged row");
    std::vector<double> row;
    for (const auto& c : cells) {
      std::size_t used = 0;
      double v = std::stod(c, &used);
      if (used != c.size()) throw std::runtime_error(path + ": bad number '" + c + "'");
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace pnft::io
