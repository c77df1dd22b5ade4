// Command-line front end: design, run, analyze, report.

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "pnft/io.hpp"
#include "pnft/pipeline.hpp"
#include "pnft/pnft_forward.hpp"

namespace fs = std::filesystem;
using namespace pnft;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> spans;
};

RunConfig load_config(const Common& c) {
  RunConfig cfg = c.config.empty() ? RunConfig{} : io::read_config(c.config);
  if (!c.out.empty()) cfg.output_dir = c.out;
  if (c.seed) {
    cfg.link.rng_seed = *c.seed;
    cfg.bits_seed = *c.seed;
  }
  if (c.spans) {
    if (*c.spans < 0) throw std::invalid_argument("--spans must be non-negative");
    if (*c.spans % cfg.link.spans_per_loop != 0)
      throw std::invalid_argument("--spans must be a multiple of link.spans_per_loop");
    cfg.link.loops = *c.spans / cfg.link.spans_per_loop;
  }
  cfg.validate();
  return cfg;
}

fs::path prepare_dir(const std::string& dir) {
  fs::create_directories(dir);
  return fs::path(dir);
}

void cmd_design(const Common& c) {
  RunConfig cfg = load_config(c);
  fs::path dir = prepare_dir(cfg.output_dir);
  SymbolTable table = design_constellation(cfg.design, cfg.link, cfg.layout);
  io::write_table((dir / "table.json").string(), table);
  io::write_config((dir / "config.json").string(), cfg);

  io::CsvTable diag;
  diag.header = {"bits", "nlse_residual", "re0", "im0", "re1", "im1", "re2", "im2",
                 "join_index", "phase_offset", "peak_amplitude", "mean_power"};
  for (const auto& s : table.symbols) {
    std::vector<double> row = {double(s.bits), nlse_residual(s.params)};
    for (cplx p : s.spectrum.points) {
      row.push_back(p.real());
      row.push_back(p.imag());
    }
    double peak = 0.0;
    for (cplx v : s.body_samples) peak = std::max(peak, std::abs(v));
    row.push_back(s.join_index);
    row.push_back(s.phase_offset);
    row.push_back(peak);
    row.push_back(mean_power(s.body_samples));
    diag.rows.push_back(row);

    Waveform w;
    w.units = Units::dimensionless;
    w.samples = s.body_samples;
    w.sample_rate = s.body_samples.size() / design_period();
    io::write_waveform((dir / ("symbol_" + std::to_string(s.bits) + ".pnw")).string(), w);
  }
  io::write_csv((dir / "design.csv").string(), diag);

  RunConfig one = cfg;
  PowerBandwidth pb = power_and_bandwidth(assemble_frame(table, frame_bits(one)));
  io::CsvTable m;
  m.header = {"power_dbm", "bandwidth_hz", "centroid_hz", "min_distance", "T0_s", "L0_m", "P0_w"};
  m.rows.push_back({pb.power_dbm, pb.bandwidth, pb.centroid, table.min_distance(), table.units.T0, table.units.L0,
                    table.units.P0});
  io::write_csv((dir / "frame_metrics.csv").string(), m);
  std::printf("designed 4 symbols, min distance %.4f, bandwidth %.3f GHz, power %.3f dBm -> %s\n",
              table.min_distance(), pb.bandwidth / 1e9, pb.power_dbm, dir.string().c_str());
}

void cmd_run(const Common& c) {
  RunConfig cfg = load_config(c);
  fs::path dir = prepare_dir(cfg.output_dir);
  SymbolTable table = load_or_design(cfg);
  io::write_table((dir / "table.json").string(), table);
  io::write_config((dir / "config.json").string(), cfg);

  RunResult res = run_link(cfg, table, [](int spans, const DecisionReport& r) {
    std::fprintf(stderr, "spans %d  %.0f km  ber %.3e  evm %.4f\n", spans, r.distance_km, r.ber, r.evm);
  });

  io::CsvTable ber;
  ber.header = {"spans", "distance_km", "ber", "evm", "unreliable", "sync_offset", "cfo_hz", "sync_metric"};
  io::CsvTable scatter;
  scatter.header = {"spans", "symbol", "tx_label", "rx_label", "distance", "reliable",
                    "re0", "im0", "re1", "im1", "re2", "im2"};
  const std::vector<int> tx_labels = labels_of_bits(res.bits);
  for (std::size_t k = 0; k < res.reports.size(); ++k) {
    const DecisionReport& r = res.reports[k];
    ber.rows.push_back({double(res.spans[k]), r.distance_km, r.ber, r.evm, double(r.unreliable),
                        double(r.sync.offset), r.sync.cfo_hz, r.sync.metric});
    for (std::size_t s = 0; s < r.per_symbol.size(); ++s) {
      const SymbolDecision& d = r.per_symbol[s];
      std::vector<double> row = {double(res.spans[k]), double(s), double(tx_labels[s]), double(d.label),
                                 d.distance, d.reliable ? 1.0 : 0.0};
      for (int j = 0; j < 3; ++j) {
        cplx p = j < static_cast<int>(d.points.size()) ? d.points[j] : cplx(NAN, NAN);
        row.push_back(p.real());
        row.push_back(p.imag());
      }
      scatter.rows.push_back(row);
    }
  }
  io::write_csv((dir / "ber.csv").string(), ber);
  io::write_csv((dir / "scatter.csv").string(), scatter);
  io::CsvTable tx;
  tx.header = {"power_dbm", "bandwidth_hz", "centroid_hz", "symbols", "bit_rate"};
  tx.rows.push_back({res.tx.power_dbm, res.tx.bandwidth, res.tx.centroid, double(cfg.symbols),
                     2.0 / cfg.layout.symbol_period});
  io::write_csv((dir / "tx_metrics.csv").string(), tx);
  std::printf("wrote %zu distance rows -> %s\n", res.reports.size(), dir.string().c_str());
}

void cmd_analyze(const std::string& input, const std::string& table_path, const std::string& out,
                 const std::vector<double>& box_v) {
  Waveform w = io::read_waveform(input);
  std::vector<cplx> q = w.samples;
  double dt = 1.0 / w.sample_rate;
  if (w.units == Units::physical) {
    if (table_path.empty()) throw std::invalid_argument("physical waveform needs --table for normalization");
    SymbolTable t = io::read_table(table_path);
    const double a = 1.0 / t.units.amplitude_scale();
    for (auto& v : q) v *= a;
    dt = t.units.time_to_dimensionless(dt);
  }
  SearchBox box;
  if (!box_v.empty()) {
    if (box_v.size() != 4) throw std::invalid_argument("--box needs re_min,re_max,im_min,im_max");
    box = SearchBox{box_v[0], box_v[1], box_v[2], box_v[3]};
  }
  SpectrumEstimate e = find_main_spectrum(q, dt, box);
  std::vector<int> idx(e.points.size());
  for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = static_cast<int>(k);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) { return e.points[a].imag() > e.points[b].imag(); });
  io::CsvTable t;
  t.header = {"re", "im", "residual"};
  for (int k : idx) t.rows.push_back({e.points[k].real(), e.points[k].imag(), e.residuals[k]});
  if (out.empty()) {
    std::printf("re,im,residual\n");
    for (const auto& r : t.rows) std::printf("%.12g,%.12g,%.3g\n", r[0], r[1], r[2]);
  } else {
    io::write_csv(out, t);
    std::printf("%zu points -> %s\n", t.rows.size(), out.c_str());
  }
}

void cmd_report(const std::string& dir) {
  io::CsvTable ber = io::read_csv((fs::path(dir) / "ber.csv").string());
  const int cs = ber.column("spans"), ck = ber.column("distance_km"), cb = ber.column("ber"),
            ce = ber.column("evm"), cu = ber.column("unreliable");
  std::ostringstream ss;
  ss << "spans  distance_km        ber      evm  unreliable\n";
  char line[128];
  for (const auto& r : ber.rows) {
    std::snprintf(line, sizeof line, "%5.0f  %11.0f  %9.3e  %7.4f  %10.0f\n", r[cs], r[ck], r[cb], r[ce], r[cu]);
    ss << line;
  }
  fs::path tx = fs::path(dir) / "tx_metrics.csv";
  if (fs::exists(tx)) {
    io::CsvTable t = io::read_csv(tx.string());
    if (!t.rows.empty()) {
      std::snprintf(line, sizeof line, "launch %.2f dBm, 99%% bandwidth %.3f GHz, bit rate %.2f Gb/s\n",
                    t.rows[0][t.column("power_dbm")], t.rows[0][t.column("bandwidth_hz")] / 1e9,
                    t.rows[0][t.column("bit_rate")] / 1e9);
      ss << line;
    }
  }
  io::write_text((fs::path(dir) / "summary.txt").string(), ss.str());
  std::cout << ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Periodic nonlinear Fourier transform transmission experiment"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", common.config, "run configuration (JSON)");
    sub->add_option("-o,--out", common.out, "output directory");
  };

  CLI::App* design = app.add_subcommand("design", "design the symbol table and diagnostics");
  add_common(design);

  CLI::App* run = app.add_subcommand("run", "transmit a frame through the loop and decide every tap");
  add_common(run);
  std::uint64_t seed = 0;
  int spans = 0;
  CLI::Option* seed_opt = run->add_option("--seed", seed, "override link and bit seeds");
  CLI::Option* spans_opt = run->add_option("--spans", spans, "override the number of spans");

  std::string input, table_path, analyze_out;
  std::vector<double> box;
  CLI::App* analyze = app.add_subcommand("analyze", "forward transform of one stored period");
  analyze->add_option("input", input, "waveform file")->required();
  analyze->add_option("--table", table_path, "symbol table for physical waveforms");
  analyze->add_option("-o,--out", analyze_out, "CSV output (stdout when omitted)");
  analyze->add_option("--box", box, "search box re_min re_max im_min im_max")->delimiter(',');

  std::string report_dir;
  CLI::App* report = app.add_subcommand("report", "summarize the tables written by run");
  report->add_option("dir", report_dir, "run output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::cerr << "error: " << msg << "\n";
    return 2;
  }

  try {
    if (*seed_opt) common.seed = seed;
    if (*spans_opt) common.spans = spans;
    if (*design) cmd_design(common);
    if (*run) cmd_run(common);
    if (*analyze) cmd_analyze(input, table_path, analyze_out, box);
    if (*report) cmd_report(report_dir);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::cerr << "error: " << msg << "\n";
    return 1;
  }
  return 0;
}
