#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "pnft/io.hpp"

using namespace pnft;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "pnft_test_io";
  fs::create_directories(dir);
  return dir / name;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

const SymbolTable& default_table() {
  static const SymbolTable t = design_constellation(DesignTemplate{}, LinkConfig{}, FrameLayout{});
  return t;
}

}  // namespace

TEST_CASE("waveform file round trip is bit exact") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  Waveform w;
  for (int k = 0; k < 777; ++k) w.samples.emplace_back(g(rng), g(rng));
  w.sample_rate = 80e9;
  w.center_power_ref = 2.5;
  std::string p = scratch("a.pnw").string();
  io::write_waveform(p, w);
  CHECK(fs::file_size(p) == 64 + 16 * 777);
  Waveform r = io::read_waveform(p);
  REQUIRE(r.size() == w.size());
  CHECK(r.units == Units::physical);
  CHECK(r.sample_rate == w.sample_rate);
  REQUIRE(r.center_power_ref.has_value());
  CHECK(*r.center_power_ref == 2.5);
  for (std::size_t k = 0; k < w.size(); ++k) {
    CHECK(same_bits(r.samples[k].real(), w.samples[k].real()));
    CHECK(same_bits(r.samples[k].imag(), w.samples[k].imag()));
  }

  w.units = Units::dimensionless;
  w.center_power_ref.reset();
  io::write_waveform(p, w);
  r = io::read_waveform(p);
  CHECK(r.units == Units::dimensionless);
  CHECK_FALSE(r.center_power_ref.has_value());
}

TEST_CASE("waveform reader rejects bad files") {
  std::string p = scratch("bad.pnw").string();
  {
    std::ofstream f(p, std::ios::binary);
    f << "NOTAWAVE";
  }
  CHECK_THROWS_AS(io::read_waveform(p), std::runtime_error);
  CHECK_THROWS(io::read_waveform(scratch("missing.pnw").string()));

  Waveform empty;
  empty.sample_rate = 1.0;
  CHECK_THROWS_AS(io::write_waveform(p, empty), std::invalid_argument);

  // Valid header, unsupported version.
  Waveform w;
  w.samples = {1.0, 2.0};
  w.sample_rate = 1.0;
  io::write_waveform(p, w);
  {
    std::fstream f(p, std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(8);
    std::uint32_t v = 99;
    f.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  CHECK_THROWS_WITH_AS(io::read_waveform(p), doctest::Contains("version"), std::runtime_error);

  // Truncated payload.
  io::write_waveform(p, w);
  fs::resize_file(p, 64 + 16);
  CHECK_THROWS_AS(io::read_waveform(p), std::runtime_error);
}

TEST_CASE("config round trip and strict keys") {
  RunConfig c;
  c.symbols = 321;
  c.bits_seed = 99;
  c.single_symbol = 2;
  c.cfo_hz = 1.5e8;
  c.link.loops = 7;
  c.link.edfa_noise_figure = 6.25;
  c.design.h_left = 0.3;
  c.design.align_velocity = false;
  c.layout.cp_len = 16;
  c.rx.slice.window_offset = 3;
  c.output_dir = "somewhere";
  std::string text = io::config_to_text(c);
  RunConfig r = io::config_from_text(text);
  CHECK(io::config_to_text(r) == text);
  CHECK(r.symbols == 321);
  CHECK(r.single_symbol == 2);
  CHECK(r.link.loops == 7);
  CHECK(r.design.h_left == 0.3);
  CHECK_FALSE(r.design.align_velocity);
  CHECK(r.layout.cp_len == 16);

  CHECK_THROWS_WITH_AS(io::config_from_text(R"({"version": 1, "symbolz": 3})"), doctest::Contains("symbolz"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(io::config_from_text(R"({"version": 2})"), doctest::Contains("version"),
                       std::invalid_argument);
  CHECK_THROWS_AS(io::config_from_text("{not json"), std::invalid_argument);
  CHECK_THROWS_AS(io::config_from_text(R"({"version": 1, "symbols": -4})"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(io::config_from_text(R"({"version": 1, "link": {"alpha": -1}})"),
                       doctest::Contains("alpha"), std::invalid_argument);

  // Only the given keys change.
  RunConfig partial = io::config_from_text(R"({"version": 1, "symbols": 10})");
  CHECK(partial.symbols == 10);
  CHECK(partial.link.span_length == LinkConfig{}.span_length);
}

TEST_CASE("symbol table round trip is bit exact") {
  const SymbolTable& t = default_table();
  std::string p = scratch("table.json").string();
  io::write_table(p, t);
  SymbolTable r = io::read_table(p);
  REQUIRE(r.symbols.size() == 4);
  CHECK(same_bits(r.carrier_offset, t.carrier_offset));
  CHECK(same_bits(r.units.T0, t.units.T0));
  CHECK(same_bits(r.units.P0, t.units.P0));
  for (int s = 0; s < 4; ++s) {
    const auto& a = t.symbols[s];
    const auto& b = r.symbols[s];
    CHECK(b.bits == a.bits);
    CHECK(b.join_index == a.join_index);
    CHECK(same_bits(b.phase_offset, a.phase_offset));
    REQUIRE(b.body_samples.size() == a.body_samples.size());
    for (std::size_t k = 0; k < a.body_samples.size(); ++k) CHECK(b.body_samples[k] == a.body_samples[k]);
    for (int k = 0; k < 3; ++k) CHECK(b.spectrum.points[k] == a.spectrum.points[k]);
    CHECK(same_bits(b.params.Omega0, a.params.Omega0));
    CHECK(b.params.zeroed_index == a.params.zeroed_index);
    CHECK((b.params.tau.tau - a.params.tau.tau).norm() == 0.0);
  }
  CHECK(io::table_to_text(r) == io::table_to_text(t));

  // Same frame from the reloaded table.
  std::vector<int> bits = {0, 1, 1, 1, 0, 0, 1, 0};
  CHECK(assemble_frame(r, bits).samples == assemble_frame(t, bits).samples);
}

TEST_CASE("symbol table reader validates") {
  std::string text = io::table_to_text(default_table());
  auto pos = text.find("\"join_index\"");
  REQUIRE(pos != std::string::npos);
  std::string extra = text;
  extra.insert(pos, "\"surprise\": 1, ");
  CHECK_THROWS_WITH_AS(io::table_from_text(extra), doctest::Contains("surprise"), std::invalid_argument);
  CHECK_THROWS_AS(io::table_from_text("[]"), std::invalid_argument);
}

TEST_CASE("csv round trip") {
  io::CsvTable t;
  t.header = {"a", "b"};
  t.rows = {{1.0, 1.0 / 3.0}, {-2.5e-300, NAN}};
  std::string p = scratch("t.csv").string();
  io::write_csv(p, t);
  io::CsvTable r = io::read_csv(p);
  CHECK(r.header == t.header);
  REQUIRE(r.rows.size() == 2);
  CHECK(r.rows[0][1] == t.rows[0][1]);
  CHECK(r.rows[1][0] == t.rows[1][0]);
  CHECK(std::isnan(r.rows[1][1]));
  CHECK(r.column("b") == 1);
  CHECK_THROWS(r.column("c"));

  io::CsvTable ragged;
  ragged.header = {"a"};
  ragged.rows = {{1.0, 2.0}};
  CHECK_THROWS_AS(io::write_csv(p, ragged), std::invalid_argument);
}
