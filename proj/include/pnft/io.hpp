#pragma once

#include <string>
#include <vector>

#include "pnft/channel.hpp"
#include "pnft/pipeline.hpp"
#include "pnft/signal_design.hpp"

namespace pnft::io {

constexpr int kFormatVersion = 1;

// Structured text (JSON) with a top-level "version". Unknown keys are rejected.
std::string config_to_text(const RunConfig& cfg);
RunConfig config_from_text(const std::string& text);
void write_config(const std::string& path, const RunConfig& cfg);
RunConfig read_config(const std::string& path);

std::string table_to_text(const SymbolTable& table);
SymbolTable table_from_text(const std::string& text);
void write_table(const std::string& path, const SymbolTable& table);
SymbolTable read_table(const std::string& path);

// 64-byte header, then little-endian interleaved (re, im) doubles:
//   0  char[8]  magic "PNFTWAVE"
//   8  uint32   version
//  12  uint32   unit flag, 0 physical, 1 dimensionless
//  16  uint64   sample count
//  24  float64  sample rate (Hz, or 1/time unit)
//  32  float64  launch power reference in dBm, NaN when absent
//  40  zero padding
void write_waveform(const std::string& path, const Waveform& w);
Waveform read_waveform(const std::string& path);

// Comma-separated table with a header row; numbers use 17 significant digits.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const;  // throws when missing
};

void write_csv(const std::string& path, const CsvTable& table);
CsvTable read_csv(const std::string& path);

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);

}  // namespace pnft::io
