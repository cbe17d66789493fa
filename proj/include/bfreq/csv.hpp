#pragma once

// CSV writers. Numbers use the shortest round-trip form, which is locale
// independent; the cemetery is written as NaN; lines end in LF.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "bfreq/csbi_sim.hpp"
#include "bfreq/error.hpp"
#include "bfreq/time_change.hpp"

namespace bfreq {

inline std::string format_number(double v) {
  if (std::isnan(v)) return "NaN";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& file, const std::vector<std::string>& header) {
    if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
    out_.open(file, std::ios::binary | std::ios::trunc);
    require(out_.good(), ErrorCode::InvalidConfig, "cannot write " + file.string());
    row_strings(header);
  }

  void row(std::initializer_list<double> values) {
    bool first = true;
    for (double v : values) {
      if (!first) out_ << ',';
      out_ << format_number(v);
      first = false;
    }
    out_ << '\n';
  }

  void row_strings(const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) out_ << (k ? "," : "") << cells[k];
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

/// t,x1,x2,z,r per knot of a mass path.
inline void write_mass_path(const std::filesystem::path& file, const MassPath& mp) {
  CsvWriter w(file, {"t", "x1", "x2", "z", "r"});
  const auto fp = frequency_path(mp);
  for (std::size_t k = 0; k < mp.size(); ++k)
    w.row({mp.grid[k], mp.states[k][0], mp.states[k][1], mp.z(k), fp.values[k]});
}

/// t_changed,r_bar for a time-changed frequency path.
inline void write_changed_path(const std::filesystem::path& file, const FrequencyPath& fp) {
  CsvWriter w(file, {"t_changed", "r_bar"});
  for (std::size_t k = 0; k < fp.grid.size(); ++k) w.row({fp.grid[k], fp.values[k]});
}

/// t,r_bar for a directly simulated frequency path.
inline void write_frequency_path(const std::filesystem::path& file, const FrequencyPath& fp) {
  CsvWriter w(file, {"t", "r_bar"});
  for (std::size_t k = 0; k < fp.grid.size(); ++k) w.row({fp.grid[k], fp.values[k]});
}

}  // namespace bfreq
