#include "gosplit/accuracy.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>

#include "gosplit/error.hpp"
#include "gosplit/units.hpp"
#include "text_util.hpp"

namespace gosplit {

namespace {

constexpr double kGridMatchRel = 1e-9;

bool is_probability(double v) { return v >= 0.0 && v <= 1.0; }

}  // namespace

void SynthShape::validate() const {
  if (!is_probability(g_max)) throw DomainError("synthetic LUT: g_max must lie in [0,1]");
  if (!(depth_slope > 0.0) || !std::isfinite(depth_slope)) {
    throw DomainError("synthetic LUT: depth slope must be finite and > 0");
  }
  if (!(snr_slope > 0.0) || !std::isfinite(snr_slope)) {
    throw DomainError("synthetic LUT: SNR slope must be finite and > 0");
  }
  if (!std::isfinite(k_mid) || !std::isfinite(snr_mid_db)) {
    throw DomainError("synthetic LUT: midpoints must be finite");
  }
}

AccuracyLUT::AccuracyLUT(std::vector<double> snr_grid_db, std::vector<std::vector<double>> rows,
                         double noiseless)
    : grid_db_(std::move(snr_grid_db)), rows_(std::move(rows)), noiseless_(noiseless) {
  if (grid_db_.empty()) throw DomainError("accuracy LUT: empty SNR grid");
  if (rows_.empty()) throw DomainError("accuracy LUT: no splitting points");
  for (std::size_t i = 1; i < grid_db_.size(); ++i) {
    if (!(grid_db_[i] > grid_db_[i - 1])) {
      throw DomainError("accuracy LUT: SNR grid must be strictly increasing");
    }
  }
  for (std::size_t k = 0; k < rows_.size(); ++k) {
    if (rows_[k].size() != grid_db_.size()) {
      throw DomainError(fmt::format("accuracy LUT: row {} has {} entries, grid has {}", k,
                                    rows_[k].size(), grid_db_.size()));
    }
    for (std::size_t j = 0; j < rows_[k].size(); ++j) {
      if (!is_probability(rows_[k][j])) {
        throw DomainError(fmt::format("accuracy LUT: entry ({}, {}) = {} outside [0,1]", k, j,
                                      rows_[k][j]));
      }
    }
  }
  if (!is_probability(noiseless_)) throw DomainError("accuracy LUT: noiseless value outside [0,1]");
  grid_.reserve(grid_db_.size());
  for (double db : grid_db_) grid_.push_back(units::db_to_linear(db));
}

std::size_t AccuracyLUT::grid_index(double gamma) const {
  for (std::size_t j = 0; j < grid_.size(); ++j) {
    if (std::abs(grid_[j] - gamma) <= kGridMatchRel * grid_[j]) return j;
  }
  throw DomainError(fmt::format("SNR {} (linear) is not on the accuracy grid", gamma));
}

double AccuracyLUT::at(SpIndex k, std::size_t snr_idx) const {
  if (k > last_sp()) throw DomainError(fmt::format("SP index {} outside 0..{}", k, last_sp()));
  if (k == last_sp()) return noiseless_;
  if (snr_idx >= grid_.size()) throw DomainError("SNR grid index out of range");
  return rows_[k][snr_idx];
}

double lut_lookup(const AccuracyLUT& lut, SpIndex k, double gamma) {
  if (k > lut.last_sp()) {
    throw DomainError(fmt::format("SP index {} outside 0..{}", k, lut.last_sp()));
  }
  if (k == lut.last_sp()) return lut.noiseless();
  return lut.at(k, lut.grid_index(gamma));
}

AccuracyLUT synth_lut(SpIndex last_sp, const std::vector<double>& snr_grid_db,
                      const SynthShape& shape) {
  shape.validate();
  std::vector<std::vector<double>> rows(last_sp + 1, std::vector<double>(snr_grid_db.size()));
  for (SpIndex k = 0; k <= last_sp; ++k) {
    for (std::size_t j = 0; j < snr_grid_db.size(); ++j) {
      const double x = shape.depth_slope * (static_cast<double>(k) - shape.k_mid) +
                       shape.snr_slope * (snr_grid_db[j] - shape.snr_mid_db);
      rows[k][j] = shape.g_max / (1.0 + std::exp(-x));
    }
  }
  return AccuracyLUT(snr_grid_db, std::move(rows), shape.g_max);
}

AccuracyLUT load_lut(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  if (!detail::next_content_line(in, line, lineno)) throw ParseError("accuracy LUT: empty input");

  auto header = detail::split_csv(line);
  if (header.size() < 2 || header[0] != "snr_db") {
    throw ParseError("accuracy LUT: header must be `snr_db,<g1>,...`, got `" + line + "`", lineno);
  }
  std::vector<double> grid_db;
  for (std::size_t c = 1; c < header.size(); ++c) {
    grid_db.push_back(detail::parse_double(header[c], lineno, fmt::format("header column {}", c)));
    if (c > 1 && !(grid_db.back() > grid_db[grid_db.size() - 2])) {
      throw ParseError(fmt::format("accuracy LUT: SNR grid not increasing at column {}", c), lineno);
    }
  }

  std::vector<std::vector<double>> rows;
  bool have_noiseless = false;
  double noiseless = 0.0;
  while (detail::next_content_line(in, line, lineno)) {
    if (have_noiseless) throw ParseError("accuracy LUT: content after `noiseless` line", lineno);
    const auto cells = detail::split_csv(line);
    if (cells[0] == "noiseless") {
      if (cells.size() != 2) throw ParseError("accuracy LUT: `noiseless,<value>` expected", lineno);
      noiseless = detail::parse_double(cells[1], lineno, "noiseless");
      if (!is_probability(noiseless)) {
        throw ParseError("accuracy LUT: noiseless accuracy outside [0,1] at column 1", lineno);
      }
      have_noiseless = true;
      continue;
    }
    if (cells.size() != grid_db.size() + 1) {
      throw ParseError(fmt::format("accuracy LUT: row has {} values, header has {} SNRs",
                                   cells.size() - 1, grid_db.size()),
                       lineno);
    }
    const double k = detail::parse_double(cells[0], lineno, "k");
    if (k != static_cast<double>(rows.size())) {
      throw ParseError(fmt::format("accuracy LUT: expected row k = {}", rows.size()), lineno);
    }
    std::vector<double> row;
    for (std::size_t c = 1; c < cells.size(); ++c) {
      const double v = detail::parse_double(cells[c], lineno, fmt::format("column {}", c));
      if (!is_probability(v)) {
        throw ParseError(fmt::format("accuracy LUT: value {} outside [0,1] at column {}", v, c),
                         lineno);
      }
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("accuracy LUT: no SP rows", lineno);
  if (!have_noiseless) throw ParseError("accuracy LUT: missing final `noiseless` line", lineno);
  return AccuracyLUT(std::move(grid_db), std::move(rows), noiseless);
}

AccuracyLUT load_lut_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open accuracy LUT file " + path);
  return load_lut(in);
}

void save_lut(std::ostream& out, const AccuracyLUT& lut) {
  out << "snr_db";
  for (double db : lut.snr_grid_db()) out << ',' << fmt::format("{}", db);
  out << '\n';
  for (std::size_t k = 0; k < lut.rows().size(); ++k) {
    out << k;
    for (double v : lut.rows()[k]) out << ',' << fmt::format("{}", v);
    out << '\n';
  }
  out << "noiseless," << fmt::format("{}", lut.noiseless()) << '\n';
}

}  // namespace gosplit
