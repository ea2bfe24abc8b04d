#pragma once

// Inference accuracy G(k, gamma) as a look-up table over splitting points and
// the discrete set of transmission SNRs.

#include <cstddef>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "gosplit/model.hpp"

namespace gosplit {

// Parameters of the logistic surface used when no measured table is supplied:
//   G(k, g) = g_max * logistic(depth_slope * (k - k_mid) + snr_slope * (g_dB - snr_mid_db))
struct SynthShape {
  double g_max = 0.93;
  double depth_slope = 0.5;
  double snr_slope = 0.2;
  double k_mid = 8.0;
  double snr_mid_db = 0.0;

  void validate() const;
};

class AccuracyLUT {
 public:
  AccuracyLUT() = default;
  // `rows` holds one vector per SP (0..J), each with one entry per grid SNR.
  AccuracyLUT(std::vector<double> snr_grid_db, std::vector<std::vector<double>> rows,
              double noiseless);

  std::size_t sp_count() const noexcept { return rows_.size(); }
  SpIndex last_sp() const noexcept { return rows_.size() - 1; }
  const std::vector<double>& snr_grid_db() const noexcept { return grid_db_; }
  const std::vector<double>& snr_grid() const noexcept { return grid_; }
  double noiseless() const noexcept { return noiseless_; }
  const std::vector<std::vector<double>>& rows() const noexcept { return rows_; }

  // Position of `gamma` (linear) in the grid; throws DomainError when absent.
  std::size_t grid_index(double gamma) const;

  // Accuracy by SP and grid position; k == J ignores the SNR.
  double at(SpIndex k, std::size_t snr_idx) const;

 private:
  std::vector<double> grid_db_;
  std::vector<double> grid_;
  std::vector<std::vector<double>> rows_;
  double noiseless_ = 1.0;
};

// G(k, gamma). gamma must be a grid member whenever k < J; no interpolation.
double lut_lookup(const AccuracyLUT& lut, SpIndex k, double gamma);

AccuracyLUT synth_lut(SpIndex last_sp, const std::vector<double>& snr_grid_db,
                      const SynthShape& shape);

// Text format:
//   snr_db,<g1>,<g2>,...
//   <k>,<acc at g1>,<acc at g2>,...     one line per SP, k = 0..J
//   noiseless,<value>
AccuracyLUT load_lut(std::istream& in);
AccuracyLUT load_lut_file(const std::string& path);
void save_lut(std::ostream& out, const AccuracyLUT& lut);

}  // namespace gosplit
