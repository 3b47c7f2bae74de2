#pragma once

#include <array>
#include <vector>

#include "srl/extension.hpp"

namespace srl {

// exp(1 - 1/(1 - |u|^2)) on |u| < 1, zero outside.
double bump(double u1, double u2);

struct FreqTile {
  std::array<int, 2> y{};
  double energy = 0.0;  // ||f_y||_2
  double in_cube_peak = 0.0;
  std::vector<double> distances;  // multiples of R
  std::vector<double> off_peak;   // max |E f_y| at |xi' + R y| = distance, 0 <= xi3 <= R
  double ratio_at_4R = 0.0;
  double fitted_decay = 0.0;  // N in ratio ~ distance^{-N}, fitted for distance >= 4R
};

struct FreqTileReport {
  double R = 0.0;
  double partition_residual = 0.0;      // max |sum_y chi_y - 1| on the DFT lattice
  double reconstruction_error = 0.0;    // relative l2 of sum_y f_y - f
  std::vector<FreqTile> tiles;          // tiles carrying energy, largest first
};

struct FreqTileConfig {
  double pad = 0.5;             // padding on each side, in units of the domain width
  double energy_floor = 1e-12;  // relative to ||f||_2
  bool measure_decay = true;
  std::size_t max_decay_tiles = 4;  // decay is measured on the most energetic tiles only
  std::size_t angles = 16;
  std::vector<double> distances{2.0, 3.0, 4.0, 6.0, 8.0};
};

// f_y = f * check(chi_y), chi_y(eta) = chi(eta / R - y) normalised to a partition of unity.
// The sign convention matches E: f_y carries frequencies near R y, so E f_y concentrates
// near xi' = -R y - xi3 grad phi.
FreqTileReport freq_tile_audit(const SampledFunction& f, double gamma, double R,
                               const FreqTileConfig& config = {});

}  // namespace srl
