#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "srl/extension.hpp"

namespace srl {

// Little endian: "SRL1", u32 points per axis M, f64 R, f64 gamma, then M^3 (re, im) f64 pairs
// in GridSpec index order.
struct GridFile {
  Field3 field;
  double gamma = 0.0;
};

void write_grid(std::ostream& out, const Field3& field, double gamma);
// Real data (magnitudes, labels) stored with zero imaginary parts.
void write_grid(std::ostream& out, const GridSpec& grid, std::span<const double> values,
                double gamma);
GridFile read_grid(std::istream& in);

void write_grid_file(const std::string& path, const Field3& field, double gamma);
void write_grid_file(const std::string& path, const GridSpec& grid, std::span<const double> values,
                     double gamma);
GridFile read_grid_file(const std::string& path);

}  // namespace srl
