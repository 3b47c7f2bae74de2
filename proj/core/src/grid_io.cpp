#include "srl/grid_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace srl {

namespace {

constexpr char magic[4] = {'S', 'R', 'L', '1'};

template <typename T>
void put(std::ostream& out, T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
  }
  out.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  unsigned char b[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(b), sizeof(T))) {
    throw std::runtime_error("truncated grid file");
  }
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
  }
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

void header(std::ostream& out, const GridSpec& grid, double gamma) {
  if (grid.M > UINT32_MAX) throw std::invalid_argument("grid too large for the file format");
  out.write(magic, 4);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(grid.M));
  put<double>(out, grid.R);
  put<double>(out, gamma);
}

}  // namespace

void write_grid(std::ostream& out, const Field3& field, double gamma) {
  if (field.values.size() != field.grid.size()) throw std::invalid_argument("field size mismatch");
  header(out, field.grid, gamma);
  for (const cplx& v : field.values) {
    put<double>(out, v.real());
    put<double>(out, v.imag());
  }
  if (!out) throw std::runtime_error("failed to write grid");
}

void write_grid(std::ostream& out, const GridSpec& grid, std::span<const double> values,
                double gamma) {
  if (values.size() != grid.size()) throw std::invalid_argument("grid value count mismatch");
  header(out, grid, gamma);
  for (double v : values) {
    put<double>(out, v);
    put<double>(out, 0.0);
  }
  if (!out) throw std::runtime_error("failed to write grid");
}

GridFile read_grid(std::istream& in) {
  char m[4];
  if (!in.read(m, 4) || std::memcmp(m, magic, 4) != 0) {
    throw std::runtime_error("not an SRL1 grid file");
  }
  GridFile g;
  const auto M = get<std::uint32_t>(in);
  g.field.grid = {get<double>(in), M};
  g.gamma = get<double>(in);
  g.field.values.resize(g.field.grid.size());
  for (cplx& v : g.field.values) {
    const double re = get<double>(in);
    const double im = get<double>(in);
    v = {re, im};
  }
  return g;
}

void write_grid_file(const std::string& path, const Field3& field, double gamma) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  write_grid(out, field, gamma);
}

void write_grid_file(const std::string& path, const GridSpec& grid, std::span<const double> values,
                     double gamma) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  write_grid(out, grid, values, gamma);
}

GridFile read_grid_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_grid(in);
}

}  // namespace srl
