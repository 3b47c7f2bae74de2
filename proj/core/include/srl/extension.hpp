#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <vector>

#include "srl/chirpz.hpp"
#include "srl/geometry.hpp"

namespace srl {

class SamplingError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Cell centered samples of a function on a rectangle; values[iy * nx + ix] at
// (x0 + (ix + 1/2) dx, y0 + (iy + 1/2) dy).
class SampledFunction {
 public:
  SampledFunction() = default;
  SampledFunction(Box domain, std::size_t nx, std::size_t ny);
  static SampledFunction from(Box domain, std::size_t nx, std::size_t ny,
                              const std::function<cplx(Point2)>& fn);

  const Box& domain() const { return domain_; }
  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }
  double dx() const { return domain_.width() / static_cast<double>(nx_); }
  double dy() const { return domain_.height() / static_cast<double>(ny_); }
  Point2 point(std::size_t ix, std::size_t iy) const;

  cplx& at(std::size_t ix, std::size_t iy) { return values_[iy * nx_ + ix]; }
  const cplx& at(std::size_t ix, std::size_t iy) const { return values_[iy * nx_ + ix]; }
  std::vector<cplx>& values() { return values_; }
  const std::vector<cplx>& values() const { return values_; }

  double l2_norm() const;
  double l1_norm() const;
  double linf_norm() const;
  // Zero outside the closed box.
  SampledFunction restricted(const Box& b) const;

 private:
  Box domain_{};
  std::size_t nx_ = 0;
  std::size_t ny_ = 0;
  std::vector<cplx> values_;
};

// Independent complex Gaussian samples (unit variance), magnitudes clipped to 1.
SampledFunction random_gaussian(std::size_t n, std::uint64_t seed, Box domain = unit_square);

// Indicator of the cap of side R^{-1/2} centred at c, sampled on that cap.
SampledFunction knapp(double R, Point2 center, std::size_t min_samples = 16);

struct ScaleParams {
  double R = 0.0;
  double K = 0.0;
  double epsilon = 0.0;
  double alpha = 0.0;
  double mu = 1.0;

  double delta() const { return epsilon * epsilon; }
  double delta_deg() const { return std::pow(epsilon, 4); }
  double delta_trans() const { return std::pow(epsilon, 6); }
  double degree() const { return std::pow(R, delta_deg()); }
  // True when K differs from its asymptotic value exp(epsilon^{-10}).
  bool desk_override() const;
  void validate() const;
};

// Cell centred cube grid xi_i = -R + (i + 1/2) h, h = 2R / M.
struct GridSpec {
  double R = 0.0;
  std::size_t M = 0;

  double h() const { return 2.0 * R / static_cast<double>(M); }
  double coord(std::size_t i) const { return -R + (static_cast<double>(i) + 0.5) * h(); }
  double cell_volume() const { return h() * h() * h(); }
  std::size_t size() const { return M * M * M; }
  std::size_t index(std::size_t i1, std::size_t i2, std::size_t i3) const {
    return (i3 * M + i2) * M + i1;
  }
  Vec3 point(std::size_t i1, std::size_t i2, std::size_t i3) const {
    return {coord(i1), coord(i2), coord(i3)};
  }
};

struct Field3 {
  GridSpec grid;
  std::vector<cplx> values;

  cplx& at(std::size_t i1, std::size_t i2, std::size_t i3) {
    return values[grid.index(i1, i2, i3)];
  }
  const cplx& at(std::size_t i1, std::size_t i2, std::size_t i3) const {
    return values[grid.index(i1, i2, i3)];
  }
};

// Minimum samples per unit length on the parameter side.
double required_sample_density(double R);
// Largest admissible frequency spacing.
double max_frequency_spacing(double gamma);
// Throws SamplingError when (f, M) under-resolve E f on [-R, R]^3.
void check_sampling(const SampledFunction& f, double gamma, double R, std::size_t M);

// Midpoint rule sum of f exp(i(xi1 x + xi2 y + xi3 phi)) over the samples.
cplx extension_at(const SampledFunction& f, const Surface& s, const Vec3& xi);

// A sample-aligned piece of f: half-open index box and optional 0/1 mask over it.
struct Atom {
  std::size_t ix0 = 0;
  std::size_t iy0 = 0;
  std::size_t ix1 = 0;
  std::size_t iy1 = 0;
  std::vector<std::uint8_t> mask;

  std::size_t width() const { return ix1 - ix0; }
  std::size_t height() const { return iy1 - iy0; }
};

// Sample index box of the samples whose centres lie in b.
Atom atom_for_box(const SampledFunction& f, const Box& b);

// Evaluates E(f 1_atom) slice by slice on the cube grid.
class SliceEvaluator {
 public:
  using SliceFields = std::vector<std::vector<cplx>>;
  // Called once per xi3 index, possibly concurrently; fields[a][i2 * M + i1].
  using Visitor = std::function<void(std::size_t i3, const SliceFields& fields)>;

  SliceEvaluator(const SampledFunction& f, const Surface& s, GridSpec grid,
                 std::vector<Atom> atoms);
  ~SliceEvaluator();
  SliceEvaluator(const SliceEvaluator&) = delete;
  SliceEvaluator& operator=(const SliceEvaluator&) = delete;

  const GridSpec& grid() const { return grid_; }
  std::size_t atom_count() const { return atoms_.size(); }
  void run(const Visitor& visit);

 private:
  struct Worker;
  void evaluate_slice(std::size_t i3, Worker& w);

  const SampledFunction& f_;
  Surface surface_;
  GridSpec grid_;
  std::vector<Atom> atoms_;
  std::vector<std::unique_ptr<Worker>> workers_;
};

// E f on the full grid. Checks the sampling rule first.
Field3 evaluate_extension(const SampledFunction& f, double gamma, double R, std::size_t M);

inline constexpr double p_infinity = std::numeric_limits<double>::infinity();

// Running (sum h^3 |v|^p)^{1/p}, or the maximum when p is infinite.
class LpAccumulator {
 public:
  explicit LpAccumulator(double p) : p_(p) {}
  void add(double magnitude);
  void merge(const LpAccumulator& other);
  double value(double cell_volume) const;
  double p() const { return p_; }

 private:
  double p_;
  double sum_ = 0.0;
  double max_ = 0.0;
};

double lp_norm(const Field3& field, double p);
double lp_norm(const Field3& field, double p, const std::vector<std::uint8_t>& mask);

// Lebesgue norms of E f for each p, streaming over slices without storing the field.
std::vector<double> extension_norms(const SampledFunction& f, double gamma, double R,
                                    std::size_t M, const std::vector<double>& ps);

}  // namespace srl
