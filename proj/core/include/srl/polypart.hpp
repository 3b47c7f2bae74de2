#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "srl/extension.hpp"
#include "srl/wavepacket.hpp"

namespace srl {

using Monomial = std::array<int, 3>;

// All exponents of total degree <= d, graded then lexicographic.
std::vector<Monomial> monomials(int d);

// Trivariate polynomial in the normalised coordinates u = xi / scale.
class Polynomial3 {
 public:
  Polynomial3() = default;
  Polynomial3(int degree, std::vector<double> coeffs, double scale);

  int degree() const { return degree_; }
  double scale() const { return scale_; }
  const std::vector<Monomial>& terms() const { return terms_; }
  const std::vector<double>& coefficients() const { return coeffs_; }

  double operator()(const Vec3& xi) const;
  // Gradient with respect to xi.
  Vec3 gradient(const Vec3& xi) const;
  double coefficient_norm() const;

 private:
  int degree_ = 0;
  double scale_ = 1.0;
  std::vector<Monomial> terms_;
  std::vector<double> coeffs_;
};

// A product of factors; Z(P) is the union of the factor zero sets.
struct Poly3 {
  std::vector<Polynomial3> factors;

  int degree() const;
  double operator()(const Vec3& xi) const;
  // Bit k set when factor k is non-negative.
  std::uint32_t sign_pattern(const Vec3& xi) const;
};

// factor,a,b,c,coefficient rows after a "# scale <s>" line.
void write_factors(std::ostream& out, const Poly3& p);
Poly3 read_factors(std::istream& in);

struct CellDecomposition {
  GridSpec grid;
  std::vector<std::uint8_t> wall;
  std::vector<std::uint32_t> pattern;   // sign pattern per grid point
  std::vector<std::int32_t> labels;     // component label, -1 on the wall
  std::vector<std::uint32_t> cell_pattern;  // sign pattern of each component
  std::size_t cell_count = 0;

  // Weight sum per component over grid points off the wall.
  std::vector<double> cell_masses(std::span<const double> weights) const;
};

// Grid points within R^{1/2 + delta} of Z(P): distance to zero points found on sign changing
// grid edges (jump flooding), plus the gradient ray estimate for zeros the grid does not see.
std::vector<std::uint8_t> wall(const Poly3& p, const GridSpec& grid, double delta);

// Distance to the first zero of F along the descending gradient ray from xi, an upper bound on
// the distance to Z(F); infinity when the ray finds no zero within reach.
double variety_distance(const Polynomial3& f, const Vec3& xi, double reach);

// 6-connected components of the grid minus the wall, never joining different sign patterns.
CellDecomposition cells(const Poly3& p, const GridSpec& grid, std::vector<std::uint8_t> wall);

struct BisectionStep {
  int degree = 0;
  std::size_t pieces = 0;
  double max_imbalance = 0.0;  // max over pieces of |m+ - m-| / m
  std::size_t restarts = 0;
  bool accepted = false;
};

struct PartitionConfig {
  double tolerance = 0.02;
  std::size_t restarts = 8;
  std::size_t sweeps = 4;
  std::uint64_t seed = 1;
};

struct Partition {
  Poly3 polynomial;
  std::vector<BisectionStep> steps;
  // Mass of each non-empty sign class over the whole grid, wall included.
  std::vector<double> piece_masses;
  bool best_effort = false;
};

// ceil(log2 D^3) bisections; each picks the lowest degree d with dim >= pieces + 1, solves a
// tanh-smoothed imbalance system by Gauss-Newton and polishes by exact coordinate descent over
// sorted sign-change breakpoints.
Partition ham_sandwich_partition(std::span<const double> weights, const GridSpec& grid, int D,
                                 const PartitionConfig& config = {});

// Lowest d with (d+1)(d+2)(d+3)/6 >= n.
int bisector_degree(std::size_t n);

struct Incidence {
  std::vector<std::vector<std::size_t>> cells_of_tube;  // by sign pattern of O_i'
  std::vector<std::vector<std::size_t>> tubes_of_cell;
  std::size_t max_cells_per_tube = 0;
  std::size_t grazing = 0;  // tubes with a wall point within one grid step of the tube boundary
};

// T_i = {T : T meets O_i'} by grid membership; cells here are sign classes.
Incidence tube_cell_incidence(std::span<const Tube> tubes, const CellDecomposition& dec);

struct ClassifyConfig {
  std::size_t max_wall_samples = 20000;
  std::size_t max_zero_samples = 20000;
};

struct BallClassification {
  Vec3 center{};
  std::vector<std::size_t> tangential;
  std::vector<std::size_t> transversal;
  std::vector<std::size_t> unclassified;
  std::size_t tangential_directions = 0;
};

struct TubeClassification {
  double ball_radius = 0.0;
  double threshold = 0.0;  // R^{-1/2 + 2 delta}
  std::vector<BallClassification> balls;
  std::vector<std::size_t> transversal_count;  // per tube, number of balls
  std::size_t max_transversal = 0;
  std::size_t max_tangential_directions = 0;
};

TubeClassification classify_tubes(std::span<const Tube> tubes, const Poly3& p,
                                  const CellDecomposition& dec, double delta,
                                  const ClassifyConfig& config = {});

}  // namespace srl
