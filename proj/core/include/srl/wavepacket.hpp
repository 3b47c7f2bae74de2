#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "srl/extension.hpp"

namespace srl {

struct ThetaCap {
  Point2 center;
  double side = 0.0;
  Vec3 direction{};  // unit normal (grad phi, -1) / |.| at the centre
  std::size_t ix = 0;
  std::size_t iy = 0;

  Box box() const;
  // The concentric square of three times the side.
  Box triple() const;
};

// sqrt(R)^2 caps of side R^{-1/2}; sqrt(R) must be an integer.
std::vector<ThetaCap> make_theta_caps(const Surface& s, double R);

// Orthonormal basis of the plane orthogonal to d.
std::array<Vec3, 2> orthogonal_basis(const Vec3& d);

struct Tube {
  Vec3 base{};       // axis point closest to the origin
  Vec3 direction{};  // unit
  double radius = 0.0;
  double core_radius = 0.0;
  double length = 0.0;
  std::size_t theta = 0;
  std::array<long, 2> lattice{};
  // False for the one remainder per cap that collects every mode whose nearest lattice tube
  // misses [-R, R]^3; its lattice entry is then unset.
  bool meets_ball = true;

  double axis_distance(const Vec3& xi) const;
  bool contains(const Vec3& xi, double R) const;
  bool core_contains(const Vec3& xi, double R) const;
};

// Tubes of radius R^{1/2 + delta} on the R^{1/2} lattice orthogonal to the cap direction,
// keeping those that meet [-R, R]^3.
std::vector<Tube> make_tubes(const ThetaCap& theta, std::size_t theta_index, double R,
                             double delta);

// Distance from the line base + t d to the cube [-R, R]^3.
double line_cube_distance(const Vec3& base, const Vec3& d, double R);

struct PacketConfig {
  double delta = 0.4;
  // Kaiser window shape; zero picks 2.2 R^delta.
  double kaiser_beta = 0.0;
  double window_radius = 1.5;  // in cap sides
  double transition = 0.25;    // half width of the partition of unity ramps, in cap sides
};

// f = sum_T f_T with f_T = rho_theta * (sum of the Fourier modes of f psi_theta / rho_theta
// on the 3 theta box whose stationary axes fall nearest to T's axis).
class PacketDecomposition {
 public:
  PacketDecomposition(const SampledFunction& f, const Surface& s, double R,
                      const PacketConfig& config = {});

  double R() const { return R_; }
  double gamma() const { return surface_.gamma(); }
  const PacketConfig& config() const { return config_; }
  double beta() const { return beta_; }
  const SampledFunction& source() const { return f_; }
  const std::vector<ThetaCap>& caps() const { return caps_; }
  const std::vector<Tube>& tubes() const { return tubes_; }
  std::size_t samples_per_cap() const { return n_; }
  std::size_t local_size() const { return 3 * n_; }

  // Sample box of 3 theta, possibly reaching outside the unit square.
  Box local_domain(std::size_t theta) const;
  std::span<const std::uint32_t> modes(std::size_t tube) const;
  std::span<const cplx> coefficients(std::size_t theta) const;
  std::span<const std::size_t> tubes_of(std::size_t theta) const;
  std::span<const double> window() const { return rho_; }

  SampledFunction materialize(std::size_t tube) const;
  // Sum over all tubes, restricted to the source grid.
  SampledFunction reconstruct() const;
  // <f_T1, f_T2> over the local grid, using the window Gram table.
  cplx inner(std::size_t t1, std::size_t t2) const;
  double energy(std::size_t tube) const { return inner(tube, tube).real(); }
  // Integral of |f|^2 over 3 theta.
  double local_energy(std::size_t theta) const;

 private:
  void build();
  // rho times the tube's modes on the local grid.
  std::vector<cplx> local_values(std::size_t tube) const;

  SampledFunction f_;
  Surface surface_;
  double R_;
  PacketConfig config_;
  double beta_ = 0.0;
  std::size_t n_ = 0;
  std::vector<ThetaCap> caps_;
  std::vector<Tube> tubes_;
  std::vector<std::size_t> theta_tube_offsets_;
  std::vector<std::size_t> theta_tubes_;
  std::vector<std::size_t> tube_offsets_;
  std::vector<std::uint32_t> tube_modes_;
  std::vector<cplx> coeffs_;  // per theta, local_size^2 modes in FFT order
  std::vector<double> rho_;   // local window, shared by all caps
  std::vector<cplx> gram_;    // sum rho^2 e_{k} dA by FFT index of k
};

struct PacketAuditConfig {
  double off_tube_threshold = 0.0;  // zero means R^{-5}
  double reconstruction_threshold = 1e-3;
  double orthogonality_threshold = 1e-6;
  double constant_threshold = 8.0;
  std::size_t audit_thetas = 4;
  std::size_t tubes_per_theta = 4;
  std::size_t orthogonality_tubes = 24;
  std::size_t heights = 7;
  std::size_t angles = 12;
  std::vector<double> distance_factors{2.0, 2.5, 3.0};
};

struct PacketAudit {
  double R = 0.0;
  std::size_t tube_count = 0;
  std::size_t containment_failures = 0;
  double off_tube_ratio = 0.0;  // max |E f_T| / ||f||_2 at distance >= 2 radius
  std::size_t off_tube_probes = 0;
  double off_tube_threshold = 0.0;
  double reconstruction_error = 0.0;
  double orthogonality = 0.0;  // max |<f_T1, f_T2>| / int_{3 theta} |f|^2, disjoint pairs
  std::size_t orthogonality_pairs = 0;
  double constant = 0.0;  // max over theta of sum_T ||f_T||^2 / int_{3 theta} |f|^2
  bool containment_ok = false;
  bool off_tube_ok = false;
  bool reconstruction_ok = false;
  bool orthogonality_ok = false;
  bool constant_ok = false;

  // property,threshold,measured,pass rows.
  std::string csv() const;
};

PacketAudit verify_packets(const PacketDecomposition& dec, const PacketAuditConfig& config = {});

// Pointwise sup over strongly separated cap pairs of sqrt(|E f_t1| |E f_t2|); zero where no pair.
std::vector<double> bilinear_sup(const Surface& s, std::span<const Cap> caps,
                                 std::span<const std::vector<double>> magnitudes, double mu,
                                 double K);

struct CurveProbeConfig {
  double K = 0.0;
  double mu = 1.0;
  double angle_budget = 0.0;
  double step = 0.0;  // zero means 1e-3 / K
  std::size_t max_steps = 10'000'000;
};

struct CurveProbeReport {
  std::size_t samples = 0;
  double arc_forward = 0.0;
  double arc_backward = 0.0;
  double t_budget = 0.0;  // largest |t| with |determinant integral| <= budget
  bool budget_reached = false;
  double min_abs_integrand = 0.0;
  bool constant_sign = false;
  double max_residual = 0.0;  // max |psi| along the traced points
  double max_gradient_gap = 0.0;  // max |grad psi| along the traced points
  // budget * max_gradient_gap / (4 mu K^{-2}), from |Gamma| >= 4 mu K^{-2}.
  double bound = 0.0;
  bool bound_holds = false;
  std::vector<Point2> points;
};

// Traces psi(z) = phi(z - z1) + phi(z1) - phi(z - z2p) - phi(z2p) = 0 from z1 + z2p while
// z - z2p stays in cap1 and z - z1 stays in cap2, integrating det(N(z1), N(z2p), dN(z - z1)).
// Tracing ends where the curve leaves that chart.
// Throws std::invalid_argument unless the caps are strongly separated and contain z1, z2p.
CurveProbeReport intersection_curve_probe(const Surface& s, Point2 z1, Point2 z2p,
                                          const Cap& cap1, const Cap& cap2,
                                          const CurveProbeConfig& config);

}  // namespace srl
