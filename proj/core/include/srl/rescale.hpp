#pragma once

#include <complex>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "srl/extension.hpp"

namespace srl {

enum class ReparamKind { horizontal, vertical, short_strip };

std::string to_string(ReparamKind k);

// Affine change of variables taking a strip onto a full-size patch of a rescaled surface:
// scale * phi_in(x, y) = phi_out(x', y') + lin_x x' + lin_y y' + constant.
class AffineReparam {
 public:
  ReparamKind kind() const { return kind_; }
  double K() const { return K_; }
  double a() const { return a_; }
  double b() const { return b_; }
  double gamma_in() const { return gamma_in_; }
  double gamma_out() const { return gamma_out_; }
  // The strip L the map is built for.
  Box strip() const;
  // Area of L divided by area of its image, the Jacobian of the inverse map.
  double jacobian() const;
  // K^{1/4}, K^{1/2} or K^{3/4}.
  double phase_scale() const;
  double linear_x() const;
  double linear_y() const;

  Point2 forward(Point2 z) const;
  Point2 inverse(Point2 zp) const;
  Vec3 dual(const Vec3& xi) const;
  Vec3 dual_inverse(const Vec3& xip) const;
  // xi . (x, y, phi_in) - xi' . (x', y', phi_out) at the reference point, which does not depend
  // on (x', y') once xi' = dual(xi).
  double phase_offset(const Vec3& xi) const;

  std::string csv_header() const;
  std::string csv_row() const;

  friend AffineReparam horizontal_rescale(double gamma, double K, double b);
  friend AffineReparam vertical_rescale(double gamma, double K, double a);
  friend AffineReparam short_rescale(double gamma, double K, double a, double b);

 private:
  ReparamKind kind_ = ReparamKind::horizontal;
  double K_ = 1.0;
  double a_ = 0.0;
  double b_ = 0.0;
  double gamma_in_ = 0.0;
  double gamma_out_ = 0.0;
};

AffineReparam horizontal_rescale(double gamma, double K, double b);
// Throws std::invalid_argument when |gamma| K^{1/2} > 1.
AffineReparam vertical_rescale(double gamma, double K, double a);
AffineReparam short_rescale(double gamma, double K, double a, double b);

// scale phi_in(inverse(p)) - phi_out(p) - linear(p) - (same at the origin).
double phi_identity_residual(const AffineReparam& r, Point2 p);

// f^L on the image: sample values carried to the image points, cell areas scaled by 1/jacobian.
struct PulledBack {
  std::vector<Point2> points;
  std::vector<cplx> values;
  double cell_area = 0.0;

  double l2_norm() const;
  double linf_norm() const;
};

PulledBack pullback(const AffineReparam& r, const SampledFunction& f_L);

// A function known in closed form, with the box outside which it vanishes.
struct AnalyticFunction {
  std::function<cplx(Point2)> eval;
  Box support;
};

struct QuadratureRule {
  std::size_t panels = 32;  // per unit length
  std::size_t order = 8;    // Gauss-Legendre points per panel
};

// Gauss-Legendre quadrature of f exp(i xi.(x, y, phi)) over the box.
cplx extension_quadrature(const AnalyticFunction& f, const Surface& s, const Vec3& xi,
                          const QuadratureRule& rule = {});

// Max over probes of | |E f_L(xi)| - J |E' f^L(dual(xi))| | / |E f_L(xi)|, both sides by
// independent quadrature; the right side integrates over the exact image parallelogram.
// Throws std::invalid_argument when f's support leaves the strip.
double verify_operator_identity(const AffineReparam& r, const AnalyticFunction& f,
                                std::span<const Vec3> probes, const QuadratureRule& rule = {});

}  // namespace srl
