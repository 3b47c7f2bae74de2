#pragma once

#include <array>

namespace srl {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

using Vec2 = std::array<double, 2>;
using Vec3 = std::array<double, 3>;
using Mat2 = std::array<std::array<double, 2>, 2>;

// Axis aligned rectangle [x0, x1] x [y0, y1].
struct Box {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 1.0;
  double y1 = 1.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
  Point2 center() const { return {0.5 * (x0 + x1), 0.5 * (y0 + y1)}; }

  // Half-open membership; the closing edges of the unit square are included.
  bool contains(Point2 p) const;
  bool contains_closed(Point2 p, double tol = 0.0) const;
  bool contains_box(const Box& other, double tol = 0.0) const;
  Box intersect(const Box& other) const;
  bool empty() const { return !(x1 > x0 && y1 > y0); }
};

inline constexpr Box unit_square{0.0, 0.0, 1.0, 1.0};

// A square cap of the parameter square: nominal center and side, truncated to the unit square.
struct Cap {
  Point2 center;
  double side = 0.0;

  Box nominal() const;
  Box box() const;
  bool contains(Point2 p) const { return box().contains(p); }
};

// The graph of phi(x, y) = x y + gamma y^3 / 3 over the unit square.
class Surface {
 public:
  explicit Surface(double gamma);

  double gamma() const { return gamma_; }
  double phi(Point2 z) const;
  Vec2 gradient(Point2 z) const;
  Mat2 hessian(Point2 z) const;
  Mat2 hessian_inverse(Point2 z) const;
  // (grad phi, -1), not normalised.
  Vec3 normal(Point2 z) const;
  Vec3 unit_normal(Point2 z) const;

 private:
  double gamma_;
};

// t_z(z1, z2) = x2 - x1 + gamma (y1 + y2 - y)(y2 - y1).
double t_form(const Surface& s, Point2 z, Point2 z1, Point2 z2);

// <H^{-1}(z) (grad phi(z2) - grad phi(z1)), grad phi(z2) - grad phi(z1)>.
double gamma_pair_matrix(const Surface& s, Point2 z, Point2 z1, Point2 z2);
// Closed form 2 (y2 - y1) t_z(z1, z2).
double gamma_pair(const Surface& s, Point2 z, Point2 z1, Point2 z2);

// <H^{-1}(z) (grad phi(z2) - grad phi(z1)), grad phi(z2p) - grad phi(z1p)>.
double gamma_quad(const Surface& s, Point2 z, Point2 z1, Point2 z2, Point2 z1p, Point2 z2p);
// Closed form (y2p - y1p) t_z(z1, z2) + (y2 - y1) t_z(z1p, z2p).
double gamma_quad_expansion(const Surface& s, Point2 z, Point2 z1, Point2 z2, Point2 z1p,
                            Point2 z2p);

// min(|y2c - y1c|, max(|t at z1c|, |t at z2c|)) >= 10 sqrt(mu) / K, using nominal centers.
bool strongly_separated(const Surface& s, const Cap& a, const Cap& b, double mu, double K);
// The larger of the two center t values, and the center y gap.
struct SeparationMeasure {
  double dy = 0.0;
  double t_first = 0.0;
  double t_second = 0.0;
  double threshold = 0.0;
};
SeparationMeasure separation_measure(const Surface& s, const Cap& a, const Cap& b, double mu,
                                     double K);

// Angle in radians between the normals at z1 and z2.
double normal_angle(const Surface& s, Point2 z1, Point2 z2);

double dot(const Vec3& a, const Vec3& b);
Vec3 cross(const Vec3& a, const Vec3& b);
double norm(const Vec3& a);
double det3(const Vec3& c0, const Vec3& c1, const Vec3& c2);

}  // namespace srl
