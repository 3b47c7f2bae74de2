#include "srl/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace srl {

bool Box::contains(Point2 p) const {
  const bool in_x = (p.x >= x0 && p.x < x1) || (x1 == 1.0 && p.x == 1.0);
  const bool in_y = (p.y >= y0 && p.y < y1) || (y1 == 1.0 && p.y == 1.0);
  return in_x && in_y;
}

bool Box::contains_closed(Point2 p, double tol) const {
  return p.x >= x0 - tol && p.x <= x1 + tol && p.y >= y0 - tol && p.y <= y1 + tol;
}

bool Box::contains_box(const Box& o, double tol) const {
  return o.x0 >= x0 - tol && o.x1 <= x1 + tol && o.y0 >= y0 - tol && o.y1 <= y1 + tol;
}

Box Box::intersect(const Box& o) const {
  return {std::max(x0, o.x0), std::max(y0, o.y0), std::min(x1, o.x1), std::min(y1, o.y1)};
}

Box Cap::nominal() const {
  const double h = 0.5 * side;
  return {center.x - h, center.y - h, center.x + h, center.y + h};
}

Box Cap::box() const { return nominal().intersect(unit_square); }

Surface::Surface(double gamma) : gamma_(gamma) {
  if (!std::isfinite(gamma) || std::abs(gamma) > 1.0) {
    throw std::invalid_argument("surface parameter gamma must satisfy |gamma| <= 1");
  }
}

double Surface::phi(Point2 z) const { return z.x * z.y + gamma_ * z.y * z.y * z.y / 3.0; }

Vec2 Surface::gradient(Point2 z) const { return {z.y, z.x + gamma_ * z.y * z.y}; }

Mat2 Surface::hessian(Point2 z) const { return {{{0.0, 1.0}, {1.0, 2.0 * gamma_ * z.y}}}; }

Mat2 Surface::hessian_inverse(Point2 z) const {
  return {{{-2.0 * gamma_ * z.y, 1.0}, {1.0, 0.0}}};
}

Vec3 Surface::normal(Point2 z) const {
  const Vec2 g = gradient(z);
  return {g[0], g[1], -1.0};
}

Vec3 Surface::unit_normal(Point2 z) const {
  Vec3 n = normal(z);
  const double l = norm(n);
  for (double& c : n) c /= l;
  return n;
}

double t_form(const Surface& s, Point2 z, Point2 z1, Point2 z2) {
  return z2.x - z1.x + s.gamma() * (z1.y + z2.y - z.y) * (z2.y - z1.y);
}

namespace {

Vec2 gradient_difference(const Surface& s, Point2 a, Point2 b) {
  const Vec2 ga = s.gradient(a);
  const Vec2 gb = s.gradient(b);
  return {gb[0] - ga[0], gb[1] - ga[1]};
}

double quadratic_form(const Mat2& m, const Vec2& u, const Vec2& v) {
  const double mu0 = m[0][0] * u[0] + m[0][1] * u[1];
  const double mu1 = m[1][0] * u[0] + m[1][1] * u[1];
  return mu0 * v[0] + mu1 * v[1];
}

}  // namespace

double gamma_pair_matrix(const Surface& s, Point2 z, Point2 z1, Point2 z2) {
  const Vec2 d = gradient_difference(s, z1, z2);
  return quadratic_form(s.hessian_inverse(z), d, d);
}

double gamma_pair(const Surface& s, Point2 z, Point2 z1, Point2 z2) {
  return 2.0 * (z2.y - z1.y) * t_form(s, z, z1, z2);
}

double gamma_quad(const Surface& s, Point2 z, Point2 z1, Point2 z2, Point2 z1p, Point2 z2p) {
  return quadratic_form(s.hessian_inverse(z), gradient_difference(s, z1, z2),
                        gradient_difference(s, z1p, z2p));
}

double gamma_quad_expansion(const Surface& s, Point2 z, Point2 z1, Point2 z2, Point2 z1p,
                            Point2 z2p) {
  return (z2p.y - z1p.y) * t_form(s, z, z1, z2) + (z2.y - z1.y) * t_form(s, z, z1p, z2p);
}

SeparationMeasure separation_measure(const Surface& s, const Cap& a, const Cap& b, double mu,
                                     double K) {
  const Point2 c1 = a.center;
  const Point2 c2 = b.center;
  return {std::abs(c2.y - c1.y), std::abs(t_form(s, c1, c1, c2)),
          std::abs(t_form(s, c2, c1, c2)), 10.0 * std::sqrt(mu) / K};
}

bool strongly_separated(const Surface& s, const Cap& a, const Cap& b, double mu, double K) {
  const SeparationMeasure m = separation_measure(s, a, b, mu, K);
  return std::min(m.dy, std::max(m.t_first, m.t_second)) >= m.threshold;
}

double normal_angle(const Surface& s, Point2 z1, Point2 z2) {
  const Vec3 a = s.normal(z1);
  const Vec3 b = s.normal(z2);
  return std::atan2(norm(cross(a, b)), dot(a, b));
}

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

double det3(const Vec3& c0, const Vec3& c1, const Vec3& c2) { return dot(c0, cross(c1, c2)); }

}  // namespace srl
