#include "srl/rescale.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace srl {

std::string to_string(ReparamKind k) {
  switch (k) {
    case ReparamKind::horizontal:
      return "horizontal";
    case ReparamKind::vertical:
      return "vertical";
    case ReparamKind::short_strip:
      return "short";
  }
  return "unknown";
}

namespace {

double q4(double K) { return std::pow(K, 0.25); }
double q2(double K) { return std::sqrt(K); }

void check_common(double gamma, double K) {
  if (!(K >= 1.0) || !std::isfinite(K)) throw std::invalid_argument("K must be >= 1");
  if (!(std::abs(gamma) <= 1.0)) throw std::invalid_argument("|gamma| must be <= 1");
}

void check_vertical(double gamma, double K) {
  if (std::abs(gamma) * q2(K) > 1.0) {
    throw std::invalid_argument("precondition violated: |gamma| K^{1/2} must be <= 1");
  }
}

}  // namespace

AffineReparam horizontal_rescale(double gamma, double K, double b) {
  check_common(gamma, K);
  AffineReparam r;
  r.kind_ = ReparamKind::horizontal;
  r.K_ = K;
  r.b_ = b;
  r.gamma_in_ = gamma;
  r.gamma_out_ = gamma / q2(K);
  return r;
}

AffineReparam vertical_rescale(double gamma, double K, double a) {
  check_common(gamma, K);
  check_vertical(gamma, K);
  AffineReparam r;
  r.kind_ = ReparamKind::vertical;
  r.K_ = K;
  r.a_ = a;
  r.gamma_in_ = gamma;
  r.gamma_out_ = gamma * q2(K);
  return r;
}

AffineReparam short_rescale(double gamma, double K, double a, double b) {
  check_common(gamma, K);
  check_vertical(gamma, K);
  AffineReparam r;
  r.kind_ = ReparamKind::short_strip;
  r.K_ = K;
  r.a_ = a;
  r.b_ = b;
  r.gamma_in_ = gamma;
  r.gamma_out_ = gamma;
  return r;
}

Box AffineReparam::strip() const {
  switch (kind_) {
    case ReparamKind::horizontal:
      return {0.0, b_, 1.0, b_ + 1.0 / q4(K_)};
    case ReparamKind::vertical:
      return {a_, 0.0, a_ + 1.0 / q2(K_), 1.0};
    case ReparamKind::short_strip:
      return {a_, b_, a_ + 1.0 / q2(K_), b_ + 1.0 / q4(K_)};
  }
  return {};
}

double AffineReparam::jacobian() const { return 1.0 / phase_scale(); }

double AffineReparam::phase_scale() const {
  switch (kind_) {
    case ReparamKind::horizontal:
      return q4(K_);
    case ReparamKind::vertical:
      return q2(K_);
    case ReparamKind::short_strip:
      return q4(K_) * q2(K_);
  }
  return 1.0;
}

double AffineReparam::linear_x() const {
  return kind_ == ReparamKind::vertical ? 0.0 : q4(K_) * b_;
}

double AffineReparam::linear_y() const {
  return kind_ == ReparamKind::horizontal ? 0.0 : q2(K_) * a_;
}

Point2 AffineReparam::forward(Point2 z) const {
  switch (kind_) {
    case ReparamKind::horizontal: {
      const double yp = (z.y - b_) * q4(K_);
      return {z.x + gamma_in_ * b_ * yp / q4(K_), yp};
    }
    case ReparamKind::vertical:
      return {(z.x - a_) * q2(K_), z.y};
    case ReparamKind::short_strip: {
      const double yp = (z.y - b_) * q4(K_);
      return {(z.x - a_) * q2(K_) + gamma_in_ * q4(K_) * b_ * yp, yp};
    }
  }
  return z;
}

Point2 AffineReparam::inverse(Point2 zp) const {
  switch (kind_) {
    case ReparamKind::horizontal:
      return {zp.x - gamma_in_ * b_ * zp.y / q4(K_), b_ + zp.y / q4(K_)};
    case ReparamKind::vertical:
      return {a_ + zp.x / q2(K_), zp.y};
    case ReparamKind::short_strip: {
      const double xp = zp.x - gamma_in_ * q4(K_) * b_ * zp.y;
      return {a_ + xp / q2(K_), b_ + zp.y / q4(K_)};
    }
  }
  return zp;
}

Vec3 AffineReparam::dual(const Vec3& xi) const {
  const double g = gamma_in_;
  switch (kind_) {
    case ReparamKind::horizontal:
      return {xi[0] + b_ * xi[2], (xi[1] - b_ * g * xi[0]) / q4(K_), xi[2] / q4(K_)};
    case ReparamKind::vertical:
      return {xi[0] / q2(K_), xi[1] + a_ * xi[2], xi[2] / q2(K_)};
    case ReparamKind::short_strip:
      return {(xi[0] + b_ * xi[2]) / q2(K_), (xi[1] + a_ * xi[2] - b_ * g * xi[0]) / q4(K_),
              xi[2] / (q2(K_) * q4(K_))};
  }
  return xi;
}

Vec3 AffineReparam::dual_inverse(const Vec3& xp) const {
  const double g = gamma_in_;
  switch (kind_) {
    case ReparamKind::horizontal: {
      const double x3 = xp[2] * q4(K_);
      const double x1 = xp[0] - b_ * x3;
      return {x1, xp[1] * q4(K_) + b_ * g * x1, x3};
    }
    case ReparamKind::vertical: {
      const double x3 = xp[2] * q2(K_);
      return {xp[0] * q2(K_), xp[1] - a_ * x3, x3};
    }
    case ReparamKind::short_strip: {
      const double x3 = xp[2] * q2(K_) * q4(K_);
      const double x1 = xp[0] * q2(K_) - b_ * x3;
      return {x1, xp[1] * q4(K_) - a_ * x3 + b_ * g * x1, x3};
    }
  }
  return xp;
}

double AffineReparam::phase_offset(const Vec3& xi) const {
  const Point2 z = inverse({0.0, 0.0});
  const Surface in(gamma_in_);
  return xi[0] * z.x + xi[1] * z.y + xi[2] * in.phi(z);
}

std::string AffineReparam::csv_header() const { return "kind,K,a,b,gamma_in,gamma_out,jacobian"; }

std::string AffineReparam::csv_row() const {
  std::ostringstream out;
  out.precision(17);
  out << to_string(kind_) << ',' << K_ << ',' << a_ << ',' << b_ << ',' << gamma_in_ << ','
      << gamma_out_ << ',' << jacobian();
  return out.str();
}

double phi_identity_residual(const AffineReparam& r, Point2 p) {
  const Surface in(r.gamma_in());
  const Surface out(r.gamma_out());
  auto raw = [&](Point2 q) {
    return r.phase_scale() * in.phi(r.inverse(q)) - out.phi(q) - r.linear_x() * q.x -
           r.linear_y() * q.y;
  };
  return raw(p) - raw({0.0, 0.0});
}

double PulledBack::l2_norm() const {
  double s = 0.0;
  for (const cplx& v : values) s += std::norm(v);
  return std::sqrt(s * cell_area);
}

double PulledBack::linf_norm() const {
  double m = 0.0;
  for (const cplx& v : values) m = std::max(m, std::abs(v));
  return m;
}

PulledBack pullback(const AffineReparam& r, const SampledFunction& f_L) {
  if (!r.strip().contains_box(f_L.domain(), 1e-12)) {
    throw std::invalid_argument("function domain leaves the strip");
  }
  PulledBack out;
  out.cell_area = f_L.dx() * f_L.dy() / r.jacobian();
  out.points.reserve(f_L.values().size());
  for (std::size_t iy = 0; iy < f_L.ny(); ++iy) {
    for (std::size_t ix = 0; ix < f_L.nx(); ++ix) {
      out.points.push_back(r.forward(f_L.point(ix, iy)));
      out.values.push_back(f_L.at(ix, iy));
    }
  }
  return out;
}

namespace {

struct GaussLegendre {
  std::vector<double> nodes;  // on [-1, 1]
  std::vector<double> weights;
};

GaussLegendre gauss_legendre(std::size_t n) {
  GaussLegendre g;
  for (std::size_t i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
        p0 = p1;
        p1 = p2;
      }
      dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    g.nodes.push_back(x);
    g.weights.push_back(2.0 / ((1.0 - x * x) * dp * dp));
  }
  return g;
}

// Composite rule on [lo, hi] resolving oscillations of angular rate up to w.
template <typename Fn>
cplx integrate_1d(double lo, double hi, double w, const QuadratureRule& rule,
                  const GaussLegendre& gl, Fn&& fn) {
  const double len = hi - lo;
  if (len <= 0.0) return {};
  const std::size_t panels = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(len * (static_cast<double>(rule.panels) + w / 2.0))));
  const double h = len / static_cast<double>(panels);
  cplx acc{};
  for (std::size_t p = 0; p < panels; ++p) {
    const double mid = lo + (static_cast<double>(p) + 0.5) * h;
    for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
      acc += gl.weights[k] * 0.5 * h * fn(mid + 0.5 * h * gl.nodes[k]);
    }
  }
  return acc;
}

double phase_rate(const Vec3& xi) {
  return std::abs(xi[0]) + std::abs(xi[1]) + 3.0 * std::abs(xi[2]);
}

}  // namespace

cplx extension_quadrature(const AnalyticFunction& f, const Surface& s, const Vec3& xi,
                          const QuadratureRule& rule) {
  const GaussLegendre gl = gauss_legendre(rule.order);
  const double w = phase_rate(xi);
  const Box& b = f.support;
  return integrate_1d(b.y0, b.y1, w, rule, gl, [&](double y) {
    return integrate_1d(b.x0, b.x1, w, rule, gl, [&](double x) {
      const Point2 z{x, y};
      return f.eval(z) * std::polar(1.0, xi[0] * x + xi[1] * y + xi[2] * s.phi(z));
    });
  });
}

double verify_operator_identity(const AffineReparam& r, const AnalyticFunction& f,
                                std::span<const Vec3> probes, const QuadratureRule& rule) {
  if (!r.strip().contains_box(f.support, 1e-12)) {
    throw std::invalid_argument("support violation: f is not supported in the strip");
  }
  const Surface in(r.gamma_in());
  const Surface out(r.gamma_out());
  const GaussLegendre gl = gauss_legendre(rule.order);
  const Box& b = f.support;
  const double y_lo = r.forward({b.x0, b.y0}).y;
  const double y_hi = r.forward({b.x0, b.y1}).y;
  double worst = 0.0;
  for (const Vec3& xi : probes) {
    const cplx lhs = extension_quadrature(f, in, xi, rule);
    const Vec3 xp = r.dual(xi);
    const double w = phase_rate(xp);
    const cplx rhs = integrate_1d(y_lo, y_hi, w, rule, gl, [&](double yp) {
      const double y = r.inverse({0.0, yp}).y;
      const double x_lo = r.forward({b.x0, y}).x;
      const double x_hi = r.forward({b.x1, y}).x;
      return integrate_1d(x_lo, x_hi, w, rule, gl, [&](double xp_) {
        const Point2 p{xp_, yp};
        return f.eval(r.inverse(p)) *
               std::polar(1.0, xp[0] * p.x + xp[1] * p.y + xp[2] * out.phi(p));
      });
    });
    const double l = std::abs(lhs);
    const double rr = r.jacobian() * std::abs(rhs);
    const double err = std::abs(l - rr) / std::max(l, 1e-300);
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace srl
