#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "srl/rescale.hpp"

using namespace srl;

namespace {

AnalyticFunction smooth_on(const Box& b) {
  return {[b](Point2 p) {
            const double u = (p.x - b.x0) / b.width(), v = (p.y - b.y0) / b.height();
            if (u < 0 || u > 1 || v < 0 || v > 1) return cplx{};
            const double w = std::pow(std::sin(std::numbers::pi * u) * std::sin(M_PI * v), 2);
            return w * std::exp(cplx(0.0, 3.0 * u - 2.0 * v));
          },
          b};
}

std::vector<Vec3> probes(std::size_t n, double scale, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<Vec3> out(n);
  for (Vec3& p : out) p = {u(rng), u(rng), u(rng)};
  return out;
}

}  // namespace

TEST(Rescale, HorizontalBasics) {
  const AffineReparam r = horizontal_rescale(0.8, 16, 0.0);
  EXPECT_DOUBLE_EQ(r.gamma_out(), 0.2);
  const Vec3 d = r.dual({3.0, 4.0, 8.0});
  EXPECT_DOUBLE_EQ(d[0], 3.0);
  EXPECT_DOUBLE_EQ(d[1], 2.0);
  EXPECT_DOUBLE_EQ(d[2], 4.0);
  const Vec3 z = r.dual({0, 0, 0});
  EXPECT_EQ(norm(z), 0.0);
  EXPECT_EQ(horizontal_rescale(0.0, 64, 0.25).gamma_out(), 0.0);
}

TEST(Rescale, VerticalPrecondition) {
  EXPECT_THROW(vertical_rescale(1.0, 16, 0.0), std::invalid_argument);
  EXPECT_EQ(vertical_rescale(0.0, 1024, 0.5).gamma_out(), 0.0);
}

TEST(Rescale, ShortAtOrigin) {
  const AffineReparam r = short_rescale(0.1, 16, 0.0, 0.0);
  EXPECT_DOUBLE_EQ(r.gamma_out(), 0.1);
}

TEST(Rescale, PhiIdentityResiduals) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0), g(-1.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    const double K = std::pow(2.0, 4 + static_cast<int>(u(rng) * 5));
    const double gamma = g(rng) / std::sqrt(K);
    const double a = std::floor(u(rng) * std::sqrt(K)) / std::sqrt(K);
    const double b = std::floor(u(rng) * std::pow(K, 0.25)) / std::pow(K, 0.25);
    for (const AffineReparam& r :
         {horizontal_rescale(gamma, K, b), vertical_rescale(gamma, K, a),
          short_rescale(gamma, K, a, b)}) {
      for (int k = 0; k < 10; ++k) {
        ASSERT_LE(std::abs(phi_identity_residual(r, {u(rng), u(rng)})), 1e-12);
      }
    }
  }
}

TEST(Rescale, ForwardInverse) {
  const AffineReparam r = short_rescale(0.2, 16, 0.25, 0.5);
  const Point2 p = r.forward(r.inverse({0.3, 0.7}));
  EXPECT_NEAR(p.x, 0.3, 1e-14);
  EXPECT_NEAR(p.y, 0.7, 1e-14);
  const Vec3 x = r.dual_inverse(r.dual({1.0, -2.0, 3.0}));
  EXPECT_NEAR(x[1], -2.0, 1e-13);
}

TEST(Rescale, PullbackNorm) {
  const double K = 16;
  const AffineReparam r = horizontal_rescale(0.5, K, 0.5);
  const SampledFunction fl = random_gaussian(64, 32, r.strip());
  const PulledBack pb = pullback(r, fl);
  EXPECT_NEAR(pb.l2_norm(), std::pow(K, 0.125) * fl.l2_norm(), 1e-9 * fl.l2_norm());
  EXPECT_DOUBLE_EQ(pb.linf_norm(), fl.linf_norm());
}

TEST(Rescale, OperatorIdentity) {
  const double K = 16;
  for (const AffineReparam& r : {horizontal_rescale(0.6, K, 0.5), vertical_rescale(0.2, K, 0.25),
                                 short_rescale(-0.2, K, 0.5, 0.5)}) {
    const auto pr = probes(50, 20.0, 33);
    EXPECT_LE(verify_operator_identity(r, smooth_on(r.strip()), pr, {64, 10}), 1e-6)
        << to_string(r.kind());
  }
}

TEST(Rescale, StripIndicatorAtZero) {
  const double K = 16;
  const AffineReparam r = horizontal_rescale(0.3, K, 0.0);
  const AnalyticFunction one{[](Point2) { return cplx{1.0, 0.0}; }, r.strip()};
  const Vec3 zero{0, 0, 0};
  EXPECT_NEAR(std::abs(extension_quadrature(one, Surface(0.3), zero)), std::pow(K, -0.25), 1e-13);
  EXPECT_LE(verify_operator_identity(r, one, std::span(&zero, 1)), 1e-12);
}
