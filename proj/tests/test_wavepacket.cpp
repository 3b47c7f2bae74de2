#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "srl/wavepacket.hpp"

using namespace srl;

namespace {

// Brute force: minimum over points of the cube surface grid and interior of the distance to
// the line, refined by a dense sample of the line.
double brute_line_cube(const Vec3& base, const Vec3& d, double R) {
  double best = INFINITY;
  const int n = 40;
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) {
      for (int k = 0; k <= n; ++k) {
        const Vec3 p{-R + 2 * R * i / n, -R + 2 * R * j / n, -R + 2 * R * k / n};
        const Vec3 rel{p[0] - base[0], p[1] - base[1], p[2] - base[2]};
        const double t = dot(rel, d);
        best = std::min(best, norm({rel[0] - t * d[0], rel[1] - t * d[1], rel[2] - t * d[2]}));
      }
    }
  }
  return best;
}

}  // namespace

TEST(ThetaCaps, CountAndSide) {
  const auto caps = make_theta_caps(Surface(0.0), 64);
  ASSERT_EQ(caps.size(), 64u);
  for (const ThetaCap& c : caps) EXPECT_DOUBLE_EQ(c.side, 0.125);
  EXPECT_THROW(make_theta_caps(Surface(0.0), 50), std::invalid_argument);
  const Vec3 n = Surface(0.0).unit_normal({0.0, 0.0});
  EXPECT_DOUBLE_EQ(n[0], 0.0);
  EXPECT_DOUBLE_EQ(n[2], -1.0);
}

TEST(ThetaCaps, Directions) {
  const Surface s(0.5);
  for (const ThetaCap& c : make_theta_caps(s, 16)) {
    const Vec3 n = s.unit_normal(c.center);
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(c.direction[k], n[k], 1e-15);
  }
}

TEST(Tubes, OrthogonalBasis) {
  const Vec3 d = Surface(0.7).unit_normal({0.3, 0.9});
  const auto [e1, e2] = orthogonal_basis(d);
  EXPECT_NEAR(dot(e1, d), 0.0, 1e-15);
  EXPECT_NEAR(dot(e2, d), 0.0, 1e-15);
  EXPECT_NEAR(dot(e1, e2), 0.0, 1e-15);
  EXPECT_NEAR(norm(e1), 1.0, 1e-15);
}

TEST(Tubes, LineCubeDistance) {
  const Vec3 d = Surface(0.4).unit_normal({0.6, 0.2});
  const auto [e1, e2] = orthogonal_basis(d);
  for (double a : {0.0, 5.0, 20.0, 40.0}) {
    const Vec3 base{a * e1[0] + 0.3 * a * e2[0], a * e1[1] + 0.3 * a * e2[1],
                    a * e1[2] + 0.3 * a * e2[2]};
    const double ref = brute_line_cube(base, d, 16.0);
    EXPECT_NEAR(line_cube_distance(base, d, 16.0), ref, 0.9) << a;
    if (ref == 0.0) EXPECT_EQ(line_cube_distance(base, d, 16.0), 0.0);
  }
}

TEST(Tubes, GeometryAndCoverage) {
  const double R = 16, delta = 0.4;
  const auto caps = make_theta_caps(Surface(0.0), R);
  const auto tubes = make_tubes(caps[5], 5, R, delta);
  ASSERT_FALSE(tubes.empty());
  for (const Tube& t : tubes) {
    EXPECT_DOUBLE_EQ(t.radius, std::pow(R, 0.5 + delta));
    EXPECT_DOUBLE_EQ(t.core_radius, std::sqrt(R));
    EXPECT_LE(line_cube_distance(t.base, t.direction, R), t.radius);
  }
  // Every point of the cube lies in the core of some lattice tube.
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-R, R);
  for (int k = 0; k < 200; ++k) {
    const Vec3 p{u(rng), u(rng), u(rng)};
    bool hit = false;
    for (const Tube& t : tubes) hit = hit || t.axis_distance(p) <= t.core_radius * std::sqrt(0.5) + 1e-9;
    ASSERT_TRUE(hit);
  }
}

TEST(Packets, Reconstruction) {
  const double R = 16;
  const SampledFunction f = random_gaussian(64, 42);
  const PacketDecomposition dec(f, Surface(0.5), R);
  const SampledFunction g = dec.reconstruct();
  double err = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < f.values().size(); ++i) {
    err += std::norm(g.values()[i] - f.values()[i]);
    ref += std::norm(f.values()[i]);
  }
  EXPECT_LT(std::sqrt(err / ref), 1e-10);
}

TEST(Packets, SupportInTripleCap) {
  const double R = 16;
  const SampledFunction f = random_gaussian(64, 43);
  const PacketDecomposition dec(f, Surface(-0.3), R);
  for (std::size_t t = 0; t < dec.tubes().size(); t += 37) {
    const SampledFunction ft = dec.materialize(t);
    const Box tri = dec.caps()[dec.tubes()[t].theta].triple();
    for (std::size_t iy = 0; iy < ft.ny(); ++iy) {
      for (std::size_t ix = 0; ix < ft.nx(); ++ix) {
        if (ft.at(ix, iy) != cplx{}) ASSERT_TRUE(tri.contains_closed(ft.point(ix, iy), 1e-12));
      }
    }
  }
}

TEST(Packets, SingleCapSource) {
  const double R = 16;
  SampledFunction f = random_gaussian(64, 44);
  const auto caps = make_theta_caps(Surface(0.0), R);
  f = f.restricted(caps[9].box());
  const PacketDecomposition dec(f, Surface(0.0), R);
  for (std::size_t t = 0; t < dec.tubes().size(); ++t) {
    const std::size_t th = dec.tubes()[t].theta;
    const bool near = std::abs(static_cast<long>(caps[th].ix) - static_cast<long>(caps[9].ix)) <= 1 &&
                      std::abs(static_cast<long>(caps[th].iy) - static_cast<long>(caps[9].iy)) <= 1;
    if (!near) ASSERT_EQ(dec.energy(t), 0.0);
  }
}

TEST(Packets, ZeroSource) {
  const PacketDecomposition dec(SampledFunction(unit_square, 64, 64), Surface(0.1), 16);
  for (std::size_t t = 0; t < dec.tubes().size(); ++t) ASSERT_EQ(dec.energy(t), 0.0);
}

TEST(Packets, GramInnerMatchesMaterialised) {
  const double R = 16;
  const SampledFunction f = random_gaussian(64, 45);
  const PacketDecomposition dec(f, Surface(0.5), R);
  const auto tubes = dec.tubes_of(6);
  ASSERT_GE(tubes.size(), 2u);
  const SampledFunction a = dec.materialize(tubes[0]);
  const SampledFunction b = dec.materialize(tubes[1]);
  cplx ref = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i) {
    ref += a.values()[i] * std::conj(b.values()[i]) * a.dx() * a.dy();
  }
  EXPECT_LT(std::abs(dec.inner(tubes[0], tubes[1]) - ref), 1e-10 * (1.0 + std::abs(ref)));
}

TEST(Packets, AuditSmall) {
  const SampledFunction f = random_gaussian(64, 46);
  const PacketDecomposition dec(f, Surface(0.5), 16);
  const PacketAudit a = verify_packets(dec);
  EXPECT_EQ(a.containment_failures, 0u);
  EXPECT_LT(a.reconstruction_error, 1e-3);
  EXPECT_LE(a.constant, 8.0);
  EXPECT_NE(a.csv().find("property,threshold,measured,pass"), std::string::npos);
}

TEST(Bilinear, NoPairAndOnePair) {
  const Surface s(0.0);
  const std::vector<Cap> same_row{{{0.1, 0.5}, 0.01}, {{0.9, 0.5}, 0.01}};
  const std::vector<std::vector<double>> mags{{1.0, 4.0}, {9.0, 1.0}};
  for (double v : bilinear_sup(s, same_row, mags, 1, 100)) EXPECT_EQ(v, 0.0);
  const std::vector<Cap> apart{{{0.1, 0.1}, 0.01}, {{0.9, 0.9}, 0.01}};
  const auto b = bilinear_sup(s, apart, mags, 1, 100);
  EXPECT_DOUBLE_EQ(b[0], 3.0);
  EXPECT_DOUBLE_EQ(b[1], 2.0);
}

TEST(CurveProbe, BoundOnSeparatedCaps) {
  const Surface s(0.0);
  const double K = 20;
  const Cap c1{{0.1, 0.1}, 1.0 / K}, c2{{0.9, 0.9}, 1.0 / K};
  CurveProbeConfig cfg;
  cfg.K = K;
  cfg.angle_budget = 1e-3;
  const CurveProbeReport r = intersection_curve_probe(s, c1.center, c2.center, c1, c2, cfg);
  EXPECT_GT(r.samples, 10u);
  EXPECT_TRUE(r.constant_sign);
  EXPECT_TRUE(r.bound_holds);
  EXPECT_LT(r.max_residual, 1e-9);
  EXPECT_THROW(intersection_curve_probe(s, {0.2, 0.5}, {0.7, 0.5}, Cap{{0.2, 0.5}, 0.05},
                                        Cap{{0.7, 0.5}, 0.05}, cfg),
               std::invalid_argument);
}
