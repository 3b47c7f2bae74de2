#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <map>
#include <sstream>

#include "srl/polypart.hpp"

using namespace srl;

namespace {

std::size_t term_index(const Polynomial3& p, Monomial m) {
  const auto& t = p.terms();
  return static_cast<std::size_t>(std::find(t.begin(), t.end(), m) - t.begin());
}

Polynomial3 make(int degree, double scale, std::initializer_list<std::pair<Monomial, double>> cs) {
  Polynomial3 zero(degree, std::vector<double>(monomials(degree).size(), 0.0), scale);
  std::vector<double> c(zero.terms().size(), 0.0);
  for (const auto& [m, v] : cs) c[term_index(zero, m)] = v;
  return Polynomial3(degree, c, scale);
}

Polynomial3 plane(double a, double b, double c, double d, double scale) {
  return make(1, scale, {{{1, 0, 0}, a}, {{0, 1, 0}, b}, {{0, 0, 1}, c}, {{0, 0, 0}, d}});
}

Tube tube_along(Vec3 base, Vec3 dir, double radius) {
  Tube t;
  t.base = base;
  t.direction = dir;
  t.radius = radius;
  t.core_radius = radius;
  t.length = 1e9;
  return t;
}

}  // namespace

TEST(Polynomial, MonomialCounts) {
  for (int d = 0; d <= 8; ++d) {
    EXPECT_EQ(monomials(d).size(), static_cast<std::size_t>((d + 1) * (d + 2) * (d + 3) / 6));
  }
  EXPECT_EQ(bisector_degree(1), 0);
  EXPECT_EQ(bisector_degree(4), 1);
  EXPECT_EQ(bisector_degree(5), 2);
  EXPECT_EQ(bisector_degree(65), 6);
}

TEST(Polynomial, EvaluationAndGradient) {
  const double s = 4.0;
  const Polynomial3 p =
      make(2, s, {{{0, 0, 0}, 1.0}, {{1, 0, 0}, 2.0}, {{0, 1, 1}, -1.0}, {{0, 0, 2}, 1.0}});
  const Vec3 x{1.0, -2.0, 3.0};
  const double u1 = x[0] / s, u2 = x[1] / s, u3 = x[2] / s;
  EXPECT_NEAR(p(x), 1.0 + 2.0 * u1 - u2 * u3 + u3 * u3, 1e-15);
  const Vec3 g = p.gradient(x);
  const double h = 1e-6;
  for (int k = 0; k < 3; ++k) {
    Vec3 a = x, b = x;
    a[k] += h;
    b[k] -= h;
    EXPECT_NEAR(g[k], (p(a) - p(b)) / (2 * h), 1e-8);
  }
}

TEST(Polynomial, FactorsRoundTrip) {
  Poly3 p{{plane(1, 2, 3, 0.5, 8.0), make(2, 8.0, {{{2, 0, 0}, 1.5}, {{0, 1, 1}, -0.25}})}};
  std::stringstream ss;
  write_factors(ss, p);
  const Poly3 q = read_factors(ss);
  ASSERT_EQ(q.factors.size(), 2u);
  EXPECT_EQ(q.degree(), 3);
  const Vec3 x{0.3, -1.7, 2.2};
  EXPECT_DOUBLE_EQ(q(x), p(x));
}

TEST(Wall, EmptyWhenVarietyMissesBall) {
  const GridSpec g{16.0, 16};
  const Poly3 p{{plane(0, 0, 1, -10.0, 16.0)}};  // xi3 = 160
  const auto w = wall(p, g, 0.1);
  EXPECT_EQ(std::count(w.begin(), w.end(), 1), 0);
}

TEST(Wall, PlaneMatchesExactDistance) {
  const GridSpec g{64.0, 32};
  const double a = 0.3, b = -0.5, c = 0.8, d = 0.1, scale = 64.0;
  const Poly3 p{{plane(a, b, c, d, scale)}};
  const double delta = 0.1;
  const double width = std::pow(64.0, 0.5 + delta);
  const auto w = wall(p, g, delta);
  std::size_t mismatches = 0;
  for (std::size_t i3 = 0; i3 < g.M; ++i3) {
    for (std::size_t i2 = 0; i2 < g.M; ++i2) {
      for (std::size_t i1 = 0; i1 < g.M; ++i1) {
        const Vec3 x = g.point(i1, i2, i3);
        const double dist =
            std::abs(a * x[0] + b * x[1] + c * x[2] + d * scale) / std::sqrt(a * a + b * b + c * c);
        if (std::abs(dist - width) < 1e-9) continue;
        mismatches += (dist <= width) != (w[g.index(i1, i2, i3)] != 0);
      }
    }
  }
  EXPECT_EQ(mismatches, 0u);
}

TEST(Cells, HalfSpaces) {
  const GridSpec g{64.0, 32};
  const Poly3 p{{plane(0, 0, 1, 0, 64.0)}};
  const CellDecomposition dec = cells(p, g, wall(p, g, 0.1));
  EXPECT_EQ(dec.cell_count, 2u);
}

TEST(Cells, Octants) {
  const GridSpec g{64.0, 32};
  const Poly3 p{{plane(1, 0, 0, 0, 64.0), plane(0, 1, 0, 0, 64.0), plane(0, 0, 1, 0, 64.0)}};
  const CellDecomposition dec = cells(p, g, wall(p, g, 0.1));
  EXPECT_EQ(dec.cell_count, 8u);
  // The degree three product has the same zero set.
  const Poly3 q{{make(3, 64.0, {{{1, 1, 1}, 1.0}})}};
  EXPECT_EQ(cells(q, g, wall(q, g, 0.1)).cell_count, 8u);
}

TEST(Cells, PlaneArrangements) {
  const GridSpec g{64.0, 48};
  std::mt19937_64 rng(51);
  std::normal_distribution<double> n;
  const double delta = 0.02;
  const double width = std::pow(64.0, 0.5 + delta);
  for (int k = 1; k <= 4; ++k) {
    std::vector<std::array<double, 4>> planes(k);
    Poly3 p;
    for (auto& pl : planes) {
      pl = {n(rng), n(rng), n(rng), 0.3 * n(rng)};
      p.factors.push_back(plane(pl[0], pl[1], pl[2], pl[3], 64.0));
    }
    // Oracle: sign vectors realised by grid points farther than the wall width from every
    // plane. Each region of a plane arrangement is convex, so this is the region count.
    // Regions thinner than the grid step fall apart under 6-connectivity; only regions and
    // cells with at least min_points grid points are compared.
    const std::size_t min_points = 20;
    std::map<unsigned, std::size_t> regions;
    for (std::size_t i3 = 0; i3 < g.M; ++i3) {
      for (std::size_t i2 = 0; i2 < g.M; ++i2) {
        for (std::size_t i1 = 0; i1 < g.M; ++i1) {
          const Vec3 x = g.point(i1, i2, i3);
          unsigned sig = 0;
          bool off = true;
          for (int j = 0; j < k; ++j) {
            const auto& pl = planes[j];
            const double v = pl[0] * x[0] + pl[1] * x[1] + pl[2] * x[2] + pl[3] * 64.0;
            off = off && std::abs(v) / std::hypot(pl[0], pl[1], pl[2]) > width;
            sig |= (v >= 0 ? 1u : 0u) << j;
          }
          if (off) ++regions[sig];
        }
      }
    }
    const CellDecomposition dec = cells(p, g, wall(p, g, delta));
    std::vector<std::size_t> size(dec.cell_count, 0);
    for (std::int32_t l : dec.labels) {
      if (l >= 0) ++size[static_cast<std::size_t>(l)];
    }
    std::map<unsigned, std::size_t> big_cells;
    for (std::size_t l = 0; l < size.size(); ++l) {
      if (size[l] >= min_points) ++big_cells[dec.cell_pattern[l]];
    }
    std::size_t big_regions = 0;
    for (const auto& [sig, n] : regions) big_regions += n >= min_points;
    EXPECT_EQ(big_cells.size(), big_regions) << k << " planes";
    for (const auto& [pat, n] : big_cells) EXPECT_EQ(n, 1u) << k << " planes, pattern " << pat;
  }
}

TEST(Incidence, AxisTubes) {
  const GridSpec g{64.0, 32};
  const Poly3 p{{plane(0, 0, 1, 0, 64.0)}};
  const CellDecomposition dec = cells(p, g, wall(p, g, 0.1));
  const std::vector<Tube> tubes{tube_along({0, 0, 0}, {0, 0, 1}, 8.0)};
  EXPECT_EQ(tube_cell_incidence(tubes, dec).cells_of_tube[0].size(), 2u);

  const Poly3 q{{plane(1, 0, 0, 0, 64.0), plane(0, 1, 0, 0, 64.0), plane(0, 0, 1, 0, 64.0)}};
  const CellDecomposition oct = cells(q, g, wall(q, g, 0.1));
  // A line along the first axis inside the (+, +) quarter crosses only xi1 = 0.
  const std::vector<Tube> quarter{tube_along({0, 40, 40}, {1, 0, 0}, 6.0)};
  EXPECT_EQ(tube_cell_incidence(quarter, oct).cells_of_tube[0].size(), 2u);
  // Parallel to xi3 = 0 and away from it: a single cell of the half-space split.
  const std::vector<Tube> above{tube_along({0, 0, 40}, {1, 0, 0}, 6.0)};
  EXPECT_EQ(tube_cell_incidence(above, dec).cells_of_tube[0].size(), 1u);
}

TEST(Classify, TangentAndTransversal) {
  const GridSpec g{64.0, 32};
  const double delta = 0.1;
  const Poly3 p{{plane(0, 0, 1, 0, 64.0)}};
  const CellDecomposition dec = cells(p, g, wall(p, g, delta));
  const std::vector<Tube> tubes{tube_along({0, 0, 0}, {0, 0, 1}, 8.0),
                                tube_along({0, 0, 0}, {1, 0, 0}, 8.0)};
  const TubeClassification c = classify_tubes(tubes, p, dec, delta);
  EXPECT_NEAR(c.threshold, std::pow(64.0, -0.3), 1e-15);
  std::size_t vertical_transversal = 0, vertical_tangent = 0, flat_tangent = 0, flat_transversal = 0;
  for (const BallClassification& b : c.balls) {
    vertical_transversal += std::count(b.transversal.begin(), b.transversal.end(), 0u);
    vertical_tangent += std::count(b.tangential.begin(), b.tangential.end(), 0u);
    flat_tangent += std::count(b.tangential.begin(), b.tangential.end(), 1u);
    flat_transversal += std::count(b.transversal.begin(), b.transversal.end(), 1u);
  }
  EXPECT_GT(vertical_transversal, 0u);
  EXPECT_EQ(vertical_tangent, 0u);
  EXPECT_GT(flat_tangent, 0u);
  EXPECT_EQ(flat_transversal, 0u);
}

TEST(Partition, SymmetricUniformD2) {
  const GridSpec g{32.0, 24};
  const std::vector<double> w(g.size(), 1.0);
  const Partition part = ham_sandwich_partition(w, g, 2);
  ASSERT_EQ(part.piece_masses.size(), 8u);
  const auto [lo, hi] = std::minmax_element(part.piece_masses.begin(), part.piece_masses.end());
  EXPECT_LE(*hi / *lo, 1.1);
  EXPECT_FALSE(part.best_effort);
  double total = 0.0;
  for (double m : part.piece_masses) total += m;
  EXPECT_NEAR(total, static_cast<double>(g.size()), 1e-6);
}

TEST(Partition, DegenerateWeightsFlagged) {
  const GridSpec g{32.0, 16};
  std::vector<double> w(g.size(), 0.0);
  w[g.index(3, 4, 5)] = 1.0;
  const Partition part = ham_sandwich_partition(w, g, 2);
  EXPECT_TRUE(part.best_effort);
}
