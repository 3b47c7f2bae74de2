#include <gtest/gtest.h>

#include <random>

#include "srl/broad.hpp"

using namespace srl;

namespace {

// Label recomputed from scratch: direct sums of each strip piece at one point.
std::uint8_t reference_label(const SampledFunction& f, double gamma, double K, double alpha,
                             const Vec3& xi) {
  const Surface s(gamma);
  const cplx ef = extension_at(f, s, xi);
  if (std::abs(ef) == 0.0) return label_broad;
  const double bound = alpha * std::abs(ef);
  const auto sets = make_strips(K, gamma);
  for (const StripSet& set : sets) {
    for (const Box& b : set.rects) {
      if (std::abs(extension_at(f.restricted(b), s, xi)) > bound) {
        return set.kind == StripKind::long_horizontal ? label_horizontal
               : set.kind == StripKind::long_vertical ? label_vertical
                                                      : label_short;
      }
    }
  }
  return label_broad;
}

SampledFunction strip_supported(std::size_t n, std::uint64_t seed) {
  SampledFunction f = random_gaussian(n, seed);
  return f.restricted(Box{0.0, 0.0, 1.0, 0.5});
}

}  // namespace

TEST(Broad, LabelsMatchDirectEvaluation) {
  for (double gamma : {0.0, 0.5}) {
    const double R = 8, K = 16;
    const SampledFunction f = random_gaussian(64, 21);
    const ScaleParams params{R, K, 0.5, 0.25, 1.0};
    const ClassifiedField c = classify_points(f, Surface(gamma), params, 16);
    std::size_t total = 0;
    for (std::size_t n : c.counts) total += n;
    EXPECT_EQ(total, c.grid.size());
    std::mt19937_64 rng(22);
    std::uniform_int_distribution<std::size_t> idx(0, 15);
    for (int k = 0; k < 40; ++k) {
      const std::size_t i1 = idx(rng), i2 = idx(rng), i3 = idx(rng);
      ASSERT_EQ(c.labels[c.grid.index(i1, i2, i3)],
                reference_label(f, gamma, K, 0.25, c.grid.point(i1, i2, i3)))
          << "gamma " << gamma << " at " << i1 << "," << i2 << "," << i3;
    }
  }
}

TEST(Broad, NoVerticalLabelsInCaseA) {
  const SampledFunction f = random_gaussian(64, 23);
  const ScaleParams params{8, 16, 0.5, 0.25, 1.0};
  const ClassifiedField c = classify_points(f, Surface(0.25), params, 16);  // |gamma| sqrt K = 1
  EXPECT_EQ(c.counts[label_vertical], 0u);
  EXPECT_EQ(c.counts[label_short], 0u);
}

TEST(Broad, SingleStripAllOrNothing) {
  const SampledFunction f = strip_supported(64, 24);
  for (double alpha : {1.0, 0.5}) {
    const ScaleParams params{8, 16, 0.5, alpha, 1.0};
    const BroadMask m = broad_mask(f, Surface(1.0), params, 16);
    for (std::size_t i = 0; i < m.mask.size(); ++i) {
      if (m.magnitude[i] == 0.0) continue;
      ASSERT_EQ(m.mask[i] != 0, alpha >= 1.0);
    }
  }
}

TEST(Broad, MonotoneInAlpha) {
  const SampledFunction f = random_gaussian(64, 25);
  std::vector<std::uint8_t> prev;
  for (double alpha : {0.1, 0.25, 0.5, 1.0, 2.0}) {
    const ScaleParams params{8, 16, 0.5, alpha, 1.0};
    const BroadMask m = broad_mask(f, Surface(0.0), params, 16);
    if (!prev.empty()) {
      for (std::size_t i = 0; i < m.mask.size(); ++i) ASSERT_LE(prev[i], m.mask[i]);
    }
    prev = m.mask;
  }
}

TEST(Broad, EmptyBelowHorizontalShare) {
  // |E f| <= sum of the two horizontal pieces, so one exceeds |E f| / 2 wherever E f != 0.
  const SampledFunction f = random_gaussian(64, 26);
  const ScaleParams params{8, 16, 0.5, 0.5, 1.0};
  const BroadMask m = broad_mask(f, Surface(0.0), params, 16);
  for (std::size_t i = 0; i < m.mask.size(); ++i) {
    if (m.magnitude[i] > 0.0) ASSERT_EQ(m.mask[i], 0);
  }
}

TEST(Broad, GenericFractionStrictlyBetween) {
  const SampledFunction f = random_gaussian(128, 26);
  const ScaleParams params{32, 16, 0.1, std::pow(16.0, -0.1), 1.0};
  const BroadMask m = broad_mask(f, Surface(0.0), params, 64);
  const auto broad = std::count(m.mask.begin(), m.mask.end(), 1);
  EXPECT_GT(broad, 0);
  EXPECT_LT(static_cast<std::size_t>(broad), m.mask.size());
}

TEST(Broad, NormsAgreeWithMask) {
  const SampledFunction f = random_gaussian(64, 27);
  const ScaleParams params{8, 16, 0.5, 0.25, 1.0};
  const BroadMask m = broad_mask(f, Surface(0.2), params, 16);
  const BroadNorms n = broad_norms(f, Surface(0.2), params, 16, {3.25});
  EXPECT_NEAR(n.broad[0], m.broad_norm(3.25), 1e-12 * n.broad[0]);
  EXPECT_LE(n.broad[0], n.full[0]);
}

TEST(Broad, RaggedModeCoversGrid) {
  const SampledFunction f = random_gaussian(64, 28);
  const ScaleParams params{8, 16, 0.5, 0.25, 4.0};
  const ClassifiedField c = classify_points(f, Surface(0.0), params, 16, StripMode::ragged);
  std::size_t total = 0;
  for (std::size_t n : c.counts) total += n;
  EXPECT_EQ(total, c.grid.size());
}

TEST(Broad, StripAggregatesMatchStripFields) {
  const SampledFunction f = random_gaussian(64, 29);
  const ScaleParams params{8, 16, 0.5, 0.6, 1.0};
  const Surface s(0.5);
  const double p = 3.25;
  const BroadNorms n = broad_norms(f, s, params, 16, {p}, StripMode::plain, true);
  const ClassifiedField c = classify_points(f, s, params, 16);
  const std::vector<Field3> strips = strip_extensions(f, s, params, 16, StripKind::long_horizontal);
  double sum_lp = 0.0, sum_linf = 0.0;
  for (std::size_t i = 0; i < c.labels.size(); ++i) {
    if (c.labels[i] != label_horizontal) continue;
    double largest = 0.0;
    for (const Field3& e : strips) {
      sum_lp += std::pow(std::abs(e.values[i]), p);
      largest = std::max(largest, std::abs(e.values[i]));
    }
    sum_linf += std::pow(largest, p);
  }
  const double vol = c.grid.cell_volume();
  EXPECT_NEAR(n.strip_lp[0], std::pow(sum_lp * vol, 1.0 / p), 1e-9 * n.strip_lp[0]);
  EXPECT_NEAR(n.strip_linf[0], std::pow(sum_linf * vol, 1.0 / p), 1e-9 * n.strip_linf[0]);
  EXPECT_LE(n.strip_linf[0], n.strip_lp[0]);
  EXPECT_TRUE(broad_norms(f, s, params, 16, {p}).strip_lp.empty());
}
