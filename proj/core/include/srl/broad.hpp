#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "srl/extension.hpp"
#include "srl/partition.hpp"

namespace srl {

enum class StripMode { plain, ragged };

// f split into disjoint sample pieces (atoms) from which every strip piece is a sum.
// Plain mode uses the rectangles of make_strips; ragged mode assigns each sample to the cap
// of its 1/K grid cell and groups caps by ragged family.
struct StripDecomposition {
  std::size_t n_horizontal = 0;
  std::size_t n_vertical = 0;  // zero when vertical strips are not used
  std::vector<Atom> atoms;
  std::vector<std::size_t> horizontal_of;  // per atom
  std::vector<std::size_t> vertical_of;    // per atom, unused without verticals

  bool has_vertical() const { return n_vertical > 0; }
};

StripDecomposition decompose_strips(const SampledFunction& f, const Surface& s,
                                    const ScaleParams& params, StripMode mode);

// 0 = broad (A), 1 = some horizontal strip dominates (B), 2 = not B and some vertical strip
// dominates (C), 3 = not B or C and some short strip dominates (D).
enum Label : std::uint8_t { label_broad = 0, label_horizontal = 1, label_vertical = 2, label_short = 3 };

struct ClassifiedField {
  GridSpec grid;
  std::vector<std::uint8_t> labels;
  std::vector<double> magnitude;  // |E f|
  std::array<std::size_t, 4> counts{};
};

ClassifiedField classify_points(const SampledFunction& f, const Surface& s,
                                const ScaleParams& params, std::size_t M,
                                StripMode mode = StripMode::plain);

// Broad points of E f; Br E f is magnitude * mask.
struct BroadMask {
  GridSpec grid;
  double alpha = 0.0;
  StripMode mode = StripMode::plain;
  std::vector<std::uint8_t> mask;
  std::vector<double> magnitude;

  double broad_norm(double p) const;
};

BroadMask broad_mask(const SampledFunction& f, const Surface& s, const ScaleParams& params,
                     std::size_t M, StripMode mode = StripMode::plain);

// Streaming norms of E f and Br E f without storing any field.
struct BroadNorms {
  std::vector<double> ps;
  std::vector<double> full;
  std::vector<double> broad;
  // L^p over region B of the l^p and l^infinity aggregates of |E f_L| over long horizontal
  // strips; filled only when requested.
  std::vector<double> strip_lp;
  std::vector<double> strip_linf;
  std::array<std::size_t, 4> counts{};
};

BroadNorms broad_norms(const SampledFunction& f, const Surface& s, const ScaleParams& params,
                       std::size_t M, const std::vector<double>& ps,
                       StripMode mode = StripMode::plain, bool strip_aggregates = false);

// E f_L for every strip of one kind, on the full grid. Small sizes only.
std::vector<Field3> strip_extensions(const SampledFunction& f, const Surface& s,
                                     const ScaleParams& params, std::size_t M, StripKind kind,
                                     StripMode mode = StripMode::plain);

// Knapp example: norms of E f for the indicator of a cap of side R^{-1/2} at the centre.
struct KnappPoint {
  double R = 0.0;
  std::size_t M = 0;
  std::vector<double> norms;  // one per p
};
std::vector<KnappPoint> knapp_sweep(const std::vector<double>& Rs, const std::vector<double>& ps,
                                    double gamma, Point2 center = {0.5, 0.5});

// Least squares slope of log(value) against log(R).
double fitted_exponent(const std::vector<double>& Rs, const std::vector<double>& values);

}  // namespace srl
