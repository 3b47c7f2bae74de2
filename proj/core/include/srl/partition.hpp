#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "srl/geometry.hpp"

namespace srl {

enum class StripKind { long_horizontal, long_vertical, short_vertical };

std::string_view to_string(StripKind k);

struct StripSet {
  StripKind kind = StripKind::long_horizontal;
  double K = 0.0;
  std::vector<Box> rects;
};

// Whether vertical and short strips are used at this (gamma, K). Plain strips use a strict
// inequality, ragged strips a non-strict one.
bool uses_vertical_strips(double gamma, double K, bool ragged = false);

// Horizontal strips always; vertical and short strips only when |gamma| sqrt(K) < 1.
// Short strips are ordered horizontal-major: index = h * n_vertical + v.
std::vector<StripSet> make_strips(double K, double gamma);

// Integer count of ceil(v) robust to floating error in fractional powers.
std::size_t ceil_count(double v);

struct CapFamily {
  double K = 0.0;
  double mu = 1.0;
  std::size_t per_axis = 0;
  std::vector<Cap> caps;

  std::size_t index(std::size_t ix, std::size_t iy) const { return iy * per_axis + ix; }
};

// Caps on the 1/K grid with side floor(sqrt(mu)) / K, so overlap multiplicity is at most mu.
// K must be a positive integer and 1 <= mu <= K^2.
CapFamily make_caps(double K, double mu);

std::size_t multiplicity_at(const CapFamily& family, Point2 p);

struct RaggedStrip {
  StripKind kind = StripKind::long_horizontal;
  std::size_t band = 0;  // horizontal-major index for short strips
  Box nominal;           // the band or band intersection the family was grown from
  std::vector<std::size_t> members;

  Box footprint(const CapFamily& family) const;
};

struct RaggedStrips {
  double gamma = 0.0;
  double band_height = 0.0;
  double band_width = 0.0;
  std::size_t n_horizontal = 0;
  std::size_t n_vertical = 0;
  std::vector<RaggedStrip> strips;  // horizontals, then verticals, then shorts
  // Per cap: index into strips of its horizontal, vertical and short family (npos if unused).
  std::vector<std::size_t> horizontal_of;
  std::vector<std::size_t> vertical_of;
  std::vector<std::size_t> short_of;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  bool has_vertical() const { return n_vertical > 0; }
};

// Greedy band recursion: each cap joins the first band its open interior meets.
RaggedStrips make_ragged(const CapFamily& family, double gamma);

struct GeometricCover {
  char lemma_case = 'a';  // 'a' when |gamma| sqrt(K) > 1, else 'b'
  StripKind kind = StripKind::long_horizontal;
  std::size_t horizontal_count = 0;
  std::size_t vertical_count = 0;
  std::size_t bound = 0;
  std::vector<std::size_t> witness;  // ragged strip indices used by the cover
  bool holds = false;                 // false means the family is a counterexample
};

// Minimal ragged cover of a subfamily with no strongly separated pair.
// Throws std::invalid_argument when K < 20 or a strongly separated pair exists.
GeometricCover geometric_lemma_check(const CapFamily& family, const RaggedStrips& ragged,
                                     std::span<const std::size_t> subfamily);

struct TaggedBox {
  std::string kind;
  Box box;
};

void write_rectangles(std::ostream& out, std::span<const TaggedBox> rects);
std::vector<TaggedBox> read_rectangles(std::istream& in);

std::vector<TaggedBox> tagged(const std::vector<StripSet>& sets);
std::vector<TaggedBox> tagged(const CapFamily& family);

}  // namespace srl
