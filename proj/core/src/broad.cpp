#include "srl/broad.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <numeric>

namespace srl {

namespace {

StripDecomposition plain_decomposition(const SampledFunction& f, const Surface& s, double K) {
  const std::vector<StripSet> sets = make_strips(K, s.gamma());
  StripDecomposition d;
  d.n_horizontal = sets[0].rects.size();
  if (sets.size() == 1) {
    for (std::size_t h = 0; h < d.n_horizontal; ++h) {
      d.atoms.push_back(atom_for_box(f, sets[0].rects[h]));
      d.horizontal_of.push_back(h);
      d.vertical_of.push_back(0);
    }
    return d;
  }
  d.n_vertical = sets[1].rects.size();
  for (std::size_t h = 0; h < d.n_horizontal; ++h) {
    for (std::size_t v = 0; v < d.n_vertical; ++v) {
      d.atoms.push_back(atom_for_box(f, sets[2].rects[h * d.n_vertical + v]));
      d.horizontal_of.push_back(h);
      d.vertical_of.push_back(v);
    }
  }
  return d;
}

StripDecomposition ragged_decomposition(const SampledFunction& f, const Surface& s, double K,
                                        double mu) {
  const CapFamily caps = make_caps(K, mu);
  const RaggedStrips ragged = make_ragged(caps, s.gamma());
  StripDecomposition d;
  d.n_horizontal = ragged.n_horizontal;
  d.n_vertical = ragged.n_vertical;
  const std::size_t n_groups = std::max<std::size_t>(1, d.n_vertical) * d.n_horizontal;
  const std::size_t v_base = d.n_horizontal;

  // Group of every sample: the family of the cap owning its 1/K grid cell.
  std::vector<std::size_t> group(f.nx() * f.ny(), RaggedStrips::npos);
  const std::size_t n = caps.per_axis;
  for (std::size_t iy = 0; iy < f.ny(); ++iy) {
    for (std::size_t ix = 0; ix < f.nx(); ++ix) {
      const Point2 p = f.point(ix, iy);
      if (!unit_square.contains_closed(p)) continue;
      const auto cell = [&](double u) {
        return std::min(n - 1, static_cast<std::size_t>(std::max(0.0, std::floor(u * K))));
      };
      const std::size_t c = caps.index(cell(p.x), cell(p.y));
      const std::size_t h = ragged.horizontal_of[c];
      const std::size_t v = d.n_vertical ? ragged.vertical_of[c] - v_base : 0;
      group[iy * f.nx() + ix] = h * std::max<std::size_t>(1, d.n_vertical) + v;
    }
  }
  std::vector<Atom> boxes(n_groups, Atom{f.nx(), f.ny(), 0, 0, {}});
  for (std::size_t iy = 0; iy < f.ny(); ++iy) {
    for (std::size_t ix = 0; ix < f.nx(); ++ix) {
      const std::size_t g = group[iy * f.nx() + ix];
      if (g == RaggedStrips::npos) continue;
      Atom& a = boxes[g];
      a.ix0 = std::min(a.ix0, ix);
      a.iy0 = std::min(a.iy0, iy);
      a.ix1 = std::max(a.ix1, ix + 1);
      a.iy1 = std::max(a.iy1, iy + 1);
    }
  }
  for (std::size_t g = 0; g < n_groups; ++g) {
    Atom& a = boxes[g];
    if (a.ix1 <= a.ix0 || a.iy1 <= a.iy0) {
      a = Atom{0, 0, 0, 0, {}};
    } else {
      a.mask.assign(a.width() * a.height(), 0);
      for (std::size_t iy = a.iy0; iy < a.iy1; ++iy) {
        for (std::size_t ix = a.ix0; ix < a.ix1; ++ix) {
          a.mask[(iy - a.iy0) * a.width() + (ix - a.ix0)] = group[iy * f.nx() + ix] == g;
        }
      }
    }
    d.atoms.push_back(std::move(a));
    const std::size_t nv = std::max<std::size_t>(1, d.n_vertical);
    d.horizontal_of.push_back(g / nv);
    d.vertical_of.push_back(g % nv);
  }
  return d;
}

// Per point values of every strip piece built from the atoms of one slice.
class SliceCombiner {
 public:
  explicit SliceCombiner(const StripDecomposition& d)
      : d_(d), horizontal_(d.n_horizontal), vertical_(d.n_vertical) {}

  // Fills ef and returns the label at flat slice index i.
  std::uint8_t label(const SliceEvaluator::SliceFields& fields, std::size_t i, double alpha,
                     cplx& ef) {
    std::fill(horizontal_.begin(), horizontal_.end(), cplx{});
    std::fill(vertical_.begin(), vertical_.end(), cplx{});
    ef = 0.0;
    double short_max = 0.0;
    for (std::size_t a = 0; a < fields.size(); ++a) {
      const cplx v = fields[a][i];
      ef += v;
      horizontal_[d_.horizontal_of[a]] += v;
      if (d_.has_vertical()) {
        vertical_[d_.vertical_of[a]] += v;
        short_max = std::max(short_max, std::norm(v));
      }
    }
    if (ef == cplx{}) return label_broad;
    // Squared magnitudes throughout.
    const double bound = alpha * alpha * std::norm(ef);
    auto exceeds = [&](const std::vector<cplx>& pieces) {
      return std::any_of(pieces.begin(), pieces.end(),
                         [&](const cplx& v) { return std::norm(v) > bound; });
    };
    if (exceeds(horizontal_)) return label_horizontal;
    if (!d_.has_vertical()) return label_broad;
    if (exceeds(vertical_)) return label_vertical;
    if (short_max > bound) return label_short;
    return label_broad;
  }

  // Horizontal pieces of the last labelled point.
  const std::vector<cplx>& horizontal() const { return horizontal_; }

 private:
  const StripDecomposition& d_;
  std::vector<cplx> horizontal_;
  std::vector<cplx> vertical_;
};

using SliceVisitor = std::function<void(std::size_t i3, const std::vector<std::uint8_t>&,
                                         const std::vector<cplx>&, const std::vector<double>&)>;

// Runs the slice evaluator over the decomposition; visit sees each point once. With
// keep_horizontal the last argument holds |E f_L| for every long horizontal strip L at point
// i in entries [i * n, (i + 1) * n); otherwise it is empty.
void scan(const SampledFunction& f, const Surface& s, const ScaleParams& params, std::size_t M,
          StripMode mode, bool keep_horizontal, const SliceVisitor& per_slice) {
  params.validate();
  check_sampling(f, s.gamma(), params.R, M);
  const StripDecomposition d = decompose_strips(f, s, params, mode);
  const std::size_t n = d.n_horizontal;
  SliceEvaluator eval(f, s, GridSpec{params.R, M}, d.atoms);
  eval.run([&](std::size_t i3, const SliceEvaluator::SliceFields& fields) {
    SliceCombiner comb(d);
    std::vector<std::uint8_t> labels(M * M);
    std::vector<cplx> ef(M * M);
    std::vector<double> horizontal(keep_horizontal ? M * M * n : 0);
    for (std::size_t i = 0; i < M * M; ++i) {
      labels[i] = comb.label(fields, i, params.alpha, ef[i]);
      if (!keep_horizontal) continue;
      for (std::size_t l = 0; l < n; ++l) horizontal[i * n + l] = std::abs(comb.horizontal()[l]);
    }
    per_slice(i3, labels, ef, horizontal);
  });
}

}  // namespace

StripDecomposition decompose_strips(const SampledFunction& f, const Surface& s,
                                    const ScaleParams& params, StripMode mode) {
  if (mode == StripMode::plain) return plain_decomposition(f, s, params.K);
  return ragged_decomposition(f, s, params.K, params.mu);
}

ClassifiedField classify_points(const SampledFunction& f, const Surface& s,
                                const ScaleParams& params, std::size_t M, StripMode mode) {
  ClassifiedField out;
  out.grid = {params.R, M};
  out.labels.resize(out.grid.size());
  out.magnitude.resize(out.grid.size());
  scan(f, s, params, M, mode, false,
       [&](std::size_t i3, const std::vector<std::uint8_t>& labels, const std::vector<cplx>& ef,
           const std::vector<double>&) {
         std::copy(labels.begin(), labels.end(), out.labels.begin() + i3 * M * M);
         for (std::size_t i = 0; i < M * M; ++i) out.magnitude[i3 * M * M + i] = std::abs(ef[i]);
       });
  for (std::uint8_t l : out.labels) ++out.counts[l];
  return out;
}

double BroadMask::broad_norm(double p) const {
  LpAccumulator acc(p);
  for (std::size_t i = 0; i < mask.size(); ++i) acc.add(mask[i] ? magnitude[i] : 0.0);
  return acc.value(grid.cell_volume());
}

BroadMask broad_mask(const SampledFunction& f, const Surface& s, const ScaleParams& params,
                     std::size_t M, StripMode mode) {
  ClassifiedField c = classify_points(f, s, params, M, mode);
  BroadMask b;
  b.grid = c.grid;
  b.alpha = params.alpha;
  b.mode = mode;
  b.mask.resize(c.labels.size());
  for (std::size_t i = 0; i < c.labels.size(); ++i) b.mask[i] = c.labels[i] == label_broad;
  b.magnitude = std::move(c.magnitude);
  return b;
}

BroadNorms broad_norms(const SampledFunction& f, const Surface& s, const ScaleParams& params,
                       std::size_t M, const std::vector<double>& ps, StripMode mode,
                       bool strip_aggregates) {
  struct Partial {
    std::vector<LpAccumulator> full;
    std::vector<LpAccumulator> broad;
    std::vector<LpAccumulator> strip_lp;
    std::vector<LpAccumulator> strip_linf;
    std::array<std::size_t, 4> counts{};
  };
  std::vector<Partial> partial(M);
  scan(f, s, params, M, mode, strip_aggregates,
       [&](std::size_t i3, const std::vector<std::uint8_t>& labels, const std::vector<cplx>& ef,
           const std::vector<double>& horizontal) {
         Partial part;
         for (double p : ps) {
           part.full.emplace_back(p);
           part.broad.emplace_back(p);
           part.strip_lp.emplace_back(p);
           part.strip_linf.emplace_back(p);
         }
         const std::size_t n = labels.empty() ? 0 : horizontal.size() / labels.size();
         for (std::size_t i = 0; i < labels.size(); ++i) {
           const double a = std::abs(ef[i]);
           ++part.counts[labels[i]];
           for (std::size_t k = 0; k < ps.size(); ++k) {
             part.full[k].add(a);
             if (labels[i] == label_broad) part.broad[k].add(a);
           }
           if (n == 0 || labels[i] != label_horizontal) continue;
           const auto first = horizontal.begin() + static_cast<std::ptrdiff_t>(i * n);
           const double largest = *std::max_element(first, first + static_cast<std::ptrdiff_t>(n));
           for (std::size_t k = 0; k < ps.size(); ++k) {
             // Summing |E f_L|^p over L and points gives the l^p aggregate.
             for (auto it = first; it != first + static_cast<std::ptrdiff_t>(n); ++it) {
               part.strip_lp[k].add(*it);
             }
             part.strip_linf[k].add(largest);
           }
         }
         partial[i3] = std::move(part);
       });
  BroadNorms out;
  out.ps = ps;
  const double vol = GridSpec{params.R, M}.cell_volume();
  for (std::size_t k = 0; k < ps.size(); ++k) {
    LpAccumulator full(ps[k]), broad(ps[k]), lp(ps[k]), linf(ps[k]);
    for (const Partial& part : partial) {
      full.merge(part.full[k]);
      broad.merge(part.broad[k]);
      lp.merge(part.strip_lp[k]);
      linf.merge(part.strip_linf[k]);
    }
    out.full.push_back(full.value(vol));
    out.broad.push_back(broad.value(vol));
    if (strip_aggregates) {
      out.strip_lp.push_back(lp.value(vol));
      out.strip_linf.push_back(linf.value(vol));
    }
  }
  for (const Partial& part : partial) {
    for (std::size_t l = 0; l < 4; ++l) out.counts[l] += part.counts[l];
  }
  return out;
}

std::vector<Field3> strip_extensions(const SampledFunction& f, const Surface& s,
                                     const ScaleParams& params, std::size_t M, StripKind kind,
                                     StripMode mode) {
  check_sampling(f, s.gamma(), params.R, M);
  const StripDecomposition d = decompose_strips(f, s, params, mode);
  if (kind != StripKind::long_horizontal && !d.has_vertical()) return {};
  std::size_t n_out = 0;
  std::vector<std::size_t> target(d.atoms.size());
  for (std::size_t a = 0; a < d.atoms.size(); ++a) {
    switch (kind) {
      case StripKind::long_horizontal:
        target[a] = d.horizontal_of[a];
        n_out = d.n_horizontal;
        break;
      case StripKind::long_vertical:
        target[a] = d.vertical_of[a];
        n_out = d.n_vertical;
        break;
      case StripKind::short_vertical:
        target[a] = a;
        n_out = d.atoms.size();
        break;
    }
  }
  const GridSpec grid{params.R, M};
  std::vector<Field3> out(n_out, Field3{grid, std::vector<cplx>(grid.size())});
  SliceEvaluator eval(f, s, grid, d.atoms);
  eval.run([&](std::size_t i3, const SliceEvaluator::SliceFields& fields) {
    for (std::size_t a = 0; a < fields.size(); ++a) {
      cplx* dst = out[target[a]].values.data() + i3 * M * M;
      for (std::size_t i = 0; i < M * M; ++i) dst[i] += fields[a][i];
    }
  });
  return out;
}

std::vector<KnappPoint> knapp_sweep(const std::vector<double>& Rs, const std::vector<double>& ps,
                                    double gamma, Point2 center) {
  std::vector<KnappPoint> out;
  for (double R : Rs) {
    const SampledFunction f = knapp(R, center);
    const double need = 2.0 * R / max_frequency_spacing(gamma);
    const std::size_t M = std::bit_ceil(static_cast<std::size_t>(std::ceil(need - 1e-9)));
    out.push_back({R, M, extension_norms(f, gamma, R, M, ps)});
  }
  return out;
}

double fitted_exponent(const std::vector<double>& Rs, const std::vector<double>& values) {
  const std::size_t n = Rs.size();
  if (n < 2 || values.size() != n) throw std::invalid_argument("need at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = std::log(Rs[i]);
    const double y = std::log(values[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double dn = static_cast<double>(n);
  return (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
}

}  // namespace srl
