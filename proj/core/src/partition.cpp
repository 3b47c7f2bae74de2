#include "srl/partition.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace srl {

std::string_view to_string(StripKind k) {
  switch (k) {
    case StripKind::long_horizontal:
      return "long_horizontal";
    case StripKind::long_vertical:
      return "long_vertical";
    case StripKind::short_vertical:
      return "short_vertical";
  }
  return "unknown";
}

std::size_t ceil_count(double v) {
  const double r = std::round(v);
  if (std::abs(v - r) < 1e-9 * std::max(1.0, std::abs(v))) return static_cast<std::size_t>(r);
  return static_cast<std::size_t>(std::ceil(v));
}

bool uses_vertical_strips(double gamma, double K, bool ragged) {
  const double v = std::abs(gamma) * std::sqrt(K);
  return ragged ? v <= 1.0 : v < 1.0;
}

namespace {

void check_K(double K) {
  if (!std::isfinite(K) || K < 1.0) throw std::invalid_argument("K must be >= 1");
}

std::vector<Box> bands_y(double h) {
  std::vector<Box> out;
  const std::size_t n = ceil_count(1.0 / h);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({0.0, static_cast<double>(i) * h, 1.0,
                   std::min(1.0, static_cast<double>(i + 1) * h)});
  }
  out.back().y1 = 1.0;
  return out;
}

std::vector<Box> bands_x(double w) {
  std::vector<Box> out;
  for (const Box& b : bands_y(w)) out.push_back({b.y0, 0.0, b.y1, 1.0});
  return out;
}

}  // namespace

std::vector<StripSet> make_strips(double K, double gamma) {
  check_K(K);
  const Surface surface(gamma);
  std::vector<StripSet> out;
  const std::vector<Box> hs = bands_y(std::pow(K, -0.25));
  out.push_back({StripKind::long_horizontal, K, hs});
  if (uses_vertical_strips(surface.gamma(), K)) {
    const std::vector<Box> vs = bands_x(std::pow(K, -0.5));
    out.push_back({StripKind::long_vertical, K, vs});
    StripSet shorts{StripKind::short_vertical, K, {}};
    for (const Box& h : hs) {
      for (const Box& v : vs) shorts.rects.push_back(h.intersect(v));
    }
    out.push_back(std::move(shorts));
  }
  return out;
}

CapFamily make_caps(double K, double mu) {
  check_K(K);
  if (K != std::floor(K)) throw std::invalid_argument("cap grid needs an integer K");
  if (!(mu >= 1.0) || mu > K * K) throw std::invalid_argument("mu must lie in [1, K^2]");
  CapFamily f;
  f.K = K;
  f.mu = mu;
  f.per_axis = static_cast<std::size_t>(K);
  const double side = std::floor(std::sqrt(mu) + 1e-12) / K;
  f.caps.reserve(f.per_axis * f.per_axis);
  for (std::size_t iy = 0; iy < f.per_axis; ++iy) {
    for (std::size_t ix = 0; ix < f.per_axis; ++ix) {
      f.caps.push_back({{(static_cast<double>(ix) + 0.5) / K, (static_cast<double>(iy) + 0.5) / K},
                        side});
    }
  }
  return f;
}

std::size_t multiplicity_at(const CapFamily& family, Point2 p) {
  return static_cast<std::size_t>(std::count_if(family.caps.begin(), family.caps.end(),
                                                 [&](const Cap& c) { return c.contains(p); }));
}

Box RaggedStrip::footprint(const CapFamily& family) const {
  if (members.empty()) return {0.0, 0.0, 0.0, 0.0};
  Box b = family.caps[members.front()].box();
  for (std::size_t i : members) {
    const Box c = family.caps[i].box();
    b = {std::min(b.x0, c.x0), std::min(b.y0, c.y0), std::max(b.x1, c.x1), std::max(b.y1, c.y1)};
  }
  return b;
}

namespace {

// Assigns each cap to the first band whose closed extent meets the cap's open interior.
std::vector<std::size_t> assign_bands(const CapFamily& family, double h, bool along_y,
                                      std::size_t& n_bands) {
  n_bands = ceil_count(1.0 / h);
  std::vector<std::size_t> band(family.caps.size(), RaggedStrips::npos);
  for (std::size_t i = 0; i < family.caps.size(); ++i) {
    const Box c = family.caps[i].box();
    const double lo = along_y ? c.y0 : c.x0;
    const double hi = along_y ? c.y1 : c.x1;
    for (std::size_t l = 0;; ++l) {
      const double a = static_cast<double>(l) * h;
      const double b = static_cast<double>(l + 1) * h;
      if (lo < b && hi > a) {
        band[i] = l;
        break;
      }
      if (a > 1.0) throw std::logic_error("cap outside every band");
    }
    n_bands = std::max(n_bands, band[i] + 1);
  }
  return band;
}

}  // namespace

RaggedStrips make_ragged(const CapFamily& family, double gamma) {
  const Surface surface(gamma);
  RaggedStrips r;
  r.gamma = surface.gamma();
  const double K = family.K;
  const double root_mu = std::sqrt(family.mu);
  r.band_height = root_mu * std::pow(K, -0.25);
  r.band_width = root_mu * std::pow(K, -0.5);

  std::size_t nh = 0;
  const std::vector<std::size_t> hb = assign_bands(family, r.band_height, true, nh);
  r.n_horizontal = nh;
  for (std::size_t l = 0; l < nh; ++l) {
    const double y0 = std::min(1.0, static_cast<double>(l) * r.band_height);
    const double y1 = std::min(1.0, static_cast<double>(l + 1) * r.band_height);
    r.strips.push_back({StripKind::long_horizontal, l, {0.0, y0, 1.0, y1}, {}});
  }
  r.horizontal_of.assign(family.caps.size(), RaggedStrips::npos);
  r.vertical_of.assign(family.caps.size(), RaggedStrips::npos);
  r.short_of.assign(family.caps.size(), RaggedStrips::npos);
  for (std::size_t i = 0; i < hb.size(); ++i) {
    r.strips[hb[i]].members.push_back(i);
    r.horizontal_of[i] = hb[i];
  }
  if (!uses_vertical_strips(r.gamma, K, true)) return r;

  std::size_t nv = 0;
  const std::vector<std::size_t> vb = assign_bands(family, r.band_width, false, nv);
  r.n_vertical = nv;
  const std::size_t v_base = r.strips.size();
  for (std::size_t l = 0; l < nv; ++l) {
    const double x0 = std::min(1.0, static_cast<double>(l) * r.band_width);
    const double x1 = std::min(1.0, static_cast<double>(l + 1) * r.band_width);
    r.strips.push_back({StripKind::long_vertical, l, {x0, 0.0, x1, 1.0}, {}});
  }
  const std::size_t s_base = r.strips.size();
  for (std::size_t h = 0; h < nh; ++h) {
    for (std::size_t v = 0; v < nv; ++v) {
      const Box nominal = r.strips[h].nominal.intersect(r.strips[v_base + v].nominal);
      r.strips.push_back({StripKind::short_vertical, h * nv + v, nominal, {}});
    }
  }
  for (std::size_t i = 0; i < vb.size(); ++i) {
    r.strips[v_base + vb[i]].members.push_back(i);
    r.vertical_of[i] = v_base + vb[i];
    const std::size_t s = s_base + hb[i] * nv + vb[i];
    r.strips[s].members.push_back(i);
    r.short_of[i] = s;
  }
  return r;
}

GeometricCover geometric_lemma_check(const CapFamily& family, const RaggedStrips& ragged,
                                     std::span<const std::size_t> subfamily) {
  const double K = family.K;
  if (K < 20.0) throw std::invalid_argument("geometric lemma requires K >= 20");
  const Surface surface(ragged.gamma);
  for (std::size_t a = 0; a < subfamily.size(); ++a) {
    for (std::size_t b = a + 1; b < subfamily.size(); ++b) {
      if (strongly_separated(surface, family.caps.at(subfamily[a]), family.caps.at(subfamily[b]),
                             family.mu, K)) {
        throw std::invalid_argument("precondition violated: strongly separated pair present");
      }
    }
  }
  std::set<std::size_t> hs;
  std::set<std::size_t> vs;
  for (std::size_t i : subfamily) {
    hs.insert(ragged.horizontal_of.at(i));
    if (ragged.has_vertical()) vs.insert(ragged.vertical_of.at(i));
  }
  GeometricCover c;
  c.horizontal_count = hs.size();
  c.vertical_count = vs.size();
  if (std::abs(ragged.gamma) * std::sqrt(K) > 1.0) {
    c.lemma_case = 'a';
    c.kind = StripKind::long_horizontal;
    c.bound = 40;
    c.witness.assign(hs.begin(), hs.end());
    c.holds = hs.size() <= 40;
    return c;
  }
  c.lemma_case = 'b';
  if (hs.size() <= 3) {
    c.kind = StripKind::long_horizontal;
    c.bound = 3;
    c.witness.assign(hs.begin(), hs.end());
  } else {
    c.kind = StripKind::long_vertical;
    c.bound = 40;
    c.witness.assign(vs.begin(), vs.end());
  }
  c.holds = hs.size() <= 3 || vs.size() <= 40;
  return c;
}

void write_rectangles(std::ostream& out, std::span<const TaggedBox> rects) {
  out << "# srl-rects v1: kind x0 y0 x1 y1\n";
  out.precision(17);
  for (const TaggedBox& r : rects) {
    out << r.kind << ' ' << r.box.x0 << ' ' << r.box.y0 << ' ' << r.box.x1 << ' ' << r.box.y1
        << '\n';
  }
}

std::vector<TaggedBox> read_rectangles(std::istream& in) {
  std::vector<TaggedBox> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    std::istringstream ls(line);
    TaggedBox t;
    if (!(ls >> t.kind >> t.box.x0 >> t.box.y0 >> t.box.x1 >> t.box.y1)) {
      throw std::runtime_error("malformed rectangle on line " + std::to_string(line_no));
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<TaggedBox> tagged(const std::vector<StripSet>& sets) {
  std::vector<TaggedBox> out;
  for (const StripSet& s : sets) {
    for (const Box& b : s.rects) out.push_back({std::string(to_string(s.kind)), b});
  }
  return out;
}

std::vector<TaggedBox> tagged(const CapFamily& family) {
  std::vector<TaggedBox> out;
  for (const Cap& c : family.caps) out.push_back({"cap", c.box()});
  return out;
}

}  // namespace srl
