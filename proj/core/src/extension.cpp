#include "srl/extension.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "srl/parallel.hpp"

namespace srl {

SampledFunction::SampledFunction(Box domain, std::size_t nx, std::size_t ny)
    : domain_(domain), nx_(nx), ny_(ny), values_(nx * ny) {
  if (nx == 0 || ny == 0 || domain.empty()) {
    throw std::invalid_argument("sampled function needs a non-empty grid and domain");
  }
}

SampledFunction SampledFunction::from(Box domain, std::size_t nx, std::size_t ny,
                                      const std::function<cplx(Point2)>& fn) {
  SampledFunction f(domain, nx, ny);
  for (std::size_t iy = 0; iy < ny; ++iy) {
    for (std::size_t ix = 0; ix < nx; ++ix) f.at(ix, iy) = fn(f.point(ix, iy));
  }
  return f;
}

Point2 SampledFunction::point(std::size_t ix, std::size_t iy) const {
  return {domain_.x0 + (static_cast<double>(ix) + 0.5) * dx(),
          domain_.y0 + (static_cast<double>(iy) + 0.5) * dy()};
}

double SampledFunction::l2_norm() const {
  double s = 0.0;
  for (const cplx& v : values_) s += std::norm(v);
  return std::sqrt(s * dx() * dy());
}

double SampledFunction::l1_norm() const {
  double s = 0.0;
  for (const cplx& v : values_) s += std::abs(v);
  return s * dx() * dy();
}

double SampledFunction::linf_norm() const {
  double m = 0.0;
  for (const cplx& v : values_) m = std::max(m, std::abs(v));
  return m;
}

SampledFunction SampledFunction::restricted(const Box& b) const {
  SampledFunction out = *this;
  for (std::size_t iy = 0; iy < ny_; ++iy) {
    for (std::size_t ix = 0; ix < nx_; ++ix) {
      if (!b.contains_closed(point(ix, iy))) out.at(ix, iy) = 0.0;
    }
  }
  return out;
}

SampledFunction random_gaussian(std::size_t n, std::uint64_t seed, Box domain) {
  SampledFunction f(domain, n, n);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  for (cplx& v : f.values()) {
    v = {normal(rng), normal(rng)};
    const double a = std::abs(v);
    if (a > 1.0) v /= a;
  }
  return f;
}

SampledFunction knapp(double R, Point2 center, std::size_t min_samples) {
  if (!(R >= 1.0)) throw std::invalid_argument("knapp example needs R >= 1");
  const double s = 1.0 / std::sqrt(R);
  const Box cap{center.x - 0.5 * s, center.y - 0.5 * s, center.x + 0.5 * s, center.y + 0.5 * s};
  if (!unit_square.contains_box(cap, 1e-12)) {
    throw std::invalid_argument("knapp cap must lie inside the unit square");
  }
  std::size_t n = static_cast<std::size_t>(std::ceil(required_sample_density(R) * s));
  n = std::max(n, min_samples);
  n += n % 2;
  SampledFunction f(cap, n, n);
  std::fill(f.values().begin(), f.values().end(), cplx{1.0, 0.0});
  return f;
}

bool ScaleParams::desk_override() const {
  const double asymptotic = std::exp(std::pow(epsilon, -10.0));
  return !(std::isfinite(asymptotic) && asymptotic == K);
}

void ScaleParams::validate() const {
  if (!(R >= 1.0)) throw std::invalid_argument("R must be >= 1");
  if (!(K >= 1.0)) throw std::invalid_argument("K must be >= 1");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1)");
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  if (!(mu >= 1.0)) throw std::invalid_argument("mu must be >= 1");
}

double required_sample_density(double R) { return 8.0 * R / std::numbers::pi; }

double max_frequency_spacing(double gamma) {
  return std::numbers::pi / (2.0 * (1.0 + std::abs(gamma) / 3.0));
}

void check_sampling(const SampledFunction& f, double gamma, double R, std::size_t M) {
  std::ostringstream msg;
  if (M < 2 || !std::has_single_bit(M)) {
    msg << "frequency grid size M=" << M << " must be a power of two";
    throw SamplingError(msg.str());
  }
  const GridSpec g{R, M};
  if (g.h() > max_frequency_spacing(gamma) * (1.0 + 1e-12)) {
    const double need = 2.0 * R / max_frequency_spacing(gamma);
    msg << "frequency grid too coarse: M=" << M << " needs M >= " << std::ceil(need);
    throw SamplingError(msg.str());
  }
  const double rho = required_sample_density(R);
  const double need_x = rho * f.domain().width();
  const double need_y = rho * f.domain().height();
  if (static_cast<double>(f.nx()) < need_x * (1.0 - 1e-12) ||
      static_cast<double>(f.ny()) < need_y * (1.0 - 1e-12)) {
    msg << "parameter grid too coarse: " << f.nx() << "x" << f.ny() << " samples, need at least "
        << std::ceil(need_x) << "x" << std::ceil(need_y);
    throw SamplingError(msg.str());
  }
}

cplx extension_at(const SampledFunction& f, const Surface& s, const Vec3& xi) {
  cplx acc{};
  for (std::size_t iy = 0; iy < f.ny(); ++iy) {
    cplx row{};
    for (std::size_t ix = 0; ix < f.nx(); ++ix) {
      const cplx v = f.at(ix, iy);
      if (v == cplx{}) continue;
      const Point2 p = f.point(ix, iy);
      row += v * std::polar(1.0, xi[0] * p.x + xi[1] * p.y + xi[2] * s.phi(p));
    }
    acc += row;
  }
  return acc * (f.dx() * f.dy());
}

Atom atom_for_box(const SampledFunction& f, const Box& b) {
  // First index whose sample centre is >= a.
  auto first_at = [](double a, double start, double step, std::size_t n) {
    const double v = std::ceil((a - start) / step - 0.5 - 1e-9);
    return static_cast<std::size_t>(std::clamp(v, 0.0, static_cast<double>(n)));
  };
  Atom a;
  const Box& d = f.domain();
  a.ix0 = first_at(b.x0, d.x0, f.dx(), f.nx());
  a.ix1 = first_at(b.x1, d.x0, f.dx(), f.nx());
  a.iy0 = first_at(b.y0, d.y0, f.dy(), f.ny());
  a.iy1 = first_at(b.y1, d.y0, f.dy(), f.ny());
  if (b.x1 >= d.x1) a.ix1 = f.nx();
  if (b.y1 >= d.y1) a.iy1 = f.ny();
  return a;
}

struct SliceEvaluator::Worker {
  std::vector<ChirpZ> along_x;
  std::vector<ChirpZ> along_y;
  std::vector<cplx> modulated;
  std::vector<cplx> row;
  std::vector<cplx> rows;
  std::vector<cplx> column;
  std::vector<cplx> column_out;
  SliceFields fields;
};

SliceEvaluator::SliceEvaluator(const SampledFunction& f, const Surface& s, GridSpec grid,
                               std::vector<Atom> atoms)
    : f_(f), surface_(s), grid_(grid), atoms_(std::move(atoms)) {
  for (const Atom& a : atoms_) {
    if (a.ix1 > f.nx() || a.iy1 > f.ny() || a.ix0 > a.ix1 || a.iy0 > a.iy1) {
      throw std::invalid_argument("atom outside the sample grid");
    }
    if (!a.mask.empty() && a.mask.size() != a.width() * a.height()) {
      throw std::invalid_argument("atom mask size mismatch");
    }
  }
  const unsigned n_workers = thread_count();
  const std::size_t M = grid_.M;
  for (unsigned w = 0; w < n_workers; ++w) {
    auto wk = std::make_unique<Worker>();
    std::size_t max_h = 1;
    for (const Atom& a : atoms_) {
      const std::size_t nx = std::max<std::size_t>(a.width(), 1);
      const std::size_t ny = std::max<std::size_t>(a.height(), 1);
      max_h = std::max(max_h, ny);
      const Point2 p0 = f.point(a.ix0, a.iy0);
      wk->along_x.emplace_back(nx, M, grid_.coord(0), grid_.h(), p0.x, f.dx());
      wk->along_y.emplace_back(ny, M, grid_.coord(0), grid_.h(), p0.y, f.dy());
    }
    wk->modulated.resize(f.nx() * f.ny());
    wk->row.resize(f.nx());
    wk->rows.resize(max_h * M);
    wk->column.resize(max_h);
    wk->column_out.resize(M);
    wk->fields.assign(atoms_.size(), std::vector<cplx>(M * M));
    workers_.push_back(std::move(wk));
  }
}

SliceEvaluator::~SliceEvaluator() = default;

void SliceEvaluator::evaluate_slice(std::size_t i3, Worker& w) {
  const std::size_t M = grid_.M;
  const double xi3 = grid_.coord(i3);
  const double gamma = surface_.gamma();
  const double cell = f_.dx() * f_.dy();
  const std::size_t nx = f_.nx();
  constexpr std::size_t reanchor = 32;

  // f exp(i xi3 phi) times the cell area; the x dependence of phi is linear, so each row
  // is a geometric progression re-anchored every few samples.
  for (std::size_t iy = 0; iy < f_.ny(); ++iy) {
    const Point2 p0 = f_.point(0, iy);
    const double y = p0.y;
    const cplx step = std::polar(1.0, xi3 * y * f_.dx());
    const double cubic = gamma * y * y * y / 3.0;
    cplx phase{};
    for (std::size_t ix = 0; ix < nx; ++ix) {
      if (ix % reanchor == 0) {
        const double x = f_.domain().x0 + (static_cast<double>(ix) + 0.5) * f_.dx();
        phase = std::polar(1.0, xi3 * (x * y + cubic));
      } else {
        phase *= step;
      }
      w.modulated[iy * nx + ix] = f_.at(ix, iy) * phase * cell;
    }
  }

  for (std::size_t a = 0; a < atoms_.size(); ++a) {
    const Atom& atom = atoms_[a];
    std::vector<cplx>& out = w.fields[a];
    const std::size_t ax = atom.width();
    const std::size_t ay = atom.height();
    if (ax == 0 || ay == 0) {
      std::fill(out.begin(), out.end(), cplx{});
      continue;
    }
    for (std::size_t r = 0; r < ay; ++r) {
      const cplx* src = &w.modulated[(atom.iy0 + r) * nx + atom.ix0];
      std::copy(src, src + ax, w.row.begin());
      if (!atom.mask.empty()) {
        for (std::size_t c = 0; c < ax; ++c) {
          if (!atom.mask[r * ax + c]) w.row[c] = 0.0;
        }
      }
      w.along_x[a].apply(std::span<const cplx>(w.row.data(), ax),
                         std::span<cplx>(&w.rows[r * M], M));
    }
    for (std::size_t k1 = 0; k1 < M; ++k1) {
      for (std::size_t r = 0; r < ay; ++r) w.column[r] = w.rows[r * M + k1];
      w.along_y[a].apply(std::span<const cplx>(w.column.data(), ay), w.column_out);
      for (std::size_t k2 = 0; k2 < M; ++k2) out[k2 * M + k1] = w.column_out[k2];
    }
  }
}

void SliceEvaluator::run(const Visitor& visit) {
  parallel_for(grid_.M, [&](std::size_t i3, unsigned worker) {
    Worker& w = *workers_.at(worker);
    evaluate_slice(i3, w);
    visit(i3, w.fields);
  });
}

Field3 evaluate_extension(const SampledFunction& f, double gamma, double R, std::size_t M) {
  const Surface s(gamma);
  check_sampling(f, gamma, R, M);
  Field3 out{{R, M}, std::vector<cplx>(M * M * M)};
  SliceEvaluator eval(f, s, out.grid, {Atom{0, 0, f.nx(), f.ny(), {}}});
  eval.run([&](std::size_t i3, const SliceEvaluator::SliceFields& fields) {
    std::copy(fields[0].begin(), fields[0].end(), out.values.begin() + i3 * M * M);
  });
  return out;
}

void LpAccumulator::add(double magnitude) {
  if (std::isinf(p_)) {
    max_ = std::max(max_, magnitude);
  } else {
    sum_ += std::pow(magnitude, p_);
  }
}

void LpAccumulator::merge(const LpAccumulator& other) {
  sum_ += other.sum_;
  max_ = std::max(max_, other.max_);
}

double LpAccumulator::value(double cell_volume) const {
  if (std::isinf(p_)) return max_;
  return std::pow(sum_ * cell_volume, 1.0 / p_);
}

double lp_norm(const Field3& field, double p) {
  LpAccumulator acc(p);
  for (const cplx& v : field.values) acc.add(std::abs(v));
  return acc.value(field.grid.cell_volume());
}

double lp_norm(const Field3& field, double p, const std::vector<std::uint8_t>& mask) {
  if (mask.size() != field.values.size()) throw std::invalid_argument("mask size mismatch");
  LpAccumulator acc(p);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) acc.add(std::abs(field.values[i]));
  }
  return acc.value(field.grid.cell_volume());
}

std::vector<double> extension_norms(const SampledFunction& f, double gamma, double R,
                                    std::size_t M, const std::vector<double>& ps) {
  const Surface s(gamma);
  check_sampling(f, gamma, R, M);
  const GridSpec grid{R, M};
  std::vector<std::vector<LpAccumulator>> per_slice(M);
  SliceEvaluator eval(f, s, grid, {Atom{0, 0, f.nx(), f.ny(), {}}});
  eval.run([&](std::size_t i3, const SliceEvaluator::SliceFields& fields) {
    std::vector<LpAccumulator> accs;
    for (double p : ps) accs.emplace_back(p);
    for (const cplx& v : fields[0]) {
      const double a = std::abs(v);
      for (LpAccumulator& acc : accs) acc.add(a);
    }
    per_slice[i3] = std::move(accs);
  });
  std::vector<double> out;
  for (std::size_t k = 0; k < ps.size(); ++k) {
    LpAccumulator total(ps[k]);
    for (const auto& accs : per_slice) total.merge(accs[k]);
    out.push_back(total.value(grid.cell_volume()));
  }
  return out;
}

}  // namespace srl
