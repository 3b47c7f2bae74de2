#include "srl/wavepacket.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "srl/parallel.hpp"

namespace srl {

namespace {

std::size_t integer_sqrt(double R) {
  const double r = std::sqrt(R);
  const double k = std::round(r);
  if (k < 1.0 || std::abs(r - k) > 1e-9 * r) {
    throw std::invalid_argument("wave packet scale R must be a perfect square");
  }
  return static_cast<std::size_t>(k);
}

Vec3 add(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
Vec3 scale(double c, const Vec3& a) { return {c * a[0], c * a[1], c * a[2]}; }

std::ptrdiff_t signed_index(std::size_t k, std::size_t n) {
  return k < (n + 1) / 2 ? static_cast<std::ptrdiff_t>(k)
                         : static_cast<std::ptrdiff_t>(k) - static_cast<std::ptrdiff_t>(n);
}

double smooth_step(double u) {
  if (u <= -1.0) return 0.0;
  if (u >= 1.0) return 1.0;
  const auto h = [](double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; };
  const double a = h(0.5 * (1.0 + u));
  const double b = h(0.5 * (1.0 - u));
  return a / (a + b);
}

// One dimensional partition of unity on [0, 1] into cells [i s, (i + 1) s].
double cell_weight(double x, std::size_t i, std::size_t cells, double s, double tau) {
  double w = 1.0;
  if (i > 0) w *= smooth_step((x - static_cast<double>(i) * s) / tau);
  if (i + 1 < cells) w *= 1.0 - smooth_step((x - static_cast<double>(i + 1) * s) / tau);
  return w;
}

double kaiser(double u, double a, double beta) {
  const double q = u / a;
  if (std::abs(q) >= 1.0) return 0.0;
  return std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - q * q)) / std::cyl_bessel_i(0.0, beta);
}

struct Hull {
  std::vector<std::array<double, 2>> pts;
};

double cross2(const std::array<double, 2>& o, const std::array<double, 2>& a,
              const std::array<double, 2>& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

Hull convex_hull(std::vector<std::array<double, 2>> p) {
  std::sort(p.begin(), p.end());
  Hull h;
  h.pts.resize(2 * p.size());
  std::size_t k = 0;
  for (const auto& q : p) {
    while (k >= 2 && cross2(h.pts[k - 2], h.pts[k - 1], q) <= 0.0) --k;
    h.pts[k++] = q;
  }
  for (std::size_t i = p.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross2(h.pts[k - 2], h.pts[k - 1], p[i]) <= 0.0) --k;
    h.pts[k++] = p[i];
  }
  h.pts.resize(k - 1);
  return h;
}

double segment_distance(const std::array<double, 2>& q, const std::array<double, 2>& a,
                        const std::array<double, 2>& b) {
  const double vx = b[0] - a[0];
  const double vy = b[1] - a[1];
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0.0 ? ((q[0] - a[0]) * vx + (q[1] - a[1]) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(q[0] - a[0] - t * vx, q[1] - a[1] - t * vy);
}

class FftPlan {
 public:
  FftPlan(std::size_t n, int sign) {
    fftw_complex* buf = fftw_alloc_complex(n * n);
    const std::lock_guard lock(fftw_planner_mutex());
    plan_ = fftw_plan_dft_2d(static_cast<int>(n), static_cast<int>(n), buf, buf, sign,
                             FFTW_ESTIMATE);
    fftw_free(buf);
  }
  ~FftPlan() {
    const std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan_);
  }
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;
  // New-array execution is thread safe for buffers from fftw_alloc.
  void run(cplx* data) const {
    auto* p = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(plan_, p, p);
  }

 private:
  fftw_plan plan_;
};

struct FftwBuffer {
  explicit FftwBuffer(std::size_t n)
      : data(reinterpret_cast<cplx*>(fftw_alloc_complex(n))), size(n) {}
  ~FftwBuffer() { fftw_free(reinterpret_cast<fftw_complex*>(data)); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  cplx* data;
  std::size_t size;
};

}  // namespace

Box ThetaCap::box() const {
  const double h = 0.5 * side;
  return {center.x - h, center.y - h, center.x + h, center.y + h};
}

Box ThetaCap::triple() const {
  const double h = 1.5 * side;
  return {center.x - h, center.y - h, center.x + h, center.y + h};
}

std::vector<ThetaCap> make_theta_caps(const Surface& s, double R) {
  const std::size_t n = integer_sqrt(R);
  const double side = 1.0 / static_cast<double>(n);
  std::vector<ThetaCap> caps;
  caps.reserve(n * n);
  for (std::size_t iy = 0; iy < n; ++iy) {
    for (std::size_t ix = 0; ix < n; ++ix) {
      ThetaCap c;
      c.center = {(static_cast<double>(ix) + 0.5) * side, (static_cast<double>(iy) + 0.5) * side};
      c.side = side;
      c.direction = s.unit_normal(c.center);
      c.ix = ix;
      c.iy = iy;
      caps.push_back(c);
    }
  }
  return caps;
}

std::array<Vec3, 2> orthogonal_basis(const Vec3& d) {
  const Vec3 ref = std::abs(d[0]) < 0.6 ? Vec3{1.0, 0.0, 0.0} : Vec3{0.0, 1.0, 0.0};
  Vec3 e1 = cross(d, ref);
  e1 = scale(1.0 / norm(e1), e1);
  Vec3 e2 = cross(d, e1);
  e2 = scale(1.0 / norm(e2), e2);
  return {e1, e2};
}

double Tube::axis_distance(const Vec3& xi) const {
  const Vec3 rel{xi[0] - base[0], xi[1] - base[1], xi[2] - base[2]};
  const double t = dot(rel, direction);
  return norm({rel[0] - t * direction[0], rel[1] - t * direction[1], rel[2] - t * direction[2]});
}

bool Tube::contains(const Vec3& xi, double R) const {
  const bool in_ball = std::abs(xi[0]) <= R && std::abs(xi[1]) <= R && std::abs(xi[2]) <= R;
  return in_ball && axis_distance(xi) <= radius;
}

bool Tube::core_contains(const Vec3& xi, double R) const {
  const bool in_ball = std::abs(xi[0]) <= R && std::abs(xi[1]) <= R && std::abs(xi[2]) <= R;
  return in_ball && axis_distance(xi) <= core_radius;
}

double line_cube_distance(const Vec3& base, const Vec3& d, double R) {
  const auto [e1, e2] = orthogonal_basis(d);
  std::vector<std::array<double, 2>> pts;
  for (int c = 0; c < 8; ++c) {
    const Vec3 v{(c & 1) ? R : -R, (c & 2) ? R : -R, (c & 4) ? R : -R};
    pts.push_back({dot(v, e1), dot(v, e2)});
  }
  const Hull h = convex_hull(pts);
  const std::array<double, 2> q{dot(base, e1), dot(base, e2)};
  bool inside = true;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < h.pts.size(); ++i) {
    const auto& a = h.pts[i];
    const auto& b = h.pts[(i + 1) % h.pts.size()];
    if (cross2(a, b, q) < 0.0) inside = false;
    best = std::min(best, segment_distance(q, a, b));
  }
  return inside ? 0.0 : best;
}

namespace {

Tube lattice_tube(const ThetaCap& theta, std::size_t theta_index, double R, double delta,
                  const std::array<Vec3, 2>& basis, long u, long v) {
  const double spacing = std::sqrt(R);
  Tube t;
  t.direction = theta.direction;
  t.base = add(scale(spacing * static_cast<double>(u), basis[0]),
               scale(spacing * static_cast<double>(v), basis[1]));
  t.radius = std::pow(R, 0.5 + delta);
  t.core_radius = spacing;
  t.length = 2.0 * R;
  t.theta = theta_index;
  t.lattice = {u, v};
  return t;
}

}  // namespace

std::vector<Tube> make_tubes(const ThetaCap& theta, std::size_t theta_index, double R,
                             double delta) {
  const auto basis = orthogonal_basis(theta.direction);
  const double spacing = std::sqrt(R);
  const double radius = std::pow(R, 0.5 + delta);
  const long reach = static_cast<long>(std::ceil((std::sqrt(3.0) * R + radius) / spacing)) + 1;
  std::vector<Tube> out;
  for (long v = -reach; v <= reach; ++v) {
    for (long u = -reach; u <= reach; ++u) {
      Tube t = lattice_tube(theta, theta_index, R, delta, basis, u, v);
      if (line_cube_distance(t.base, t.direction, R) <= radius) out.push_back(t);
    }
  }
  return out;
}

PacketDecomposition::PacketDecomposition(const SampledFunction& f, const Surface& s, double R,
                                         const PacketConfig& config)
    : f_(f), surface_(s), R_(R), config_(config) {
  const std::size_t cells = integer_sqrt(R);
  const Box d = f.domain();
  if (d.x0 != 0.0 || d.y0 != 0.0 || d.x1 != 1.0 || d.y1 != 1.0 || f.nx() != f.ny()) {
    throw std::invalid_argument("wave packets need a square grid on the unit square");
  }
  if (f.nx() % cells != 0) {
    std::ostringstream msg;
    msg << "grid size " << f.nx() << " is not a multiple of sqrt(R) = " << cells;
    throw std::invalid_argument(msg.str());
  }
  if (static_cast<double>(f.nx()) < 4.0 * R) {
    std::ostringstream msg;
    msg << "parameter grid too coarse for R=" << R << ": " << f.nx() << " samples, need "
        << std::ceil(4.0 * R);
    throw SamplingError(msg.str());
  }
  if (config.delta <= 0.0 || config.delta >= 0.5) {
    throw std::invalid_argument("packet delta must lie in (0, 1/2)");
  }
  n_ = f.nx() / cells;
  beta_ = config.kaiser_beta > 0.0 ? config.kaiser_beta : 2.2 * std::pow(R, config.delta);
  build();
}

Box PacketDecomposition::local_domain(std::size_t theta) const { return caps_.at(theta).triple(); }

std::span<const std::uint32_t> PacketDecomposition::modes(std::size_t tube) const {
  return {tube_modes_.data() + tube_offsets_.at(tube),
          tube_offsets_.at(tube + 1) - tube_offsets_.at(tube)};
}

std::span<const cplx> PacketDecomposition::coefficients(std::size_t theta) const {
  const std::size_t m = local_size() * local_size();
  return {coeffs_.data() + theta * m, m};
}

std::span<const std::size_t> PacketDecomposition::tubes_of(std::size_t theta) const {
  return {theta_tubes_.data() + theta_tube_offsets_.at(theta),
          theta_tube_offsets_.at(theta + 1) - theta_tube_offsets_.at(theta)};
}

void PacketDecomposition::build() {
  caps_ = make_theta_caps(surface_, R_);
  const std::size_t cells = integer_sqrt(R_);
  const std::size_t L = local_size();
  const std::size_t modes_per_cap = L * L;
  const double s = 1.0 / static_cast<double>(cells);
  const double dx = f_.dx();
  const double tau = config_.transition * s;
  const double a = config_.window_radius * s;

  // Tensor Kaiser window centred on the cap, shared by every cap.
  std::vector<double> k1(L);
  for (std::size_t l = 0; l < L; ++l) {
    k1[l] = kaiser((static_cast<double>(l) + 0.5) * dx - 1.5 * s, a, beta_);
  }
  rho_.assign(modes_per_cap, 0.0);
  for (std::size_t ly = 0; ly < L; ++ly) {
    for (std::size_t lx = 0; lx < L; ++lx) rho_[ly * L + lx] = k1[lx] * k1[ly];
  }
  // Gram table of rho^2 along one axis for signed mode differences in (-L, L).
  gram_.assign(2 * L - 1, cplx{});
  for (std::size_t j = 0; j < 2 * L - 1; ++j) {
    const double dk = static_cast<double>(j) - static_cast<double>(L - 1);
    cplx acc{};
    for (std::size_t l = 0; l < L; ++l) {
      const double ang = 2.0 * std::numbers::pi * dk * (static_cast<double>(l) + 0.5) /
                         static_cast<double>(L);
      acc += k1[l] * k1[l] * std::polar(1.0, ang);
    }
    gram_[j] = acc * dx;
  }

  std::vector<cplx> half_shift(L);
  std::vector<double> omega(L);
  for (std::size_t k = 0; k < L; ++k) {
    const double ks = static_cast<double>(signed_index(k, L));
    half_shift[k] = std::polar(1.0, -std::numbers::pi * ks / static_cast<double>(L));
    omega[k] = 2.0 * std::numbers::pi * ks / (3.0 * s);
  }

  coeffs_.assign(caps_.size() * modes_per_cap, cplx{});
  std::vector<std::vector<Tube>> local_tubes(caps_.size());
  std::vector<std::vector<std::uint32_t>> mode_tube(caps_.size());
  const FftPlan plan(L, FFTW_FORWARD);
  const double inv = 1.0 / static_cast<double>(modes_per_cap);
  const double spacing = std::sqrt(R_);
  const std::size_t N = f_.nx();

  parallel_for(caps_.size(), [&](std::size_t th, unsigned) {
    const ThetaCap& cap = caps_[th];
    FftwBuffer buf(modes_per_cap);
    const Box local = cap.triple();
    std::vector<double> wx(L);
    std::vector<double> wy(L);
    for (std::size_t l = 0; l < L; ++l) {
      const double off = (static_cast<double>(l) + 0.5) * dx;
      wx[l] = cell_weight(local.x0 + off, cap.ix, cells, s, tau);
      wy[l] = cell_weight(local.y0 + off, cap.iy, cells, s, tau);
    }
    for (std::size_t ly = 0; ly < L; ++ly) {
      const long gy = static_cast<long>(cap.iy * n_ + ly) - static_cast<long>(n_);
      for (std::size_t lx = 0; lx < L; ++lx) {
        const long gx = static_cast<long>(cap.ix * n_ + lx) - static_cast<long>(n_);
        cplx v{};
        const double psi = wx[lx] * wy[ly];
        if (psi > 0.0 && gx >= 0 && gy >= 0 && gx < static_cast<long>(N) &&
            gy < static_cast<long>(N)) {
          v = f_.at(static_cast<std::size_t>(gx), static_cast<std::size_t>(gy)) * psi /
              rho_[ly * L + lx];
        }
        buf.data[ly * L + lx] = v;
      }
    }
    plan.run(buf.data);
    cplx* c = coeffs_.data() + th * modes_per_cap;
    for (std::size_t ky = 0; ky < L; ++ky) {
      for (std::size_t kx = 0; kx < L; ++kx) {
        c[ky * L + kx] = buf.data[ky * L + kx] * half_shift[kx] * half_shift[ky] * inv;
      }
    }

    // Mode k concentrates E along the line (-omega_k, 0) + t nu_theta.
    const auto basis = orthogonal_basis(cap.direction);
    std::vector<Tube>& tubes = local_tubes[th];
    tubes = make_tubes(cap, th, R_, config_.delta);
    std::map<std::pair<long, long>, std::uint32_t> index;
    for (std::size_t i = 0; i < tubes.size(); ++i) {
      index[{tubes[i].lattice[0], tubes[i].lattice[1]}] = static_cast<std::uint32_t>(i);
    }
    std::vector<std::uint32_t>& owner = mode_tube[th];
    owner.resize(modes_per_cap);
    constexpr std::size_t npos = static_cast<std::size_t>(-1);
    std::size_t exterior = npos;
    for (std::size_t ky = 0; ky < L; ++ky) {
      for (std::size_t kx = 0; kx < L; ++kx) {
        const Vec3 p{-omega[kx], -omega[ky], 0.0};
        const long u = std::lround(dot(p, basis[0]) / spacing);
        const long v = std::lround(dot(p, basis[1]) / spacing);
        auto it = index.find({u, v});
        if (it == index.end()) {
          if (exterior == npos) {
            Tube t = lattice_tube(cap, th, R_, config_.delta, basis, 0, 0);
            t.lattice = {std::numeric_limits<long>::min(), std::numeric_limits<long>::min()};
            t.meets_ball = false;
            exterior = tubes.size();
            tubes.push_back(t);
          }
          owner[ky * L + kx] = static_cast<std::uint32_t>(exterior);
          continue;
        }
        owner[ky * L + kx] = it->second;
      }
    }
  });

  theta_tube_offsets_.assign(caps_.size() + 1, 0);
  std::size_t total = 0;
  for (std::size_t th = 0; th < caps_.size(); ++th) {
    theta_tube_offsets_[th] = total;
    total += local_tubes[th].size();
  }
  theta_tube_offsets_[caps_.size()] = total;
  tubes_.clear();
  tubes_.reserve(total);
  theta_tubes_.resize(total);
  tube_offsets_.assign(total + 1, 0);
  for (std::size_t th = 0; th < caps_.size(); ++th) {
    const std::size_t base = theta_tube_offsets_[th];
    for (std::size_t i = 0; i < local_tubes[th].size(); ++i) {
      tubes_.push_back(local_tubes[th][i]);
      theta_tubes_[base + i] = base + i;
    }
    for (std::uint32_t t : mode_tube[th]) ++tube_offsets_[base + t + 1];
    local_tubes[th] = {};
  }
  for (std::size_t i = 0; i < total; ++i) tube_offsets_[i + 1] += tube_offsets_[i];
  tube_modes_.resize(tube_offsets_[total]);
  std::vector<std::size_t> fill(tube_offsets_.begin(), tube_offsets_.end() - 1);
  for (std::size_t th = 0; th < caps_.size(); ++th) {
    const std::size_t base = theta_tube_offsets_[th];
    for (std::size_t k = 0; k < mode_tube[th].size(); ++k) {
      tube_modes_[fill[base + mode_tube[th][k]]++] = static_cast<std::uint32_t>(k);
    }
  }
}

namespace {

constexpr std::size_t direct_mode_limit = 32;

}  // namespace

std::vector<cplx> PacketDecomposition::local_values(std::size_t tube) const {
  const Tube& t = tubes_.at(tube);
  const std::size_t L = local_size();
  const auto c = coefficients(t.theta);
  const auto ms = modes(tube);
  std::vector<cplx> out(L * L);
  const double two_pi_over_L = 2.0 * std::numbers::pi / static_cast<double>(L);
  if (ms.size() <= direct_mode_limit) {
    std::vector<cplx> ex(L);
    std::vector<cplx> ey(L);
    for (std::uint32_t m : ms) {
      const double kx = static_cast<double>(signed_index(m % L, L));
      const double ky = static_cast<double>(signed_index(m / L, L));
      for (std::size_t l = 0; l < L; ++l) {
        const double ph = (static_cast<double>(l) + 0.5) * two_pi_over_L;
        ex[l] = std::polar(1.0, kx * ph);
        ey[l] = c[m] * std::polar(1.0, ky * ph);
      }
      for (std::size_t ly = 0; ly < L; ++ly) {
        for (std::size_t lx = 0; lx < L; ++lx) out[ly * L + lx] += ey[ly] * ex[lx];
      }
    }
  } else {
    const FftPlan plan(L, FFTW_BACKWARD);
    FftwBuffer buf(L * L);
    std::fill(buf.data, buf.data + L * L, cplx{});
    for (std::uint32_t m : ms) {
      const double kx = static_cast<double>(signed_index(m % L, L));
      const double ky = static_cast<double>(signed_index(m / L, L));
      buf.data[m] = c[m] * std::polar(1.0, 0.5 * two_pi_over_L * (kx + ky));
    }
    plan.run(buf.data);
    std::copy(buf.data, buf.data + L * L, out.begin());
  }
  for (std::size_t i = 0; i < L * L; ++i) out[i] *= rho_[i];
  return out;
}

SampledFunction PacketDecomposition::materialize(std::size_t tube) const {
  const std::size_t L = local_size();
  SampledFunction out(local_domain(tubes_.at(tube).theta), L, L);
  out.values() = local_values(tube);
  return out;
}

SampledFunction PacketDecomposition::reconstruct() const {
  const std::size_t L = local_size();
  const std::size_t N = f_.nx();
  SampledFunction out(f_.domain(), N, N);
  const FftPlan plan(L, FFTW_BACKWARD);
  FftwBuffer buf(L * L);
  std::vector<cplx> shift(L);
  for (std::size_t k = 0; k < L; ++k) {
    const double ks = static_cast<double>(signed_index(k, L));
    shift[k] = std::polar(1.0, std::numbers::pi * ks / static_cast<double>(L));
  }
  for (std::size_t th = 0; th < caps_.size(); ++th) {
    const auto c = coefficients(th);
    for (std::size_t ky = 0; ky < L; ++ky) {
      for (std::size_t kx = 0; kx < L; ++kx) {
        buf.data[ky * L + kx] = c[ky * L + kx] * shift[kx] * shift[ky];
      }
    }
    plan.run(buf.data);
    const ThetaCap& cap = caps_[th];
    for (std::size_t ly = 0; ly < L; ++ly) {
      const long gy = static_cast<long>(cap.iy * n_ + ly) - static_cast<long>(n_);
      if (gy < 0 || gy >= static_cast<long>(N)) continue;
      for (std::size_t lx = 0; lx < L; ++lx) {
        const long gx = static_cast<long>(cap.ix * n_ + lx) - static_cast<long>(n_);
        if (gx < 0 || gx >= static_cast<long>(N)) continue;
        out.at(static_cast<std::size_t>(gx), static_cast<std::size_t>(gy)) +=
            buf.data[ly * L + lx] * rho_[ly * L + lx];
      }
    }
  }
  return out;
}

cplx PacketDecomposition::inner(std::size_t t1, std::size_t t2) const {
  const Tube& a = tubes_.at(t1);
  const Tube& b = tubes_.at(t2);
  if (a.theta != b.theta) {
    throw std::invalid_argument("inner products are only tabulated within one cap");
  }
  const std::size_t L = local_size();
  if (modes(t1).size() > direct_mode_limit || modes(t2).size() > direct_mode_limit) {
    const std::vector<cplx> v1 = local_values(t1);
    const std::vector<cplx> v2 = t1 == t2 ? v1 : local_values(t2);
    cplx acc{};
    for (std::size_t i = 0; i < v1.size(); ++i) acc += v1[i] * std::conj(v2[i]);
    return acc * f_.dx() * f_.dy();
  }
  const auto c = coefficients(a.theta);
  cplx acc{};
  for (std::uint32_t k : modes(t1)) {
    const std::ptrdiff_t kx = signed_index(k % L, L);
    const std::ptrdiff_t ky = signed_index(k / L, L);
    for (std::uint32_t m : modes(t2)) {
      const std::ptrdiff_t mx = signed_index(m % L, L);
      const std::ptrdiff_t my = signed_index(m / L, L);
      const auto off = static_cast<std::ptrdiff_t>(L) - 1;
      acc += c[k] * std::conj(c[m]) * gram_[static_cast<std::size_t>(kx - mx + off)] *
             gram_[static_cast<std::size_t>(ky - my + off)];
    }
  }
  return acc;
}

double PacketDecomposition::local_energy(std::size_t theta) const {
  const ThetaCap& cap = caps_.at(theta);
  const std::size_t N = f_.nx();
  const std::size_t L = local_size();
  double acc = 0.0;
  for (std::size_t ly = 0; ly < L; ++ly) {
    const long gy = static_cast<long>(cap.iy * n_ + ly) - static_cast<long>(n_);
    if (gy < 0 || gy >= static_cast<long>(N)) continue;
    for (std::size_t lx = 0; lx < L; ++lx) {
      const long gx = static_cast<long>(cap.ix * n_ + lx) - static_cast<long>(n_);
      if (gx < 0 || gx >= static_cast<long>(N)) continue;
      acc += std::norm(f_.at(static_cast<std::size_t>(gx), static_cast<std::size_t>(gy)));
    }
  }
  return acc * f_.dx() * f_.dy();
}

namespace {

// Parameter interval where base + t d lies in [-R, R]^3; empty when lo > hi.
std::pair<double, double> cube_interval(const Vec3& base, const Vec3& d, double R) {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    if (std::abs(d[k]) < 1e-300) {
      if (std::abs(base[k]) > R) return {1.0, 0.0};
      continue;
    }
    double a = (-R - base[k]) / d[k];
    double b = (R - base[k]) / d[k];
    if (a > b) std::swap(a, b);
    lo = std::max(lo, a);
    hi = std::min(hi, b);
  }
  return {lo, hi};
}

bool in_cube(const Vec3& xi, double R) {
  return std::abs(xi[0]) <= R && std::abs(xi[1]) <= R && std::abs(xi[2]) <= R;
}

}  // namespace

std::string PacketAudit::csv() const {
  std::ostringstream out;
  out.precision(6);
  out << "property,threshold,measured,pass\n";
  out << "containment,0," << containment_failures << ',' << containment_ok << '\n';
  out << "off_tube," << off_tube_threshold << ',' << off_tube_ratio << ',' << off_tube_ok << '\n';
  out << "reconstruction,1e-3," << reconstruction_error << ',' << reconstruction_ok << '\n';
  out << "orthogonality,1e-6," << orthogonality << ',' << orthogonality_ok << '\n';
  out << "constant,8," << constant << ',' << constant_ok << '\n';
  return out.str();
}

PacketAudit verify_packets(const PacketDecomposition& dec, const PacketAuditConfig& config) {
  PacketAudit out;
  const double R = dec.R();
  out.R = R;
  out.tube_count = dec.tubes().size();
  out.off_tube_threshold =
      config.off_tube_threshold > 0.0 ? config.off_tube_threshold : std::pow(R, -5.0);
  const Surface surface(dec.gamma());
  const std::size_t ncaps = dec.caps().size();

  for (std::size_t th = 0; th < ncaps; ++th) {
    const Box local = dec.local_domain(th);
    if (!dec.caps()[th].triple().contains_box(local, 1e-12)) {
      out.containment_failures += dec.tubes_of(th).size();
    }
  }
  out.containment_ok = out.containment_failures == 0;

  const SampledFunction recon = dec.reconstruct();
  double err = 0.0;
  double ref = 0.0;
  for (std::size_t i = 0; i < recon.values().size(); ++i) {
    err += std::norm(recon.values()[i] - dec.source().values()[i]);
    ref += std::norm(dec.source().values()[i]);
  }
  out.reconstruction_error = ref > 0.0 ? std::sqrt(err / ref) : std::sqrt(err);
  out.reconstruction_ok = out.reconstruction_error <= config.reconstruction_threshold;

  std::vector<double> ratio(ncaps, 0.0);
  parallel_for(ncaps, [&](std::size_t th, unsigned) {
    const double local = dec.local_energy(th);
    if (local <= 0.0) return;
    double sum = 0.0;
    for (std::size_t t : dec.tubes_of(th)) sum += dec.energy(t);
    ratio[th] = sum / local;
  });
  out.constant = *std::max_element(ratio.begin(), ratio.end());
  out.constant_ok = out.constant <= config.constant_threshold;

  const double fnorm = dec.source().l2_norm();
  // Audit the caps carrying the most energy.
  std::vector<std::pair<double, std::size_t>> by_energy;
  for (std::size_t th = 0; th < ncaps; ++th) by_energy.push_back({dec.local_energy(th), th});
  std::sort(by_energy.begin(), by_energy.end(), [](const auto& x, const auto& y) {
    return x.first != y.first ? x.first > y.first : x.second < y.second;
  });
  const std::size_t audited = std::min(config.audit_thetas, ncaps);
  for (std::size_t a = 0; a < audited; ++a) {
    const std::size_t th = by_energy[a].second;
    const double local = by_energy[a].first;
    std::vector<std::pair<double, std::size_t>> ranked;
    for (std::size_t t : dec.tubes_of(th)) {
      if (dec.tubes()[t].meets_ball) ranked.push_back({dec.energy(t), t});
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) {
      return x.first != y.first ? x.first > y.first : x.second < y.second;
    });

    const std::size_t north = std::min(config.orthogonality_tubes, ranked.size());
    for (std::size_t i = 0; i < north && local > 0.0; ++i) {
      for (std::size_t j = i + 1; j < north; ++j) {
        const Tube& t1 = dec.tubes()[ranked[i].second];
        const Tube& t2 = dec.tubes()[ranked[j].second];
        const double du = static_cast<double>(t1.lattice[0] - t2.lattice[0]);
        const double dv = static_cast<double>(t1.lattice[1] - t2.lattice[1]);
        if (std::hypot(du, dv) * std::sqrt(R) <= 2.0 * t1.radius) continue;
        const double v = std::abs(dec.inner(ranked[i].second, ranked[j].second)) / local;
        out.orthogonality = std::max(out.orthogonality, v);
        ++out.orthogonality_pairs;
      }
    }

    const std::size_t nprobe = std::min(config.tubes_per_theta, ranked.size());
    for (std::size_t i = 0; i < nprobe; ++i) {
      const Tube& tube = dec.tubes()[ranked[i].second];
      const SampledFunction piece = dec.materialize(ranked[i].second);
      const auto basis = orthogonal_basis(tube.direction);
      auto [lo, hi] = cube_interval(tube.base, tube.direction, R);
      if (lo > hi) lo = hi = 0.0;
      std::vector<Vec3> probes;
      for (std::size_t h = 0; h < config.heights; ++h) {
        const double t = config.heights > 1
                             ? lo + (hi - lo) * static_cast<double>(h) /
                                        static_cast<double>(config.heights - 1)
                             : 0.5 * (lo + hi);
        const Vec3 axis = add(tube.base, scale(t, tube.direction));
        for (double factor : config.distance_factors) {
          for (std::size_t k = 0; k < config.angles; ++k) {
            const double ang =
                2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(config.angles);
            const Vec3 off = add(scale(std::cos(ang), basis[0]), scale(std::sin(ang), basis[1]));
            const Vec3 xi = add(axis, scale(factor * tube.radius, off));
            if (in_cube(xi, R)) probes.push_back(xi);
          }
        }
      }
      std::vector<double> mags(probes.size());
      parallel_for(probes.size(), [&](std::size_t k, unsigned) {
        mags[k] = std::abs(extension_at(piece, surface, probes[k]));
      });
      out.off_tube_probes += probes.size();
      for (double m : mags) out.off_tube_ratio = std::max(out.off_tube_ratio, m / fnorm);
    }
  }
  out.off_tube_ok = out.off_tube_ratio <= out.off_tube_threshold;
  out.orthogonality_ok = out.orthogonality <= config.orthogonality_threshold;
  return out;
}

std::vector<double> bilinear_sup(const Surface& s, std::span<const Cap> caps,
                                 std::span<const std::vector<double>> magnitudes, double mu,
                                 double K) {
  if (caps.size() != magnitudes.size()) {
    throw std::invalid_argument("one magnitude field per cap is required");
  }
  if (caps.empty()) return {};
  const std::size_t n = magnitudes[0].size();
  for (const auto& m : magnitudes) {
    if (m.size() != n) throw std::invalid_argument("magnitude fields differ in size");
  }
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < caps.size(); ++i) {
    for (std::size_t j = i + 1; j < caps.size(); ++j) {
      if (!strongly_separated(s, caps[i], caps[j], mu, K)) continue;
      for (std::size_t p = 0; p < n; ++p) {
        out[p] = std::max(out[p], std::sqrt(magnitudes[i][p] * magnitudes[j][p]));
      }
    }
  }
  return out;
}

namespace {

struct CurveTrace {
  std::vector<Point2> points;
  std::vector<double> arc;       // arc length from the start
  std::vector<double> integrand;
};

}  // namespace

CurveProbeReport intersection_curve_probe(const Surface& s, Point2 z1, Point2 z2p,
                                          const Cap& cap1, const Cap& cap2,
                                          const CurveProbeConfig& config) {
  if (config.K <= 0.0 || config.mu <= 0.0 || config.angle_budget <= 0.0) {
    throw std::invalid_argument("curve probe needs positive K, mu and angle budget");
  }
  if (!cap1.box().contains_closed(z1) || !cap2.box().contains_closed(z2p)) {
    throw std::invalid_argument("z1 must lie in the first cap and z2' in the second");
  }
  if (!strongly_separated(s, cap1, cap2, config.mu, config.K)) {
    throw std::invalid_argument("caps are not strongly separated");
  }
  const double step = config.step > 0.0 ? config.step : 1e-3 / config.K;
  const double phi1 = s.phi(z1);
  const double phi2 = s.phi(z2p);
  const auto psi = [&](Point2 z) {
    return s.phi({z.x - z1.x, z.y - z1.y}) + phi1 - s.phi({z.x - z2p.x, z.y - z2p.y}) - phi2;
  };
  const auto grad_psi = [&](Point2 z) {
    const Vec2 a = s.gradient({z.x - z1.x, z.y - z1.y});
    const Vec2 b = s.gradient({z.x - z2p.x, z.y - z2p.y});
    return Vec2{a[0] - b[0], a[1] - b[1]};
  };
  const auto inside = [&](Point2 z) {
    return cap1.box().contains_closed({z.x - z2p.x, z.y - z2p.y}) &&
           cap2.box().contains_closed({z.x - z1.x, z.y - z1.y});
  };
  const Vec3 n1 = s.normal(z1);
  const Vec3 n2 = s.normal(z2p);
  const auto integrand = [&](Point2 z, const Vec2& dz) {
    const Mat2 H = s.hessian({z.x - z1.x, z.y - z1.y});
    const Vec3 dn{H[0][0] * dz[0] + H[0][1] * dz[1], H[1][0] * dz[0] + H[1][1] * dz[1], 0.0};
    return det3(n1, n2, dn);
  };
  const auto tangent = [&](Point2 z, const Vec2& prev) {
    const Vec2 g = grad_psi(z);
    const double len = std::hypot(g[0], g[1]);
    Vec2 t{-g[1] / len, g[0] / len};
    if (t[0] * prev[0] + t[1] * prev[1] < 0.0) t = {-t[0], -t[1]};
    return t;
  };

  const Point2 start{z1.x + z2p.x, z1.y + z2p.y};
  const Vec2 g0 = grad_psi(start);
  const double g0n = std::hypot(g0[0], g0[1]);
  if (g0n == 0.0) throw std::invalid_argument("degenerate intersection curve");
  const Vec2 t0{-g0[1] / g0n, g0[0] / g0n};

  CurveProbeReport rep;
  // orientation is -1 on the backward branch so both branches use the forward curve direction.
  const auto trace = [&](Vec2 dir, double orientation) {
    CurveTrace tr;
    Point2 z = start;
    double arc = 0.0;
    const auto oriented = [&](Point2 at, const Vec2& d) {
      const Vec2 t = tangent(at, d);
      return integrand(at, {orientation * t[0], orientation * t[1]});
    };
    tr.points.push_back(z);
    tr.arc.push_back(0.0);
    tr.integrand.push_back(oriented(z, dir));
    for (std::size_t k = 0; k < config.max_steps; ++k) {
      dir = tangent(z, dir);
      Point2 next{z.x + step * dir[0], z.y + step * dir[1]};
      const Vec2 g = grad_psi(next);
      const double g2 = g[0] * g[0] + g[1] * g[1];
      const double r = psi(next);
      next = {next.x - r * g[0] / g2, next.y - r * g[1] / g2};
      if (!inside(next)) break;
      arc += std::hypot(next.x - z.x, next.y - z.y);
      z = next;
      tr.points.push_back(z);
      tr.arc.push_back(arc);
      tr.integrand.push_back(oriented(z, dir));
    }
    return tr;
  };
  const CurveTrace fwd = trace(t0, 1.0);
  const CurveTrace bwd = trace({-t0[0], -t0[1]}, -1.0);
  rep.arc_forward = fwd.arc.back();
  rep.arc_backward = bwd.arc.back();

  double min_abs = std::numeric_limits<double>::infinity();
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const CurveTrace* tr : {&fwd, &bwd}) {
    for (std::size_t i = 0; i < tr->points.size(); ++i) {
      const double v = tr->integrand[i];
      min_abs = std::min(min_abs, std::abs(v));
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      rep.max_residual = std::max(rep.max_residual, std::abs(psi(tr->points[i])));
      const Vec2 g = grad_psi(tr->points[i]);
      rep.max_gradient_gap = std::max(rep.max_gradient_gap, std::hypot(g[0], g[1]));
    }
  }
  rep.min_abs_integrand = min_abs;
  rep.bound = config.angle_budget * rep.max_gradient_gap * config.K * config.K / (4.0 * config.mu);
  rep.constant_sign = lo > 0.0 || hi < 0.0;

  // Trapezoid integral of |integrand| along each branch; t_budget is where it meets the budget.
  double reach = 0.0;
  bool reached = false;
  for (const CurveTrace* tr : {&fwd, &bwd}) {
    double acc = 0.0;
    double at = tr->arc.back();
    for (std::size_t i = 1; i < tr->points.size(); ++i) {
      const double ds = tr->arc[i] - tr->arc[i - 1];
      const double inc = 0.5 * (tr->integrand[i] + tr->integrand[i - 1]) * ds;
      if (std::abs(acc + inc) > config.angle_budget) {
        const double frac = (config.angle_budget - std::abs(acc)) / std::abs(inc);
        at = tr->arc[i - 1] + std::clamp(frac, 0.0, 1.0) * ds;
        reached = true;
        break;
      }
      acc += inc;
    }
    reach = std::max(reach, at);
  }
  rep.t_budget = reach;
  rep.budget_reached = reached;
  rep.bound_holds = rep.t_budget <= rep.bound;

  rep.points.assign(bwd.points.rbegin(), bwd.points.rend());
  rep.points.insert(rep.points.end(), fwd.points.begin() + 1, fwd.points.end());
  rep.samples = rep.points.size();
  return rep;
}

}  // namespace srl
