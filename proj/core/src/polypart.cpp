#include "srl/polypart.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include "srl/parallel.hpp"

namespace srl {

std::vector<Monomial> monomials(int d) {
  std::vector<Monomial> out;
  for (int total = 0; total <= d; ++total) {
    for (int a = total; a >= 0; --a) {
      for (int b = total - a; b >= 0; --b) out.push_back({a, b, total - a - b});
    }
  }
  return out;
}

int bisector_degree(std::size_t n) {
  int d = 0;
  while (static_cast<std::size_t>((d + 1) * (d + 2) * (d + 3) / 6) < n) ++d;
  return d;
}

Polynomial3::Polynomial3(int degree, std::vector<double> coeffs, double scale)
    : degree_(degree), scale_(scale), terms_(monomials(degree)), coeffs_(std::move(coeffs)) {
  if (coeffs_.size() != terms_.size()) {
    throw std::invalid_argument("coefficient count does not match the monomial basis");
  }
  if (!(scale > 0.0)) throw std::invalid_argument("polynomial scale must be positive");
}

namespace {

struct Powers {
  std::array<std::array<double, 24>, 3> p{};
};

Powers powers(const Vec3& u, int d) {
  Powers pw;
  for (int k = 0; k < 3; ++k) {
    pw.p[k][0] = 1.0;
    for (int e = 1; e <= d; ++e) pw.p[k][e] = pw.p[k][e - 1] * u[k];
  }
  return pw;
}

}  // namespace

double Polynomial3::operator()(const Vec3& xi) const {
  const Vec3 u{xi[0] / scale_, xi[1] / scale_, xi[2] / scale_};
  const Powers pw = powers(u, degree_);
  double acc = 0.0;
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    const auto& m = terms_[i];
    acc += coeffs_[i] * pw.p[0][m[0]] * pw.p[1][m[1]] * pw.p[2][m[2]];
  }
  return acc;
}

Vec3 Polynomial3::gradient(const Vec3& xi) const {
  const Vec3 u{xi[0] / scale_, xi[1] / scale_, xi[2] / scale_};
  const Powers pw = powers(u, degree_);
  Vec3 g{};
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    const auto& m = terms_[i];
    const double c = coeffs_[i];
    if (m[0] > 0) g[0] += c * m[0] * pw.p[0][m[0] - 1] * pw.p[1][m[1]] * pw.p[2][m[2]];
    if (m[1] > 0) g[1] += c * m[1] * pw.p[0][m[0]] * pw.p[1][m[1] - 1] * pw.p[2][m[2]];
    if (m[2] > 0) g[2] += c * m[2] * pw.p[0][m[0]] * pw.p[1][m[1]] * pw.p[2][m[2] - 1];
  }
  return {g[0] / scale_, g[1] / scale_, g[2] / scale_};
}

double Polynomial3::coefficient_norm() const {
  double s = 0.0;
  for (double c : coeffs_) s += c * c;
  return std::sqrt(s);
}

int Poly3::degree() const {
  int d = 0;
  for (const auto& f : factors) d += f.degree();
  return d;
}

double Poly3::operator()(const Vec3& xi) const {
  double v = 1.0;
  for (const auto& f : factors) v *= f(xi);
  return v;
}

std::uint32_t Poly3::sign_pattern(const Vec3& xi) const {
  std::uint32_t bits = 0;
  for (std::size_t k = 0; k < factors.size(); ++k) {
    if (factors[k](xi) >= 0.0) bits |= 1u << k;
  }
  return bits;
}

void write_factors(std::ostream& out, const Poly3& p) {
  const double scale = p.factors.empty() ? 1.0 : p.factors.front().scale();
  out.precision(17);
  out << "# scale " << scale << '\n';
  out << "factor,a,b,c,coefficient\n";
  for (std::size_t k = 0; k < p.factors.size(); ++k) {
    const auto& f = p.factors[k];
    for (std::size_t i = 0; i < f.terms().size(); ++i) {
      const auto& m = f.terms()[i];
      out << k << ',' << m[0] << ',' << m[1] << ',' << m[2] << ',' << f.coefficients()[i] << '\n';
    }
  }
}

Poly3 read_factors(std::istream& in) {
  std::string line;
  double scale = 1.0;
  std::map<std::size_t, std::map<Monomial, double>> rows;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line.rfind("# scale ", 0) == 0) {
      scale = std::stod(line.substr(8));
      continue;
    }
    if (line[0] == '#' || line.rfind("factor,", 0) == 0) continue;
    std::istringstream row(line);
    std::size_t k = 0;
    Monomial m{};
    double c = 0.0;
    char sep = 0;
    if (!(row >> k >> sep >> m[0] >> sep >> m[1] >> sep >> m[2] >> sep >> c)) {
      throw std::runtime_error("bad factor row at line " + std::to_string(lineno));
    }
    rows[k][m] = c;
  }
  Poly3 p;
  for (const auto& [k, terms] : rows) {
    int d = 0;
    for (const auto& [m, c] : terms) d = std::max(d, m[0] + m[1] + m[2]);
    const auto basis = monomials(d);
    std::vector<double> coeffs(basis.size(), 0.0);
    for (std::size_t i = 0; i < basis.size(); ++i) {
      const auto it = terms.find(basis[i]);
      if (it != terms.end()) coeffs[i] = it->second;
    }
    p.factors.emplace_back(d, std::move(coeffs), scale);
  }
  return p;
}

double variety_distance(const Polynomial3& f, const Vec3& xi, double reach) {
  const double v = f(xi);
  if (v == 0.0) return 0.0;
  const Vec3 g = f.gradient(xi);
  const double gn = norm(g);
  const double d0 = gn > 0.0 ? std::abs(v) / gn : std::numeric_limits<double>::infinity();
  if (!(d0 <= 2.0 * reach)) return d0;
  const double sgn = v > 0.0 ? 1.0 : -1.0;
  const Vec3 dir{-sgn * g[0] / gn, -sgn * g[1] / gn, -sgn * g[2] / gn};
  const auto at = [&](double s) {
    return f({xi[0] + s * dir[0], xi[1] + s * dir[1], xi[2] + s * dir[2]});
  };
  constexpr int samples = 16;
  double prev = 0.0;
  for (int k = 1; k <= samples; ++k) {
    const double s = reach * k / samples;
    if (at(s) * sgn <= 0.0) {
      double lo = prev;
      double hi = s;
      for (int it = 0; it < 48; ++it) {
        const double mid = 0.5 * (lo + hi);
        (at(mid) * sgn > 0.0 ? lo : hi) = mid;
      }
      return hi;
    }
    prev = s;
  }
  return std::numeric_limits<double>::infinity();
}

namespace {

// Zero points of f on grid edges whose endpoint values change sign, refined by bisection.
// Each grid point adjacent to such an edge is seeded with the nearer crossing.
void seed_crossings(const Polynomial3& f, const GridSpec& grid, std::vector<Vec3>& seeds,
                    std::vector<std::int32_t>& nearest) {
  const std::size_t M = grid.M;
  std::vector<double> v(grid.size());
  parallel_for(M, [&](std::size_t i3, unsigned) {
    for (std::size_t i2 = 0; i2 < M; ++i2) {
      for (std::size_t i1 = 0; i1 < M; ++i1) v[grid.index(i1, i2, i3)] = f(grid.point(i1, i2, i3));
    }
  });
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> edges(M);
  parallel_for(M, [&](std::size_t i3, unsigned) {
    for (std::size_t i2 = 0; i2 < M; ++i2) {
      for (std::size_t i1 = 0; i1 < M; ++i1) {
        const std::size_t a = grid.index(i1, i2, i3);
        const std::array<std::pair<bool, std::size_t>, 3> nb{
            std::pair{i1 + 1 < M, a + 1}, std::pair{i2 + 1 < M, a + M},
            std::pair{i3 + 1 < M, a + M * M}};
        for (const auto& [ok, b] : nb) {
          if (ok && (v[a] >= 0.0) != (v[b] >= 0.0)) edges[i3].emplace_back(a, b);
        }
      }
    }
  });
  std::vector<std::vector<Vec3>> found(M);
  parallel_for(M, [&](std::size_t i3, unsigned) {
    for (const auto& [a, b] : edges[i3]) {
      const Vec3 pa = grid.point(a % M, (a / M) % M, a / (M * M));
      const Vec3 pb = grid.point(b % M, (b / M) % M, b / (M * M));
      const bool sa = v[a] >= 0.0;
      double lo = 0.0, hi = 1.0;
      for (int it = 0; it < 30; ++it) {
        const double mid = 0.5 * (lo + hi);
        const Vec3 pm{pa[0] + mid * (pb[0] - pa[0]), pa[1] + mid * (pb[1] - pa[1]),
                      pa[2] + mid * (pb[2] - pa[2])};
        ((f(pm) >= 0.0) == sa ? lo : hi) = mid;
      }
      const double t = 0.5 * (lo + hi);
      found[i3].push_back({pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1]),
                           pa[2] + t * (pb[2] - pa[2])});
    }
  });
  for (std::size_t i3 = 0; i3 < M; ++i3) {
    for (std::size_t k = 0; k < edges[i3].size(); ++k) {
      const auto id = static_cast<std::int32_t>(seeds.size());
      seeds.push_back(found[i3][k]);
      for (std::size_t g : {edges[i3][k].first, edges[i3][k].second}) {
        const Vec3 p = grid.point(g % M, (g / M) % M, g / (M * M));
        const auto dist2 = [&](std::int32_t s) {
          const Vec3& q = seeds[static_cast<std::size_t>(s)];
          return (p[0] - q[0]) * (p[0] - q[0]) + (p[1] - q[1]) * (p[1] - q[1]) +
                 (p[2] - q[2]) * (p[2] - q[2]);
        };
        if (nearest[g] < 0 || dist2(id) < dist2(nearest[g])) nearest[g] = id;
      }
    }
  }
}

// Jump flooding: every grid point ends up with (nearly always) its nearest seed.
std::vector<double> seed_distance(const GridSpec& grid, const std::vector<Vec3>& seeds,
                                  std::vector<std::int32_t> nearest) {
  const std::size_t M = grid.M;
  const auto L = static_cast<long>(M);
  std::vector<std::size_t> steps;
  for (std::size_t s = std::bit_floor(M); s >= 1; s /= 2) steps.push_back(s);
  steps.push_back(1);
  steps.push_back(1);
  std::vector<std::int32_t> next(nearest.size());
  for (std::size_t step : steps) {
    const auto k = static_cast<long>(step);
    parallel_for(M, [&](std::size_t i3, unsigned) {
      for (std::size_t i2 = 0; i2 < M; ++i2) {
        for (std::size_t i1 = 0; i1 < M; ++i1) {
          const std::size_t g = grid.index(i1, i2, i3);
          const Vec3 p = grid.point(i1, i2, i3);
          std::int32_t best = nearest[g];
          double best_d = std::numeric_limits<double>::infinity();
          const auto consider = [&](std::int32_t s) {
            if (s < 0) return;
            const Vec3& q = seeds[static_cast<std::size_t>(s)];
            const double d = (p[0] - q[0]) * (p[0] - q[0]) + (p[1] - q[1]) * (p[1] - q[1]) +
                             (p[2] - q[2]) * (p[2] - q[2]);
            if (d < best_d) {
              best_d = d;
              best = s;
            }
          };
          consider(best);
          for (long d3 = -k; d3 <= k; d3 += k) {
            const long j3 = static_cast<long>(i3) + d3;
            if (j3 < 0 || j3 >= L) continue;
            for (long d2 = -k; d2 <= k; d2 += k) {
              const long j2 = static_cast<long>(i2) + d2;
              if (j2 < 0 || j2 >= L) continue;
              for (long d1 = -k; d1 <= k; d1 += k) {
                const long j1 = static_cast<long>(i1) + d1;
                if (j1 < 0 || j1 >= L) continue;
                consider(nearest[grid.index(static_cast<std::size_t>(j1), static_cast<std::size_t>(j2),
                                            static_cast<std::size_t>(j3))]);
              }
            }
          }
          next[g] = best;
        }
      }
    });
    nearest.swap(next);
  }
  std::vector<double> dist(grid.size(), std::numeric_limits<double>::infinity());
  for (std::size_t i3 = 0; i3 < M; ++i3) {
    for (std::size_t i2 = 0; i2 < M; ++i2) {
      for (std::size_t i1 = 0; i1 < M; ++i1) {
        const std::size_t g = grid.index(i1, i2, i3);
        if (nearest[g] >= 0) {
          const Vec3 p = grid.point(i1, i2, i3);
          const Vec3& q = seeds[static_cast<std::size_t>(nearest[g])];
          dist[g] = norm({p[0] - q[0], p[1] - q[1], p[2] - q[2]});
        }
      }
    }
  }
  return dist;
}

}  // namespace

std::vector<std::uint8_t> wall(const Poly3& p, const GridSpec& grid, double delta) {
  const double width = std::pow(grid.R, 0.5 + delta);
  const std::size_t M = grid.M;
  std::vector<Vec3> seeds;
  std::vector<std::int32_t> nearest(grid.size(), -1);
  for (const auto& f : p.factors) seed_crossings(f, grid, seeds, nearest);
  const std::vector<double> dist = seed_distance(grid, seeds, std::move(nearest));
  std::vector<std::uint8_t> mask(grid.size(), 0);
  parallel_for(M, [&](std::size_t i3, unsigned) {
    for (std::size_t i2 = 0; i2 < M; ++i2) {
      for (std::size_t i1 = 0; i1 < M; ++i1) {
        const std::size_t g = grid.index(i1, i2, i3);
        if (dist[g] <= width) {
          mask[g] = 1;
          continue;
        }
        // Zero sets that cause no sign change between neighbouring grid points.
        const Vec3 xi = grid.point(i1, i2, i3);
        for (const auto& f : p.factors) {
          if (variety_distance(f, xi, 2.0 * width) <= width) {
            mask[g] = 1;
            break;
          }
        }
      }
    }
  });
  return mask;
}

CellDecomposition cells(const Poly3& p, const GridSpec& grid, std::vector<std::uint8_t> wall_mask) {
  if (wall_mask.size() != grid.size()) throw std::invalid_argument("wall mask size mismatch");
  CellDecomposition dec;
  dec.grid = grid;
  dec.wall = std::move(wall_mask);
  const std::size_t M = grid.M;
  dec.pattern.resize(grid.size());
  parallel_for(M, [&](std::size_t i3, unsigned) {
    for (std::size_t i2 = 0; i2 < M; ++i2) {
      for (std::size_t i1 = 0; i1 < M; ++i1) {
        dec.pattern[grid.index(i1, i2, i3)] = p.sign_pattern(grid.point(i1, i2, i3));
      }
    }
  });
  dec.labels.assign(grid.size(), -1);
  std::deque<std::size_t> queue;
  std::int32_t next = 0;
  for (std::size_t start = 0; start < grid.size(); ++start) {
    if (dec.wall[start] || dec.labels[start] >= 0) continue;
    const std::uint32_t pat = dec.pattern[start];
    dec.labels[start] = next;
    queue.push_back(start);
    while (!queue.empty()) {
      const std::size_t q = queue.front();
      queue.pop_front();
      const std::size_t i1 = q % M;
      const std::size_t i2 = (q / M) % M;
      const std::size_t i3 = q / (M * M);
      const auto visit = [&](std::size_t r) {
        if (!dec.wall[r] && dec.labels[r] < 0 && dec.pattern[r] == pat) {
          dec.labels[r] = next;
          queue.push_back(r);
        }
      };
      if (i1 > 0) visit(q - 1);
      if (i1 + 1 < M) visit(q + 1);
      if (i2 > 0) visit(q - M);
      if (i2 + 1 < M) visit(q + M);
      if (i3 > 0) visit(q - M * M);
      if (i3 + 1 < M) visit(q + M * M);
    }
    dec.cell_pattern.push_back(pat);
    ++next;
  }
  dec.cell_count = static_cast<std::size_t>(next);
  return dec;
}

std::vector<double> CellDecomposition::cell_masses(std::span<const double> weights) const {
  if (weights.size() != labels.size()) throw std::invalid_argument("weight grid size mismatch");
  std::vector<double> out(cell_count, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= 0) out[static_cast<std::size_t>(labels[i])] += weights[i];
  }
  return out;
}

namespace {

struct Bisector {
  std::vector<double> coeffs;
  double imbalance = std::numeric_limits<double>::infinity();
};

void normalise(std::vector<double>& c) {
  const double n = std::sqrt(std::inner_product(c.begin(), c.end(), c.begin(), 0.0));
  if (n > 0.0) {
    for (double& v : c) v /= n;
  }
}

// Gaussian elimination with partial pivoting; the solution replaces b.
bool solve(std::vector<double>& A, std::vector<double>& b, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t r = k + 1; r < n; ++r) {
      if (std::abs(A[r * n + k]) > std::abs(A[piv * n + k])) piv = r;
    }
    if (A[piv * n + k] == 0.0) return false;
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(A[k * n + j], A[piv * n + j]);
      std::swap(b[k], b[piv]);
    }
    for (std::size_t r = k + 1; r < n; ++r) {
      const double f = A[r * n + k] / A[k * n + k];
      for (std::size_t j = k; j < n; ++j) A[r * n + j] -= f * A[k * n + j];
      b[r] -= f * b[k];
    }
  }
  for (std::size_t k = n; k-- > 0;) {
    double v = b[k];
    for (std::size_t j = k + 1; j < n; ++j) v -= A[k * n + j] * b[j];
    b[k] = v / A[k * n + k];
  }
  return true;
}

class BisectionSearch {
 public:
  BisectionSearch(const std::vector<Vec3>& u, const std::vector<double>& w,
                  const std::vector<std::uint32_t>& piece, std::size_t pieces, int degree)
      : w_(w), piece_(piece), pieces_(pieces), terms_(monomials(degree)), n_(u.size()) {
    const std::size_t T = terms_.size();
    basis_.resize(n_ * T);
    for (std::size_t p = 0; p < n_; ++p) {
      const Powers pw = powers(u[p], degree);
      for (std::size_t t = 0; t < T; ++t) {
        const auto& m = terms_[t];
        basis_[p * T + t] = pw.p[0][m[0]] * pw.p[1][m[1]] * pw.p[2][m[2]];
      }
    }
    mass_.assign(pieces_, 0.0);
    for (std::size_t p = 0; p < n_; ++p) mass_[piece_[p]] += w_[p];
  }

  std::size_t dimension() const { return terms_.size(); }

  // Max over pieces of |m+ - m-| / m for the sign of sum c_t basis_t.
  double imbalance(const std::vector<double>& c) const {
    std::vector<double> I(pieces_, 0.0);
    const std::size_t T = terms_.size();
    for (std::size_t p = 0; p < n_; ++p) {
      double q = 0.0;
      for (std::size_t t = 0; t < T; ++t) q += c[t] * basis_[p * T + t];
      I[piece_[p]] += q >= 0.0 ? w_[p] : -w_[p];
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < pieces_; ++i) {
      if (mass_[i] > 0.0) worst = std::max(worst, std::abs(I[i]) / mass_[i]);
    }
    return worst;
  }

  // Gauss-Newton on the imbalance with sign replaced by tanh(Q / eps), annealing eps, steps kept
  // orthogonal to c so that |c| stays 1.
  std::vector<double> smooth_solve(std::vector<double> c) const {
    const std::size_t T = terms_.size();
    const std::size_t rows = pieces_ + 1;
    normalise(c);
    std::vector<double> q(n_);
    const auto values = [&](const std::vector<double>& cc) {
      for (std::size_t p = 0; p < n_; ++p) {
        double v = 0.0;
        for (std::size_t t = 0; t < T; ++t) v += cc[t] * basis_[p * T + t];
        q[p] = v;
      }
    };
    const auto residual = [&](double eps, std::vector<double>* jac) {
      std::vector<double> F(pieces_, 0.0);
      if (jac) jac->assign(pieces_ * T, 0.0);
      for (std::size_t p = 0; p < n_; ++p) {
        const std::size_t i = piece_[p];
        if (mass_[i] <= 0.0) continue;
        const double th = std::tanh(q[p] / eps);
        F[i] += w_[p] * th / mass_[i];
        if (jac) {
          const double d = w_[p] * (1.0 - th * th) / (eps * mass_[i]);
          double* row = jac->data() + i * T;
          for (std::size_t t = 0; t < T; ++t) row[t] += d * basis_[p * T + t];
        }
      }
      return F;
    };
    const auto fnorm = [](const std::vector<double>& F) {
      return std::sqrt(std::inner_product(F.begin(), F.end(), F.begin(), 0.0));
    };
    values(c);
    double spread = 0.0;
    double total = 0.0;
    for (std::size_t p = 0; p < n_; ++p) {
      spread += w_[p] * q[p] * q[p];
      total += w_[p];
    }
    spread = std::sqrt(spread / total);
    std::vector<double> jac;
    for (double frac : {0.3, 0.1, 0.03, 0.01}) {
      const double eps = frac * spread;
      for (int it = 0; it < 10; ++it) {
        values(c);
        const std::vector<double> F = residual(eps, &jac);
        const double f0 = fnorm(F);
        // Minimal norm solution of [J; c^T] dc = [-F; 0].
        std::vector<double> A(rows * T);
        std::copy(jac.begin(), jac.end(), A.begin());
        std::copy(c.begin(), c.end(), A.begin() + pieces_ * T);
        std::vector<double> G(rows * rows, 0.0);
        for (std::size_t a = 0; a < rows; ++a) {
          for (std::size_t b = 0; b < rows; ++b) {
            double v = 0.0;
            for (std::size_t t = 0; t < T; ++t) v += A[a * T + t] * A[b * T + t];
            G[a * rows + b] = v;
          }
          G[a * rows + a] += 1e-12;
        }
        std::vector<double> rhs(rows, 0.0);
        for (std::size_t i = 0; i < pieces_; ++i) rhs[i] = -F[i];
        if (!solve(G, rhs, rows)) break;
        std::vector<double> dc(T, 0.0);
        for (std::size_t a = 0; a < rows; ++a) {
          for (std::size_t t = 0; t < T; ++t) dc[t] += A[a * T + t] * rhs[a];
        }
        bool improved = false;
        for (double step = 1.0; step > 1e-3; step *= 0.5) {
          std::vector<double> trial(T);
          for (std::size_t t = 0; t < T; ++t) trial[t] = c[t] + step * dc[t];
          normalise(trial);
          values(trial);
          if (fnorm(residual(eps, nullptr)) < f0) {
            c = std::move(trial);
            improved = true;
            break;
          }
        }
        if (!improved) break;
      }
    }
    return c;
  }

  Bisector descend(std::vector<double> c, std::size_t sweeps, double tolerance) const {
    const std::size_t T = terms_.size();
    std::vector<double> q(n_, 0.0);
    for (std::size_t p = 0; p < n_; ++p) {
      for (std::size_t t = 0; t < T; ++t) q[p] += c[t] * basis_[p * T + t];
    }
    std::vector<double> bp(n_);
    std::vector<std::size_t> order;
    order.reserve(n_);
    std::vector<double> I(pieces_);
    Bisector best{c, imbalance(c)};
    for (std::size_t sweep = 0; sweep < sweeps && best.imbalance > tolerance; ++sweep) {
      for (std::size_t t = 0; t < T; ++t) {
        std::fill(I.begin(), I.end(), 0.0);
        order.clear();
        for (std::size_t p = 0; p < n_; ++p) {
          const double m = basis_[p * T + t];
          const double rest = q[p] - c[t] * m;
          double s;
          if (m != 0.0) {
            bp[p] = -rest / m;
            order.push_back(p);
            s = m > 0.0 ? -1.0 : 1.0;
          } else {
            s = rest >= 0.0 ? 1.0 : -1.0;
          }
          I[piece_[p]] += s * w_[p];
        }
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
          return bp[a] != bp[b] ? bp[a] < bp[b] : a < b;
        });
        double obj = 0.0;
        for (std::size_t i = 0; i < pieces_; ++i) {
          if (mass_[i] > 0.0) obj += std::abs(I[i]) / mass_[i];
        }
        double best_obj = obj;
        double best_c = order.empty() ? c[t] : bp[order.front()] - (1.0 + std::abs(bp[order.front()]));
        for (std::size_t k = 0; k < order.size(); ++k) {
          const std::size_t p = order[k];
          const std::size_t i = piece_[p];
          const double before = std::abs(I[i]);
          I[i] += basis_[p * T + t] > 0.0 ? 2.0 * w_[p] : -2.0 * w_[p];
          obj += (std::abs(I[i]) - before) / mass_[i];
          const bool last = k + 1 == order.size();
          if (!last && bp[order[k + 1]] == bp[p]) continue;
          if (obj < best_obj) {
            best_obj = obj;
            best_c = last ? bp[p] + (1.0 + std::abs(bp[p])) : 0.5 * (bp[p] + bp[order[k + 1]]);
          }
        }
        const double delta = best_c - c[t];
        c[t] = best_c;
        for (std::size_t p = 0; p < n_; ++p) q[p] += delta * basis_[p * T + t];
      }
      const double cn = std::sqrt(std::inner_product(c.begin(), c.end(), c.begin(), 0.0));
      if (cn > 0.0) {
        for (double& v : c) v /= cn;
        for (double& v : q) v /= cn;
      }
      const double imb = imbalance(c);
      if (imb < best.imbalance) best = {c, imb};
    }
    return best;
  }

 private:
  const std::vector<double>& w_;
  const std::vector<std::uint32_t>& piece_;
  std::size_t pieces_;
  std::vector<Monomial> terms_;
  std::size_t n_;
  std::vector<double> basis_;
  std::vector<double> mass_;
};

bool singular_on_grid(const Polynomial3& f, const GridSpec& grid) {
  double scale = 0.0;
  for (double c : f.coefficients()) scale += std::abs(c);
  const double tol = 1e-8 * scale;
  const double R = grid.R;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const std::size_t i1 = i % grid.M;
    const std::size_t i2 = (i / grid.M) % grid.M;
    const std::size_t i3 = i / (grid.M * grid.M);
    const Vec3 xi = grid.point(i1, i2, i3);
    if (std::abs(f(xi)) >= tol) continue;
    const Vec3 g = f.gradient(xi);
    if (norm(g) * R < tol) return true;
  }
  return false;
}

}  // namespace

Partition ham_sandwich_partition(std::span<const double> weights, const GridSpec& grid, int D,
                                 const PartitionConfig& config) {
  if (D < 1) throw std::invalid_argument("partition degree must be positive");
  if (weights.size() != grid.size()) throw std::invalid_argument("weight grid size mismatch");
  std::vector<Vec3> u;
  std::vector<double> w;
  std::vector<std::size_t> where;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (weights[i] < 0.0) throw std::invalid_argument("weights must be non-negative");
    if (weights[i] == 0.0) continue;
    const std::size_t i1 = i % grid.M;
    const std::size_t i2 = (i / grid.M) % grid.M;
    const std::size_t i3 = i / (grid.M * grid.M);
    const Vec3 xi = grid.point(i1, i2, i3);
    u.push_back({xi[0] / grid.R, xi[1] / grid.R, xi[2] / grid.R});
    w.push_back(weights[i]);
    where.push_back(i);
  }
  if (u.empty()) throw std::invalid_argument("weights are all zero");

  const double cube = static_cast<double>(D) * D * D;
  const auto steps = static_cast<std::size_t>(std::ceil(std::log2(cube) - 1e-12));
  Partition out;
  std::vector<std::uint32_t> pattern(u.size(), 0);
  for (std::size_t step = 0; step < steps; ++step) {
    std::map<std::uint32_t, std::uint32_t> compact;
    std::vector<std::uint32_t> piece(u.size());
    for (std::size_t p = 0; p < u.size(); ++p) {
      piece[p] = compact.emplace(pattern[p], static_cast<std::uint32_t>(compact.size())).first->second;
    }
    const std::size_t pieces = compact.size();
    const int degree = bisector_degree(pieces + 1);
    const BisectionSearch search(u, w, piece, pieces, degree);

    BisectionStep info;
    info.degree = degree;
    info.pieces = pieces;
    Bisector best;
    for (std::size_t r = 0; r < config.restarts; ++r) {
      std::mt19937_64 rng(config.seed * 1000003ULL + step * 1009ULL + r);
      std::normal_distribution<double> normal(0.0, 1.0);
      std::vector<double> c(search.dimension());
      for (double& v : c) v = normal(rng);
      Bisector b = search.descend(search.smooth_solve(std::move(c)), config.sweeps, config.tolerance);
      ++info.restarts;
      if (singular_on_grid(Polynomial3(degree, b.coeffs, grid.R), grid)) continue;
      if (b.imbalance < best.imbalance) best = std::move(b);
      if (best.imbalance <= config.tolerance) break;
    }
    if (best.coeffs.empty()) {
      throw std::runtime_error("no nonsingular bisector found");
    }
    info.max_imbalance = best.imbalance;
    info.accepted = best.imbalance <= config.tolerance;
    if (!info.accepted) out.best_effort = true;
    out.steps.push_back(info);
    Polynomial3 factor(degree, std::move(best.coeffs), grid.R);
    const std::size_t bit = out.polynomial.factors.size();
    for (std::size_t p = 0; p < u.size(); ++p) {
      if (factor({u[p][0] * grid.R, u[p][1] * grid.R, u[p][2] * grid.R}) >= 0.0) {
        pattern[p] |= 1u << bit;
      }
    }
    out.polynomial.factors.push_back(std::move(factor));
  }

  std::map<std::uint32_t, double> mass;
  for (std::size_t p = 0; p < u.size(); ++p) mass[pattern[p]] += w[p];
  for (const auto& [pat, m] : mass) {
    if (m > 0.0) out.piece_masses.push_back(m);
  }
  return out;
}

Incidence tube_cell_incidence(std::span<const Tube> tubes, const CellDecomposition& dec) {
  std::map<std::uint32_t, std::size_t> class_of;
  for (std::uint32_t pat : dec.cell_pattern) class_of.emplace(pat, class_of.size());
  Incidence out;
  out.cells_of_tube.resize(tubes.size());
  out.tubes_of_cell.resize(class_of.size());
  const GridSpec& g = dec.grid;
  const double step = g.h() * std::sqrt(3.0);
  std::vector<std::uint8_t> grazes(tubes.size(), 0);
  parallel_for(tubes.size(), [&](std::size_t t, unsigned) {
    const Tube& tube = tubes[t];
    std::map<std::size_t, bool> seen;  // class -> reached away from the tube boundary
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (dec.labels[i] < 0) continue;
      const std::size_t i1 = i % g.M;
      const std::size_t i2 = (i / g.M) % g.M;
      const std::size_t i3 = i / (g.M * g.M);
      const double d = tube.axis_distance(g.point(i1, i2, i3));
      if (d > tube.radius) continue;
      const std::size_t cls = class_of.at(dec.pattern[i]);
      seen[cls] = seen[cls] || d <= tube.radius - step;
    }
    for (const auto& [cls, interior] : seen) {
      out.cells_of_tube[t].push_back(cls);
      if (!interior) grazes[t] = 1;
    }
  });
  for (std::size_t t = 0; t < tubes.size(); ++t) {
    out.max_cells_per_tube = std::max(out.max_cells_per_tube, out.cells_of_tube[t].size());
    for (std::size_t cls : out.cells_of_tube[t]) out.tubes_of_cell[cls].push_back(t);
    out.grazing += grazes[t];
  }
  return out;
}

TubeClassification classify_tubes(std::span<const Tube> tubes, const Poly3& p,
                                  const CellDecomposition& dec, double delta,
                                  const ClassifyConfig& config) {
  const GridSpec& g = dec.grid;
  const double R = g.R;
  TubeClassification out;
  out.ball_radius = std::pow(R, 1.0 - delta);
  out.threshold = std::pow(R, -0.5 + 2.0 * delta);
  const double spacing = 2.0 * out.ball_radius / std::sqrt(3.0);
  const auto per_axis = static_cast<std::size_t>(std::ceil(2.0 * R / spacing - 1e-12));
  const double pitch = 2.0 * R / static_cast<double>(per_axis);
  for (std::size_t a = 0; a < per_axis; ++a) {
    for (std::size_t b = 0; b < per_axis; ++b) {
      for (std::size_t c = 0; c < per_axis; ++c) {
        BallClassification ball;
        ball.center = {-R + (static_cast<double>(c) + 0.5) * pitch,
                       -R + (static_cast<double>(b) + 0.5) * pitch,
                       -R + (static_cast<double>(a) + 0.5) * pitch};
        out.balls.push_back(ball);
      }
    }
  }

  std::vector<std::size_t> wall_idx;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (dec.wall[i]) wall_idx.push_back(i);
  }
  const auto point_of = [&](std::size_t i) {
    return g.point(i % g.M, (i / g.M) % g.M, i / (g.M * g.M));
  };
  const auto stride = [](std::size_t n, std::size_t cap) {
    return std::max<std::size_t>(1, (n + cap - 1) / std::max<std::size_t>(cap, 1));
  };
  std::vector<Vec3> wall_pts;
  for (std::size_t k = 0; k < wall_idx.size(); k += stride(wall_idx.size(), config.max_wall_samples)) {
    wall_pts.push_back(point_of(wall_idx[k]));
  }
  // Zero set samples: wall points moved by one projected Newton step onto the nearest factor.
  std::vector<Vec3> zeros;
  std::vector<Vec3> normals;
  for (std::size_t k = 0; k < wall_idx.size(); k += stride(wall_idx.size(), config.max_zero_samples)) {
    const Vec3 xi = point_of(wall_idx[k]);
    const Polynomial3* nearest = nullptr;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& f : p.factors) {
      const Vec3 gr = f.gradient(xi);
      const double gn = norm(gr);
      const double d0 = gn > 0.0 ? std::abs(f(xi)) / gn : std::numeric_limits<double>::infinity();
      if (d0 < best) {
        best = d0;
        nearest = &f;
      }
    }
    if (nearest == nullptr) continue;
    const Vec3 gr = nearest->gradient(xi);
    const double g2 = dot(gr, gr);
    const double v = (*nearest)(xi);
    const Vec3 z{xi[0] - v * gr[0] / g2, xi[1] - v * gr[1] / g2, xi[2] - v * gr[2] / g2};
    const Vec3 n = nearest->gradient(z);
    const double nn = norm(n);
    double cs = 0.0;
    for (double c : nearest->coefficients()) cs += std::abs(c);
    if (!(nn * R > 1e-8 * cs)) continue;
    zeros.push_back(z);
    normals.push_back({n[0] / nn, n[1] / nn, n[2] / nn});
  }

  const double rb = out.ball_radius;
  const auto dist = [](const Vec3& a, const Vec3& b) {
    return norm({a[0] - b[0], a[1] - b[1], a[2] - b[2]});
  };
  // Per tube: 0 none, 1 tangential, 2 transversal, 3 unclassified, for every ball.
  std::vector<std::vector<std::uint8_t>> verdict(tubes.size());
  parallel_for(tubes.size(), [&](std::size_t t, unsigned) {
    const Tube& tube = tubes[t];
    std::vector<std::uint8_t>& v = verdict[t];
    v.assign(out.balls.size(), 0);
    std::vector<std::size_t> in_tube;
    for (std::size_t k = 0; k < wall_pts.size(); ++k) {
      if (tube.axis_distance(wall_pts[k]) <= tube.radius) in_tube.push_back(k);
    }
    if (in_tube.empty()) return;
    std::vector<std::size_t> near_zero;
    for (std::size_t k = 0; k < zeros.size(); ++k) {
      if (tube.axis_distance(zeros[k]) <= 10.0 * tube.radius) near_zero.push_back(k);
    }
    for (std::size_t j = 0; j < out.balls.size(); ++j) {
      const Vec3& c = out.balls[j].center;
      const bool meets = std::any_of(in_tube.begin(), in_tube.end(),
                                     [&](std::size_t k) { return dist(wall_pts[k], c) <= rb; });
      if (!meets) continue;
      bool any = false;
      bool witness = false;
      for (std::size_t k : near_zero) {
        if (dist(zeros[k], c) > 2.0 * rb) continue;
        any = true;
        const double ang = std::asin(std::min(1.0, std::abs(dot(tube.direction, normals[k]))));
        if (ang > out.threshold) {
          witness = true;
          break;
        }
      }
      v[j] = !any ? 3 : (witness ? 2 : 1);
    }
  });

  out.transversal_count.assign(tubes.size(), 0);
  for (std::size_t j = 0; j < out.balls.size(); ++j) {
    BallClassification& ball = out.balls[j];
    std::vector<std::size_t> thetas;
    for (std::size_t t = 0; t < tubes.size(); ++t) {
      switch (verdict[t][j]) {
        case 1:
          ball.tangential.push_back(t);
          thetas.push_back(tubes[t].theta);
          break;
        case 2:
          ball.transversal.push_back(t);
          ++out.transversal_count[t];
          break;
        case 3:
          ball.unclassified.push_back(t);
          break;
        default:
          break;
      }
    }
    std::sort(thetas.begin(), thetas.end());
    ball.tangential_directions =
        static_cast<std::size_t>(std::unique(thetas.begin(), thetas.end()) - thetas.begin());
    out.max_tangential_directions = std::max(out.max_tangential_directions, ball.tangential_directions);
  }
  for (std::size_t c : out.transversal_count) out.max_transversal = std::max(out.max_transversal, c);
  return out;
}

}  // namespace srl
