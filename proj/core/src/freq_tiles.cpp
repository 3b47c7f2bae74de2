#include "srl/freq_tiles.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace srl {

double bump(double u1, double u2) {
  const double r2 = u1 * u1 + u2 * u2;
  if (r2 >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - r2));
}

namespace {

class Fft2 {
 public:
  Fft2(std::size_t nx, std::size_t ny, int sign) : n_(nx * ny) {
    buf_ = fftw_alloc_complex(n_);
    const std::lock_guard lock(fftw_planner_mutex());
    plan_ = fftw_plan_dft_2d(static_cast<int>(ny), static_cast<int>(nx), buf_, buf_, sign,
                             FFTW_ESTIMATE);
  }
  ~Fft2() {
    const std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan_);
    fftw_free(buf_);
  }
  Fft2(const Fft2&) = delete;
  Fft2& operator=(const Fft2&) = delete;
  cplx* data() { return reinterpret_cast<cplx*>(buf_); }
  void run() { fftw_execute(plan_); }

 private:
  std::size_t n_;
  fftw_complex* buf_;
  fftw_plan plan_;
};

std::ptrdiff_t signed_index(std::size_t k, std::size_t n) {
  return k < (n + 1) / 2 ? static_cast<std::ptrdiff_t>(k)
                         : static_cast<std::ptrdiff_t>(k) - static_cast<std::ptrdiff_t>(n);
}

double tile_weight(double u1, double u2, int y1, int y2) { return bump(u1 - y1, u2 - y2); }

double normaliser(double u1, double u2) {
  double s = 0.0;
  const int c1 = static_cast<int>(std::floor(u1));
  const int c2 = static_cast<int>(std::floor(u2));
  for (int a = c1 - 1; a <= c1 + 2; ++a) {
    for (int b = c2 - 1; b <= c2 + 2; ++b) s += tile_weight(u1, u2, a, b);
  }
  return s;
}

struct TileKey {
  int a;
  int b;
  bool operator<(const TileKey& o) const { return a != o.a ? a < o.a : b < o.b; }
};

}  // namespace

FreqTileReport freq_tile_audit(const SampledFunction& f, double gamma, double R,
                               const FreqTileConfig& config) {
  const Surface surface(gamma);
  const std::size_t px = static_cast<std::size_t>(std::lround(config.pad * f.nx()));
  const std::size_t py = static_cast<std::size_t>(std::lround(config.pad * f.ny()));
  const std::size_t nx = f.nx() + 2 * px;
  const std::size_t ny = f.ny() + 2 * py;
  const Box d = f.domain();
  const Box padded{d.x0 - px * f.dx(), d.y0 - py * f.dy(), d.x1 + px * f.dx(),
                   d.y1 + py * f.dy()};
  const double Px = padded.width();
  const double Py = padded.height();

  Fft2 forward(nx, ny, FFTW_FORWARD);
  Fft2 backward(nx, ny, FFTW_BACKWARD);
  std::fill(forward.data(), forward.data() + nx * ny, cplx{});
  for (std::size_t iy = 0; iy < f.ny(); ++iy) {
    for (std::size_t ix = 0; ix < f.nx(); ++ix) forward.data()[(iy + py) * nx + ix + px] = f.at(ix, iy);
  }
  forward.run();
  const std::vector<cplx> spectrum(forward.data(), forward.data() + nx * ny);

  FreqTileReport report;
  report.R = R;
  std::vector<double> u1(nx);
  std::vector<double> u2(ny);
  for (std::size_t k = 0; k < nx; ++k) {
    u1[k] = 2.0 * std::numbers::pi * signed_index(k, nx) / Px / R;
  }
  for (std::size_t k = 0; k < ny; ++k) {
    u2[k] = 2.0 * std::numbers::pi * signed_index(k, ny) / Py / R;
  }

  std::vector<double> norm(nx * ny);
  std::map<TileKey, double> energy;
  for (std::size_t ky = 0; ky < ny; ++ky) {
    for (std::size_t kx = 0; kx < nx; ++kx) {
      const double s = normaliser(u1[kx], u2[ky]);
      norm[ky * nx + kx] = s;
      const double mag2 = std::norm(spectrum[ky * nx + kx]);
      const int c1 = static_cast<int>(std::floor(u1[kx]));
      const int c2 = static_cast<int>(std::floor(u2[ky]));
      double total = 0.0;
      for (int a = c1 - 1; a <= c1 + 2; ++a) {
        for (int b = c2 - 1; b <= c2 + 2; ++b) {
          const double w = tile_weight(u1[kx], u2[ky], a, b) / s;
          total += w;
          if (w > 0.0) energy[{a, b}] += w * w * mag2;
        }
      }
      report.partition_residual = std::max(report.partition_residual, std::abs(total - 1.0));
    }
  }
  if (report.partition_residual > 1e-9) {
    throw std::invalid_argument("frequency windows do not form a partition of unity");
  }

  const double cell = f.dx() * f.dy();
  const double inv_n = 1.0 / static_cast<double>(nx * ny);
  double total_energy = 0.0;
  for (const auto& [key, e] : energy) total_energy += e;
  const double floor = config.energy_floor * config.energy_floor * total_energy;

  std::vector<cplx> recon(nx * ny);
  std::vector<std::pair<double, TileKey>> kept;
  for (const auto& [key, e] : energy) {
    if (e <= floor) continue;
    for (std::size_t ky = 0; ky < ny; ++ky) {
      for (std::size_t kx = 0; kx < nx; ++kx) {
        const std::size_t i = ky * nx + kx;
        backward.data()[i] = spectrum[i] * (tile_weight(u1[kx], u2[ky], key.a, key.b) / norm[i]);
      }
    }
    backward.run();
    double e2 = 0.0;
    for (std::size_t i = 0; i < nx * ny; ++i) {
      const cplx v = backward.data()[i] * inv_n;
      recon[i] += v;
      e2 += std::norm(v);
    }
    kept.push_back({std::sqrt(e2 * cell), key});
  }
  double err = 0.0;
  double ref = 0.0;
  for (std::size_t iy = 0; iy < ny; ++iy) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const bool inside = ix >= px && ix < px + f.nx() && iy >= py && iy < py + f.ny();
      const cplx orig = inside ? f.at(ix - px, iy - py) : cplx{};
      err += std::norm(recon[iy * nx + ix] - orig);
      ref += std::norm(orig);
    }
  }
  report.reconstruction_error = ref > 0.0 ? std::sqrt(err / ref) : std::sqrt(err);

  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (const auto& [e, key] : kept) {
    FreqTile t;
    t.y = {key.a, key.b};
    t.energy = e;
    report.tiles.push_back(t);
  }
  if (!config.measure_decay) return report;

  const std::size_t decay_tiles = std::min<std::size_t>(report.tiles.size(), config.max_decay_tiles);
  for (std::size_t t = 0; t < decay_tiles; ++t) {
    FreqTile& tile = report.tiles[t];
    SampledFunction piece(padded, nx, ny);
    for (std::size_t ky = 0; ky < ny; ++ky) {
      for (std::size_t kx = 0; kx < nx; ++kx) {
        const std::size_t i = ky * nx + kx;
        backward.data()[i] = spectrum[i] * (tile_weight(u1[kx], u2[ky], tile.y[0], tile.y[1]) / norm[i]);
      }
    }
    backward.run();
    for (std::size_t i = 0; i < nx * ny; ++i) piece.values()[i] = backward.data()[i] * inv_n;

    const double c1 = -R * tile.y[0];
    const double c2 = -R * tile.y[1];
    for (int h = 0; h <= 4; ++h) {
      const double xi3 = R * h / 4.0;
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
          const Point2 z{d.x0 + d.width() * (0.25 + 0.25 * a), d.y0 + d.height() * (0.25 + 0.25 * b)};
          const Vec2 g = surface.gradient(z);
          const Vec3 xi{c1 - xi3 * g[0], c2 - xi3 * g[1], xi3};
          tile.in_cube_peak = std::max(tile.in_cube_peak, std::abs(extension_at(piece, surface, xi)));
        }
      }
    }
    for (double dist : config.distances) {
      double peak = 0.0;
      for (std::size_t k = 0; k < config.angles; ++k) {
        const double ang = 2.0 * std::numbers::pi * static_cast<double>(k) / config.angles;
        for (double frac : {0.0, 0.5, 1.0}) {
          const Vec3 xi{c1 + dist * R * std::cos(ang), c2 + dist * R * std::sin(ang), frac * R};
          peak = std::max(peak, std::abs(extension_at(piece, surface, xi)));
        }
      }
      tile.distances.push_back(dist);
      tile.off_peak.push_back(peak);
    }
    std::vector<double> ds;
    std::vector<double> vs;
    for (std::size_t k = 0; k < tile.distances.size(); ++k) {
      if (tile.distances[k] == 4.0) tile.ratio_at_4R = tile.off_peak[k] / tile.in_cube_peak;
      if (tile.distances[k] >= 4.0 && tile.off_peak[k] > 0.0) {
        ds.push_back(tile.distances[k]);
        vs.push_back(tile.off_peak[k]);
      }
    }
    if (ds.size() >= 2) {
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      for (std::size_t k = 0; k < ds.size(); ++k) {
        const double x = std::log(ds[k]);
        const double y = std::log(vs[k]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
      }
      const double n = static_cast<double>(ds.size());
      tile.fitted_decay = -(n * sxy - sx * sy) / (n * sxx - sx * sx);
    }
  }
  return report;
}

}  // namespace srl
