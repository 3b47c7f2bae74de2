#include "srl/chirpz.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace srl {

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

namespace {

cplx unit_phase(long double angle) {
  const long double two_pi = 2.0L * std::numbers::pi_v<long double>;
  const long double r = std::fmod(angle, two_pi);
  return std::polar(1.0, static_cast<double>(r));
}

struct FftwBuffer {
  fftw_complex* data = nullptr;
  explicit FftwBuffer(std::size_t n) : data(fftw_alloc_complex(n)) {
    if (!data) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  cplx* get() { return reinterpret_cast<cplx*>(data); }
};

// Smallest 2^a 3^b 5^c >= n.
inline cplx mul(cplx a, cplx b) {
  return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

std::size_t smooth_length(std::size_t n) {
  std::size_t best = 1;
  while (best < n) best <<= 1;
  for (std::size_t p5 = 1; p5 < best; p5 *= 5) {
    for (std::size_t p35 = p5; p35 < best; p35 *= 3) {
      std::size_t v = p35;
      while (v < n) v <<= 1;
      best = std::min(best, v);
    }
  }
  return best;
}

}  // namespace

struct ChirpZ::Impl {
  std::size_t n;
  std::size_t m;
  std::size_t L;
  std::vector<cplx> pre;
  std::vector<cplx> post;
  std::vector<cplx> kernel_hat;
  FftwBuffer work;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  Impl(std::size_t n_, std::size_t m_, std::size_t L_) : n(n_), m(m_), L(L_), work(L_) {}
  ~Impl() {
    const std::lock_guard lock(fftw_planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
  }
};

ChirpZ::ChirpZ(std::size_t n, std::size_t m, double xi0, double dxi, double x0, double dx) {
  if (n == 0 || m == 0) throw std::invalid_argument("chirp-z sizes must be positive");
  const std::size_t L = smooth_length(n + m - 1);
  impl_ = std::make_unique<Impl>(n, m, L);
  Impl& s = *impl_;
  const long double alpha = static_cast<long double>(dxi) * dx;

  s.pre.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const long double jj = static_cast<long double>(j);
    s.pre[j] = unit_phase(static_cast<long double>(xi0) * dx * jj + 0.5L * alpha * jj * jj);
  }
  s.post.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    const long double kk = static_cast<long double>(k);
    const long double xik = static_cast<long double>(xi0) + kk * dxi;
    s.post[k] = unit_phase(xik * x0 + 0.5L * alpha * kk * kk) / static_cast<double>(L);
  }

  {
    const std::lock_guard lock(fftw_planner_mutex());
    s.forward = fftw_plan_dft_1d(static_cast<int>(L), s.work.data, s.work.data, FFTW_FORWARD,
                                 FFTW_ESTIMATE);
    s.backward = fftw_plan_dft_1d(static_cast<int>(L), s.work.data, s.work.data, FFTW_BACKWARD,
                                  FFTW_ESTIMATE);
  }
  if (!s.forward || !s.backward) throw std::runtime_error("FFTW planning failed");

  cplx* w = s.work.get();
  std::fill(w, w + L, cplx{});
  for (std::size_t t = 0; t < m; ++t) {
    const long double tt = static_cast<long double>(t);
    w[t] = unit_phase(-0.5L * alpha * tt * tt);
  }
  for (std::size_t t = 1; t < n; ++t) {
    const long double tt = static_cast<long double>(t);
    w[L - t] = unit_phase(-0.5L * alpha * tt * tt);
  }
  fftw_execute(s.forward);
  s.kernel_hat.assign(w, w + L);
}

ChirpZ::~ChirpZ() = default;
ChirpZ::ChirpZ(ChirpZ&&) noexcept = default;
ChirpZ& ChirpZ::operator=(ChirpZ&&) noexcept = default;

std::size_t ChirpZ::input_size() const { return impl_->n; }
std::size_t ChirpZ::output_size() const { return impl_->m; }

void ChirpZ::apply(std::span<const cplx> in, std::span<cplx> out) {
  Impl& s = *impl_;
  if (in.size() != s.n || out.size() != s.m) throw std::invalid_argument("chirp-z size mismatch");
  cplx* w = s.work.get();
  for (std::size_t j = 0; j < s.n; ++j) w[j] = mul(in[j], s.pre[j]);
  std::fill(w + s.n, w + s.L, cplx{});
  fftw_execute(s.forward);
  for (std::size_t t = 0; t < s.L; ++t) w[t] = mul(w[t], s.kernel_hat[t]);
  fftw_execute(s.backward);
  for (std::size_t k = 0; k < s.m; ++k) out[k] = mul(w[k], s.post[k]);
}

}  // namespace srl
