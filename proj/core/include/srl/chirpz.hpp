#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <span>

namespace srl {

using cplx = std::complex<double>;

// FFTW planning is not thread safe; every plan creation and destruction holds this lock.
std::mutex& fftw_planner_mutex();

// out[k] = sum_j in[j] exp(i (xi0 + k dxi)(x0 + j dx)), k < m, j < n, via Bluestein's algorithm.
// Holds FFTW plans and scratch space; one instance per thread.
class ChirpZ {
 public:
  ChirpZ(std::size_t n, std::size_t m, double xi0, double dxi, double x0, double dx);
  ~ChirpZ();
  ChirpZ(ChirpZ&&) noexcept;
  ChirpZ& operator=(ChirpZ&&) noexcept;
  ChirpZ(const ChirpZ&) = delete;
  ChirpZ& operator=(const ChirpZ&) = delete;

  std::size_t input_size() const;
  std::size_t output_size() const;
  void apply(std::span<const cplx> in, std::span<cplx> out);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace srl
