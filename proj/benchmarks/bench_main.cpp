#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "srl/chirpz.hpp"
#include "srl/extension.hpp"
#include "srl/polypart.hpp"
#include "srl/wavepacket.hpp"

namespace {

void BM_ChirpZ(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  srl::ChirpZ cz(n, n, -40.0, 80.0 / n, 0.0, 1.0 / n);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  std::vector<srl::cplx> in(n), out(n);
  for (auto& v : in) v = {g(rng), g(rng)};
  for (auto _ : state) {
    cz.apply(in, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ChirpZ)->RangeMultiplier(4)->Range(64, 4096)->Complexity();

void BM_Slices(benchmark::State& state) {
  const double R = static_cast<double>(state.range(0));
  const srl::SampledFunction f = srl::random_gaussian(static_cast<std::size_t>(4 * R), 5);
  const srl::GridSpec grid{R, static_cast<std::size_t>(2 * R)};
  const srl::Atom whole = srl::atom_for_box(f, srl::unit_square);
  for (auto _ : state) {
    srl::SliceEvaluator ev(f, srl::Surface(0.5), grid, {whole});
    ev.run([&](std::size_t, const srl::SliceEvaluator::SliceFields& fields) {
      benchmark::DoNotOptimize(fields[0].data());
    });
  }
}
BENCHMARK(BM_Slices)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Norms(benchmark::State& state) {
  const double R = static_cast<double>(state.range(0));
  const srl::SampledFunction f = srl::random_gaussian(static_cast<std::size_t>(4 * R), 7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        srl::extension_norms(f, 0.5, R, static_cast<std::size_t>(2 * R), {2.0, 3.25}));
  }
}
BENCHMARK(BM_Norms)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_Packets(benchmark::State& state) {
  const double R = static_cast<double>(state.range(0));
  const srl::SampledFunction f = srl::random_gaussian(static_cast<std::size_t>(4 * R), 9);
  for (auto _ : state) {
    const srl::PacketDecomposition dec(f, srl::Surface(0.5), R);
    benchmark::DoNotOptimize(dec.tubes().size());
  }
}
BENCHMARK(BM_Packets)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Cells(benchmark::State& state) {
  const srl::GridSpec grid{64.0, static_cast<std::size_t>(state.range(0))};
  std::vector<double> c(srl::monomials(3).size());
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  for (double& v : c) v = g(rng);
  const srl::Poly3 p{{srl::Polynomial3(3, c, 64.0)}};
  for (auto _ : state) {
    auto w = srl::wall(p, grid, 0.1);
    const srl::CellDecomposition dec = srl::cells(p, grid, std::move(w));
    benchmark::DoNotOptimize(dec.cell_count);
  }
}
BENCHMARK(BM_Cells)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
