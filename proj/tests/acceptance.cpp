#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>

#include "srl/broad.hpp"
#include "srl/partition.hpp"
#include "srl/rescale.hpp"
#include "srl/scenario.hpp"
#include "srl/wavepacket.hpp"

using namespace srl;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Detail {
 public:
  template <typename T>
  Detail& operator()(const std::string& key, const T& value) {
    if (out_.tellp() > 0) out_ << ' ';
    out_ << key << '=' << value;
    return *this;
  }
  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

std::uint64_t seed_of(std::uint64_t base, std::uint64_t k) { return base * 1'000'003 + k; }

Point2 uniform_in(const Box& b, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return {b.x0 + u(rng) * b.width(), b.y0 + u(rng) * b.height()};
}

Outcome transversality_algebra() {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(0.0, 1.0), g(-1.0, 1.0);
  double pair_err = 0.0, quad_err = 0.0;
  const int trials = 100'000;
  for (int t = 0; t < trials; ++t) {
    const Surface s(g(rng));
    const Point2 z{u(rng), u(rng)}, z1{u(rng), u(rng)}, z2{u(rng), u(rng)};
    const Point2 z1p{u(rng), u(rng)}, z2p{u(rng), u(rng)};
    const double pm = gamma_pair_matrix(s, z, z1, z2);
    pair_err = std::max(pair_err, std::abs(gamma_pair(s, z, z1, z2) - pm) / std::max(1.0, std::abs(pm)));
    const double qm = gamma_quad(s, z, z1, z2, z1p, z2p);
    quad_err = std::max(quad_err, std::abs(gamma_quad_expansion(s, z, z1, z2, z1p, z2p) - qm) /
                                      std::max(1.0, std::abs(qm)));
  }
  return {pair_err <= 1e-12 && quad_err <= 1e-12,
          Detail()("trials", trials)("pair_err", pair_err)("expansion_err", quad_err).str()};
}

Outcome gamma_lower_bound() {
  std::mt19937_64 rng(102);
  std::uniform_int_distribution<int> kdist(16, 256);
  std::uniform_real_distribution<double> g(-1.0, 1.0);
  std::size_t pairs = 0, violations = 0, swapped = 0, draws = 0;
  double worst = std::numeric_limits<double>::infinity();
  while (pairs < 100'000) {
    const double K = kdist(rng);
    const double mu = (rng() & 1) ? 4.0 : 1.0;
    const double side = std::floor(std::sqrt(mu)) / K;
    const Surface s(g(rng));
    std::uniform_int_distribution<int> cell(0, static_cast<int>(K) - 1);
    const auto random_cap = [&] {
      return Cap{{(cell(rng) + 0.5) / K, (cell(rng) + 0.5) / K}, side};
    };
    Cap a = random_cap(), b = random_cap();
    ++draws;
    if (!strongly_separated(s, a, b, mu, K)) continue;
    // z is drawn from the cap whose centre carries the large t value.
    const SeparationMeasure m = separation_measure(s, a, b, mu, K);
    if (m.t_second < m.threshold) {
      std::swap(a, b);
      ++swapped;
    }
    const Box b1 = a.box(), b2 = b.box();
    const Point2 z1 = uniform_in(b1, rng), z1p = uniform_in(b1, rng);
    const Point2 z = uniform_in(b2, rng), z2 = uniform_in(b2, rng), z2p = uniform_in(b2, rng);
    const double v = std::abs(gamma_quad(s, z, z1, z2, z1p, z2p)) / (4.0 * mu / (K * K));
    worst = std::min(worst, v);
    if (v < 1.0) ++violations;
    ++pairs;
  }
  return {violations == 0, Detail()("pairs", pairs)("draws", draws)("swapped", swapped)(
                               "violations", violations)("min_ratio", worst)
                               .str()};
}

Outcome geometric_lemma() {
  std::size_t trials = 0, holds = 0, max_h = 0, max_v = 0;
  const std::size_t per_setting = 334;
  std::uint64_t seed = 103;
  for (double K : {20.0, 64.0, 256.0}) {
    const double g = 1.0 / std::sqrt(K);
    for (double gamma : {0.0, g, -g, 1.0, -1.0}) {
      for (double mu : {1.0, 4.0}) {
        const GeolemmaFuzz r = geolemma_fuzz(K, gamma, mu, per_setting, seed++);
        trials += r.trials;
        holds += r.holds;
        max_h = std::max(max_h, r.max_horizontal);
        max_v = std::max(max_v, r.max_vertical);
      }
    }
  }
  return {holds == trials, Detail()("trials", trials)("holds", holds)("max_horizontal", max_h)(
                               "max_vertical", max_v)
                               .str()};
}

AnalyticFunction smooth_on(const Box& b) {
  return {[b](Point2 p) {
            const double u = (p.x - b.x0) / b.width(), v = (p.y - b.y0) / b.height();
            if (u < 0 || u > 1 || v < 0 || v > 1) return cplx{};
            const double w =
                std::pow(std::sin(std::numbers::pi * u) * std::sin(std::numbers::pi * v), 2);
            return w * std::exp(cplx(0.0, 3.0 * u - 2.0 * v));
          },
          b};
}

Outcome rescaling() {
  std::mt19937_64 rng(104);
  std::uniform_real_distribution<double> u(0.0, 1.0), g(-1.0, 1.0);
  double residual = 0.0;
  for (int t = 0; t < 2000; ++t) {
    const double K = std::pow(2.0, 4 + static_cast<int>(u(rng) * 5));
    const double a = std::floor(u(rng) * std::sqrt(K)) / std::sqrt(K);
    const double b = std::floor(u(rng) * std::pow(K, 0.25)) / std::pow(K, 0.25);
    const double small = g(rng) / std::sqrt(K);
    for (const AffineReparam& r : {horizontal_rescale(g(rng), K, b), vertical_rescale(small, K, a),
                                   short_rescale(small, K, a, b)}) {
      for (int k = 0; k < 10; ++k) {
        residual = std::max(residual, std::abs(phi_identity_residual(r, {u(rng), u(rng)})));
      }
    }
  }

  std::vector<Vec3> probes(50);
  std::uniform_real_distribution<double> xi(-20.0, 20.0);
  for (Vec3& p : probes) p = {xi(rng), xi(rng), xi(rng)};
  double identity = 0.0;
  for (const AffineReparam& r : {horizontal_rescale(0.6, 16, 0.5), vertical_rescale(0.2, 16, 0.25),
                                 short_rescale(-0.2, 16, 0.5, 0.5)}) {
    identity = std::max(identity, verify_operator_identity(r, smooth_on(r.strip()), probes, {64, 10}));
  }

  double pull = 0.0;
  std::uint64_t seed = 104;
  for (double K : {16.0, 64.0, 256.0}) {
    for (double gamma : {0.0, 0.5, -1.0}) {
      const AffineReparam r = horizontal_rescale(gamma, K, 0.0);
      const SampledFunction fl = random_gaussian(64, seed++, r.strip());
      const double expected = std::pow(K, 0.125) * fl.l2_norm();
      pull = std::max(pull, std::abs(pullback(r, fl).l2_norm() - expected) / expected);
    }
  }
  return {residual <= 1e-12 && identity <= 1e-6 && pull <= 1e-9,
          Detail()("phi_residual", residual)("operator_identity", identity)("pullback_norm", pull)
              .str()};
}

Outcome extension_evaluator() {
  const double R = 64, gamma = 0.5;
  const std::size_t N = 256, M = 128;
  const Surface s(gamma);
  const SampledFunction f = random_gaussian(N, 105);
  const Field3 e = evaluate_extension(f, gamma, R, M);
  std::mt19937_64 rng(105);
  std::uniform_int_distribution<std::size_t> idx(0, M - 1);
  double probe_err = 0.0;
  for (int k = 0; k < 100; ++k) {
    const std::size_t i1 = idx(rng), i2 = idx(rng), i3 = idx(rng);
    const cplx ref = extension_at(f, s, e.grid.point(i1, i2, i3));
    probe_err = std::max(probe_err, std::abs(e.at(i1, i2, i3) - ref) / std::abs(ref));
  }
  double worst = 0.0;
  for (std::uint64_t k = 0; k < 20; ++k) {
    const SampledFunction g = random_gaussian(N, seed_of(106, k));
    const double l2 = extension_norms(g, gamma, R, M, {2.0})[0];
    worst = std::max(worst, l2 / (std::sqrt(R) * g.l2_norm()));
  }
  return {probe_err <= 1e-3 && worst <= 4.0,
          Detail()("probe_rel_err", probe_err)("max_l2_ratio", worst).str()};
}

Outcome knapp_scaling() {
  const std::vector<double> Rs{16, 32, 64, 128, 256};
  const std::vector<double> ps{3.25, 4.0};
  bool ok = true;
  Detail d;
  for (double gamma : {0.0, 0.5, 1.0}) {
    const std::vector<KnappPoint> pts = knapp_sweep(Rs, ps, gamma);
    for (std::size_t ip = 0; ip < ps.size(); ++ip) {
      std::vector<double> norms;
      for (const KnappPoint& k : pts) norms.push_back(k.norms[ip]);
      const double slope = fitted_exponent(Rs, norms);
      const double predicted = -1.0 + 2.0 / ps[ip];
      ok = ok && std::abs(slope - predicted) <= 0.1;
      std::ostringstream key;
      key << "gamma" << gamma << "_p" << ps[ip];
      d(key.str(), slope);
    }
  }
  return {ok, d.str()};
}

Outcome broad_consistency() {
  const double R = 16, K = 16;
  const std::size_t M = 32, N = 64;
  std::size_t bad_partition = 0, narrow_violations = 0, monotone_violations = 0, strip_violations = 0;
  std::uint64_t seed = 107;
  for (double gamma : {0.0, 0.1, 0.25, 0.5, 1.0, -0.5}) {
    const SampledFunction f = random_gaussian(N, seed++);
    const ScaleParams params{R, K, 0.1, std::pow(K, -0.1), 1.0};
    const ClassifiedField c = classify_points(f, Surface(gamma), params, M);
    std::size_t total = 0;
    for (std::size_t n : c.counts) total += n;
    const bool labels_ok = std::all_of(c.labels.begin(), c.labels.end(),
                                       [](std::uint8_t l) { return l <= label_short; });
    if (total != c.grid.size() || c.labels.size() != c.grid.size() || !labels_ok) ++bad_partition;
    if (std::abs(gamma) * std::sqrt(K) >= 1.0) {
      narrow_violations += c.counts[label_vertical] + c.counts[label_short];
    }

    std::vector<std::uint8_t> prev;
    for (double alpha : {0.05, 0.1, 0.25, 0.5, 0.75, 1.0, 2.0}) {
      const BroadMask m = broad_mask(f, Surface(gamma), {R, K, 0.1, alpha, 1.0}, M);
      for (std::size_t i = 0; i < prev.size(); ++i) monotone_violations += prev[i] > m.mask[i];
      prev = m.mask;
    }

    // With vertical and short strips present, a piece of f inside the long strip can exceed
    // |E f|, so the alpha >= 1 half applies only when long horizontal strips are the only ones.
    const SampledFunction strip = f.restricted(Box{0.0, 0.0, 1.0, 0.5});
    const bool horizontal_only = !uses_vertical_strips(gamma, K);
    for (double alpha : {0.25, 0.5, 0.9, 1.0, 1.5}) {
      if (alpha >= 1.0 && !horizontal_only) continue;
      const BroadMask m = broad_mask(strip, Surface(gamma), {R, K, 0.1, alpha, 1.0}, M);
      for (std::size_t i = 0; i < m.mask.size(); ++i) {
        if (m.magnitude[i] > 0.0 && (m.mask[i] != 0) != (alpha >= 1.0)) ++strip_violations;
      }
    }
  }
  return {bad_partition + narrow_violations + monotone_violations + strip_violations == 0,
          Detail()("partition_failures", bad_partition)("narrow_labels", narrow_violations)(
              "monotone_violations", monotone_violations)("single_strip_violations",
                                                          strip_violations)
              .str()};
}

Outcome packet_audit() {
  bool ok = true;
  Detail d;
  double previous = std::numeric_limits<double>::infinity();
  for (double R : {16.0, 64.0, 256.0}) {
    const auto side = static_cast<std::size_t>(std::lround(std::sqrt(R)));
    const std::size_t N = (static_cast<std::size_t>(4 * R) + side - 1) / side * side;
    const SampledFunction f = random_gaussian(N, seed_of(108, side));
    const PacketDecomposition dec(f, Surface(0.5), R);
    const PacketAudit a = verify_packets(dec);
    ok = ok && a.containment_failures == 0 && a.reconstruction_error <= 1e-3 &&
         a.constant <= 8.0 && a.off_tube_ratio < previous;
    if (R == 256.0) ok = ok && a.off_tube_ratio <= std::pow(R, -5.0);
    previous = a.off_tube_ratio;
    const std::string r = std::to_string(static_cast<int>(R));
    d("R" + r + "_containment", a.containment_failures)("R" + r + "_reconstruction",
                                                        a.reconstruction_error)(
        "R" + r + "_off_tube", a.off_tube_ratio)("R" + r + "_constant", a.constant);
  }
  return {ok, d.str()};
}

Outcome partition() {
  const double R = 64, delta = 0.1;
  const std::size_t M = 64;
  bool ok = true;
  Detail d;
  for (int D : {2, 4}) {
    const PartitionAuditResult a = partition_audit(R, M, D, delta, 0.5, 109 + D);
    ok = ok && static_cast<double>(a.cells) >= D * D * D / 8.0 && a.piece_ratio <= 64.0 &&
         a.max_cells_per_tube <= static_cast<std::size_t>(D + 1) &&
         static_cast<double>(a.max_tangential_directions) <= a.tangential_bound;
    const std::string p = "D" + std::to_string(D) + "_";
    d(p + "degree", a.degree)(p + "cells", a.cells)(p + "mass_ratio", a.piece_ratio)(
        p + "max_cells_per_tube", a.max_cells_per_tube)(p + "tangential",
                                                         a.max_tangential_directions)(
        p + "tangential_bound", a.tangential_bound);
  }
  return {ok, d.str()};
}

Outcome growth_exponent() {
  const std::vector<double> Rs{16, 32, 64, 128, 256};
  const double K = 16, epsilon = 0.1, gamma = 0.5, p = 3.25;
  const Surface s(gamma);
  double worst = -std::numeric_limits<double>::infinity();
  std::vector<double> slopes;
  for (std::uint64_t k = 0; k < 20; ++k) {
    std::vector<double> ratios;
    for (double R : Rs) {
      // Independent clipped Gaussians per sample at 4R samples per unit length.
      const SampledFunction f = random_gaussian(static_cast<std::size_t>(4 * R), seed_of(110, k));
      const ScaleParams params{R, K, epsilon, std::pow(K, -epsilon), 1.0};
      const BroadNorms b = broad_norms(f, s, params, static_cast<std::size_t>(2 * R), {p});
      ratios.push_back(b.broad[0] /
                       (std::pow(f.l2_norm(), 12.0 / 13.0) * std::pow(f.linf_norm(), 1.0 / 13.0)));
    }
    slopes.push_back(fitted_exponent(Rs, ratios));
    worst = std::max(worst, slopes.back());
  }
  std::sort(slopes.begin(), slopes.end());
  return {worst <= 0.2, Detail()("functions", slopes.size())("max_exponent", worst)(
                            "median_exponent", slopes[slopes.size() / 2])("min_exponent",
                                                                          slopes.front())
                            .str()};
}

const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
    {"transversality algebra", transversality_algebra},
    {"gamma lower bound", gamma_lower_bound},
    {"geometric lemma", geometric_lemma},
    {"rescaling identities", rescaling},
    {"extension evaluator", extension_evaluator},
    {"knapp scaling", knapp_scaling},
    {"broad/narrow consistency", broad_consistency},
    {"wave packet audit", packet_audit},
    {"partition audit", partition},
    {"growth exponent", growth_exponent},
};

// Runtime limits in seconds.
constexpr double limits[] = {5, 30, 120, 60, 120, 600, 60, 600, 600, 1800};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> which;
  app.add_option("--criterion", which, "criterion numbers, default all")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);
  if (which.empty()) {
    for (int i = 1; i <= 10; ++i) which.push_back(i);
  }

  bool all = true;
  for (int i : which) {
    const auto& [name, fn] = criteria[static_cast<std::size_t>(i - 1)];
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const double limit = limits[i - 1];
    const bool pass = o.pass && seconds < limit;
    all = all && pass;
    std::cout << (pass ? "PASS" : "FAIL") << " criterion " << i << " (" << name << ") "
              << o.detail << " runtime=" << seconds << "s limit=" << limit << "s" << std::endl;
  }
  return all ? 0 : 1;
}
