#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "srl/extension.hpp"
#include "srl/partition.hpp"
#include "srl/polypart.hpp"

namespace srl {

inline constexpr int scenario_schema = 1;

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::size_t line, const std::string& what, const std::string& file = {});
  std::size_t line() const { return line_; }
  const std::string& detail() const { return detail_; }

 private:
  std::size_t line_;
  std::string detail_;
};

struct ScenarioConfig {
  int schema = scenario_schema;
  std::string scenario;
  std::vector<double> gammas;
  std::vector<double> Rs;
  double K = 16.0;
  double epsilon = 0.1;
  double alpha = 0.0;  // zero means K^{-epsilon}
  double mu = 1.0;
  std::vector<double> ps{3.25};
  std::vector<double> qs{2.7};
  std::size_t N = 0;  // zero means 4R
  std::size_t M = 0;  // zero means 2R rounded up to a power of two
  std::uint64_t seed = 1;
  std::size_t samples = 4;
  int D = 4;
  double delta = 0.4;
  std::string output = ".";

  double effective_alpha() const { return alpha > 0.0 ? alpha : std::pow(K, -epsilon); }
  std::size_t samples_for(double R) const;
  std::size_t grid_for(double R) const;
  // Throws ConfigError with line 0.
  void validate() const;
};

inline const std::vector<std::string> scenario_names{
    "norm-sweep", "broad-stats", "knapp-sweep", "geolemma-fuzz", "packet-audit", "partition-audit"};

// key = value lines, lists comma separated, '#' comments; "schema" must come first.
ScenarioConfig parse_config(std::istream& in);
ScenarioConfig parse_config_file(const std::string& path);
std::string format_config(const ScenarioConfig& c);

// The CSV for the scenario, rows in a fixed order that does not depend on the thread count.
std::string run_scenario(const ScenarioConfig& c);
// Writes <output>/<scenario>.csv and returns its path.
std::string run(const ScenarioConfig& c);

// Fuzzed families without a strongly separated pair, grown greedily from a random seed cap.
std::vector<std::size_t> random_non_separated_family(const CapFamily& family, const Surface& s,
                                                     std::mt19937_64& rng,
                                                     std::size_t max_size);

struct GeolemmaFuzz {
  std::size_t trials = 0;
  std::size_t holds = 0;
  std::size_t max_horizontal = 0;
  std::size_t max_vertical = 0;
  std::size_t largest_family = 0;
  char lemma_case = 'a';
};

GeolemmaFuzz geolemma_fuzz(double K, double gamma, double mu, std::size_t trials,
                           std::uint64_t seed);

// Sum of a few wide Gaussians plus a floor, on the cube grid.
std::vector<double> smooth_weights(const GridSpec& grid, std::uint64_t seed);

struct PartitionAuditResult {
  int D = 0;
  int degree = 0;
  std::size_t pieces = 0;
  double piece_ratio = 0.0;  // max / min piece mass
  bool best_effort = false;
  double wall_fraction = 0.0;
  std::size_t cells = 0;
  std::size_t fuzz_tubes = 0;
  std::size_t max_cells_per_tube = 0;
  std::size_t grazing = 0;
  std::size_t max_transversal = 0;
  std::size_t max_tangential_directions = 0;
  double tangential_bound = 0.0;  // 32 R^{1/2 + 2 delta}
  std::size_t unclassified = 0;
};

// Smooth weights, ham sandwich partition, wall, cells, incidences for evenly spaced tubes from
// all caps, and the tangent/transversal split for every tube.
PartitionAuditResult partition_audit(double R, std::size_t M, int D, double delta, double gamma,
                                     std::uint64_t seed, std::size_t fuzz_tubes = 200);

}  // namespace srl
