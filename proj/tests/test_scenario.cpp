#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include "srl/grid_io.hpp"
#include "srl/scenario.hpp"

using namespace srl;

namespace {

std::size_t error_line(const std::string& text) {
  std::istringstream in(text);
  try {
    parse_config(in);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return 0;
}

ScenarioConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

}  // namespace

TEST(Config, ParsesAndFormats) {
  const ScenarioConfig c = parse(
      "schema = 1\n"
      "# comment\n"
      "scenario = norm-sweep\n"
      "gamma = 0, 0.5, -1\n"
      "R = 16, 32\n"
      "p = 3.25, inf\n"
      "seed = 7   # trailing\n");
  EXPECT_EQ(c.gammas.size(), 3u);
  EXPECT_EQ(c.ps.size(), 2u);
  EXPECT_TRUE(std::isinf(c.ps[1]));
  EXPECT_EQ(c.seed, 7u);
  EXPECT_DOUBLE_EQ(c.effective_alpha(), std::pow(16.0, -0.1));
  EXPECT_EQ(c.grid_for(16), 32u);
  EXPECT_EQ(c.grid_for(20), 64u);
  EXPECT_EQ(c.samples_for(16), 64u);
  const ScenarioConfig back = parse(format_config(c));
  EXPECT_EQ(format_config(back), format_config(c));
}

TEST(Config, LinePreciseErrors) {
  EXPECT_EQ(error_line("schema = 1\nscenario = norm-sweep\ngamma =\nR = 16\n"), 3u);
  EXPECT_EQ(error_line("schema = 1\nscenario = norm-sweep\ngamma = 0\nR = 16\nbogus = 1\n"), 5u);
  EXPECT_EQ(error_line("scenario = norm-sweep\nschema = 1\n"), 1u);
  EXPECT_EQ(error_line("schema = 2\n"), 1u);
  EXPECT_EQ(error_line("schema = 1\nscenario = norm-sweep\ngamma = 0\nR = 16\nK = x\n"), 5u);
  EXPECT_EQ(error_line("schema = 1\nscenario = norm-sweep\ngamma = 0\ngamma = 1\n"), 4u);
  EXPECT_EQ(error_line("schema = 1\nscenario = norm-sweep\ngamma = 0, 2\nR = 16\n"), 3u);
  EXPECT_EQ(error_line("schema = 1\nscenario = packet-audit\ngamma = 0\nR = 20\n"), 4u);
  EXPECT_EQ(error_line("schema = 1\nscenario = norm-sweep\ngamma = 0\nR = 16\nq = 2\n"), 5u);
  EXPECT_EQ(error_line("schema = 1\nscenario = norm-sweep\ngamma = 0\nR = 16\nM = 48\n"), 5u);
  EXPECT_EQ(error_line("schema = 1\nscenario = nope\n"), 2u);
  EXPECT_EQ(error_line("schema = 1\nscenario = geolemma-fuzz\ngamma = 0\nK = 16\n"), 4u);
}

TEST(Config, EmptyGammaRejected) {
  ScenarioConfig c;
  c.scenario = "norm-sweep";
  c.Rs = {16};
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Scenario, DeterministicAcrossThreadCounts) {
  ScenarioConfig c;
  c.scenario = "broad-stats";
  c.gammas = {0.0, 0.5};
  c.Rs = {8, 16};
  c.samples = 2;
  c.seed = 99;
  setenv("SRL_THREADS", "1", 1);
  const std::string one = run_scenario(c);
  setenv("SRL_THREADS", "4", 1);
  const std::string four = run_scenario(c);
  unsetenv("SRL_THREADS");
  const std::string again = run_scenario(c);
  EXPECT_EQ(one, four);
  EXPECT_EQ(one, again);
  EXPECT_EQ(one.rfind("scenario,seed,gamma,K,R,alpha,mu,grid,", 0), 0u);
}

TEST(Scenario, NormSweepRows) {
  ScenarioConfig c;
  c.scenario = "norm-sweep";
  c.gammas = {0.5};
  c.Rs = {8, 16};
  c.samples = 2;
  const std::string csv = run_scenario(c);
  EXPECT_NE(csv.find(",ratio_exponent,3.25,2.7,"), std::string::npos);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 12) << line;
    EXPECT_EQ(line.rfind("norm-sweep,1,0.5,16,", 0), 0u) << line;
  }
}

TEST(Scenario, KnappExponent) {
  ScenarioConfig c;
  c.scenario = "knapp-sweep";
  c.gammas = {0.0};
  c.Rs = {16, 32, 64};
  c.ps = {4.0};
  const std::string csv = run_scenario(c);
  const auto pos = csv.find(",knapp_exponent,4,,");
  ASSERT_NE(pos, std::string::npos);
  const double e = std::stod(csv.substr(pos + std::string(",knapp_exponent,4,,").size()));
  EXPECT_NEAR(e, -0.5, 0.1);
}

TEST(Scenario, GeolemmaFuzz) {
  const GeolemmaFuzz g = geolemma_fuzz(20, 0.0, 1, 50, 3);
  EXPECT_EQ(g.trials, 50u);
  EXPECT_EQ(g.holds, 50u);
  EXPECT_EQ(g.lemma_case, 'b');
}

TEST(Scenario, NonSeparatedFamily) {
  const CapFamily f = make_caps(32, 1);
  const Surface s(0.5);
  std::mt19937_64 rng(5);
  for (int t = 0; t < 20; ++t) {
    const auto sub = random_non_separated_family(f, s, rng, 30);
    for (std::size_t i : sub) {
      for (std::size_t j : sub) ASSERT_FALSE(strongly_separated(s, f.caps[i], f.caps[j], 1, 32));
    }
  }
}

TEST(GridIo, RoundTrip) {
  Field3 f{GridSpec{8.0, 4}, {}};
  for (std::size_t i = 0; i < f.grid.size(); ++i) f.values.push_back({1.0 * i, -0.5 * i});
  std::stringstream ss;
  write_grid(ss, f, -0.25);
  const std::string bytes = ss.str();
  EXPECT_EQ(bytes.substr(0, 4), "SRL1");
  EXPECT_EQ(bytes.size(), 4u + 4u + 8u + 8u + 16u * 64u);
  const GridFile g = read_grid(ss);
  EXPECT_EQ(g.field.grid.M, 4u);
  EXPECT_DOUBLE_EQ(g.field.grid.R, 8.0);
  EXPECT_DOUBLE_EQ(g.gamma, -0.25);
  EXPECT_EQ(g.field.values, f.values);
  std::stringstream bad("SRL2");
  EXPECT_THROW(read_grid(bad), std::runtime_error);
}
