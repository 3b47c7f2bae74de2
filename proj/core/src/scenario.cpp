#include "srl/scenario.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>

#include "srl/broad.hpp"
#include "srl/wavepacket.hpp"

namespace srl {

namespace {

std::string with_line(std::size_t line, const std::string& what, const std::string& file) {
  std::string prefix = file.empty() ? "" : file + ":";
  if (line > 0) prefix += (file.empty() ? "line " : "") + std::to_string(line) + ":";
  return prefix.empty() ? what : prefix + " " + what;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::optional<double> parse_double(const std::string& s) {
  if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<std::uint64_t> parse_unsigned(const std::string& s) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

bool perfect_square(double R) {
  const double r = std::round(std::sqrt(R));
  return r >= 1.0 && r * r == R;
}

// Key whose value is wrong, and why; nullopt when the configuration is valid.
std::optional<std::pair<std::string, std::string>> problem(const ScenarioConfig& c) {
  using P = std::pair<std::string, std::string>;
  if (c.schema != scenario_schema) return P{"schema", "unsupported schema version"};
  if (std::find(scenario_names.begin(), scenario_names.end(), c.scenario) == scenario_names.end()) {
    return P{"scenario", "unknown scenario '" + c.scenario + "'"};
  }
  if (c.gammas.empty()) return P{"gamma", "gamma list is empty"};
  for (double g : c.gammas) {
    if (!(std::abs(g) <= 1.0)) return P{"gamma", "gamma values must satisfy |gamma| <= 1"};
  }
  const bool needs_R = c.scenario != "geolemma-fuzz";
  if (needs_R && c.Rs.empty()) return P{"R", "R list is empty"};
  for (double R : c.Rs) {
    if (!(R >= 1.0)) return P{"R", "R values must be >= 1"};
    if ((c.scenario == "packet-audit" || c.scenario == "partition-audit") && !perfect_square(R)) {
      return P{"R", "R values must be perfect squares for this scenario"};
    }
  }
  if (!(c.K >= 1.0)) return P{"K", "K must be >= 1"};
  if (c.scenario == "geolemma-fuzz" && (c.K < 20.0 || c.K != std::floor(c.K))) {
    return P{"K", "geolemma-fuzz needs an integer K >= 20"};
  }
  if (!(c.epsilon > 0.0 && c.epsilon < 1.0)) return P{"epsilon", "epsilon must lie in (0, 1)"};
  if (!(c.alpha >= 0.0)) return P{"alpha", "alpha must be >= 0 (0 selects K^-epsilon)"};
  if (!(c.mu >= 1.0 && c.mu <= c.K * c.K)) return P{"mu", "mu must lie in [1, K^2]"};
  if (c.ps.empty()) return P{"p", "p list is empty"};
  for (double p : c.ps) {
    if (!(p >= 1.0)) return P{"p", "p values must be >= 1"};
  }
  if (c.qs.empty()) return P{"q", "q list is empty"};
  for (double q : c.qs) {
    if (!(q > 2.0)) return P{"q", "q values must be > 2"};
  }
  if (c.M != 0 && !std::has_single_bit(c.M)) return P{"M", "M must be a power of two"};
  if (c.samples == 0) return P{"samples", "samples must be positive"};
  if (c.scenario == "partition-audit" && c.D != 2 && c.D != 4 && c.D != 8 && c.D != 16) {
    return P{"D", "D must be one of 2, 4, 8, 16"};
  }
  if (!(c.delta > 0.0 && c.delta < 0.5)) return P{"delta", "delta must lie in (0, 1/2)"};
  if (c.output.empty()) return P{"output", "output directory is empty"};
  return std::nullopt;
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a * 0x9E3779B97F4A7C15ULL + b + 0x632BE59BD9B4E019ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::string num(double v) {
  std::ostringstream s;
  s.precision(10);
  s << v;
  return s.str();
}

class CsvOut {
 public:
  explicit CsvOut(const ScenarioConfig& c) : c_(c) {
    out_ << "scenario,seed,gamma,K,R,alpha,mu,grid,sample,quantity,p,q,value\n";
  }

  struct Row {
    double gamma = 0.0;
    std::string R;
    std::string grid;
    std::string sample;
    std::string quantity;
    std::string p;
    std::string q;
    std::string value;
  };

  void add(const Row& r) {
    out_ << c_.scenario << ',' << c_.seed << ',' << num(r.gamma) << ',' << num(c_.K) << ','
         << r.R << ',' << num(c_.effective_alpha()) << ',' << num(c_.mu) << ',' << r.grid << ','
         << r.sample << ',' << r.quantity << ',' << r.p << ',' << r.q << ',' << r.value << '\n';
  }
  std::string str() const { return out_.str(); }

 private:
  const ScenarioConfig& c_;
  std::ostringstream out_;
};

std::string grid_tag(std::size_t N, std::size_t M) {
  return "N=" + std::to_string(N) + ";M=" + std::to_string(M);
}

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

void norm_sweep(const ScenarioConfig& c, CsvOut& csv) {
  for (double gamma : c.gammas) {
    // ratios[p][q][R]
    std::vector<std::vector<std::vector<double>>> ratios(
        c.ps.size(), std::vector<std::vector<double>>(c.qs.size()));
    for (std::size_t ir = 0; ir < c.Rs.size(); ++ir) {
      const double R = c.Rs[ir];
      const std::size_t N = c.samples_for(R);
      const std::size_t M = c.grid_for(R);
      std::vector<std::vector<std::vector<double>>> per(
          c.ps.size(), std::vector<std::vector<double>>(c.qs.size()));
      for (std::size_t s = 0; s < c.samples; ++s) {
        const SampledFunction f = random_gaussian(N, mix(c.seed, ir * 1000 + s));
        const std::vector<double> norms = extension_norms(f, gamma, R, M, c.ps);
        const double l2 = f.l2_norm();
        const double linf = f.linf_norm();
        for (std::size_t ip = 0; ip < c.ps.size(); ++ip) {
          csv.add({gamma, num(R), grid_tag(N, M), std::to_string(s), "norm", num(c.ps[ip]), "",
                   num(norms[ip])});
          for (std::size_t iq = 0; iq < c.qs.size(); ++iq) {
            const double q = c.qs[iq];
            const double rhs = std::pow(l2, 2.0 / q) * std::pow(linf, 1.0 - 2.0 / q);
            const double ratio = norms[ip] / rhs;
            per[ip][iq].push_back(ratio);
            csv.add({gamma, num(R), grid_tag(N, M), std::to_string(s), "ratio", num(c.ps[ip]),
                     num(q), num(ratio)});
          }
        }
      }
      for (std::size_t ip = 0; ip < c.ps.size(); ++ip) {
        for (std::size_t iq = 0; iq < c.qs.size(); ++iq) ratios[ip][iq].push_back(mean(per[ip][iq]));
      }
    }
    if (c.Rs.size() < 2) continue;
    for (std::size_t ip = 0; ip < c.ps.size(); ++ip) {
      for (std::size_t iq = 0; iq < c.qs.size(); ++iq) {
        csv.add({gamma, "fit", "", "mean", "ratio_exponent", num(c.ps[ip]), num(c.qs[iq]),
                 num(fitted_exponent(c.Rs, ratios[ip][iq]))});
      }
    }
  }
}

void broad_stats(const ScenarioConfig& c, CsvOut& csv) {
  for (double gamma : c.gammas) {
    const Surface surface(gamma);
    std::vector<std::vector<double>> ratios(c.ps.size());
    for (std::size_t ir = 0; ir < c.Rs.size(); ++ir) {
      const double R = c.Rs[ir];
      const std::size_t N = c.samples_for(R);
      const std::size_t M = c.grid_for(R);
      const ScaleParams params{R, c.K, c.epsilon, c.effective_alpha(), c.mu};
      std::vector<std::vector<double>> per(c.ps.size());
      for (std::size_t s = 0; s < c.samples; ++s) {
        const SampledFunction f = random_gaussian(N, mix(c.seed, ir * 1000 + s));
        const BroadNorms b = broad_norms(f, surface, params, M, c.ps, StripMode::plain, true);
        const double rhs = std::pow(f.l2_norm(), 12.0 / 13.0) * std::pow(f.linf_norm(), 1.0 / 13.0);
        const std::string tag = grid_tag(N, M);
        const std::string ss = std::to_string(s);
        for (std::size_t ip = 0; ip < c.ps.size(); ++ip) {
          const std::string p = num(c.ps[ip]);
          csv.add({gamma, num(R), tag, ss, "full_norm", p, "", num(b.full[ip])});
          csv.add({gamma, num(R), tag, ss, "broad_norm", p, "", num(b.broad[ip])});
          csv.add({gamma, num(R), tag, ss, "broad_ratio", p, "", num(b.broad[ip] / rhs)});
          csv.add({gamma, num(R), tag, ss, "strip_lp_norm", p, "", num(b.strip_lp[ip])});
          csv.add({gamma, num(R), tag, ss, "strip_linf_norm", p, "", num(b.strip_linf[ip])});
          per[ip].push_back(b.broad[ip] / rhs);
        }
        csv.add({gamma, num(R), tag, ss, "rhs", "", "", num(rhs)});
        static constexpr const char* names[4] = {"count_A", "count_B", "count_C", "count_D"};
        for (int k = 0; k < 4; ++k) {
          csv.add({gamma, num(R), tag, ss, names[k], "", "", std::to_string(b.counts[k])});
        }
      }
      for (std::size_t ip = 0; ip < c.ps.size(); ++ip) ratios[ip].push_back(mean(per[ip]));
    }
    if (c.Rs.size() < 2) continue;
    for (std::size_t ip = 0; ip < c.ps.size(); ++ip) {
      csv.add({gamma, "fit", "", "mean", "broad_ratio_exponent", num(c.ps[ip]), "",
               num(fitted_exponent(c.Rs, ratios[ip]))});
    }
  }
}

void knapp_scenario(const ScenarioConfig& c, CsvOut& csv) {
  for (double gamma : c.gammas) {
    const std::vector<KnappPoint> pts = knapp_sweep(c.Rs, c.ps, gamma);
    for (const KnappPoint& k : pts) {
      const std::size_t N = knapp(k.R, {0.5, 0.5}).nx();
      for (std::size_t ip = 0; ip < c.ps.size(); ++ip) {
        csv.add({gamma, num(k.R), grid_tag(N, k.M), "", "knapp_norm", num(c.ps[ip]), "",
                 num(k.norms[ip])});
      }
    }
    if (c.Rs.size() < 2) continue;
    for (std::size_t ip = 0; ip < c.ps.size(); ++ip) {
      std::vector<double> v;
      for (const KnappPoint& k : pts) v.push_back(k.norms[ip]);
      const double p = c.ps[ip];
      csv.add({gamma, "fit", "", "", "knapp_exponent", num(p), "", num(fitted_exponent(c.Rs, v))});
      csv.add({gamma, "fit", "", "", "predicted_exponent", num(p), "", num(-1.0 + 2.0 / p)});
      for (double q : c.qs) {
        const double line = 2.0 * q / (q - 1.0);
        csv.add({gamma, "fit", "", "", "above_2q_prime", num(p), num(q), p > line ? "1" : "0"});
      }
    }
  }
}

void geolemma_scenario(const ScenarioConfig& c, CsvOut& csv) {
  for (std::size_t ig = 0; ig < c.gammas.size(); ++ig) {
    const double gamma = c.gammas[ig];
    const GeolemmaFuzz g = geolemma_fuzz(c.K, gamma, c.mu, c.samples, mix(c.seed, ig));
    csv.add({gamma, "", "", "", "case", "", "", std::string(1, g.lemma_case)});
    csv.add({gamma, "", "", "", "trials", "", "", std::to_string(g.trials)});
    csv.add({gamma, "", "", "", "holds", "", "", std::to_string(g.holds)});
    csv.add({gamma, "", "", "", "max_horizontal", "", "", std::to_string(g.max_horizontal)});
    csv.add({gamma, "", "", "", "max_vertical", "", "", std::to_string(g.max_vertical)});
    csv.add({gamma, "", "", "", "largest_family", "", "", std::to_string(g.largest_family)});
  }
}

void packet_scenario(const ScenarioConfig& c, CsvOut& csv) {
  for (double gamma : c.gammas) {
    for (std::size_t ir = 0; ir < c.Rs.size(); ++ir) {
      const double R = c.Rs[ir];
      const auto side = static_cast<std::size_t>(std::lround(std::sqrt(R)));
      std::size_t N = c.samples_for(R);
      N = (N + side - 1) / side * side;
      const SampledFunction f = random_gaussian(N, mix(c.seed, ir));
      PacketConfig pc;
      pc.delta = c.delta;
      const PacketDecomposition dec(f, Surface(gamma), R, pc);
      const PacketAudit a = verify_packets(dec);
      const std::string tag = "N=" + std::to_string(N);
      const auto row = [&](const std::string& q, double v) {
        csv.add({gamma, num(R), tag, "", q, "", "", num(v)});
      };
      row("tubes", static_cast<double>(a.tube_count));
      row("containment_failures", static_cast<double>(a.containment_failures));
      row("off_tube_ratio", a.off_tube_ratio);
      row("off_tube_threshold", a.off_tube_threshold);
      row("reconstruction_error", a.reconstruction_error);
      row("orthogonality", a.orthogonality);
      row("constant", a.constant);
    }
  }
}

void partition_scenario(const ScenarioConfig& c, CsvOut& csv) {
  for (double gamma : c.gammas) {
    for (std::size_t ir = 0; ir < c.Rs.size(); ++ir) {
      const double R = c.Rs[ir];
      const std::size_t M = c.M ? c.M : 64;
      const PartitionAuditResult a = partition_audit(R, M, c.D, c.delta, gamma, mix(c.seed, ir));
      const std::string tag = "M=" + std::to_string(M);
      const auto row = [&](const std::string& q, double v) {
        csv.add({gamma, num(R), tag, "", q, "", "", num(v)});
      };
      row("D", a.D);
      row("degree", a.degree);
      row("pieces", static_cast<double>(a.pieces));
      row("piece_ratio", a.piece_ratio);
      row("best_effort", a.best_effort ? 1.0 : 0.0);
      row("wall_fraction", a.wall_fraction);
      row("cells", static_cast<double>(a.cells));
      row("max_cells_per_tube", static_cast<double>(a.max_cells_per_tube));
      row("grazing_tubes", static_cast<double>(a.grazing));
      row("max_transversal", static_cast<double>(a.max_transversal));
      row("max_tangential_directions", static_cast<double>(a.max_tangential_directions));
      row("tangential_bound", a.tangential_bound);
      row("unclassified", static_cast<double>(a.unclassified));
    }
  }
}

}  // namespace

ConfigError::ConfigError(std::size_t line, const std::string& what, const std::string& file)
    : std::runtime_error(with_line(line, what, file)), line_(line), detail_(what) {}

std::size_t ScenarioConfig::samples_for(double R) const {
  return N ? N : static_cast<std::size_t>(std::ceil(4.0 * R));
}

std::size_t ScenarioConfig::grid_for(double R) const {
  return M ? M : std::bit_ceil(static_cast<std::size_t>(std::ceil(2.0 * R)));
}

void ScenarioConfig::validate() const {
  if (const auto p = problem(*this)) throw ConfigError(0, p->first + ": " + p->second);
}

ScenarioConfig parse_config(std::istream& in) {
  ScenarioConfig c;
  std::map<std::string, std::size_t> seen;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError(line, "expected 'key = value'");
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (key.empty()) throw ConfigError(line, "missing key");
    if (seen.count(key)) {
      throw ConfigError(line, "duplicate key '" + key + "' (first on line " +
                                  std::to_string(seen[key]) + ")");
    }
    if (seen.empty() && key != "schema") throw ConfigError(line, "the first entry must be 'schema'");
    seen[key] = line;

    const auto number = [&]() {
      const auto v = parse_double(value);
      if (!v) throw ConfigError(line, "bad number '" + value + "' for " + key);
      return *v;
    };
    const auto count = [&]() {
      const auto v = parse_unsigned(value);
      if (!v) throw ConfigError(line, "bad non-negative integer '" + value + "' for " + key);
      return *v;
    };
    const auto list = [&]() {
      std::vector<double> out;
      if (value.empty()) return out;
      std::stringstream ss(value);
      std::string item;
      while (std::getline(ss, item, ',')) {
        const std::string t = trim(item);
        const auto v = parse_double(t);
        if (!v) throw ConfigError(line, "bad number '" + t + "' in " + key + " list");
        out.push_back(*v);
      }
      return out;
    };

    if (key == "schema") {
      const auto v = count();
      if (v != static_cast<std::uint64_t>(scenario_schema)) {
        throw ConfigError(line, "unsupported schema version " + value);
      }
      c.schema = static_cast<int>(v);
    } else if (key == "scenario") {
      c.scenario = value;
    } else if (key == "gamma") {
      c.gammas = list();
    } else if (key == "R") {
      c.Rs = list();
    } else if (key == "K") {
      c.K = number();
    } else if (key == "epsilon") {
      c.epsilon = number();
    } else if (key == "alpha") {
      c.alpha = number();
    } else if (key == "mu") {
      c.mu = number();
    } else if (key == "p") {
      c.ps = list();
    } else if (key == "q") {
      c.qs = list();
    } else if (key == "N") {
      c.N = count();
    } else if (key == "M") {
      c.M = count();
    } else if (key == "seed") {
      c.seed = count();
    } else if (key == "samples") {
      c.samples = count();
    } else if (key == "D") {
      c.D = static_cast<int>(count());
    } else if (key == "delta") {
      c.delta = number();
    } else if (key == "output") {
      c.output = value;
    } else {
      throw ConfigError(line, "unknown key '" + key + "'");
    }
  }
  if (seen.empty()) throw ConfigError(line, "empty configuration");
  if (const auto p = problem(c)) {
    const auto it = seen.find(p->first);
    throw ConfigError(it != seen.end() ? it->second : line,
                      p->first + ": " + p->second +
                          (it == seen.end() ? " (key missing)" : ""));
  }
  return c;
}

ScenarioConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "cannot open " + path);
  try {
    return parse_config(in);
  } catch (const ConfigError& e) {
    throw ConfigError(e.line(), e.detail(), path);
  }
}

std::string format_config(const ScenarioConfig& c) {
  const auto join = [](const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + num(v[i]);
    return s;
  };
  std::ostringstream o;
  o << "schema = " << c.schema << '\n'
    << "scenario = " << c.scenario << '\n'
    << "gamma = " << join(c.gammas) << '\n'
    << "R = " << join(c.Rs) << '\n'
    << "K = " << num(c.K) << '\n'
    << "epsilon = " << num(c.epsilon) << '\n'
    << "alpha = " << num(c.alpha) << '\n'
    << "mu = " << num(c.mu) << '\n'
    << "p = " << join(c.ps) << '\n'
    << "q = " << join(c.qs) << '\n'
    << "N = " << c.N << '\n'
    << "M = " << c.M << '\n'
    << "seed = " << c.seed << '\n'
    << "samples = " << c.samples << '\n'
    << "D = " << c.D << '\n'
    << "delta = " << num(c.delta) << '\n'
    << "output = " << c.output << '\n';
  return o.str();
}

std::string run_scenario(const ScenarioConfig& c) {
  c.validate();
  CsvOut csv(c);
  if (c.scenario == "norm-sweep") {
    norm_sweep(c, csv);
  } else if (c.scenario == "broad-stats") {
    broad_stats(c, csv);
  } else if (c.scenario == "knapp-sweep") {
    knapp_scenario(c, csv);
  } else if (c.scenario == "geolemma-fuzz") {
    geolemma_scenario(c, csv);
  } else if (c.scenario == "packet-audit") {
    packet_scenario(c, csv);
  } else {
    partition_scenario(c, csv);
  }
  return csv.str();
}

std::string run(const ScenarioConfig& c) {
  const std::string body = run_scenario(c);
  std::filesystem::create_directories(c.output);
  const std::string path = (std::filesystem::path(c.output) / (c.scenario + ".csv")).string();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << body;
  return path;
}

std::vector<std::size_t> random_non_separated_family(const CapFamily& family, const Surface& s,
                                                     std::mt19937_64& rng,
                                                     std::size_t max_size) {
  const std::size_t n = family.caps.size();
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  const std::size_t seed = pick(rng);
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < n; ++i) {
    if (i != seed && !strongly_separated(s, family.caps[seed], family.caps[i], family.mu, family.K)) {
      candidates.push_back(i);
    }
  }
  std::shuffle(candidates.begin(), candidates.end(), rng);
  std::vector<std::size_t> out{seed};
  for (std::size_t i : candidates) {
    if (out.size() >= max_size) break;
    const bool ok = std::none_of(out.begin(), out.end(), [&](std::size_t j) {
      return strongly_separated(s, family.caps[i], family.caps[j], family.mu, family.K);
    });
    if (ok) out.push_back(i);
  }
  std::sort(out.begin(), out.end());
  return out;
}

GeolemmaFuzz geolemma_fuzz(double K, double gamma, double mu, std::size_t trials,
                           std::uint64_t seed) {
  const CapFamily family = make_caps(K, mu);
  const RaggedStrips ragged = make_ragged(family, gamma);
  const Surface surface(gamma);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> size(2, 2 * family.per_axis + 2);
  GeolemmaFuzz out;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::vector<std::size_t> sub = random_non_separated_family(family, surface, rng, size(rng));
    const GeometricCover cover = geometric_lemma_check(family, ragged, sub);
    ++out.trials;
    out.holds += cover.holds ? 1 : 0;
    out.lemma_case = cover.lemma_case;
    out.max_horizontal = std::max(out.max_horizontal, cover.horizontal_count);
    out.max_vertical = std::max(out.max_vertical, cover.vertical_count);
    out.largest_family = std::max(out.largest_family, sub.size());
  }
  return out;
}

std::vector<double> smooth_weights(const GridSpec& grid, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-grid.R, grid.R);
  std::vector<Vec3> centers(6);
  for (Vec3& c : centers) c = {u(rng), u(rng), u(rng)};
  const double width = 0.45 * grid.R;
  std::vector<double> w(grid.size());
  for (std::size_t i3 = 0; i3 < grid.M; ++i3) {
    for (std::size_t i2 = 0; i2 < grid.M; ++i2) {
      for (std::size_t i1 = 0; i1 < grid.M; ++i1) {
        const Vec3 p = grid.point(i1, i2, i3);
        double v = 0.05;
        for (const Vec3& c : centers) {
          const double d2 = (p[0] - c[0]) * (p[0] - c[0]) + (p[1] - c[1]) * (p[1] - c[1]) +
                            (p[2] - c[2]) * (p[2] - c[2]);
          v += std::exp(-d2 / (2.0 * width * width));
        }
        w[grid.index(i1, i2, i3)] = v;
      }
    }
  }
  return w;
}

PartitionAuditResult partition_audit(double R, std::size_t M, int D, double delta, double gamma,
                                     std::uint64_t seed, std::size_t fuzz_tubes) {
  const GridSpec grid{R, M};
  const std::vector<double> weights = smooth_weights(grid, seed);
  PartitionConfig pc;
  pc.seed = seed;
  const Partition part = ham_sandwich_partition(weights, grid, D, pc);
  PartitionAuditResult out;
  out.D = D;
  out.degree = part.polynomial.degree();
  out.pieces = part.piece_masses.size();
  const auto [lo, hi] = std::minmax_element(part.piece_masses.begin(), part.piece_masses.end());
  out.piece_ratio = *hi / *lo;
  out.best_effort = part.best_effort;

  std::vector<std::uint8_t> w = wall(part.polynomial, grid, delta);
  out.wall_fraction = static_cast<double>(std::count(w.begin(), w.end(), 1)) /
                      static_cast<double>(w.size());
  const CellDecomposition dec = cells(part.polynomial, grid, std::move(w));
  out.cells = dec.cell_count;

  const Surface surface(gamma);
  const std::vector<ThetaCap> caps = make_theta_caps(surface, R);
  std::vector<Tube> tubes;
  for (std::size_t th = 0; th < caps.size(); ++th) {
    const std::vector<Tube> t = make_tubes(caps[th], th, R, delta);
    tubes.insert(tubes.end(), t.begin(), t.end());
  }
  std::vector<Tube> fuzz;
  const std::size_t step = std::max<std::size_t>(1, tubes.size() / std::max<std::size_t>(1, fuzz_tubes));
  for (std::size_t k = 0; k < tubes.size() && fuzz.size() < fuzz_tubes; k += step) {
    fuzz.push_back(tubes[k]);
  }
  const Incidence inc = tube_cell_incidence(fuzz, dec);
  out.fuzz_tubes = fuzz.size();
  out.max_cells_per_tube = inc.max_cells_per_tube;
  out.grazing = inc.grazing;

  const TubeClassification cls = classify_tubes(tubes, part.polynomial, dec, delta);
  out.max_transversal = cls.max_transversal;
  out.max_tangential_directions = cls.max_tangential_directions;
  out.tangential_bound = 32.0 * std::pow(R, 0.5 + 2.0 * delta);
  for (const BallClassification& b : cls.balls) out.unclassified += b.unclassified.size();
  return out;
}

}  // namespace srl
