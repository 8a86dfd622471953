#pragma once

// Run configuration: strict JSON parsing, a canonical serialisation and the
// per-stage digests used as cache keys.

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "phstat/error.hpp"
#include "phstat/io.hpp"
#include "phstat/twobody.hpp"

namespace phstat {

using json = nlohmann::json;

inline constexpr const char* software_version = "0.3.0";

struct ClusterConfig {
  int n = 3;
  int l_max = 0;
  int k_max = 20;
  std::size_t count_limit = 400;
};

struct AnalysisWindow {
  std::string label;
  int n = 3;
  std::vector<int> ls{0};
  /// 1-based inclusive level ranks in the merged spectrum of the listed l.
  std::size_t first = 1;
  std::size_t last = 0;
  /// "per-l": unfold and analyse each l separately, then pool;
  /// "merged": treat the merged spectrum as one sequence.
  std::string pooling = "per-l";
};

struct SyntheticConfig {
  std::string label;
  std::string kind = "poisson";
  std::size_t size = 1000;
  std::size_t realizations = 1;
  std::uint64_t seed = 1;
  /// Central fraction of each realisation used for spacing measures.
  double window_fraction = 1.0;
};

struct AnalysisConfig {
  int unfold_degree = 6;
  double ps_bin_width = 0.2;
  double ps_max = 4.0;
  double ratio_bin_width = 0.25;
  double ratio_max = 5.0;
  std::vector<double> L_grid{1, 2, 3, 5, 7, 10, 15, 20};
  std::vector<std::string> measures{"ps", "brody", "is", "sigma2", "delta3", "ratio"};
  std::vector<std::string> references{"poisson-ps", "wigner-ps", "semipoisson-ps", "poisson-pr",
                                      "goe-pr"};
  std::vector<AnalysisWindow> windows;
};

struct RunConfig {
  std::string species = "Rb87";
  std::optional<double> mass_u;
  double energy_scale = 1.0;
  double c6_ev_a6 = 2803.0;
  // Calibration: either an explicit r_c or a target scattering length.
  std::optional<double> r_c;
  double target_as_bohr = 100.0;
  int target_nodes = 1;
  double calibration_tolerance = 1e-4;
  std::string core_model = "excluded";
  double core_height_k = 1e6;
  std::vector<ClusterConfig> clusters;
  double omega_r_min_over_rc = 0.3;
  double omega_r_max = 1e4;
  int omega_points = 400;
  std::optional<double> solver_r_max;
  double steps_per_radian = 20.0;
  double wall_spacings = 3.0;
  double convergence_fraction = 0.05;
  AnalysisConfig analysis;
  std::vector<SyntheticConfig> synthetic;
  std::string output_dir = "out";
};

namespace detail {

// Rejects keys outside `allowed` so that typos fail loudly.
inline void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  if constexpr (std::is_unsigned_v<T>) {
    if (!j.at(key).is_number_unsigned())
      throw ConfigError(where + "." + key + ": expected a nonnegative integer");
  }
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

template <class T>
void read_opt(const json& j, const char* key, std::optional<T>& out, const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  T v{};
  read(j, key, v, where);
  out = v;
}

inline json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace detail

inline void validate(const RunConfig& c) {
  if (c.clusters.empty()) throw ConfigError("config: clusters must not be empty");
  std::set<int> sizes;
  for (const auto& cl : c.clusters) {
    if (cl.n < 3 || cl.l_max < 0 || cl.k_max < 1 || cl.count_limit < 1)
      throw ConfigError("config: cluster needs n >= 3, l_max >= 0, k_max >= 1, count_limit >= 1");
    if (!sizes.insert(cl.n).second) throw ConfigError("config: duplicate cluster size");
  }
  if (c.core_model != "excluded" && c.core_model != "finite_barrier")
    throw ConfigError("config: core.model must be 'excluded' or 'finite_barrier'");
  if (!(c.c6_ev_a6 >= 0.0) || !(c.target_as_bohr > 0.0) || c.target_nodes < 0)
    throw ConfigError("config: need c6 >= 0, target a_s > 0, target_nodes >= 0");
  if (c.r_c && !(*c.r_c > 0.0)) throw ConfigError("config: r_c must be positive");
  if (!(c.omega_r_min_over_rc > 0.0) || !(c.omega_r_max > 0.0) || c.omega_points < 4)
    throw ConfigError("config: invalid omega grid");
  if (c.solver_r_max && !(*c.solver_r_max > 0.0)) throw ConfigError("config: solver r_max must be positive");
  if (!(c.steps_per_radian > 0.0)) throw ConfigError("config: steps_per_radian must be positive");
  const auto& a = c.analysis;
  if (a.unfold_degree < 1 || !(a.ps_bin_width > 0.0) || !(a.ratio_bin_width > 0.0))
    throw ConfigError("config: invalid analysis binning");
  static const std::set<std::string> measures{"ps", "brody", "is", "sigma2", "delta3", "ratio"};
  for (const auto& m : a.measures)
    if (!measures.count(m)) throw ConfigError("config: unknown measure '" + m + "'");
  std::set<std::string> labels;
  for (const auto& w : a.windows) {
    if (w.label.empty() || !labels.insert(w.label).second)
      throw ConfigError("config: window labels must be unique and non-empty");
    if (!sizes.count(w.n)) throw ConfigError("config: window '" + w.label + "' names an unknown N");
    if (w.first < 1 || w.last < w.first + 2)
      throw ConfigError("config: window '" + w.label + "' needs 1 <= first and last >= first + 2");
    if (w.ls.empty()) throw ConfigError("config: window '" + w.label + "' lists no l");
    if (w.pooling != "per-l" && w.pooling != "merged")
      throw ConfigError("config: window pooling must be 'per-l' or 'merged'");
  }
  for (const auto& s : c.synthetic) {
    if (s.label.empty() || !labels.insert(s.label).second)
      throw ConfigError("config: synthetic labels must be unique, non-empty and distinct from windows");
    if (s.kind != "poisson" && s.kind != "picket" && s.kind != "goe" && s.kind != "semipoisson")
      throw ConfigError("config: unknown synthetic kind '" + s.kind + "'");
    if (s.size < 10 || s.realizations < 1 || !(s.window_fraction > 0.0 && s.window_fraction <= 1.0))
      throw ConfigError("config: synthetic needs size >= 10, realizations >= 1, 0 < window_fraction <= 1");
  }
}

inline RunConfig parse_config(const json& j) {
  using detail::check_keys;
  using detail::read;
  RunConfig c;
  check_keys(j, {"species", "mass_u", "energy_scale", "c6_ev_a6", "calibration", "core", "clusters",
                 "omega_grid", "solver", "analysis", "synthetic", "output_dir"},
             "config");
  read(j, "species", c.species, "config");
  detail::read_opt(j, "mass_u", c.mass_u, "config");
  read(j, "energy_scale", c.energy_scale, "config");
  read(j, "c6_ev_a6", c.c6_ev_a6, "config");
  read(j, "output_dir", c.output_dir, "config");
  if (j.contains("calibration")) {
    const auto& k = j.at("calibration");
    check_keys(k, {"r_c", "target_as_bohr", "target_nodes", "rel_tolerance"}, "calibration");
    detail::read_opt(k, "r_c", c.r_c, "calibration");
    read(k, "target_as_bohr", c.target_as_bohr, "calibration");
    read(k, "target_nodes", c.target_nodes, "calibration");
    read(k, "rel_tolerance", c.calibration_tolerance, "calibration");
  }
  if (j.contains("core")) {
    const auto& k = j.at("core");
    check_keys(k, {"model", "height_k"}, "core");
    read(k, "model", c.core_model, "core");
    read(k, "height_k", c.core_height_k, "core");
  }
  if (j.contains("clusters")) {
    if (!j.at("clusters").is_array()) throw ConfigError("clusters: expected an array");
    for (const auto& e : j.at("clusters")) {
      check_keys(e, {"n", "l_max", "k_max", "count_limit"}, "clusters[]");
      ClusterConfig cl;
      read(e, "n", cl.n, "clusters[]");
      read(e, "l_max", cl.l_max, "clusters[]");
      read(e, "k_max", cl.k_max, "clusters[]");
      read(e, "count_limit", cl.count_limit, "clusters[]");
      c.clusters.push_back(cl);
    }
  }
  if (j.contains("omega_grid")) {
    const auto& k = j.at("omega_grid");
    check_keys(k, {"r_min_over_rc", "r_max", "points"}, "omega_grid");
    read(k, "r_min_over_rc", c.omega_r_min_over_rc, "omega_grid");
    read(k, "r_max", c.omega_r_max, "omega_grid");
    read(k, "points", c.omega_points, "omega_grid");
  }
  if (j.contains("solver")) {
    const auto& k = j.at("solver");
    check_keys(k, {"r_max", "steps_per_radian", "wall_spacings", "convergence_fraction"}, "solver");
    detail::read_opt(k, "r_max", c.solver_r_max, "solver");
    read(k, "steps_per_radian", c.steps_per_radian, "solver");
    read(k, "wall_spacings", c.wall_spacings, "solver");
    read(k, "convergence_fraction", c.convergence_fraction, "solver");
  }
  if (j.contains("analysis")) {
    const auto& k = j.at("analysis");
    auto& a = c.analysis;
    check_keys(k, {"unfold_degree", "ps_bin_width", "ps_max", "ratio_bin_width", "ratio_max", "L_grid",
                   "measures", "references", "windows"},
               "analysis");
    read(k, "unfold_degree", a.unfold_degree, "analysis");
    read(k, "ps_bin_width", a.ps_bin_width, "analysis");
    read(k, "ps_max", a.ps_max, "analysis");
    read(k, "ratio_bin_width", a.ratio_bin_width, "analysis");
    read(k, "ratio_max", a.ratio_max, "analysis");
    read(k, "L_grid", a.L_grid, "analysis");
    read(k, "measures", a.measures, "analysis");
    read(k, "references", a.references, "analysis");
    if (k.contains("windows")) {
      for (const auto& e : k.at("windows")) {
        check_keys(e, {"label", "n", "ls", "first", "last", "pooling"}, "windows[]");
        AnalysisWindow w;
        read(e, "label", w.label, "windows[]");
        read(e, "n", w.n, "windows[]");
        read(e, "ls", w.ls, "windows[]");
        read(e, "first", w.first, "windows[]");
        read(e, "last", w.last, "windows[]");
        read(e, "pooling", w.pooling, "windows[]");
        a.windows.push_back(w);
      }
    }
  }
  if (j.contains("synthetic")) {
    for (const auto& e : j.at("synthetic")) {
      check_keys(e, {"label", "kind", "size", "realizations", "seed", "window_fraction"}, "synthetic[]");
      SyntheticConfig s;
      read(e, "label", s.label, "synthetic[]");
      read(e, "kind", s.kind, "synthetic[]");
      read(e, "size", s.size, "synthetic[]");
      read(e, "realizations", s.realizations, "synthetic[]");
      read(e, "seed", s.seed, "synthetic[]");
      read(e, "window_fraction", s.window_fraction, "synthetic[]");
      c.synthetic.push_back(s);
    }
  }
  validate(c);
  return c;
}

inline RunConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return parse_config(j);
}

// Canonical JSON pieces; every field is written, defaults included, so two
// configs that mean the same run serialise identically.

inline json calibration_json(const RunConfig& c) {
  return {{"species", c.species},
          {"mass_u", detail::opt_json(c.mass_u)},
          {"energy_scale", c.energy_scale},
          {"c6_ev_a6", c.c6_ev_a6},
          {"calibration",
           {{"r_c", detail::opt_json(c.r_c)},
            {"target_as_bohr", c.target_as_bohr},
            {"target_nodes", c.target_nodes},
            {"rel_tolerance", c.calibration_tolerance}}},
          {"core", {{"model", c.core_model}, {"height_k", c.core_height_k}}}};
}

inline json omega_grid_json(const RunConfig& c) {
  return {{"r_min_over_rc", c.omega_r_min_over_rc}, {"r_max", c.omega_r_max}, {"points", c.omega_points}};
}

inline json solver_json(const RunConfig& c) {
  return {{"r_max", detail::opt_json(c.solver_r_max)},
          {"steps_per_radian", c.steps_per_radian},
          {"wall_spacings", c.wall_spacings},
          {"convergence_fraction", c.convergence_fraction}};
}

inline json analysis_json(const AnalysisConfig& a) {
  json windows = json::array();
  for (const auto& w : a.windows)
    windows.push_back({{"label", w.label}, {"n", w.n}, {"ls", w.ls}, {"first", w.first},
                       {"last", w.last}, {"pooling", w.pooling}});
  return {{"unfold_degree", a.unfold_degree}, {"ps_bin_width", a.ps_bin_width},
          {"ps_max", a.ps_max},               {"ratio_bin_width", a.ratio_bin_width},
          {"ratio_max", a.ratio_max},         {"L_grid", a.L_grid},
          {"measures", a.measures},           {"references", a.references},
          {"windows", windows}};
}

inline json synthetic_json(const SyntheticConfig& s) {
  return {{"label", s.label}, {"kind", s.kind}, {"size", s.size}, {"realizations", s.realizations},
          {"seed", s.seed}, {"window_fraction", s.window_fraction}};
}

inline json to_json(const RunConfig& c) {
  json j = calibration_json(c);
  json clusters = json::array();
  for (const auto& cl : c.clusters)
    clusters.push_back({{"n", cl.n}, {"l_max", cl.l_max}, {"k_max", cl.k_max}, {"count_limit", cl.count_limit}});
  j["clusters"] = clusters;
  j["omega_grid"] = omega_grid_json(c);
  j["solver"] = solver_json(c);
  j["analysis"] = analysis_json(c.analysis);
  json syn = json::array();
  for (const auto& s : c.synthetic) syn.push_back(synthetic_json(s));
  j["synthetic"] = syn;
  j["output_dir"] = c.output_dir;
  return j;
}

/// Sorted keys, two-space indent, trailing newline.
inline std::string canonical(const json& j) { return j.dump(2) + "\n"; }

inline std::string digest(const json& j) { return io::sha256_hex(canonical(j)); }

/// Everything that affects results; the output directory does not, so runs
/// into different directories stay byte-identical.
inline json result_config(const RunConfig& c) {
  json j = to_json(c);
  j.erase("output_dir");
  return j;
}

inline std::string config_hash(const RunConfig& c) { return digest(result_config(c)); }

inline CoreModel core_model_of(const RunConfig& c) {
  return c.core_model == "finite_barrier" ? CoreModel::finite_barrier : CoreModel::excluded;
}

}  // namespace phstat
