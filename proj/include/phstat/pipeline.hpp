#pragma once

// Staged pipeline: calibrate -> potential -> spectrum -> analyze, each stage
// cached under a digest of its inputs (including upstream digests), so
// editing analysis settings never re-runs an eigensolve.

#include <charconv>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "phstat/adiabatic.hpp"
#include "phstat/analysis.hpp"
#include "phstat/config.hpp"
#include "phstat/hyperradial.hpp"
#include "phstat/io.hpp"
#include "phstat/ph_basis.hpp"
#include "phstat/spectral.hpp"
#include "phstat/twobody.hpp"
#include "phstat/units.hpp"

namespace phstat {

namespace fs = std::filesystem;

/// Numeric CSV with one header row, as written by io::CsvWriter.
inline std::vector<std::vector<double>> parse_numeric_csv(const std::string& text,
                                                          std::vector<std::string>* header = nullptr) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (true) {
      const auto comma = line.find(',', pos);
      fields.push_back(line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (first) {
      first = false;
      if (header) *header = fields;
      continue;
    }
    std::vector<double> row;
    for (const auto& f : fields) {
      double v = 0.0;
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size())
        throw ConfigError("csv: cannot parse number '" + f + "'");
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Column `name` of a numeric CSV.
inline std::vector<double> csv_column(const std::string& text, const std::string& name) {
  std::vector<std::string> header;
  const auto rows = parse_numeric_csv(text, &header);
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ConfigError("csv: no column '" + name + "'");
  const auto k = static_cast<std::size_t>(it - header.begin());
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    if (k >= r.size()) throw ConfigError("csv: short row");
    out.push_back(r[k]);
  }
  return out;
}

struct StageRecord {
  std::string name;
  std::string key;
  bool cache_hit = false;
};

using FileSet = std::map<std::string, std::string>;  // relative path -> content

class Pipeline {
 public:
  explicit Pipeline(RunConfig cfg, std::ostream* log = &std::cerr)
      : cfg_(std::move(cfg)), out_(cfg_.output_dir), log_(log) {
    validate(cfg_);
    units_ = make_units(cfg_.species, cfg_.mass_u, cfg_.energy_scale);
  }

  const RunConfig& config() const { return cfg_; }
  const std::vector<StageRecord>& stages() const { return records_; }
  const fs::path& output_dir() const { return out_; }

  // ------------------------------------------------------------- stages

  /// Calibrated pair potential; cached as calibration.json.
  const TwoBodyPotential& calibrate() {
    if (potential_) return *potential_;
    const json key = calibration_json(cfg_);
    calibration_key_ = digest(key);
    const auto files = stage("calibrate", calibration_key_, [&] {
      TwoBodyPotential pot;
      const double c6 = units_.ev_to_internal(cfg_.c6_ev_a6);
      TuneOptions opt;
      opt.rel_tolerance = cfg_.calibration_tolerance;
      opt.core_height = cfg_.core_height_k;
      opt.core_model = core_model_of(cfg_);
      if (cfg_.r_c) {
        pot.r_c = *cfg_.r_c;
        pot.c6 = c6;
        pot.units = units_;
        pot.core_height = units_.kelvin_to_internal(cfg_.core_height_k);
        pot.core_model = opt.core_model;
      } else {
        pot = tune_hardcore(c6, units_.bohr_to_length(cfg_.target_as_bohr), cfg_.target_nodes,
                            units_, opt);
      }
      const auto sc = scattering_length(pot);
      json j{{"r_c", pot.r_c},
             {"a_s_angstrom", sc.a_s},
             {"a_s_bohr", units_.length_to_bohr(sc.a_s)},
             {"dimer_bound_states", sc.node_count},
             {"fit_residual", sc.fit_residual},
             {"tail_length", pot.tail_length()},
             {"c6_internal", pot.c6},
             {"hbar2_over_m", units_.hbar2_over_m},
             {"core_model", cfg_.core_model},
             {"energy_unit", "K x " + io::format_double(cfg_.energy_scale)}};
      return FileSet{{"calibration.json", canonical(j)}};
    });
    const json cal = json::parse(files.at("calibration.json"));
    TwoBodyPotential pot;
    pot.r_c = cal.at("r_c").get<double>();
    pot.c6 = units_.ev_to_internal(cfg_.c6_ev_a6);
    pot.units = units_;
    pot.core_height = units_.kelvin_to_internal(cfg_.core_height_k);
    pot.core_model = core_model_of(cfg_);
    potential_ = pot;
    return *potential_;
  }

  /// omega_l(r) for one (N, l), cached as potential/omega_N*_l*.csv.
  EffectivePotential potential(const ClusterConfig& cl, int l) {
    const TwoBodyPotential& pot = calibrate();
    const std::string tag = "N" + std::to_string(cl.n) + "_l" + std::to_string(l);
    const json key{{"upstream", calibration_key_}, {"n", cl.n}, {"l", l}, {"k_max", cl.k_max},
                   {"omega_grid", omega_grid_json(cfg_)}};
    const std::string k = digest(key);
    potential_keys_[tag] = k;
    const BasisSpec spec(cl.n, l, cl.k_max);
    const std::string csv_name = "potential/omega_" + tag + ".csv";
    const auto files = stage("potential_" + tag, k, [&] {
      const auto f = overlap_factors(spec);
      const auto grid = log_grid(cfg_.omega_r_min_over_rc * pot.r_c, cfg_.omega_r_max, cfg_.omega_points);
      const auto ep = effective_potential(spec, pot, f, grid);
      io::CsvWriter w({"r", "omega"});
      for (std::size_t i = 0; i < ep.size(); ++i) w.row(std::vector<double>{ep.r_grid[i], ep.omega[i]});
      json side{{"n", cl.n},
                {"l", l},
                {"k_max", cl.k_max},
                {"alpha", spec.alpha()},
                {"beta", spec.beta()},
                {"calL", spec.calL()},
                {"construction_mode", to_string(ep.mode)},
                {"omega_min", ep.min_value()},
                {"r_at_min", ep.r_grid[ep.argmin()]},
                {"asymptotic_ratio", ep.asymptotic_ratio()},
                {"max_quadrature_shift", ep.max_quadrature_shift},
                {"non_k0_minima", ep.non_k0_minima},
                {"overlap_f2", f.f2}};
      return FileSet{{csv_name, w.str()}, {"potential/omega_" + tag + ".json", canonical(side)}};
    });
    EffectivePotential ep;
    ep.spec = spec;
    ep.hbar2_over_m = units_.hbar2_over_m;
    ep.mode = l == 0 ? ConstructionMode::full_diagonalization : ConstructionMode::diagonal_only;
    ep.r_grid = csv_column(files.at(csv_name), "r");
    ep.omega = csv_column(files.at(csv_name), "omega");
    return ep;
  }

  /// Levels for one (N, l), cached as spectra/levels_N*_l*.csv.
  std::vector<double> spectrum(const ClusterConfig& cl, int l) {
    const std::string tag = "N" + std::to_string(cl.n) + "_l" + std::to_string(l);
    const EffectivePotential ep = potential(cl, l);
    const json key{{"upstream", potential_keys_.at(tag)}, {"count_limit", cl.count_limit},
                   {"solver", solver_json(cfg_)}};
    const std::string k = digest(key);
    spectrum_keys_[tag] = k;
    const std::string csv_name = "spectra/levels_" + tag + ".csv";
    const auto files = stage("spectrum_" + tag, k, [&] {
      LevelSequence seq;
      json side{{"n", cl.n}, {"l", l}};
      if (ep.min_value() >= ep.omega.back()) {
        seq.n_particles = cl.n;
        seq.l = l;
        seq.warnings.push_back("omega_l has no well below its r_max value");
      } else {
        SolverOptions so;
        so.r_max = cfg_.solver_r_max;
        so.steps_per_radian = cfg_.steps_per_radian;
        so.wall_spacings = cfg_.wall_spacings;
        so.convergence_fraction = cfg_.convergence_fraction;
        seq = bound_states(ep, cl.count_limit, units_, so);
        side["grid"] = {{"r_min", seq.grid.r_min}, {"r_max", seq.grid.r_max},
                        {"n_points", seq.grid.n_points}, {"step", seq.grid.step()}};
        side["wall_threshold"] = seq.wall_threshold;
      }
      side["levels"] = seq.size();
      side["candidates"] = seq.candidates;
      side["dropped_wall"] = seq.dropped_wall;
      side["dropped_unconverged"] = seq.dropped_unconverged;
      side["truncated_by_limit"] = seq.truncated_by_limit;
      side["warnings"] = seq.warnings;
      io::CsvWriter w({"n", "E", "convergence_estimate"});
      for (std::size_t i = 0; i < seq.size(); ++i)
        w.row(std::vector<double>{static_cast<double>(i), seq.energies[i], seq.convergence[i]});
      return FileSet{{csv_name, w.str()}, {"spectra/levels_" + tag + ".json", canonical(side)}};
    });
    return csv_column(files.at(csv_name), "E");
  }

  /// All (N, l) spectra plus an index aggregating them.
  std::map<std::pair<int, int>, std::vector<double>> spectra() {
    std::map<std::pair<int, int>, std::vector<double>> all;
    json index = json::array();
    for (const auto& cl : cfg_.clusters)
      for (int l = 0; l <= cl.l_max; ++l) {
        all[{cl.n, l}] = spectrum(cl, l);
        const std::string tag = "N" + std::to_string(cl.n) + "_l" + std::to_string(l);
        index.push_back({{"n", cl.n}, {"l", l}, {"levels", all[{cl.n, l}].size()},
                         {"file", "spectra/levels_" + tag + ".csv"},
                         {"sha256", io::sha256_hex(read_rel("spectra/levels_" + tag + ".csv"))}});
      }
    json j{{"config_hash", config_hash(cfg_)}, {"sequences", index}};
    emit("spectra/index.json", canonical(j));
    return all;
  }

  /// Fluctuation reports for every window and synthetic ensemble.
  json analyze() {
    const auto all = spectra();
    json key{{"analysis", analysis_json(cfg_.analysis)}, {"spectra", spectrum_keys_}};
    json syn = json::array();
    for (const auto& s : cfg_.synthetic) syn.push_back(synthetic_json(s));
    key["synthetic"] = syn;
    const auto files = stage("analyze", digest(key), [&] {
      FileSet out;
      json reports = json::array();
      io::CsvWriter table({"label", "n", "ls", "pooling", "first", "last", "levels", "mean_rtilde",
                           "mean_r", "brody_nu", "brody_nu_histogram"});
      auto add = [&](const FluctuationReport& r, const std::vector<std::string>& meta) {
        json j = to_json(r, cfg_.analysis);
        reports.push_back(j);
        for (auto& [name, text] : report_csvs(r, cfg_.analysis)) out["analysis/" + name] = text;
        std::vector<std::string> row = meta;
        row.push_back(std::to_string(r.levels));
        row.push_back(r.ratio ? io::format_double(r.ratio->mean_rtilde) : "");
        row.push_back(r.ratio ? io::format_double(r.ratio->mean_r) : "");
        row.push_back(r.brody ? io::format_double(r.brody->nu) : "");
        row.push_back(r.brody ? io::format_double(r.brody->nu_histogram) : "");
        table.row(row);
      };
      for (const auto& w : cfg_.analysis.windows) {
        std::vector<std::string> notes;
        const auto inputs = window_sequences(w, all, notes);
        std::string ls;
        for (int l : w.ls) ls += (ls.empty() ? "" : " ") + std::to_string(l);
        if (inputs.empty()) {
          notes.push_back("window has no usable levels");
          reports.push_back({{"label", w.label}, {"notes", notes}});
          continue;
        }
        auto r = analyze_sequences(inputs, cfg_.analysis, w.label);
        r.notes.insert(r.notes.begin(), notes.begin(), notes.end());
        add(r, {w.label, std::to_string(w.n), ls, w.pooling, std::to_string(w.first), std::to_string(w.last)});
      }
      for (const auto& s : cfg_.synthetic) {
        const auto inputs = synthetic_sequences(s);
        io::CsvWriter lv({"realization", "E"});
        for (std::size_t k = 0; k < inputs.size(); ++k)
          for (double e : inputs[k].energies) lv.row(std::vector<double>{static_cast<double>(k), e});
        out["synthetic/" + s.label + "_levels.csv"] = lv.str();
        const auto r = analyze_sequences(inputs, cfg_.analysis, s.label);
        add(r, {s.label, "", "", s.kind, "", ""});
      }
      out["analysis/report.json"] =
          canonical(json{{"config_hash", config_hash(cfg_)}, {"software_version", software_version},
                         {"reports", reports}});
      out["analysis/table.csv"] = table.str();
      return out;
    });
    return json::parse(files.at("analysis/report.json"));
  }

  /// Writes config.canonical.json and manifest.json listing every file this
  /// run produced or reused, with digests.
  fs::path write_manifest() {
    emit("config.canonical.json", canonical(result_config(cfg_)));
    // Files left in the pipeline's own subdirectories by earlier runs with
    // other settings would be orphans; anything else in out_ is left alone.
    for (const char* sub : {"cache", "potential", "spectra", "analysis", "synthetic"}) {
      const fs::path dir = out_ / sub;
      if (!fs::is_directory(dir)) continue;
      std::vector<fs::path> stale;
      for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file() &&
            !written_.count(fs::relative(e.path(), out_).generic_string()))
          stale.push_back(e.path());
      for (const auto& p : stale) {
        if (log_) *log_ << "[prune] " << fs::relative(p, out_).generic_string() << "\n";
        fs::remove(p);
      }
    }
    json files = json::array();
    for (const auto& [rel, sha] : written_) files.push_back({{"path", rel}, {"sha256", sha}});
    json j{{"software_version", software_version}, {"config_hash", config_hash(cfg_)}, {"files", files}};
    const fs::path p = out_ / "manifest.json";
    io::write_file_atomic(p, canonical(j));
    return p;
  }

  // ----------------------------------------------------- analysis inputs

  /// Per-l (or merged) level sequences of a window.
  std::vector<SequenceInput> window_sequences(const AnalysisWindow& w,
                                              const std::map<std::pair<int, int>, std::vector<double>>& all,
                                              std::vector<std::string>& notes) const {
    std::vector<std::pair<double, int>> merged;
    for (int l : w.ls) {
      const auto it = all.find({w.n, l});
      if (it == all.end()) {
        notes.push_back("l = " + std::to_string(l) + " not computed for N = " + std::to_string(w.n));
        continue;
      }
      for (double e : it->second) merged.emplace_back(e, l);
    }
    std::sort(merged.begin(), merged.end());
    if (merged.size() < w.first + 2) return {};
    const std::size_t last = std::min(w.last, merged.size());
    if (last < w.last)
      notes.push_back("window asks for level " + std::to_string(w.last) + " but only " +
                      std::to_string(merged.size()) + " exist; truncated");
    std::vector<SequenceInput> out;
    if (w.pooling == "merged") {
      SequenceInput in;
      for (std::size_t i = w.first - 1; i < last; ++i) in.energies.push_back(merged[i].first);
      in.window = {0, in.energies.size()};
      in.tag = w.label;
      out.push_back(std::move(in));
      return out;
    }
    for (int l : w.ls) {
      SequenceInput in;
      for (std::size_t i = w.first - 1; i < last; ++i)
        if (merged[i].second == l) in.energies.push_back(merged[i].first);
      if (in.energies.size() < 3) continue;
      in.window = {0, in.energies.size()};
      in.tag = w.label + "_l" + std::to_string(l);
      out.push_back(std::move(in));
    }
    return out;
  }

  /// Realisations drawn from one generator seeded once with the config seed.
  static std::vector<SequenceInput> synthetic_sequences(const SyntheticConfig& s) {
    std::vector<SequenceInput> out;
    Rng rng(s.seed);
    const auto kind = parse_synthetic_kind(s.kind);
    for (std::size_t k = 0; k < s.realizations; ++k) {
      SequenceInput in;
      in.energies = synthetic_levels(kind, s.size, rng);
      in.window = central_window(in.energies.size(), s.window_fraction);
      in.tag = s.label + "_" + std::to_string(k);
      out.push_back(std::move(in));
    }
    return out;
  }

 private:
  // Runs `produce` unless cache/<name>.json records the same key and every
  // listed file is present with its recorded digest.
  template <class Produce>
  FileSet stage(const std::string& name, const std::string& key, Produce&& produce) {
    const fs::path marker = out_ / "cache" / (name + ".json");
    if (fs::exists(marker)) {
      try {
        const json m = json::parse(io::read_file(marker));
        if (m.at("key").get<std::string>() == key) {
          FileSet files;
          bool ok = true;
          for (const auto& [rel, sha] : m.at("files").items()) {
            const fs::path p = out_ / rel;
            if (!fs::exists(p)) { ok = false; break; }
            std::string text = io::read_file(p);
            if (io::sha256_hex(text) != sha.template get<std::string>()) { ok = false; break; }
            files[rel] = std::move(text);
          }
          if (ok) {
            for (const auto& [rel, text] : files) written_[rel] = io::sha256_hex(text);
            written_["cache/" + name + ".json"] = io::sha256_hex(io::read_file(marker));
            records_.push_back({name, key, true});
            if (log_) *log_ << "[cache] " << name << "\n";
            return files;
          }
        }
      } catch (const json::exception&) {
        // Unreadable marker: recompute.
      }
    }
    if (log_) *log_ << "[run]   " << name << "\n";
    FileSet files;
    try {
      files = produce();
    } catch (const ConfigError& e) {
      throw ConfigError("stage " + name + ": " + e.what());
    } catch (const NumericalError& e) {
      throw NumericalError("stage " + name + ": " + e.what());
    }
    json listing = json::object();
    for (const auto& [rel, text] : files) {
      emit(rel, text);
      listing[rel] = written_.at(rel);
    }
    emit("cache/" + name + ".json", canonical(json{{"stage", name}, {"key", key}, {"files", listing}}));
    records_.push_back({name, key, false});
    return files;
  }

  void emit(const std::string& rel, const std::string& text) {
    io::write_file_atomic(out_ / rel, text);
    written_[rel] = io::sha256_hex(text);
  }

  std::string read_rel(const std::string& rel) const { return io::read_file(out_ / rel); }

  RunConfig cfg_;
  fs::path out_;
  std::ostream* log_;
  UnitSystem units_;
  std::optional<TwoBodyPotential> potential_;
  std::string calibration_key_;
  std::map<std::string, std::string> potential_keys_;
  std::map<std::string, std::string> spectrum_keys_;
  std::map<std::string, std::string> written_;  // relative path -> sha256
  std::vector<StageRecord> records_;
};

}  // namespace phstat
