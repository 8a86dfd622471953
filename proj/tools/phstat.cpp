// Command-line front end. Exit codes: 0 success, 2 configuration error,
// 3 numerical failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "phstat/pipeline.hpp"

namespace {

using namespace phstat;

constexpr int exit_config = 2;
constexpr int exit_numerical = 3;

RunConfig load_config(const std::string& path, const std::string& output_override) {
  RunConfig c = parse_config_text(io::read_file(path));
  if (!output_override.empty()) c.output_dir = output_override;
  return c;
}

void print_stages(const Pipeline& p) {
  std::size_t hits = 0;
  for (const auto& s : p.stages()) hits += s.cache_hit;
  std::cout << "stages: " << p.stages().size() << " (" << hits << " cache hits, "
            << p.stages().size() - hits << " computed)\n";
}

// "a:b" as 1-based inclusive level ranks.
IndexWindow parse_window(const std::string& s, std::size_t n) {
  if (s.empty()) return {0, n};
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw ConfigError("--window expects FIRST:LAST");
  const std::size_t first = std::stoul(s.substr(0, colon));
  const std::size_t last = std::stoul(s.substr(colon + 1));
  if (first < 1 || last < first + 2 || last > n)
    throw ConfigError("--window " + s + " outside 1.." + std::to_string(n));
  return {first - 1, last};
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const auto comma = s.find(',', pos);
    const auto item = s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (!item.empty()) out.push_back(item);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

void print_report(const json& doc) {
  std::printf("%-22s %8s %10s %12s %9s %9s\n", "label", "levels", "<r~>", "<r>", "nu_ML", "nu_hist");
  for (const auto& r : doc.at("reports")) {
    const auto num = [&](const json& j, const char* a, const char* b) -> std::string {
      if (!j.contains(a) || !j.at(a).contains(b)) return "-";
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.4f", j.at(a).at(b).get<double>());
      return buf;
    };
    std::printf("%-22s %8s %10s %12s %9s %9s\n", r.at("label").get<std::string>().c_str(),
                r.contains("levels") ? std::to_string(r.at("levels").get<std::size_t>()).c_str() : "-",
                num(r, "ratio", "mean_rtilde").c_str(), num(r, "ratio", "mean_r").c_str(),
                num(r, "brody", "nu").c_str(), num(r, "brody", "nu_histogram").c_str());
  }
  for (const auto& r : doc.at("reports")) {
    if (r.contains("sigma2")) {
      std::printf("\n%s  L / Sigma2 / Delta3\n", r.at("label").get<std::string>().c_str());
      const auto& s2 = r.at("sigma2");
      for (std::size_t i = 0; i < s2.size(); ++i) {
        const double d3 = r.contains("delta3") && i < r.at("delta3").size()
                              ? r.at("delta3")[i][1].get<double>()
                              : 0.0;
        std::printf("  %6.2f %10.4f %10.4f\n", s2[i][0].get<double>(), s2[i][1].get<double>(), d3);
      }
    }
    for (const auto& n : r.value("notes", json::array()))
      std::printf("  note [%s]: %s\n", r.at("label").get<std::string>().c_str(),
                  n.get<std::string>().c_str());
  }
}

int run(int argc, char** argv) {
  CLI::App app{"Potential-harmonic cluster spectra and their fluctuation statistics"};
  app.require_subcommand(1);
  std::string config_path, output_dir;

  auto* tune = app.add_subcommand("tune-rc", "Calibrate the hard-core radius to a scattering length");
  double c6 = 2803.0, target_bohr = 100.0, mass = 0.0;
  int nodes = 1;
  std::string species = "Rb87";
  tune->add_option("--c6", c6, "C6 in eV A^6")->capture_default_str();
  tune->add_option("--target-as", target_bohr, "target a_s in bohr")->capture_default_str();
  tune->add_option("--nodes", nodes, "dimer bound states on the branch")->capture_default_str();
  tune->add_option("--species", species)->capture_default_str();
  tune->add_option("--mass", mass, "mass in u (overrides species)");

  auto* pot = app.add_subcommand("potential", "Effective potentials omega_l(r) as CSV");
  auto* spec = app.add_subcommand("spectrum", "Bound-state spectra per (N, l) as CSV");
  auto* run_all = app.add_subcommand("run", "Full pipeline with caching and a manifest");
  for (auto* sc : {pot, spec, run_all}) {
    sc->add_option("--config", config_path, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
    sc->add_option("--output", output_dir, "override the configured output directory");
  }

  auto* ana = app.add_subcommand("analyze", "Fluctuation measures of level sequences");
  std::vector<std::string> inputs;
  std::string window, measures = "ps,brody,is,sigma2,delta3,ratio", references, label = "input";
  double bin_width = 0.2;
  int degree = 6;
  ana->add_option("--config", config_path, "run the pipeline through analysis")->check(CLI::ExistingFile);
  ana->add_option("--input", inputs, "level CSV (column E; optional column realization)")->check(CLI::ExistingFile);
  ana->add_option("--window", window, "FIRST:LAST level ranks, 1-based inclusive");
  ana->add_option("--measures", measures)->capture_default_str();
  ana->add_option("--bin-width", bin_width, "P(s) bin width")->capture_default_str();
  ana->add_option("--unfold-degree", degree)->capture_default_str();
  ana->add_option("--reference", references, "comma-separated reference overlays");
  ana->add_option("--label", label)->capture_default_str();
  ana->add_option("--output", output_dir, "output directory");

  auto* syn = app.add_subcommand("synthetic", "Synthetic reference spectrum as CSV");
  std::string kind = "poisson", out_file;
  std::size_t size = 1000, realizations = 1;
  std::uint64_t seed = 1;
  syn->add_option("--kind", kind)->check(CLI::IsMember({"poisson", "picket", "goe", "semipoisson"}))->capture_default_str();
  syn->add_option("--size", size)->capture_default_str();
  syn->add_option("--realizations", realizations)->capture_default_str();
  syn->add_option("--seed", seed)->capture_default_str();
  syn->add_option("--out", out_file, "output CSV")->required();

  auto* rep = app.add_subcommand("report", "Render a consolidated report as tables");
  std::string report_path;
  rep->add_option("--input", report_path, "analysis/report.json")->check(CLI::ExistingFile);
  rep->add_option("--config", config_path, "locate the report through a configuration")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : exit_config;
  }

  if (tune->parsed()) {
    const UnitSystem u = make_units(species, mass > 0.0 ? std::optional<double>(mass) : std::nullopt);
    const auto p = tune_hardcore(u.ev_to_internal(c6), u.bohr_to_length(target_bohr), nodes, u);
    const auto s = scattering_length(p);
    json j{{"r_c", p.r_c}, {"a_s_angstrom", s.a_s}, {"a_s_bohr", u.length_to_bohr(s.a_s)},
           {"dimer_bound_states", s.node_count}, {"tail_length", p.tail_length()}};
    std::cout << canonical(j);
    return 0;
  }
  if (pot->parsed() || spec->parsed() || run_all->parsed()) {
    Pipeline p(load_config(config_path, output_dir));
    if (pot->parsed()) {
      for (const auto& cl : p.config().clusters)
        for (int l = 0; l <= cl.l_max; ++l) p.potential(cl, l);
    } else if (spec->parsed()) {
      p.spectra();
    } else {
      p.analyze();
    }
    const auto manifest = p.write_manifest();
    print_stages(p);
    std::cout << "manifest: " << manifest.string() << "\n";
    return 0;
  }
  if (ana->parsed()) {
    if (!config_path.empty()) {
      Pipeline p(load_config(config_path, output_dir));
      print_report(p.analyze());
      p.write_manifest();
      print_stages(p);
      return 0;
    }
    if (inputs.empty()) throw ConfigError("analyze: give --config or at least one --input");
    AnalysisConfig cfg;
    cfg.unfold_degree = degree;
    cfg.ps_bin_width = bin_width;
    cfg.measures = split_list(measures);
    if (!references.empty()) cfg.references = split_list(references);
    for (const auto& r : cfg.references) parse_reference_kind(r);
    RunConfig check;
    check.clusters.push_back({});
    check.analysis = cfg;
    validate(check);
    std::vector<SequenceInput> seqs;
    for (const auto& path : inputs) {
      const std::string text = io::read_file(path);
      std::vector<std::string> header;
      const auto rows = parse_numeric_csv(text, &header);
      const auto e_col = csv_column(text, "E");
      const bool multi = std::find(header.begin(), header.end(), "realization") != header.end();
      const auto real = multi ? csv_column(text, "realization") : std::vector<double>(e_col.size(), 0.0);
      std::size_t start = 0;
      for (std::size_t i = 1; i <= e_col.size(); ++i) {
        if (i < e_col.size() && real[i] == real[start]) continue;
        SequenceInput in;
        in.energies.assign(e_col.begin() + static_cast<std::ptrdiff_t>(start),
                           e_col.begin() + static_cast<std::ptrdiff_t>(i));
        in.window = parse_window(window, in.energies.size());
        in.tag = path + "#" + std::to_string(seqs.size());
        seqs.push_back(std::move(in));
        start = i;
      }
      (void)rows;
    }
    const auto r = analyze_sequences(seqs, cfg, label);
    const fs::path dir = output_dir.empty() ? fs::path("analysis") : fs::path(output_dir);
    for (const auto& [name, text] : report_csvs(r, cfg)) io::write_file_atomic(dir / name, text);
    const json doc{{"reports", json::array({to_json(r, cfg)})}};
    io::write_file_atomic(dir / (label + "_report.json"), canonical(doc));
    print_report(doc);
    return 0;
  }
  if (syn->parsed()) {
    SyntheticConfig s;
    s.label = "synthetic";
    s.kind = kind;
    s.size = size;
    s.realizations = realizations;
    s.seed = seed;
    const auto seqs = Pipeline::synthetic_sequences(s);
    io::CsvWriter w({"realization", "E"});
    for (std::size_t k = 0; k < seqs.size(); ++k)
      for (double e : seqs[k].energies) w.row(std::vector<double>{static_cast<double>(k), e});
    io::write_file_atomic(out_file, w.str());
    return 0;
  }
  if (rep->parsed()) {
    if (report_path.empty()) {
      if (config_path.empty()) throw ConfigError("report: give --input or --config");
      report_path = (fs::path(load_config(config_path, "").output_dir) / "analysis" / "report.json").string();
    }
    json doc;
    try {
      doc = json::parse(io::read_file(report_path));
    } catch (const json::exception& e) {
      throw ConfigError(std::string("report: ") + e.what());
    }
    print_report(doc);
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const phstat::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return exit_config;
  } catch (const phstat::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return exit_numerical;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return exit_config;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return exit_config;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return exit_numerical;
  }
}
