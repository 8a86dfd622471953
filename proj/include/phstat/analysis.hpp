#pragma once

// Fluctuation report for an ensemble of independent level sequences, and its
// JSON / CSV renderings.

#include <map>
#include <string>
#include <vector>

#include "phstat/config.hpp"
#include "phstat/io.hpp"
#include "phstat/spectral.hpp"

namespace phstat {

struct SequenceInput {
  std::vector<double> energies;
  IndexWindow window;  // levels used for every measure
  std::string tag;
};

struct FluctuationReport {
  std::string label;
  std::size_t sequences = 0;
  std::size_t levels = 0;
  std::optional<Histogram> ps;
  std::optional<BrodyFit> brody;
  std::optional<IntegralSpacing> is;
  std::vector<CurvePoint> sigma2;
  std::vector<CurvePoint> delta3;
  std::vector<CurvePoint> delta3_from_sigma2;
  std::optional<RatioStatistics> ratio;
  std::vector<std::string> notes;
};

namespace detail {

inline bool wants(const AnalysisConfig& a, const std::string& m) {
  return std::find(a.measures.begin(), a.measures.end(), m) != a.measures.end();
}

// Level-count-weighted mean over sequences of a per-L measure; an L is kept
// only for sequences whose unfolded span is at least 10 L.
template <class Measure>
std::vector<CurvePoint> pooled_curve(const std::vector<UnfoldedSequence>& seqs,
                                     const std::vector<double>& L_grid, Measure&& measure,
                                     std::vector<std::string>& notes, const char* name) {
  std::vector<CurvePoint> out;
  for (double L : L_grid) {
    double acc = 0.0, weight = 0.0;
    for (const auto& u : seqs) {
      if (u.levels.size() < 2 || L > (u.levels.back() - u.levels.front()) / 10.0) continue;
      const double single[1] = {L};
      const auto v = measure(std::span<const double>(u.levels), std::span<const double>(single, 1));
      const auto w = static_cast<double>(u.levels.size());
      acc += w * v.front().value;
      weight += w;
    }
    if (weight > 0.0) out.push_back({L, acc / weight});
    else notes.push_back(std::string(name) + ": L = " + io::format_double(L) +
                         " exceeds a tenth of every sequence span; skipped");
  }
  return out;
}

}  // namespace detail

inline FluctuationReport analyze_sequences(const std::vector<SequenceInput>& inputs,
                                           const AnalysisConfig& cfg, const std::string& label) {
  if (inputs.empty()) throw ConfigError("analyze: no sequences for '" + label + "'");
  FluctuationReport rep;
  rep.label = label;
  rep.sequences = inputs.size();

  std::vector<UnfoldedSequence> unfolded;
  const bool spacing_measures = detail::wants(cfg, "ps") || detail::wants(cfg, "brody") ||
                                detail::wants(cfg, "is") || detail::wants(cfg, "sigma2") ||
                                detail::wants(cfg, "delta3");
  RatioSample ratios;
  for (const auto& in : inputs) {
    rep.levels += in.window.size();
    if (spacing_measures) {
      const auto need = static_cast<std::size_t>(3 * (cfg.unfold_degree + 1));
      if (in.window.size() < need) {
        rep.notes.push_back("sequence '" + in.tag + "' has " + std::to_string(in.window.size()) +
                            " levels, fewer than the " + std::to_string(need) +
                            " needed to unfold; left out of spacing measures");
      } else {
        unfolded.push_back(unfold(in.energies, in.window, {cfg.unfold_degree}, in.tag));
      }
    }
    if (detail::wants(cfg, "ratio") && in.window.size() >= 3) {
      const auto r = ratio_sample(in.energies, in.window);
      ratios.r.insert(ratios.r.end(), r.r.begin(), r.r.end());
      ratios.rtilde.insert(ratios.rtilde.end(), r.rtilde.begin(), r.rtilde.end());
      ratios.excluded_degenerate += r.excluded_degenerate;
    }
  }

  if (!unfolded.empty()) {
    const SpacingSample sample = pool_ensemble(unfolded);
    if (detail::wants(cfg, "ps"))
      rep.ps = make_histogram(sample.spacings, 0.0, cfg.ps_max, cfg.ps_bin_width);
    if (detail::wants(cfg, "brody")) {
      if (sample.size() >= 200) {
        BrodyOptions bo;
        bo.bin_width = cfg.ps_bin_width;
        bo.hist_max = cfg.ps_max;
        rep.brody = brody_fit(sample, bo);
      } else {
        rep.notes.push_back("brody: " + std::to_string(sample.size()) +
                            " spacings, fewer than 200; fit skipped");
      }
    }
    if (detail::wants(cfg, "is")) rep.is = integral_spacing(sample);
    if (detail::wants(cfg, "sigma2"))
      rep.sigma2 = detail::pooled_curve(
          unfolded, cfg.L_grid,
          [](auto x, auto L) { return number_variance(x, L); }, rep.notes, "sigma2");
    if (detail::wants(cfg, "delta3")) {
      rep.delta3 = detail::pooled_curve(
          unfolded, cfg.L_grid, [](auto x, auto L) { return delta3(x, L); }, rep.notes, "delta3");
      std::vector<std::string> dup;
      rep.delta3_from_sigma2 = detail::pooled_curve(
          unfolded, cfg.L_grid, [](auto x, auto L) { return delta3_via_sigma2(x, L); }, dup,
          "delta3");
    }
  }
  if (detail::wants(cfg, "ratio")) {
    if (ratios.r.empty()) {
      rep.notes.push_back("ratio: no defined spacing ratios");
    } else {
      RatioStatistics st;
      st.sample = std::move(ratios);
      st.pr = make_histogram(st.sample.r, 0.0, cfg.ratio_max, cfg.ratio_bin_width);
      st.mean_r = st.sample.mean_r();
      st.mean_rtilde = st.sample.mean_rtilde();
      rep.ratio = std::move(st);
    }
  }
  return rep;
}

inline json histogram_json(const Histogram& h) {
  return {{"edges", h.edges}, {"density", h.density}, {"counts", h.counts}, {"total", h.total},
          {"underflow", h.underflow}, {"overflow", h.overflow}};
}

inline json curve_json(const std::vector<CurvePoint>& c) {
  json a = json::array();
  for (const auto& p : c) a.push_back({p.L, p.value});
  return a;
}

inline json to_json(const FluctuationReport& r, const AnalysisConfig& cfg) {
  json j;
  j["label"] = r.label;
  j["sequences"] = r.sequences;
  j["levels"] = r.levels;
  j["notes"] = r.notes;
  if (r.ps) {
    json ps = histogram_json(*r.ps);
    for (const auto& name : cfg.references) {
      const auto kind = parse_reference_kind(name);
      if (name.ends_with("-ps")) ps["reference"][name] = bin_averaged_reference(kind, *r.ps);
    }
    j["ps"] = ps;
  }
  if (r.brody)
    j["brody"] = {{"nu", r.brody->nu},
                  {"a", r.brody->a},
                  {"log_likelihood", r.brody->log_likelihood},
                  {"ks", r.brody->ks},
                  {"nu_histogram", r.brody->nu_histogram},
                  {"at_bound", r.brody->at_bound},
                  {"histogram_at_bound", r.brody->histogram_at_bound}};
  if (r.is) j["is"] = {{"points", r.is->log_s.size()}, {"zero_spacings", r.is->zero_spacings}};
  if (!r.sigma2.empty()) j["sigma2"] = curve_json(r.sigma2);
  if (!r.delta3.empty()) {
    j["delta3"] = curve_json(r.delta3);
    j["delta3_from_sigma2"] = curve_json(r.delta3_from_sigma2);
  }
  if (r.ratio) {
    json pr = histogram_json(r.ratio->pr);
    for (const auto& name : cfg.references)
      if (name.ends_with("-pr"))
        pr["reference"][name] = bin_averaged_reference(parse_reference_kind(name), r.ratio->pr);
    j["ratio"] = {{"mean_r", r.ratio->mean_r},
                  {"mean_rtilde", r.ratio->mean_rtilde},
                  {"count", r.ratio->sample.r.size()},
                  {"excluded_degenerate", r.ratio->sample.excluded_degenerate},
                  {"pr", pr}};
  }
  return j;
}

/// One CSV per measure, keyed by file name.
inline std::map<std::string, std::string> report_csvs(const FluctuationReport& r,
                                                      const AnalysisConfig& cfg) {
  std::map<std::string, std::string> out;
  auto histogram_csv = [&](const Histogram& h, const char* suffix) {
    std::vector<std::string> header{"bin_lo", "bin_hi", "density"};
    std::vector<ReferenceKind> refs;
    for (const auto& name : cfg.references)
      if (name.ends_with(suffix)) {
        header.push_back(name);
        refs.push_back(parse_reference_kind(name));
      }
    io::CsvWriter w(header);
    std::vector<std::vector<double>> ref_vals;
    for (auto k : refs) ref_vals.push_back(bin_averaged_reference(k, h));
    for (std::size_t i = 0; i < h.bins(); ++i) {
      std::vector<double> row{h.edges[i], h.edges[i + 1], h.density[i]};
      for (const auto& rv : ref_vals) row.push_back(rv[i]);
      w.row(row);
    }
    return w.str();
  };
  if (r.ps) out[r.label + "_ps.csv"] = histogram_csv(*r.ps, "-ps");
  if (r.is) {
    io::CsvWriter w({"ln_s", "I"});
    for (std::size_t i = 0; i < r.is->log_s.size(); ++i) w.row(std::vector<double>{r.is->log_s[i], r.is->cumulative[i]});
    out[r.label + "_is.csv"] = w.str();
  }
  if (!r.sigma2.empty()) {
    io::CsvWriter w({"L", "sigma2"});
    for (const auto& p : r.sigma2) w.row(std::vector<double>{p.L, p.value});
    out[r.label + "_sigma2.csv"] = w.str();
  }
  if (!r.delta3.empty()) {
    io::CsvWriter w({"L", "delta3", "delta3_from_sigma2"});
    for (std::size_t i = 0; i < r.delta3.size(); ++i) {
      const double via = i < r.delta3_from_sigma2.size() ? r.delta3_from_sigma2[i].value : 0.0;
      w.row(std::vector<double>{r.delta3[i].L, r.delta3[i].value, via});
    }
    out[r.label + "_delta3.csv"] = w.str();
  }
  if (r.ratio) out[r.label + "_ratio.csv"] = histogram_csv(r.ratio->pr, "-pr");
  return out;
}

}  // namespace phstat
