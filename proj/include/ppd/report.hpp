#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ppd/errors.hpp"
#include "ppd/filters.hpp"
#include "ppd/io.hpp"
#include "ppd/pairsearch.hpp"
#include "ppd/scenario.hpp"
#include "ppd/stats.hpp"

namespace ppd {

// One preset per published figure layout; all share the 80-400 Hz df band.
inline std::map<std::string, FilterConfig> preset_table() {
  std::map<std::string, FilterConfig> t;
  auto mk = [&](const std::string& name, DtSpec spec) {
    FilterConfig cfg;
    cfg.dt_spec = std::move(spec);
    t[name] = cfg;
  };
  mk("fig2", DtSpec::abs_max(3.0));
  for (const char* name : {"fig3", "fig4", "fig5", "fig6"}) mk(name, DtSpec::set({-3.75}));
  for (const char* name : {"fig7", "fig8", "fig9", "fig10"}) mk(name, DtSpec::set({-6.25}));
  mk("fig11", DtSpec::abs_max(1.1));
  mk("fig12", DtSpec::range(-8.0, -3.0));
  mk("null375", DtSpec::set({3.75}));
  return t;
}

inline FilterConfig preset(const std::string& name) {
  const auto t = preset_table();
  auto it = t.find(name);
  if (it == t.end()) throw config_error("unknown preset: " + name);
  return it->second;
}

struct AnalysisResult {
  std::vector<PulsePair> stage2;    // all coarse-window pairs, all days
  std::vector<PulsePair> filtered;  // stage-3 output, metric filled, rank order
  LikelihoodSeries series;
  int trials = 0;  // pairs surviving the energy burst filter
  std::optional<MultiplierAnalysis> multiplier;          // all events in the anomalous bin
  std::optional<MultiplierAnalysis> multiplier_reduced;  // noise-discounted event count
  int anomalous_bin = -1;
  double min_log10_likelihood = 0.0;
};

// Stage-3 chain on stage-2 pairs: excision, session RA cut, energy burst
// filter (metric from the fixed coarse window), dt/df hyperparameters, metric
// sort and RA-density likelihood. The IIR detection filter runs upstream, in
// run_analysis.
inline AnalysisResult analyze_pairs(std::vector<PulsePair> stage2, const FilterConfig& cfg) {
  cfg.validate();
  AnalysisResult res;
  res.stage2 = std::move(stage2);

  std::vector<PulsePair> pairs = session_ra_filter(excise_central_if(res.stage2, cfg), cfg);
  const BurstMetricTable table = compute_burst_metric_table(pairs, cfg);
  pairs = apply_burst_filter(std::move(pairs), table, cfg);
  pairs = hyperparameter_filter(std::move(pairs), cfg);
  res.trials = static_cast<int>(pairs.size());

  for (PulsePair& p : pairs) p.snr_metric = snr_metric(p);
  res.filtered = sort_pairs_desc(std::move(pairs));
  res.series = ra_density_log_likelihood(res.filtered);
  if (res.series.empty()) return res;

  // Anomalous bin: the entry with the minimum clamped likelihood; the events
  // fed to the repetition analysis are that bin's pairs up to the argmin rank.
  const LikelihoodEntry* best = &res.series.front();
  for (const LikelihoodEntry& e : res.series)
    if (e.log10_likelihood < best->log10_likelihood) best = &e;
  res.anomalous_bin = best->ra_bin;
  res.min_log10_likelihood = best->log10_likelihood;

  std::vector<PulsePair> events;
  for (const LikelihoodEntry& e : res.series) {
    if (e.rank > best->rank) break;
    if (e.ra_bin == best->ra_bin) events.push_back(e.pair);
  }
  if (!events.empty()) {
    res.multiplier = repetition_likelihood(events, cfg.multiplier_base_hz, cfg.fft_bin_hz);
    // Discount the per-bin pair count expected from noise over the whole
    // campaign (total trials / number of bins), dropping the lowest-ranked
    // events: the "5 of 8" style reduced count.
    const int drop = static_cast<int>(
        std::llround(static_cast<double>(res.series.size()) / cfg.n_ra_bins));
    if (drop > 0 && drop < static_cast<int>(events.size())) {
      std::vector<PulsePair> reduced(events.begin(), events.end() - drop);
      res.multiplier_reduced =
          repetition_likelihood(reduced, cfg.multiplier_base_hz, cfg.fft_bin_hz);
    } else {
      res.multiplier_reduced = res.multiplier;
    }
  }
  return res;
}

// End-to-end in-memory run: scenario -> stage-1 -> IIR -> stage-2 -> stage-3.
inline AnalysisResult run_analysis(const Scenario& sc, const FilterConfig& cfg) {
  const std::vector<DayDetections> days = generate_detections(sc);
  CoarseWindow coarse;
  coarse.site_longitude_deg = sc.site_longitude_deg;
  std::vector<PulsePair> stage2;
  for (const DayDetections& day : days) {
    const std::vector<Detection> lhc = apply_iir_burst_reject(day.lhc, sc.band_lo_hz, cfg);
    const std::vector<Detection> rhc = apply_iir_burst_reject(day.rhc, sc.band_lo_hz, cfg);
    std::vector<PulsePair> pairs = search_pairs(lhc, rhc, coarse);
    stage2.insert(stage2.end(), pairs.begin(), pairs.end());
  }
  return analyze_pairs(std::move(stage2), cfg);
}

// ---------------------------------------------------------------------------
// Plot emission: deterministic self-contained SVG scatter plus the plotted CSV.

struct ScatterPoint {
  double x = 0.0, y = 0.0;
};

struct ScatterSpec {
  std::string title;
  std::string x_label, y_label;
  std::vector<std::string> annotations;  // drawn near the top of the plot
};

inline void emit_scatter(const std::vector<ScatterPoint>& points, const ScatterSpec& spec,
                         const std::filesystem::path& svg_path,
                         const std::filesystem::path& csv_path) {
  if (points.empty()) throw data_error("emit_scatter: empty series");
  {
    std::ofstream csv(csv_path);
    if (!csv) throw data_error("cannot write " + csv_path.string());
    csv << "x,y\n";
    for (const ScatterPoint& p : points)
      csv << io::fmt("%.10g", p.x) << ',' << io::fmt("%.10g", p.y) << '\n';
  }

  double x0 = points[0].x, x1 = points[0].x, y0 = points[0].y, y1 = points[0].y;
  for (const ScatterPoint& p : points) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  if (x1 == x0) { x0 -= 1.0; x1 += 1.0; }
  if (y1 == y0) { y0 -= 1.0; y1 += 1.0; }
  const double w = 800, h = 600, ml = 70, mr = 20, mt = 60, mb = 50;
  auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * (w - ml - mr); };
  auto py = [&](double y) { return h - mb - (y - y0) / (y1 - y0) * (h - mt - mb); };

  std::ofstream svg(svg_path);
  if (!svg) throw data_error("cannot write " + svg_path.string());
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"600\" "
         "viewBox=\"0 0 800 600\">\n"
      << "<rect width=\"800\" height=\"600\" fill=\"white\"/>\n"
      << "<rect x=\"" << io::fmt("%.1f", ml) << "\" y=\"" << io::fmt("%.1f", mt) << "\" width=\""
      << io::fmt("%.1f", w - ml - mr) << "\" height=\"" << io::fmt("%.1f", h - mt - mb)
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4.0;
    const double yv = y0 + (y1 - y0) * i / 4.0;
    svg << "<text x=\"" << io::fmt("%.1f", px(xv)) << "\" y=\"" << io::fmt("%.1f", h - mb + 18)
        << "\" font-size=\"11\" text-anchor=\"middle\">" << io::fmt("%.4g", xv) << "</text>\n"
        << "<text x=\"" << io::fmt("%.1f", ml - 8) << "\" y=\"" << io::fmt("%.1f", py(yv) + 4)
        << "\" font-size=\"11\" text-anchor=\"end\">" << io::fmt("%.4g", yv) << "</text>\n";
  }
  svg << "<text x=\"400\" y=\"24\" font-size=\"15\" text-anchor=\"middle\">" << spec.title
      << "</text>\n";
  double ay = 40.0;
  for (const std::string& a : spec.annotations) {
    svg << "<text x=\"400\" y=\"" << io::fmt("%.1f", ay)
        << "\" font-size=\"12\" text-anchor=\"middle\">" << a << "</text>\n";
    ay += 14.0;
  }
  svg << "<text x=\"400\" y=\"" << io::fmt("%.1f", h - 12)
      << "\" font-size=\"13\" text-anchor=\"middle\">" << spec.x_label << "</text>\n"
      << "<text x=\"18\" y=\"300\" font-size=\"13\" text-anchor=\"middle\" "
         "transform=\"rotate(-90 18 300)\">"
      << spec.y_label << "</text>\n";
  for (const ScatterPoint& p : points) {
    svg << "<circle cx=\"" << io::fmt("%.2f", px(p.x)) << "\" cy=\"" << io::fmt("%.2f", py(p.y))
        << "\" r=\"3\" fill=\"none\" stroke=\"blue\"/>\n";
  }
  svg << "</svg>\n";
}

// ---------------------------------------------------------------------------
// Pipeline configuration and the end-to-end file-producing run.

struct PipelineConfig {
  Scenario scenario;
  FilterConfig filter;
  std::string preset_name = "fig3";
  std::filesystem::path out_dir;
  std::uint64_t seed = 1;
};

namespace detail {

inline void require_field(const nlohmann::json& j, const char* field, const char* where) {
  if (!j.contains(field))
    throw config_error(std::string(where) + ": missing required field '" + field + "'");
}

template <typename T>
inline void maybe(const nlohmann::json& j, const char* field, T& out) {
  if (j.contains(field)) out = j.at(field).get<T>();
}

}  // namespace detail

inline Scenario scenario_from_json(const nlohmann::json& j) {
  Scenario sc;
  detail::maybe(j, "n_days", sc.n_days);
  detail::maybe(j, "start_mjd_day", sc.start_mjd_day);
  detail::maybe(j, "session_hours", sc.session_hours);
  detail::maybe(j, "noise_detection_rate", sc.noise_detection_rate);
  detail::maybe(j, "band_lo_hz", sc.band_lo_hz);
  detail::maybe(j, "band_hi_hz", sc.band_hi_hz);
  detail::maybe(j, "excision_lo_hz", sc.excision_lo_hz);
  detail::maybe(j, "excision_hi_hz", sc.excision_hi_hz);
  detail::maybe(j, "snr_threshold_db", sc.snr_threshold_db);
  detail::maybe(j, "fft_bin_hz", sc.fft_bin_hz);
  detail::maybe(j, "site_longitude_deg", sc.site_longitude_deg);
  detail::maybe(j, "beam_fwhm_deg", sc.beam_fwhm_deg);
  detail::maybe(j, "seed", sc.seed);
  if (j.contains("noise_pairs_per_bin_per_day"))
    sc.noise_detection_rate =
        noise_rate_for_bin_flux(j.at("noise_pairs_per_bin_per_day").get<double>(), sc);
  for (const auto& ij : j.value("injections", nlohmann::json::array())) {
    Injection inj;
    detail::maybe(ij, "ra_hr", inj.ra_hr);
    detail::maybe(ij, "dec_deg", inj.dec_deg);
    detail::maybe(ij, "dt_s", inj.dt_s);
    if (ij.contains("df_base_hz")) {
      if (ij.at("df_base_hz").is_null())
        inj.df_base_hz.reset();
      else
        inj.df_base_hz = ij.at("df_base_hz").get<double>();
    }
    detail::maybe(ij, "df_jitter_hz", inj.df_jitter_hz);
    if (ij.value("df_jitter_kind", std::string("gaussian")) == "uniform")
      inj.df_jitter_kind = JitterKind::Uniform;
    detail::maybe(ij, "snr_lo_db", inj.snr_lo_db);
    detail::maybe(ij, "snr_hi_db", inj.snr_hi_db);
    detail::maybe(ij, "active_mjd_days", inj.active_mjd_days);
    detail::maybe(ij, "pulses_per_transit", inj.pulses_per_transit);
    detail::maybe(ij, "burst_bandwidth_hz", inj.burst_bandwidth_hz);
    detail::maybe(ij, "burst_duration_s", inj.burst_duration_s);
    sc.injections.push_back(inj);
  }
  for (const auto& bj : j.value("bursts", nlohmann::json::array())) {
    EnergyBurstEvent ev;
    detail::require_field(bj, "mjd_timestamp", "bursts[]");
    ev.mjd_timestamp = bj.at("mjd_timestamp").get<double>();
    detail::maybe(bj, "duration_s", ev.duration_s);
    detail::maybe(bj, "n_pairs", ev.n_pairs);
    detail::maybe(bj, "dt_spread_s", ev.dt_spread_s);
    detail::maybe(bj, "snr_lo_db", ev.snr_lo_db);
    detail::maybe(bj, "snr_hi_db", ev.snr_hi_db);
    sc.bursts.push_back(ev);
  }
  for (const auto& rj : j.value("rfi", nlohmann::json::array())) {
    NarrowbandRfiEvent ev;
    detail::require_field(rj, "freq_hz", "rfi[]");
    ev.freq_hz = rj.at("freq_hz").get<double>();
    detail::maybe(rj, "start_mjd", ev.start_mjd);
    detail::maybe(rj, "stop_mjd", ev.stop_mjd);
    detail::maybe(rj, "snr_db", ev.snr_db);
    detail::maybe(rj, "repeat_interval_s", ev.repeat_interval_s);
    sc.rfi.push_back(ev);
  }
  return sc;
}

inline PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
  PipelineConfig cfg;
  detail::require_field(j, "scenario", "pipeline config");
  cfg.scenario = scenario_from_json(j.at("scenario"));
  detail::maybe(j, "preset", cfg.preset_name);
  cfg.filter = preset(cfg.preset_name);
  if (j.contains("filter")) {
    const auto& fj = j.at("filter");
    detail::maybe(fj, "df_abs_max_hz", cfg.filter.df_abs_max_hz);
    detail::maybe(fj, "df_abs_min_hz", cfg.filter.df_abs_min_hz);
    detail::maybe(fj, "iir_gain", cfg.filter.iir_gain);
    detail::maybe(fj, "iir_threshold_db", cfg.filter.iir_threshold_db);
    detail::maybe(fj, "iir_baseline_db", cfg.filter.iir_baseline_db);
    detail::maybe(fj, "burst_threshold", cfg.filter.burst_threshold);
    detail::maybe(fj, "multiplier_base_hz", cfg.filter.multiplier_base_hz);
  }
  if (j.contains("seed")) {
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.scenario.seed = cfg.seed;
  } else {
    cfg.seed = cfg.scenario.seed;
  }
  if (j.contains("out")) cfg.out_dir = j.at("out").get<std::string>();
  return cfg;
}

inline PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot read config file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw config_error("invalid JSON in " + path.string() + ": " + e.what());
  }
  return pipeline_config_from_json(j);
}

// Executes generate -> pair-search -> filters -> stats -> plots and writes a
// manifest listing every produced file with its content hash. Fully
// deterministic for a fixed seed; the manifest carries no wall-clock data.
inline std::filesystem::path run_pipeline(const PipelineConfig& cfg) {
  namespace fs = std::filesystem;
  if (cfg.out_dir.empty()) throw config_error("run_pipeline: missing output directory");
  fs::create_directories(cfg.out_dir);

  Scenario sc = cfg.scenario;
  sc.seed = cfg.seed;
  const AnalysisResult res = run_analysis(sc, cfg.filter);

  std::vector<std::string> outputs;
  auto emit = [&](const std::string& name, auto&& writer) {
    writer(cfg.out_dir / name);
    outputs.push_back(name);
  };

  // Stage-2 pair files, one per MJD day.
  std::map<int, std::vector<PulsePair>> by_day;
  for (const PulsePair& p : res.stage2) by_day[p.mjd_day].push_back(p);
  for (const auto& [day, pairs] : by_day)
    emit(pair_filename(day), [&](const fs::path& p) { write_pairs_csv(p, pairs); });

  emit("filtered_" + cfg.preset_name + ".csv",
       [&](const fs::path& p) { write_filtered_csv(p, res.filtered); });
  emit("likelihood_" + cfg.preset_name + ".csv",
       [&](const fs::path& p) { write_likelihood_csv(p, res.series); });

  nlohmann::json mj;
  mj["trials"] = res.trials;
  mj["anomalous_bin"] = res.anomalous_bin;
  mj["min_log10_likelihood"] = res.min_log10_likelihood;
  if (res.multiplier) mj["all_events"] = multiplier_to_json(*res.multiplier);
  if (res.multiplier_reduced) mj["noise_discounted"] = multiplier_to_json(*res.multiplier_reduced);
  emit("multiplier_" + cfg.preset_name + ".json", [&](const fs::path& p) {
    std::ofstream out(p);
    out << mj.dump(2) << '\n';
  });

  if (!res.series.empty()) {
    const std::string trials_note = "trials: " + std::to_string(res.trials);
    auto scatter = [&](const std::string& stem, const std::vector<ScatterPoint>& pts,
                       const std::string& xl, const std::string& yl) {
      ScatterSpec spec{cfg.preset_name + ": " + yl + " vs " + xl, xl, yl, {trials_note}};
      emit(stem + ".svg", [&](const fs::path& p) {
        emit_scatter(pts, spec, p, cfg.out_dir / (stem + ".csv"));
      });
      outputs.push_back(stem + ".csv");
    };
    std::vector<ScatterPoint> lik, mjd_bin, freq_bin, df_bin, mjd_dt;
    for (const LikelihoodEntry& e : res.series) {
      lik.push_back({static_cast<double>(e.ra_bin), e.log10_likelihood});
      mjd_bin.push_back({static_cast<double>(e.ra_bin), e.pair.mjd_timestamp});
      freq_bin.push_back({static_cast<double>(e.ra_bin), e.pair.freq_hz / 1e6});
      df_bin.push_back({static_cast<double>(e.ra_bin), e.pair.df_hz});
      mjd_dt.push_back({e.pair.dt_s, e.pair.mjd_timestamp});
    }
    const std::string pre = cfg.preset_name;
    scatter(pre + "_log10_likelihood_vs_ra_bin", lik, "RA bin", "log10 likelihood");
    scatter(pre + "_mjd_vs_ra_bin", mjd_bin, "RA bin", "MJD");
    scatter(pre + "_freq_vs_ra_bin", freq_bin, "RA bin", "RF frequency (MHz)");
    scatter(pre + "_df_vs_ra_bin", df_bin, "RA bin", "df (Hz)");
    scatter(pre + "_mjd_vs_dt", mjd_dt, "dt (s)", "MJD");
  }

  nlohmann::json manifest;
  manifest["preset"] = cfg.preset_name;
  manifest["seed"] = cfg.seed;
  manifest["inputs"] = nlohmann::json::array();
  std::sort(outputs.begin(), outputs.end());
  nlohmann::json arr = nlohmann::json::array();
  for (const std::string& name : outputs)
    arr.push_back({{"path", name}, {"sha256", sha256_file(cfg.out_dir / name)}});
  manifest["outputs"] = arr;
  const fs::path mpath = cfg.out_dir / "manifest.json";
  std::ofstream out(mpath);
  out << manifest.dump(2) << '\n';
  return mpath;
}

}  // namespace ppd
