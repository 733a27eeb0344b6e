// pulsepair: synthetic dual-polarization pulse-pair detection pipeline.
//
// Subcommands mirror the processing stages: synth (stage-1 statistical
// generator), detect (IQ synthesis + FFT energy detector), pair (stage-2
// coarse search), filter / analyze (stage-3 filters and statistics), report
// (plots), run (end to end with manifest).

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <regex>
#include <string>

#include "ppd/frontend.hpp"
#include "ppd/io.hpp"
#include "ppd/report.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonOpts {
  std::string config;
  std::string preset = "fig3";
  std::string in_dir;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
};

ppd::PipelineConfig load_config(const CommonOpts& opt) {
  if (opt.config.empty()) throw ppd::config_error("missing --config <path>");
  ppd::PipelineConfig cfg = ppd::load_pipeline_config(opt.config);
  if (!opt.preset.empty()) {
    cfg.preset_name = opt.preset;
    cfg.filter = ppd::preset(opt.preset);
  }
  if (opt.seed) {
    cfg.seed = *opt.seed;
    cfg.scenario.seed = *opt.seed;
  }
  if (!opt.out_dir.empty()) cfg.out_dir = opt.out_dir;
  return cfg;
}

// Stage-1 detection files found in a directory, grouped by MJD day.
std::map<int, std::pair<std::vector<ppd::Detection>, std::vector<ppd::Detection>>>
read_detection_dir(const fs::path& dir) {
  const std::regex name_re(R"(det_(\d+)_(LHC|RHC)\.csv)");
  std::map<int, std::pair<std::vector<ppd::Detection>, std::vector<ppd::Detection>>> days;
  if (!fs::is_directory(dir)) throw ppd::data_error("not a directory: " + dir.string());
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (!std::regex_match(name, m, name_re)) continue;
    auto dets = ppd::read_detections_csv(entry.path());
    auto& slot = days[std::stoi(m[1])];
    (m[2] == "LHC" ? slot.first : slot.second) = std::move(dets);
  }
  if (days.empty()) throw ppd::data_error("no det_<mjd>_<pol>.csv files in " + dir.string());
  return days;
}

std::vector<ppd::PulsePair> read_pair_dir(const fs::path& dir) {
  const std::regex name_re(R"(pairs_(\d+)\.csv)");
  std::vector<ppd::PulsePair> all;
  if (!fs::is_directory(dir)) throw ppd::data_error("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, m, name_re)) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const fs::path& p : files) {
    auto pairs = ppd::read_pairs_csv(p);
    all.insert(all.end(), pairs.begin(), pairs.end());
  }
  if (all.empty()) throw ppd::data_error("no pairs_<mjd>.csv files in " + dir.string());
  return all;
}

int cmd_synth(const CommonOpts& opt) {
  const ppd::PipelineConfig cfg = load_config(opt);
  fs::create_directories(cfg.out_dir);
  const auto days = ppd::generate_detections(cfg.scenario);
  for (const auto& day : days) {
    ppd::write_detections_csv(cfg.out_dir / ppd::detection_filename(day.mjd_day, ppd::Pol::LHC),
                              day.lhc);
    ppd::write_detections_csv(cfg.out_dir / ppd::detection_filename(day.mjd_day, ppd::Pol::RHC),
                              day.rhc);
  }
  std::cout << "wrote stage-1 files for " << days.size() << " days to " << cfg.out_dir.string()
            << "\n";
  return 0;
}

int cmd_detect(const CommonOpts& opt) {
  if (opt.config.empty()) throw ppd::config_error("missing --config <path>");
  std::ifstream in(opt.config);
  if (!in) throw ppd::config_error("cannot read config file " + opt.config);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ppd::config_error(std::string("invalid JSON: ") + e.what());
  }
  if (!j.contains("frontend")) throw ppd::config_error("config: missing required field 'frontend'");
  const auto& fj = j.at("frontend");
  ppd::FrontendConfig fc;
  ppd::detail::maybe(fj, "fft_bin_hz", fc.fft_bin_hz);
  ppd::detail::maybe(fj, "integration_s", fc.integration_s);
  ppd::detail::maybe(fj, "band_lo_hz", fc.band_lo_hz);
  ppd::detail::maybe(fj, "band_hi_hz", fc.band_hi_hz);
  ppd::detail::maybe(fj, "snr_threshold_db", fc.snr_threshold_db);
  ppd::detail::maybe(fj, "sample_rate_hz", fc.sample_rate_hz);
  ppd::detail::maybe(fj, "lo_excision_lo_hz", fc.lo_excision_lo_hz);
  ppd::detail::maybe(fj, "lo_excision_hi_hz", fc.lo_excision_hi_hz);
  double duration_s = j.value("duration_s", 30.0);
  int mjd_day = j.value("mjd_day", 0);
  std::uint64_t seed = opt.seed.value_or(j.value("seed", 1));

  auto tones_for = [&](const char* pol_key) {
    std::vector<ppd::SynthTone> tones;
    for (const auto& tj : j.value(pol_key, nlohmann::json::array())) {
      ppd::SynthTone t;
      ppd::detail::require_field(tj, "freq_hz", pol_key);
      t.freq_hz = tj.at("freq_hz").get<double>();
      if (tj.contains("snr_db"))
        t.amplitude = ppd::tone_amplitude_for_snr(ppd::db_to_linear_snr(tj.at("snr_db").get<double>()),
                                                  fc.fft_length());
      ppd::detail::maybe(tj, "amplitude", t.amplitude);
      ppd::detail::maybe(tj, "start_s", t.start_s);
      ppd::detail::maybe(tj, "stop_s", t.stop_s);
      tones.push_back(t);
    }
    return tones;
  };
  const auto lhc_iq = ppd::synth_iq(fc, tones_for("tones_lhc"), duration_s,
                                    ppd::derive_seed(seed, 0));
  const auto rhc_iq = ppd::synth_iq(fc, tones_for("tones_rhc"), duration_s,
                                    ppd::derive_seed(seed, 1));
  const auto dets = ppd::fft_energy_detect(lhc_iq, rhc_iq, fc, mjd_day);

  std::vector<ppd::Detection> lhc, rhc;
  for (const auto& d : dets) (d.pol == ppd::Pol::LHC ? lhc : rhc).push_back(d);
  fs::create_directories(opt.out_dir);
  ppd::write_detections_csv(fs::path(opt.out_dir) / ppd::detection_filename(mjd_day, ppd::Pol::LHC),
                            lhc);
  ppd::write_detections_csv(fs::path(opt.out_dir) / ppd::detection_filename(mjd_day, ppd::Pol::RHC),
                            rhc);
  std::cout << "detections: LHC " << lhc.size() << ", RHC " << rhc.size() << "\n";
  return 0;
}

int cmd_pair(const CommonOpts& opt, bool no_iir, double band_lo_hz) {
  auto days = read_detection_dir(opt.in_dir);
  fs::create_directories(opt.out_dir);
  ppd::FilterConfig fcfg;  // IIR parameters at defaults
  std::size_t total = 0;
  for (auto& [day, streams] : days) {
    auto& [lhc, rhc] = streams;
    if (!no_iir) {
      double lo = band_lo_hz;
      if (lo <= 0.0) {
        lo = 1e18;
        for (const auto& d : lhc) lo = std::min(lo, d.freq_hz);
        for (const auto& d : rhc) lo = std::min(lo, d.freq_hz);
      }
      lhc = ppd::apply_iir_burst_reject(lhc, lo, fcfg);
      rhc = ppd::apply_iir_burst_reject(rhc, lo, fcfg);
    }
    const auto pairs = ppd::search_pairs(lhc, rhc);
    ppd::write_pairs_csv(fs::path(opt.out_dir) / ppd::pair_filename(day), pairs);
    total += pairs.size();
  }
  std::cout << "wrote " << total << " pairs across " << days.size() << " days\n";
  return 0;
}

int cmd_filter(const CommonOpts& opt, bool analyze_outputs) {
  const auto stage2 = read_pair_dir(opt.in_dir);
  const ppd::FilterConfig fcfg = ppd::preset(opt.preset);
  const ppd::AnalysisResult res = ppd::analyze_pairs(stage2, fcfg);
  fs::create_directories(opt.out_dir);
  if (analyze_outputs) {
    ppd::write_likelihood_csv(fs::path(opt.out_dir) / ("likelihood_" + opt.preset + ".csv"),
                              res.series);
    nlohmann::json mj;
    mj["trials"] = res.trials;
    mj["anomalous_bin"] = res.anomalous_bin;
    mj["min_log10_likelihood"] = res.min_log10_likelihood;
    if (res.multiplier) mj["all_events"] = ppd::multiplier_to_json(*res.multiplier);
    if (res.multiplier_reduced)
      mj["noise_discounted"] = ppd::multiplier_to_json(*res.multiplier_reduced);
    std::ofstream out(fs::path(opt.out_dir) / ("multiplier_" + opt.preset + ".json"));
    out << mj.dump(2) << '\n';
    std::cout << "trials " << res.trials << ", anomalous bin " << res.anomalous_bin
              << ", min log10 likelihood " << res.min_log10_likelihood << "\n";
  } else {
    ppd::write_filtered_csv(fs::path(opt.out_dir) / ("filtered_" + opt.preset + ".csv"),
                            res.filtered);
    std::cout << "filtered pairs: " << res.filtered.size() << "\n";
  }
  return 0;
}

int cmd_report(const CommonOpts& opt) {
  const auto stage2 = read_pair_dir(opt.in_dir);
  const ppd::FilterConfig fcfg = ppd::preset(opt.preset);
  const ppd::AnalysisResult res = ppd::analyze_pairs(stage2, fcfg);
  if (res.series.empty()) throw ppd::data_error("no filtered pairs to plot");
  fs::create_directories(opt.out_dir);
  const std::string note = "trials: " + std::to_string(res.trials);
  std::vector<ppd::ScatterPoint> lik;
  for (const auto& e : res.series)
    lik.push_back({static_cast<double>(e.ra_bin), e.log10_likelihood});
  ppd::emit_scatter(lik,
                    {opt.preset + ": log10 likelihood vs RA bin", "RA bin", "log10 likelihood",
                     {note}},
                    fs::path(opt.out_dir) / (opt.preset + "_log10_likelihood_vs_ra_bin.svg"),
                    fs::path(opt.out_dir) / (opt.preset + "_log10_likelihood_vs_ra_bin.csv"));
  std::cout << "wrote plots for preset " << opt.preset << "\n";
  return 0;
}

int cmd_run(const CommonOpts& opt) {
  ppd::PipelineConfig cfg = load_config(opt);
  const fs::path manifest = ppd::run_pipeline(cfg);
  std::cout << "manifest: " << manifest.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dual-polarization dt/df pulse-pair detection pipeline"};
  app.require_subcommand(1);

  CommonOpts opt;
  bool no_iir = false;
  double band_lo_hz = 0.0;

  auto add_common = [&](CLI::App* sub, bool with_in) {
    sub->add_option("--config", opt.config, "JSON configuration file");
    sub->add_option("--preset", opt.preset, "filter preset name (fig2..fig12, null375)");
    sub->add_option("--seed", opt.seed, "RNG seed override");
    sub->add_option("--out", opt.out_dir, "output directory");
    if (with_in) sub->add_option("--in", opt.in_dir, "input directory")->required();
  };

  auto* synth = app.add_subcommand("synth", "generate stage-1 detection files from a scenario");
  add_common(synth, false);
  auto* detect = app.add_subcommand("detect", "synthesize IQ and run the FFT energy detector");
  add_common(detect, false);
  auto* pair = app.add_subcommand("pair", "stage-2 coarse dt/df pair search");
  add_common(pair, true);
  pair->add_flag("--no-iir", no_iir, "skip the IIR narrowband burst rejection");
  pair->add_option("--band-lo-hz", band_lo_hz, "band low edge for IIR channelization");
  auto* filter = app.add_subcommand("filter", "apply stage-3 filters, write filtered pairs");
  add_common(filter, true);
  auto* analyze = app.add_subcommand("analyze", "stage-3 filters plus likelihood statistics");
  add_common(analyze, true);
  auto* report = app.add_subcommand("report", "emit scatter plots for a preset");
  add_common(report, true);
  auto* run = app.add_subcommand("run", "end-to-end pipeline run with manifest");
  add_common(run, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(opt);
    if (detect->parsed()) return cmd_detect(opt);
    if (pair->parsed()) return cmd_pair(opt, no_iir, band_lo_hz);
    if (filter->parsed()) return cmd_filter(opt, false);
    if (analyze->parsed()) return cmd_filter(opt, true);
    if (report->parsed()) return cmd_report(opt);
    if (run->parsed()) return cmd_run(opt);
  } catch (const ppd::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ppd::data_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
