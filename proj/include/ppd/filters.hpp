#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>
#include <vector>

#include "ppd/errors.hpp"
#include "ppd/model.hpp"

namespace ppd {

// Burst metric is always measured on the fixed coarse window, independent of
// the dt/df hyperparameters chosen later.
inline constexpr double kBurstDtMaxS = 3.0;
inline constexpr double kBurstDfMinHz = 80.0;
inline constexpr double kBurstDfMaxHz = 400.0;

// Matched-filter dt hyperparameter: |dt| <= x, an interval, or an explicit
// quantized set such as {-3.75}.
struct DtSpec {
  enum class Kind { AbsMax, Range, Set };
  Kind kind = Kind::AbsMax;
  double abs_max_s = 3.0;
  double lo_s = 0.0, hi_s = 0.0;
  std::vector<double> values_s;

  static DtSpec abs_max(double x) { return {Kind::AbsMax, x, 0.0, 0.0, {}}; }
  static DtSpec range(double lo, double hi) { return {Kind::Range, 0.0, lo, hi, {}}; }
  static DtSpec set(std::vector<double> v) { return {Kind::Set, 0.0, 0.0, 0.0, std::move(v)}; }

  bool contains(double dt_s) const {
    switch (kind) {
      case Kind::AbsMax:
        return std::fabs(dt_s) <= abs_max_s + kTimeGridTolS;
      case Kind::Range:
        return dt_s >= lo_s - kTimeGridTolS && dt_s <= hi_s + kTimeGridTolS;
      case Kind::Set:
        for (double v : values_s)
          if (std::fabs(dt_s - v) <= kTimeGridTolS) return true;
        return false;
    }
    return false;
  }

  // Count of 0.25 s grid offsets accepted (used by the coincidence oracle).
  int grid_value_count(double grid_s = kTimeGridS) const {
    switch (kind) {
      case Kind::AbsMax:
        return 2 * static_cast<int>(std::floor(abs_max_s / grid_s + 1e-9)) + 1;
      case Kind::Range:
        return static_cast<int>(std::floor(hi_s / grid_s + 1e-9)) -
               static_cast<int>(std::ceil(lo_s / grid_s - 1e-9)) + 1;
      case Kind::Set:
        return static_cast<int>(values_s.size());
    }
    return 0;
  }
};

struct FilterConfig {
  DtSpec dt_spec = DtSpec::set({-3.75});
  double df_abs_max_hz = 400.0;
  double df_abs_min_hz = 80.0;  // rejection region: |df| < 80 removed
  double if_excision_lo_hz = 1.422e9;
  double if_excision_hi_hz = 1.428e9;
  double iir_gain = 0.99;
  double iir_threshold_db = 11.88;
  double iir_baseline_db = 0.0;  // channel state fed on no-detection epochs
  double burst_window_s = 30.0;
  double burst_threshold = 150.0;
  double ra_subbin_hr = 0.03;
  double ra_bin_hr = 0.3;
  int n_ra_bins = 21;
  double ra_span_hr = 6.3;
  double fft_bin_hz = 3.725;
  double grid_s = kTimeGridS;
  double multiplier_base_hz = 58.575;

  void validate() const {
    if (!(df_abs_min_hz >= 0.0 && df_abs_min_hz < df_abs_max_hz))
      throw config_error("FilterConfig: need 0 <= df_abs_min < df_abs_max");
    if (std::fabs(n_ra_bins * ra_bin_hr - ra_span_hr) > 1e-9)
      throw config_error("FilterConfig: n_ra_bins * ra_bin_hr must equal ra_span_hr");
    if (std::fabs(ra_bin_hr / ra_subbin_hr - 10.0) > 1e-9)
      throw config_error("FilterConfig: ra_bin_hr / ra_subbin_hr must equal 10");
  }
};

inline int ra_subbin_index(double ra_hr, const FilterConfig& cfg) {
  const int n = static_cast<int>(std::lround(cfg.ra_span_hr / cfg.ra_subbin_hr));
  int i = static_cast<int>(std::floor(ra_hr / cfg.ra_subbin_hr));
  return std::clamp(i, 0, n - 1);
}

// Removes pairs with either pulse frequency inside the closed excision band.
inline std::vector<PulsePair> excise_central_if(std::vector<PulsePair> pairs,
                                                const FilterConfig& cfg = {}) {
  auto inside = [&](double f) { return f >= cfg.if_excision_lo_hz && f <= cfg.if_excision_hi_hz; };
  std::erase_if(pairs, [&](const PulsePair& p) {
    return inside(p.freq_hz) || inside(p.freq_hz - p.df_hz);
  });
  return pairs;
}

// Session filter: pairs outside the 0 to 6.3 hr RA range carry no bin and are
// dropped before stage-3 analysis.
inline std::vector<PulsePair> session_ra_filter(std::vector<PulsePair> pairs,
                                                const FilterConfig& cfg = {}) {
  std::erase_if(pairs,
                [&](const PulsePair& p) { return !(p.ra_hr >= 0.0 && p.ra_hr < cfg.ra_span_hr); });
  return pairs;
}

// First-order IIR narrowband burst rejection, run on detections before pairing.
// Per frequency channel (FFT bin width), once per 0.25 s epoch:
//   y <- g*y + (1-g)*x, x = detection SNR in dB, baseline on silent epochs.
// A detection is dropped when its channel's post-update y exceeds the
// threshold. Detections must be time-sorted.
inline std::vector<char> iir_burst_reject(const std::vector<Detection>& dets, double band_lo_hz,
                                          const FilterConfig& cfg = {}) {
  struct ChannelState {
    double y;
    std::int64_t epoch;
  };
  std::unordered_map<std::int64_t, ChannelState> state;
  state.reserve(dets.size());
  std::vector<char> keep(dets.size(), 1);
  const double g = cfg.iir_gain;
  double prev_t = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < dets.size(); ++i) {
    const Detection& d = dets[i];
    if (d.t_s < prev_t) throw data_error("iir_burst_reject: detections not time-sorted");
    prev_t = d.t_s;
    const std::int64_t chan = std::llround((d.freq_hz - band_lo_hz) / cfg.fft_bin_hz);
    const std::int64_t epoch = std::llround(d.t_s / cfg.grid_s);
    auto [it, fresh] = state.try_emplace(chan, ChannelState{cfg.iir_baseline_db, epoch - 1});
    // Collapse the silent epochs since the last update in closed form.
    const std::int64_t silent = std::max<std::int64_t>(0, epoch - it->second.epoch - 1);
    double y = cfg.iir_baseline_db +
               std::pow(g, static_cast<double>(silent)) * (it->second.y - cfg.iir_baseline_db);
    y = g * y + (1.0 - g) * d.snr_db;
    it->second = {y, epoch};
    if (y > cfg.iir_threshold_db) keep[i] = 0;
  }
  return keep;
}

inline std::vector<Detection> apply_iir_burst_reject(const std::vector<Detection>& dets,
                                                     double band_lo_hz,
                                                     const FilterConfig& cfg = {}) {
  const std::vector<char> keep = iir_burst_reject(dets, band_lo_hz, cfg);
  std::vector<Detection> out;
  out.reserve(dets.size());
  for (std::size_t i = 0; i < dets.size(); ++i)
    if (keep[i]) out.push_back(dets[i]);
  return out;
}

// SNR burst metric per (MJD day, RA subbin): sum of (SNR_LHC + SNR_RHC)/2 over
// pairs that have a subsequent pair in the same cell within burst_window_s.
class BurstMetricTable {
public:
  double metric(int mjd_day, int subbin) const {
    auto it = cells_.find(key(mjd_day, subbin));
    return it == cells_.end() ? 0.0 : it->second;
  }
  void add(int mjd_day, int subbin, double v) { cells_[key(mjd_day, subbin)] += v; }
  std::size_t size() const { return cells_.size(); }

private:
  static std::int64_t key(int day, int sub) {
    return static_cast<std::int64_t>(day) * 1024 + sub;
  }
  std::unordered_map<std::int64_t, double> cells_;
};

// Computed once on the full stage-2 output at the fixed |dt| <= 3 s,
// 80 <= |df| <= 400 Hz window; later hyperparameter choices reuse it.
inline BurstMetricTable compute_burst_metric_table(const std::vector<PulsePair>& pairs,
                                                   const FilterConfig& cfg = {}) {
  struct Item {
    double t_s;
    double half_sum_db;
  };
  std::unordered_map<std::int64_t, std::vector<Item>> cells;
  for (const PulsePair& p : pairs) {
    if (std::fabs(p.dt_s) > kBurstDtMaxS + kTimeGridTolS) continue;
    const double adf = std::fabs(p.df_hz);
    if (adf < kBurstDfMinHz || adf > kBurstDfMaxHz) continue;
    const std::int64_t k =
        static_cast<std::int64_t>(p.mjd_day) * 1024 + ra_subbin_index(p.ra_hr, cfg);
    // Snap back onto the epoch grid: reconstructing seconds from a fractional
    // MJD loses ~1e-6 s, enough to break the inclusive window boundary.
    const double t_raw = (p.mjd_timestamp - p.mjd_day) * 86400.0;
    const double t_s = std::round(t_raw / cfg.grid_s) * cfg.grid_s;
    cells[k].push_back({t_s, 0.5 * (p.snr_lhc_db + p.snr_rhc_db)});
  }
  BurstMetricTable table;
  for (auto& [k, items] : cells) {
    std::sort(items.begin(), items.end(),
              [](const Item& a, const Item& b) { return a.t_s < b.t_s; });
    const int day = static_cast<int>(k / 1024);
    const int sub = static_cast<int>(k % 1024);
    for (std::size_t i = 0; i + 1 < items.size(); ++i) {
      // Pair i qualifies iff a later pair exists within the burst window.
      if (items[i + 1].t_s - items[i].t_s <= cfg.burst_window_s)
        table.add(day, sub, items[i].half_sum_db);
    }
  }
  return table;
}

// Removes every pair whose (MJD, subbin) cell metric exceeds the threshold.
inline std::vector<PulsePair> apply_burst_filter(std::vector<PulsePair> pairs,
                                                 const BurstMetricTable& table,
                                                 const FilterConfig& cfg = {}) {
  std::erase_if(pairs, [&](const PulsePair& p) {
    return table.metric(p.mjd_day, ra_subbin_index(p.ra_hr, cfg)) > cfg.burst_threshold;
  });
  return pairs;
}

// dt_spec membership plus the df acceptance band: |df| < df_abs_min rejected,
// df_abs_min <= |df| <= df_abs_max kept.
inline std::vector<PulsePair> hyperparameter_filter(std::vector<PulsePair> pairs,
                                                    const FilterConfig& cfg) {
  std::erase_if(pairs, [&](const PulsePair& p) {
    if (!cfg.dt_spec.contains(p.dt_s)) return true;
    const double adf = std::fabs(p.df_hz);
    return adf < cfg.df_abs_min_hz || adf > cfg.df_abs_max_hz;
  });
  return pairs;
}

}  // namespace ppd
