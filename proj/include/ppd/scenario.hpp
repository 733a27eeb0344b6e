#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ppd/errors.hpp"
#include "ppd/geometry.hpp"
#include "ppd/model.hpp"
#include "ppd/rng.hpp"

namespace ppd {

enum class JitterKind { Gaussian, Uniform };

// Injected transmitter: pulse pairs at a fixed dt, df on multiples of a base
// frequency (or uniform), emitted while the beam transits the source RA.
struct Injection {
  double ra_hr = 5.25;
  double dec_deg = -7.6;
  double dt_s = -3.75;
  std::optional<double> df_base_hz = 58.575;  // nullopt: uniform df
  double df_jitter_hz = 0.0;
  JitterKind df_jitter_kind = JitterKind::Gaussian;
  double snr_lo_db = 14.0;
  double snr_hi_db = 18.0;
  std::vector<int> active_mjd_days;  // empty: all days
  int pulses_per_transit = 1;
  double burst_bandwidth_hz = 0.0;  // > 0: cluster frequencies per transit
  double burst_duration_s = 0.0;    // > 0: cluster times per transit
};

// Wideband short-duration pileup of pairs with scattered dt/df.
struct EnergyBurstEvent {
  double mjd_timestamp = 0.0;
  double duration_s = 20.0;
  int n_pairs = 15;
  double dt_spread_s = 1.0;
  double snr_lo_db = 11.9;
  double snr_hi_db = 13.0;
};

// Repeated pulses confined to one frequency channel, in both polarizations.
struct NarrowbandRfiEvent {
  double freq_hz = 0.0;
  double start_mjd = 0.0;
  double stop_mjd = 0.0;
  double snr_db = 12.5;
  double repeat_interval_s = 0.25;
};

struct Scenario {
  int n_days = 143;
  int start_mjd_day = 59460;
  double session_hours = 6.3;
  double noise_detection_rate = 0.0;  // detections / s / polarization, whole band
  std::vector<Injection> injections;
  std::vector<EnergyBurstEvent> bursts;
  std::vector<NarrowbandRfiEvent> rfi;
  double band_lo_hz = 1.404e9;
  double band_hi_hz = 1.446e9;
  double excision_lo_hz = 1.422e9;
  double excision_hi_hz = 1.428e9;
  double snr_threshold_db = 11.8;
  double fft_bin_hz = 3.725;
  double grid_s = kTimeGridS;
  double site_longitude_deg = 0.0;
  double beam_fwhm_deg = 2.0;
  double beam_trunc_fwhm = 1.5;  // truncate the beam at +-1.5 FWHM
  std::uint64_t seed = 1;

  void validate() const {
    if (n_days <= 0) throw config_error("Scenario: n_days must be positive");
    if (noise_detection_rate < 0.0) throw config_error("Scenario: negative noise rate");
    if (!(band_lo_hz < band_hi_hz)) throw config_error("Scenario: band_lo must be below band_hi");
    for (const Injection& inj : injections) {
      if (!(inj.ra_hr >= 0.0 && inj.ra_hr < 24.0))
        throw config_error("Scenario: injection RA must be in [0, 24)");
      if (!on_time_grid(inj.dt_s, grid_s))
        throw config_error("Scenario: injection dt_s must be a multiple of the 0.25 s grid");
    }
    for (const NarrowbandRfiEvent& e : rfi)
      if (e.freq_hz < band_lo_hz || e.freq_hz > band_hi_hz)
        throw config_error("Scenario: RFI frequency outside band");
  }
};

struct DayDetections {
  int mjd_day = 0;
  double session_start_s = 0.0;  // grid-aligned; LST ~ 0 at session start
  std::vector<Detection> lhc, rhc;
};

namespace detail {

inline double snap_to_grid(double t_s, double grid_s) {
  return std::round(t_s / grid_s) * grid_s;
}

// Frequency grid with the excision gap removed; indexes the allowed bins.
struct FreqGrid {
  double lo_hz, bin_hz;
  std::int64_t n_total, gap_start, gap_len;

  explicit FreqGrid(const Scenario& sc)
      : lo_hz(sc.band_lo_hz), bin_hz(sc.fft_bin_hz) {
    n_total = static_cast<std::int64_t>(std::floor((sc.band_hi_hz - sc.band_lo_hz) / bin_hz)) + 1;
    const auto g0 = static_cast<std::int64_t>(std::ceil((sc.excision_lo_hz - lo_hz) / bin_hz));
    const auto g1 = static_cast<std::int64_t>(std::floor((sc.excision_hi_hz - lo_hz) / bin_hz));
    gap_start = std::clamp<std::int64_t>(g0, 0, n_total);
    gap_len = std::max<std::int64_t>(0, std::min(g1, n_total - 1) - gap_start + 1);
  }

  std::int64_t n_allowed() const { return n_total - gap_len; }
  double freq_of_allowed(std::int64_t i) const {
    if (i >= gap_start) i += gap_len;
    return lo_hz + static_cast<double>(i) * bin_hz;
  }
  bool allowed_freq(double f) const {
    const std::int64_t i = std::llround((f - lo_hz) / bin_hz);
    return i >= 0 && i < n_total && (i < gap_start || i >= gap_start + gap_len);
  }
  double quantize(double f) const { return lo_hz + std::round((f - lo_hz) / bin_hz) * bin_hz; }
};

}  // namespace detail

// Grid-aligned session start: the first 0.25 s tick of the day where the local
// sidereal time has just wrapped to 0 hr.
inline double session_start_s(int mjd_day, double site_longitude_deg, double grid_s = kTimeGridS) {
  const double lst0 = mjd_to_ra(static_cast<double>(mjd_day), site_longitude_deg);
  const double wait_hr = std::fmod(24.0 - lst0, 24.0);
  const double t = wait_hr * 3600.0 / kSiderealRate;
  return std::ceil(t / grid_s) * grid_s;
}

// Closed-form expected noise pair count after the dt/df hyperparameter filter,
// for Poisson noise detections on the time grid with grid-quantized uniform
// frequencies: rate_l * rate_r * T * (n_dt * grid) * (n_df_offsets / n_bins).
inline double expected_noise_pair_count(double rate_l, double rate_r, double duration_s,
                                        int n_dt_grid_values, double grid_s, double df_min_hz,
                                        double df_max_hz, double fft_bin_hz,
                                        std::int64_t n_allowed_bins) {
  const std::int64_t k_lo = static_cast<std::int64_t>(std::ceil(df_min_hz / fft_bin_hz - 1e-9));
  const std::int64_t k_hi = static_cast<std::int64_t>(std::floor(df_max_hz / fft_bin_hz + 1e-9));
  const std::int64_t n_df = 2 * std::max<std::int64_t>(0, k_hi - std::max<std::int64_t>(k_lo, 1) + 1);
  return rate_l * rate_r * duration_s * (n_dt_grid_values * grid_s) *
         (static_cast<double>(n_df) / static_cast<double>(n_allowed_bins));
}

// Inverts the oracle: per-polarization noise detection rate that yields the
// target filtered-pair flux per RA bin per day at a single-dt preset.
inline double noise_rate_for_bin_flux(double pairs_per_bin_per_day, const Scenario& sc,
                                      int n_dt_grid_values = 1, double df_min_hz = 80.0,
                                      double df_max_hz = 400.0, int n_ra_bins = 21) {
  const detail::FreqGrid grid(sc);
  const double t = sc.session_hours * 3600.0;
  const double per_day = pairs_per_bin_per_day * n_ra_bins;
  const double unit = expected_noise_pair_count(1.0, 1.0, t, n_dt_grid_values, sc.grid_s,
                                                df_min_hz, df_max_hz, sc.fft_bin_hz,
                                                grid.n_allowed());
  return std::sqrt(per_day / unit);
}

// Pure-noise scenario calibrated to the 1.5 pairs / RA bin / 65 days flux
// anchor at the single-dt preset.
inline Scenario noise_preset(std::uint64_t seed, int n_days = 143) {
  Scenario sc;
  sc.n_days = n_days;
  sc.seed = seed;
  sc.noise_detection_rate = noise_rate_for_bin_flux(1.5 / 65.0, sc);
  return sc;
}

// Statistical stage-1 generator: full-experiment-scale Detection streams with
// Poisson noise plus configured injections, bursts and RFI. Deterministic
// given the scenario seed; day-level substreams make output independent of
// generation order.
inline std::vector<DayDetections> generate_detections(const Scenario& sc) {
  sc.validate();
  const detail::FreqGrid grid(sc);
  const double t_session = sc.session_hours * 3600.0;
  const std::int64_t n_slots = static_cast<std::int64_t>(std::floor(t_session / sc.grid_s));
  const double s_min = db_to_linear_snr(sc.snr_threshold_db);

  std::vector<DayDetections> days(sc.n_days);
  for (int d = 0; d < sc.n_days; ++d) {
    DayDetections& day = days[d];
    day.mjd_day = sc.start_mjd_day + d;
    day.session_start_s = session_start_s(day.mjd_day, sc.site_longitude_deg, sc.grid_s);
    const double t0 = day.session_start_s;
    const double t_end = t0 + t_session;

    // Noise floor, per polarization.
    for (int pol = 0; pol < 2; ++pol) {
      auto rng = substream(sc.seed, static_cast<std::uint64_t>(day.mjd_day), 1, pol);
      std::poisson_distribution<std::int64_t> count(sc.noise_detection_rate * t_session);
      std::uniform_int_distribution<std::int64_t> slot(0, n_slots - 1);
      std::uniform_int_distribution<std::int64_t> bin(0, grid.n_allowed() - 1);
      std::exponential_distribution<double> tail(1.0);
      const std::int64_t n = count(rng);
      auto& dets = pol == 0 ? day.lhc : day.rhc;
      dets.reserve(static_cast<std::size_t>(n) + 64);
      for (std::int64_t i = 0; i < n; ++i) {
        Detection det;
        det.pol = pol == 0 ? Pol::LHC : Pol::RHC;
        det.mjd_day = day.mjd_day;
        det.t_s = t0 + static_cast<double>(slot(rng)) * sc.grid_s;
        det.freq_hz = grid.freq_of_allowed(bin(rng));
        det.snr_db = linear_snr_to_db(s_min + tail(rng));
        dets.push_back(det);
      }
    }

    // Injected transmitters.
    for (std::size_t ii = 0; ii < sc.injections.size(); ++ii) {
      const Injection& inj = sc.injections[ii];
      if (!inj.active_mjd_days.empty() &&
          std::find(inj.active_mjd_days.begin(), inj.active_mjd_days.end(), day.mjd_day) ==
              inj.active_mjd_days.end())
        continue;
      auto rng = substream(sc.seed, static_cast<std::uint64_t>(day.mjd_day), 2, ii);
      const double fwhm_hr =
          sc.beam_fwhm_deg / (15.0 * std::cos(inj.dec_deg * M_PI / 180.0));
      const double sigma_hr = fwhm_hr / 2.354820045;
      const double trunc_hr = sc.beam_trunc_fwhm * fwhm_hr;
      const double t_transit = t0 + inj.ra_hr * 3600.0 / kSiderealRate;

      std::normal_distribution<double> beam_offset(0.0, sigma_hr);
      std::uniform_real_distribution<double> snr(inj.snr_lo_db, inj.snr_hi_db);
      std::uniform_real_distribution<double> uni01(0.0, 1.0);
      std::uniform_int_distribution<std::int64_t> bin(0, grid.n_allowed() - 1);

      // Multiplier indexes whose |df| stays inside the stage-3 acceptance band.
      std::vector<int> mult;
      if (inj.df_base_hz) {
        for (int k = 1; k * *inj.df_base_hz <= 400.0; ++k)
          if (k * *inj.df_base_hz >= 80.0) mult.push_back(k);
        if (mult.empty())
          throw config_error("Scenario: df_base_hz has no multiple inside the 80-400 Hz band");
      }

      double cluster_t0 = t_transit, cluster_f0 = 0.0;
      if (inj.burst_duration_s > 0.0) {
        double th;
        do { th = beam_offset(rng); } while (std::fabs(th) > trunc_hr);
        cluster_t0 = t_transit + th * 3600.0 / kSiderealRate;
      }
      if (inj.burst_bandwidth_hz > 0.0) cluster_f0 = grid.freq_of_allowed(bin(rng));

      for (int p = 0; p < inj.pulses_per_transit; ++p) {
        double t_l;
        if (inj.burst_duration_s > 0.0) {
          t_l = cluster_t0 + uni01(rng) * inj.burst_duration_s;
        } else {
          // Beam-gain weighted emission time: rejection-sample the truncated
          // Gaussian beam profile in RA offset.
          double th;
          do { th = beam_offset(rng); } while (std::fabs(th) > trunc_hr);
          t_l = t_transit + th * 3600.0 / kSiderealRate;
        }
        t_l = detail::snap_to_grid(t_l, sc.grid_s);
        const double t_r = t_l - inj.dt_s;
        if (t_l < t0 || t_l >= t_end || t_r < t0 || t_r >= t_end) continue;

        double df = 0.0;
        if (inj.df_base_hz) {
          const int k = mult[static_cast<std::size_t>(uni01(rng) * mult.size()) % mult.size()];
          df = (uni01(rng) < 0.5 ? -1.0 : 1.0) * k * *inj.df_base_hz;
        } else {
          df = (uni01(rng) < 0.5 ? -1.0 : 1.0) * (80.0 + uni01(rng) * 320.0);
        }
        if (inj.df_jitter_hz > 0.0) {
          if (inj.df_jitter_kind == JitterKind::Gaussian)
            df += std::normal_distribution<double>(0.0, inj.df_jitter_hz)(rng);
          else
            df += (2.0 * uni01(rng) - 1.0) * inj.df_jitter_hz;
        }

        double f_l = 0.0, f_r = 0.0;
        for (int tries = 0; tries < 64; ++tries) {
          if (inj.burst_bandwidth_hz > 0.0)
            f_l = grid.quantize(cluster_f0 + (uni01(rng) - 0.5) * inj.burst_bandwidth_hz);
          else
            f_l = grid.freq_of_allowed(bin(rng));
          f_r = grid.quantize(f_l - df);
          if (grid.allowed_freq(f_l) && grid.allowed_freq(f_r)) break;
        }

        day.lhc.push_back({Pol::LHC, day.mjd_day, t_l, f_l, snr(rng)});
        day.rhc.push_back({Pol::RHC, day.mjd_day, t_r, f_r, snr(rng)});
      }
    }

    // Energy bursts.
    for (std::size_t bi = 0; bi < sc.bursts.size(); ++bi) {
      const EnergyBurstEvent& ev = sc.bursts[bi];
      if (static_cast<int>(std::floor(ev.mjd_timestamp)) != day.mjd_day) continue;
      auto rng = substream(sc.seed, static_cast<std::uint64_t>(day.mjd_day), 3, bi);
      std::uniform_real_distribution<double> uni01(0.0, 1.0);
      std::uniform_real_distribution<double> snr(ev.snr_lo_db, ev.snr_hi_db);
      std::uniform_int_distribution<std::int64_t> bin(0, grid.n_allowed() - 1);
      const double t_b = (ev.mjd_timestamp - day.mjd_day) * 86400.0;
      for (int i = 0; i < ev.n_pairs; ++i) {
        const double t_l = detail::snap_to_grid(t_b + uni01(rng) * ev.duration_s, sc.grid_s);
        const double dt = detail::snap_to_grid((2.0 * uni01(rng) - 1.0) * ev.dt_spread_s,
                                               sc.grid_s);
        const double t_r = t_l - dt;
        if (t_l < t0 || t_l >= t_end || t_r < t0 || t_r >= t_end) continue;
        const double df = (uni01(rng) < 0.5 ? -1.0 : 1.0) * (80.0 + uni01(rng) * 320.0);
        double f_l = grid.freq_of_allowed(bin(rng));
        double f_r = grid.quantize(f_l - df);
        if (!grid.allowed_freq(f_r)) continue;
        day.lhc.push_back({Pol::LHC, day.mjd_day, t_l, f_l, snr(rng)});
        day.rhc.push_back({Pol::RHC, day.mjd_day, t_r, f_r, snr(rng)});
      }
    }

    // Narrowband repeating RFI, both polarizations.
    for (const NarrowbandRfiEvent& ev : sc.rfi) {
      const double day_start_mjd = day.mjd_day + t0 / 86400.0;
      const double day_end_mjd = day.mjd_day + t_end / 86400.0;
      const double lo = std::max(ev.start_mjd, day_start_mjd);
      const double hi = std::min(ev.stop_mjd, day_end_mjd);
      if (lo >= hi) continue;
      const double f = grid.quantize(ev.freq_hz);
      for (double t = detail::snap_to_grid((lo - day.mjd_day) * 86400.0, sc.grid_s);
           t < (hi - day.mjd_day) * 86400.0; t += ev.repeat_interval_s) {
        const double ts = detail::snap_to_grid(t, sc.grid_s);
        day.lhc.push_back({Pol::LHC, day.mjd_day, ts, f, ev.snr_db});
        day.rhc.push_back({Pol::RHC, day.mjd_day, ts, f, ev.snr_db});
      }
    }

    auto by_time_freq = [](const Detection& a, const Detection& b) {
      if (a.t_s != b.t_s) return a.t_s < b.t_s;
      return a.freq_hz < b.freq_hz;
    };
    std::sort(day.lhc.begin(), day.lhc.end(), by_time_freq);
    std::sort(day.rhc.begin(), day.rhc.end(), by_time_freq);
  }
  return days;
}

}  // namespace ppd
