#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "ppd/errors.hpp"
#include "ppd/geometry.hpp"
#include "ppd/model.hpp"

namespace ppd {

// Stage-2 coarse acceptance window (strict inequalities).
struct CoarseWindow {
  double dt_max_s = 10.0;
  double df_max_hz = 2000.0;
  double site_longitude_deg = 0.0;
};

namespace detail {

inline void check_sorted_one_day(const std::vector<Detection>& dets, const char* label) {
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (i > 0 && dets[i].t_s < dets[i - 1].t_s)
      throw data_error(std::string("search_pairs: ") + label + " input not time-sorted");
    if (dets[i].mjd_day != dets.front().mjd_day)
      throw data_error(std::string("search_pairs: ") + label + " input spans multiple MJD days");
  }
}

}  // namespace detail

// Emits every opposite-polarization combination inside the coarse window:
// |t_lhc - t_rhc| < dt_max and |f_lhc - f_rhc| < df_max. All qualifying
// combinations are kept; downstream filters handle pileups. Time-banded merge
// join, O(n log n + output).
inline std::vector<PulsePair> search_pairs(const std::vector<Detection>& lhc,
                                           const std::vector<Detection>& rhc,
                                           const CoarseWindow& win = {}) {
  detail::check_sorted_one_day(lhc, "LHC");
  detail::check_sorted_one_day(rhc, "RHC");
  if (!lhc.empty() && !rhc.empty() && lhc.front().mjd_day != rhc.front().mjd_day)
    throw data_error("search_pairs: LHC and RHC inputs are from different MJD days");

  std::vector<PulsePair> out;
  std::size_t lo = 0;
  for (const Detection& l : lhc) {
    while (lo < rhc.size() && rhc[lo].t_s <= l.t_s - win.dt_max_s) ++lo;
    for (std::size_t j = lo; j < rhc.size() && rhc[j].t_s < l.t_s + win.dt_max_s; ++j) {
      const Detection& r = rhc[j];
      const double df = l.freq_hz - r.freq_hz;
      if (std::fabs(df) >= win.df_max_hz) continue;
      PulsePair pair;
      pair.mjd_day = l.mjd_day;
      pair.dt_s = l.t_s - r.t_s;
      pair.df_hz = df;
      pair.freq_hz = l.freq_hz;
      pair.snr_lhc_db = l.snr_db;
      pair.snr_rhc_db = r.snr_db;
      const double t_early = std::min(l.t_s, r.t_s);
      pair.mjd_timestamp = l.mjd_day + t_early / 86400.0;
      pair.ra_hr = mjd_to_ra(pair.mjd_timestamp, win.site_longitude_deg);
      out.push_back(pair);
    }
  }
  std::sort(out.begin(), out.end(), [](const PulsePair& a, const PulsePair& b) {
    if (a.mjd_timestamp != b.mjd_timestamp) return a.mjd_timestamp < b.mjd_timestamp;
    if (a.freq_hz != b.freq_hz) return a.freq_hz < b.freq_hz;
    if (a.dt_s != b.dt_s) return a.dt_s < b.dt_s;
    return a.df_hz < b.df_hz;
  });
  return out;
}

}  // namespace ppd
