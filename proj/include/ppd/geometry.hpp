#pragma once

#include <cmath>

namespace ppd {

// Mean sidereal rate: sidereal hours elapsed per solar hour.
inline constexpr double kSiderealRate = 1.00273790935;

// Greenwich Mean Sidereal Time in hours, standard linear approximation about J2000.
inline double gmst_hours(double mjd) {
  const double h = 18.697374558 + 24.06570982441908 * (mjd - 51544.5);
  double r = std::fmod(h, 24.0);
  return r < 0.0 ? r + 24.0 : r;
}

// Local Sidereal Time, equal to the RA on the meridian for a transit instrument.
inline double mjd_to_ra(double mjd_timestamp, double site_longitude_deg) {
  double r = std::fmod(gmst_hours(mjd_timestamp) + site_longitude_deg / 15.0, 24.0);
  return r < 0.0 ? r + 24.0 : r;
}

}  // namespace ppd
