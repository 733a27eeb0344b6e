#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "ppd/errors.hpp"

namespace ppd {

enum class Pol { LHC, RHC };

inline const char* pol_name(Pol p) { return p == Pol::LHC ? "LHC" : "RHC"; }

inline Pol pol_from_name(const std::string& s) {
  if (s == "LHC") return Pol::LHC;
  if (s == "RHC") return Pol::RHC;
  throw data_error("unknown polarization label: " + s);
}

// Timestamp grid shared by every stage: detections land on 0.25 s ticks.
inline constexpr double kTimeGridS = 0.25;
inline constexpr double kTimeGridTolS = 1e-9;

// One above-threshold spectral pulse in one circular polarization.
struct Detection {
  Pol pol = Pol::LHC;
  int mjd_day = 0;
  double t_s = 0.0;      // seconds within day, multiple of the 0.25 s grid
  double freq_hz = 0.0;  // RF frequency
  double snr_db = 0.0;   // measured (S+N)/N in dB
};

inline bool on_time_grid(double t_s, double grid_s = kTimeGridS) {
  const double r = t_s / grid_s;
  return std::fabs(r - std::round(r)) * grid_s <= kTimeGridTolS;
}

// An LHC/RHC detection pair. dt_s is LHC arrival time minus RHC arrival time.
struct PulsePair {
  double mjd_timestamp = 0.0;  // fractional MJD of the earlier pulse
  int mjd_day = 0;
  double ra_hr = 0.0;  // beam RA at mjd_timestamp, [0, 24)
  double dt_s = 0.0;   // LHC time - RHC time, 0.25 s quantized
  double df_hz = 0.0;  // LHC freq - RHC freq
  double freq_hz = 0.0;  // RF frequency of the LHC pulse
  double snr_lhc_db = 0.0;
  double snr_rhc_db = 0.0;
  double snr_metric = 0.0;  // filled by stats
};

// Tone amplitudes in units of the (normalized) noise standard deviation.
struct ToneModel {
  double nu_lhc = 0.0;
  double nu_rhc = 0.0;
  double sigma = 1.0;
};

// dB-measured (S+N)/N to linear S/N. Total function; negative for snr_db < 0.
inline double db_to_linear_snr(double snr_db) {
  return std::pow(10.0, snr_db / 10.0) - 1.0;
}

inline double linear_snr_to_db(double s) { return 10.0 * std::log10(1.0 + s); }

// log I0(z), series below the switch point, asymptotic expansion above.
inline double log_bessel_i0(double z) {
  z = std::fabs(z);
  if (z < 20.0) {
    // I0(z) = sum_k (z^2/4)^k / (k!)^2
    double term = 1.0, sum = 1.0;
    const double q = 0.25 * z * z;
    for (int k = 1; k < 200; ++k) {
      term *= q / (static_cast<double>(k) * k);
      sum += term;
      if (term < sum * 1e-17) break;
    }
    return std::log(sum);
  }
  // I0(z) ~ e^z / sqrt(2 pi z) * sum_k a_k / z^k, a_0 = 1,
  // a_{k+1} = a_k (2k+1)^2 / (8 (k+1)).
  double a = 1.0, sum = 1.0, zk = 1.0;
  for (int k = 0; k < 10; ++k) {
    a *= static_cast<double>(2 * k + 1) * (2 * k + 1) / (8.0 * (k + 1));
    zk *= z;
    sum += a / zk;
  }
  return z - 0.5 * std::log(2.0 * M_PI * z) + std::log(sum);
}

// Natural-log Ricean amplitude density:
// ln[(a/sigma^2) exp(-(a^2+nu^2)/(2 sigma^2)) I0(a nu / sigma^2)].
inline double rician_log_pdf(double amplitude, double nu, double sigma) {
  if (amplitude < 0.0) throw std::domain_error("rician_log_pdf: amplitude < 0");
  if (sigma <= 0.0) throw std::domain_error("rician_log_pdf: sigma <= 0");
  if (amplitude == 0.0) return -std::numeric_limits<double>::infinity();
  const double s2 = sigma * sigma;
  return std::log(amplitude / s2) - (amplitude * amplitude + nu * nu) / (2.0 * s2) +
         log_bessel_i0(amplitude * nu / s2);
}

// Amplitude convention: a = sqrt(2 sigma^2 s) with s the linear S/N, i.e. tone
// power nu^2/2 relative to per-quadrature noise variance.
inline double snr_db_to_amplitude(double snr_db, double sigma = 1.0) {
  const double s = db_to_linear_snr(snr_db);
  if (s < 0.0) throw std::domain_error("snr_db_to_amplitude: negative linear SNR");
  return std::sqrt(2.0 * sigma * sigma * s);
}

// log10 joint density of the two polarizations' measured dB SNRs under
// independent Ricean amplitude marginals, including the dB-to-amplitude
// change-of-variables Jacobian.
inline double joint_polarized_log10_pdf(double snr_lhc_db, double snr_rhc_db,
                                        const ToneModel& tones) {
  const double ln10 = std::log(10.0);
  double total = 0.0;
  const double db[2] = {snr_lhc_db, snr_rhc_db};
  const double nu[2] = {tones.nu_lhc, tones.nu_rhc};
  for (int p = 0; p < 2; ++p) {
    const double s = db_to_linear_snr(db[p]);
    if (s < 0.0) throw std::domain_error("joint_polarized_log10_pdf: negative linear SNR");
    const double a = std::sqrt(2.0 * tones.sigma * tones.sigma * s);
    if (a == 0.0) return -std::numeric_limits<double>::infinity();
    // da/d(dB) = sigma^2 (ln 10 / 10) (s + 1) / a
    const double jac = tones.sigma * tones.sigma * (ln10 / 10.0) * (s + 1.0) / a;
    total += rician_log_pdf(a, nu[p], tones.sigma) + std::log(jac);
  }
  return total / ln10;
}

}  // namespace ppd
