#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "ppd/errors.hpp"
#include "ppd/model.hpp"
#include "ppd/rng.hpp"

namespace ppd {

struct FrontendConfig {
  double fft_bin_hz = 3.725;
  double integration_s = 0.27;
  double band_lo_hz = 1.43e9;  // desk-scale 64 kHz slice clear of the excision band
  double band_hi_hz = 1.43e9 + 64e3;
  double snr_threshold_db = 11.8;
  double lo_excision_lo_hz = 1.422e9;
  double lo_excision_hi_hz = 1.428e9;
  double phase_grid_s = kTimeGridS;
  double sample_rate_hz = 64e3;  // complex baseband, must cover the band span

  double center_hz() const { return 0.5 * (band_lo_hz + band_hi_hz); }

  // FFT length realizing fft_bin_hz at the configured sample rate. The
  // integration window is the FFT length; it must land within 5% of the
  // requested integration_s or the configuration is rejected.
  std::int64_t fft_length() const {
    const auto n = static_cast<std::int64_t>(std::llround(sample_rate_hz / fft_bin_hz));
    if (n < 2) throw config_error("FrontendConfig: fft_bin_hz too wide for the sample rate");
    return n;
  }

  void validate() const {
    if (!(band_lo_hz < band_hi_hz)) throw config_error("FrontendConfig: empty band");
    if (fft_bin_hz <= 0.0) throw config_error("FrontendConfig: fft_bin_hz must be positive");
    if (integration_s <= 0.0) throw config_error("FrontendConfig: integration_s must be positive");
    if (sample_rate_hz < band_hi_hz - band_lo_hz)
      throw config_error("FrontendConfig: sample rate below the band span");
    const double realized = static_cast<double>(fft_length()) / sample_rate_hz;
    if (std::fabs(realized - integration_s) > 0.05 * integration_s)
      throw config_error("FrontendConfig: integration_s not representable with the sample rate");
  }
};

// One synthesized RF tone, frequency given at RF.
struct SynthTone {
  double freq_hz = 0.0;
  double amplitude = 0.0;  // per-sample complex amplitude, sigma units
  double start_s = 0.0;
  double stop_s = std::numeric_limits<double>::infinity();
};

// Per-sample tone amplitude that produces the given linear S/N at the detector
// output (rectangular window, on-bin tone, unit per-quadrature noise).
inline double tone_amplitude_for_snr(double linear_snr, std::int64_t n_fft) {
  return std::sqrt(2.0 * linear_snr / static_cast<double>(n_fft));
}

// Circular complex Gaussian noise of unit per-quadrature variance plus the
// configured tones. Deterministic given the seed.
inline std::vector<std::complex<double>> synth_iq(const FrontendConfig& cfg,
                                                  const std::vector<SynthTone>& tones,
                                                  double duration_s, std::uint64_t seed) {
  cfg.validate();
  if (duration_s <= 0.0) throw config_error("synth_iq: duration must be positive");
  for (const SynthTone& tone : tones)
    if (tone.freq_hz < cfg.band_lo_hz || tone.freq_hz > cfg.band_hi_hz)
      throw config_error("synth_iq: tone frequency outside band");

  const auto n = static_cast<std::int64_t>(std::llround(duration_s * cfg.sample_rate_hz));
  std::vector<std::complex<double>> iq(static_cast<std::size_t>(n));
  auto rng = substream(seed, 0x6971);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (auto& z : iq) z = {gauss(rng), gauss(rng)};

  const double fc = cfg.center_hz();
  for (const SynthTone& tone : tones) {
    const double fb = tone.freq_hz - fc;  // baseband frequency
    const auto i0 = static_cast<std::int64_t>(
        std::max(0.0, std::ceil(tone.start_s * cfg.sample_rate_hz)));
    const auto i1 = std::min<std::int64_t>(
        n, tone.stop_s >= duration_s
               ? n
               : static_cast<std::int64_t>(std::floor(tone.stop_s * cfg.sample_rate_hz)));
    const double w = 2.0 * M_PI * fb / cfg.sample_rate_hz;
    for (std::int64_t i = i0; i < i1; ++i) {
      const double ph = w * static_cast<double>(i);
      iq[static_cast<std::size_t>(i)] += tone.amplitude * std::complex<double>(std::cos(ph),
                                                                               std::sin(ph));
    }
  }
  return iq;
}

namespace detail {

class FftPlan {
public:
  explicit FftPlan(std::int64_t n) : n_(n), buf_(static_cast<std::size_t>(n)) {
    plan_ = fftw_plan_dft_1d(static_cast<int>(n),
                             reinterpret_cast<fftw_complex*>(buf_.data()),
                             reinterpret_cast<fftw_complex*>(buf_.data()), FFTW_FORWARD,
                             FFTW_ESTIMATE);
  }
  ~FftPlan() { fftw_destroy_plan(plan_); }
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;

  // Power spectrum of n samples starting at src.
  void powers(const std::complex<double>* src, std::vector<double>& out) {
    std::copy(src, src + n_, buf_.begin());
    fftw_execute(plan_);
    out.resize(static_cast<std::size_t>(n_));
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::norm(buf_[k]);
  }

private:
  std::int64_t n_;
  std::vector<std::complex<double>> buf_;
  fftw_plan plan_;
};

// Trimmed mean of the central 80% of the values (robust wideband noise level).
inline double trimmed_mean(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t cut = v.size() / 10;
  const std::size_t lo = cut, hi = v.size() - cut;
  return std::accumulate(v.begin() + lo, v.begin() + hi, 0.0) / static_cast<double>(hi - lo);
}

}  // namespace detail

// FFT energy detector over integration windows aligned to the 0.25 s grid.
// Noise power per window is the trimmed mean of non-excised bin powers; every
// bin with (S+N)/N above threshold becomes a Detection. Excised bins are never
// emitted. Output sorted by (time, frequency) for both polarizations merged.
inline std::vector<Detection> fft_energy_detect(
    const std::vector<std::complex<double>>& lhc_iq,
    const std::vector<std::complex<double>>& rhc_iq, const FrontendConfig& cfg,
    int mjd_day = 0) {
  cfg.validate();
  const std::int64_t n_fft = cfg.fft_length();
  if (static_cast<std::int64_t>(lhc_iq.size()) < n_fft ||
      static_cast<std::int64_t>(rhc_iq.size()) < n_fft)
    throw data_error("fft_energy_detect: stream shorter than one integration");

  const double fs = cfg.sample_rate_hz;
  const double fc = cfg.center_hz();
  const double threshold_ratio = std::pow(10.0, cfg.snr_threshold_db / 10.0);

  // Bin -> RF frequency, flagging bins outside the band or inside excision.
  std::vector<double> bin_freq(static_cast<std::size_t>(n_fft));
  std::vector<char> usable(static_cast<std::size_t>(n_fft));
  for (std::int64_t k = 0; k < n_fft; ++k) {
    const double fb = (k <= n_fft / 2 ? k : k - n_fft) * fs / static_cast<double>(n_fft);
    const double f = fc + fb;
    bin_freq[static_cast<std::size_t>(k)] = f;
    usable[static_cast<std::size_t>(k)] =
        f >= cfg.band_lo_hz && f <= cfg.band_hi_hz &&
        !(f >= cfg.lo_excision_lo_hz && f <= cfg.lo_excision_hi_hz);
  }

  detail::FftPlan plan(n_fft);
  std::vector<Detection> out;
  std::vector<double> powers, noise_pool;
  const auto n_samples = static_cast<std::int64_t>(std::min(lhc_iq.size(), rhc_iq.size()));
  for (int pol = 0; pol < 2; ++pol) {
    const auto& iq = pol == 0 ? lhc_iq : rhc_iq;
    for (std::int64_t w = 0;; ++w) {
      const double t_s = static_cast<double>(w) * cfg.phase_grid_s;
      const auto start = static_cast<std::int64_t>(std::llround(t_s * fs));
      if (start + n_fft > n_samples) break;
      plan.powers(iq.data() + start, powers);
      noise_pool.clear();
      for (std::int64_t k = 0; k < n_fft; ++k)
        if (usable[static_cast<std::size_t>(k)]) noise_pool.push_back(powers[static_cast<std::size_t>(k)]);
      const double noise = detail::trimmed_mean(noise_pool);
      if (noise <= 0.0) continue;
      for (std::int64_t k = 0; k < n_fft; ++k) {
        if (!usable[static_cast<std::size_t>(k)]) continue;
        const double ratio = powers[static_cast<std::size_t>(k)] / noise;
        if (ratio > threshold_ratio) {
          out.push_back({pol == 0 ? Pol::LHC : Pol::RHC, mjd_day, t_s,
                         bin_freq[static_cast<std::size_t>(k)], 10.0 * std::log10(ratio)});
        }
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const Detection& a, const Detection& b) {
    if (a.t_s != b.t_s) return a.t_s < b.t_s;
    if (a.freq_hz != b.freq_hz) return a.freq_hz < b.freq_hz;
    return static_cast<int>(a.pol) < static_cast<int>(b.pol);
  });
  return out;
}

}  // namespace ppd
