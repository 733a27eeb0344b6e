#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "ppd/errors.hpp"
#include "ppd/model.hpp"
#include "ppd/rng.hpp"

namespace ppd {

inline constexpr int kNumRaBins = 21;
inline constexpr double kRaBinHr = 0.3;
inline constexpr double kRaSpanHr = 6.3;

// Eq.-style sorting statistic: log10(e) * (s_lhc + s_rhc) with s_p the linear S/N.
inline double snr_metric(const PulsePair& pair) {
  const double sl = db_to_linear_snr(pair.snr_lhc_db);
  const double sr = db_to_linear_snr(pair.snr_rhc_db);
  if (sl < 0.0 || sr < 0.0) throw std::domain_error("snr_metric: negative linear SNR");
  return std::log10(std::exp(1.0)) * (sl + sr);
}

// Stable descending sort by snr_metric; ties break by (mjd_timestamp, freq_hz).
inline std::vector<PulsePair> sort_pairs_desc(std::vector<PulsePair> pairs) {
  std::stable_sort(pairs.begin(), pairs.end(), [](const PulsePair& a, const PulsePair& b) {
    if (a.snr_metric != b.snr_metric) return a.snr_metric > b.snr_metric;
    if (a.mjd_timestamp != b.mjd_timestamp) return a.mjd_timestamp < b.mjd_timestamp;
    return a.freq_hz < b.freq_hz;
  });
  return pairs;
}

inline int ra_bin(double ra_hr) {
  if (!(ra_hr >= 0.0 && ra_hr < kRaSpanHr))
    throw data_error("ra_bin: RA outside the 0 to 6.3 hr observation session");
  int b = static_cast<int>(std::floor(ra_hr / kRaBinHr));
  return std::min(b, kNumRaBins - 1);
}

// C(n,k) p^k (1-p)^(n-k), evaluated in log space.
inline double binomial_pmf(std::int64_t k, std::int64_t n, double p) {
  if (k < 0 || n < 0 || k > n) throw std::domain_error("binomial_pmf: need 0 <= k <= n");
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("binomial_pmf: need 0 <= p <= 1");
  if (p == 0.0) return k == 0 ? 1.0 : 0.0;
  if (p == 1.0) return k == n ? 1.0 : 0.0;
  const double lg = std::lgamma(static_cast<double>(n) + 1.0) -
                    std::lgamma(static_cast<double>(k) + 1.0) -
                    std::lgamma(static_cast<double>(n - k) + 1.0);
  return std::exp(lg + k * std::log(p) + (n - k) * std::log1p(-p));
}

struct LikelihoodEntry {
  int rank = 0;  // 1-based trial number after the descending sort
  PulsePair pair;
  int ra_bin = 0;
  int cumulative_count_in_bin = 0;
  double log10_likelihood = 0.0;  // clamped, <= 0
};

using LikelihoodSeries = std::vector<LikelihoodEntry>;

// RA density likelihood over the ranked list. Event probability 1/21; at rank n
// with cumulative in-bin count k the raw density is binomial_pmf(k, n, 1/21).
// Counts below the noise expectation are clamped to the noise-expected density,
// so the series flags anomalous presence, not absence.
inline LikelihoodSeries ra_density_log_likelihood(const std::vector<PulsePair>& ranked) {
  const double p = 1.0 / kNumRaBins;
  LikelihoodSeries out;
  out.reserve(ranked.size());
  int counts[kNumRaBins] = {};
  int rank = 0;
  for (const PulsePair& pair : ranked) {
    ++rank;
    const int bin = ra_bin(pair.ra_hr);
    const int k = ++counts[bin];
    double raw = binomial_pmf(k, rank, p);
    const std::int64_t noise_k = std::llround(rank * p);
    if (k < rank * p) raw = binomial_pmf(noise_k, rank, p);
    out.push_back({rank, pair, bin, k, std::log10(raw)});
  }
  return out;
}

// |df| to the nearest nonzero integer multiple of base_hz (signed residual).
inline double multiplier_residual(double df_hz, double base_hz) {
  const double mag = std::fabs(df_hz);
  const double k = std::max(1.0, std::round(mag / base_hz));
  return mag - k * base_hz;
}

struct McMultiplierResult {
  double event_probability = 0.0;
  double sigma_residuals_hz = 0.0;
};

// Monte Carlo over uniform |df| in [df_lo, df_hi] (both signs): fraction of
// draws whose residual magnitude is within sigma_res_hz of a nonzero multiple
// of base_hz, plus the empirical spread of the residual magnitudes.
inline McMultiplierResult mc_multiplier_event_probability(double base_hz, double df_lo_hz,
                                                          double df_hi_hz, double sigma_res_hz,
                                                          int n_trials, std::uint64_t seed) {
  if (base_hz <= 0.0) throw config_error("mc_multiplier: base_hz must be positive");
  if (!(df_lo_hz >= 0.0 && df_lo_hz < df_hi_hz))
    throw config_error("mc_multiplier: need 0 <= df_lo < df_hi");
  if (!(sigma_res_hz < base_hz / 2.0))
    throw config_error("mc_multiplier: sigma_res must be below base/2");
  if (n_trials <= 0) throw config_error("mc_multiplier: n_trials must be positive");

  auto rng = substream(seed, 0x6d63);
  std::uniform_real_distribution<double> mag(df_lo_hz, df_hi_hz);
  std::bernoulli_distribution sign(0.5);
  std::int64_t hits = 0;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n_trials; ++i) {
    const double df = (sign(rng) ? 1.0 : -1.0) * mag(rng);
    const double r = std::fabs(multiplier_residual(df, base_hz));
    if (r <= sigma_res_hz) ++hits;
    sum += r;
    sum2 += r * r;
  }
  const double mean = sum / n_trials;
  return {static_cast<double>(hits) / n_trials,
          std::sqrt(std::max(0.0, sum2 / n_trials - mean * mean))};
}

struct MultiplierAnalysis {
  double base_hz = 0.0;
  std::vector<double> residuals_hz;
  double sigma_residuals_hz = 0.0;  // max |residual| over the analyzed pairs
  double event_probability = 0.0;
  int k_events = 0;
  int n_trials = 0;
  double raw_likelihood = 1.0;
  int multiplier_freedom_n = 1;
  double corrected_likelihood = 1.0;
};

inline double trials_correction(double likelihood, double n) {
  if (n < 1.0) throw std::domain_error("trials_correction: N must be >= 1");
  return std::min(1.0, n * likelihood);
}

// df-multiplier repetition likelihood for one group of pairs. The event
// probability follows the 1.8 * sigma / base heuristic with sigma capped at the
// largest observed residual; all analyzed pairs count as events.
inline MultiplierAnalysis repetition_likelihood(const std::vector<PulsePair>& pairs,
                                                double base_hz, double fft_bin_hz = 3.725) {
  if (pairs.empty()) throw data_error("repetition_likelihood: no pairs");
  MultiplierAnalysis out;
  out.base_hz = base_hz;
  double cap = 0.0;
  for (const PulsePair& pair : pairs) {
    const double r = multiplier_residual(pair.df_hz, base_hz);
    out.residuals_hz.push_back(r);
    cap = std::max(cap, std::fabs(r));
  }
  // Degenerate all-zero residuals: floor sigma at the quantization limit.
  if (cap == 0.0) cap = fft_bin_hz / 2.0;
  out.sigma_residuals_hz = cap;
  out.event_probability = std::min(1.0, 1.8 * cap / base_hz);
  out.k_events = out.n_trials = static_cast<int>(pairs.size());
  out.raw_likelihood = binomial_pmf(out.k_events, out.n_trials, out.event_probability);
  out.multiplier_freedom_n = static_cast<int>(std::llround(base_hz / fft_bin_hz));
  out.corrected_likelihood = trials_correction(out.raw_likelihood, out.multiplier_freedom_n);
  return out;
}

// Fig-10-style half-range concentration: if every |df| falls inside a
// half-measure subrange, the chance is 2 * (1/2)^k; otherwise no anomaly.
inline double half_range_concentration(const std::vector<PulsePair>& pairs, double df_lo,
                                       double df_hi, double sub_lo, double sub_hi) {
  const double full = df_hi - df_lo;
  const double sub = sub_hi - sub_lo;
  if (!(full > 0.0) || std::fabs(sub - 0.5 * full) > 1e-9 * full)
    throw config_error("half_range_concentration: subrange must be half of the full range");
  for (const PulsePair& pair : pairs) {
    const double m = std::fabs(pair.df_hz);
    if (m < sub_lo || m > sub_hi) return 1.0;
  }
  return std::min(1.0, 2.0 * std::pow(0.5, static_cast<double>(pairs.size())));
}

}  // namespace ppd
