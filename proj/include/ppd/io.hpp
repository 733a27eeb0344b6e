#pragma once

#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ppd/errors.hpp"
#include "ppd/model.hpp"
#include "ppd/stats.hpp"

namespace ppd {

namespace io {

inline std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

inline double to_double(const std::string& s, const char* what) {
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    throw data_error(std::string("malformed numeric field in ") + what + ": " + s);
  }
}

}  // namespace io

inline std::string detection_filename(int mjd_day, Pol pol) {
  return "det_" + std::to_string(mjd_day) + "_" + pol_name(pol) + ".csv";
}

inline std::string pair_filename(int mjd_day) {
  return "pairs_" + std::to_string(mjd_day) + ".csv";
}

// Stage-1 detection file: header pol,mjd_day,t_s,freq_hz,snr_db, sorted rows.
inline void write_detections_csv(const std::filesystem::path& path,
                                 const std::vector<Detection>& dets) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write " + path.string());
  out << "pol,mjd_day,t_s,freq_hz,snr_db\n";
  for (const Detection& d : dets) {
    out << pol_name(d.pol) << ',' << d.mjd_day << ',' << io::fmt("%.2f", d.t_s) << ','
        << io::fmt("%.6f", d.freq_hz) << ',' << io::fmt("%.6f", d.snr_db) << '\n';
  }
}

inline std::vector<Detection> read_detections_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "pol,mjd_day,t_s,freq_hz,snr_db")
    throw data_error("bad stage-1 header in " + path.string());
  std::vector<Detection> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = io::split_csv_line(line);
    if (f.size() != 5) throw data_error("bad stage-1 row in " + path.string());
    Detection d;
    d.pol = pol_from_name(f[0]);
    d.mjd_day = static_cast<int>(io::to_double(f[1], "mjd_day"));
    d.t_s = io::to_double(f[2], "t_s");
    d.freq_hz = io::to_double(f[3], "freq_hz");
    d.snr_db = io::to_double(f[4], "snr_db");
    out.push_back(d);
  }
  return out;
}

inline const char* kPairHeader = "mjd_timestamp,ra_hr,dt_s,df_hz,freq_hz,snr_lhc_db,snr_rhc_db";

inline void write_pairs_csv(const std::filesystem::path& path,
                            const std::vector<PulsePair>& pairs) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write " + path.string());
  out << kPairHeader << '\n';
  for (const PulsePair& p : pairs) {
    out << io::fmt("%.10f", p.mjd_timestamp) << ',' << io::fmt("%.6f", p.ra_hr) << ','
        << io::fmt("%.2f", p.dt_s) << ',' << io::fmt("%.6f", p.df_hz) << ','
        << io::fmt("%.6f", p.freq_hz) << ',' << io::fmt("%.6f", p.snr_lhc_db) << ','
        << io::fmt("%.6f", p.snr_rhc_db) << '\n';
  }
}

inline std::vector<PulsePair> read_pairs_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kPairHeader)
    throw data_error("bad stage-2 header in " + path.string());
  std::vector<PulsePair> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = io::split_csv_line(line);
    if (f.size() != 7) throw data_error("bad stage-2 row in " + path.string());
    PulsePair p;
    p.mjd_timestamp = io::to_double(f[0], "mjd_timestamp");
    p.mjd_day = static_cast<int>(p.mjd_timestamp);
    p.ra_hr = io::to_double(f[1], "ra_hr");
    p.dt_s = io::to_double(f[2], "dt_s");
    p.df_hz = io::to_double(f[3], "df_hz");
    p.freq_hz = io::to_double(f[4], "freq_hz");
    p.snr_lhc_db = io::to_double(f[5], "snr_lhc_db");
    p.snr_rhc_db = io::to_double(f[6], "snr_rhc_db");
    out.push_back(p);
  }
  return out;
}

// Filtered-pair file: stage-2 schema plus snr_metric and ra_bin.
inline void write_filtered_csv(const std::filesystem::path& path,
                               const std::vector<PulsePair>& pairs) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write " + path.string());
  out << kPairHeader << ",snr_metric,ra_bin\n";
  for (const PulsePair& p : pairs) {
    out << io::fmt("%.10f", p.mjd_timestamp) << ',' << io::fmt("%.6f", p.ra_hr) << ','
        << io::fmt("%.2f", p.dt_s) << ',' << io::fmt("%.6f", p.df_hz) << ','
        << io::fmt("%.6f", p.freq_hz) << ',' << io::fmt("%.6f", p.snr_lhc_db) << ','
        << io::fmt("%.6f", p.snr_rhc_db) << ',' << io::fmt("%.6f", p.snr_metric) << ','
        << ra_bin(p.ra_hr) << '\n';
  }
}

inline void write_likelihood_csv(const std::filesystem::path& path,
                                 const LikelihoodSeries& series) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write " + path.string());
  out << "rank,ra_bin,log10_likelihood,mjd,freq_hz,dt_s,df_hz,snr_metric\n";
  for (const LikelihoodEntry& e : series) {
    out << e.rank << ',' << e.ra_bin << ',' << io::fmt("%.6f", e.log10_likelihood) << ','
        << io::fmt("%.10f", e.pair.mjd_timestamp) << ',' << io::fmt("%.6f", e.pair.freq_hz)
        << ',' << io::fmt("%.2f", e.pair.dt_s) << ',' << io::fmt("%.6f", e.pair.df_hz) << ','
        << io::fmt("%.6f", e.pair.snr_metric) << '\n';
  }
}

inline nlohmann::json multiplier_to_json(const MultiplierAnalysis& m) {
  return nlohmann::json{{"base_hz", m.base_hz},
                        {"residuals_hz", m.residuals_hz},
                        {"sigma_residuals_hz", m.sigma_residuals_hz},
                        {"event_probability", m.event_probability},
                        {"k_events", m.k_events},
                        {"n_trials", m.n_trials},
                        {"raw_likelihood", m.raw_likelihood},
                        {"multiplier_freedom_N", m.multiplier_freedom_n},
                        {"corrected_likelihood", m.corrected_likelihood}};
}

inline std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot hash " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0)
    EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

}  // namespace ppd
