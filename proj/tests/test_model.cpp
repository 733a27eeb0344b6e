#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <functional>
#include <random>

#include "ppd/model.hpp"

using namespace ppd;

namespace {

// Independent quadrature oracle for the Ricean density: I0 via its integral
// representation I0(z) = (1/pi) int_0^pi exp(z cos t) dt, evaluated with
// Simpson's rule, everything else in plain arithmetic.
double rician_pdf_quadrature(double a, double nu, double sigma) {
  const double z = a * nu / (sigma * sigma);
  const int n = 20000;  // even
  double sum = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double t = M_PI * i / n;
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    // factor exp(-z) out to keep the integrand bounded
    sum += w * std::exp(z * (std::cos(t) - 1.0));
  }
  const double i0_scaled = sum * (M_PI / n) / 3.0 / M_PI;  // = I0(z) e^{-z}
  const double s2 = sigma * sigma;
  return (a / s2) * std::exp(-(a * a + nu * nu) / (2.0 * s2) + z) * i0_scaled;
}

double simpson(double lo, double hi, int n, const std::function<double(double)>& f) {
  double sum = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double x = lo + (hi - lo) * i / n;
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    sum += w * f(x);
  }
  return sum * (hi - lo) / n / 3.0;
}

}  // namespace

TEST_CASE("db_to_linear_snr reference points") {
  CHECK(db_to_linear_snr(0.0) == Catch::Approx(0.0).margin(1e-15));
  CHECK(db_to_linear_snr(11.8) == Catch::Approx(14.1356124843620816).margin(1e-12));
  CHECK(db_to_linear_snr(3.0103) == Catch::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("db_to_linear_snr is strictly increasing and inverts the dB map") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> db(-5.0, 40.0);
  double prev_s = db_to_linear_snr(-6.0);
  for (double x = -5.0; x <= 40.0; x += 0.37) {
    const double s = db_to_linear_snr(x);
    CHECK(s > prev_s);
    prev_s = s;
  }
  for (int i = 0; i < 200; ++i) {
    const double x = db(rng);
    CHECK(linear_snr_to_db(db_to_linear_snr(x)) == Catch::Approx(x).margin(1e-12));
  }
}

TEST_CASE("rician_log_pdf reduces to Rayleigh at nu = 0") {
  CHECK(rician_log_pdf(1.0, 0.0, 1.0) == Catch::Approx(-0.5).margin(1e-14));
  CHECK(std::isinf(rician_log_pdf(0.0, 0.0, 1.0)));
  for (double a = 0.05; a <= 10.0; a += 0.05) {
    const double rayleigh = std::log(a) - a * a / 2.0;
    CHECK(rician_log_pdf(a, 0.0, 1.0) == Catch::Approx(rayleigh).margin(1e-12));
  }
}

TEST_CASE("rician_log_pdf matches the quadrature oracle") {
  CHECK(rician_log_pdf(3.0, 3.0, 1.0) ==
        Catch::Approx(std::log(rician_pdf_quadrature(3.0, 3.0, 1.0))).margin(1e-9));
  for (double a : {0.5, 1.0, 2.5, 6.0, 9.0}) {
    for (double nu : {0.0, 1.5, 3.0}) {
      const double oracle = rician_pdf_quadrature(a, nu, 1.0);
      CHECK(rician_log_pdf(a, nu, 1.0) == Catch::Approx(std::log(oracle)).margin(1e-9));
    }
  }
  CHECK_THROWS_AS(rician_log_pdf(-0.1, 1.0, 1.0), std::domain_error);
}

TEST_CASE("rician density normalizes to one") {
  for (double nu : {0.0, 1.5, 3.0}) {
    const double total = simpson(1e-12, nu + 12.0, 40000, [&](double a) {
      return std::exp(rician_log_pdf(a, nu, 1.0));
    });
    CHECK(total == Catch::Approx(1.0).margin(1e-6));
  }
}

TEST_CASE("log_bessel_i0 is continuous across the series/asymptotic switch") {
  // High-precision references for log I0 straddling the switch point.
  CHECK(log_bessel_i0(19.999999) == Catch::Approx(17.5896094535737670).margin(1e-9));
  CHECK(log_bessel_i0(20.000001) == Catch::Approx(17.5896114029147828).margin(1e-9));
  CHECK(std::isfinite(log_bessel_i0(1e4)));
}

TEST_CASE("joint_polarized_log10_pdf symmetry and composition") {
  ToneModel equal{1.5, 1.5, 1.0};
  CHECK(joint_polarized_log10_pdf(12.0, 15.0, equal) ==
        joint_polarized_log10_pdf(15.0, 12.0, equal));

  // Compositional oracle: sum of two Ricean log densities plus the
  // independently computed dB->amplitude Jacobian terms.
  ToneModel tones{0.0, 3.0, 1.0};
  const double ln10 = std::log(10.0);
  for (double dbl : {3.0, 11.8, 20.0}) {
    for (double dbr : {5.0, 14.0, 25.0}) {
      auto part = [&](double db, double nu) {
        const double s = db_to_linear_snr(db);
        const double a = std::sqrt(2.0 * s);
        const double jac = (ln10 / 10.0) * (s + 1.0) / a;
        return rician_log_pdf(a, nu, 1.0) + std::log(jac);
      };
      const double expected = (part(dbl, tones.nu_lhc) + part(dbr, tones.nu_rhc)) / ln10;
      CHECK(joint_polarized_log10_pdf(dbl, dbr, tones) ==
            Catch::Approx(expected).margin(1e-12));
    }
  }
}

TEST_CASE("strong tones dominate the high-SNR tail of the joint density") {
  ToneModel none{0.0, 0.0, 1.0};
  ToneModel strong{3.0, 3.0, 1.0};
  for (double db = 14.0; db <= 22.0; db += 1.0)
    CHECK(joint_polarized_log10_pdf(db, db, strong) > joint_polarized_log10_pdf(db, db, none));
  CHECK_THROWS_AS(joint_polarized_log10_pdf(-3.0, 10.0, none), std::domain_error);
}

TEST_CASE("time grid predicate") {
  CHECK(on_time_grid(103.75));
  CHECK(on_time_grid(0.0));
  CHECK_FALSE(on_time_grid(0.1));
  CHECK_FALSE(on_time_grid(0.25 + 5e-9));
}
