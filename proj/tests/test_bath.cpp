#include <doctest.h>

#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>

#include "deco/bath.hpp"
#include "deco/errors.hpp"
#include "deco/quadrature.hpp"

using namespace deco;
using bath::ThermalBathSpectrum;
using cplx = std::complex<double>;

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kInf = std::numeric_limits<double>::infinity();

ThermalBathSpectrum lorentzian_bath(double beta = kInf) {
  return {bath::Lorentzian{0.1, 5.0, 1.0}, beta};
}

cplx correlation_reference(const ThermalBathSpectrum& b, double t) {
  auto s = bath::thermal_support(b);
  quad::Options opt;
  if (t != 0.0) opt.max_panel_width = kPi / std::abs(t);
  return quad::integrate_or_throw(
             [&](double w) {
               double g = bath::coupling_spectrum(b, w);
               return std::polar(g, -w * t);
             },
             s.lo, s.hi, opt, bath::spectrum_breakpoints(b))
      ;
}
}  // namespace

TEST_CASE("coupling spectrum honors the zero-temperature clip") {
  auto b = lorentzian_bath();
  CHECK(bath::coupling_spectrum(b, -1.0) == 0.0);
  CHECK(bath::coupling_spectrum(b, 5.0) == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(bath::coupling_spectrum(b, 6.0) == doctest::Approx(0.05).epsilon(1e-14));
}

TEST_CASE("detailed balance at finite temperature") {
  auto b = lorentzian_bath(2.0);
  double expected = 0.1 / std::expm1(10.0);  // peak value times occupation
  CHECK(bath::coupling_spectrum(b, -5.0) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(bath::coupling_spectrum(b, 5.0) ==
        doctest::Approx(0.1 * (1.0 + 1.0 / std::expm1(10.0))).epsilon(1e-12));
  // stimulated emission beats absorption at every frequency
  for (double w : {0.5, 2.0, 5.0, 8.0})
    CHECK(bath::coupling_spectrum(b, w) > bath::coupling_spectrum(b, -w));
}

TEST_CASE("flat band and ohmic base spectra") {
  ThermalBathSpectrum fb{bath::FlatBand{1.0, 0.0, 2.0}, kInf};
  CHECK(bath::coupling_spectrum(fb, 1.0) == 1.0);
  CHECK(bath::coupling_spectrum(fb, 2.5) == 0.0);
  CHECK(bath::golden_rule_rate(fb, 3.0) == 0.0);

  ThermalBathSpectrum oh{bath::Ohmic{0.3, 2.0}, kInf};
  CHECK(bath::coupling_spectrum(oh, 0.0) == 0.0);
  CHECK(bath::coupling_spectrum(oh, 2.0) ==
        doctest::Approx(0.3 * 2.0 * std::exp(-1.0)).epsilon(1e-14));

  ThermalBathSpectrum hard{bath::Ohmic{0.3, 2.0, bath::OhmicCutoff::hard}, kInf};
  CHECK(bath::coupling_spectrum(hard, 1.0) == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(bath::coupling_spectrum(hard, 2.1) == 0.0);
}

TEST_CASE("golden rule reference rate") {
  auto b = lorentzian_bath();
  CHECK(bath::golden_rule_rate(b, 5.0) == doctest::Approx(0.2 * kPi).epsilon(1e-14));
}

TEST_CASE("lorentzian correlation closed form") {
  auto b = lorentzian_bath();
  cplx expected = kPi * 0.1 * std::exp(-1.0) * std::polar(1.0, -5.0);
  cplx got = bath::correlation_function(b, 1.0);
  CHECK(std::abs(got - expected) < 1e-13);

  // transform of the idealized two-sided line, checked by wide quadrature
  quad::Options opt;
  opt.max_panel_width = 2.0;
  cplx byquad = quad::integrate_or_throw(
                    [&](double w) {
                      double g = 0.1 / ((w - 5.0) * (w - 5.0) + 1.0);
                      return std::polar(g, -w * 1.0);
                    },
                    5.0 - 2000.0, 5.0 + 2000.0, opt, {5.0})
                    ;
  CHECK(std::abs(byquad - expected) < 2e-3 * std::abs(expected));
}

TEST_CASE("flat band correlation closed form") {
  ThermalBathSpectrum fb{bath::FlatBand{1.0, 0.0, 2.0}, kInf};
  for (double t : {0.0, 0.7, 3.0, -1.3}) {
    cplx expected = t == 0.0 ? cplx(2.0, 0.0)
                             : 2.0 * (std::sin(t) / t) * std::polar(1.0, -t);
    CHECK(std::abs(bath::correlation_function(fb, t) - expected) < 1e-12);
  }
  CHECK(std::abs(bath::correlation_function(fb, 0.7) - correlation_reference(fb, 0.7)) <
        1e-9);
}

TEST_CASE("ohmic correlation closed forms match quadrature") {
  ThermalBathSpectrum oh{bath::Ohmic{0.5, 1.5}, kInf};
  for (double t : {0.0, 0.3, 2.0}) {
    cplx expected = 0.5 * 1.5 * 1.5 /
                    std::pow(cplx(1.0, 1.5 * t), 2.0);
    CHECK(std::abs(bath::correlation_function(oh, t) - expected) < 1e-12);
    CHECK(std::abs(bath::correlation_function(oh, t) - correlation_reference(oh, t)) <
          1e-7);
  }

  ThermalBathSpectrum sub{bath::Ohmic{0.5, 1.5, bath::OhmicCutoff::exponential, 0.7},
                          kInf};
  CHECK(std::abs(bath::correlation_function(sub, 0.8) -
                 correlation_reference(sub, 0.8)) < 1e-7);

  ThermalBathSpectrum hard{bath::Ohmic{0.4, 2.0, bath::OhmicCutoff::hard}, kInf};
  for (double t : {0.0, 0.9, 4.0})
    CHECK(std::abs(bath::correlation_function(hard, t) -
                   correlation_reference(hard, t)) < 1e-9);
  // both sides of the small-argument branch switch stay on the quadrature curve
  double tsw = 0.5 / 2.0;
  for (double t : {tsw * (1.0 - 1e-9), tsw * (1.0 + 1e-9)})
    CHECK(std::abs(bath::correlation_function(hard, t) -
                   correlation_reference(hard, t)) < 1e-10);
}

TEST_CASE("correlation is Hermitian in time") {
  ThermalBathSpectrum fb{bath::FlatBand{0.8, 0.5, 3.0}, 1.7};
  for (int i = 0; i < 20; ++i) {
    double t = 0.05 + 0.31 * i;
    cplx plus = bath::correlation_function(fb, t);
    cplx minus = bath::correlation_function(fb, -t);
    CHECK(std::abs(plus - std::conj(minus)) < 1e-12 * std::max(1.0, std::abs(plus)));
  }
  CHECK(bath::correlation_function(fb, 0.0).imag() ==
        doctest::Approx(0.0).epsilon(1e-12));
  CHECK(bath::correlation_function(fb, 0.0).real() > 0.0);
}

TEST_CASE("correlation transform reproduces the coupling spectrum") {
  // flat band, zero temperature
  ThermalBathSpectrum fb{bath::FlatBand{1.0, 0.5, 2.5}, kInf};
  double T = 1.2e4;
  for (int i = 0; i < 7; ++i) {
    double w = 0.8 + i * (1.4 / 6.0);
    quad::Options opt;
    opt.max_panel_width = kPi / std::max(std::abs(w), 3.0);
    opt.rel_tol = 1e-9;
    cplx back = quad::integrate_or_throw(
                    [&](double t) {
                      return bath::correlation_function(fb, t) * std::polar(1.0, w * t);
                    },
                    -T, T, opt, {0.0})
                     /
                (2.0 * kPi);
    CHECK(std::abs(back.real() - bath::coupling_spectrum(fb, w)) < 1e-4);
    CHECK(std::abs(back.imag()) < 1e-4);
  }

  // ohmic with exponential cutoff decays fast enough for a short window
  ThermalBathSpectrum oh{bath::Ohmic{0.5, 1.0}, kInf};
  for (double w : {0.4, 1.0, 2.2}) {
    quad::Options opt;
    opt.max_panel_width = 1.0;
    cplx back = quad::integrate_or_throw(
                    [&](double t) {
                      return bath::correlation_function(oh, t) * std::polar(1.0, w * t);
                    },
                    -2000.0, 2000.0, opt, {0.0})
                     /
                (2.0 * kPi);
    double g = bath::coupling_spectrum(oh, w);
    CHECK(std::abs(back.real() - g) < 1e-4 * std::max(1.0, g));
  }

  // lorentzian closed form transforms back to the line shape at w >= 0
  auto lor = lorentzian_bath();
  for (double w : {3.0, 5.0, 6.5}) {
    quad::Options opt;
    opt.max_panel_width = kPi / 12.0;
    cplx back = quad::integrate_or_throw(
                    [&](double t) {
                      return bath::correlation_function(lor, t) * std::polar(1.0, w * t);
                    },
                    -40.0, 40.0, opt, {0.0})
                     /
                (2.0 * kPi);
    CHECK(std::abs(back.real() - bath::coupling_spectrum(lor, w)) < 1e-4);
  }
}

TEST_CASE("correlation time equals inverse spectral half width") {
  CHECK(bath::correlation_time(lorentzian_bath()) == doctest::Approx(1.0).epsilon(1e-3));
  ThermalBathSpectrum fb{bath::FlatBand{1.0, 1.0, 3.5}, kInf};
  CHECK(bath::correlation_time(fb) == doctest::Approx(2.0 / 2.5).epsilon(1e-3));
  ThermalBathSpectrum oh{bath::Ohmic{0.3, 2.0}, kInf};
  CHECK(bath::correlation_time(oh) == doctest::Approx(0.8177 / 2.0).epsilon(5e-3));
}

TEST_CASE("correlation sampler tracks the clipped spectrum") {
  auto lor = lorentzian_bath();
  bath::CorrelationSampler samp(lor, 4.0);
  for (double t : {0.0, 0.37, 1.0, 2.49, 3.9}) {
    cplx ref = correlation_reference(lor, t);
    CHECK(std::abs(samp(t) - ref) < 2e-5 * std::max(1.0, std::abs(ref)));
  }
  // the clipped tail makes the sampled kernel differ from the two-sided
  // closed form at the percent level for this line position
  CHECK(std::abs(samp(0.0) - bath::correlation_function(lor, 0.0)) > 1e-3);

  ThermalBathSpectrum fb{bath::FlatBand{0.8, 0.5, 3.0}, 1.7};
  bath::CorrelationSampler fsamp(fb, 3.0);
  for (double t : {0.1, 1.0, 2.7}) {
    cplx ref = bath::correlation_function(fb, t);
    CHECK(std::abs(fsamp(t) - ref) < 1e-5 * std::max(1.0, std::abs(ref)));
    CHECK(std::abs(fsamp(-t) - std::conj(ref)) < 1e-5 * std::max(1.0, std::abs(ref)));
  }

  ThermalBathSpectrum oh{bath::Ohmic{0.5, 1.5}, kInf};
  bath::CorrelationSampler osamp(oh, 5.0);
  CHECK(std::abs(osamp(1.3) - bath::correlation_function(oh, 1.3)) == 0.0);
}

TEST_CASE("tabulated spectra interpolate and clip") {
  bath::Tabulated tab{{0.0, 1.0, 2.0}, {0.0, 1.0, 0.5}};
  ThermalBathSpectrum b{tab, kInf};
  CHECK(bath::coupling_spectrum(b, 0.5) == doctest::Approx(0.5));
  CHECK(bath::coupling_spectrum(b, 1.5) == doctest::Approx(0.75));
  CHECK(bath::coupling_spectrum(b, 2.5) == 0.0);
  CHECK(std::abs(bath::correlation_function(b, 0.0).real() - 1.25) < 1e-10);

  char path[] = "/tmp/deco_bath_tab_XXXXXX";
  int fd = mkstemp(path);
  REQUIRE(fd >= 0);
  {
    std::ofstream out(path);
    out << "omega,g0\n0.0,0.0\n1.0,1.0\n2.0,0.5\n";
  }
  auto loaded = bath::load_tabulated_csv(path);
  CHECK(loaded.omega == tab.omega);
  CHECK(loaded.g0 == tab.g0);
  std::remove(path);
}

TEST_CASE("bath validation rejects malformed models") {
  CHECK_THROWS_AS(bath::validate({bath::Lorentzian{0.1, 5.0, -1.0}, kInf}), Error);
  CHECK_THROWS_AS(bath::validate({bath::Lorentzian{0.1, 5.0, 1.0}, -2.0}), Error);
  CHECK_THROWS_AS(bath::validate({bath::FlatBand{1.0, 2.0, 1.0}, kInf}), Error);
  CHECK_THROWS_AS(bath::validate({bath::Ohmic{0.3, 0.0}, kInf}), Error);
  CHECK_THROWS_AS(bath::validate({bath::Tabulated{{1.0, 0.5}, {1.0, 1.0}}, kInf}),
                  Error);
  CHECK_NOTHROW(bath::validate(lorentzian_bath()));
}

TEST_CASE("finite temperature needs an infrared-vanishing coupling density") {
  // occupation grows like 1/(beta w) toward zero frequency, so G0(0) > 0
  // would make the thermal spectrum unbounded and the kernel divergent
  CHECK_THROWS_AS(bath::validate({bath::Lorentzian{0.2, 5.0, 1.0}, 1.7}), Error);
  CHECK_THROWS_AS(bath::validate({bath::FlatBand{0.3, 0.0, 3.0}, 1.7}), Error);
  CHECK_THROWS_AS(
      bath::validate({bath::Tabulated{{0.0, 1.0, 2.0}, {0.7, 1.0, 0.0}}, 2.0}),
      Error);
  CHECK_NOTHROW(bath::validate({bath::Lorentzian{0.2, 5.0, 1.0}, kInf}));
  CHECK_NOTHROW(bath::validate({bath::FlatBand{0.3, 0.5, 3.0}, 1.7}));
  CHECK_NOTHROW(bath::validate(
      {bath::Ohmic{0.5, 1.5, bath::OhmicCutoff::exponential, 1.0}, 0.7}));
  CHECK_NOTHROW(bath::validate(
      {bath::Tabulated{{0.0, 1.0, 2.0}, {0.0, 1.0, 0.0}}, 2.0}));
}
