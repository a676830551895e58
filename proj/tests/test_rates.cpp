#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>
#include <vector>

#include "deco/bath.hpp"
#include "deco/csv.hpp"
#include "deco/errors.hpp"
#include "deco/modulation.hpp"
#include "deco/quadrature.hpp"
#include "deco/rates.hpp"
#include "doctest.h"

using namespace deco;
using cplx = std::complex<double>;

namespace {

constexpr double kPi = 3.14159265358979323846;
const double kInf = std::numeric_limits<double>::infinity();

bath::ThermalBathSpectrum narrow_line() {
  return {bath::Lorentzian{0.1, 5.0, 1.0}, kInf};
}

bath::ThermalBathSpectrum band() {
  return {bath::FlatBand{1.0, 1.0, 3.0}, kInf};
}

}  // namespace

TEST_CASE("constant drive reaches the golden-rule rate and shift") {
  auto b = narrow_line();
  auto rb = rates::convolution_rates(b, modulation::Constant{cplx(1.0, 0.0)},
                                     4.0, rates::Regime::an, 40.0);
  double gr = bath::golden_rule_rate(b, 4.0);
  CHECK(std::abs(rb.r_e / gr - 1.0) < 1e-3);
  CHECK(std::abs(rb.r_g) < 2e-4);

  bath::Support s = bath::thermal_support(b);
  double pv_e = quad::principal_value(
      [&](double w) { return bath::coupling_spectrum(b, w); }, 4.0, s.lo, s.hi,
      {});
  double pv_g = -quad::integrate_real(
      [&](double w) { return bath::coupling_spectrum(b, w) / (4.0 + w); },
      s.lo, s.hi, {}, {5.0});
  CHECK(std::abs(rb.delta_e - pv_e) < 1e-4);
  CHECK(std::abs(rb.delta_g - pv_g) < 1e-4);
  CHECK(rb.r() == 0.5 * (rb.r_e + rb.r_g));
  CHECK(rb.delta_a() == rb.delta_e - rb.delta_g);
}

TEST_CASE("monochromatic drive samples the spectrum at the shifted frequency") {
  auto b = narrow_line();
  auto rb = rates::convolution_rates(
      b, modulation::Monochromatic{cplx(1.0, 0.0), -1.0}, 4.0,
      rates::Regime::an, 40.0);
  CHECK(std::abs(rb.r_e / bath::golden_rule_rate(b, 3.0) - 1.0) < 2e-3);
}

TEST_CASE("zero drive produces identically zero rates") {
  auto b = band();
  auto rb = rates::convolution_rates(b, modulation::Constant{cplx(0.0, 0.0)},
                                     2.0, rates::Regime::an, 1.7);
  CHECK(rb.r_e == 0.0);
  CHECK(rb.r_g == 0.0);
  CHECK(rb.delta_e == 0.0);
  CHECK(rb.delta_g == 0.0);
  CHECK(rates::decoherence_exponent(b, modulation::Constant{cplx(0.0, 0.0)},
                                    2.0, rates::Regime::an, 1.7) == 0.0);
}

TEST_CASE("phase-noise sector equals the undressed sector at zero frequency") {
  auto b = band();
  modulation::ModulationWaveform w = modulation::ImpulsivePm{kPi, 0.5};
  auto pn = rates::convolution_rates(b, w, 3.7, rates::Regime::pn, 2.3);
  auto an = rates::convolution_rates(b, w, 0.0, rates::Regime::an, 2.3);
  CHECK(pn.r_e == an.r_e);
  CHECK(pn.r_g == an.r_g);
  CHECK(pn.delta_e == an.delta_e);
  CHECK(pn.delta_g == an.delta_g);
  CHECK(rates::decoherence_exponent(b, w, 3.7, rates::Regime::pn, 2.3) ==
        rates::decoherence_exponent(b, w, 0.0, rates::Regime::an, 2.3));
}

TEST_CASE("time-domain and frequency-domain routes accumulate the same exponent") {
  auto L1 = narrow_line();
  auto FB = band();
  bath::ThermalBathSpectrum OH{
      bath::Ohmic{0.5, 1.5, bath::OhmicCutoff::exponential, 1.0}, kInf};
  bath::ThermalBathSpectrum FBT{bath::FlatBand{0.3, 0.5, 3.0}, 1.7};
  bath::ThermalBathSpectrum TAB{
      bath::Tabulated{{0.5, 1.5, 2.5}, {0.0, 0.4, 0.0}}, kInf};

  modulation::ModulationWaveform cst = modulation::Constant{cplx(1.0, 0.0)};
  modulation::ModulationWaveform mono =
      modulation::Monochromatic{cplx(1.0, 0.0), 0.8};
  modulation::ModulationWaveform pmpi = modulation::ImpulsivePm{kPi, 0.5};
  modulation::ModulationWaveform pmw = modulation::ImpulsivePm{1.1, 0.45};
  modulation::ModulationWaveform oo = modulation::OnOff{0.3, 1.0};
  modulation::ModulationWaveform qp = modulation::Quasiperiodic{
      {{cplx(0.8, 0.0), 0.3}, {cplx(0.0, 0.6), -0.9}}};

  struct Triple {
    const bath::ThermalBathSpectrum* b;
    const modulation::ModulationWaveform* w;
    double wa;
    double t;
  };
  std::vector<Triple> triples = {
      {&L1, &cst, 4.0, 2.0},  {&L1, &mono, 4.0, 2.0}, {&L1, &pmpi, 5.0, 3.5},
      {&L1, &pmw, 5.0, 2.0},  {&L1, &oo, 4.0, 3.5},   {&L1, &qp, 4.0, 2.0},
      {&FB, &cst, 2.0, 2.0},  {&FB, &mono, 2.0, 3.5}, {&FB, &pmpi, 2.0, 2.0},
      {&FB, &qp, 2.0, 2.0},   {&OH, &cst, 1.0, 2.0},  {&OH, &mono, 1.0, 3.5},
      {&OH, &oo, 1.0, 3.5},   {&FBT, &cst, 1.5, 2.0}, {&FBT, &mono, 1.5, 2.0},
      {&FBT, &pmpi, 1.5, 3.5}, {&TAB, &cst, 1.0, 2.0}, {&TAB, &pmw, 1.0, 3.5},
      {&TAB, &qp, 1.0, 2.0},  {&TAB, &oo, 1.0, 2.0}};
  REQUIRE(triples.size() == 20);

  const bath::ThermalBathSpectrum* open = nullptr;
  std::optional<bath::CorrelationSampler> kernel;
  for (const auto& tr : triples) {
    if (open != tr.b) {
      kernel.emplace(*tr.b, 3.6);
      open = tr.b;
    }
    double j = rates::decoherence_exponent(*tr.b, *tr.w, tr.wa,
                                           rates::Regime::an, tr.t);
    quad::Options opt;
    opt.rel_tol = 1e-7;
    opt.abs_tol = 1e-12;
    double jc = quad::integrate_real(
        [&](double tp) {
          return rates::convolution_rates(*kernel, *tr.w, tr.wa,
                                          rates::Regime::an, tp)
              .r_e;
        },
        0.0, tr.t, opt, modulation::time_breakpoints(*tr.w, tr.t));
    CHECK(std::abs(jc - j) <= 1e-4 * std::max(std::abs(j), 1e-10));
  }
}

TEST_CASE("exponent rises quadratically at early times") {
  auto b = band();
  modulation::ModulationWaveform w = modulation::Constant{cplx(1.0, 0.0)};
  CHECK(rates::decoherence_exponent(b, w, 2.0, rates::Regime::an, 0.0) == 0.0);
  double j1 = rates::decoherence_exponent(b, w, 2.0, rates::Regime::an, 0.002);
  double j2 = rates::decoherence_exponent(b, w, 2.0, rates::Regime::an, 0.004);
  REQUIRE(j1 > 0.0);
  CHECK(std::abs(j2 / j1 - 4.0) < 1e-3);
}

TEST_CASE("fluence-averaged rate converges monotonically to the comb limit") {
  auto b = narrow_line();
  modulation::ImpulsivePm pm{kPi, 0.5};
  double wa = 5.0 + 2.0 * kPi;  // lowest comb line lands on the spectral peak
  auto dec = modulation::harmonics(pm, 400);
  auto lt = rates::longtime_rate(b, dec, wa, 320.0);
  CHECK(lt.conditions_verified);
  double prev = kInf;
  double err = kInf;
  for (double t : {20.0, 40.0, 80.0, 160.0, 320.0}) {
    double r = rates::decoherence_exponent(b, pm, wa, rates::Regime::an, t) / t;
    err = std::abs(r / lt.value - 1.0);
    CHECK(err <= prev);
    prev = err;
  }
  CHECK(err < 0.02);
}

TEST_CASE("drive beyond the band edge leaves the state frozen") {
  auto b = band();
  modulation::ModulationWaveform w =
      modulation::Monochromatic{cplx(1.0, 0.0), 30.0};
  double j = rates::decoherence_exponent(b, w, 2.0, rates::Regime::an, 200.0);
  CHECK(j / 200.0 < 1e-4);
  CHECK(std::exp(-j) > 0.99);
}

TEST_CASE("longtime rate bookkeeping") {
  auto b = narrow_line();
  SUBCASE("single line reduces to the golden rule") {
    auto dec = modulation::harmonics(modulation::Constant{cplx(2.0, 0.0)}, 5);
    REQUIRE(dec.harmonics.size() == 1);
    auto lt = rates::longtime_rate(b, dec, 4.0);
    CHECK(lt.value == doctest::Approx(bath::golden_rule_rate(b, 4.0)).epsilon(1e-12));
    CHECK(!lt.conditions_verified);
  }
  SUBCASE("horizon gates the verification flag") {
    auto dec = modulation::harmonics(modulation::ImpulsivePm{kPi, 0.5}, 50);
    CHECK(rates::longtime_rate(b, dec, 5.0, 60.0).conditions_verified);
    CHECK(!rates::longtime_rate(b, dec, 5.0, 5.0).conditions_verified);
    CHECK(!rates::longtime_rate(b, dec, 5.0).conditions_verified);
  }
  SUBCASE("empty decomposition is rejected") {
    modulation::HarmonicDecomposition empty{{}, 1.0, kInf};
    try {
      rates::longtime_rate(b, empty, 4.0);
      FAIL("expected a throw");
    } catch (const Error& e) {
      CHECK(e.kind == ErrorKind::invalid_input);
    }
  }
}

TEST_CASE("report grid structure and serialization") {
  auto b = narrow_line();
  auto rep = rates::spectral_exponent(b, modulation::Constant{cplx(1.0, 0.0)},
                                      4.0, rates::Regime::an, 40.0, 9);
  REQUIRE(rep.t.size() == 9);
  CHECK(rep.zero_temperature);
  CHECK(rep.t.front() == 0.0);
  CHECK(rep.t.back() == 40.0);
  CHECK(rep.j.front() == 0.0);
  CHECK(rep.r_e.front() == 0.0);
  CHECK(rep.delta_a.front() == 0.0);
  CHECK(rep.p_e.front() == 1.0);
  for (std::size_t k = 0; k < rep.t.size(); ++k) {
    CHECK(rep.j[k] >= 0.0);
    CHECK(rep.p_e[k] == doctest::Approx(std::exp(-rep.j[k])).epsilon(1e-14));
    CHECK(rep.p_e[k] > 0.0);
    CHECK(rep.p_e[k] <= 1.0);
  }

  bath::Support s = bath::thermal_support(b);
  double pv_e = quad::principal_value(
      [&](double w) { return bath::coupling_spectrum(b, w); }, 4.0, s.lo, s.hi,
      {});
  double pv_g = -quad::integrate_real(
      [&](double w) { return bath::coupling_spectrum(b, w) / (4.0 + w); },
      s.lo, s.hi, {}, {5.0});
  CHECK(std::abs(rep.delta_a.back() - (pv_e - pv_g)) < 2e-4);

  std::string path = "rates_report_roundtrip.csv";
  rates::write_csv(path, rep);
  auto table = csv::read_table_file(path);
  std::remove(path.c_str());
  REQUIRE(table.columns ==
          std::vector<std::string>{"t", "J", "R_e", "Delta_a", "P_e"});
  REQUIRE(table.rows.size() == rep.t.size());
  for (std::size_t k = 0; k < rep.t.size(); ++k) {
    CHECK(table.rows[k][0] == doctest::Approx(rep.t[k]).epsilon(5e-12));
    CHECK(table.rows[k][1] == doctest::Approx(rep.j[k]).epsilon(5e-12));
    CHECK(table.rows[k][4] == doctest::Approx(rep.p_e[k]).epsilon(5e-12));
  }
}

TEST_CASE("survival readout schemes") {
  rates::DecoherenceReport rep;
  for (int k = 0; k <= 10; ++k) {
    double t = k;
    rep.t.push_back(t);
    rep.j.push_back(0.05 * t);
    rep.r_e.push_back(0.05);
    rep.delta_a.push_back(0.0);
    rep.p_e.push_back(std::exp(-0.05 * t));
  }
  SUBCASE("phase kicks read out at n tau") {
    double p = rates::survival_probability(rep, rates::PmScheme{10, 1.0});
    CHECK(p == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  }
  SUBCASE("on-off cycles read out at n tau_period with on-window fluence") {
    rates::DecoherenceReport oo = rep;
    for (int k = 0; k <= 10; ++k) oo.j[k] = 0.01 * oo.t[k];
    double p =
        rates::survival_probability(oo, rates::OnOffScheme{10, 1.0, 0.2});
    CHECK(p == doctest::Approx(std::exp(-0.1)).epsilon(1e-12));
  }
  SUBCASE("generic scheme reads the final grid point") {
    double p = rates::survival_probability(rep, rates::GenericScheme{});
    CHECK(p == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  }
  SUBCASE("readout times interpolate linearly") {
    rates::DecoherenceReport r3;
    r3.t = {0.0, 1.0, 2.0};
    r3.j = {0.0, 0.2, 0.8};
    r3.r_e = {0.0, 0.2, 0.4};
    r3.delta_a = {0.0, 0.0, 0.0};
    r3.p_e = {1.0, std::exp(-0.2), std::exp(-0.8)};
    double p = rates::survival_probability(r3, rates::PmScheme{3, 0.5});
    CHECK(p == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  }
  SUBCASE("finite temperature refuses") {
    rates::DecoherenceReport warm = rep;
    warm.zero_temperature = false;
    try {
      rates::survival_probability(warm, rates::GenericScheme{});
      FAIL("expected a throw");
    } catch (const Error& e) {
      CHECK(e.kind == ErrorKind::unsupported_regime);
    }
  }
  SUBCASE("readout beyond the grid is rejected") {
    try {
      rates::survival_probability(rep, rates::PmScheme{11, 1.0});
      FAIL("expected a throw");
    } catch (const Error& e) {
      CHECK(e.kind == ErrorKind::invalid_input);
    }
  }
  SUBCASE("degenerate scheme parameters are rejected") {
    CHECK_THROWS_AS(rates::survival_probability(rep, rates::PmScheme{0, 1.0}),
                    Error);
    CHECK_THROWS_AS(
        rates::survival_probability(rep, rates::OnOffScheme{5, 1.0, 0.0}),
        Error);
    CHECK_THROWS_AS(
        rates::survival_probability(rep, rates::OnOffScheme{5, 0.5, 0.7}),
        Error);
  }
}

TEST_CASE("stroboscopic survival matches the averaged-rate form") {
  auto b = narrow_line();
  modulation::ImpulsivePm pm{kPi, 0.5};
  auto rep = rates::spectral_exponent(b, pm, 5.0 + 2.0 * kPi,
                                      rates::Regime::an, 10.0, 41);
  // unit-modulus waveform: Q(t) = t, so J = R_e t on every grid point
  for (std::size_t k = 1; k < rep.t.size(); ++k)
    CHECK(rep.j[k] ==
          doctest::Approx(rep.r_e[k] * rep.t[k]).epsilon(1e-12));
  double p = rates::survival_probability(rep, rates::PmScheme{10, 0.5});
  CHECK(p == doctest::Approx(std::exp(-rep.j[20])).epsilon(1e-12));
}
