#pragma once

// Dynamically modified relaxation and dephasing rates for a driven two-level
// system coupled to a thermal bath, via two independent routes:
//
//   time domain:  I(t) = integral_0^t Phi_T(t - s) K(t, s) ds, rates and
//                 pulls from the real and imaginary parts (convolution_rates)
//   frequency:    J(t) = 2 pi integral dw G_T(w_a + w) |eps_t(w)|^2, the
//                 accumulated exponent as a spectral overlap (spectral_exponent)
//
// The two are tied by the exact identity J(t) = integral_0^t R_e(s) ds.

#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "deco/bath.hpp"
#include "deco/modulation.hpp"

namespace deco::rates {

// Amplitude noise dresses the raising/lowering coupling with e^{+-i w_a (t-s)};
// phase noise couples along the dephasing axis and carries no such factor, so
// pn evaluates the same kernels at w_a = 0 and ignores the passed w_a.
enum class Regime { an, pn };

// Instantaneous channel rates and frequency pulls at one time. For an the
// fields are the excited / ground channels; for pn the up / down sectors.
struct RateBreakdown {
  double t = 0.0;
  double r_e = 0.0;
  double r_g = 0.0;
  double delta_e = 0.0;
  double delta_g = 0.0;
  double r() const { return 0.5 * (r_e + r_g); }
  double delta_a() const { return delta_e - delta_g; }
};

RateBreakdown convolution_rates(const bath::ThermalBathSpectrum& b,
                                const modulation::ModulationWaveform& w,
                                double omega_a, Regime regime, double t);

// Same, reusing a prepared kernel whose horizon must cover t.
RateBreakdown convolution_rates(const bath::CorrelationSampler& kernel,
                                const modulation::ModulationWaveform& w,
                                double omega_a, Regime regime, double t);

// Accumulated exponent J, fluence-averaged rate J / Q, frequency pull, and
// survival exp(-J) on a uniform time grid. p_e is the excited-state survival
// probability at zero temperature; at finite temperature the column still
// holds exp(-J) but zero_temperature is cleared and scheme-based survival
// readout refuses.
struct DecoherenceReport {
  std::vector<double> t;
  std::vector<double> j;
  std::vector<double> r_e;
  std::vector<double> delta_a;
  std::vector<double> p_e;
  bool zero_temperature = true;
};

DecoherenceReport spectral_exponent(const bath::ThermalBathSpectrum& b,
                                    const modulation::ModulationWaveform& w,
                                    double omega_a, Regime regime,
                                    double t_final, std::size_t n_points = 129);

// One-point overlap J(t) without the report scaffolding.
double decoherence_exponent(const bath::ThermalBathSpectrum& b,
                            const modulation::ModulationWaveform& w,
                            double omega_a, Regime regime, double t);

// 2 pi sum_k |lambda_k|^2 G_T(w_a + nu_k): the t -> inf limit of the
// fluence-averaged rate. The value is always computed; conditions_verified
// reports whether the supplied horizon exceeds both the bath memory time and
// the inverse comb spacing by the customary factor of ten.
struct LongtimeRate {
  double value = 0.0;
  bool conditions_verified = false;
};

LongtimeRate longtime_rate(const bath::ThermalBathSpectrum& b,
                           const modulation::HarmonicDecomposition& dec,
                           double omega_a,
                           std::optional<double> horizon = std::nullopt);

// Readout schemes for scheme-aware survival: n phase kicks of period tau,
// n on/off cycles of period tau_period with on-window tau_on, or the report's
// final time.
struct PmScheme {
  int n = 0;
  double tau = 0.0;
};
struct OnOffScheme {
  int n = 0;
  double tau_period = 0.0;
  double tau_on = 0.0;
};
struct GenericScheme {};
using PulseScheme = std::variant<PmScheme, OnOffScheme, GenericScheme>;

// exp(-J) at the scheme's readout time, interpolated on the report grid.
// Requires a zero-temperature report.
double survival_probability(const DecoherenceReport& report,
                            const PulseScheme& scheme);

// Columns t, J, R_e, Delta_a, P_e.
void write_csv(const std::string& path, const DecoherenceReport& report);

}  // namespace deco::rates
