#pragma once

// Thermal bath coupling spectra, their correlation functions, and the
// golden-rule reference rate.
//
// A bath is a base (zero temperature) coupling density G0(w) >= 0, defined
// for w >= 0, dressed with detailed-balance occupation factors at inverse
// temperature beta:
//
//   G_T(w) = G0(w) (nbar(w) + 1)     w >= 0
//   G_T(w) = G0(-w) nbar(-w)         w <  0
//
// with nbar(w) = 1/(exp(beta w) - 1). beta = inf keeps only the w >= 0
// branch. The correlation function is the transform
//
//   Phi_T(t) = integral dw G_T(w) exp(-i w t).

#include <complex>
#include <limits>
#include <string>
#include <variant>
#include <vector>

namespace deco::bath {

using cplx = std::complex<double>;

// G0(w) = g0 gamma^2 / ((w - omega0)^2 + gamma^2), peak value g0.
struct Lorentzian {
  double g0;
  double omega0;
  double gamma;
};

enum class OhmicCutoff { exponential, hard };

// G0(w) = eta w (w/omega_c)^(exponent-1) * cutoff(w/omega_c); exponent = 1
// is the strictly linear low-frequency form.
struct Ohmic {
  double eta;
  double omega_c;
  OhmicCutoff cutoff = OhmicCutoff::exponential;
  double exponent = 1.0;
};

// G0(w) = g0 on [omega_lo, omega_hi], zero elsewhere.
struct FlatBand {
  double g0;
  double omega_lo;
  double omega_hi;
};

// Samples (w_i, G0_i) with linear interpolation, zero outside the range.
struct Tabulated {
  std::vector<double> omega;
  std::vector<double> g0;
};

using SpectrumModel = std::variant<Lorentzian, Ohmic, FlatBand, Tabulated>;

struct ThermalBathSpectrum {
  SpectrumModel model;
  double beta = std::numeric_limits<double>::infinity();

  bool zero_temperature() const { return std::isinf(beta) && beta > 0; }
};

struct Support {
  double lo;
  double hi;
};

void validate(const ThermalBathSpectrum& b);

// Two-column CSV (omega, G0); a non-numeric first line is treated as a header.
Tabulated load_tabulated_csv(const std::string& path);

double base_spectrum(const SpectrumModel& m, double omega);

// Effective base support used by every quadrature over the spectrum; compact
// models report exact edges, unbounded tails are truncated where negligible.
Support base_support(const SpectrumModel& m);

double coupling_spectrum(const ThermalBathSpectrum& b, double omega);
cplx correlation_function(const ThermalBathSpectrum& b, double t);
double golden_rule_rate(const ThermalBathSpectrum& b, double omega_a);

// Support of G_T including the absorption branch at w < 0.
Support thermal_support(const ThermalBathSpectrum& b);

// Interior points where G_T is not smooth (band edges, table knots, w = 0);
// quadratures split panels there.
std::vector<double> spectrum_breakpoints(const ThermalBathSpectrum& b);

// Memory time: inverse half width at half maximum of G_T around its peak.
double correlation_time(const ThermalBathSpectrum& b);

// Cheap repeated evaluation of Phi_T for convolution kernels. Models with a
// closed-form transform evaluate directly; the rest are sampled once on a
// uniform grid over [0, horizon] and cubic-interpolated. Negative arguments
// use Phi_T(-t) = conj(Phi_T(t)).
class CorrelationSampler {
 public:
  CorrelationSampler(const ThermalBathSpectrum& b, double horizon);
  cplx operator()(double t) const;
  const ThermalBathSpectrum& spectrum() const { return bath_; }

  // Largest cached argument; unbounded for closed-form models.
  double horizon() const {
    if (direct_) return std::numeric_limits<double>::infinity();
    return values_.empty() ? 0.0 : step_ * static_cast<double>(values_.size() - 1);
  }

 private:
  ThermalBathSpectrum bath_;
  bool direct_ = false;
  double step_ = 0.0;
  std::vector<cplx> values_;  // Phi_T(k step)
  std::vector<cplx> slopes_;  // d/dt Phi_T(k step)
};

}  // namespace deco::bath
