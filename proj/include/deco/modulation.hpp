#pragma once

// Modulation waveforms eps(t), their finite-time spectra and filter
// functions, and harmonic decompositions.
//
// Conventions:
//   finite-time spectrum  eps_t(w) = (2 pi)^(-1/2) integral_0^t eps(s) e^{i w s} ds
//   fluence               Q(t)     = integral_0^t |eps(s)|^2 ds
//   filter                F_t(w)   = |eps_t(w)|^2 / Q(t)
//
// A frame phase d(t) (a Stark shift or a resonant splitting) composes with a
// bare envelope as eps(t) = envelope(t) * exp(-i integral_0^t d).

#include <complex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace deco::modulation {

using cplx = std::complex<double>;

struct Constant {
  cplx eps0;
};

// eps0 exp(-i shift t)
struct Monochromatic {
  cplx eps0;
  double shift;
};

// |eps| = 1 with phase jumps of phi after every interval tau:
// eps(t) = exp(i phi floor(t / tau)). phi is reduced to (-pi, pi].
struct ImpulsivePm {
  double phi;
  double tau;
};

// 1 on [k tau_period, k tau_period + tau_on), else 0.
struct OnOff {
  double tau_on;
  double tau_period;
};

struct QuasiComponent {
  cplx eps;
  double nu;
};

// sum_k eps_k exp(-i nu_k t) with distinct nu_k.
struct Quasiperiodic {
  std::vector<QuasiComponent> components;
};

// values on the uniform grid t_k = k step, linearly interpolated.
struct Sampled {
  double step;
  std::vector<cplx> values;
};

using ModulationWaveform =
    std::variant<Constant, Monochromatic, ImpulsivePm, OnOff, Quasiperiodic, Sampled>;

void validate(const ModulationWaveform& w);

cplx evaluate(const ModulationWaveform& w, double t);
double fluence(const ModulationWaveform& w, double t);
cplx finite_time_spectrum(const ModulationWaveform& w, double t, double omega);
double filter_function(const ModulationWaveform& w, double t, double omega);

// Duration covered by the waveform definition (inf except for sampled data).
double definition_horizon(const ModulationWaveform& w);

// Explicit periodic-case filter envelopes at stroboscopic times t = n tau
// (or n tau_period); independent evaluation route used for validation.
double pm_filter_closed_form(double phi, double tau, int n, double omega);
double on_off_filter_closed_form(double tau_on, double tau_period, int n, double omega);

struct Harmonic {
  double nu;
  cplx lambda;  // normalized weight, sum_k |lambda_k|^2 = 1 over the full comb
};

struct HarmonicDecomposition {
  std::vector<Harmonic> harmonics;
  double eps_c;     // carrier strength scale factored out by the normalization
  double min_gap;   // smallest spacing between harmonic frequencies
};

// Harmonics with index |k| <= k_max for periodic waveforms; aperiodic sampled
// data has no such decomposition and is rejected.
HarmonicDecomposition harmonics(const ModulationWaveform& w, int k_max);

// Frequencies where the long-time filter concentrates; quadratures split
// panels there.
std::vector<double> spectral_centers(const ModulationWaveform& w, int k_max = 64);

// Times where the waveform is discontinuous or kinked, up to the horizon.
std::vector<double> time_breakpoints(const ModulationWaveform& w, double horizon);

enum class FrameKind { stark_shift, resonant_splitting };

struct ConstantPhase {
  double value;
};

// values[i] on [knots[i], knots[i+1]), knots[0] = 0, last value extends on.
struct PiecewisePhase {
  std::vector<double> knots;
  std::vector<double> values;
};

// linear interpolation on the uniform grid t_k = k step.
struct SampledPhase {
  double step;
  std::vector<double> values;
};

using PhaseShape = std::variant<ConstantPhase, PiecewisePhase, SampledPhase>;

struct FramePhase {
  FrameKind kind;
  PhaseShape shape;
};

void validate(const FramePhase& f);
double frame_value(const FramePhase& f, double t);
double phase_integral(const FramePhase& f, double t);  // integral_0^t of the value
std::vector<double> frame_breakpoints(const FramePhase& f, double horizon);

// Compose envelope and frame phase into a single waveform. Recognizes
// closed-form compositions (constant phases shift spectral lines); anything
// else is materialized on a uniform grid of the given step up to the horizon.
ModulationWaveform effective_modulation(const ModulationWaveform& envelope,
                                        const std::optional<FramePhase>& frame,
                                        double horizon, double step);

// Three-column CSV (t, Re eps, Im eps) on a uniform grid starting at t = 0.
Sampled load_sampled_csv(const std::string& path);

}  // namespace deco::modulation
