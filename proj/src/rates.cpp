#include "deco/rates.hpp"

#include <algorithm>
#include <cmath>

#include "deco/csv.hpp"
#include "deco/errors.hpp"
#include "deco/quadrature.hpp"

namespace deco::rates {

namespace {

constexpr double kPi = 3.14159265358979323846;

using cplx = std::complex<double>;
using modulation::ModulationWaveform;

// Fastest phase present in the convolution integrand: bath frequencies plus
// the sector factor plus the waveform's own spectral extent.
double oscillation_scale(const bath::ThermalBathSpectrum& b,
                         const ModulationWaveform& w, double wa) {
  bath::Support s = bath::thermal_support(b);
  double scale = std::max(std::abs(s.lo), std::abs(s.hi)) + std::abs(wa);
  double cmax = 0.0;
  for (double c : modulation::spectral_centers(w))
    cmax = std::max(cmax, std::abs(c));
  return scale + cmax;
}

quad::Options convolution_options(double scale) {
  quad::Options opt;
  opt.rel_tol = 1e-8;
  opt.abs_tol = 1e-13;
  if (scale > 0.0) opt.max_panel_width = kPi / scale;
  return opt;
}

struct ChannelIntegrals {
  cplx i_e;
  cplx i_g;
};

// I_e = conj(eps(t)) integral_0^t Phi_T(t-s) eps(s) e^{+i wa (t-s)} ds
// I_g =      eps(t)  integral_0^t Phi_T(t-s) conj(eps(s)) e^{-i wa (t-s)} ds
ChannelIntegrals channel_integrals(const bath::CorrelationSampler& kernel,
                                   const ModulationWaveform& w, double wa,
                                   double t, const quad::Options& opt,
                                   const std::vector<double>& breaks) {
  cplx et = modulation::evaluate(w, t);
  cplx ie = quad::integrate_or_throw(
      [&](double s) {
        return kernel(t - s) * modulation::evaluate(w, s) *
               std::polar(1.0, wa * (t - s));
      },
      0.0, t, opt, breaks);
  cplx ig = quad::integrate_or_throw(
      [&](double s) {
        return kernel(t - s) * std::conj(modulation::evaluate(w, s)) *
               std::polar(1.0, -wa * (t - s));
      },
      0.0, t, opt, breaks);
  return {std::conj(et) * ie, et * ig};
}

std::vector<double> breaks_before(const std::vector<double>& all, double t) {
  std::vector<double> out;
  for (double b : all)
    if (b > 0.0 && b < t) out.push_back(b);
  return out;
}

double sector_frequency(double omega_a, Regime regime) {
  require(std::isfinite(omega_a), ErrorKind::invalid_input,
          "rates: omega_a must be finite");
  return regime == Regime::pn ? 0.0 : omega_a;
}

// J(t) = 2 pi integral dw G_T(wa + w) |eps_t(w)|^2 over the shifted support.
double overlap_exponent(const bath::ThermalBathSpectrum& b,
                        const ModulationWaveform& w, double wa, double t) {
  if (t == 0.0) return 0.0;
  bath::Support s = bath::thermal_support(b);
  double lo = s.lo - wa, hi = s.hi - wa;
  if (!(hi > lo)) return 0.0;
  quad::Options opt;
  opt.rel_tol = 1e-8;
  opt.abs_tol = 1e-14;
  opt.max_panel_width = kPi / t;
  std::vector<double> brk;
  for (double c : modulation::spectral_centers(w))
    if (c > lo && c < hi) brk.push_back(c);
  for (double x : bath::spectrum_breakpoints(b)) {
    double c = x - wa;
    if (c > lo && c < hi) brk.push_back(c);
  }
  double val = quad::integrate_real(
      [&](double om) {
        double g = bath::coupling_spectrum(b, wa + om);
        if (g == 0.0) return 0.0;
        return g * std::norm(modulation::finite_time_spectrum(w, t, om));
      },
      lo, hi, opt, brk);
  return 2.0 * kPi * val;
}

}  // namespace

RateBreakdown convolution_rates(const bath::CorrelationSampler& kernel,
                                const ModulationWaveform& w, double omega_a,
                                Regime regime, double t) {
  double wa = sector_frequency(omega_a, regime);
  require(std::isfinite(t) && t >= 0.0, ErrorKind::invalid_input,
          "convolution rates: t must be finite and >= 0");
  RateBreakdown out;
  out.t = t;
  if (t == 0.0) return out;
  quad::Options opt =
      convolution_options(oscillation_scale(kernel.spectrum(), w, wa));
  auto breaks = breaks_before(modulation::time_breakpoints(w, t), t);
  auto [ie, ig] = channel_integrals(kernel, w, wa, t, opt, breaks);
  out.r_e = 2.0 * ie.real();
  out.delta_e = ie.imag();
  out.r_g = 2.0 * ig.real();
  out.delta_g = ig.imag();
  return out;
}

RateBreakdown convolution_rates(const bath::ThermalBathSpectrum& b,
                                const ModulationWaveform& w, double omega_a,
                                Regime regime, double t) {
  double wa = sector_frequency(omega_a, regime);
  require(std::isfinite(t) && t >= 0.0, ErrorKind::invalid_input,
          "convolution rates: t must be finite and >= 0");
  RateBreakdown out;
  out.t = t;
  if (t == 0.0) return out;
  bath::CorrelationSampler kernel(b, t * (1.0 + 1e-9));
  return convolution_rates(kernel, w, wa, Regime::an, t);
}

double decoherence_exponent(const bath::ThermalBathSpectrum& b,
                            const ModulationWaveform& w, double omega_a,
                            Regime regime, double t) {
  double wa = sector_frequency(omega_a, regime);
  require(std::isfinite(t) && t >= 0.0, ErrorKind::invalid_input,
          "decoherence exponent: t must be finite and >= 0");
  bath::validate(b);
  return overlap_exponent(b, w, wa, t);
}

DecoherenceReport spectral_exponent(const bath::ThermalBathSpectrum& b,
                                    const ModulationWaveform& w,
                                    double omega_a, Regime regime,
                                    double t_final, std::size_t n_points) {
  double wa = sector_frequency(omega_a, regime);
  require(std::isfinite(t_final) && t_final > 0.0, ErrorKind::invalid_input,
          "spectral exponent: t_final must be finite and > 0");
  require(n_points >= 2 && n_points <= 100000, ErrorKind::invalid_input,
          "spectral exponent: need 2 <= n_points <= 100000");
  DecoherenceReport rep;
  rep.zero_temperature = b.zero_temperature();
  bath::CorrelationSampler kernel(b, t_final * (1.0 + 1e-9));
  quad::Options copt = convolution_options(oscillation_scale(b, w, wa));
  auto all_breaks = modulation::time_breakpoints(w, t_final);
  for (std::size_t k = 0; k < n_points; ++k) {
    double tk = t_final * static_cast<double>(k) /
                static_cast<double>(n_points - 1);
    double j = overlap_exponent(b, w, wa, tk);
    double q = modulation::fluence(w, tk);
    double shift = 0.0;
    if (tk > 0.0) {
      auto [ie, ig] = channel_integrals(kernel, w, wa, tk, copt,
                                        breaks_before(all_breaks, tk));
      shift = ie.imag() - ig.imag();
    }
    rep.t.push_back(tk);
    rep.j.push_back(j);
    rep.r_e.push_back(q > 0.0 ? j / q : 0.0);
    rep.delta_a.push_back(shift);
    rep.p_e.push_back(std::exp(-j));
  }
  return rep;
}

LongtimeRate longtime_rate(const bath::ThermalBathSpectrum& b,
                           const modulation::HarmonicDecomposition& dec,
                           double omega_a, std::optional<double> horizon) {
  require(std::isfinite(omega_a), ErrorKind::invalid_input,
          "longtime rate: omega_a must be finite");
  require(!dec.harmonics.empty(), ErrorKind::invalid_input,
          "longtime rate: empty harmonic decomposition");
  double v = 0.0;
  for (const auto& h : dec.harmonics)
    v += std::norm(h.lambda) * bath::coupling_spectrum(b, omega_a + h.nu);
  LongtimeRate out;
  out.value = 2.0 * kPi * v;
  if (horizon) {
    double gap_time =
        std::isfinite(dec.min_gap) && dec.min_gap > 0.0 ? 1.0 / dec.min_gap
                                                        : 0.0;
    out.conditions_verified =
        *horizon >= 10.0 * std::max(bath::correlation_time(b), gap_time);
  }
  return out;
}

double survival_probability(const DecoherenceReport& rep,
                            const PulseScheme& scheme) {
  require(rep.zero_temperature, ErrorKind::unsupported_regime,
          "survival probability: requires a zero-temperature report");
  require(rep.t.size() >= 2 && rep.t.size() == rep.j.size(),
          ErrorKind::invalid_input, "survival probability: malformed report");
  double tstar = 0.0;
  if (const auto* pm = std::get_if<PmScheme>(&scheme)) {
    require(pm->n > 0 && std::isfinite(pm->tau) && pm->tau > 0.0,
            ErrorKind::invalid_input, "pm scheme: need n > 0 and tau > 0");
    tstar = pm->n * pm->tau;
  } else if (const auto* oo = std::get_if<OnOffScheme>(&scheme)) {
    require(oo->n > 0 && std::isfinite(oo->tau_period) &&
                std::isfinite(oo->tau_on) && oo->tau_on > 0.0 &&
                oo->tau_period >= oo->tau_on,
            ErrorKind::invalid_input,
            "on_off scheme: need n > 0 and 0 < tau_on <= tau_period");
    tstar = oo->n * oo->tau_period;
  } else {
    tstar = rep.t.back();
  }
  double span = rep.t.back() - rep.t.front();
  require(tstar >= rep.t.front() - 1e-9 * span &&
              tstar <= rep.t.back() + 1e-9 * span,
          ErrorKind::invalid_input,
          "survival probability: readout time outside the report grid");
  tstar = std::clamp(tstar, rep.t.front(), rep.t.back());
  auto it = std::upper_bound(rep.t.begin(), rep.t.end(), tstar);
  if (it == rep.t.begin()) ++it;
  if (it == rep.t.end()) --it;
  auto hi = static_cast<std::size_t>(it - rep.t.begin());
  std::size_t lo = hi - 1;
  double u = (tstar - rep.t[lo]) / (rep.t[hi] - rep.t[lo]);
  double j = (1.0 - u) * rep.j[lo] + u * rep.j[hi];
  return std::exp(-j);
}

void write_csv(const std::string& path, const DecoherenceReport& rep) {
  std::vector<std::vector<double>> rows;
  rows.reserve(rep.t.size());
  for (std::size_t k = 0; k < rep.t.size(); ++k)
    rows.push_back({rep.t[k], rep.j[k], rep.r_e[k], rep.delta_a[k], rep.p_e[k]});
  csv::write_table_file(path, {"t", "J", "R_e", "Delta_a", "P_e"}, rows);
}

}  // namespace deco::rates
