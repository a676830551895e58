#include "deco/bath.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <unsupported/Eigen/FFT>

#include "deco/errors.hpp"
#include "deco/quadrature.hpp"
#include "oscillatory.hpp"

namespace deco::bath {

namespace {

constexpr double kPi = 3.14159265358979323846;

double sinc(double x) {
  if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

double bose_occupation(double beta, double omega) {
  // omega > 0
  return 1.0 / std::expm1(beta * omega);
}

struct ValidateVisitor {
  void operator()(const Lorentzian& m) const {
    require(std::isfinite(m.g0) && m.g0 >= 0.0, ErrorKind::invalid_input,
            "lorentzian: g0 must be finite and >= 0");
    require(std::isfinite(m.omega0) && m.omega0 >= 0.0, ErrorKind::invalid_input,
            "lorentzian: omega0 must be finite and >= 0");
    require(std::isfinite(m.gamma) && m.gamma > 0.0, ErrorKind::invalid_input,
            "lorentzian: gamma must be finite and > 0");
  }
  void operator()(const Ohmic& m) const {
    require(std::isfinite(m.eta) && m.eta >= 0.0, ErrorKind::invalid_input,
            "ohmic: eta must be finite and >= 0");
    require(std::isfinite(m.omega_c) && m.omega_c > 0.0, ErrorKind::invalid_input,
            "ohmic: omega_c must be finite and > 0");
    require(std::isfinite(m.exponent) && m.exponent > 0.0, ErrorKind::invalid_input,
            "ohmic: exponent must be finite and > 0");
  }
  void operator()(const FlatBand& m) const {
    require(std::isfinite(m.g0) && m.g0 >= 0.0, ErrorKind::invalid_input,
            "flat_band: g0 must be finite and >= 0");
    require(std::isfinite(m.omega_lo) && m.omega_lo >= 0.0, ErrorKind::invalid_input,
            "flat_band: omega_lo must be finite and >= 0");
    require(std::isfinite(m.omega_hi) && m.omega_hi > m.omega_lo, ErrorKind::invalid_input,
            "flat_band: omega_hi must exceed omega_lo");
  }
  void operator()(const Tabulated& m) const {
    require(m.omega.size() >= 2 && m.omega.size() == m.g0.size(), ErrorKind::invalid_input,
            "tabulated: need at least two (omega, G0) samples");
    for (std::size_t i = 0; i < m.omega.size(); ++i) {
      require(std::isfinite(m.omega[i]) && m.omega[i] >= 0.0, ErrorKind::invalid_input,
              "tabulated: omega samples must be finite and >= 0");
      require(std::isfinite(m.g0[i]) && m.g0[i] >= 0.0, ErrorKind::invalid_input,
              "tabulated: G0 samples must be finite and >= 0");
      if (i > 0)
        require(m.omega[i] > m.omega[i - 1], ErrorKind::invalid_input,
                "tabulated: omega samples must be strictly increasing");
    }
  }
};

}  // namespace

void validate(const ThermalBathSpectrum& b) {
  std::visit(ValidateVisitor{}, b.model);
  require(!std::isnan(b.beta) && b.beta > 0.0, ErrorKind::invalid_input,
          "bath: beta must be > 0 (inf for zero temperature)");
  if (b.zero_temperature()) return;
  // At finite temperature the occupation diverges like 1/(beta w) toward
  // w = 0, so a coupling density with G0(0) > 0 makes G_T unbounded and the
  // correlation kernel infrared-divergent.  Require G0 to vanish at least
  // linearly whenever the support touches zero frequency.
  Support s = base_support(b.model);
  if (s.lo <= 0.0 && s.hi > 0.0) {
    double d0 = std::min(1e-3 * std::max(s.hi, 1.0), 0.5 * s.hi);
    double d1 = 1e-5 * d0;
    double g_far = base_spectrum(b.model, d0);
    double g_near = base_spectrum(b.model, d1);
    require(g_near <= 2.0 * (d1 / d0) * g_far + 1e-300,
            ErrorKind::invalid_input,
            "bath: finite temperature needs a coupling density vanishing at "
            "least linearly at zero frequency");
  }
}

Tabulated load_tabulated_csv(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::invalid_input, "cannot open bath table: " + path);
  Tabulated tab;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string trimmed = line;
    trimmed.erase(0, trimmed.find_first_not_of(" \t\r\n"));
    trimmed.erase(trimmed.find_last_not_of(" \t\r\n") + 1);
    if (trimmed.empty()) continue;
    std::replace(trimmed.begin(), trimmed.end(), ',', ' ');
    std::istringstream ss(trimmed);
    double w, g;
    if (!(ss >> w >> g)) {
      // a non-numeric header is tolerated on the first content line only
      if (tab.omega.empty() && lineno <= 2) continue;
      fail(ErrorKind::invalid_input,
           "bath table: unparsable line " + std::to_string(lineno));
    }
    tab.omega.push_back(w);
    tab.g0.push_back(g);
  }
  ValidateVisitor{}(tab);
  return tab;
}

double base_spectrum(const SpectrumModel& m, double omega) {
  if (omega < 0.0) return 0.0;
  if (const auto* l = std::get_if<Lorentzian>(&m)) {
    double d = omega - l->omega0;
    return l->g0 * l->gamma * l->gamma / (d * d + l->gamma * l->gamma);
  }
  if (const auto* o = std::get_if<Ohmic>(&m)) {
    if (omega == 0.0) return 0.0;
    double x = omega / o->omega_c;
    double shape = omega * std::pow(x, o->exponent - 1.0);
    if (o->cutoff == OhmicCutoff::exponential) return o->eta * shape * std::exp(-x);
    return omega <= o->omega_c ? o->eta * shape : 0.0;
  }
  if (const auto* f = std::get_if<FlatBand>(&m)) {
    return (omega >= f->omega_lo && omega <= f->omega_hi) ? f->g0 : 0.0;
  }
  const auto& tab = std::get<Tabulated>(m);
  if (omega < tab.omega.front() || omega > tab.omega.back()) return 0.0;
  auto it = std::upper_bound(tab.omega.begin(), tab.omega.end(), omega);
  if (it == tab.omega.end()) return tab.g0.back();
  std::size_t hi = static_cast<std::size_t>(it - tab.omega.begin());
  if (hi == 0) return tab.g0.front();
  double w0 = tab.omega[hi - 1], w1 = tab.omega[hi];
  double s = (omega - w0) / (w1 - w0);
  return (1.0 - s) * tab.g0[hi - 1] + s * tab.g0[hi];
}

Support base_support(const SpectrumModel& m) {
  if (const auto* l = std::get_if<Lorentzian>(&m))
    return {std::max(0.0, l->omega0 - 40.0 * l->gamma), l->omega0 + 40.0 * l->gamma};
  if (const auto* o = std::get_if<Ohmic>(&m)) {
    if (o->cutoff == OhmicCutoff::hard) return {0.0, o->omega_c};
    // exp(-40) tail is negligible against every tolerance in use
    return {0.0, (40.0 + 10.0 * o->exponent) * o->omega_c};
  }
  if (const auto* f = std::get_if<FlatBand>(&m)) return {f->omega_lo, f->omega_hi};
  const auto& tab = std::get<Tabulated>(m);
  return {tab.omega.front(), tab.omega.back()};
}

double coupling_spectrum(const ThermalBathSpectrum& b, double omega) {
  require(std::isfinite(omega), ErrorKind::invalid_input,
          "coupling_spectrum: omega must be finite");
  if (b.zero_temperature()) return omega >= 0.0 ? base_spectrum(b.model, omega) : 0.0;
  if (omega >= 0.0) {
    double g = base_spectrum(b.model, omega);
    if (g == 0.0) return 0.0;
    return g * (1.0 + bose_occupation(b.beta, omega));
  }
  double g = base_spectrum(b.model, -omega);
  if (g == 0.0) return 0.0;
  return g * bose_occupation(b.beta, -omega);
}

Support thermal_support(const ThermalBathSpectrum& b) {
  Support s = base_support(b.model);
  if (b.zero_temperature()) return s;
  return {-s.hi, s.hi};
}

std::vector<double> spectrum_breakpoints(const ThermalBathSpectrum& b) {
  std::vector<double> pts{0.0};
  if (const auto* l = std::get_if<Lorentzian>(&b.model)) {
    pts.push_back(l->omega0);
  } else if (const auto* o = std::get_if<Ohmic>(&b.model)) {
    if (o->cutoff == OhmicCutoff::hard) pts.push_back(o->omega_c);
  } else if (const auto* f = std::get_if<FlatBand>(&b.model)) {
    pts.push_back(f->omega_lo);
    pts.push_back(f->omega_hi);
  } else {
    const auto& tab = std::get<Tabulated>(b.model);
    pts.insert(pts.end(), tab.omega.begin(), tab.omega.end());
  }
  if (!b.zero_temperature()) {
    std::size_t n = pts.size();
    for (std::size_t i = 0; i < n; ++i) pts.push_back(-pts[i]);
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

namespace {

cplx correlation_by_quadrature(const ThermalBathSpectrum& b, double t) {
  Support s = thermal_support(b);
  quad::Options opt;
  if (t != 0.0) opt.max_panel_width = kPi / std::abs(t);
  auto res = quad::integrate_or_throw(
      [&](double w) {
        double g = coupling_spectrum(b, w);
        return cplx(g * std::cos(w * t), -g * std::sin(w * t));
      },
      s.lo, s.hi, opt, spectrum_breakpoints(b));
  return res;
}

bool has_closed_form_correlation(const ThermalBathSpectrum& b) {
  if (!b.zero_temperature()) return false;
  if (std::holds_alternative<Lorentzian>(b.model)) return true;
  if (std::holds_alternative<FlatBand>(b.model)) return true;
  if (const auto* o = std::get_if<Ohmic>(&b.model))
    return o->cutoff == OhmicCutoff::exponential || o->exponent == 1.0;
  return false;
}

cplx closed_form_correlation(const ThermalBathSpectrum& b, double t) {
  if (const auto* l = std::get_if<Lorentzian>(&b.model)) {
    // idealized two-sided line shape; exact up to the clipped w < 0 tail
    return kPi * l->g0 * l->gamma *
           std::exp(cplx(-l->gamma * std::abs(t), -l->omega0 * t));
  }
  if (const auto* f = std::get_if<FlatBand>(&b.model)) {
    double a = f->omega_lo, c = f->omega_hi;
    double width = c - a;
    return f->g0 * width * sinc(0.5 * width * t) *
           std::exp(cplx(0.0, -0.5 * (a + c) * t));
  }
  const auto& o = std::get<Ohmic>(b.model);
  double wc = o.omega_c;
  if (o.cutoff == OhmicCutoff::exponential) {
    // integral_0^inf eta w^s wc^(1-s) exp(-w/wc) exp(-iwt) dw
    cplx z = 1.0 + cplx(0.0, wc * t);
    return o.eta * wc * wc * std::tgamma(o.exponent + 1.0) /
           std::pow(z, o.exponent + 1.0);
  }
  // hard cutoff, exponent 1: integral_0^wc eta w exp(-iwt) dw
  double x = wc * t;
  if (std::abs(x) < 0.5) {
    // sum_n (-ix)^n / (n! (n+2)); the direct form loses digits to cancellation here
    cplx term(1.0, 0.0), acc(0.0, 0.0);
    for (int n = 0; n < 24; ++n) {
      acc += term / static_cast<double>(n + 2);
      term *= cplx(0.0, -x) / static_cast<double>(n + 1);
      if (std::abs(term) < 1e-19) break;
    }
    return o.eta * wc * wc * acc;
  }
  cplx e = std::exp(cplx(0.0, -x));
  return o.eta * (cplx(0.0, wc) * e / t + (e - 1.0) / (t * t));
}

}  // namespace

cplx correlation_function(const ThermalBathSpectrum& b, double t) {
  require(std::isfinite(t), ErrorKind::invalid_input,
          "correlation_function: t must be finite");
  if (has_closed_form_correlation(b)) return closed_form_correlation(b, t);
  return correlation_by_quadrature(b, t);
}

double golden_rule_rate(const ThermalBathSpectrum& b, double omega_a) {
  return 2.0 * kPi * coupling_spectrum(b, omega_a);
}

double correlation_time(const ThermalBathSpectrum& b) {
  Support s = thermal_support(b);
  const int n = 4001;
  double step = (s.hi - s.lo) / (n - 1);
  std::vector<double> g(n);
  double gmax = 0.0;
  int imax = 0;
  for (int i = 0; i < n; ++i) {
    double v = coupling_spectrum(b, s.lo + i * step);
    g[i] = std::isfinite(v) ? v : std::numeric_limits<double>::max();
    if (g[i] > gmax) {
      gmax = g[i];
      imax = i;
    }
  }
  require(gmax > 0.0, ErrorKind::invalid_input,
          "correlation_time: spectrum vanishes on its support");
  double half = 0.5 * gmax;
  int il = imax, ir = imax;
  while (il > 0 && g[il - 1] >= half) --il;
  while (ir < n - 1 && g[ir + 1] >= half) ++ir;
  auto cross = [&](double a, double c) {
    // g(a) and g(c) straddle the half maximum; bisect the crossing
    for (int k = 0; k < 60; ++k) {
      double m = 0.5 * (a + c);
      double v = coupling_spectrum(b, m);
      if (!std::isfinite(v) || v >= half)
        c = m;
      else
        a = m;
    }
    return 0.5 * (a + c);
  };
  double left = s.lo + il * step;
  if (il > 0) left = cross(left - step, left);
  double right = s.lo + ir * step;
  if (ir < n - 1) right = cross(right + step, right);
  double hwhm = 0.5 * (right - left);
  require(hwhm > 0.0, ErrorKind::numerical_failure,
          "correlation_time: degenerate spectral peak");
  return 1.0 / hwhm;
}

CorrelationSampler::CorrelationSampler(const ThermalBathSpectrum& b, double horizon)
    : bath_(b) {
  validate(bath_);
  require(std::isfinite(horizon) && horizon > 0.0, ErrorKind::invalid_input,
          "correlation sampler: horizon must be finite and > 0");
  // Lorentzian keeps the sampled route so the kernel matches the clipped,
  // windowed spectrum used by the frequency-domain integrals.
  if (has_closed_form_correlation(bath_) &&
      !std::holds_alternative<Lorentzian>(bath_.model)) {
    direct_ = true;
    return;
  }
  Support s = thermal_support(bath_);
  double wmax = std::max(std::abs(s.lo), std::abs(s.hi));
  require(wmax > 0.0, ErrorKind::invalid_input,
          "correlation sampler: empty spectral support");
  double tc = correlation_time(bath_);
  double h = std::min({2.0 * kPi / (50.0 * wmax), tc / 40.0, horizon / 16.0});
  std::size_t n = static_cast<std::size_t>(std::ceil(horizon / h)) + 2;
  require(n <= 4000000, ErrorKind::numerical_failure,
          "correlation sampler: grid too fine for the requested horizon");
  step_ = h;

  // Piecewise-linear spectrum on a uniform frequency grid per smooth segment;
  // each cell transforms in closed form and the node sums collapse to DFTs
  // because dw * h = 2 pi / nfft.
  double width = s.hi - s.lo;
  double dw_target = std::min(1.0 / (160.0 * tc), width / 64.0);
  std::size_t nfft = 64;
  while (nfft < n + 2 ||
         2.0 * kPi / (static_cast<double>(nfft) * h) > dw_target) {
    require(nfft <= (std::size_t{1} << 21), ErrorKind::numerical_failure,
            "correlation sampler: spectral grid too large");
    nfft <<= 1;
  }
  double dw = 2.0 * kPi / (static_cast<double>(nfft) * h);

  std::vector<double> edges{s.lo};
  for (double x : spectrum_breakpoints(bath_))
    if (x > s.lo && x < s.hi) edges.push_back(x);
  edges.push_back(s.hi);
  std::sort(edges.begin(), edges.end());

  values_.assign(n, cplx(0.0, 0.0));
  slopes_.assign(n, cplx(0.0, 0.0));
  std::vector<cplx> cell0(n), cell1(n);
  for (std::size_t k = 0; k < n; ++k) {
    double t = static_cast<double>(k) * h;
    cell0[k] = detail::eint(-t, dw);
    cell1[k] = detail::moment1(-t, dw) / dw;
  }

  Eigen::FFT<double> fft;
  std::vector<cplx> in(nfft), s0(nfft), s1(nfft);
  double xi = 1e-7 * dw;
  for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
    double a = edges[e], bnd = edges[e + 1];
    double segw = bnd - a;
    if (segw <= 4.0 * xi) continue;
    auto mcells = static_cast<std::size_t>(segw / dw);
    std::vector<double> g(mcells + 1);
    for (std::size_t j = 0; j <= mcells; ++j) {
      double w = a + static_cast<double>(j) * dw;
      if (j == 0) w = a + xi;
      if (w > bnd - xi) w = bnd - xi;
      g[j] = coupling_spectrum(bath_, w);
    }
    if (mcells > 0) {
      std::fill(in.begin(), in.end(), cplx(0.0, 0.0));
      for (std::size_t j = 0; j < mcells; ++j) in[j] = g[j];
      fft.fwd(s0, in);
      std::fill(in.begin(), in.end(), cplx(0.0, 0.0));
      for (std::size_t j = 0; j < mcells; ++j) in[j] = g[j + 1];
      fft.fwd(s1, in);
      for (std::size_t k = 0; k < n; ++k) {
        double t = static_cast<double>(k) * h;
        values_[k] += std::polar(1.0, -a * t) *
                      ((cell0[k] - cell1[k]) * s0[k] + cell1[k] * s1[k]);
      }
    }
    double r0 = a + static_cast<double>(mcells) * dw;
    double d = bnd - r0;
    if (d > 1e-9 * dw) {
      double ga = g[mcells];
      double gb = coupling_spectrum(bath_, bnd - xi);
      for (std::size_t k = 0; k < n; ++k) {
        double t = static_cast<double>(k) * h;
        values_[k] += std::polar(1.0, -r0 * t) *
                      (ga * detail::eint(-t, d) +
                       ((gb - ga) / d) * detail::moment1(-t, d));
      }
    }
  }
  slopes_[0] = (-3.0 * values_[0] + 4.0 * values_[1] - values_[2]) / (2.0 * h);
  for (std::size_t k = 1; k + 1 < n; ++k)
    slopes_[k] = (values_[k + 1] - values_[k - 1]) / (2.0 * h);
  slopes_[n - 1] =
      (3.0 * values_[n - 1] - 4.0 * values_[n - 2] + values_[n - 3]) /
      (2.0 * h);
}

cplx CorrelationSampler::operator()(double t) const {
  if (t < 0.0) return std::conj((*this)(-t));
  if (direct_) return closed_form_correlation(bath_, t);
  double u = t / step_;
  auto k = static_cast<std::size_t>(u);
  if (k + 1 >= values_.size()) {
    require(k < values_.size(), ErrorKind::invalid_input,
            "correlation sampler: argument beyond cached horizon");
    return values_.back();
  }
  double x = u - static_cast<double>(k);
  // cubic Hermite in x on [0, 1]
  double h00 = (1.0 + 2.0 * x) * (1.0 - x) * (1.0 - x);
  double h10 = x * (1.0 - x) * (1.0 - x);
  double h01 = x * x * (3.0 - 2.0 * x);
  double h11 = x * x * (x - 1.0);
  return h00 * values_[k] + h10 * step_ * slopes_[k] + h01 * values_[k + 1] +
         h11 * step_ * slopes_[k + 1];
}

}  // namespace deco::bath
