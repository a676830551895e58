#include "deco/modulation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "deco/errors.hpp"
#include "oscillatory.hpp"

namespace deco::modulation {

namespace {

using detail::dirichlet_sq;
using detail::eint;
using detail::geom;
using detail::kPi;
using detail::kTwoPi;
using detail::moment1;
using detail::reduce_angle;
using detail::sinc;

const double kSqrt2PiInv = 1.0 / std::sqrt(kTwoPi);

double reduced_phi(const ImpulsivePm& w) {
  double r = reduce_angle(w.phi);
  return r;
}

struct ValidateVisitor {
  void operator()(const Constant& m) const {
    require(std::isfinite(m.eps0.real()) && std::isfinite(m.eps0.imag()),
            ErrorKind::invalid_input, "constant: eps0 must be finite");
  }
  void operator()(const Monochromatic& m) const {
    require(std::isfinite(m.eps0.real()) && std::isfinite(m.eps0.imag()),
            ErrorKind::invalid_input, "monochromatic: eps0 must be finite");
    require(std::isfinite(m.shift), ErrorKind::invalid_input,
            "monochromatic: shift must be finite");
  }
  void operator()(const ImpulsivePm& m) const {
    require(std::isfinite(m.phi), ErrorKind::invalid_input,
            "impulsive_pm: phi must be finite");
    require(std::isfinite(m.tau) && m.tau > 0.0, ErrorKind::invalid_input,
            "impulsive_pm: tau must be finite and > 0");
  }
  void operator()(const OnOff& m) const {
    require(std::isfinite(m.tau_on) && m.tau_on > 0.0, ErrorKind::invalid_input,
            "on_off: tau_on must be finite and > 0");
    require(std::isfinite(m.tau_period) && m.tau_period >= m.tau_on,
            ErrorKind::invalid_input, "on_off: need 0 < tau_on <= tau_period");
  }
  void operator()(const Quasiperiodic& m) const {
    require(!m.components.empty(), ErrorKind::invalid_input,
            "quasiperiodic: component list must not be empty");
    double norm = 0.0;
    for (const auto& c : m.components) {
      require(std::isfinite(c.eps.real()) && std::isfinite(c.eps.imag()) &&
                  std::isfinite(c.nu),
              ErrorKind::invalid_input, "quasiperiodic: components must be finite");
      norm += std::norm(c.eps);
    }
    require(norm > 0.0, ErrorKind::invalid_input,
            "quasiperiodic: at least one component must be nonzero");
    for (std::size_t i = 0; i < m.components.size(); ++i)
      for (std::size_t j = i + 1; j < m.components.size(); ++j)
        require(m.components[i].nu != m.components[j].nu, ErrorKind::invalid_input,
                "quasiperiodic: frequencies must be distinct");
  }
  void operator()(const Sampled& m) const {
    require(std::isfinite(m.step) && m.step > 0.0, ErrorKind::invalid_input,
            "sampled: step must be finite and > 0");
    require(m.values.size() >= 2, ErrorKind::invalid_input,
            "sampled: need at least two samples");
    for (const auto& v : m.values)
      require(std::isfinite(v.real()) && std::isfinite(v.imag()),
              ErrorKind::invalid_input, "sampled: values must be finite");
  }
};

void require_time(double t) {
  require(std::isfinite(t) && t >= 0.0, ErrorKind::invalid_input,
          "waveform evaluation requires finite t >= 0");
}

}  // namespace

void validate(const ModulationWaveform& w) { std::visit(ValidateVisitor{}, w); }

double definition_horizon(const ModulationWaveform& w) {
  if (const auto* s = std::get_if<Sampled>(&w))
    return s->step * static_cast<double>(s->values.size() - 1);
  return std::numeric_limits<double>::infinity();
}

cplx evaluate(const ModulationWaveform& w, double t) {
  require_time(t);
  if (const auto* c = std::get_if<Constant>(&w)) return c->eps0;
  if (const auto* m = std::get_if<Monochromatic>(&w))
    return m->eps0 * std::polar(1.0, -m->shift * t);
  if (const auto* p = std::get_if<ImpulsivePm>(&w)) {
    double j = std::floor(t / p->tau);
    return std::polar(1.0, reduce_angle(reduced_phi(*p) * j));
  }
  if (const auto* o = std::get_if<OnOff>(&w)) {
    double r = t - o->tau_period * std::floor(t / o->tau_period);
    return r < o->tau_on ? 1.0 : 0.0;
  }
  if (const auto* q = std::get_if<Quasiperiodic>(&w)) {
    cplx acc = 0.0;
    for (const auto& c : q->components) acc += c.eps * std::polar(1.0, -c.nu * t);
    return acc;
  }
  const auto& s = std::get<Sampled>(w);
  double end = definition_horizon(w);
  require(t <= end * (1.0 + 1e-12), ErrorKind::invalid_input,
          "sampled waveform evaluated beyond its data range");
  double u = std::min(t, end) / s.step;
  auto k = static_cast<std::size_t>(u);
  if (k + 1 >= s.values.size()) return s.values.back();
  double x = u - static_cast<double>(k);
  return (1.0 - x) * s.values[k] + x * s.values[k + 1];
}

double fluence(const ModulationWaveform& w, double t) {
  require_time(t);
  if (const auto* c = std::get_if<Constant>(&w)) return std::norm(c->eps0) * t;
  if (const auto* m = std::get_if<Monochromatic>(&w)) return std::norm(m->eps0) * t;
  if (std::holds_alternative<ImpulsivePm>(w)) return t;
  if (const auto* o = std::get_if<OnOff>(&w)) {
    double m = std::floor(t / o->tau_period);
    double r = t - m * o->tau_period;
    return m * o->tau_on + std::min(r, o->tau_on);
  }
  if (const auto* q = std::get_if<Quasiperiodic>(&w)) {
    cplx acc = 0.0;
    const auto& cs = q->components;
    for (std::size_t a = 0; a < cs.size(); ++a) {
      acc += std::norm(cs[a].eps) * t;
      for (std::size_t b = 0; b < cs.size(); ++b) {
        if (a == b) continue;
        acc += cs[a].eps * std::conj(cs[b].eps) * eint(cs[b].nu - cs[a].nu, t);
      }
    }
    return acc.real();
  }
  const auto& s = std::get<Sampled>(w);
  double end = definition_horizon(w);
  require(t <= end * (1.0 + 1e-12), ErrorKind::invalid_input,
          "sampled waveform fluence beyond its data range");
  double tt = std::min(t, end);
  double acc = 0.0;
  for (std::size_t j = 0; j + 1 < s.values.size(); ++j) {
    double t0 = static_cast<double>(j) * s.step;
    if (t0 >= tt) break;
    double d = std::min(s.step, tt - t0);
    cplx v0 = s.values[j];
    cplx v1 = v0 + (s.values[j + 1] - v0) * (d / s.step);
    cplx vm = 0.5 * (v0 + v1);
    // Simpson is exact for the quadratic |linear interpolant|^2
    acc += d / 6.0 * (std::norm(v0) + 4.0 * std::norm(vm) + std::norm(v1));
  }
  return acc;
}

cplx finite_time_spectrum(const ModulationWaveform& w, double t, double omega) {
  require_time(t);
  require(std::isfinite(omega), ErrorKind::invalid_input,
          "finite_time_spectrum: omega must be finite");
  if (const auto* c = std::get_if<Constant>(&w))
    return kSqrt2PiInv * c->eps0 * eint(omega, t);
  if (const auto* m = std::get_if<Monochromatic>(&w))
    return kSqrt2PiInv * m->eps0 * eint(omega - m->shift, t);
  if (const auto* p = std::get_if<ImpulsivePm>(&w)) {
    double phi = reduced_phi(*p);
    auto m = static_cast<long long>(std::floor(t / p->tau));
    double r = t - static_cast<double>(m) * p->tau;
    double x = phi + omega * p->tau;
    cplx acc = geom(x, m) * eint(omega, p->tau);
    if (r > 0.0)
      acc += std::polar(1.0, reduce_angle(x * static_cast<double>(m))) * eint(omega, r);
    return kSqrt2PiInv * acc;
  }
  if (const auto* o = std::get_if<OnOff>(&w)) {
    auto m = static_cast<long long>(std::floor(t / o->tau_period));
    double r = t - static_cast<double>(m) * o->tau_period;
    cplx acc = geom(omega * o->tau_period, m) * eint(omega, o->tau_on);
    if (r > 0.0)
      acc += std::polar(1.0, reduce_angle(omega * o->tau_period * static_cast<double>(m))) *
             eint(omega, std::min(r, o->tau_on));
    return kSqrt2PiInv * acc;
  }
  if (const auto* q = std::get_if<Quasiperiodic>(&w)) {
    cplx acc = 0.0;
    for (const auto& c : q->components) acc += c.eps * eint(omega - c.nu, t);
    return kSqrt2PiInv * acc;
  }
  const auto& s = std::get<Sampled>(w);
  double end = definition_horizon(w);
  require(t <= end * (1.0 + 1e-12), ErrorKind::invalid_input,
          "sampled waveform spectrum beyond its data range");
  double tt = std::min(t, end);
  cplx acc = 0.0;
  for (std::size_t j = 0; j + 1 < s.values.size(); ++j) {
    double t0 = static_cast<double>(j) * s.step;
    if (t0 >= tt) break;
    double d = std::min(s.step, tt - t0);
    cplx v0 = s.values[j];
    cplx slope = (s.values[j + 1] - v0) / s.step;
    acc += std::polar(1.0, omega * t0) * (v0 * eint(omega, d) + slope * moment1(omega, d));
  }
  return kSqrt2PiInv * acc;
}

double filter_function(const ModulationWaveform& w, double t, double omega) {
  double q = fluence(w, t);
  require(q > 0.0, ErrorKind::undefined_filter,
          "filter function undefined at zero fluence");
  return std::norm(finite_time_spectrum(w, t, omega)) / q;
}

double pm_filter_closed_form(double phi, double tau, int n, double omega) {
  require(n >= 1 && tau > 0.0, ErrorKind::invalid_input,
          "pm filter closed form: need n >= 1, tau > 0");
  double phir = reduce_angle(phi);
  double s = sinc(0.5 * omega * tau);
  return tau / (kTwoPi * n) * s * s * dirichlet_sq(phir + omega * tau, n);
}

double on_off_filter_closed_form(double tau_on, double tau_period, int n, double omega) {
  require(n >= 1 && tau_on > 0.0 && tau_period >= tau_on, ErrorKind::invalid_input,
          "on_off filter closed form: need n >= 1, 0 < tau_on <= tau_period");
  double s = sinc(0.5 * omega * tau_on);
  return tau_on / (kTwoPi * n) * s * s * dirichlet_sq(omega * tau_period, n);
}

HarmonicDecomposition harmonics(const ModulationWaveform& w, int k_max) {
  require(k_max >= 0, ErrorKind::invalid_input, "harmonics: k_max must be >= 0");
  constexpr double kInf = std::numeric_limits<double>::infinity();
  if (const auto* c = std::get_if<Constant>(&w)) {
    double a = std::abs(c->eps0);
    require(a > 0.0, ErrorKind::invalid_input,
            "harmonics: zero waveform has no decomposition");
    return {{{0.0, c->eps0 / a}}, a * a, kInf};
  }
  if (const auto* m = std::get_if<Monochromatic>(&w)) {
    double a = std::abs(m->eps0);
    require(a > 0.0, ErrorKind::invalid_input,
            "harmonics: zero waveform has no decomposition");
    return {{{m->shift, m->eps0 / a}}, a * a, kInf};
  }
  if (const auto* p = std::get_if<ImpulsivePm>(&w)) {
    double phi = reduced_phi(*p);
    if (phi == 0.0) return {{{0.0, 1.0}}, 1.0, kInf};
    HarmonicDecomposition dec;
    dec.eps_c = 1.0;
    dec.min_gap = kTwoPi / p->tau;
    cplx num = std::polar(1.0, -phi) - 1.0;
    for (int k = -k_max; k <= k_max; ++k) {
      double denom = kTwoPi * k - phi;
      dec.harmonics.push_back({denom / p->tau, num / cplx(0.0, denom)});
    }
    return dec;
  }
  if (const auto* o = std::get_if<OnOff>(&w)) {
    double r = o->tau_on / o->tau_period;
    HarmonicDecomposition dec;
    dec.eps_c = r;
    dec.min_gap = kTwoPi / o->tau_period;
    double root = std::sqrt(r);
    for (int k = -k_max; k <= k_max; ++k) {
      cplx eps_k = k == 0 ? cplx(r, 0.0)
                          : (std::polar(1.0, kTwoPi * k * r) - 1.0) / cplx(0.0, kTwoPi * k);
      dec.harmonics.push_back({kTwoPi * k / o->tau_period, eps_k / root});
    }
    return dec;
  }
  if (const auto* q = std::get_if<Quasiperiodic>(&w)) {
    double eps_c = 0.0;
    for (const auto& c : q->components) eps_c += std::norm(c.eps);
    require(eps_c > 0.0, ErrorKind::invalid_input,
            "harmonics: empty quasiperiodic decomposition");
    HarmonicDecomposition dec;
    dec.eps_c = eps_c;
    double root = std::sqrt(eps_c);
    for (const auto& c : q->components) dec.harmonics.push_back({c.nu, c.eps / root});
    std::sort(dec.harmonics.begin(), dec.harmonics.end(),
              [](const Harmonic& a, const Harmonic& b) { return a.nu < b.nu; });
    dec.min_gap = kInf;
    for (std::size_t i = 1; i < dec.harmonics.size(); ++i)
      dec.min_gap = std::min(dec.min_gap, dec.harmonics[i].nu - dec.harmonics[i - 1].nu);
    return dec;
  }
  fail(ErrorKind::unsupported_decomposition,
       "sampled waveform has no harmonic decomposition; supply one explicitly");
}

std::vector<double> spectral_centers(const ModulationWaveform& w, int k_max) {
  if (std::holds_alternative<Sampled>(w)) return {};
  // an identically zero waveform concentrates nowhere
  if (const auto* c = std::get_if<Constant>(&w); c && c->eps0 == cplx(0.0, 0.0))
    return {};
  if (const auto* m = std::get_if<Monochromatic>(&w);
      m && m->eps0 == cplx(0.0, 0.0))
    return {};
  if (const auto* q = std::get_if<Quasiperiodic>(&w)) {
    double power = 0.0;
    for (const auto& c : q->components) power += std::norm(c.eps);
    if (power == 0.0) return {};
  }
  auto dec = harmonics(w, k_max);
  std::vector<double> nus;
  nus.reserve(dec.harmonics.size());
  for (const auto& h : dec.harmonics) nus.push_back(h.nu);
  return nus;
}

std::vector<double> time_breakpoints(const ModulationWaveform& w, double horizon) {
  require(std::isfinite(horizon) && horizon >= 0.0, ErrorKind::invalid_input,
          "time_breakpoints: horizon must be finite and >= 0");
  std::vector<double> out;
  auto cap = [&](double count) {
    require(count <= 2e6, ErrorKind::invalid_input,
            "time_breakpoints: too many discontinuities over the horizon");
  };
  if (const auto* p = std::get_if<ImpulsivePm>(&w)) {
    cap(horizon / p->tau);
    for (double t = p->tau; t < horizon; t += p->tau) out.push_back(t);
  } else if (const auto* o = std::get_if<OnOff>(&w)) {
    cap(2.0 * horizon / o->tau_period);
    for (double t0 = 0.0; t0 < horizon; t0 += o->tau_period) {
      if (t0 > 0.0) out.push_back(t0);
      if (t0 + o->tau_on < horizon && o->tau_on < o->tau_period)
        out.push_back(t0 + o->tau_on);
    }
  } else if (const auto* s = std::get_if<Sampled>(&w)) {
    cap(horizon / s->step);
    for (std::size_t j = 1; j + 1 < s->values.size(); ++j) {
      double t = static_cast<double>(j) * s->step;
      if (t >= horizon) break;
      out.push_back(t);
    }
  }
  return out;
}

void validate(const FramePhase& f) {
  if (std::holds_alternative<ConstantPhase>(f.shape)) {
    require(std::isfinite(std::get<ConstantPhase>(f.shape).value),
            ErrorKind::invalid_input, "frame phase: value must be finite");
    return;
  }
  if (const auto* p = std::get_if<PiecewisePhase>(&f.shape)) {
    require(!p->knots.empty() && p->knots.size() == p->values.size(),
            ErrorKind::invalid_input, "frame phase: knots and values must pair up");
    require(p->knots.front() == 0.0, ErrorKind::invalid_input,
            "frame phase: first knot must be t = 0");
    for (std::size_t i = 0; i < p->knots.size(); ++i) {
      require(std::isfinite(p->knots[i]) && std::isfinite(p->values[i]),
              ErrorKind::invalid_input, "frame phase: entries must be finite");
      if (i > 0)
        require(p->knots[i] > p->knots[i - 1], ErrorKind::invalid_input,
                "frame phase: knots must be strictly increasing");
    }
    return;
  }
  const auto& s = std::get<SampledPhase>(f.shape);
  require(std::isfinite(s.step) && s.step > 0.0 && s.values.size() >= 2,
          ErrorKind::invalid_input, "frame phase: need step > 0 and two samples");
  for (double v : s.values)
    require(std::isfinite(v), ErrorKind::invalid_input,
            "frame phase: samples must be finite");
}

double frame_value(const FramePhase& f, double t) {
  require_time(t);
  if (const auto* c = std::get_if<ConstantPhase>(&f.shape)) return c->value;
  if (const auto* p = std::get_if<PiecewisePhase>(&f.shape)) {
    auto it = std::upper_bound(p->knots.begin(), p->knots.end(), t);
    auto idx = static_cast<std::size_t>(it - p->knots.begin());
    return p->values[idx == 0 ? 0 : idx - 1];
  }
  const auto& s = std::get<SampledPhase>(f.shape);
  double u = t / s.step;
  auto k = static_cast<std::size_t>(u);
  if (k + 1 >= s.values.size()) return s.values.back();
  double x = u - static_cast<double>(k);
  return (1.0 - x) * s.values[k] + x * s.values[k + 1];
}

double phase_integral(const FramePhase& f, double t) {
  require_time(t);
  if (const auto* c = std::get_if<ConstantPhase>(&f.shape)) return c->value * t;
  if (const auto* p = std::get_if<PiecewisePhase>(&f.shape)) {
    double acc = 0.0;
    for (std::size_t i = 0; i < p->knots.size(); ++i) {
      double lo = p->knots[i];
      if (lo >= t) break;
      double hi = i + 1 < p->knots.size() ? std::min(p->knots[i + 1], t) : t;
      acc += p->values[i] * (hi - lo);
    }
    return acc;
  }
  const auto& s = std::get<SampledPhase>(f.shape);
  double acc = 0.0;
  double end = s.step * static_cast<double>(s.values.size() - 1);
  double tt = std::min(t, end);
  for (std::size_t j = 0; j + 1 < s.values.size(); ++j) {
    double t0 = static_cast<double>(j) * s.step;
    if (t0 >= tt) break;
    double d = std::min(s.step, tt - t0);
    double v0 = s.values[j];
    double v1 = v0 + (s.values[j + 1] - v0) * (d / s.step);
    acc += 0.5 * d * (v0 + v1);
  }
  if (t > end) acc += s.values.back() * (t - end);
  return acc;
}

std::vector<double> frame_breakpoints(const FramePhase& f, double horizon) {
  std::vector<double> out;
  if (const auto* p = std::get_if<PiecewisePhase>(&f.shape)) {
    for (double k : p->knots)
      if (k > 0.0 && k < horizon) out.push_back(k);
  } else if (const auto* s = std::get_if<SampledPhase>(&f.shape)) {
    for (std::size_t j = 1; j + 1 < s->values.size(); ++j) {
      double t = static_cast<double>(j) * s->step;
      if (t >= horizon) break;
      out.push_back(t);
    }
  }
  return out;
}

ModulationWaveform effective_modulation(const ModulationWaveform& envelope,
                                        const std::optional<FramePhase>& frame,
                                        double horizon, double step) {
  validate(envelope);
  if (!frame) return envelope;
  validate(*frame);
  if (const auto* c = std::get_if<ConstantPhase>(&frame->shape)) {
    double shift = c->value;
    if (shift == 0.0) return envelope;
    if (const auto* cst = std::get_if<Constant>(&envelope))
      return Monochromatic{cst->eps0, shift};
    if (const auto* m = std::get_if<Monochromatic>(&envelope))
      return Monochromatic{m->eps0, m->shift + shift};
    if (const auto* q = std::get_if<Quasiperiodic>(&envelope)) {
      Quasiperiodic shifted = *q;
      for (auto& comp : shifted.components) comp.nu += shift;
      return shifted;
    }
  }
  require(std::isfinite(horizon) && horizon > 0.0 && step > 0.0 && step <= horizon,
          ErrorKind::invalid_input,
          "effective_modulation: need 0 < step <= horizon for sampling");
  require(horizon <= definition_horizon(envelope) * (1.0 + 1e-12),
          ErrorKind::invalid_input,
          "effective_modulation: horizon exceeds the sampled envelope range");
  Sampled out;
  out.step = step;
  auto n = static_cast<std::size_t>(std::ceil(horizon / step)) + 1;
  out.values.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    double t = std::min(static_cast<double>(k) * step, horizon);
    out.values[k] =
        evaluate(envelope, t) * std::polar(1.0, -phase_integral(*frame, t));
  }
  return out;
}

Sampled load_sampled_csv(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::invalid_input, "cannot open waveform file: " + path);
  std::vector<double> ts;
  std::vector<cplx> vals;
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
    double t, re, im;
    if (!(ss >> t >> re >> im)) {
      if (ts.empty() && lineno <= 2) continue;
      fail(ErrorKind::invalid_input,
           "waveform file: unparsable line " + std::to_string(lineno));
    }
    ts.push_back(t);
    vals.push_back(cplx(re, im));
  }
  require(ts.size() >= 2, ErrorKind::invalid_input,
          "waveform file: need at least two samples");
  require(ts.front() == 0.0, ErrorKind::invalid_input,
          "waveform file: time grid must start at 0");
  double step = ts[1] - ts[0];
  require(step > 0.0, ErrorKind::invalid_input,
          "waveform file: time grid must be increasing");
  for (std::size_t i = 1; i < ts.size(); ++i) {
    double expected = static_cast<double>(i) * step;
    require(std::abs(ts[i] - expected) <= 1e-9 * std::max(1.0, std::abs(expected)),
            ErrorKind::invalid_input, "waveform file: time grid must be uniform");
  }
  Sampled s{step, std::move(vals)};
  ValidateVisitor{}(s);
  return s;
}

}  // namespace deco::modulation
