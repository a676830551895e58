#include "deco/bloch.hpp"

#include "deco/csv.hpp"
#include "deco/errors.hpp"
#include "deco/ode.hpp"
#include "oscillatory.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace deco::bloch {

namespace {

using cplx = std::complex<double>;
using detail::kPi;
using detail::kTwoPi;

constexpr double kInvSqrt2 = 0.70710678118654752440;

double frame_value_or_zero(const modulation::FramePhase* f, double t) {
  return f ? modulation::frame_value(*f, t) : 0.0;
}

double phase_integral_or_zero(const modulation::FramePhase* f, double t) {
  return f ? modulation::phase_integral(*f, t) : 0.0;
}

// exp(-i H dt) for Hermitian H via the Pauli decomposition; exact, so
// stepwise-constant Hamiltonians propagate without Trotter error.
Eigen::Matrix2cd propagator_step(const Eigen::Matrix2cd& h, double dt) {
  double mean = 0.5 * std::real(h(0, 0) + h(1, 1));
  Eigen::Matrix2cd b = h - mean * Eigen::Matrix2cd::Identity();
  double bn = std::hypot(std::real(b(0, 0)), std::abs(b(0, 1)));
  double theta = bn * dt;
  Eigen::Matrix2cd u = std::cos(theta) * Eigen::Matrix2cd::Identity() -
                       cplx(0.0, dt * detail::sinc(theta)) * b;
  return std::polar(1.0, -mean * dt) * u;
}

double spectral_radius(const Eigen::Matrix2cd& h) {
  double mean = 0.5 * std::real(h(0, 0) + h(1, 1));
  double bn = std::hypot(0.5 * std::real(h(0, 0) - h(1, 1)), std::abs(h(0, 1)));
  return std::abs(mean) + bn;
}

double bath_scale(const bath::ThermalBathSpectrum& b) {
  auto s = bath::thermal_support(b);
  return std::max(std::abs(s.lo), std::abs(s.hi));
}

double drive_rate(const modulation::ModulationWaveform& w) {
  struct Visitor {
    double operator()(const modulation::Constant&) const { return 0.0; }
    double operator()(const modulation::Monochromatic& m) const { return std::abs(m.shift); }
    double operator()(const modulation::ImpulsivePm&) const { return 0.0; }
    double operator()(const modulation::OnOff&) const { return 0.0; }
    double operator()(const modulation::Quasiperiodic& q) const {
      double r = 0.0;
      for (const auto& c : q.components) r = std::max(r, std::abs(c.nu));
      return r;
    }
    double operator()(const modulation::Sampled& s) const { return kPi / s.step; }
  };
  return std::visit(Visitor{}, w);
}

// Piecewise drives are integrated on a grid commensurate with their period so
// jump instants land on cell boundaries and never straddle a midpoint cell.
double jump_period(const modulation::ModulationWaveform& w) {
  if (const auto* p = std::get_if<modulation::ImpulsivePm>(&w)) return p->tau;
  if (const auto* o = std::get_if<modulation::OnOff>(&w)) return o->tau_period;
  if (const auto* s = std::get_if<modulation::Sampled>(&w)) return s->step;
  return 0.0;
}

double frame_peak(const modulation::FramePhase* f, double t_final) {
  if (!f) return 0.0;
  double m = 0.0;
  for (int i = 0; i <= 1024; ++i)
    m = std::max(m, std::abs(modulation::frame_value(*f, t_final * i / 1024.0)));
  return m;
}

double coefficient_step(const bath::ThermalBathSpectrum& b, double wa,
                        const modulation::ModulationWaveform& w,
                        const modulation::FramePhase* frame, double t_final,
                        double substep) {
  if (substep > 0.0) {
    require(std::isfinite(substep), ErrorKind::invalid_input,
            "step control: substep must be finite");
    return substep;
  }
  double scale = std::abs(wa) + bath_scale(b) + drive_rate(w) + frame_peak(frame, t_final);
  double h = kTwoPi / (200.0 * std::max(scale, 1e-12));
  h = std::min({h, bath::correlation_time(b) / 20.0, t_final / 32.0});
  double period = jump_period(w);
  if (period > 0.0) {
    double m = std::ceil(period / h - 1e-12);
    if (const auto* oo = std::get_if<modulation::OnOff>(&w)) {
      // also align the on->off edge when the duty ratio is a small rational
      for (double k = m; k <= m + 400.0; k += 1.0) {
        double cells = oo->tau_on * k / period;
        if (std::abs(cells - std::round(cells)) < 1e-9 * k) {
          m = k;
          break;
        }
      }
    }
    h = period / m;
  }
  return h;
}

struct CoefficientTable {
  double h = 0.0;
  std::vector<cplx> conv_u;   // (Phi * u)(k h) h,  u(s) = eps(s) e^{-i wa s}
  std::vector<cplx> conv_ub;  // (Phi * conj u)(k h) h
};

cplx interp(const std::vector<cplx>& v, double h, double t) {
  double x = std::max(t, 0.0) / h;
  auto k = static_cast<std::size_t>(x);
  if (k + 1 >= v.size()) return v.back();
  double f = x - static_cast<double>(k);
  return v[k] * (1.0 - f) + v[k + 1] * f;
}

CoefficientTable build_table(const bath::CorrelationSampler& phi, double wa,
                             const modulation::ModulationWaveform& w,
                             const modulation::FramePhase* frame, double t_final,
                             const StepControl& ctrl) {
  CoefficientTable tab;
  tab.h = coefficient_step(phi.spectrum(), wa, w, frame, t_final, ctrl.substep);
  auto n = static_cast<std::size_t>(std::ceil(t_final / tab.h - 1e-12));
  n = std::max<std::size_t>(n, 1);
  require(n <= 1000000, ErrorKind::numerical_failure,
          "bloch: coefficient grid too large for this horizon");

  std::size_t nfft = 16;
  while (nfft < 2 * n) nfft <<= 1;
  Eigen::VectorXcd kern = Eigen::VectorXcd::Zero(static_cast<long>(nfft));
  Eigen::VectorXcd uh = Eigen::VectorXcd::Zero(static_cast<long>(nfft));
  Eigen::VectorXcd ub = Eigen::VectorXcd::Zero(static_cast<long>(nfft));
  for (std::size_t j = 0; j < n; ++j) {
    // the last midpoint may poke past the horizon; clamp, one O(h^2) cell
    double tau = std::min((static_cast<double>(j) + 0.5) * tab.h, t_final);
    cplx eps = modulation::evaluate(w, tau) *
               std::polar(1.0, -phase_integral_or_zero(frame, tau));
    cplx u = eps * std::polar(1.0, -wa * tau);
    kern[static_cast<long>(j)] = phi(tau);
    uh[static_cast<long>(j)] = u;
    ub[static_cast<long>(j)] = std::conj(u);
  }
  Eigen::FFT<double> fft;
  Eigen::VectorXcd fk(static_cast<long>(nfft)), fu(static_cast<long>(nfft)),
      fb(static_cast<long>(nfft));
  fft.fwd(fk, kern);
  fft.fwd(fu, uh);
  fft.fwd(fb, ub);
  Eigen::VectorXcd pu = fk.cwiseProduct(fu);
  Eigen::VectorXcd pb = fk.cwiseProduct(fb);
  Eigen::VectorXcd cu(static_cast<long>(nfft)), cb(static_cast<long>(nfft));
  fft.inv(cu, pu);
  fft.inv(cb, pb);

  tab.conv_u.assign(n + 1, cplx(0.0, 0.0));
  tab.conv_ub.assign(n + 1, cplx(0.0, 0.0));
  for (std::size_t k = 1; k <= n; ++k) {
    tab.conv_u[k] = tab.h * cu[static_cast<long>(k - 1)];
    tab.conv_ub[k] = tab.h * cb[static_cast<long>(k - 1)];
  }
  return tab;
}

std::vector<double> output_times(double t_final, std::size_t n_points) {
  std::vector<double> times(n_points);
  for (std::size_t i = 0; i < n_points; ++i)
    times[i] = t_final * static_cast<double>(i) / static_cast<double>(n_points - 1);
  times.back() = t_final;
  return times;
}

void check_step_control(const StepControl& ctrl) {
  require(ctrl.rel_tol > 0.0 && ctrl.abs_tol > 0.0, ErrorKind::invalid_input,
          "step control: tolerances must be positive");
  require(ctrl.n_points >= 2 && ctrl.n_points <= 1000000, ErrorKind::invalid_input,
          "step control: n_points must be in [2, 1000000]");
}

void check_horizon(const bath::CorrelationSampler& phi, double t_final) {
  require(std::isfinite(t_final) && t_final > 0.0, ErrorKind::invalid_input,
          "evolution horizon must be positive and finite");
  require(phi.horizon() >= t_final, ErrorKind::invalid_input,
          "correlation sampler horizon is shorter than the evolution horizon");
}

template <class Run>
void integrate_or_rethrow(Run&& run, const std::vector<double>& recorded) {
  try {
    run();
  } catch (const Error& e) {
    if (e.kind != ErrorKind::numerical_failure) throw;
    double last = recorded.empty() ? 0.0 : recorded.back();
    fail(ErrorKind::numerical_failure,
         std::string(e.what()) + " (last completed sample at t=" +
             csv::format_value(last) + ")");
  }
}

// Two-level engine shared by the amplitude- and phase-noise solvers. The
// memory coefficients are linear convolutions of Phi with u = eps e^{-i wa t}
// and its conjugate, precomputed by FFT on a uniform midpoint grid and
// linearly interpolated; the pointwise factors are evaluated exactly.
Trajectory run_two_level(const Eigen::Matrix2cd& rho0, const bath::CorrelationSampler& phi,
                         double wa, const modulation::ModulationWaveform& w,
                         const modulation::FramePhase* frame, double t_final,
                         const StepControl& ctrl) {
  check_step_control(ctrl);
  check_horizon(phi, t_final);
  require(modulation::definition_horizon(w) >= t_final, ErrorKind::invalid_input,
          "drive data does not cover the evolution horizon");
  CoefficientTable tab = build_table(phi, wa, w, frame, t_final, ctrl);

  auto rhs = [&](double t, const Eigen::VectorXcd& y) -> Eigen::VectorXcd {
    double p = phase_integral_or_zero(frame, t);
    cplx bare = modulation::evaluate(w, t);
    cplx u = bare * std::polar(1.0, -(p + wa * t));
    cplx cu = interp(tab.conv_u, tab.h, t);
    cplx cb = interp(tab.conv_ub, tab.h, t);
    cplx ie = std::conj(u) * cu;  // R_e/2 + i Delta_e
    cplx ig = u * cb;             // R_g/2 + i Delta_g
    cplx damp = ie + std::conj(ig);
    cplx mix = std::conj(bare) * std::polar(1.0, -(p + wa * t)) * (cb + std::conj(cu));
    double ee = std::real(y[0]);
    cplx eg = y[1];
    double rot = wa + frame_value_or_zero(frame, t);
    Eigen::VectorXcd dy(2);
    dy[0] = -2.0 * std::real(ie) * ee + 2.0 * std::real(ig) * (1.0 - ee);
    dy[1] = -(cplx(0.0, rot) + damp) * eg + mix * std::conj(eg);
    return dy;
  };

  std::vector<double> breaks = modulation::time_breakpoints(w, t_final);
  if (frame) {
    auto fb = modulation::frame_breakpoints(*frame, t_final);
    breaks.insert(breaks.end(), fb.begin(), fb.end());
  }

  Trajectory traj;
  traj.t.reserve(ctrl.n_points);
  traj.rho.reserve(ctrl.n_points);
  Eigen::VectorXcd y0(2);
  y0[0] = rho0(0, 0);
  y0[1] = rho0(0, 1);
  ode::Options opt;
  opt.rel_tol = ctrl.rel_tol;
  opt.abs_tol = ctrl.abs_tol;
  integrate_or_rethrow(
      [&] {
        ode::solve(
            rhs, 0.0, y0, output_times(t_final, ctrl.n_points), opt, breaks,
            [&](double t, const Eigen::VectorXcd& y) {
              double ee = std::real(y[0]);
              Eigen::Matrix2cd r;
              r << cplx(ee, 0.0), y[1], std::conj(y[1]), cplx(1.0 - ee, 0.0);
              traj.t.push_back(t);
              traj.rho.push_back(r);
            });
      },
      traj.t);
  return traj;
}

void check_an_program(const AnProgram& p) {
  require(std::isfinite(p.omega_a), ErrorKind::invalid_input,
          "amplitude program: omega_a must be finite");
  modulation::validate(p.drive);
  if (p.shift) {
    modulation::validate(*p.shift);
    require(p.shift->kind == modulation::FrameKind::stark_shift, ErrorKind::invalid_input,
            "amplitude program: frame phase must be a stark_shift");
  }
}

void check_pn_program(const PnProgram& p) {
  require(std::isfinite(p.omega_a), ErrorKind::invalid_input,
          "phase program: omega_a must be finite");
  modulation::validate(p.coupling);
  if (p.splitting) {
    modulation::validate(*p.splitting);
    require(p.splitting->kind == modulation::FrameKind::resonant_splitting,
            ErrorKind::invalid_input,
            "phase program: frame phase must be a resonant_splitting");
  }
}

const modulation::FramePhase* frame_ptr(const std::optional<modulation::FramePhase>& f) {
  return f ? &*f : nullptr;
}

Eigen::Matrix2cd unpack(const Eigen::VectorXcd& y) {
  Eigen::Matrix2cd m;
  m << y[0], y[2], y[1], y[3];
  return m;
}

Eigen::VectorXcd pack(const Eigen::Matrix2cd& m) {
  Eigen::VectorXcd y(4);
  y << m(0, 0), m(1, 0), m(0, 1), m(1, 1);
  return y;
}

// Direct master-equation route: cached stepwise-exact propagators U(t_k, 0),
// the interaction-picture coupling A = U^dag S U cached at cell midpoints,
// and the memory integral re-evaluated per right-hand side by the midpoint
// product rule with Phi from the sampler.
Trajectory run_general(const Eigen::Matrix2cd& rho0, const bath::CorrelationSampler& phi,
                       const OperatorFunction& h_s, const OperatorFunction& coupling,
                       double t_final, const StepControl& ctrl) {
  check_step_control(ctrl);
  check_horizon(phi, t_final);
  require(static_cast<bool>(h_s) && static_cast<bool>(coupling), ErrorKind::invalid_input,
          "general evolution: Hamiltonian and coupling functions must be set");

  double h = ctrl.substep;
  if (h <= 0.0) {
    double wh = 0.0;
    for (int i = 0; i <= 1024; ++i)
      wh = std::max(wh, spectral_radius(h_s(t_final * i / 1024.0)));
    double scale = 2.0 * wh + bath_scale(phi.spectrum());
    h = kTwoPi / (200.0 * std::max(scale, 1e-12));
    h = std::min({h, bath::correlation_time(phi.spectrum()) / 20.0, t_final / 32.0});
  } else {
    require(std::isfinite(h), ErrorKind::invalid_input,
            "step control: substep must be finite");
  }
  auto m = static_cast<std::size_t>(std::ceil(t_final / h - 1e-12));
  m = std::max<std::size_t>(m, 1);
  require(m <= 200000, ErrorKind::numerical_failure,
          "general evolution: propagator grid too large for this horizon");
  h = t_final / static_cast<double>(m);

  std::vector<Eigen::Matrix2cd> u_node(m + 1);
  std::vector<Eigen::Matrix2cd> a_mid(m);
  u_node[0] = Eigen::Matrix2cd::Identity();
  for (std::size_t j = 0; j < m; ++j) {
    double tmid = (static_cast<double>(j) + 0.5) * h;
    Eigen::Matrix2cd half = propagator_step(h_s(tmid), 0.5 * h);
    Eigen::Matrix2cd umid = half * u_node[j];
    a_mid[j] = umid.adjoint() * coupling(tmid) * umid;
    u_node[j + 1] = half * umid;
  }

  auto rhs = [&](double t, const Eigen::VectorXcd& y) -> Eigen::VectorXcd {
    Eigen::Matrix2cd rho = unpack(y);
    auto k = std::min(static_cast<std::size_t>(t / h), m);
    Eigen::Matrix2cd acc = Eigen::Matrix2cd::Zero();
    for (std::size_t j = 0; j < k; ++j)
      acc += phi(t - (static_cast<double>(j) + 0.5) * h) * a_mid[j];
    acc *= h;
    double d = t - static_cast<double>(k) * h;
    Eigen::Matrix2cd ut = u_node[k];
    if (d > 1e-12 * h) {
      double tmid = static_cast<double>(k) * h + 0.5 * d;
      Eigen::Matrix2cd hm = h_s(tmid);
      Eigen::Matrix2cd umid = propagator_step(hm, 0.5 * d) * u_node[k];
      acc += d * phi(0.5 * d) * (umid.adjoint() * coupling(tmid) * umid);
      ut = propagator_step(hm, d) * u_node[k];
    }
    Eigen::Matrix2cd mem = ut * acc * ut.adjoint();
    Eigen::Matrix2cd s = coupling(t);
    Eigen::Matrix2cd ham = h_s(t);
    Eigen::Matrix2cd drho = cplx(0.0, -1.0) * (ham * rho - rho * ham) + mem * rho * s +
                            s * rho * mem.adjoint() - s * mem * rho -
                            rho * mem.adjoint() * s;
    return pack(drho);
  };

  Trajectory traj;
  traj.t.reserve(ctrl.n_points);
  traj.rho.reserve(ctrl.n_points);
  ode::Options opt;
  opt.rel_tol = ctrl.rel_tol;
  opt.abs_tol = ctrl.abs_tol;
  integrate_or_rethrow(
      [&] {
        ode::solve(rhs, 0.0, pack(rho0), output_times(t_final, ctrl.n_points), opt, {},
                   [&](double t, const Eigen::VectorXcd& y) {
                     traj.t.push_back(t);
                     traj.rho.push_back(unpack(y));
                   });
      },
      traj.t);
  return traj;
}

}  // namespace

void validate(const AnProgram& program) { check_an_program(program); }
void validate(const PnProgram& program) { check_pn_program(program); }

QubitState excited_state() {
  QubitState s;
  s.rho << 1.0, 0.0, 0.0, 0.0;
  return s;
}

QubitState superposition_state() {
  QubitState s;
  s.rho << 0.5, 0.5, 0.5, 0.5;
  return s;
}

void validate(const QubitState& s) {
  require((s.rho - s.rho.adjoint()).norm() < 1e-9, ErrorKind::invalid_input,
          "qubit state: density matrix must be Hermitian");
  require(std::abs(s.rho.trace() - cplx(1.0, 0.0)) < 1e-9, ErrorKind::invalid_input,
          "qubit state: trace must be 1");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(
      0.5 * (s.rho + s.rho.adjoint()));
  require(es.eigenvalues().minCoeff() > -1e-6, ErrorKind::invalid_input,
          "qubit state: negative eigenvalue beyond tolerance");
}

QubitState tilt_basis(const QubitState& s, double omega_a, double t, Basis target) {
  if (s.basis == target) return s;
  cplx ph = std::polar(kInvSqrt2, -omega_a * t);
  Eigen::Matrix2cd w;  // columns are |up>, |down> in the lab basis
  w << ph, ph, cplx(kInvSqrt2, 0.0), cplx(-kInvSqrt2, 0.0);
  QubitState out;
  out.basis = target;
  if (target == Basis::tilted)
    out.rho = w.adjoint() * s.rho * w;
  else
    out.rho = w * s.rho * w.adjoint();
  return out;
}

double excited_population(const Eigen::Matrix2cd& rho_lab) {
  return std::clamp(std::real(rho_lab(0, 0)), 0.0, 1.0);
}

Eigen::Matrix2cd lab_frame(const Trajectory& traj, std::size_t i) {
  require(i < traj.rho.size(), ErrorKind::invalid_input,
          "trajectory: sample index out of range");
  if (traj.basis == Basis::lab) return traj.rho[i];
  QubitState s{traj.rho[i], Basis::tilted};
  return tilt_basis(s, traj.omega_a, traj.t[i], Basis::lab).rho;
}

Trajectory evolve_an(const QubitState& initial, const bath::ThermalBathSpectrum& b,
                     const AnProgram& program, double t_final, const StepControl& ctrl) {
  bath::CorrelationSampler phi(b, t_final * (1.0 + 1e-9));
  return evolve_an(initial, phi, program, t_final, ctrl);
}

Trajectory evolve_an(const QubitState& initial, const bath::CorrelationSampler& phi,
                     const AnProgram& program, double t_final, const StepControl& ctrl) {
  validate(initial);
  require(initial.basis == Basis::lab, ErrorKind::invalid_input,
          "amplitude evolution expects a lab-basis state");
  check_an_program(program);
  Trajectory traj = run_two_level(initial.rho, phi, program.omega_a, program.drive,
                                  frame_ptr(program.shift), t_final, ctrl);
  traj.basis = Basis::lab;
  traj.omega_a = program.omega_a;
  return traj;
}

Trajectory evolve_pn(const QubitState& initial, const bath::ThermalBathSpectrum& b,
                     const PnProgram& program, double t_final, const StepControl& ctrl) {
  bath::CorrelationSampler phi(b, t_final * (1.0 + 1e-9));
  return evolve_pn(initial, phi, program, t_final, ctrl);
}

Trajectory evolve_pn(const QubitState& initial, const bath::CorrelationSampler& phi,
                     const PnProgram& program, double t_final, const StepControl& ctrl) {
  validate(initial);
  check_pn_program(program);
  QubitState start = initial.basis == Basis::tilted
                         ? initial
                         : tilt_basis(initial, program.omega_a, 0.0, Basis::tilted);
  Trajectory traj = run_two_level(start.rho, phi, 0.0, program.coupling,
                                  frame_ptr(program.splitting), t_final, ctrl);
  traj.basis = Basis::tilted;
  traj.omega_a = program.omega_a;
  return traj;
}

Trajectory evolve_general_me(const QubitState& initial, const bath::ThermalBathSpectrum& b,
                             const OperatorFunction& h_s, const OperatorFunction& coupling,
                             double t_final, const StepControl& ctrl) {
  bath::CorrelationSampler phi(b, t_final * (1.0 + 1e-9));
  return evolve_general_me(initial, phi, h_s, coupling, t_final, ctrl);
}

Trajectory evolve_general_me(const QubitState& initial, const bath::CorrelationSampler& phi,
                             const OperatorFunction& h_s, const OperatorFunction& coupling,
                             double t_final, const StepControl& ctrl) {
  validate(initial);
  Trajectory traj = run_general(initial.rho, phi, h_s, coupling, t_final, ctrl);
  traj.basis = initial.basis;
  traj.omega_a = 0.0;
  return traj;
}

OperatorFunction an_hamiltonian(const AnProgram& p) {
  check_an_program(p);
  auto prog = p;
  return [prog](double t) {
    Eigen::Matrix2cd h = Eigen::Matrix2cd::Zero();
    h(0, 0) = prog.omega_a + frame_value_or_zero(frame_ptr(prog.shift), t);
    return h;
  };
}

OperatorFunction an_coupling(const AnProgram& p) {
  check_an_program(p);
  auto prog = p;
  return [prog](double t) {
    cplx eps = modulation::evaluate(prog.drive, t);
    Eigen::Matrix2cd s;
    s << cplx(0.0, 0.0), std::conj(eps), eps, cplx(0.0, 0.0);
    return s;
  };
}

OperatorFunction pn_hamiltonian(const PnProgram& p) {
  check_pn_program(p);
  auto prog = p;
  return [prog](double t) {
    double v0 = frame_value_or_zero(frame_ptr(prog.splitting), t);
    Eigen::Matrix2cd h = Eigen::Matrix2cd::Zero();
    h(0, 0) = 0.5 * v0;
    h(1, 1) = -0.5 * v0;
    return h;
  };
}

OperatorFunction pn_coupling(const PnProgram& p) {
  check_pn_program(p);
  auto prog = p;
  return [prog](double t) {
    cplx eps = modulation::evaluate(prog.coupling, t);
    Eigen::Matrix2cd s;
    s << cplx(0.0, 0.0), std::conj(eps), eps, cplx(0.0, 0.0);
    return s;
  };
}

void write_csv(const std::string& path, const Trajectory& traj) {
  require(traj.t.size() == traj.rho.size(), ErrorKind::invalid_input,
          "trajectory: time and state arrays disagree");
  std::vector<std::vector<double>> rows;
  rows.reserve(traj.t.size());
  for (std::size_t i = 0; i < traj.t.size(); ++i) {
    Eigen::Matrix2cd r = lab_frame(traj, i);
    rows.push_back({traj.t[i], std::real(r(0, 0)), std::imag(r(0, 0)),
                    std::real(r(0, 1)), std::imag(r(0, 1)), excited_population(r),
                    std::abs(r(0, 1))});
  }
  csv::write_table_file(
      path, {"t", "re_rho_ee", "im_rho_ee", "re_rho_eg", "im_rho_eg", "p_e", "abs_rho_eg"},
      rows);
}

}  // namespace deco::bloch
