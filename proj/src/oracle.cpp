#include "deco/oracle.hpp"

#include "deco/csv.hpp"
#include "deco/modulation.hpp"
#include "deco/ode.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <string>
#include <variant>
#include <vector>

namespace deco::oracle {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kInf = std::numeric_limits<double>::infinity();
using cplx = std::complex<double>;

std::vector<double> output_times(double t_final, std::size_t n_points) {
  std::vector<double> times(n_points);
  for (std::size_t i = 0; i < n_points; ++i)
    times[i] = t_final * static_cast<double>(i) / static_cast<double>(n_points - 1);
  times.back() = t_final;
  return times;
}

void check_run(double t_final, std::size_t n_points) {
  require(std::isfinite(t_final) && t_final > 0.0, ErrorKind::invalid_input,
          "oracle horizon must be positive and finite");
  require(n_points >= 2 && n_points <= 1000000, ErrorKind::invalid_input,
          "oracle n_points must be in [2, 1000000]");
}

struct MassGrid {
  std::vector<double> x;
  std::vector<double> cdf;  // cumulative trapezoid integral of G0 along x
  double total = 0.0;
};

MassGrid accumulate_mass(const bath::ThermalBathSpectrum& b, double lo, double hi,
                         std::size_t n_panels) {
  MassGrid g;
  g.x.reserve(n_panels + 16);
  for (std::size_t i = 0; i <= n_panels; ++i)
    g.x.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n_panels));
  for (double s : bath::spectrum_breakpoints(b))
    if (s > lo && s < hi) g.x.push_back(s);
  std::sort(g.x.begin(), g.x.end());
  g.x.erase(std::unique(g.x.begin(), g.x.end()), g.x.end());
  g.cdf.resize(g.x.size());
  g.cdf[0] = 0.0;
  double prev = bath::base_spectrum(b.model, g.x[0]);
  for (std::size_t i = 1; i < g.x.size(); ++i) {
    double cur = bath::base_spectrum(b.model, g.x[i]);
    g.cdf[i] = g.cdf[i - 1] + 0.5 * (prev + cur) * (g.x[i] - g.x[i - 1]);
    prev = cur;
  }
  g.total = g.cdf.back();
  return g;
}

double quantile(const MassGrid& g, double target) {
  if (target <= 0.0) return g.x.front();
  if (target >= g.total) return g.x.back();
  std::size_t i = static_cast<std::size_t>(
      std::upper_bound(g.cdf.begin(), g.cdf.end(), target) - g.cdf.begin());
  if (i == 0) return g.x.front();
  if (i >= g.x.size()) return g.x.back();
  double dm = g.cdf[i] - g.cdf[i - 1];
  if (dm <= 0.0) return g.x[i - 1];
  return g.x[i - 1] + (target - g.cdf[i - 1]) / dm * (g.x[i] - g.x[i - 1]);
}

const modulation::FramePhase* frame_ptr(const std::optional<modulation::FramePhase>& f) {
  return f ? &*f : nullptr;
}

// Envelope resolved into constant segments on [0, t_final].
struct PiecewiseEnvelope {
  std::vector<double> edge;  // edge.size() == value.size() + 1
  std::vector<cplx> value;
};

PiecewiseEnvelope resolve_envelope(const modulation::ModulationWaveform& w, double t_final) {
  require(std::holds_alternative<modulation::Constant>(w) ||
              std::holds_alternative<modulation::OnOff>(w) ||
              std::holds_alternative<modulation::ImpulsivePm>(w),
          ErrorKind::invalid_input,
          "dephasing oracle needs a piecewise-constant coupling envelope "
          "(constant, on-off or impulsive phase train)");
  PiecewiseEnvelope env;
  env.edge.push_back(0.0);
  for (double s : modulation::time_breakpoints(w, t_final))
    if (s > 0.0 && s < t_final) env.edge.push_back(s);
  std::sort(env.edge.begin(), env.edge.end());
  env.edge.erase(std::unique(env.edge.begin(), env.edge.end()), env.edge.end());
  env.edge.push_back(t_final);
  env.value.reserve(env.edge.size() - 1);
  for (std::size_t j = 0; j + 1 < env.edge.size(); ++j)
    env.value.push_back(modulation::evaluate(w, 0.5 * (env.edge[j] + env.edge[j + 1])));
  return env;
}

// All segment values share one axis in the complex plane (phases equal mod pi).
bool fixed_axis(const PiecewiseEnvelope& env) {
  cplx ref(0.0, 0.0);
  for (const cplx& v : env.value)
    if (std::abs(v) > 0.0) {
      ref = v;
      break;
    }
  if (ref == cplx(0.0, 0.0)) return true;
  for (const cplx& v : env.value)
    if (std::abs(std::imag(v * std::conj(ref))) > 1e-12 * std::abs(v) * std::abs(ref))
      return false;
  return true;
}

bool splitting_is_zero(const std::optional<modulation::FramePhase>& f) {
  if (!f) return true;
  if (const auto* c = std::get_if<modulation::ConstantPhase>(&f->shape))
    return c->value == 0.0;
  if (const auto* p = std::get_if<modulation::PiecewisePhase>(&f->shape))
    return std::all_of(p->values.begin(), p->values.end(),
                       [](double v) { return v == 0.0; });
  return false;
}

double sinc(double x) {
  if (std::abs(x) < 1e-4) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

// integral_a^b e^{i w tau} d tau, stable for any w
cplx segment_transform(double w, double a, double b) {
  return std::polar(b - a, w * 0.5 * (a + b)) * sinc(0.5 * w * (b - a));
}

cplx envelope_transform(const PiecewiseEnvelope& env, double w, double t) {
  cplx acc(0.0, 0.0);
  for (std::size_t j = 0; j < env.value.size(); ++j) {
    double a = env.edge[j];
    if (a >= t) break;
    double b = std::min(env.edge[j + 1], t);
    acc += env.value[j] * segment_transform(w, a, b);
  }
  return acc;
}

}  // namespace

void validate(const DiscretizedBath& db) {
  require(!db.modes.empty(), ErrorKind::invalid_input, "discretized bath has no modes");
  for (const auto& m : db.modes) {
    require(std::isfinite(m.omega) && std::isfinite(m.kappa), ErrorKind::invalid_input,
            "discretized bath: mode parameters must be finite");
    require(m.kappa >= 0.0, ErrorKind::invalid_input,
            "discretized bath: couplings must be non-negative");
  }
  for (std::size_t l = 0; l + 1 < db.modes.size(); ++l)
    require(db.modes[l].omega <= db.modes[l + 1].omega, ErrorKind::invalid_input,
            "discretized bath: modes must be sorted by frequency");
  require(db.n_max >= 1 && db.n_max <= 64, ErrorKind::invalid_input,
          "discretized bath: n_max must be in [1, 64]");
  require(db.beta > 0.0, ErrorKind::invalid_input,
          "discretized bath: beta must be positive (inf = zero temperature)");
  require(db.recurrence > 0.0, ErrorKind::invalid_input,
          "discretized bath: recurrence time must be positive");
  require(std::isfinite(db.l1_error) && db.l1_error >= 0.0, ErrorKind::invalid_input,
          "discretized bath: l1_error must be finite and non-negative");
}

DiscretizedBath discretize(const bath::ThermalBathSpectrum& b, int m_modes,
                           const bath::Support& window) {
  bath::validate(b);
  require(m_modes >= 1 && m_modes <= 100000, ErrorKind::invalid_input,
          "discretize: mode count must be in [1, 100000]");
  require(std::isfinite(window.lo) && std::isfinite(window.hi) && window.lo < window.hi,
          ErrorKind::invalid_input, "discretize: window must be a finite interval");

  bath::Support full = bath::base_support(b.model);
  MassGrid all = accumulate_mass(b, full.lo, full.hi, std::size_t(1) << 16);
  require(all.total > 0.0, ErrorKind::invalid_input,
          "discretize: the coupling density carries no mass");
  double lo = std::max(window.lo, full.lo);
  double hi = std::min(window.hi, full.hi);
  require(lo < hi, ErrorKind::invalid_input,
          "discretize: window does not intersect the spectral support");
  MassGrid win = accumulate_mass(b, lo, hi, std::size_t(1) << 16);
  require(win.total >= 0.99 * all.total, ErrorKind::invalid_input,
          "discretize: window must cover at least 99% of the spectral mass");

  const int m = m_modes;
  const double per = win.total / m;
  DiscretizedBath db;
  db.beta = b.beta;
  db.modes.resize(static_cast<std::size_t>(m));
  std::vector<double> cell(static_cast<std::size_t>(m) + 1);
  cell.front() = lo;
  cell.back() = hi;
  for (int j = 1; j < m; ++j) cell[static_cast<std::size_t>(j)] = quantile(win, per * j);
  for (int l = 0; l < m; ++l) {
    db.modes[static_cast<std::size_t>(l)].omega = quantile(win, per * (l + 0.5));
    db.modes[static_cast<std::size_t>(l)].kappa = std::sqrt(per);
  }

  double gap = kInf;
  for (std::size_t l = 0; l + 1 < db.modes.size(); ++l) {
    double d = db.modes[l + 1].omega - db.modes[l].omega;
    if (d > 0.0) gap = std::min(gap, d);
  }
  db.recurrence = std::isfinite(gap) ? 2.0 * kPi / gap : kInf;

  // Broadened reconstruction: each mode's mass spread uniformly over its own
  // equal-mass cell, compared with G0 panel by panel.
  std::vector<double> xs = win.x;
  xs.insert(xs.end(), cell.begin(), cell.end());
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  double err = 0.0;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    double dx = xs[i + 1] - xs[i];
    if (dx <= 0.0) continue;
    double mid = 0.5 * (xs[i] + xs[i + 1]);
    std::size_t c = static_cast<std::size_t>(
        std::upper_bound(cell.begin(), cell.end(), mid) - cell.begin());
    c = std::min(std::max<std::size_t>(c, 1) - 1, static_cast<std::size_t>(m) - 1);
    double width = cell[c + 1] - cell[c];
    if (width <= 0.0) continue;
    err += std::abs(bath::base_spectrum(b.model, mid) - per / width) * dx;
  }
  db.l1_error = err / win.total;
  validate(db);
  return db;
}

DiscretizedBath discretize(const bath::ThermalBathSpectrum& b, int m_modes) {
  bath::validate(b);
  return discretize(b, m_modes, bath::base_support(b.model));
}

SurvivalTrajectory exact_an_t0(const DiscretizedBath& db, const bloch::AnProgram& program,
                               double t_final, std::size_t n_points) {
  validate(db);
  bloch::validate(program);
  check_run(t_final, n_points);
  require(db.beta > 0.0 && std::isinf(db.beta), ErrorKind::unsupported_regime,
          "excitation-sector oracle requires a zero-temperature bath");
  require(t_final <= db.recurrence, ErrorKind::refusal,
          "oracle horizon exceeds the discretized-bath recurrence time; raise the "
          "mode count or shorten the run");
  require(modulation::definition_horizon(program.drive) >= t_final,
          ErrorKind::invalid_input, "drive data does not cover the oracle horizon");

  const std::size_t m = db.modes.size();
  const modulation::FramePhase* frame = frame_ptr(program.shift);
  Eigen::VectorXcd y0 = Eigen::VectorXcd::Zero(static_cast<long>(m) + 1);
  y0[0] = 1.0;

  auto rhs = [&](double t, const Eigen::VectorXcd& y) -> Eigen::VectorXcd {
    const cplx eps = modulation::evaluate(program.drive, t);
    const double det =
        program.omega_a + (frame ? modulation::frame_value(*frame, t) : 0.0);
    Eigen::VectorXcd dy(y.size());
    cplx acc(0.0, 0.0);
    for (std::size_t l = 0; l < m; ++l)
      acc += db.modes[l].kappa * y[static_cast<long>(l) + 1];
    dy[0] = cplx(0.0, -1.0) * (det * y[0] + std::conj(eps) * acc);
    for (std::size_t l = 0; l < m; ++l)
      dy[static_cast<long>(l) + 1] =
          cplx(0.0, -1.0) *
          (db.modes[l].omega * y[static_cast<long>(l) + 1] + eps * db.modes[l].kappa * y[0]);
    return dy;
  };

  std::vector<double> breaks = modulation::time_breakpoints(program.drive, t_final);
  if (frame) {
    auto fb = modulation::frame_breakpoints(*frame, t_final);
    breaks.insert(breaks.end(), fb.begin(), fb.end());
  }

  ode::Options opt;
  opt.rel_tol = 1e-10;
  opt.abs_tol = 1e-12;

  SurvivalTrajectory traj;
  traj.t.reserve(n_points);
  traj.p_e.reserve(n_points);
  ode::solve(rhs, 0.0, y0, output_times(t_final, n_points), opt, breaks,
             [&](double t, const Eigen::VectorXcd& y) {
               traj.t.push_back(t);
               traj.p_e.push_back(std::norm(y[0]));
               traj.norm_drift = std::max(traj.norm_drift, std::abs(y.norm() - 1.0));
             });
  return traj;
}

namespace {

CoherenceTrajectory displacement_route(const DiscretizedBath& db,
                                       const PiecewiseEnvelope& env, double t_final,
                                       std::size_t n_points) {
  CoherenceTrajectory traj;
  traj.route = PnRoute::closed_form;
  traj.t = output_times(t_final, n_points);
  traj.abs_rho_eg.reserve(n_points);
  for (double t : traj.t) {
    double expo = 0.0;
    for (const auto& mode : db.modes) {
      double occ = std::isinf(db.beta) ? 0.0 : 1.0 / std::expm1(db.beta * mode.omega);
      cplx a = mode.kappa * envelope_transform(env, mode.omega, t);
      expo += 2.0 * std::norm(a) * (2.0 * occ + 1.0);
    }
    traj.abs_rho_eg.push_back(0.5 * std::exp(-expo));
  }
  return traj;
}

CoherenceTrajectory ladder_route(const DiscretizedBath& db, const bloch::PnProgram& program,
                                 double t_final, std::size_t n_points) {
  const std::size_t m = db.modes.size();
  require(m <= 6, ErrorKind::refusal,
          "full dephasing ladder supports at most 6 modes (got " + std::to_string(m) + ")");
  const std::size_t npl = static_cast<std::size_t>(db.n_max) + 1;
  double dim_d = 2.0;
  for (std::size_t l = 0; l < m; ++l) dim_d *= static_cast<double>(npl);
  require(dim_d <= 1e5, ErrorKind::refusal,
          "full dephasing ladder needs " + csv::format_value(dim_d) +
              " amplitudes; the limit is 100000");
  const std::size_t nb = static_cast<std::size_t>(dim_d) / 2;
  const std::size_t dim = 2 * nb;

  std::vector<std::size_t> stride(m);
  for (std::size_t l = 0; l < m; ++l) stride[l] = (l == 0) ? 1 : stride[l - 1] * npl;
  std::vector<double> bath_energy(nb, 0.0);
  for (std::size_t bidx = 0; bidx < nb; ++bidx) {
    double e = 0.0;
    for (std::size_t l = 0; l < m; ++l)
      e += static_cast<double>((bidx / stride[l]) % npl) * db.modes[l].omega;
    bath_energy[bidx] = e;
  }

  // Thermal preparation as an ensemble over bath Fock configurations with
  // truncated, renormalized weights; at zero temperature only the vacuum.
  std::vector<std::pair<std::size_t, double>> configs;
  if (std::isinf(db.beta)) {
    configs.emplace_back(0, 1.0);
  } else {
    for (const auto& mode : db.modes)
      require(mode.omega > 0.0, ErrorKind::invalid_input,
              "finite-temperature ladder needs strictly positive mode frequencies");
    std::vector<std::vector<double>> pn(m, std::vector<double>(npl));
    for (std::size_t l = 0; l < m; ++l) {
      double z = 0.0;
      for (std::size_t n = 0; n < npl; ++n) {
        pn[l][n] = std::exp(-db.beta * db.modes[l].omega * static_cast<double>(n));
        z += pn[l][n];
      }
      for (std::size_t n = 0; n < npl; ++n) pn[l][n] /= z;
    }
    for (std::size_t bidx = 0; bidx < nb; ++bidx) {
      double w = 1.0;
      for (std::size_t l = 0; l < m; ++l) w *= pn[l][(bidx / stride[l]) % npl];
      if (w >= 1e-12) configs.emplace_back(bidx, w);
    }
    require(static_cast<double>(configs.size()) * static_cast<double>(dim) <= 1e6,
            ErrorKind::refusal,
            "thermal ladder ensemble is too large; reduce the mode count, the "
            "truncation or the temperature");
  }

  const modulation::FramePhase* frame = frame_ptr(program.splitting);
  auto rhs = [&](double t, const Eigen::VectorXcd& y) -> Eigen::VectorXcd {
    const cplx eps = modulation::evaluate(program.coupling, t);
    const double v0 = frame ? modulation::frame_value(*frame, t) : 0.0;
    Eigen::VectorXcd dy(y.size());
    for (std::size_t s = 0; s < 2; ++s) {
      const double zsign = (s == 0) ? 0.5 : -0.5;
      const cplx f = (s == 0) ? std::conj(eps) : eps;
      const std::size_t base = s * nb;
      const std::size_t other = (1 - s) * nb;
      for (std::size_t bidx = 0; bidx < nb; ++bidx) {
        cplx acc = (zsign * v0 + bath_energy[bidx]) * y[static_cast<long>(base + bidx)];
        for (std::size_t l = 0; l < m; ++l) {
          const std::size_t n = (bidx / stride[l]) % npl;
          if (n > 0)
            acc += f * db.modes[l].kappa * std::sqrt(static_cast<double>(n)) *
                   y[static_cast<long>(other + bidx - stride[l])];
          if (n + 1 < npl)
            acc += f * db.modes[l].kappa * std::sqrt(static_cast<double>(n) + 1.0) *
                   y[static_cast<long>(other + bidx + stride[l])];
        }
        dy[static_cast<long>(base + bidx)] = cplx(0.0, -1.0) * acc;
      }
    }
    return dy;
  };

  std::vector<double> breaks = modulation::time_breakpoints(program.coupling, t_final);
  if (frame) {
    auto fb = modulation::frame_breakpoints(*frame, t_final);
    breaks.insert(breaks.end(), fb.begin(), fb.end());
  }

  ode::Options opt;
  opt.rel_tol = 1e-10;
  opt.abs_tol = 1e-12;

  CoherenceTrajectory traj;
  traj.route = PnRoute::full_ladder;
  traj.t = output_times(t_final, n_points);
  // weighted reduced coherence, accumulated over the ensemble
  std::vector<cplx> tilted(n_points, cplx(0.0, 0.0));
  for (const auto& [bidx, w] : configs) {
    Eigen::VectorXcd y0 = Eigen::VectorXcd::Zero(static_cast<long>(dim));
    y0[static_cast<long>(bidx)] = 1.0;  // spin up, bath Fock configuration
    std::size_t k = 0;
    ode::solve(rhs, 0.0, y0, traj.t, opt, breaks,
               [&](double, const Eigen::VectorXcd& y) {
                 double uu = 0.0;
                 double dd = 0.0;
                 cplx ud(0.0, 0.0);
                 for (std::size_t bi = 0; bi < nb; ++bi) {
                   const cplx up = y[static_cast<long>(bi)];
                   const cplx dn = y[static_cast<long>(nb + bi)];
                   uu += std::norm(up);
                   dd += std::norm(dn);
                   ud += up * std::conj(dn);
                 }
                 // rho_uu - rho_ud + rho_du - rho_dd reduced over the modes
                 tilted[k] += w * (cplx(uu - dd, 0.0) - ud + std::conj(ud));
                 traj.norm_drift = std::max(traj.norm_drift, std::abs(y.norm() - 1.0));
                 ++k;
               });
  }
  traj.abs_rho_eg.resize(n_points);
  for (std::size_t k = 0; k < n_points; ++k) traj.abs_rho_eg[k] = 0.5 * std::abs(tilted[k]);
  return traj;
}

}  // namespace

CoherenceTrajectory exact_pn(const DiscretizedBath& db, const bloch::PnProgram& program,
                             double t_final, std::size_t n_points, PnRoute route) {
  validate(db);
  bloch::validate(program);
  check_run(t_final, n_points);
  require(modulation::definition_horizon(program.coupling) >= t_final,
          ErrorKind::invalid_input, "coupling data does not cover the oracle horizon");
  if (program.splitting)
    require(!std::holds_alternative<modulation::SampledPhase>(program.splitting->shape),
            ErrorKind::invalid_input,
            "dephasing oracle needs a piecewise-constant splitting");

  PiecewiseEnvelope env = resolve_envelope(program.coupling, t_final);
  const bool closed_ok = splitting_is_zero(program.splitting) && fixed_axis(env);
  if (route == PnRoute::automatic)
    route = closed_ok ? PnRoute::closed_form : PnRoute::full_ladder;
  if (route == PnRoute::closed_form) {
    require(closed_ok, ErrorKind::invalid_input,
            "closed-form dephasing needs a vanishing splitting and a coupling "
            "whose phase is fixed up to sign");
    return displacement_route(db, env, t_final, n_points);
  }
  return ladder_route(db, program, t_final, n_points);
}

void write_comparison_csv(const std::string& path, const SurvivalTrajectory& exact,
                          const std::vector<double>& predicted) {
  require(exact.t.size() == exact.p_e.size() && exact.t.size() == predicted.size(),
          ErrorKind::invalid_input,
          "comparison table: trajectory and prediction lengths disagree");
  std::vector<std::vector<double>> rows;
  rows.reserve(exact.t.size());
  for (std::size_t i = 0; i < exact.t.size(); ++i) {
    double ref = std::max(std::abs(exact.p_e[i]), 1e-300);
    rows.push_back({exact.t[i], exact.p_e[i], predicted[i],
                    std::abs(exact.p_e[i] - predicted[i]) / ref});
  }
  csv::write_table_file(path, {"t", "p_e_exact", "p_e_predicted", "rel_dev"}, rows);
}

}  // namespace deco::oracle
