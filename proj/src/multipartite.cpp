#include "deco/multipartite.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <mutex>
#include <thread>

#include "deco/csv.hpp"
#include "deco/errors.hpp"
#include "deco/quadrature.hpp"

namespace deco::multipartite {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kSqrt2PiInv = 0.3989422804014326779;  // (2 pi)^{-1/2}

double sinc(double x) {
  if (std::abs(x) < 1e-4) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

// integral_0^d e^{i w u} du
cplx eint(double w, double d) {
  return d * sinc(0.5 * w * d) * std::polar(1.0, 0.5 * w * d);
}

void require_times(const std::vector<double>& times) {
  require(!times.empty(), ErrorKind::invalid_input, "the time grid is empty");
  double prev = -std::numeric_limits<double>::infinity();
  for (double t : times) {
    require(std::isfinite(t) && t >= 0.0, ErrorKind::invalid_input,
            "times must be finite and non-negative");
    require(t > prev, ErrorKind::invalid_input, "times must be strictly increasing");
    prev = t;
  }
}

// Run fn(0..n-1) across hardware threads; slots are disjoint so the result
// is identical to the sequential order.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  unsigned hw = std::thread::hardware_concurrency();
  std::size_t workers = std::min<std::size_t>(hw ? hw : 1, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_lock;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= n || failed.load()) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> hold(error_lock);
          if (!first_error) first_error = std::current_exception();
          failed.store(true);
          return;
        }
      }
    });
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

double line_width(const ModeList& m) {
  if (m.kappa > 0.0) return m.kappa;
  double spread = m.omega.back() - m.omega.front();
  if (spread > 0.0) return 1e-3 * spread;
  return 1e-3 * std::max(1.0, std::abs(m.omega.front()));
}

void check_mode_list(const ModeList& m) {
  require(!m.omega.empty(), ErrorKind::invalid_input, "the mode list has no lines");
  require(m.mu.size() == m.omega.size(), ErrorKind::invalid_input,
          "every line needs exactly one coupling vector");
  double prev = -std::numeric_limits<double>::infinity();
  for (double w : m.omega) {
    require(std::isfinite(w), ErrorKind::invalid_input, "line positions must be finite");
    require(w > prev, ErrorKind::invalid_input,
            "line positions must be strictly increasing");
    prev = w;
  }
  auto n = m.mu.front().size();
  require(n >= 1, ErrorKind::invalid_input, "coupling vectors must have at least one entry");
  for (const auto& v : m.mu) {
    require(v.size() == n, ErrorKind::invalid_input,
            "all coupling vectors must have the same length");
    require(v.allFinite(), ErrorKind::invalid_input, "couplings must be finite");
  }
  require(std::isfinite(m.kappa) && m.kappa >= 0.0, ErrorKind::invalid_input,
          "the line width must be finite and non-negative");
}

void check_pair_table(const PairTable& p) {
  require(p.omega.size() >= 2, ErrorKind::invalid_input,
          "a tabulated spectrum needs at least two grid points");
  require(p.g.size() == p.omega.size(), ErrorKind::invalid_input,
          "every grid point needs exactly one matrix sample");
  double prev = -std::numeric_limits<double>::infinity();
  for (double w : p.omega) {
    require(std::isfinite(w), ErrorKind::invalid_input, "grid points must be finite");
    require(w > prev, ErrorKind::invalid_input, "grid points must be strictly increasing");
    prev = w;
  }
  auto n = p.g.front().rows();
  require(n >= 1, ErrorKind::invalid_input, "spectrum matrices must be non-empty");
  for (const auto& g : p.g) {
    require(g.rows() == n && g.cols() == n, ErrorKind::invalid_input,
            "all spectrum samples must be square matrices of the same size");
    require(g.allFinite(), ErrorKind::invalid_input, "spectrum samples must be finite");
    double scale = g.cwiseAbs().maxCoeff() + 1.0;
    require((g - g.adjoint()).cwiseAbs().maxCoeff() <= 1e-9 * scale,
            ErrorKind::invalid_input, "spectrum samples must be Hermitian");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(g);
    require(eig.eigenvalues().minCoeff() >= -1e-9 * scale, ErrorKind::invalid_input,
            "spectrum samples must be positive semidefinite");
  }
}

// linear interpolation of one matrix entry, zero outside the grid
cplx table_entry(const PairTable& p, int j, int jp, double w) {
  if (w <= p.omega.front() || w >= p.omega.back()) return 0.0;
  auto it = std::upper_bound(p.omega.begin(), p.omega.end(), w);
  auto i = static_cast<std::size_t>(it - p.omega.begin()) - 1;
  double x = (w - p.omega[i]) / (p.omega[i + 1] - p.omega[i]);
  return (1.0 - x) * p.g[i](j, jp) + x * p.g[i + 1](j, jp);
}

modulation::ModulationWaveform scheme_waveform(const LocalScheme& s) {
  if (std::holds_alternative<Unmodulated>(s)) return modulation::Constant{1.0};
  if (const auto* p = std::get_if<PhaseTrain>(&s))
    return modulation::ImpulsivePm{p->phi, p->tau};
  const auto& sh = std::get<SpectralShift>(s);
  return modulation::Monochromatic{1.0, sh.delta};
}

// principal spectral center of a scheme, relative to the carrier
double scheme_center(const LocalScheme& s) {
  if (const auto* p = std::get_if<PhaseTrain>(&s)) {
    double phi = std::remainder(p->phi, 2.0 * kPi);
    return -phi / p->tau;
  }
  if (const auto* sh = std::get_if<SpectralShift>(&s)) return sh->delta;
  return 0.0;
}

// 7-point Gauss-Legendre on [-1, 1]
constexpr std::array<double, 7> kGlNode = {
    -0.9491079123427585, -0.7415311855993944, -0.4058451513773972, 0.0,
    0.4058451513773972,  0.7415311855993944,  0.9491079123427585};
constexpr std::array<double, 7> kGlWeight = {
    0.1294849661688697, 0.2797053914892767, 0.3818300505051189, 0.4179591836734694,
    0.3818300505051189, 0.2797053914892767, 0.1294849661688697};

// integral of G_jjp(w) f(w) dw for a tabulated spectrum: the table panels are
// subdivided until the filter phase advances by at most ~2.5 rad per panel,
// then each sub-panel takes a 7-point Gauss rule (the entry is linear there).
cplx integrate_table_pair(const PairTable& p, int j, int jp,
                          const std::function<cplx(double)>& f, double t) {
  double cap = 2.5 / std::max(2.0 * t, 1e-9);
  cplx acc = 0.0;
  for (std::size_t i = 0; i + 1 < p.omega.size(); ++i) {
    double a = p.omega[i], b = p.omega[i + 1];
    cplx ga = p.g[i](j, jp), gb = p.g[i + 1](j, jp);
    if (ga == cplx(0.0) && gb == cplx(0.0)) continue;
    auto nsub = static_cast<std::size_t>(std::ceil((b - a) / cap));
    nsub = std::max<std::size_t>(nsub, 1);
    double h = (b - a) / static_cast<double>(nsub);
    for (std::size_t s = 0; s < nsub; ++s) {
      double lo = a + h * static_cast<double>(s);
      double mid = lo + 0.5 * h;
      cplx sub = 0.0;
      for (int q = 0; q < 7; ++q) {
        double w = mid + 0.5 * h * kGlNode[q];
        cplx g = ga + (gb - ga) * ((w - a) / (b - a));
        sub += kGlWeight[q] * g * f(w);
      }
      acc += 0.5 * h * sub;
    }
  }
  return acc;
}

// integral of G_jjp(w) f(w) dw for broadened lines: each unit-mass Lorentzian
// is mapped through w = w_k + kappa tan(theta), which folds the full real
// line into a finite interval with the line mass spread evenly.
cplx integrate_mode_pair(const ModeList& m, int j, int jp,
                         const std::function<cplx(double)>& f, double t,
                         const std::vector<double>& centers) {
  double kappa = line_width(m);
  quad::Options opt;
  opt.rel_tol = 1e-7;
  opt.abs_tol = 1e-12 * (1.0 + t * t);
  cplx acc = 0.0;
  for (std::size_t k = 0; k < m.omega.size(); ++k) {
    cplx weight = m.mu[k](j) * std::conj(m.mu[k](jp));
    if (weight == cplx(0.0)) continue;
    double wk = m.omega[k];
    std::vector<double> hints;
    for (double c : centers) hints.push_back(std::atan((c - wk) / kappa));
    auto integrand = [&](double theta) { return f(wk + kappa * std::tan(theta)); };
    cplx line = quad::integrate_or_throw(integrand, -0.5 * kPi, 0.5 * kPi, opt, hints);
    acc += weight * line / kPi;
  }
  return acc;
}

cplx overlap_integral(const CouplingSpectrumMatrix& g, int j, int jp,
                      const std::function<cplx(double)>& pair_filter, double t,
                      const std::vector<double>& centers) {
  if (const auto* m = std::get_if<ModeList>(&g.rep))
    return integrate_mode_pair(*m, j, jp, pair_filter, t, centers);
  return integrate_table_pair(std::get<PairTable>(g.rep), j, jp, pair_filter, t);
}

// finite-time spectrum of e^{-i phi(s)} for a piecewise-constant splitting,
// segment by segment: phi(s) = phi(a) + 2 v (s - a) on [a, b).
struct DephasingFilter {
  std::vector<double> edge;   // segment starts, edge.front() = 0
  std::vector<double> value;  // splitting on each segment
  std::vector<double> phase;  // 2 integral of the splitting up to each start
  double t = 0.0;

  cplx operator()(double w) const {
    cplx acc = 0.0;
    for (std::size_t s = 0; s < edge.size(); ++s) {
      double a = edge[s];
      double b = (s + 1 < edge.size()) ? edge[s + 1] : t;
      acc += std::polar(1.0, w * a - phase[s]) * eint(w - 2.0 * value[s], b - a);
    }
    return kSqrt2PiInv * acc;
  }
};

DephasingFilter make_dephasing_filter(const modulation::FramePhase& f, double t) {
  DephasingFilter out;
  out.t = t;
  std::vector<double> edges{0.0};
  for (double b : modulation::frame_breakpoints(f, t))
    if (b > 0.0 && b < t) edges.push_back(b);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  for (double a : edges) {
    double b = t;
    for (double e : edges)
      if (e > a) { b = std::min(b, e); break; }
    out.edge.push_back(a);
    out.value.push_back(modulation::frame_value(f, 0.5 * (a + b)));
    out.phase.push_back(2.0 * modulation::phase_integral(f, a));
  }
  return out;
}

void check_field(const modulation::FramePhase& f) {
  modulation::validate(f);
  require(f.kind == modulation::FrameKind::resonant_splitting, ErrorKind::invalid_input,
          "dephasing fields must be resonant splittings");
  require(!std::holds_alternative<modulation::SampledPhase>(f.shape),
          ErrorKind::invalid_input,
          "sampled splittings are not supported here; use piecewise-constant fields");
}

struct BellTerms {
  double d1 = 0.0, d2 = 0.0;  // diagonal overlaps, Bell independent
  cplx c12s{0.0, 0.0};        // integral G_12 conj(f_1) conj(f_2)
  cplx c21s{0.0, 0.0};        // integral G_21 conj(f_2) conj(f_1)
  cplx c12d{0.0, 0.0};        // integral G_12 f_1 conj(f_2); c21d is its conjugate
};

BellTerms bell_terms_at(const CouplingSpectrumMatrix& gp, const DephasingFieldSet& fields,
                        double t) {
  DephasingFilter f1 = make_dephasing_filter(fields.v0[0], t);
  DephasingFilter f2 = make_dephasing_filter(fields.v0[1], t);
  std::vector<double> centers;
  for (const auto& f : {f1, f2})
    for (double v : f.value) centers.push_back(2.0 * v);
  BellTerms out;
  out.d1 = (2.0 * kPi *
            overlap_integral(gp, 0, 0, [&](double w) { return cplx(std::norm(f1(w)), 0.0); },
                             t, centers))
               .real();
  out.d2 = (2.0 * kPi *
            overlap_integral(gp, 1, 1, [&](double w) { return cplx(std::norm(f2(w)), 0.0); },
                             t, centers))
               .real();
  out.c12s = 2.0 * kPi *
             overlap_integral(gp, 0, 1,
                              [&](double w) { return std::conj(f1(w)) * std::conj(f2(w)); },
                              t, centers);
  out.c21s = 2.0 * kPi *
             overlap_integral(gp, 1, 0,
                              [&](double w) { return std::conj(f2(w)) * std::conj(f1(w)); },
                              t, centers);
  out.c12d = 2.0 * kPi *
             overlap_integral(gp, 0, 1,
                              [&](double w) { return f1(w) * std::conj(f2(w)); }, t, centers);
  return out;
}

void check_bell_inputs(const CouplingSpectrumMatrix& gp, const DephasingFieldSet& fields,
                       int bell_index) {
  validate(gp);
  validate(fields);
  require(bell_index >= 1 && bell_index <= 4, ErrorKind::invalid_input,
          "the Bell index must be 1, 2, 3 or 4");
  require(dimension(gp) == static_cast<int>(fields.v0.size()), ErrorKind::invalid_input,
          "one dephasing field per qubit is required");
}

}  // namespace

int dimension(const CouplingSpectrumMatrix& g) {
  if (const auto* m = std::get_if<ModeList>(&g.rep)) {
    require(!m->mu.empty(), ErrorKind::invalid_input, "the mode list has no lines");
    return static_cast<int>(m->mu.front().size());
  }
  const auto& p = std::get<PairTable>(g.rep);
  require(!p.g.empty(), ErrorKind::invalid_input, "the spectrum table is empty");
  return static_cast<int>(p.g.front().rows());
}

void validate(const CouplingSpectrumMatrix& g) {
  if (const auto* m = std::get_if<ModeList>(&g.rep)) {
    check_mode_list(*m);
    return;
  }
  check_pair_table(std::get<PairTable>(g.rep));
}

Eigen::MatrixXcd spectrum_at(const CouplingSpectrumMatrix& g, double omega) {
  require(std::isfinite(omega), ErrorKind::invalid_input, "omega must be finite");
  int n = dimension(g);
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(n, n);
  if (const auto* m = std::get_if<ModeList>(&g.rep)) {
    double kappa = line_width(*m);
    for (std::size_t k = 0; k < m->omega.size(); ++k) {
      double x = omega - m->omega[k];
      double lor = kappa / (kPi * (x * x + kappa * kappa));
      out += lor * (m->mu[k] * m->mu[k].adjoint());
    }
    return out;
  }
  const auto& p = std::get<PairTable>(g.rep);
  for (int j = 0; j < n; ++j)
    for (int jp = 0; jp < n; ++jp) out(j, jp) = table_entry(p, j, jp, omega);
  return out;
}

std::array<double, 2> support(const CouplingSpectrumMatrix& g) {
  if (const auto* m = std::get_if<ModeList>(&g.rep)) {
    double pad = 500.0 * line_width(*m);
    return {m->omega.front() - pad, m->omega.back() + pad};
  }
  const auto& p = std::get<PairTable>(g.rep);
  return {p.omega.front(), p.omega.back()};
}

CouplingSpectrumMatrix load_mode_list_csv(const std::string& path) {
  csv::Table tab = csv::read_table_file(path);
  require(tab.columns.size() >= 3 && tab.columns.size() % 2 == 1,
          ErrorKind::invalid_input,
          "a mode list needs columns omega, re_mu_1, im_mu_1, ...");
  require(tab.columns.front() == "omega", ErrorKind::invalid_input,
          "the first mode-list column must be omega");
  auto n = (tab.columns.size() - 1) / 2;
  for (std::size_t j = 0; j < n; ++j) {
    std::string idx = std::to_string(j + 1);
    require(tab.columns[1 + 2 * j] == "re_mu_" + idx &&
                tab.columns[2 + 2 * j] == "im_mu_" + idx,
            ErrorKind::invalid_input,
            "mode-list coupling columns must be re_mu_k, im_mu_k in order");
  }
  std::vector<std::vector<double>> rows = tab.rows;
  std::sort(rows.begin(), rows.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  ModeList m;
  for (const auto& row : rows) {
    m.omega.push_back(row.front());
    Eigen::VectorXcd mu(n);
    for (std::size_t j = 0; j < n; ++j)
      mu(static_cast<long>(j)) = cplx(row[1 + 2 * j], row[2 + 2 * j]);
    m.mu.push_back(mu);
  }
  CouplingSpectrumMatrix out{std::move(m)};
  validate(out);
  return out;
}

CouplingSpectrumMatrix exponential_dephasing_spectra(const Eigen::MatrixXd& weights,
                                                     double t_c, double range,
                                                     std::size_t n_points) {
  require(weights.rows() >= 1 && weights.rows() == weights.cols(),
          ErrorKind::invalid_input, "the weight matrix must be square");
  require(weights.allFinite(), ErrorKind::invalid_input, "weights must be finite");
  double scale = weights.cwiseAbs().maxCoeff() + 1.0;
  require((weights - weights.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale,
          ErrorKind::invalid_input, "the weight matrix must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(weights);
  require(eig.eigenvalues().minCoeff() >= -1e-12 * scale, ErrorKind::invalid_input,
          "the weight matrix must be positive semidefinite");
  require(std::isfinite(t_c) && t_c > 0.0, ErrorKind::invalid_input,
          "the memory time must be positive");
  require(std::isfinite(range) && range >= 0.0, ErrorKind::invalid_input,
          "the tabulation range must be non-negative");
  require(n_points >= 9, ErrorKind::invalid_input,
          "the tabulation needs at least nine points");
  if (range == 0.0) range = 30.0 / t_c;
  PairTable p;
  for (std::size_t i = 0; i < n_points; ++i) {
    double w = -range + 2.0 * range * static_cast<double>(i) /
                            static_cast<double>(n_points - 1);
    double lor = t_c / (kPi * (1.0 + w * w * t_c * t_c));
    p.omega.push_back(w);
    p.g.push_back((weights * lor).cast<cplx>());
  }
  CouplingSpectrumMatrix out{std::move(p)};
  validate(out);
  return out;
}

void validate(const LocalModulationSet& mods) {
  require(!mods.qubits.empty(), ErrorKind::invalid_input,
          "the modulation set has no qubits");
  for (const auto& q : mods.qubits) {
    require(std::isfinite(q.carrier), ErrorKind::invalid_input,
            "carriers must be finite");
    modulation::validate(scheme_waveform(q.scheme));
  }
}

cplx local_ipm_spectrum(double phi, double tau, double t, double omega) {
  modulation::ImpulsivePm train{phi, tau};
  modulation::validate(modulation::ModulationWaveform{train});
  return modulation::finite_time_spectrum(train, t, omega);
}

cplx finite_time_spectrum(const LocalModulation& m, double t, double omega) {
  return modulation::finite_time_spectrum(scheme_waveform(m.scheme), t, omega);
}

DecoherenceMatrix decoherence_matrix(const CouplingSpectrumMatrix& g,
                                     const LocalModulationSet& mods,
                                     const std::vector<double>& times) {
  validate(g);
  validate(mods);
  require_times(times);
  int n = dimension(g);
  require(n == static_cast<int>(mods.qubits.size()), ErrorKind::invalid_input,
          "one modulation per qubit is required");
  std::vector<double> centers;
  for (const auto& q : mods.qubits)
    centers.push_back(q.carrier + scheme_center(q.scheme));
  std::vector<modulation::ModulationWaveform> waves;
  for (const auto& q : mods.qubits) waves.push_back(scheme_waveform(q.scheme));

  DecoherenceMatrix out;
  out.t = times;
  out.j.assign(times.size(), Eigen::MatrixXcd::Zero(n, n));
  parallel_for(times.size(), [&](std::size_t i) {
    double t = times[i];
    Eigen::MatrixXcd jm = Eigen::MatrixXcd::Zero(n, n);
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b) {
        auto filter = [&](double w) {
          cplx fa = modulation::finite_time_spectrum(waves[a], t,
                                                     w - mods.qubits[a].carrier);
          cplx fb = (b == a) ? fa
                             : modulation::finite_time_spectrum(
                                   waves[b], t, w - mods.qubits[b].carrier);
          return std::conj(fa) * fb;
        };
        cplx val = 2.0 * kPi * overlap_integral(g, a, b, filter, t, centers);
        jm(a, b) = val;
        if (b != a) jm(b, a) = std::conj(val);
        if (b == a) jm(a, a) = cplx(val.real(), 0.0);
      }
    out.j[i] = jm;
  });
  return out;
}

FidelityReport bell_an_fidelity(const std::vector<double>& t,
                                const std::vector<double>& j_a,
                                const std::vector<double>& j_b) {
  require_times(t);
  require(j_a.size() == t.size() && j_b.size() == t.size(), ErrorKind::invalid_input,
          "the exponent series must match the time grid");
  FidelityReport rep;
  rep.t = t;
  for (std::size_t i = 0; i < t.size(); ++i) {
    require(std::isfinite(j_a[i]) && std::isfinite(j_b[i]), ErrorKind::invalid_input,
            "exponents must be finite");
    double fp = 0.5 * (std::exp(-2.0 * j_a[i]) + std::exp(-2.0 * j_b[i]));
    double fc = 0.5 + 0.5 / std::cosh(j_a[i] - j_b[i]);
    rep.f_p.push_back(fp);
    rep.f_c.push_back(fc);
    rep.c.push_back(2.0 * fc - 1.0);
    rep.f.push_back(fp * fc);
  }
  return rep;
}

FidelityReport an_fidelity_evolution(const CouplingSpectrumMatrix& g,
                                     const LocalModulationSet& mods,
                                     const Eigen::VectorXcd& initial,
                                     const std::vector<double>& times) {
  validate(g);
  validate(mods);
  require_times(times);
  int n = dimension(g);
  require(initial.size() == n, ErrorKind::invalid_input,
          "one initial amplitude per qubit is required");
  require(initial.allFinite(), ErrorKind::invalid_input,
          "initial amplitudes must be finite");
  require(std::abs(initial.norm() - 1.0) <= 1e-8, ErrorKind::invalid_input,
          "the initial amplitudes must form a normalised single-excitation state");

  double horizon = times.back();
  std::vector<double> grid = times;
  for (int s = 0; s <= 200; ++s)
    grid.push_back(horizon * static_cast<double>(s) / 200.0);
  std::sort(grid.begin(), grid.end());
  double merge = 1e-12 * std::max(1.0, horizon);
  grid.erase(std::unique(grid.begin(), grid.end(),
                         [&](double a, double b) { return b - a <= merge; }),
             grid.end());
  if (grid.front() > merge) grid.insert(grid.begin(), 0.0);

  DecoherenceMatrix jm = decoherence_matrix(g, mods, grid);

  FidelityReport rep;
  rep.t = times;
  Eigen::VectorXcd a = initial;
  std::size_t next_report = 0;
  auto record = [&](double t) {
    while (next_report < times.size() &&
           std::abs(times[next_report] - t) <= merge) {
      double fp = a.squaredNorm();
      double f = std::norm(initial.dot(a));
      double fc = fp > 0.0 ? f / fp : 0.0;
      rep.f.push_back(f);
      rep.f_p.push_back(fp);
      rep.f_c.push_back(fc);
      rep.c.push_back(2.0 * fc - 1.0);
      ++next_report;
    }
  };
  record(grid.front());
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    Eigen::MatrixXcd dj = jm.j[i + 1] - jm.j[i];
    dj = 0.5 * (dj + dj.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(dj);
    require(eig.info() == Eigen::Success, ErrorKind::numerical_failure,
            "the decoherence step could not be diagonalised");
    Eigen::VectorXd decay = (-eig.eigenvalues()).array().exp();
    a = eig.eigenvectors() * decay.asDiagonal() *
        (eig.eigenvectors().adjoint() * a);
    record(grid[i + 1]);
  }
  require(next_report == times.size(), ErrorKind::numerical_failure,
          "the evolution grid lost report times");
  return rep;
}

void write_fidelity_csv(const std::string& path, const FidelityReport& rep) {
  std::size_t n = rep.t.size();
  require(rep.f.size() == n && rep.f_p.size() == n && rep.f_c.size() == n &&
              rep.c.size() == n,
          ErrorKind::invalid_input, "fidelity columns must share one length");
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < n; ++i)
    rows.push_back({rep.t[i], rep.f[i], rep.f_p[i], rep.f_c[i], rep.c[i]});
  csv::write_table_file(path, {"t", "f", "f_p", "f_c", "c"}, rows);
}

LocalModulationSet design_modulations(const CouplingSpectrumMatrix& g,
                                      SymmetryTarget target, const DesignRequest& req) {
  validate(g);
  require(std::isfinite(req.omega_0), ErrorKind::invalid_input,
          "the carrier must be finite");
  require(std::isfinite(req.separation) && req.separation >= 0.0,
          ErrorKind::invalid_input, "the separation must be finite and non-negative");
  require(std::isfinite(req.window) && req.window >= 0.0, ErrorKind::invalid_input,
          "the search window must be finite and non-negative");
  int n = dimension(g);
  auto sup = support(g);
  double spread = sup[1] - sup[0];
  double half = req.window > 0.0 ? req.window : 10.0 * std::max(spread, 1e-6);
  double lo = std::max(req.omega_0 - half, sup[0]) - req.omega_0;
  double hi = std::min(req.omega_0 + half, sup[1]) - req.omega_0;
  require(hi > lo, ErrorKind::no_solution,
          "the search window does not meet the spectrum's support");

  const std::size_t n_scan = 4001;
  std::vector<double> delta(n_scan);
  std::vector<std::vector<double>> diag(static_cast<std::size_t>(n),
                                        std::vector<double>(n_scan));
  for (std::size_t i = 0; i < n_scan; ++i) {
    delta[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n_scan - 1);
    Eigen::MatrixXcd gm = spectrum_at(g, req.omega_0 + delta[i]);
    for (int j = 0; j < n; ++j) diag[static_cast<std::size_t>(j)][i] = gm(j, j).real();
  }

  auto diag_at = [&](int j, double d) {
    return spectrum_at(g, req.omega_0 + d)(j, j).real();
  };
  // parabolic polish of a scanned local minimum
  auto refine_min = [&](int j, std::size_t i) {
    if (i == 0 || i + 1 == n_scan) return delta[i];
    double x0 = delta[i - 1], x1 = delta[i], x2 = delta[i + 1];
    double y0 = diag_at(j, x0), y1 = diag_at(j, x1), y2 = diag_at(j, x2);
    double den = (y0 - 2.0 * y1 + y2);
    if (den <= 0.0) return x1;
    double x = x1 + 0.5 * (y0 - y2) / den * (x2 - x1);
    return std::clamp(x, x0, x2);
  };

  if (target == SymmetryTarget::identically_coupled) {
    // a shared shift can impose equal couplings only if the pairs are
    // indistinguishable to begin with: no decoupled pair, matching entries
    const std::size_t n_probe = 801;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        if (a == b) continue;
        double peak = 0.0;
        for (std::size_t i = 0; i < n_probe; ++i) {
          double w = sup[0] + spread * static_cast<double>(i) /
                                  static_cast<double>(n_probe - 1);
          peak = std::max(peak, std::abs(spectrum_at(g, w)(a, b)));
        }
        if (peak <= 0.0)
          fail(ErrorKind::no_solution,
               "qubits " + std::to_string(a + 1) + " and " + std::to_string(b + 1) +
                   " share no bath coupling; identical coupling cannot be arranged");
      }
    double mismatch = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < n_probe; ++i) {
      double w = sup[0] + spread * static_cast<double>(i) /
                              static_cast<double>(n_probe - 1);
      Eigen::MatrixXcd gm = spectrum_at(g, w);
      scale = std::max(scale, gm.cwiseAbs().maxCoeff());
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          cplx ref = (a == b) ? gm(0, 0) : gm(0, 1);
          mismatch = std::max(mismatch, std::abs(gm(a, b) - ref));
        }
    }
    require(mismatch <= 1e-9 * (scale + 1.0), ErrorKind::no_solution,
            "the coupling matrix is not permutation symmetric; a shared shift "
            "cannot equalize the pairs");
    std::size_t best = 0;
    for (std::size_t i = 1; i < n_scan; ++i)
      if (diag[0][i] < diag[0][best]) best = i;
    double d = refine_min(0, best);
    LocalModulationSet out;
    out.phase_locked = true;
    for (int j = 0; j < n; ++j)
      out.qubits.push_back({req.omega_0, SpectralShift{d}});
    return out;
  }

  // per-qubit achievable ranges over the window
  std::vector<double> vmin(static_cast<std::size_t>(n)), vmax(static_cast<std::size_t>(n));
  std::vector<std::size_t> imin(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    auto ju = static_cast<std::size_t>(j);
    auto it = std::min_element(diag[ju].begin(), diag[ju].end());
    vmin[ju] = *it;
    imin[ju] = static_cast<std::size_t>(it - diag[ju].begin());
    vmax[ju] = *std::max_element(diag[ju].begin(), diag[ju].end());
  }
  int owner = 0;
  for (int j = 1; j < n; ++j)
    if (vmin[static_cast<std::size_t>(j)] > vmin[static_cast<std::size_t>(owner)]) owner = j;
  double rate = vmin[static_cast<std::size_t>(owner)];
  for (int j = 0; j < n; ++j)
    if (vmax[static_cast<std::size_t>(j)] < rate)
      fail(ErrorKind::no_solution,
           "the achievable rate ranges of qubits " + std::to_string(owner + 1) + " and " +
               std::to_string(j + 1) + " are disjoint; no common rate exists");

  // candidate shifts per qubit: crossings of the diagonal through the common
  // rate, plus touching minima, smallest |delta| first
  std::vector<std::vector<double>> cand(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    auto ju = static_cast<std::size_t>(j);
    std::vector<double> roots;
    for (std::size_t i = 0; i + 1 < n_scan; ++i) {
      double h0 = diag[ju][i] - rate, h1 = diag[ju][i + 1] - rate;
      if (h0 == 0.0) roots.push_back(delta[i]);
      if (h0 * h1 < 0.0) {
        double a = delta[i], b = delta[i + 1];
        for (int it = 0; it < 60; ++it) {
          double m = 0.5 * (a + b);
          double hm = diag_at(j, m) - rate;
          if (hm == 0.0) { a = b = m; break; }
          if ((diag_at(j, a) - rate) * hm < 0.0) b = m;
          else a = m;
        }
        roots.push_back(0.5 * (a + b));
      }
    }
    if (diag[ju][n_scan - 1] == rate) roots.push_back(delta[n_scan - 1]);
    // a touching minimum never crosses; admit it when it reaches the rate
    double span = vmax[ju] - vmin[ju];
    if (vmin[ju] - rate <= 1e-9 * (span + std::abs(rate)) + 1e-300)
      roots.push_back(refine_min(j, imin[ju]));
    std::sort(roots.begin(), roots.end(),
              [](double a, double b) { return std::abs(a) < std::abs(b); });
    roots.erase(std::unique(roots.begin(), roots.end(),
                            [&](double a, double b) {
                              return std::abs(a - b) <= 1e-9 * (hi - lo);
                            }),
                roots.end());
    if (roots.empty())
      fail(ErrorKind::no_solution, "qubit " + std::to_string(j + 1) +
                                       " cannot reach the common rate inside the window");
    cand[ju] = roots;
  }

  // smallest-|delta| assignment honouring the pairwise separation
  std::vector<double> pick(static_cast<std::size_t>(n),
                           std::numeric_limits<double>::quiet_NaN());
  std::array<int, 2> blocked{-1, -1};
  std::function<bool(int)> assign = [&](int j) {
    if (j == n) return true;
    auto ju = static_cast<std::size_t>(j);
    for (double d : cand[ju]) {
      bool ok = true;
      for (int k = 0; k < j; ++k)
        if (std::abs(d - pick[static_cast<std::size_t>(k)]) < req.separation) {
          ok = false;
          blocked = {k + 1, j + 1};
          break;
        }
      if (!ok) continue;
      pick[ju] = d;
      if (assign(j + 1)) return true;
    }
    return false;
  };
  if (!assign(0)) {
    std::string pair = blocked[0] > 0 ? " between qubits " + std::to_string(blocked[0]) +
                                            " and " + std::to_string(blocked[1])
                                      : "";
    fail(ErrorKind::no_solution,
         "the equal-rate shifts cannot keep the declared separation" + pair);
  }

  LocalModulationSet out;
  out.phase_locked = true;
  for (int j = 0; j < n; ++j)
    out.qubits.push_back({req.omega_0, SpectralShift{pick[static_cast<std::size_t>(j)]}});
  return out;
}

void validate(const DephasingFieldSet& fields) {
  require(!fields.v0.empty(), ErrorKind::invalid_input, "the field set has no qubits");
  for (const auto& f : fields.v0) check_field(f);
}

DecoherenceMatrix cross_dephasing_matrix(const CouplingSpectrumMatrix& gp,
                                         const DephasingFieldSet& fields, int bell_index,
                                         const std::vector<double>& times) {
  check_bell_inputs(gp, fields, bell_index);
  require_times(times);
  int n = dimension(gp);
  double sign = (bell_index == 1 || bell_index == 2) ? -1.0 : 1.0;
  bool conjugate_pair = (bell_index == 1 || bell_index == 3);

  DecoherenceMatrix out;
  out.t = times;
  out.j.assign(times.size(), Eigen::MatrixXcd::Zero(n, n));
  parallel_for(times.size(), [&](std::size_t i) {
    double t = times[i];
    std::vector<DephasingFilter> filt;
    std::vector<double> centers;
    for (const auto& f : fields.v0) {
      filt.push_back(make_dephasing_filter(f, t));
      for (double v : filt.back().value) centers.push_back(2.0 * v);
    }
    Eigen::MatrixXcd jm(n, n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        std::function<cplx(double)> prod;
        if (a == b)
          prod = [&](double w) { return cplx(std::norm(filt[static_cast<std::size_t>(a)](w)), 0.0); };
        else if (conjugate_pair)
          prod = [&](double w) {
            return sign * std::conj(filt[static_cast<std::size_t>(a)](w)) *
                   std::conj(filt[static_cast<std::size_t>(b)](w));
          };
        else
          prod = [&](double w) {
            return sign * filt[static_cast<std::size_t>(a)](w) *
                   std::conj(filt[static_cast<std::size_t>(b)](w));
          };
        jm(a, b) = 2.0 * kPi * overlap_integral(gp, a, b, prod, t, centers);
      }
    out.j[i] = jm;
  });
  return out;
}

std::vector<double> pn_bell_fidelity(const CouplingSpectrumMatrix& gp,
                                     const DephasingFieldSet& fields, int bell_index,
                                     const std::vector<double>& times) {
  check_bell_inputs(gp, fields, bell_index);
  require_times(times);
  require(dimension(gp) == 2, ErrorKind::invalid_input,
          "Bell fidelities are defined for exactly two qubits");

  std::vector<double> out(times.size());
  parallel_for(times.size(), [&](std::size_t i) {
    double t = times[i];
    BellTerms bt = bell_terms_at(gp, fields, t);
    cplx cross;
    if (bell_index == 1) cross = -(bt.c12s + bt.c21s);
    else if (bell_index == 3) cross = bt.c12s + bt.c21s;
    else if (bell_index == 2) cross = -2.0 * std::real(bt.c12d);
    else cross = 2.0 * std::real(bt.c12d);
    cplx total = bt.d1 + bt.d2 + cross;
    double phi1 = 2.0 * modulation::phase_integral(fields.v0[0], t);
    double phi2 = 2.0 * modulation::phase_integral(fields.v0[1], t);
    double phi = (bell_index == 1 || bell_index == 3) ? 0.5 * (phi1 + phi2)
                                                      : 0.5 * (phi1 - phi2);
    out[i] = std::cos(phi) *
             (std::polar(1.0, phi) * (cplx(1.0, 0.0) - 0.5 * total)).real();
  });
  return out;
}

BellDephasingReport pn_bell_report(const CouplingSpectrumMatrix& gp,
                                   const DephasingFieldSet& fields,
                                   const std::vector<double>& times) {
  BellDephasingReport rep;
  rep.t = times;
  for (int l = 1; l <= 4; ++l)
    rep.f_l[static_cast<std::size_t>(l - 1)] = pn_bell_fidelity(gp, fields, l, times);
  return rep;
}

void write_bell_csv(const std::string& path, const BellDephasingReport& rep) {
  std::size_t n = rep.t.size();
  for (const auto& col : rep.f_l)
    require(col.size() == n, ErrorKind::invalid_input,
            "Bell fidelity columns must share one length");
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < n; ++i)
    rows.push_back({rep.t[i], rep.f_l[0][i], rep.f_l[1][i], rep.f_l[2][i], rep.f_l[3][i]});
  csv::write_table_file(path, {"t", "f_1", "f_2", "f_3", "f_4"}, rows);
}

}  // namespace deco::multipartite
