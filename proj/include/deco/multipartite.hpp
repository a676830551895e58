#pragma once

// Entanglement decay of N locally modulated qubits sharing a structured bath.
//
// The central object is the decoherence matrix
//
//   J_jj'(t) = 2 pi integral dw G_jj'(w) conj(eps_tj(w - w_j)) eps_tj'(w - w_j')
//
// where G_jj'(w) is the cross-coupling spectrum of the bath and eps_tj the
// finite-time spectrum of qubit j's local modulation around its carrier w_j.
// Diagonals reproduce the single-qubit overlap exponent; off-diagonals carry
// the bath-mediated cross talk that local spectral shifts can interfere away.
//
// Amplitude damping propagates single-excitation amplitudes through
// a(t) = T exp[-J] a(0); pair fidelities factor into an excitation-survival
// part and a correlation part. The dephasing channel reuses the same overlap
// machinery with Bell-state-dependent filter products and the accumulated
// local phases phi_j(t) = 2 integral_0^t V_0j.

#include <array>
#include <complex>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "deco/modulation.hpp"

namespace deco::multipartite {

using cplx = std::complex<double>;

// ---------------------------------------------------------------------------
// cross-coupling spectra

// Discrete bath lines: G_jj'(w) = sum_k mu_k[j] conj(mu_k[j']) L_kappa(w - w_k)
// with a unit-mass Lorentzian L; kappa = 0 requests the default width of
// 1e-3 times the line spread (products of bare delta lines are ill-defined).
struct ModeList {
  std::vector<double> omega;           // line positions, strictly increasing
  std::vector<Eigen::VectorXcd> mu;    // per-line coupling vector, one entry per qubit
  double kappa = 0.0;
};

// Tabulated spectra on a shared grid, linearly interpolated, zero outside.
// Every sample must be Hermitian and positive semidefinite.
struct PairTable {
  std::vector<double> omega;
  std::vector<Eigen::MatrixXcd> g;
};

struct CouplingSpectrumMatrix {
  std::variant<ModeList, PairTable> rep;
};

int dimension(const CouplingSpectrumMatrix& g);
void validate(const CouplingSpectrumMatrix& g);

// Evaluate G(w) as a dense matrix (broadened lines or interpolated table).
Eigen::MatrixXcd spectrum_at(const CouplingSpectrumMatrix& g, double omega);

// Frequency range outside which the spectrum is negligible: the table grid,
// or the line spread padded by a few hundred widths.
std::array<double, 2> support(const CouplingSpectrumMatrix& g);

// Mode-list CSV with columns omega, re_mu_1, im_mu_1, re_mu_2, im_mu_2, ...
CouplingSpectrumMatrix load_mode_list_csv(const std::string& path);

// Dephasing spectra with exponential memory: Phi_jj'(t) = w_jj' e^{-|t|/t_c},
// G_jj'(w) = w_jj' t_c / (pi (1 + w^2 t_c^2)), tabulated over +-range (0 = auto).
CouplingSpectrumMatrix exponential_dephasing_spectra(const Eigen::MatrixXd& weights,
                                                     double t_c, double range = 0.0,
                                                     std::size_t n_points = 4001);

// ---------------------------------------------------------------------------
// local modulations (amplitude-noise channel)

// Pulsed phase kicks: eps(t) = e^{i phi floor(t / tau)}.
struct PhaseTrain {
  double phi = 0.0;
  double tau = 1.0;
};

// Constant spectral shift: eps(t) = e^{-i delta t} concentrates the filter
// at w = delta relative to the carrier.
struct SpectralShift {
  double delta = 0.0;
};

struct Unmodulated {};

using LocalScheme = std::variant<Unmodulated, PhaseTrain, SpectralShift>;

struct LocalModulation {
  double carrier = 0.0;    // the qubit's transition frequency w_j
  LocalScheme scheme = Unmodulated{};
};

// One scheme per qubit. phase_locked records that the accumulated shift
// phases are closed to multiples of 2 pi at the probe times; fidelities are
// reported in the locally rotating frames where that closure is exact.
struct LocalModulationSet {
  std::vector<LocalModulation> qubits;
  bool phase_locked = false;
};

void validate(const LocalModulationSet& mods);

// Finite-time spectrum (2 pi)^{-1/2} integral_0^t eps(s) e^{i w s} ds of a
// pulsed phase train, including the trailing partial segment. At multiples
// of tau it reduces to the Dirichlet closed form whose mass concentrates at
// w = -phi / tau.
cplx local_ipm_spectrum(double phi, double tau, double t, double omega);

// Same transform for any scheme (w measured relative to the carrier).
cplx finite_time_spectrum(const LocalModulation& m, double t, double omega);

// ---------------------------------------------------------------------------
// decoherence matrices

struct DecoherenceMatrix {
  std::vector<double> t;
  std::vector<Eigen::MatrixXcd> j;
};

// Overlap integrals J_jj'(t) on the given time grid. Hermitian and positive
// semidefinite up to quadrature error whenever the spectrum matrix is.
DecoherenceMatrix decoherence_matrix(const CouplingSpectrumMatrix& g,
                                     const LocalModulationSet& mods,
                                     const std::vector<double>& times);

// ---------------------------------------------------------------------------
// fidelities (amplitude-noise channel)

// Pair fidelity split: f = f_p * f_c, f_c = (1 + c) / 2 with concurrence c.
struct FidelityReport {
  std::vector<double> t;
  std::vector<double> f;
  std::vector<double> f_p;
  std::vector<double> f_c;
  std::vector<double> c;
};

// Bell-pair fidelity from two independently decaying branches:
// f_p = (e^{-2 J_a} + e^{-2 J_b}) / 2 and f_c = 1/2 + 1 / (2 cosh(J_a - J_b)).
FidelityReport bell_an_fidelity(const std::vector<double>& t,
                                const std::vector<double>& j_a,
                                const std::vector<double>& j_b);

// Propagate single-excitation amplitudes through the decoherence matrix:
// a(t_{s+1}) = exp[-(J(t_{s+1}) - J(t_s))] a(t_s) over the report grid merged
// with 200 uniform substeps. Reports f = |a(0)^dag a(t)|^2, f_p = |a(t)|^2.
FidelityReport an_fidelity_evolution(const CouplingSpectrumMatrix& g,
                                     const LocalModulationSet& mods,
                                     const Eigen::VectorXcd& initial,
                                     const std::vector<double>& times);

void write_fidelity_csv(const std::string& path, const FidelityReport& rep);

// ---------------------------------------------------------------------------
// modulation design

// independent_identical: park every qubit at a distinct spectral shift where
// the diagonal spectra take a common value (the smallest common value all
// qubits can reach), with pairwise shift separation at least `separation` so
// the cross overlaps interfere away. identically_coupled: demand one shared
// shift reproducing equal couplings for all pairs; rejected unless the
// spectrum matrix itself is permutation symmetric with no decoupled pair.
enum class SymmetryTarget { independent_identical, identically_coupled };

struct DesignRequest {
  double omega_0 = 0.0;      // common carrier the shifts are measured from
  double separation = 0.0;   // declared spectral width each pair must keep
  double window = 0.0;       // search half-width for shifts; 0 = 10x bath spread
};

// Returns one SpectralShift per qubit (phase locked). Throws
// Error(no_solution) naming the obstruction when the achievable ranges are
// disjoint, the separation cannot be honoured, or the symmetric target is
// structurally impossible (e.g. a pair of qubits shares no bath line).
LocalModulationSet design_modulations(const CouplingSpectrumMatrix& g,
                                      SymmetryTarget target,
                                      const DesignRequest& req);

// ---------------------------------------------------------------------------
// dephasing channel (phase-noise Bell fidelities)

// Per-qubit resonant field V_0j(t); the dephasing coupling rotates by
// phi_j(t) = 2 integral_0^t V_0j, so the filter of qubit j concentrates at
// w = 2 V_0j. Piecewise-constant fields only.
struct DephasingFieldSet {
  std::vector<modulation::FramePhase> v0;
};

void validate(const DephasingFieldSet& fields);

// Bell-resolved cross-dephasing matrix J^P_jj'(t) for bell_index l in 1..4:
// diagonals integrate |eps_tj|^2; off-diagonals integrate the l-dependent
// products (-,+)conj(eps_t1)conj(eps_t2) for l = 1,3 and (-,+)eps_t1
// conj(eps_t2) for l = 2,4. Hermitian only for l = 2,4.
DecoherenceMatrix cross_dephasing_matrix(const CouplingSpectrumMatrix& gp,
                                         const DephasingFieldSet& fields,
                                         int bell_index,
                                         const std::vector<double>& times);

// Fidelity of the l-th Bell state under collective dephasing (two qubits):
// F_l = cos(phi) Re[e^{i phi} (1 - sum_jj' J^P_jj'l / 2)] with phi the half
// sum (l = 1,3) or half difference (l = 2,4) of the accumulated phases.
// Reported as computed; values may leave [0,1] beyond the weak-decay regime.
std::vector<double> pn_bell_fidelity(const CouplingSpectrumMatrix& gp,
                                     const DephasingFieldSet& fields,
                                     int bell_index,
                                     const std::vector<double>& times);

// All four Bell fidelities, written as columns t, f_1, f_2, f_3, f_4.
struct BellDephasingReport {
  std::vector<double> t;
  std::array<std::vector<double>, 4> f_l;
};

BellDephasingReport pn_bell_report(const CouplingSpectrumMatrix& gp,
                                   const DephasingFieldSet& fields,
                                   const std::vector<double>& times);

void write_bell_csv(const std::string& path, const BellDephasingReport& rep);

} // namespace deco::multipartite
