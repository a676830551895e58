#pragma once

// Generalized Bloch equations for a driven two-level system in a thermal
// bath, to second order in the system-bath coupling, plus the underlying
// master-equation integrator they are derived from.
//
// Amplitude noise (an): lab basis {|e>,|g>}, H_S = (omega_a + d(t))|e><e|,
// coupling eps(t) sigma_x. Populations relax with the modified rates R_e/R_g;
// the coherence carries the averaged rate, the frequency pull Delta_a, and a
// non-secular coupling to rho_ge.
//
// Phase noise (pn): tilted rotating basis |up/down> =
// (e^{-i omega_a t}|e> +- |g>)/sqrt(2), H_S = (V0(t)/2) sigma_z, coupling
// eps(t) sigma_x in that frame. The same equations apply with omega_a -> 0
// and the resonant envelope V0 in the role of the shift.
//
// evolve_general_me integrates the master equation for arbitrary H_S(t),
// S(t) by direct product-quadrature of the memory term; it is the reference
// the specialized solvers are checked against.

#include "deco/bath.hpp"
#include "deco/modulation.hpp"

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace deco::bloch {

enum class Basis { lab, tilted };

struct QubitState {
  Eigen::Matrix2cd rho = Eigen::Matrix2cd::Zero();
  Basis basis = Basis::lab;
};

// |e><e| and the pure superposition (|e>+|g>)/sqrt(2), both lab-tagged.
QubitState excited_state();
QubitState superposition_state();

// Hermitian and unit trace within 1e-9, eigenvalues above -1e-6. Transient
// negativity within that margin is tolerated and never clipped in the state.
void validate(const QubitState& s);

// Basis change between lab and tilted frames at time t; involutive.
QubitState tilt_basis(const QubitState& s, double omega_a, double t, Basis target);

// Population of |e> as a probability; negativity is clipped here only.
double excited_population(const Eigen::Matrix2cd& rho_lab);

struct StepControl {
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  std::size_t n_points = 201;  // output grid size, both endpoints included
  double substep = 0.0;        // coefficient/propagator grid override, 0 = automatic
};

struct AnProgram {
  double omega_a = 0.0;
  modulation::ModulationWaveform drive = modulation::Constant{1.0};
  // Dynamical level shift d(t); enters the coherence rotation and composes
  // into the drive phase. Kind must be stark_shift.
  std::optional<modulation::FramePhase> shift;
};

struct PnProgram {
  double omega_a = 0.0;
  modulation::ModulationWaveform coupling = modulation::Constant{1.0};
  // Resonant-field envelope V0(t); splits the tilted doublet and composes
  // into the coupling phase. Kind must be resonant_splitting.
  std::optional<modulation::FramePhase> splitting;
};

struct Trajectory {
  std::vector<double> t;
  std::vector<Eigen::Matrix2cd> rho;  // in `basis`
  Basis basis = Basis::lab;
  double omega_a = 0.0;  // rotates tilted states back to the lab frame
};

// State at sample i converted to the lab basis.
Eigen::Matrix2cd lab_frame(const Trajectory& traj, std::size_t i);

void validate(const AnProgram& program);
void validate(const PnProgram& program);

Trajectory evolve_an(const QubitState& initial, const bath::ThermalBathSpectrum& b,
                     const AnProgram& program, double t_final,
                     const StepControl& ctrl = {});
Trajectory evolve_an(const QubitState& initial, const bath::CorrelationSampler& phi,
                     const AnProgram& program, double t_final,
                     const StepControl& ctrl = {});

Trajectory evolve_pn(const QubitState& initial, const bath::ThermalBathSpectrum& b,
                     const PnProgram& program, double t_final,
                     const StepControl& ctrl = {});
Trajectory evolve_pn(const QubitState& initial, const bath::CorrelationSampler& phi,
                     const PnProgram& program, double t_final,
                     const StepControl& ctrl = {});

using OperatorFunction = std::function<Eigen::Matrix2cd(double)>;

Trajectory evolve_general_me(const QubitState& initial, const bath::ThermalBathSpectrum& b,
                             const OperatorFunction& h_s, const OperatorFunction& coupling,
                             double t_final, const StepControl& ctrl = {});
Trajectory evolve_general_me(const QubitState& initial, const bath::CorrelationSampler& phi,
                             const OperatorFunction& h_s, const OperatorFunction& coupling,
                             double t_final, const StepControl& ctrl = {});

// The (H_S, S) pairs the specialized solvers integrate, for feeding the
// general route. The phase-noise pair lives in the tilted frame.
OperatorFunction an_hamiltonian(const AnProgram& p);
OperatorFunction an_coupling(const AnProgram& p);
OperatorFunction pn_hamiltonian(const PnProgram& p);
OperatorFunction pn_coupling(const PnProgram& p);

// Columns t, Re/Im rho_ee, Re/Im rho_eg (lab frame), P_e, |rho_eg|.
void write_csv(const std::string& path, const Trajectory& traj);

}  // namespace deco::bloch
