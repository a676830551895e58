#pragma once
// Exact few-mode reference dynamics used to validate the perturbative rate
// and evolution machinery.  The continuous bath is replaced by M discrete
// oscillator modes and the coupled system is integrated with no weak-coupling
// or Markov assumption.
//
// The system-bath coupling is kept in its excitation-conserving
// (rotating-wave) form, eps~*(t) sigma_+ a_lambda + h.c.; counter-rotating
// terms are dropped on both sides of every benchmark, so comparisons are
// meaningful only in regimes where that form is the model of interest.

#include "deco/bath.hpp"
#include "deco/bloch.hpp"

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

namespace deco::oracle {

struct OracleMode {
  double omega = 0.0;  // mode frequency
  double kappa = 0.0;  // coupling strength, real; |kappa|^2 = mode spectral mass
};

// Discrete-mode stand-in for a continuous coupling density.  Faithful up to
// the recurrence time 2*pi / (smallest distinct mode spacing); l1_error is
// the relative L1 mismatch between the broadened mode comb and the target
// density over the discretization window.
struct DiscretizedBath {
  std::vector<OracleMode> modes;
  int n_max = 1;  // per-mode Fock truncation used by the ladder route
  double beta = std::numeric_limits<double>::infinity();
  double recurrence = std::numeric_limits<double>::infinity();
  double l1_error = 0.0;
};

void validate(const DiscretizedBath& db);

// Equal-mass placement: mode lambda sits at the (lambda - 1/2)/M quantile of
// the coupling density restricted to `window` and carries 1/M of the
// restricted mass.  The window must hold at least 99% of the total mass.
DiscretizedBath discretize(const bath::ThermalBathSpectrum& b, int m_modes,
                           const bath::Support& window);
DiscretizedBath discretize(const bath::ThermalBathSpectrum& b, int m_modes);

struct SurvivalTrajectory {
  std::vector<double> t;
  std::vector<double> p_e;  // excited-state survival probability
  double norm_drift = 0.0;  // max | ||psi|| - 1 | along the run
};

// Exact single-excitation dynamics of the driven two-level system coupled to
// the discrete modes, starting from |e> with every mode empty.  Requires a
// zero-temperature bath; horizons beyond the recurrence time are refused.
SurvivalTrajectory exact_an_t0(const DiscretizedBath& db,
                               const bloch::AnProgram& program, double t_final,
                               std::size_t n_points = 201);

enum class PnRoute {
  automatic,    // closed form when applicable, ladder otherwise
  closed_form,  // independent-boson displacement sum; needs V0 = 0 and a
                // coupling whose phase is fixed up to sign
  full_ladder,  // truncated-Fock integration of the full tilted Hamiltonian
};

struct CoherenceTrajectory {
  std::vector<double> t;
  std::vector<double> abs_rho_eg;  // |rho_eg(t)|; starts at 1/2
  double norm_drift = 0.0;
  PnRoute route = PnRoute::closed_form;  // route actually taken
};

// Exact dephasing of the tilted doublet prepared in (|e> + |g>)/sqrt(2) with
// the modes in thermal equilibrium.  The coupling envelope must be piecewise
// constant (Constant, OnOff or ImpulsivePm), as must the splitting V0 when
// present.  The ladder route truncates each mode at n_max quanta and refuses
// state spaces above 10^5 amplitudes.
CoherenceTrajectory exact_pn(const DiscretizedBath& db,
                             const bloch::PnProgram& program, double t_final,
                             std::size_t n_points = 201,
                             PnRoute route = PnRoute::automatic);

// Columns: t, p_e_exact, p_e_predicted, rel_dev.
void write_comparison_csv(const std::string& path, const SurvivalTrajectory& exact,
                          const std::vector<double>& predicted);

}  // namespace deco::oracle
