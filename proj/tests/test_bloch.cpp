#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>
#include <vector>

#include "deco/bath.hpp"
#include "deco/bloch.hpp"
#include "deco/csv.hpp"
#include "deco/errors.hpp"
#include "deco/modulation.hpp"
#include "deco/rates.hpp"
#include "doctest.h"

using namespace deco;
using cplx = std::complex<double>;

namespace {

constexpr double kPi = 3.14159265358979323846;
const double kInf = std::numeric_limits<double>::infinity();

bath::ThermalBathSpectrum narrow_line() {
  return {bath::Lorentzian{0.2, 5.0, 1.0}, kInf};
}

bath::ThermalBathSpectrum warm_band() {
  return {bath::FlatBand{0.3, 0.5, 3.0}, 1.7};
}

double worst_dev(const bloch::Trajectory& a, const bloch::Trajectory& b) {
  REQUIRE(a.t.size() == b.t.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < a.t.size(); ++i)
    worst = std::max(worst, (a.rho[i] - b.rho[i]).cwiseAbs().maxCoeff());
  return worst;
}

Eigen::Matrix2cd tilt_matrix(double omega_a, double t) {
  double s = 1.0 / std::sqrt(2.0);
  Eigen::Matrix2cd w;
  w << std::polar(s, -omega_a * t), std::polar(s, -omega_a * t), s, -s;
  return w;
}

}  // namespace

TEST_CASE("state helpers and validation") {
  auto e = bloch::excited_state();
  CHECK(std::real(e.rho(0, 0)) == 1.0);
  CHECK(e.basis == bloch::Basis::lab);
  auto p = bloch::superposition_state();
  CHECK(std::real(p.rho(0, 1)) == 0.5);
  bloch::validate(e);
  bloch::validate(p);
  CHECK(bloch::excited_population(e.rho) == 1.0);

  SUBCASE("trace must be one") {
    bloch::QubitState s = e;
    s.rho(1, 1) = 0.1;
    try {
      bloch::validate(s);
      FAIL("expected a throw");
    } catch (const Error& err) {
      CHECK(err.kind == ErrorKind::invalid_input);
    }
  }
  SUBCASE("state must be hermitian") {
    bloch::QubitState s = p;
    s.rho(0, 1) = cplx(0.5, 0.3);
    CHECK_THROWS_AS(bloch::validate(s), Error);
  }
  SUBCASE("state must be positive") {
    bloch::QubitState s;
    s.rho << 0.5, 0.9, 0.9, 0.5;
    CHECK_THROWS_AS(bloch::validate(s), Error);
  }
  SUBCASE("population readout clips roundoff excursions") {
    Eigen::Matrix2cd m = Eigen::Matrix2cd::Zero();
    m(0, 0) = 1.0 + 1e-14;
    m(1, 1) = -1e-14;
    CHECK(bloch::excited_population(m) == 1.0);
  }
}

TEST_CASE("basis tilting matches the explicit frame matrix") {
  double wa = 2.7;
  Eigen::Matrix2cd rho;
  rho << 0.6, cplx(0.2, -0.1), cplx(0.2, 0.1), 0.4;
  bloch::QubitState lab{rho, bloch::Basis::lab};

  SUBCASE("agrees with a direct conjugation at a generic time") {
    double t = 0.77;
    Eigen::Matrix2cd w = tilt_matrix(wa, t);
    auto tilted = bloch::tilt_basis(lab, wa, t, bloch::Basis::tilted);
    CHECK(tilted.basis == bloch::Basis::tilted);
    CHECK((tilted.rho - w.adjoint() * rho * w).cwiseAbs().maxCoeff() < 1e-14);
    auto back = bloch::tilt_basis(tilted, wa, t, bloch::Basis::lab);
    CHECK((back.rho - rho).cwiseAbs().maxCoeff() < 1e-13);
  }
  SUBCASE("the excited pole lands on the equator at every time") {
    for (double t : {0.0, 1.3}) {
      auto tilted = bloch::tilt_basis(bloch::excited_state(), wa, t,
                                      bloch::Basis::tilted);
      Eigen::Matrix2cd half = Eigen::Matrix2cd::Constant(0.5);
      CHECK((tilted.rho - half).cwiseAbs().maxCoeff() < 1e-14);
    }
  }
  SUBCASE("the maximally mixed state is frame-invariant") {
    bloch::QubitState mixed{0.5 * Eigen::Matrix2cd::Identity(),
                            bloch::Basis::lab};
    auto tilted = bloch::tilt_basis(mixed, wa, 2.1, bloch::Basis::tilted);
    CHECK((tilted.rho - mixed.rho).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("requesting the current basis is the identity") {
    auto same = bloch::tilt_basis(lab, wa, 0.9, bloch::Basis::lab);
    CHECK((same.rho - rho).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("zero drive leaves a pure precessing coherence") {
  bloch::AnProgram prog;
  prog.omega_a = 2.0;
  prog.drive = modulation::Constant{0.0};
  prog.shift = modulation::FramePhase{modulation::FrameKind::stark_shift,
                                      modulation::ConstantPhase{0.3}};
  auto traj =
      bloch::evolve_an(bloch::superposition_state(), narrow_line(), prog, 5.0);
  REQUIRE(traj.t.size() == 201);
  CHECK(traj.basis == bloch::Basis::lab);
  for (std::size_t i = 0; i < traj.t.size(); ++i) {
    cplx expect = 0.5 * std::polar(1.0, -2.3 * traj.t[i]);
    CHECK(std::abs(traj.rho[i](0, 1) - expect) < 1e-7);
    CHECK(std::abs(traj.rho[i](0, 0) - cplx(0.5, 0.0)) < 1e-9);
  }
}

TEST_CASE("zero-temperature decay follows the accumulated overlap exponent") {
  auto b = narrow_line();
  modulation::ModulationWaveform w = modulation::Constant{0.5};
  bloch::AnProgram prog;
  prog.omega_a = 5.0;
  prog.drive = w;
  bloch::StepControl ctrl;
  ctrl.n_points = 61;
  auto traj = bloch::evolve_an(bloch::excited_state(), b, prog, 6.0, ctrl);
  auto rep = rates::spectral_exponent(b, w, 5.0, rates::Regime::an, 6.0, 61);
  for (std::size_t i = 0; i < traj.t.size(); ++i) {
    CHECK(traj.t[i] == doctest::Approx(rep.t[i]).epsilon(1e-12));
    CHECK(std::abs(std::real(traj.rho[i](0, 0)) - rep.p_e[i]) < 1e-3);
  }
}

TEST_CASE("finite-temperature populations settle into detailed balance") {
  bath::ThermalBathSpectrum b{
      bath::Ohmic{0.5, 1.5, bath::OhmicCutoff::exponential, 1.0}, 1.0};
  bloch::AnProgram prog;
  prog.omega_a = 2.0;
  prog.drive = modulation::Constant{0.6};
  bloch::StepControl ctrl;
  ctrl.n_points = 41;
  double tf = 40.0;
  auto traj = bloch::evolve_an(bloch::excited_state(), b, prog, tf, ctrl);
  double pe = std::real(traj.rho.back()(0, 0));
  double ratio = pe / (1.0 - pe);
  auto rb = rates::convolution_rates(b, prog.drive, 2.0, rates::Regime::an, tf);
  CHECK(std::abs(ratio / (rb.r_g / rb.r_e) - 1.0) < 5e-3);
  CHECK(std::abs(ratio / std::exp(-1.0 * 2.0) - 1.0) < 1e-3);
  // coherence was never seeded, so the steady state is fully diagonal
  CHECK(std::abs(traj.rho.back()(0, 1)) < 1e-10);
}

TEST_CASE("amplitude evolution agrees with the general memory-kernel engine") {
  auto b = narrow_line();
  bloch::AnProgram prog;
  prog.omega_a = 5.0;
  prog.drive = modulation::Monochromatic{0.4, 0.8};
  bloch::StepControl ctrl;
  ctrl.n_points = 81;
  auto ta = bloch::evolve_an(bloch::excited_state(), b, prog, 4.0, ctrl);
  auto tg = bloch::evolve_general_me(bloch::excited_state(), b,
                                     bloch::an_hamiltonian(prog),
                                     bloch::an_coupling(prog), 4.0, ctrl);
  CHECK(tg.basis == bloch::Basis::lab);
  CHECK(worst_dev(ta, tg) < 1e-5);
  double tr = 0.0, he = 0.0, mn = 1.0;
  for (const auto& m : tg.rho) {
    tr = std::max(tr, std::abs(std::abs(m.trace()) - 1.0));
    he = std::max(he, (m - m.adjoint()).norm());
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(m);
    mn = std::min(mn, es.eigenvalues().minCoeff());
  }
  CHECK(tr < 1e-12);
  CHECK(he < 1e-12);
  CHECK(mn > -1e-9);
}

TEST_CASE("phase evolution agrees with the general memory-kernel engine") {
  auto b = warm_band();
  bloch::PnProgram prog;
  prog.omega_a = 3.0;
  prog.coupling = modulation::Monochromatic{0.5, 0.6};
  prog.splitting = modulation::FramePhase{
      modulation::FrameKind::resonant_splitting, modulation::ConstantPhase{0.8}};
  bloch::StepControl ctrl;
  ctrl.n_points = 81;
  auto start = bloch::superposition_state();
  auto tp = bloch::evolve_pn(start, b, prog, 4.0, ctrl);
  CHECK(tp.basis == bloch::Basis::tilted);
  CHECK(tp.omega_a == 3.0);
  auto tilted = bloch::tilt_basis(start, prog.omega_a, 0.0, bloch::Basis::tilted);
  auto tg = bloch::evolve_general_me(tilted, b, bloch::pn_hamiltonian(prog),
                                     bloch::pn_coupling(prog), 4.0, ctrl);
  CHECK(worst_dev(tp, tg) < 1e-4);
}

TEST_CASE("impulsive phase modulation agrees across engines") {
  auto b = narrow_line();
  bloch::AnProgram prog;
  prog.omega_a = 5.0;
  prog.drive = modulation::ImpulsivePm{kPi, 0.5};
  bloch::StepControl ctrl;
  ctrl.n_points = 81;
  auto ta = bloch::evolve_an(bloch::excited_state(), b, prog, 4.0, ctrl);
  bloch::StepControl cg = ctrl;
  cg.substep = 0.5 / 256.0;
  auto tg = bloch::evolve_general_me(bloch::excited_state(), b,
                                     bloch::an_hamiltonian(prog),
                                     bloch::an_coupling(prog), 4.0, cg);
  CHECK(worst_dev(ta, tg) < 1e-4);
  // the pi train keeps the emission overlap well off resonance
  CHECK(std::real(ta.rho.back()(0, 0)) > 0.8);
}

TEST_CASE("shifting the frame origin leaves lab observables unchanged") {
  bath::ThermalBathSpectrum b{bath::FlatBand{0.25, 0.4, 2.8}, 2.0};
  double wa = 3.0;
  bloch::PnProgram prog;
  prog.omega_a = wa;
  prog.coupling = modulation::Monochromatic{0.5, 0.6};
  prog.splitting = modulation::FramePhase{
      modulation::FrameKind::resonant_splitting, modulation::ConstantPhase{0.8}};
  bloch::StepControl ctrl;
  ctrl.n_points = 81;
  auto ref = bloch::evolve_pn(bloch::superposition_state(), b, prog, 4.0, ctrl);

  double t0 = 1.1;
  double phi = wa * t0;
  Eigen::Matrix2cd sx;
  sx << 0, 1, 1, 0;
  Eigen::Matrix2cd y = std::polar(1.0, 0.5 * phi) *
                       (std::cos(0.5 * phi) * Eigen::Matrix2cd::Identity() +
                        cplx(0, 1) * std::sin(0.5 * phi) * sx);
  auto h = bloch::pn_hamiltonian(prog);
  auto s_op = bloch::pn_coupling(prog);
  bloch::OperatorFunction h2 = [y, h](double t) {
    return (y.adjoint() * h(t) * y).eval();
  };
  bloch::OperatorFunction s2 = [y, s_op](double t) {
    return (y.adjoint() * s_op(t) * y).eval();
  };
  auto init0 = bloch::tilt_basis(bloch::superposition_state(), wa, 0.0,
                                 bloch::Basis::tilted);
  bloch::QubitState init2{(y.adjoint() * init0.rho * y).eval(),
                          bloch::Basis::tilted};
  auto shifted = bloch::evolve_general_me(init2, b, h2, s2, 4.0, ctrl);
  double worst = 0.0;
  for (std::size_t i = 0; i < ref.t.size(); ++i) {
    Eigen::Matrix2cd lab_ref = bloch::lab_frame(ref, i);
    bloch::QubitState st{shifted.rho[i], bloch::Basis::tilted};
    Eigen::Matrix2cd lab2 =
        bloch::tilt_basis(st, wa, ref.t[i] - t0, bloch::Basis::lab).rho;
    worst = std::max(worst, (lab_ref - lab2).cwiseAbs().maxCoeff());
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("phase evolution is the zero-frequency amplitude problem") {
  auto b = warm_band();
  modulation::ModulationWaveform g = modulation::Monochromatic{0.5, 0.6};
  modulation::PhaseShape shape = modulation::ConstantPhase{0.8};
  bloch::PnProgram pp;
  pp.omega_a = 3.0;
  pp.coupling = g;
  pp.splitting =
      modulation::FramePhase{modulation::FrameKind::resonant_splitting, shape};
  bloch::AnProgram ap;
  ap.omega_a = 0.0;
  ap.drive = g;
  ap.shift = modulation::FramePhase{modulation::FrameKind::stark_shift, shape};
  bloch::StepControl ctrl;
  ctrl.n_points = 61;
  auto tp = bloch::evolve_pn(bloch::superposition_state(), b, pp, 4.0, ctrl);
  auto init0 = bloch::tilt_basis(bloch::superposition_state(), 3.0, 0.0,
                                 bloch::Basis::tilted);
  bloch::QubitState init_lab{init0.rho, bloch::Basis::lab};
  auto ta = bloch::evolve_an(init_lab, b, ap, 4.0, ctrl);
  CHECK(worst_dev(tp, ta) < 1e-12);
}

TEST_CASE("zero coupling reduces the general engine to unitary motion") {
  bath::ThermalBathSpectrum b{bath::FlatBand{0.3, 0.5, 3.0}, kInf};
  Eigen::Matrix2cd hmat;
  hmat << 0.7, cplx(0.3, -0.1), cplx(0.3, 0.1), -0.7;
  bloch::OperatorFunction h = [hmat](double) { return hmat; };
  bloch::OperatorFunction s0 = [](double) {
    return Eigen::Matrix2cd::Zero().eval();
  };
  bloch::StepControl ctrl;
  ctrl.n_points = 41;
  auto traj = bloch::evolve_general_me(bloch::superposition_state(), b, h, s0,
                                       5.0, ctrl);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(hmat);
  for (std::size_t i = 0; i < traj.t.size(); ++i) {
    Eigen::Matrix2cd u =
        es.eigenvectors() *
        (cplx(0, -1) * traj.t[i] * es.eigenvalues().array().cast<cplx>())
            .exp()
            .matrix()
            .asDiagonal() *
        es.eigenvectors().adjoint();
    Eigen::Matrix2cd expect = u * bloch::superposition_state().rho * u.adjoint();
    CHECK((traj.rho[i] - expect).cwiseAbs().maxCoeff() < 1e-7);
  }
}

TEST_CASE("evolution rejects bad inputs") {
  auto b = narrow_line();
  bloch::AnProgram prog;
  prog.omega_a = 5.0;
  prog.drive = modulation::Constant{0.5};

  SUBCASE("amplitude evolution expects a lab-basis state") {
    bloch::QubitState tilted{bloch::superposition_state().rho,
                             bloch::Basis::tilted};
    try {
      bloch::evolve_an(tilted, b, prog, 1.0);
      FAIL("expected a throw");
    } catch (const Error& e) {
      CHECK(e.kind == ErrorKind::invalid_input);
    }
  }
  SUBCASE("frame kinds are enforced per regime") {
    bloch::AnProgram wrong = prog;
    wrong.shift = modulation::FramePhase{
        modulation::FrameKind::resonant_splitting, modulation::ConstantPhase{0.1}};
    CHECK_THROWS_AS(bloch::evolve_an(bloch::excited_state(), b, wrong, 1.0),
                    Error);
    bloch::PnProgram pwrong;
    pwrong.omega_a = 1.0;
    pwrong.coupling = modulation::Constant{0.5};
    pwrong.splitting = modulation::FramePhase{modulation::FrameKind::stark_shift,
                                              modulation::ConstantPhase{0.1}};
    CHECK_THROWS_AS(bloch::evolve_pn(bloch::excited_state(), b, pwrong, 1.0),
                    Error);
  }
  SUBCASE("a prepared kernel must cover the horizon") {
    bath::CorrelationSampler phi(b, 2.0);
    try {
      bloch::evolve_an(bloch::excited_state(), phi, prog, 4.0);
      FAIL("expected a throw");
    } catch (const Error& e) {
      CHECK(e.kind == ErrorKind::invalid_input);
    }
  }
  SUBCASE("sampled drive data must cover the horizon") {
    bloch::AnProgram sprog;
    sprog.omega_a = 5.0;
    sprog.drive = modulation::Sampled{0.5, {cplx(1, 0), cplx(1, 0), cplx(1, 0)}};
    CHECK_THROWS_AS(bloch::evolve_an(bloch::excited_state(), b, sprog, 4.0),
                    Error);
  }
  SUBCASE("horizon must be positive and finite") {
    CHECK_THROWS_AS(bloch::evolve_an(bloch::excited_state(), b, prog, 0.0),
                    Error);
    CHECK_THROWS_AS(bloch::evolve_an(bloch::excited_state(), b, prog, -1.0),
                    Error);
    CHECK_THROWS_AS(bloch::evolve_an(bloch::excited_state(), b, prog, kInf),
                    Error);
  }
  SUBCASE("step control is validated") {
    bloch::StepControl bad;
    bad.n_points = 1;
    CHECK_THROWS_AS(bloch::evolve_an(bloch::excited_state(), b, prog, 1.0, bad),
                    Error);
    bad = bloch::StepControl{};
    bad.rel_tol = 0.0;
    CHECK_THROWS_AS(bloch::evolve_an(bloch::excited_state(), b, prog, 1.0, bad),
                    Error);
    bad = bloch::StepControl{};
    bad.substep = kInf;
    CHECK_THROWS_AS(bloch::evolve_an(bloch::excited_state(), b, prog, 1.0, bad),
                    Error);
  }
  SUBCASE("general engine requires callable operators") {
    CHECK_THROWS_AS(
        bloch::evolve_general_me(bloch::excited_state(), b,
                                 bloch::OperatorFunction{},
                                 bloch::an_coupling(prog), 1.0),
        Error);
  }
  SUBCASE("frame readout needs a valid index") {
    auto traj = bloch::evolve_an(bloch::excited_state(), b, prog, 0.5);
    CHECK_THROWS_AS(bloch::lab_frame(traj, traj.t.size()), Error);
  }
}

TEST_CASE("trajectory serialization round-trips through csv") {
  auto b = narrow_line();
  bloch::AnProgram prog;
  prog.omega_a = 5.0;
  prog.drive = modulation::Constant{0.5};
  bloch::StepControl ctrl;
  ctrl.n_points = 9;
  auto traj = bloch::evolve_an(bloch::excited_state(), b, prog, 2.0, ctrl);
  std::string path = "bloch_traj_roundtrip.csv";
  bloch::write_csv(path, traj);
  auto table = csv::read_table_file(path);
  std::remove(path.c_str());
  REQUIRE(table.columns ==
          std::vector<std::string>{"t", "re_rho_ee", "im_rho_ee", "re_rho_eg",
                                   "im_rho_eg", "p_e", "abs_rho_eg"});
  REQUIRE(table.rows.size() == traj.t.size());
  CHECK(table.rows[0][0] == 0.0);
  CHECK(table.rows[0][1] == 1.0);
  CHECK(table.rows[0][5] == 1.0);
  for (std::size_t k = 0; k < traj.t.size(); ++k) {
    CHECK(table.rows[k][0] == doctest::Approx(traj.t[k]).epsilon(5e-12));
    CHECK(table.rows[k][1] ==
          doctest::Approx(std::real(traj.rho[k](0, 0))).epsilon(5e-12));
    CHECK(table.rows[k][5] ==
          doctest::Approx(bloch::excited_population(traj.rho[k])).epsilon(5e-12));
  }
}
