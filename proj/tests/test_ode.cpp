#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "deco/errors.hpp"
#include "deco/ode.hpp"

using Eigen::VectorXcd;
using Eigen::VectorXd;

TEST_CASE("exponential decay hits requested output times") {
  deco::ode::Options opt;
  opt.rel_tol = 1e-10;
  opt.abs_tol = 1e-12;
  std::vector<double> times{0.0, 0.5, 1.0, 2.0, 5.0};
  std::vector<double> got;
  VectorXd y0(1);
  y0 << 1.0;
  deco::ode::solve([](double, const VectorXd& y) { return VectorXd(-y); }, 0.0, y0,
                   times, opt, {},
                   [&](double t, const VectorXd& y) {
                     got.push_back(t);
                     CHECK(std::abs(y[0] - std::exp(-t)) < 1e-9);
                   });
  CHECK(got == times);
}

TEST_CASE("harmonic oscillator preserves energy") {
  deco::ode::Options opt;
  opt.rel_tol = 1e-11;
  opt.abs_tol = 1e-13;
  std::vector<double> times{20.0};
  VectorXd y0(2);
  y0 << 1.0, 0.0;
  deco::ode::solve(
      [](double, const VectorXd& y) {
        VectorXd dy(2);
        dy[0] = y[1];
        dy[1] = -y[0];
        return dy;
      },
      0.0, y0, times, opt, {},
      [&](double t, const VectorXd& y) {
        CHECK(std::abs(y[0] - std::cos(t)) < 1e-8);
        CHECK(std::abs(y[0] * y[0] + y[1] * y[1] - 1.0) < 1e-9);
      });
}

TEST_CASE("discontinuous right-hand side with breakpoint landing") {
  deco::ode::Options opt;
  opt.rel_tol = 1e-11;
  opt.abs_tol = 1e-13;
  std::vector<double> times{2.0};
  VectorXd y0(1);
  y0 << 1.0;
  deco::ode::solve(
      [](double t, const VectorXd& y) { return VectorXd((t < 1.0 ? -1.0 : 1.0) * y); },
      0.0, y0, times, opt, {1.0},
      [&](double, const VectorXd& y) { CHECK(std::abs(y[0] - 1.0) < 1e-9); });
}

TEST_CASE("complex state evolves with correct phase") {
  deco::ode::Options opt;
  std::vector<double> times{3.0};
  VectorXcd y0(1);
  y0 << std::complex<double>(1.0, 0.0);
  deco::ode::solve(
      [](double, const VectorXcd& y) {
        return VectorXcd(std::complex<double>(0.0, -2.0) * y);
      },
      0.0, y0, times, opt, {},
      [&](double t, const VectorXcd& y) {
        CHECK(std::abs(y[0] - std::polar(1.0, -2.0 * t)) < 1e-7);
      });
}

TEST_CASE("non-monotone output grid is rejected") {
  deco::ode::Options opt;
  VectorXd y0(1);
  y0 << 1.0;
  std::vector<double> bad{1.0, 0.5};
  CHECK_THROWS_AS(
      deco::ode::solve([](double, const VectorXd& y) { return VectorXd(-y); }, 0.0,
                       y0, bad, opt, {}, [&](double, const VectorXd&) {}),
      deco::Error);
}
