// quadrature.hpp — adaptive Gauss-Kronrod integration and principal-value helpers
#pragma once

#include <complex>
#include <functional>
#include <vector>

namespace deco::quad {

using cplx = std::complex<double>;

struct Options {
  double rel_tol = 1e-8;
  double abs_tol = 1e-14;          // absolute floor for near-zero integrals
  double max_panel_width = 0.0;    // 0 = no cap; set to ~one oscillation period for wavy integrands
  std::size_t max_panels = 400000; // refinement budget before giving up
};

struct Result {
  cplx value{0.0, 0.0};
  double error = 0.0;    // conservative absolute error estimate
  std::size_t panels = 0;
  bool converged = false;
};

// Integrate f over [a, b] (a < b) with a 7-15 Gauss-Kronrod pair and
// error-directed bisection. `breakpoints` become initial panel edges
// (kinks, support boundaries, filter peaks); points outside (a,b) are ignored.
Result integrate(const std::function<cplx(double)>& f, double a, double b,
                 const Options& opt = {}, const std::vector<double>& breakpoints = {});

// Same, but throws Error(numerical_failure) with the residual when not converged.
cplx integrate_or_throw(const std::function<cplx(double)>& f, double a, double b,
                        const Options& opt = {}, const std::vector<double>& breakpoints = {});

double integrate_real(const std::function<double(double)>& f, double a, double b,
                      const Options& opt = {}, const std::vector<double>& breakpoints = {});

// Cauchy principal value of ∫ g(w)/(pole - w) dw over [a, b] with pole inside.
// The singular neighbourhood is folded into u -> [g(pole-u) - g(pole+u)]/u so the
// pair cancellation is explicit; the remainder integrates normally.
double principal_value(const std::function<double(double)>& g, double pole,
                       double a, double b, const Options& opt = {});

} // namespace deco::quad
