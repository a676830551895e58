#pragma once
// Adaptive Dormand–Prince 5(4) integration for Eigen vector states.

#include "deco/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace deco::ode {

struct Options {
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double max_step = 0.0; // 0 = no cap
  std::size_t max_steps = 4000000;
};

namespace detail {

template <class State>
double error_norm(const State& err, const State& y0, const State& y1,
                  double atol, double rtol) {
  const Eigen::ArrayXd scale =
      atol + rtol * y0.cwiseAbs().cwiseMax(y1.cwiseAbs()).array();
  const Eigen::ArrayXd e = err.cwiseAbs().array();
  const double n = static_cast<double>(err.size());
  return std::sqrt((e / scale).square().sum() / n);
}

} // namespace detail

// Integrates y' = f(t, y) from t0, landing exactly on every entry of `times`
// (strictly increasing, times.front() >= t0) and every interior breakpoint,
// so the right-hand side may be discontinuous across breakpoints.  The
// observer fires once per output time; if times.front() == t0 it fires there
// immediately with the initial state.
template <class State, class Rhs, class Observer>
void solve(Rhs&& f, double t0, State y, const std::vector<double>& times,
           const Options& opt, const std::vector<double>& breakpoints,
           Observer&& observe) {
  require(!times.empty(), ErrorKind::invalid_input, "ode: empty output grid");
  for (std::size_t i = 0; i + 1 < times.size(); ++i)
    require(times[i] < times[i + 1], ErrorKind::invalid_input,
            "ode: output grid must be strictly increasing");
  require(times.front() >= t0, ErrorKind::invalid_input,
          "ode: output grid starts before the initial time");

  const double t_end = times.back();
  std::size_t next_out = 0;
  if (times.front() == t0) {
    observe(t0, y);
    ++next_out;
  }
  if (next_out == times.size()) return;

  std::vector<double> stops(times.begin() + static_cast<long>(next_out), times.end());
  // A breakpoint a few ulp away from an output time (or another breakpoint)
  // would leave the stepper a sub-epsilon interval; merge such near-duplicates.
  const double merge_tol = 4e-12 * std::max(1.0, std::abs(t_end));
  std::vector<double> extra;
  for (double b : breakpoints)
    if (b > t0 && b < t_end) extra.push_back(b);
  std::sort(extra.begin(), extra.end());
  double last_kept = t0;
  for (double b : extra) {
    auto it = std::lower_bound(times.begin(), times.end(), b);
    if (it != times.end() && *it - b <= merge_tol) continue;
    if (it != times.begin() && b - *(it - 1) <= merge_tol) continue;
    if (b - last_kept <= merge_tol) continue;
    stops.push_back(b);
    last_kept = b;
  }
  std::sort(stops.begin(), stops.end());
  stops.erase(std::unique(stops.begin(), stops.end()), stops.end());

  double t = t0;
  State k1 = f(t, y);
  bool k1_valid = true;
  double h = (t_end - t0) / 128.0;
  if (opt.max_step > 0.0) h = std::min(h, opt.max_step);
  std::size_t steps = 0;

  for (double stop : stops) {
    while (t < stop) {
      require(++steps <= opt.max_steps, ErrorKind::numerical_failure,
              "ode: step budget exhausted");
      if (!k1_valid) {
        k1 = f(t, y);
        k1_valid = true;
      }
      bool clipped = false;
      double hs = h;
      if (t + hs >= stop) {
        hs = stop - t;
        clipped = true;
      }

      const State k2 = f(t + hs * (1.0 / 5.0), (y + hs * (1.0 / 5.0) * k1).eval());
      const State k3 = f(t + hs * (3.0 / 10.0),
                         (y + hs * (3.0 / 40.0) * k1 + hs * (9.0 / 40.0) * k2).eval());
      const State k4 = f(t + hs * (4.0 / 5.0),
                         (y + hs * (44.0 / 45.0) * k1 - hs * (56.0 / 15.0) * k2 +
                          hs * (32.0 / 9.0) * k3)
                             .eval());
      const State k5 =
          f(t + hs * (8.0 / 9.0),
            (y + hs * (19372.0 / 6561.0) * k1 - hs * (25360.0 / 2187.0) * k2 +
             hs * (64448.0 / 6561.0) * k3 - hs * (212.0 / 729.0) * k4)
                .eval());
      const State k6 =
          f(t + hs, (y + hs * (9017.0 / 3168.0) * k1 - hs * (355.0 / 33.0) * k2 +
                     hs * (46732.0 / 5247.0) * k3 + hs * (49.0 / 176.0) * k4 -
                     hs * (5103.0 / 18656.0) * k5)
                        .eval());
      const State y5 = (y + hs * (35.0 / 384.0) * k1 + hs * (500.0 / 1113.0) * k3 +
                        hs * (125.0 / 192.0) * k4 - hs * (2187.0 / 6784.0) * k5 +
                        hs * (11.0 / 84.0) * k6)
                           .eval();
      const State k7 = f(t + hs, y5);
      const State err = (hs * (71.0 / 57600.0) * k1 - hs * (71.0 / 16695.0) * k3 +
                         hs * (71.0 / 1920.0) * k4 - hs * (17253.0 / 339200.0) * k5 +
                         hs * (22.0 / 525.0) * k6 - hs * (1.0 / 40.0) * k7)
                            .eval();

      const double en = detail::error_norm(err, y, y5, opt.abs_tol, opt.rel_tol);
      if (en <= 1.0) {
        t = clipped ? stop : t + hs;
        y = y5;
        k1 = k7; // FSAL
        // A stop may be a breakpoint where f jumps; re-evaluate on the far side.
        k1_valid = !clipped;
        double fac = en > 0.0 ? 0.9 * std::pow(en, -0.2) : 5.0;
        h = hs * std::clamp(fac, 0.2, 5.0);
      } else {
        h = hs * std::clamp(0.9 * std::pow(en, -0.2), 0.1, 0.9);
      }
      if (opt.max_step > 0.0) h = std::min(h, opt.max_step);
      require(h > 1e-14 * std::max(1.0, std::abs(t)), ErrorKind::numerical_failure,
              "ode: step underflow (right-hand side too rough for the tolerances)");
    }
    if (next_out < times.size() && stop == times[next_out]) {
      observe(stop, y);
      ++next_out;
    }
  }
}

} // namespace deco::ode
