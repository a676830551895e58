#pragma once

#include <cmath>
#include <complex>

namespace deco::detail {

using cplx = std::complex<double>;

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

inline double reduce_angle(double x) { return std::remainder(x, kTwoPi); }

inline double sinc(double x) {
  if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

// integral_0^t exp(i w s) ds
inline cplx eint(double w, double t) {
  double th = w * t;
  if (std::abs(th) < 1e-6) {
    return t * (cplx(1.0, 0.5 * th) - th * th * cplx(1.0 / 6.0, th / 24.0));
  }
  return (std::polar(1.0, th) - 1.0) / cplx(0.0, w);
}

// integral_0^h s exp(i w s) ds
inline cplx moment1(double w, double h) {
  double th = w * h;
  if (std::abs(th) < 1e-4) {
    return h * h *
           (cplx(0.5, th / 3.0) - th * th * cplx(1.0 / 8.0, th / 30.0));
  }
  cplx e = std::polar(1.0, th);
  return h * e / cplx(0.0, w) + (e - 1.0) / (w * w);
}

// sum_{j=0}^{m-1} exp(i j x); exact under x -> x mod 2 pi
inline cplx geom(double x, long long m) {
  if (m <= 0) return 0.0;
  double d = reduce_angle(x);
  double md = static_cast<double>(m);
  if (std::abs(d) * md < 1e-8) {
    double s1 = md * (md - 1.0) / 2.0;
    double s2 = md * (md - 1.0) * (2.0 * md - 1.0) / 6.0;
    return cplx(md - 0.5 * d * d * s2, d * s1);
  }
  double ratio = std::sin(0.5 * md * d) / std::sin(0.5 * d);
  return std::polar(ratio, 0.5 * d * (md - 1.0));
}

// Dirichlet envelope [sin(m x / 2) / sin(x / 2)]^2, stabilized near x = 0 mod 2 pi.
inline double dirichlet_sq(double x, long long m) {
  double d = reduce_angle(x);
  double md = static_cast<double>(m);
  if (std::abs(d) * md < 1e-8) {
    double v = md * md * (1.0 - (md * md - 1.0) * d * d / 12.0);
    return v;
  }
  double r = std::sin(0.5 * md * d) / std::sin(0.5 * d);
  return r * r;
}

}  // namespace deco::detail
