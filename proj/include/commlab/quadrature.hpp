#pragma once

// Adaptive 1-D quadrature (Gauss-Kronrod 7/15) and box integration helpers.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

namespace commlab::quad {

namespace detail {
// QUADPACK dqk15 abscissae/weights on [-1,1].
inline constexpr std::array<double, 8> kGK15X = {
    0.9914553711208126, 0.9491079123427585, 0.8648644233597691,
    0.7415311855993944, 0.5860872354676911, 0.4058451513773972,
    0.2077849550078985, 0.0};
inline constexpr std::array<double, 8> kGK15W = {
    0.0229353220105292, 0.0630920926299785, 0.1047900103222502,
    0.1406532597155259, 0.1690047266392679, 0.1903505780647854,
    0.2044329400752989, 0.2094821410847278};
inline constexpr std::array<double, 4> kG7W = {
    0.1294849661688697, 0.2797053914892767, 0.3818300505051189,
    0.4179591836734694};
}  // namespace detail

struct Estimate {
  double value = 0.0;
  double error = 0.0;
};

template <class F>
Estimate gk15(F&& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double resk = detail::kGK15W[7] * f(c);
  double resg = detail::kG7W[3] * f(c);
  for (int i = 0; i < 7; ++i) {
    const double dx = h * detail::kGK15X[i];
    const double fsum = f(c - dx) + f(c + dx);
    resk += detail::kGK15W[i] * fsum;
    if (i % 2 == 1) resg += detail::kG7W[i / 2] * fsum;
  }
  resk *= h;
  resg *= h;
  return {resk, std::abs(resk - resg)};
}

// Adaptive bisection on [a,b]; relative tolerance against the running total.
template <class F>
double integrate(F&& f, double a, double b, double rel_tol = 1e-10,
                 int max_depth = 48) {
  if (!(a < b)) return 0.0;
  struct Seg {
    double a, b;
    int depth;
  };
  // Explicit stack; worst case ~max_depth * 64 entries.
  std::array<Seg, 2048> stack;
  int top = 0;
  stack[top++] = {a, b, 0};
  double total = 0.0;
  double scale = 0.0;
  while (top > 0) {
    const Seg s = stack[--top];
    const Estimate e = gk15(f, s.a, s.b);
    scale = std::max(scale, std::abs(e.value));
    const double tol = rel_tol * std::max(scale, std::abs(total));
    if (s.depth >= max_depth || e.error <= std::max(tol, 1e-300) ||
        !(std::isfinite(e.value))) {
      total += e.value;
      continue;
    }
    if (top + 2 > static_cast<int>(stack.size()))
      throw std::runtime_error("quad::integrate: subdivision stack overflow");
    const double mid = 0.5 * (s.a + s.b);
    stack[top++] = {s.a, mid, s.depth + 1};
    stack[top++] = {mid, s.b, s.depth + 1};
  }
  return total;
}

// Integral over [a, +inf): fixed-width segments, doubling once contributions
// fall off, stopping after several consecutive negligible segments.  The
// quiet counter only engages once nonzero mass has been seen, so a flat
// stretch before the bulk of the integrand does not end the scan.
template <class F>
double integrate_to_inf(F&& f, double a, double rel_tol = 1e-10) {
  double total = 0.0;
  double scale = 0.0;
  double w = 1.0;
  double x = a;
  int quiet = 0;
  for (int i = 0; i < 400 && quiet < 4; ++i) {
    const double piece = integrate(f, x, x + w, rel_tol);
    total += piece;
    scale = std::max(scale, std::abs(piece));
    x += w;
    if (scale > 0 &&
        std::abs(piece) <= rel_tol * std::max(scale, std::abs(total)))
      ++quiet;
    else
      quiet = 0;
    if (i > 8) w *= 2.0;
  }
  return total;
}

template <class F>
double integrate_from_minus_inf(F&& f, double b, double rel_tol = 1e-10) {
  return integrate_to_inf([&](double u) { return f(-u); }, -b, rel_tol);
}

}  // namespace commlab::quad
