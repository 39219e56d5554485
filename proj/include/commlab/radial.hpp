#pragma once

// Radial profiles with high-dynamic-range quadrature.
//
// A profile is coef * r^a * (log r)^b * (loglog r)^c * (logloglog r)^d *
// exp(-q r^dexp) on a support interval.  Integration against r^{n-1} dr is
// done in log-substituted coordinates (u = log r, and t = loglog r when the
// power part cancels), which is what makes radii like e^{e^e} and 10^300
// tractable.  Convergence is classified symbolically from the exponents.

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "commlab/quadrature.hpp"

namespace commlab::lab {

inline double sphere_measure(int n) {
  switch (n) {
    case 1:
      return 2.0;
    case 2:
      return 2.0 * std::numbers::pi;
    case 3:
      return 4.0 * std::numbers::pi;
    default:
      return 2.0 * std::pow(std::numbers::pi, n / 2.0) / std::tgamma(n / 2.0);
  }
}

struct RadialProfile {
  double coef = 1.0;
  double a = 0.0;  // power of r
  double b = 0.0;  // power of log r
  double c = 0.0;  // power of loglog r
  double d = 0.0;  // power of logloglog r
  double q = 0.0;  // exp(-q r^dexp) factor
  double dexp = 1.0;
  double r_lo = 0.0;
  double r_hi = std::numeric_limits<double>::infinity();

  static RadialProfile power(double a_) {
    RadialProfile p;
    p.a = a_;
    return p;
  }

  RadialProfile operator*(const RadialProfile& o) const {
    RadialProfile p = *this;
    p.coef *= o.coef;
    p.a += o.a;
    p.b += o.b;
    p.c += o.c;
    p.d += o.d;
    if (q > 0 && o.q > 0 && dexp != o.dexp)
      throw std::invalid_argument(
          "RadialProfile: cannot combine exp factors with different "
          "exponents");
    if (o.q > 0) {
      p.dexp = o.dexp;
      p.q = q + o.q;
    }
    p.r_lo = std::max(r_lo, o.r_lo);
    p.r_hi = std::min(r_hi, o.r_hi);
    return p;
  }

  RadialProfile pow(double e) const {
    RadialProfile p = *this;
    p.coef = std::pow(coef, e);
    p.a *= e;
    p.b *= e;
    p.c *= e;
    p.d *= e;
    p.q *= e;
    return p;
  }

  double eval(double r) const {
    if (r < r_lo || r >= r_hi) return 0.0;
    double v = coef * std::pow(r, a);
    if (b != 0) v *= std::pow(std::log(r), b);
    if (c != 0) v *= std::pow(std::log(std::log(r)), c);
    if (d != 0) v *= std::pow(std::log(std::log(std::log(r))), d);
    if (q > 0) v *= std::exp(-q * std::pow(r, dexp));
    return v;
  }
};

// The example families of the sharpness experiments.
namespace profiles {

// |x|^{(n-delta)/p'}  (power weight of the fractional-commutator example)
inline RadialProfile w_delta_power(int n, double pprime, double delta) {
  return RadialProfile::power((n - delta) / pprime);
}

// |x|^{delta-n} on B(0,1)
inline RadialProfile f_delta_cutoff(int n, double delta) {
  RadialProfile p = RadialProfile::power(delta - n);
  p.r_hi = 1.0;
  return p;
}

// |x|^{(delta-n)/q}  (Sobolev-example weight)
inline RadialProfile w_delta_sobolev(int n, double qexp, double delta) {
  return RadialProfile::power((delta - n) / qexp);
}

// exp(-|x|^delta)
inline RadialProfile f_delta_smooth(double delta) {
  RadialProfile p;
  p.q = 1.0;
  p.dexp = delta;
  return p;
}

// |grad f_delta| = delta r^{delta-1} exp(-r^delta)
inline RadialProfile grad_f_delta(double delta) {
  RadialProfile p;
  p.coef = delta;
  p.a = delta - 1.0;
  p.q = 1.0;
  p.dexp = delta;
  return p;
}

// u = chi_{|x|>e^e} / (|x|^n log|x| loglog|x|)   (two-weight failure weight)
inline RadialProfile u_failure(int n) {
  RadialProfile p;
  p.a = -n;
  p.b = -1;
  p.c = -1;
  p.r_lo = std::exp(std::exp(1.0));
  return p;
}

// comparison profile for M_{k alpha}(M^{2k-1} u):
//   (log r)^{2k-1} logloglog r / r^{n - k alpha}  on  r > e^{e^e}
inline RadialProfile v_failure_comparison(int n, int k, double alpha) {
  RadialProfile p;
  p.a = k * alpha - n;
  p.b = 2.0 * k - 1.0;
  p.d = 1;
  p.r_lo = std::exp(std::exp(std::exp(1.0)));
  return p;
}

// f = chi_{|x|>e^{e^e}} / (|x|^alpha (log|x|)^2 loglog|x|)
inline RadialProfile f_failure(double alpha) {
  RadialProfile p;
  p.a = -alpha;
  p.b = -2;
  p.c = -1;
  p.r_lo = std::exp(std::exp(std::exp(1.0)));
  return p;
}

}  // namespace profiles

struct RadialIntegral {
  bool divergent = false;
  double value = std::numeric_limits<double>::quiet_NaN();
  std::string growth_law;  // set when divergent
};

// |S^{n-1}| \int g(r) r^{n-1} dr over [lo,hi] intersected with the support.
// Divergence (at either endpoint) is classified symbolically from the
// exponents; convergent integrals are evaluated to the relative tolerance.
inline RadialIntegral radial_integrate(
    int n, const RadialProfile& g, double lo, double hi,
    double rel_tol = 1e-8) {
  RadialIntegral out;
  const double L = std::max(lo, g.r_lo);
  const double H = std::min(hi, g.r_hi);
  if (!(L < H)) {
    out.value = 0;
    return out;
  }
  const double p0 = g.a + n;  // power of r in the integrand r^{a+n-1}

  // Log factors must stay inside their domain on [L,H].
  if (g.b != 0 && L < 1.0)
    throw std::domain_error("radial_integrate: log factor reaches r <= 1");
  if (g.c != 0 && L < std::exp(1.0))
    throw std::domain_error("radial_integrate: loglog factor reaches r <= e");
  if (g.d != 0 && L < std::exp(std::exp(1.0)))
    throw std::domain_error(
        "radial_integrate: logloglog factor reaches r <= e^e");

  // Endpoint r -> 0: integrand ~ r^{p0-1}.
  if (L == 0.0 && g.q >= 0 && p0 <= 0) {
    out.divergent = true;
    out.growth_law = (p0 < 0) ? "~ r_lo^{" + std::to_string(p0) + "} at 0"
                              : "~ log(1/r_lo) at 0";
    return out;
  }

  // Endpoint r -> inf.
  if (std::isinf(H) && g.q == 0) {
    const bool conv = p0 < 0 || (p0 == 0 && (g.b < -1 ||
                     (g.b == -1 && (g.c < -1 || (g.c == -1 && g.d < -1)))));
    if (!conv) {
      out.divergent = true;
      if (p0 > 0)
        out.growth_law = "~ R^{" + std::to_string(p0) + "}";
      else if (g.b > -1)
        out.growth_law = "~ (log R)^{" + std::to_string(g.b + 1) + "}";
      else if (g.c > -1)
        out.growth_law = "~ (loglog R)^{" + std::to_string(g.c + 1) + "}";
      else if (g.d > -1)
        out.growth_law = "~ (logloglog R)^{" + std::to_string(g.d + 1) + "}";
      else
        out.growth_law = "~ log(logloglog R)";
      return out;
    }
  }

  const double Sn = sphere_measure(n);

  // u = log r substitution: integrand e^{p0 u} u^b (log u)^c (loglog u)^d
  // exp(-q e^{dexp u}), times coef.
  auto integrand_u = [&](double u) {
    double v = g.coef * std::exp(p0 * u);
    if (g.b != 0) v *= std::pow(u, g.b);
    if (g.c != 0) v *= std::pow(std::log(u), g.c);
    if (g.d != 0) v *= std::pow(std::log(std::log(u)), g.d);
    if (g.q > 0) {
      const double e = g.dexp * u;
      v *= (e > 700) ? 0.0 : std::exp(-g.q * std::exp(e));
    }
    return std::isfinite(v) ? v : 0.0;
  };

  double lo_u;
  if (L > 0) {
    lo_u = std::log(L);
  } else {
    // p0 > 0 here; clip where e^{p0 u} is negligible next to the peak of
    // e^{p0 u} exp(-q e^{dexp u}) (at u* = log(p0/(q dexp))/dexp).
    if (g.q > 0 && g.dexp < 0)
      throw std::domain_error("radial_integrate: exp factor blows up at 0");
    double peak = 0.0;
    if (g.q > 0) peak = std::log(p0 / (g.q * g.dexp)) / g.dexp;
    lo_u = std::min(peak, 0.0) - 46.0 / p0;
  }

  if (!std::isinf(H)) {
    out.value = Sn * quad::integrate(integrand_u, lo_u, std::log(H), rel_tol);
    return out;
  }

  if (g.q > 0 || p0 < 0) {
    out.value = Sn * quad::integrate_to_inf(integrand_u, lo_u, rel_tol);
    return out;
  }

  // p0 == 0 with convergent log-scale tail: integrate in t = log u.
  auto integrand_t = [&](double t) {
    double v = g.coef * std::exp((g.b + 1) * t);
    if (g.c != 0) v *= std::pow(t, g.c);
    if (g.d != 0) v *= std::pow(std::log(t), g.d);
    return std::isfinite(v) ? v : 0.0;
  };
  if (lo_u <= 0)
    throw std::domain_error(
        "radial_integrate: loglog substitution needs r_lo > 1");
  out.value =
      Sn * quad::integrate_to_inf(integrand_t, std::log(lo_u), rel_tol);
  return out;
}

}  // namespace commlab::lab
