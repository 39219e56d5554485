#pragma once

// The sharpness experiments: weighted Sobolev sweep, one-weight fractional
// commutator sweep, the two-weight failure study, log-log slope fitting, and
// radial evaluation helpers (ball A_{p,q} constants, angular kernel
// averages, a radial Orlicz maximal surrogate).

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "commlab/orlicz.hpp"
#include "commlab/quadrature.hpp"
#include "commlab/radial.hpp"

namespace commlab::lab {

struct SlopeFit {
  double slope = 0;
  double intercept = 0;
  double residual = 0;  // max absolute deviation on transformed coordinates
};

enum class FitTransform { loglog, linear };

inline SlopeFit slope_fit(const std::vector<std::pair<double, double>>& pts,
                          FitTransform transform = FitTransform::loglog) {
  if (pts.size() < 3)
    throw std::invalid_argument("slope_fit: need at least 3 points");
  std::vector<double> xs, ys;
  for (const auto& [x, y] : pts) {
    if (transform == FitTransform::loglog) {
      if (!(x > 0) || !(y > 0))
        throw std::domain_error("slope_fit: log-log needs positive points");
      xs.push_back(std::log(x));
      ys.push_back(std::log(y));
    } else {
      xs.push_back(x);
      ys.push_back(y);
    }
  }
  const auto n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  SlopeFit fit;
  const double denom = n * sxx - sx * sx;
  if (denom == 0) throw std::domain_error("slope_fit: degenerate abscissae");
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  for (size_t i = 0; i < xs.size(); ++i)
    fit.residual = std::max(
        fit.residual, std::abs(ys[i] - fit.slope * xs[i] - fit.intercept));
  return fit;
}

struct SweepResult {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  double slope = std::numeric_limits<double>::quiet_NaN();
  double intercept = std::numeric_limits<double>::quiet_NaN();
  double residual = std::numeric_limits<double>::quiet_NaN();
  std::string slope_desc;
  std::map<std::string, double> extra;      // scalar side results
  std::map<std::string, std::string> meta;  // parameters, runtime, notes

  bool has_slope() const { return std::isfinite(slope); }

  void write_csv(std::ostream& os) const {
    os.precision(12);
    for (size_t c = 0; c < columns.size(); ++c)
      os << columns[c] << (c + 1 < columns.size() ? "," : "\n");
    for (const auto& row : rows) {
      for (size_t c = 0; c < row.size(); ++c)
        os << row[c] << (c + 1 < row.size() ? "," : "\n");
    }
    if (has_slope()) os << "#slope," << slope << "," << residual << "\n";
  }
};

// [w]_{A_{p,q}} for w = |x|^m over balls centered at the origin (scale-free,
// so the sup is the common value).  p = 1 uses the A_{1,q} form with the
// essential infimum; it requires m < 0.
inline double apq_ball_constant(int n, double p, double q, double m) {
  if (!(m * q + n > 0))
    throw std::domain_error("apq_ball_constant: w^q not integrable at 0");
  const double avg_wq = n / (m * q + n);  // times s^{mq}
  if (p == 1.0) {
    if (!(m < 0))
      throw std::domain_error(
          "apq_ball_constant: A_{1,q} version needs a decreasing power");
    return avg_wq;  // (inf w)^{-q} = s^{-mq}
  }
  const double pprime = p / (p - 1);
  if (!(n - m * pprime > 0))
    throw std::domain_error("apq_ball_constant: w^{-p'} not integrable at 0");
  const double avg_dual = n / (n - m * pprime);  // times s^{-mp'}
  return avg_wq * std::pow(avg_dual, q / pprime);
}

// ---------------------------------------------------------------------------
// Weighted Sobolev sharpness (smooth exponential family)

inline SweepResult sweep_sobolev(int n, double p,
                                 const std::vector<double>& deltas,
                                 double rel_tol = 1e-8) {
  if (n <= 1) throw std::invalid_argument("sweep_sobolev: need n > 1");
  if (!(p >= 1 && p < n))
    throw std::invalid_argument("sweep_sobolev: need 1 <= p < n");
  const double q = 1.0 / (1.0 / p - 1.0 / n);
  SweepResult res;
  res.columns = {"delta", "wq_norm", "grad_norm", "norm_ratio",
                 "apq_constant"};
  res.meta["experiment"] = "sobolev";
  res.meta["n"] = std::to_string(n);
  res.meta["p"] = std::to_string(p);
  res.meta["q"] = std::to_string(q);
  std::vector<std::pair<double, double>> pts;
  for (double delta : deltas) {
    if (!(delta > 0 && delta <= 1))
      throw std::invalid_argument("sweep_sobolev: delta in (0,1]");
    const RadialProfile w = profiles::w_delta_sobolev(n, q, delta);
    const RadialProfile f = profiles::f_delta_smooth(delta);
    const RadialProfile grad = profiles::grad_f_delta(delta);
    const RadialIntegral wq =
        radial_integrate(n, (w * f).pow(q), 0, INFINITY, rel_tol);
    const RadialIntegral gp =
        radial_integrate(n, (w * grad).pow(p), 0, INFINITY, rel_tol);
    if (wq.divergent || gp.divergent)
      throw std::runtime_error("sweep_sobolev: unexpected divergence");
    const double wq_norm = std::pow(wq.value, 1.0 / q);
    const double grad_norm = std::pow(gp.value, 1.0 / p);
    const double apq = apq_ball_constant(n, p, q, (delta - n) / q);
    const double ratio = wq_norm / grad_norm;
    res.rows.push_back({delta, wq_norm, grad_norm, ratio, apq});
    pts.emplace_back(1.0 / delta, ratio);
  }
  if (pts.size() >= 3) {
    const SlopeFit fit = slope_fit(pts, FitTransform::loglog);
    res.slope = fit.slope;
    res.intercept = fit.intercept;
    res.residual = fit.residual;
    res.slope_desc = "log(norm_ratio) vs log(1/delta); sharp value 1/n'";
  }
  return res;
}

// ---------------------------------------------------------------------------
// One-weight fractional commutator sharpness (lower-bound chain)

// Pointwise lower bound for [b, I_alpha] f_delta at |x| = r >= 2 with
// b = log|x|:  |S^{n-1}| (delta log r + 1) / (delta^2 (1+r)^{n-alpha}).
inline double commutator_chain_lower(int n, double alpha, double delta,
                                     double r) {
  return sphere_measure(n) * (delta * std::log(r) + 1.0) /
         (delta * delta * std::pow(1.0 + r, n - alpha));
}

// ||f_delta||_{L^p(w_delta^p)} = (|S^{n-1}|/delta)^{1/p}.
inline double f_delta_source_norm(int n, double p, double delta) {
  return std::pow(sphere_measure(n) / delta, 1.0 / p);
}

// || chain lower bound ||_{L^q(w_delta^q)} over |x| > 2, by log-substituted
// quadrature; the integrand decays like e^{-delta q u / p'}.
inline double commutator_lower_norm(int n, double alpha, double p,
                                    double delta, double rel_tol = 1e-9) {
  const double q = 1.0 / (1.0 / p - alpha / n);
  const double pprime = p / (p - 1);
  const double Sn = sphere_measure(n);
  const double beta = delta * q / pprime;
  auto integrand = [&](double u) {
    // (chain lower)^q * w^q * r^n in u = log r; the pure power parts cancel
    // to e^{-beta u} (guaranteed by 1/p - 1/q = alpha/n).
    const double corr = std::pow(1.0 + std::exp(-u), (alpha - n) * q);
    const double osc = std::pow(delta * u + 1.0, q);
    return osc * corr * std::exp(-beta * u);
  };
  const double integral =
      quad::integrate_to_inf(integrand, std::log(2.0), rel_tol);
  const double scale = std::pow(Sn, q) / std::pow(delta, 2.0 * q);
  return std::pow(Sn * scale * integral, 1.0 / q);
}

inline SweepResult sweep_frac_commutator(int n, double alpha, double p,
                                         const std::vector<double>& deltas,
                                         double rel_tol = 1e-9) {
  if (!(alpha > 0 && alpha < n))
    throw std::invalid_argument("sweep_frac_commutator: 0 < alpha < n");
  if (!(p > 1 && p < static_cast<double>(n) / alpha))
    throw std::invalid_argument("sweep_frac_commutator: 1 < p < n/alpha");
  const double q = 1.0 / (1.0 / p - alpha / n);
  const double pprime = p / (p - 1);
  if (pprime / q < 1.0)
    throw std::invalid_argument(
        "sweep_frac_commutator: p'/q < 1; use the duality reduction "
        "[b,I_a]^* = -[b,I_a] (out of scope)");
  SweepResult res;
  res.columns = {"delta", "commutator_lower", "source_norm", "norm_ratio",
                 "apq_constant"};
  res.meta["experiment"] = "frac_commutator";
  res.meta["n"] = std::to_string(n);
  res.meta["alpha"] = std::to_string(alpha);
  res.meta["p"] = std::to_string(p);
  res.meta["q"] = std::to_string(q);
  std::vector<std::pair<double, double>> pts;
  for (double delta : deltas) {
    if (!(delta > 0 && delta <= 1))
      throw std::invalid_argument("sweep_frac_commutator: delta in (0,1]");
    const double numer = commutator_lower_norm(n, alpha, p, delta, rel_tol);
    const double denom = f_delta_source_norm(n, p, delta);
    const double apq =
        apq_ball_constant(n, p, q, (n - delta) / pprime);
    const double ratio = numer / denom;
    res.rows.push_back({delta, numer, denom, ratio, apq});
    pts.emplace_back(1.0 / delta, ratio);
  }
  if (pts.size() >= 3) {
    const SlopeFit fit = slope_fit(pts, FitTransform::loglog);
    res.slope = fit.slope;
    res.intercept = fit.intercept;
    res.residual = fit.residual;
    res.slope_desc =
        "log(norm_ratio) vs log(1/delta); sharp value 2 - alpha/n";
  }
  return res;
}

// Exact double-integral evaluation of the commutator lower bound for radial
// cross-checks: [b, I_alpha] f_delta(x) at |x| = r >= 2 equals
//   int_0^1 (log r - log rho) rho^{delta-1} K(r,rho) drho
// with K the spherical kernel average (exact in n = 1, closed-form in n = 3,
// numeric angular quadrature in n = 2).
inline double angular_kernel_average(int n, double alpha, double r,
                                     double rho) {
  if (n == 1)
    return std::pow(std::abs(r - rho), alpha - 1.0) +
           std::pow(r + rho, alpha - 1.0);
  if (n == 3) {
    if (alpha == 1.0)
      return 2.0 * std::numbers::pi / (r * rho) *
             std::log((r + rho) / std::abs(r - rho));
    return 2.0 * std::numbers::pi / (r * rho) *
           (std::pow(r + rho, alpha - 1.0) -
            std::pow(std::abs(r - rho), alpha - 1.0)) /
           (alpha - 1.0);
  }
  if (n == 2) {
    auto f = [&](double theta) {
      const double s2 = r * r + rho * rho - 2.0 * r * rho * std::cos(theta);
      return std::pow(s2, 0.5 * (alpha - 2.0));
    };
    return 2.0 * quad::integrate(f, 0.0, std::numbers::pi, 1e-10);
  }
  throw std::invalid_argument("angular_kernel_average: n <= 3");
}

inline double commutator_exact_radial(int n, double alpha, double delta,
                                      double r) {
  auto integrand = [&](double rho) {
    return (std::log(r) - std::log(rho)) * std::pow(rho, delta - 1.0) *
           angular_kernel_average(n, alpha, r, rho);
  };
  // rho^{delta-1} log(1/rho) is integrable; substitute rho = e^v.
  auto in_v = [&](double v) { return integrand(std::exp(v)) * std::exp(v); };
  return quad::integrate(in_v, -60.0 / delta, 0.0, 1e-9);
}

// ---------------------------------------------------------------------------
// Two-weight failure study (delta = 0 endpoint)

struct TwoWeightFailure {
  SweepResult sweep;
  bool rhs_converges = false;       // symbolic classification of f^k v
  bool lhs_diverges = false;        // symbolic classification of u-mass
  bool chain_diverges = false;      // the I_alpha(bf) minorant
  double rhs_total = 0;             // full improper integral over r > cutoff
  double lhs_growth_slope = 0;      // LHS vs logloglog R, ~ 1
};

inline TwoWeightFailure two_weight_failure(int n, double alpha, int k,
                                           const std::vector<double>& radii,
                                           double fit_cutoff = 1e10) {
  if (!(k > 1 && static_cast<double>(k) < static_cast<double>(n) / alpha))
    throw std::invalid_argument("two_weight_failure: need 1 < k < n/alpha");
  for (size_t i = 0; i + 1 < radii.size(); ++i)
    if (!(radii[i] < radii[i + 1]))
      throw std::invalid_argument("two_weight_failure: radii must increase");
  const double support = std::exp(std::exp(std::exp(1.0)));
  if (!radii.empty() && radii.front() < support)
    throw std::invalid_argument(
        "two_weight_failure: radii must exceed e^{e^e}");

  TwoWeightFailure out;
  const RadialProfile u = profiles::u_failure(n);
  const RadialProfile v = profiles::v_failure_comparison(n, k, alpha);
  const RadialProfile f = profiles::f_failure(alpha);
  const RadialProfile rhs = f.pow(k) * v;

  out.rhs_converges =
      !radial_integrate(n, rhs, fit_cutoff, INFINITY).divergent;
  {
    const RadialIntegral full = radial_integrate(n, rhs, fit_cutoff, INFINITY);
    if (!full.divergent) out.rhs_total = full.value;
  }
  const RadialIntegral lhs_cls = radial_integrate(n, u, u.r_lo, INFINITY);
  out.lhs_diverges = lhs_cls.divergent;

  // Minorant of I_alpha(bf)(x): mass of 1/(r^n log r loglog r) beyond |x|.
  RadialProfile chain;
  chain.a = -n;
  chain.b = -1;
  chain.c = -1;
  chain.r_lo = support;
  out.chain_diverges =
      radial_integrate(n, chain, support, INFINITY).divergent;

  out.sweep.columns = {"R", "rhs_partial", "rhs_diff", "lhs_mass"};
  out.sweep.meta["experiment"] = "two_weight_failure";
  out.sweep.meta["n"] = std::to_string(n);
  out.sweep.meta["alpha"] = std::to_string(alpha);
  out.sweep.meta["k"] = std::to_string(k);
  double prev_rhs = 0;
  std::vector<std::pair<double, double>> lhs_pts;
  for (double R : radii) {
    const double rhs_partial =
        radial_integrate(n, rhs, fit_cutoff, R).value;
    const double lhs_mass = radial_integrate(n, u, u.r_lo, R).value;
    const double diff = rhs_partial - prev_rhs;
    prev_rhs = rhs_partial;
    out.sweep.rows.push_back({R, rhs_partial, diff, lhs_mass});
    lhs_pts.emplace_back(std::log(std::log(std::log(R))), lhs_mass);
  }
  if (lhs_pts.size() >= 3) {
    const SlopeFit fit = slope_fit(lhs_pts, FitTransform::linear);
    out.lhs_growth_slope = fit.slope;
    out.sweep.slope = fit.slope;
    out.sweep.intercept = fit.intercept;
    out.sweep.residual = fit.residual;
    out.sweep.slope_desc = "lhs_mass vs logloglog R; growth law slope";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Radial Orlicz maximal surrogate for the failure example

// M_{Phi,beta} g at radius r approximated by the sup over origin-centered
// balls B(0,s), s >= r: (c_n s^n)^{beta/n} ||g||_{Phi,B(0,s)} with the
// Luxemburg norm evaluated by radial quadrature.
inline double radial_orlicz_maximal_at(const RadialProfile& g,
                                       const orlicz::YoungFunction& phi,
                                       double beta, int n, double r,
                                       int sup_points = 25) {
  const double ball_coef = sphere_measure(n) / n;  // |B(0,1)|
  auto ball_norm = [&](double s) {
    const double vol = ball_coef * std::pow(s, n);
    auto constraint = [&](double lambda) {
      auto in_u = [&](double u) {
        const double rr = std::exp(u);
        const double val = g.eval(rr);
        return phi(val / lambda) * std::pow(rr, n);
      };
      const double lo = std::log(std::max(g.r_lo, 1e-300));
      if (!(lo < std::log(s))) return 0.0;
      return sphere_measure(n) *
             quad::integrate(in_u, lo, std::log(s), 1e-9) / vol;
    };
    // ess-sup of g on the ball bounds the bracket
    double gsup = std::max(g.eval(g.r_lo), g.eval(std::min(s, g.r_hi)));
    for (int i = 1; i < 16; ++i) {
      const double rr =
          g.r_lo * std::pow(std::min(s, g.r_hi) / g.r_lo, i / 16.0);
      gsup = std::max(gsup, g.eval(rr));
    }
    if (gsup == 0) return 0.0;
    double hi = gsup * std::max(1.0, 1.0 / phi.inverse(1.0));
    double lo = gsup / phi.inverse(1e10);
    int guard = 0;
    while (constraint(lo) < 1.0 && guard++ < 80) lo *= 0.5;
    guard = 0;
    while (constraint(hi) > 1.0 && guard++ < 80) hi *= 2.0;
    for (int i = 0; i < 90 && (hi - lo) > 1e-8 * hi; ++i) {
      const double mid = 0.5 * (lo + hi);
      (constraint(mid) > 1.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };
  double best = 0;
  for (int i = 0; i < sup_points; ++i) {
    const double s = r * std::pow(64.0, static_cast<double>(i) /
                                            (sup_points - 1));  // r..64r
    const double vol = ball_coef * std::pow(s, n);
    best = std::max(best, std::pow(vol, beta / n) * ball_norm(s));
  }
  return best;
}

}  // namespace commlab::lab
