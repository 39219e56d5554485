#pragma once

// Built-in analytic families and their exact cell-average ingestion.
//
// Singular families (|x|^a, log|x|) use closed-form antiderivatives in 1-D
// and adaptive refinement toward the singular point in higher dimensions;
// point-sampling them at the origin cell would be meaningless.

#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "commlab/grid.hpp"
#include "commlab/quadrature.hpp"

namespace commlab::analytic {

struct Function {
  std::string id;
  int dim = 1;
  // Pointwise evaluation (may be +-inf at isolated singular points).
  std::function<double(const std::array<double, kMaxDim>&)> eval;
  // Exact or tolerance-1e-10 mean value over an axis-aligned box.
  std::function<double(const Box&)> cell_average;
};

namespace detail {

inline double radius(const std::array<double, kMaxDim>& x, int n) {
  double s = 0;
  for (int a = 0; a < n; ++a) s += x[a] * x[a];
  return std::sqrt(s);
}

// \int |t|^a dt over [lo,hi], splitting at 0; requires a > -1 near 0.
inline double power_integral_1d(double a, double lo, double hi) {
  auto prim = [a](double t) {  // antiderivative of |t|^a, odd extension
    if (t == 0) return 0.0;
    return std::copysign(std::pow(std::abs(t), a + 1) / (a + 1), t);
  };
  if (lo < 0 && hi > 0 && a <= -1)
    throw std::domain_error("power family: |x|^a not integrable across 0");
  if ((lo == 0 || hi == 0) && a <= -1)
    throw std::domain_error("power family: |x|^a not integrable at 0");
  return prim(hi) - prim(lo);
}

// \int log|t| dt over [lo,hi] (converges across 0).
inline double logabs_integral_1d(double lo, double hi) {
  auto prim = [](double t) {
    if (t == 0) return 0.0;
    return t * std::log(std::abs(t)) - t;
  };
  return prim(hi) - prim(lo);
}

// Adaptive mean over a box for general integrands; refines toward the
// origin when the family is singular there.  Boxes whose closure meets the
// origin are always split (Gauss nodes are interior, but the panel estimate
// is worthless next to the singularity); the origin sliver left at the depth
// cap contributes O(side^{n+a}) and is dropped.
inline double adaptive_box_mean(
    const std::function<double(const std::array<double, kMaxDim>&)>& f,
    const Box& box, bool singular_at_origin, double tol = 1e-10,
    int depth = 0) {
  static constexpr std::array<double, 5> kX = {
      -0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
      0.9061798459386640};
  static constexpr std::array<double, 5> kW = {
      0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
      0.4786286704993665, 0.2369268850561891};
  const int n = box.dim;
  bool touches_origin = singular_at_origin;
  if (singular_at_origin) {
    for (int a = 0; a < n; ++a)
      if (box.lo[a] > 0 || box.hi[a] <= 0) touches_origin = false;
  }
  auto gauss = [&](const Box& b) {
    double acc = 0;
    std::array<double, kMaxDim> x{0, 0, 0};
    const auto node = [&](int a, int i) {
      return 0.5 * (b.lo[a] + b.hi[a]) + 0.5 * (b.hi[a] - b.lo[a]) * kX[i];
    };
    if (n == 1) {
      for (int i = 0; i < 5; ++i) {
        x[0] = node(0, i);
        acc += kW[i] * f(x);
      }
      return acc / 2.0;
    }
    if (n == 2) {
      for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) {
          x[0] = node(0, i);
          x[1] = node(1, j);
          acc += kW[i] * kW[j] * f(x);
        }
      return acc / 4.0;
    }
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j)
        for (int k = 0; k < 5; ++k) {
          x[0] = node(0, i);
          x[1] = node(1, j);
          x[2] = node(2, k);
          acc += kW[i] * kW[j] * kW[k] * f(x);
        }
    return acc / 8.0;
  };

  if (depth >= 48) return touches_origin ? 0.0 : gauss(box);

  const int parts = 1 << n;
  std::array<Box, 8> sub;
  for (int e = 0; e < parts; ++e) {
    Box b = box;
    for (int a = 0; a < n; ++a) {
      const double mid = 0.5 * (box.lo[a] + box.hi[a]);
      if ((e >> a) & 1)
        b.lo[a] = mid;
      else
        b.hi[a] = mid;
    }
    sub[static_cast<size_t>(e)] = b;
  }

  if (touches_origin) {
    double acc = 0;
    for (int e = 0; e < parts; ++e)
      acc += adaptive_box_mean(f, sub[static_cast<size_t>(e)],
                               singular_at_origin, tol, depth + 1) /
             parts;
    return acc;
  }

  const double coarse = gauss(box);
  double fine = 0;
  for (int e = 0; e < parts; ++e)
    fine += gauss(sub[static_cast<size_t>(e)]) / parts;
  if (std::abs(fine - coarse) <= tol * std::max(1.0, std::abs(fine)) * 0.25 ||
      !std::isfinite(fine))
    return fine;
  double acc = 0;
  for (int e = 0; e < parts; ++e)
    acc += adaptive_box_mean(f, sub[static_cast<size_t>(e)],
                             singular_at_origin, tol * 1.4, depth + 1) /
           parts;
  return acc;
}

}  // namespace detail

inline Function constant(int dim, double c) {
  Function fn;
  fn.id = "const:" + std::to_string(c);
  fn.dim = dim;
  fn.eval = [c](const std::array<double, kMaxDim>&) { return c; };
  fn.cell_average = [c](const Box&) { return c; };
  return fn;
}

// Characteristic function of a box.
inline Function char_box(const Box& support) {
  Function fn;
  fn.id = "charfn";
  fn.dim = support.dim;
  fn.eval = [support](const std::array<double, kMaxDim>& x) {
    return support.contains(x) ? 1.0 : 0.0;
  };
  fn.cell_average = [support](const Box& cell) {
    double frac = 1.0;
    for (int a = 0; a < support.dim; ++a) {
      const double lo = std::max(cell.lo[a], support.lo[a]);
      const double hi = std::min(cell.hi[a], support.hi[a]);
      frac *= std::max(0.0, hi - lo) / (cell.hi[a] - cell.lo[a]);
    }
    return frac;
  };
  return fn;
}

// |x|^a, optionally restricted to the unit ball (the f_delta family uses
// a = delta - n with support B(0,1)).
inline Function radial_power(int dim, double a, bool unit_ball_only = false) {
  Function fn;
  fn.id = (unit_ball_only ? "fdelta-power:" : "power:") + std::to_string(a);
  fn.dim = dim;
  fn.eval = [dim, a, unit_ball_only](const std::array<double, kMaxDim>& x) {
    const double r = detail::radius(x, dim);
    if (unit_ball_only && r >= 1.0) return 0.0;
    if (r == 0.0) return a > 0 ? 0.0 : (a == 0 ? 1.0 : HUGE_VAL);
    return std::pow(r, a);
  };
  if (dim == 1 && !unit_ball_only) {
    fn.cell_average = [a](const Box& cell) {
      return detail::power_integral_1d(a, cell.lo[0], cell.hi[0]) /
             (cell.hi[0] - cell.lo[0]);
    };
  } else if (dim == 1) {
    fn.cell_average = [a](const Box& cell) {
      const double lo = std::max(cell.lo[0], -1.0);
      const double hi = std::min(cell.hi[0], 1.0);
      if (hi <= lo) return 0.0;
      return detail::power_integral_1d(a, lo, hi) / (cell.hi[0] - cell.lo[0]);
    };
  } else {
    auto ev = fn.eval;
    fn.cell_average = [ev, a](const Box& cell) {
      return detail::adaptive_box_mean(ev, cell, /*singular=*/a < 0);
    };
  }
  return fn;
}

inline Function log_abs(int dim) {
  Function fn;
  fn.id = "logabs";
  fn.dim = dim;
  fn.eval = [dim](const std::array<double, kMaxDim>& x) {
    const double r = detail::radius(x, dim);
    return r == 0 ? -HUGE_VAL : std::log(r);
  };
  if (dim == 1) {
    fn.cell_average = [](const Box& cell) {
      return detail::logabs_integral_1d(cell.lo[0], cell.hi[0]) /
             (cell.hi[0] - cell.lo[0]);
    };
  } else {
    auto ev = fn.eval;
    fn.cell_average = [ev](const Box& cell) {
      return detail::adaptive_box_mean(ev, cell, /*singular=*/true);
    };
  }
  return fn;
}

// exp(-|x|^delta), the smooth Sobolev test family.
inline Function exp_delta(int dim, double delta) {
  Function fn;
  fn.id = "expdelta:" + std::to_string(delta);
  fn.dim = dim;
  fn.eval = [dim, delta](const std::array<double, kMaxDim>& x) {
    return std::exp(-std::pow(detail::radius(x, dim), delta));
  };
  auto ev = fn.eval;
  fn.cell_average = [ev](const Box& cell) {
    return detail::adaptive_box_mean(ev, cell, /*singular=*/false, 1e-11);
  };
  return fn;
}

// C-infinity bump supported on |x| < radius.
inline Function smooth_bump(int dim, double radius = 1.0) {
  Function fn;
  fn.id = "bump:" + std::to_string(radius);
  fn.dim = dim;
  fn.eval = [dim, radius](const std::array<double, kMaxDim>& x) {
    const double t = detail::radius(x, dim) / radius;
    if (t >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - t * t));
  };
  auto ev = fn.eval;
  fn.cell_average = [ev](const Box& cell) {
    return detail::adaptive_box_mean(ev, cell, /*singular=*/false, 1e-11);
  };
  return fn;
}

// Coordinate function x_0 (handy in tests; midpoint averages are exact).
inline Function coordinate(int dim) {
  Function fn;
  fn.id = "coord";
  fn.dim = dim;
  fn.eval = [](const std::array<double, kMaxDim>& x) { return x[0]; };
  fn.cell_average = [](const Box& cell) {
    return 0.5 * (cell.lo[0] + cell.hi[0]);
  };
  return fn;
}

inline SampledFunction sample(const Function& fn, const DyadicGrid& grid,
                              const Box& box, int resolution) {
  if (fn.dim != grid.dim)
    throw std::invalid_argument("sample: function/grid dimension mismatch");
  SampledFunction out = SampledFunction::zeros_on_box(grid, box, -resolution);
  const int n = grid.dim;
  const double h = out.cell_side();
  const Box dom = out.domain();
  auto& s = out.samples();
  std::int64_t idx = 0;
  Index c{0, 0, 0};
  std::function<void(int)> rec = [&](int axis) {
    if (axis == n) {
      Box cell;
      cell.dim = n;
      for (int a = 0; a < n; ++a) {
        cell.lo[a] = dom.lo[a] + h * static_cast<double>(c[a]);
        cell.hi[a] = cell.lo[a] + h;
      }
      s[static_cast<size_t>(idx++)] = fn.cell_average(cell);
      return;
    }
    for (c[axis] = 0; c[axis] < out.extent()[axis]; ++c[axis]) rec(axis + 1);
  };
  rec(0);
  return out;
}

// Parses CLI ids: const:c | charfn:a:b | power:a | fdelta:d | logabs |
// expdelta:d | bump[:r] | coord | wdelta:d:pprime.
inline Function parse(const std::string& id, int dim) {
  auto next = [](std::string& rest) {
    const auto pos = rest.find(':');
    std::string tok = rest.substr(0, pos);
    rest = (pos == std::string::npos) ? std::string() : rest.substr(pos + 1);
    return tok;
  };
  std::string rest = id;
  const std::string head = next(rest);
  if (head == "const") return constant(dim, std::stod(next(rest)));
  if (head == "charfn") {
    const double a = std::stod(next(rest));
    const double b = std::stod(next(rest));
    return char_box(Box::cube(dim, a, b));
  }
  if (head == "power") return radial_power(dim, std::stod(next(rest)));
  if (head == "fdelta") {
    const double d = std::stod(next(rest));
    return radial_power(dim, d - dim, /*unit_ball_only=*/true);
  }
  if (head == "wdelta") {
    const double d = std::stod(next(rest));
    const double pprime = std::stod(next(rest));
    return radial_power(dim, (dim - d) / pprime);
  }
  if (head == "logabs") return log_abs(dim);
  if (head == "expdelta") return exp_delta(dim, std::stod(next(rest)));
  if (head == "bump")
    return smooth_bump(dim, rest.empty() ? 1.0 : std::stod(next(rest)));
  if (head == "coord") return coordinate(dim);
  throw std::invalid_argument("unknown function id: " + id);
}

}  // namespace commlab::analytic
