#pragma once

// The integral operators: Hilbert transform (exact pairwise cell kernel),
// dyadic singular integrals (Haar shifts) with truncated maximal variants,
// fractional integrals (continuous and dyadic), and commutators [b,T]
// including the Cauchy-contour representation.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>
#include <random>
#include <stdexcept>
#include <variant>
#include <vector>

#include "commlab/analytic.hpp"
#include "commlab/fft.hpp"
#include "commlab/grid.hpp"

namespace commlab::ops {

namespace detail {

// G(u) = \int ln|u| du = u ln|u| - u, with G(0) = 0.
inline double log_primitive(double u) {
  return u == 0 ? 0.0 : u * (std::log(std::abs(u)) - 1.0);
}

// P(u) = double primitive of |u|^{alpha-1}: |u|^{alpha+1} / (alpha(alpha+1)).
inline double frac_primitive(double u, double alpha) {
  return std::pow(std::abs(u), alpha + 1.0) / (alpha * (alpha + 1.0));
}

}  // namespace detail

// Hf(x) = (1/pi) p.v. \int f(y)/(x-y) dy, cell-averaged on the output cells.
// The cell-cell interaction integrals are exact; the diagonal cell vanishes
// by the symmetric principal value.
namespace detail {

// Discrete Toeplitz apply with direct O(N^2) summation for small N and FFT
// convolution beyond that (bit-identical under scaling by powers of two
// either way).
inline std::vector<double> convolve(const std::vector<double>& f,
                                    const std::vector<double>& kernel) {
  const auto n = static_cast<std::int64_t>(f.size());
  if (n > 2048) return fft::toeplitz_apply(f, kernel);
  std::vector<double> out(f.size(), 0.0);
  for (std::int64_t i = 0; i < n; ++i) {
    double acc = 0;
    for (std::int64_t j = 0; j < n; ++j)
      acc += f[static_cast<size_t>(j)] *
             kernel[static_cast<size_t>(i - j + n - 1)];
    out[static_cast<size_t>(i)] = acc;
  }
  return out;
}

}  // namespace detail

inline SampledFunction hilbert(const SampledFunction& f) {
  if (f.dim() != 1)
    throw std::invalid_argument("hilbert: one-dimensional only");
  const auto n = static_cast<std::int64_t>(f.samples().size());
  const double h = f.cell_side();
  // K[d] = G((d+1)h) - 2 G(dh) + G((d-1)h) is the exact double integral of
  // 1/(x-y) over cells at offset d; antisymmetric in d, K[0] = 0.
  std::vector<double> kern(static_cast<size_t>(2 * n - 1));
  for (std::int64_t d = -(n - 1); d <= n - 1; ++d) {
    const double dd = static_cast<double>(d);
    kern[static_cast<size_t>(d + n - 1)] =
        detail::log_primitive((dd + 1) * h) -
        2 * detail::log_primitive(dd * h) +
        detail::log_primitive((dd - 1) * h);
  }
  SampledFunction out = f;
  out.samples() = detail::convolve(f.samples(), kern);
  const double scale = 1.0 / (std::numbers::pi * h);
  for (double& v : out.samples()) v *= scale;
  return out;
}

// Coefficient pair (h_Q, g_Q), each constant on the 2^{tau n} descendants of
// Q at tau levels down, listed in row-major order.
struct HaarPair {
  std::vector<double> h;
  std::vector<double> g;
};

class HaarShift {
 public:
  using Rule = std::function<HaarPair(const DyadicCube&)>;

  HaarShift(int tau, DyadicGrid grid, Rule rule)
      : tau_(tau), grid_(grid), rule_(std::move(rule)) {
    if (tau_ < 1) throw std::invalid_argument("HaarShift: tau >= 1");
  }

  // Petermichl's shift: h_Q the L^2-normalized Haar function,
  // g_Q = 2^{-1/2} (h_{Q_-} - h_{Q_+}); order tau = 2, one dimension.
  static HaarShift petermichl(DyadicGrid grid) {
    if (grid.dim != 1)
      throw std::invalid_argument("petermichl: one-dimensional only");
    return HaarShift(2, grid, [](const DyadicCube& q) {
      const double s = 1.0 / std::sqrt(q.volume());
      HaarPair pair;
      pair.h = {s, s, -s, -s};
      pair.g = {s, -s, -s, s};
      return pair;
    });
  }

  HaarShift adjoint() const {
    Rule base = rule_;
    return HaarShift(tau_, grid_, [base](const DyadicCube& q) {
      HaarPair p = base(q);
      std::swap(p.h, p.g);
      return p;
    });
  }

  int tau() const { return tau_; }
  const DyadicGrid& grid() const { return grid_; }

  HaarPair coefficients(const DyadicCube& q) const {
    HaarPair p = rule_(q);
    validate(q, p);
    return p;
  }

 private:
  void validate(const DyadicCube& q, const HaarPair& p) const {
    const size_t blocks = size_t{1} << (tau_ * grid_.dim);
    if (p.h.size() != blocks || p.g.size() != blocks)
      throw std::invalid_argument("HaarShift: wrong block count");
    const double bound = 1.0 / std::sqrt(q.volume()) * (1 + 1e-12);
    double mh = 0, mg = 0;
    for (size_t i = 0; i < blocks; ++i) {
      if (std::abs(p.h[i]) > bound || std::abs(p.g[i]) > bound)
        throw std::invalid_argument(
            "HaarShift: sup-norm bound |Q|^{-1/2} violated");
      mh += p.h[i];
      mg += p.g[i];
    }
    if (std::abs(mh) > 1e-10 * bound * static_cast<double>(blocks) ||
        std::abs(mg) > 1e-10 * bound * static_cast<double>(blocks))
      throw std::invalid_argument("HaarShift: mean-zero condition violated");
  }

  int tau_;
  DyadicGrid grid_;
  Rule rule_;
};

namespace detail {

// Applies one cube's term <f,h_Q> g_Q into acc; returns the pairing.
inline void apply_cube(const HaarShift& T, const SampledFunction& f,
                       const PrefixSums& ps, const DyadicCube& q,
                       std::vector<double>& acc) {
  const int n = f.dim();
  const int tau = T.tau();
  const HaarPair pair = T.coefficients(q);
  const int sub = q.level - tau;  // block level
  if (sub < f.cell_level())
    throw std::invalid_argument(
        "haar_shift: cube blocks finer than the sample grid");
  const std::int64_t bs = std::int64_t{1} << (sub - f.cell_level());
  const std::int64_t per_axis = std::int64_t{1} << tau;
  const double cellvol = f.cell_volume();

  double pairing = 0;
  Index b{0, 0, 0};
  std::vector<CellBox> boxes;
  boxes.reserve(pair.h.size());
  std::function<void(int, size_t&)> rec = [&](int axis, size_t& blk) {
    if (axis == n) {
      CellBox box;
      for (int a = 0; a < n; ++a) {
        box.lo[a] = ((q.index[a] << tau) + b[a]) * bs;
        box.hi[a] = box.lo[a] + bs;
      }
      for (int a = n; a < kMaxDim; ++a) box.hi[a] = box.lo[a] + 1;
      pairing += pair.h[blk] * ps.sum(box) * cellvol;
      boxes.push_back(box);
      ++blk;
      return;
    }
    for (b[axis] = 0; b[axis] < per_axis; ++b[axis]) rec(axis + 1, blk);
  };
  size_t blk = 0;
  rec(0, blk);

  for (size_t i = 0; i < boxes.size(); ++i) {
    const double add = pairing * pair.g[i];
    if (add == 0) continue;
    f.for_each_cell(boxes[i], [&](std::int64_t c) {
      acc[static_cast<size_t>(c)] += add;
    });
  }
}

}  // namespace detail

// T^d f = sum over contained dyadic cubes with level in [l_min, l_max] of
// <f, h_Q> g_Q.
inline SampledFunction haar_shift_apply(const HaarShift& T,
                                        const SampledFunction& f, int l_min,
                                        int l_max) {
  if (!(T.grid() == f.grid()))
    throw std::invalid_argument("haar_shift_apply: grid mismatch");
  if (l_min < f.cell_level() + T.tau())
    throw std::invalid_argument(
        "haar_shift_apply: window below the representable range");
  PrefixSums ps(f);
  SampledFunction out = f.map([](double) { return 0.0; });
  auto& acc = out.samples();
  cubes_touching(
      f, l_min, l_max,
      [&](const DyadicCube& q) { detail::apply_cube(T, f, ps, q, acc); },
      /*contained=*/true);
  return out;
}

inline SampledFunction haar_shift_apply(const HaarShift& T,
                                        const SampledFunction& f) {
  return haar_shift_apply(T, f, f.cell_level() + T.tau(),
                          top_contained_level(f));
}

// T^d_* f(x) = sup_l |T^d_l f(x)|, T^d_l collecting cubes with level >= l.
inline SampledFunction haar_shift_truncated_max(const HaarShift& T,
                                                const SampledFunction& f,
                                                int l_min, int l_max) {
  if (l_min < f.cell_level() + T.tau())
    throw std::invalid_argument(
        "haar_shift_truncated_max: window below the representable range");
  PrefixSums ps(f);
  std::vector<double> partial(f.samples().size(), 0.0);
  std::vector<double> best(f.samples().size(), 0.0);  // includes empty sum
  for (int l = l_max; l >= l_min; --l) {
    cubes_touching(
        f, l, l,
        [&](const DyadicCube& q) { detail::apply_cube(T, f, ps, q, partial); },
        /*contained=*/true);
    for (size_t i = 0; i < partial.size(); ++i)
      best[i] = std::max(best[i], std::abs(partial[i]));
  }
  SampledFunction out = f.map([](double) { return 0.0; });
  out.samples() = std::move(best);
  return out;
}

inline SampledFunction haar_shift_truncated_max(const HaarShift& T,
                                                const SampledFunction& f) {
  return haar_shift_truncated_max(T, f, f.cell_level() + T.tau(),
                                  top_contained_level(f));
}

// I_alpha f = f * |x|^{alpha-n}, cell-averaged.  In one dimension every
// cell pair uses the exact double primitive; in higher dimensions pairs
// within two cells of each other use adaptive unit-cube integrals and the
// rest the midpoint kernel value.
inline SampledFunction frac_integral(const SampledFunction& f, double alpha) {
  const int n = f.dim();
  if (!(alpha > 0 && alpha < n))
    throw std::invalid_argument("frac_integral: need 0 < alpha < n");
  const double h = f.cell_side();
  SampledFunction out = f;
  auto& ov = out.samples();
  const auto& fv = f.samples();

  if (n == 1) {
    const auto cnt = static_cast<std::int64_t>(fv.size());
    std::vector<double> kern(static_cast<size_t>(2 * cnt - 1));
    for (std::int64_t d = -(cnt - 1); d <= cnt - 1; ++d) {
      const double dd = static_cast<double>(d);
      kern[static_cast<size_t>(d + cnt - 1)] =
          detail::frac_primitive((dd + 1) * h, alpha) -
          2 * detail::frac_primitive(dd * h, alpha) +
          detail::frac_primitive((dd - 1) * h, alpha);
    }
    ov = detail::convolve(fv, kern);
    for (double& v : ov) v /= h;
    return out;
  }

  // Offset-indexed kernel: U(d) = mean over x in C of \int_{C+d} |x-y|^{a-n}
  // on unit cells, scaled by h^alpha.
  const auto& e = f.extent();
  std::vector<double> U;
  Index span{0, 0, 0};
  for (int a = 0; a < n; ++a) span[a] = e[a];
  const std::int64_t w1 = 2 * span[1] - 1;
  const std::int64_t w2 = (n > 2) ? 2 * span[2] - 1 : 1;
  U.assign(static_cast<size_t>((2 * span[0] - 1) * w1 * w2), 0.0);
  auto Uat = [&](std::int64_t d0, std::int64_t d1,
                 std::int64_t d2) -> double& {
    return U[static_cast<size_t>(((d0 + span[0] - 1) * w1 + (d1 + span[1] - 1)) *
                                     w2 +
                                 (n > 2 ? d2 + span[2] - 1 : 0))];
  };
  // Near-diagonal unit-cell interactions are expensive adaptive integrals;
  // cache them per (n, alpha, offset) across calls.
  static std::map<std::tuple<int, double, std::int64_t, std::int64_t,
                             std::int64_t>,
                  double>
      near_cache;
  static std::mutex near_mutex;
  auto kernel_unit = [&](const Index& d) {
    double r2 = 0;
    for (int a = 0; a < n; ++a) r2 += static_cast<double>(d[a] * d[a]);
    std::int64_t linf = 0;
    for (int a = 0; a < n; ++a)
      linf = std::max<std::int64_t>(linf, std::abs(d[a]));
    if (linf > 2) return std::pow(std::sqrt(r2), alpha - n);
    const auto key = std::make_tuple(n, alpha, d[0], d[1], d[2]);
    {
      std::lock_guard<std::mutex> lock(near_mutex);
      const auto it = near_cache.find(key);
      if (it != near_cache.end()) return it->second;
    }
    // Correlation form: the cell-pair interaction over unit cells is
    //   int_{u in d+[-1,1]^n} |u|^{alpha-n} prod_i (1 - |u_i - d_i|) du,
    // a single adaptive integral with the singularity at u = 0.
    Box box;
    box.dim = n;
    for (int a = 0; a < n; ++a) {
      box.lo[a] = static_cast<double>(d[a]) - 1.0;
      box.hi[a] = static_cast<double>(d[a]) + 1.0;
    }
    const Index dd = d;
    auto ev = [n, alpha, dd](const std::array<double, kMaxDim>& u) {
      double s = 0;
      double tri = 1;
      for (int a = 0; a < n; ++a) {
        s += u[a] * u[a];
        tri *= 1.0 - std::abs(u[a] - static_cast<double>(dd[a]));
      }
      const double r = std::sqrt(s);
      return (r == 0 ? HUGE_VAL : std::pow(r, alpha - n)) * tri;
    };
    const double val =
        analytic::detail::adaptive_box_mean(ev, box, true, 1e-9) *
        std::pow(2.0, n);
    std::lock_guard<std::mutex> lock(near_mutex);
    near_cache.emplace(key, val);
    return val;
  };
  Index d{0, 0, 0};
  std::function<void(int)> fill = [&](int axis) {
    if (axis == n) {
      Uat(d[0], n > 1 ? d[1] : 0, n > 2 ? d[2] : 0) = kernel_unit(d);
      return;
    }
    for (d[axis] = -(span[axis] - 1); d[axis] <= span[axis] - 1; ++d[axis])
      fill(axis + 1);
  };
  fill(0);

  const double scale = std::pow(h, alpha);
  Index xi{0, 0, 0}, yj{0, 0, 0};
  std::int64_t oi = 0;
  std::function<void(int)> outer = [&](int axis) {
    if (axis == n) {
      double acc = 0;
      std::int64_t ij = 0;
      std::function<void(int)> inner = [&](int ax) {
        if (ax == n) {
          acc += fv[static_cast<size_t>(ij++)] *
                 Uat(yj[0] - xi[0], n > 1 ? yj[1] - xi[1] : 0,
                     n > 2 ? yj[2] - xi[2] : 0);
          return;
        }
        for (yj[ax] = 0; yj[ax] < e[ax]; ++yj[ax]) inner(ax + 1);
      };
      inner(0);
      ov[static_cast<size_t>(oi++)] = scale * acc;
      return;
    }
    for (xi[axis] = 0; xi[axis] < e[axis]; ++xi[axis]) outer(axis + 1);
  };
  outer(0);
  return out;
}

// I^d_alpha f = sum over dyadic cubes in the window of |Q|^{alpha/n} avg_Q f
// on Q.
inline SampledFunction frac_integral_dyadic(const SampledFunction& f,
                                            double alpha, int l_min,
                                            int l_max) {
  const int n = f.dim();
  if (!(alpha > 0 && alpha < n))
    throw std::invalid_argument("frac_integral_dyadic: need 0 < alpha < n");
  PrefixSums ps(f);
  SampledFunction out = f.map([](double) { return 0.0; });
  auto& acc = out.samples();
  cubes_touching(
      f, l_min, l_max,
      [&](const DyadicCube& q) {
        const CellBox b = f.cells_of(q);
        const double add = std::pow(q.volume(), alpha / n) * ps.sum(b) /
                           static_cast<double>(b.count(n));
        f.for_each_cell(
            b, [&](std::int64_t i) { acc[static_cast<size_t>(i)] += add; });
      },
      /*contained=*/true);
  return out;
}

inline SampledFunction frac_integral_dyadic(const SampledFunction& f,
                                            double alpha) {
  return frac_integral_dyadic(f, alpha, f.cell_level(),
                              top_contained_level(f));
}

// The operator backends a commutator can wrap.
struct Hilbert {};
struct FracIntegral {
  double alpha;
};
struct DyadicFracIntegral {
  double alpha;
};

using BaseOperator =
    std::variant<Hilbert, HaarShift, FracIntegral, DyadicFracIntegral>;

struct CommutatorSpec {
  SampledFunction b;
  BaseOperator op;
};

inline SampledFunction apply_base(const BaseOperator& op,
                                  const SampledFunction& f) {
  if (std::holds_alternative<Hilbert>(op)) return hilbert(f);
  if (const auto* T = std::get_if<HaarShift>(&op))
    return haar_shift_apply(*T, f);
  if (const auto* I = std::get_if<FracIntegral>(&op))
    return frac_integral(f, I->alpha);
  return frac_integral_dyadic(f, std::get<DyadicFracIntegral>(op).alpha);
}

// [b,T]f = b (Tf) - T(bf).
inline SampledFunction commutator_apply(const CommutatorSpec& spec,
                                        const SampledFunction& f) {
  if (!spec.b.same_layout(f))
    throw std::invalid_argument("commutator_apply: b and f layout mismatch");
  const SampledFunction tf = apply_base(spec.op, f);
  const SampledFunction tbf = apply_base(spec.op, spec.b * f);
  return spec.b * tf - tbf;
}

// Cauchy-integral commutator for T = I_alpha:
//   (1/2 pi i) \oint_{|z|=eps} e^{zb} I_alpha(e^{-zb} f) / z^2 dz,
// by M-node trapezoidal contour quadrature.
inline SampledFunction commutator_cauchy(const SampledFunction& b,
                                         const SampledFunction& f,
                                         double alpha, double eps, int M) {
  if (!b.same_layout(f))
    throw std::invalid_argument("commutator_cauchy: layout mismatch");
  if (M < 8) throw std::invalid_argument("commutator_cauchy: need M >= 8");
  if (!(eps > 0)) throw std::invalid_argument("commutator_cauchy: eps > 0");
  if (eps * b.max_abs() > 700)
    throw std::overflow_error("commutator_cauchy: e^{eps b} overflows");
  const size_t ncells = f.samples().size();
  std::vector<double> acc(ncells, 0.0);
  for (int m = 0; m < M; ++m) {
    const double theta = 2.0 * std::numbers::pi * m / M;
    const double zr = eps * std::cos(theta), zi = eps * std::sin(theta);
    SampledFunction gre = f, gim = f;
    for (size_t i = 0; i < ncells; ++i) {
      const double bi = b.samples()[i];
      const double mag = std::exp(-zr * bi);
      gre.samples()[i] = mag * std::cos(zi * bi) * f.samples()[i];
      gim.samples()[i] = -mag * std::sin(zi * bi) * f.samples()[i];
    }
    const SampledFunction Ire = frac_integral(gre, alpha);
    const SampledFunction Iim = frac_integral(gim, alpha);
    for (size_t i = 0; i < ncells; ++i) {
      const double bi = b.samples()[i];
      const double mag = std::exp(zr * bi);
      const double cr = mag * std::cos(zi * bi), ci = mag * std::sin(zi * bi);
      const double Fr = cr * Ire.samples()[i] - ci * Iim.samples()[i];
      const double Fi = cr * Iim.samples()[i] + ci * Ire.samples()[i];
      // Re[F / z] averaged over the nodes
      acc[i] += (Fr * std::cos(theta) + Fi * std::sin(theta)) / eps;
    }
  }
  SampledFunction out = f;
  for (size_t i = 0; i < ncells; ++i) out.samples()[i] = acc[i] / M;
  return out;
}

// Default contour radius following the eps ~ 1/(c ||b||_BMO) rule.
inline double cauchy_default_epsilon(double bmo_norm_b, int dim) {
  if (!(bmo_norm_b > 0))
    throw std::invalid_argument("cauchy_default_epsilon: ||b|| > 0");
  return std::ldexp(1.0, -(dim + 2)) / (8.0 * bmo_norm_b);
}

// Empirical L^2 operator norm: Rayleigh quotients over a seeded random
// dictionary, sharpened by power iteration on T*T when the adjoint is given.
inline double operator_norm_estimate(
    const std::function<SampledFunction(const SampledFunction&)>& apply,
    const SampledFunction& layout, std::uint64_t seed, int dict_size = 12,
    int power_iters = 20,
    const std::function<SampledFunction(const SampledFunction&)>& adjoint =
        nullptr) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto random_f = [&]() {
    SampledFunction g = layout;
    for (double& v : g.samples()) v = gauss(rng);
    return g;
  };
  double best = 0;
  SampledFunction best_f = layout;
  for (int i = 0; i < dict_size; ++i) {
    const SampledFunction g = random_f();
    const double ratio = apply(g).norm_l2() / g.norm_l2();
    if (ratio > best) {
      best = ratio;
      best_f = g;
    }
  }
  if (adjoint) {
    SampledFunction x = best_f;
    for (int it = 0; it < power_iters; ++it) {
      SampledFunction tx = apply(x);
      const double r = tx.norm_l2() / x.norm_l2();
      best = std::max(best, r);
      SampledFunction nx = adjoint(tx);
      const double nn = nx.norm_l2();
      if (nn == 0) break;
      x = nx.scaled(1.0 / nn);
    }
  }
  return best;
}

}  // namespace commlab::ops
