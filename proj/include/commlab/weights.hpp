#pragma once

// Weight constants (A_p, A_{p,q}, bump), BMO norms, John-Nirenberg exp-L
// ratios, and factored weight pairs.
//
// Every sup_Q is a finite maximum over an explicit CubeFamily; reported
// constants are lattice constants.  Negative powers of weights act cell-wise
// on the stored cell averages.

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "commlab/grid.hpp"
#include "commlab/orlicz.hpp"

namespace commlab::weights {

// Finite cube family over a sample layout.  "dyadic" walks the grid cubes
// contained in the domain; "lattice" additionally translates each dyadic
// side length over the cell lattice (this is what picks up cubes straddling
// the origin on domains like [-1,1)).
class CubeFamily {
 public:
  enum class Kind { dyadic, lattice };

  static CubeFamily dyadic(const SampledFunction& f) {
    return CubeFamily(f, Kind::dyadic);
  }
  static CubeFamily lattice(const SampledFunction& f) {
    return CubeFamily(f, Kind::lattice);
  }

  CubeFamily(const SampledFunction& f, Kind kind)
      : dim_(f.dim()),
        cell_level_(f.cell_level()),
        origin_(f.origin()),
        extent_(f.extent()),
        cell_side_(f.cell_side()),
        kind_(kind),
        level_lo_(f.cell_level()),
        level_hi_(top_contained_level(f)) {}

  CubeFamily& restrict_levels(int lo, int hi) {
    level_lo_ = std::max(lo, cell_level_);
    level_hi_ = std::min(hi, level_hi_);
    return *this;
  }

  // Lattice translations every side/divisor cells instead of every cell;
  // the thinned family still meets every straddling position to within a
  // fraction of the side.
  CubeFamily& stride_divisor(int d) {
    stride_div_ = d;
    return *this;
  }

  int dim() const { return dim_; }

  // Visits each cube as a CellBox plus its physical side length.
  template <class F>
  void for_each(F&& fn) const {
    for (int k = level_lo_; k <= level_hi_; ++k) {
      const std::int64_t s = std::int64_t{1} << (k - cell_level_);
      const double side = cell_side_ * static_cast<double>(s);
      std::int64_t step = s;
      if (kind_ == Kind::lattice)
        step = (stride_div_ > 0) ? std::max<std::int64_t>(1, s / stride_div_)
                                 : 1;
      Index t{0, 0, 0};
      visit_axis(0, s, step, t, side, fn);
    }
  }

  std::int64_t size() const {
    std::int64_t total = 0;
    for_each([&](const CellBox&, double) { ++total; });
    return total;
  }

 private:
  template <class F>
  void visit_axis(int axis, std::int64_t s, std::int64_t step, Index& t,
                  double side, F&& fn) const {
    if (axis == dim_) {
      CellBox b;
      for (int a = 0; a < dim_; ++a) {
        b.lo[a] = t[a];
        b.hi[a] = t[a] + s;
      }
      for (int a = dim_; a < kMaxDim; ++a) b.hi[a] = b.lo[a] + 1;
      fn(b, side);
      return;
    }
    std::int64_t first = origin_[axis];
    if (kind_ == Kind::dyadic) {
      // grid-aligned start within the domain
      first = detail::ceil_div(origin_[axis], s) * s;
    }
    for (t[axis] = first; t[axis] + s <= origin_[axis] + extent_[axis];
         t[axis] += step)
      visit_axis(axis + 1, s, step, t, side, fn);
  }

  int dim_;
  int cell_level_;
  Index origin_;
  Index extent_;
  double cell_side_;
  Kind kind_;
  int level_lo_;
  int level_hi_;
  int stride_div_ = 0;  // 0: every cell position
};

struct ConstantReport {
  double value = 0;
  CellBox argmax;
  double argmax_side = 0;
};

// ||b||_BMO = max over the family of avg_Q |b - a_b(Q)|.
inline ConstantReport bmo_norm_report(const SampledFunction& b,
                                      const CubeFamily& family) {
  PrefixSums ps(b);
  ConstantReport best;
  family.for_each([&](const CellBox& q, double side) {
    const auto cells = static_cast<double>(q.count(b.dim()));
    const double mean = ps.sum(q) / cells;
    double dev = 0;
    b.for_each_cell(q, [&](std::int64_t i) {
      dev += std::abs(b.samples()[static_cast<size_t>(i)] - mean);
    });
    dev /= cells;
    if (dev > best.value) {
      best.value = dev;
      best.argmax = q;
      best.argmax_side = side;
    }
  });
  return best;
}

inline double bmo_norm(const SampledFunction& b, const CubeFamily& family) {
  return bmo_norm_report(b, family).value;
}

// [w]_{A_p} = max avg_Q(w) * avg_Q(w^{1-p'})^{p-1};  >= 1 cube-by-cube.
inline ConstantReport ap_constant_report(const SampledFunction& w, double p,
                                         const CubeFamily& family) {
  if (p <= 1) throw std::invalid_argument("ap_constant: need p > 1");
  for (double v : w.samples())
    if (v <= 0)
      throw std::domain_error("ap_constant: weight must be positive");
  const double pprime = p / (p - 1);
  const SampledFunction wdual =
      w.map([&](double v) { return std::pow(v, 1.0 - pprime); });
  PrefixSums pw(w), pd(wdual);
  ConstantReport best;
  family.for_each([&](const CellBox& q, double side) {
    const auto cells = static_cast<double>(q.count(w.dim()));
    const double val =
        (pw.sum(q) / cells) * std::pow(pd.sum(q) / cells, p - 1.0);
    if (val > best.value) {
      best.value = val;
      best.argmax = q;
      best.argmax_side = side;
    }
  });
  return best;
}

inline double ap_constant(const SampledFunction& w, double p,
                          const CubeFamily& family) {
  return ap_constant_report(w, p, family).value;
}

// [w]_{A_{p,q}} = max avg_Q(w^q) * avg_Q(w^{-p'})^{q/p'}.
inline ConstantReport apq_constant_report(const SampledFunction& w, double p,
                                          double q, const CubeFamily& family) {
  if (p <= 1 || q <= 0) throw std::invalid_argument("apq_constant: bad p,q");
  for (double v : w.samples())
    if (v <= 0)
      throw std::domain_error("apq_constant: weight must be positive");
  const double pprime = p / (p - 1);
  const SampledFunction wq = w.map([&](double v) { return std::pow(v, q); });
  const SampledFunction wd =
      w.map([&](double v) { return std::pow(v, -pprime); });
  PrefixSums pq(wq), pd(wd);
  ConstantReport best;
  family.for_each([&](const CellBox& cube, double side) {
    const auto cells = static_cast<double>(cube.count(w.dim()));
    const double val = (pq.sum(cube) / cells) *
                       std::pow(pd.sum(cube) / cells, q / pprime);
    if (val > best.value) {
      best.value = val;
      best.argmax = cube;
      best.argmax_side = side;
    }
  });
  return best;
}

inline double apq_constant(const SampledFunction& w, double p, double q,
                           const CubeFamily& family) {
  return apq_constant_report(w, p, q, family).value;
}

struct WeightPair {
  SampledFunction u;  // target
  SampledFunction v;  // source
  double p = 2;
  double q = 2;
  double alpha = 0;
};

// Fractional bump constant
//   sup_Q |Q|^{alpha/n + 1/q - 1/p} ||u^{1/q}||_{A,Q} ||v^{-1/p}||_{B,Q};
// at alpha = 0, q = p this is the plain [u,v]_{p,A,B}.
inline ConstantReport bump_constant_report(const WeightPair& pair,
                                           const orlicz::YoungFunction& A,
                                           const orlicz::YoungFunction& B,
                                           const CubeFamily& family) {
  const int n = pair.u.dim();
  for (double v : pair.v.samples())
    if (v <= 0)
      throw std::domain_error("bump_constant: v must be positive a.e.");
  const SampledFunction ubump =
      pair.u.map([&](double t) { return std::pow(t, 1.0 / pair.q); });
  const SampledFunction vbump =
      pair.v.map([&](double t) { return std::pow(t, -1.0 / pair.p); });
  const double vol_exp =
      pair.alpha / n + 1.0 / pair.q - 1.0 / pair.p;
  ConstantReport best;
  family.for_each([&](const CellBox& cube, double side) {
    const double factor = std::pow(std::pow(side, n), vol_exp);
    const double val = factor * orlicz::luxemburg_norm(ubump, cube, A) *
                       orlicz::luxemburg_norm(vbump, cube, B);
    if (val > best.value) {
      best.value = val;
      best.argmax = cube;
      best.argmax_side = side;
    }
  });
  return best;
}

inline double bump_constant(const WeightPair& pair,
                            const orlicz::YoungFunction& A,
                            const orlicz::YoungFunction& B,
                            const CubeFamily& family) {
  return bump_constant_report(pair, A, B, family).value;
}

// Reverse-factorization pair
//   (u~, v~) = (w1 (M_{Psi,alpha} w2)^{1-p},  (M_{Phi,alpha} w1) w2^{1-p}).
inline WeightPair factored_pair(const SampledFunction& w1,
                                const SampledFunction& w2,
                                const orlicz::YoungFunction& phi,
                                const orlicz::YoungFunction& psi, double p,
                                double alpha,
                                orlicz::MaximalFlavor flavor =
                                    orlicz::MaximalFlavor::dyadic) {
  if (!w1.same_layout(w2))
    throw std::invalid_argument("factored_pair: layout mismatch");
  const SampledFunction m1 = orlicz::orlicz_maximal(w1, phi, alpha, flavor);
  const SampledFunction m2 = orlicz::orlicz_maximal(w2, psi, alpha, flavor);
  for (size_t i = 0; i < m2.samples().size(); ++i) {
    if (m2.samples()[i] == 0 && w1.samples()[i] > 0) {
      std::ostringstream os;
      os << "factored_pair: M_{Psi,alpha} w2 vanishes on cell " << i
         << " where w1 > 0";
      throw std::domain_error(os.str());
    }
  }
  WeightPair out;
  out.p = p;
  out.q = p;
  out.alpha = alpha;
  out.u = w1.zip(m2, [&](double a, double m) {
    return a == 0 ? 0.0 : a * std::pow(m, 1.0 - p);
  });
  out.v = m1.zip(w2, [&](double m, double b) {
    return m * std::pow(b, 1.0 - p);
  });
  return out;
}

// max_Q ||b - a_b(Q)||_{expL,Q} / ||b||_BMO; 0 for constant b.
inline double expl_bmo_ratio(const SampledFunction& b,
                             const CubeFamily& family) {
  const double bmo = bmo_norm(b, family);
  if (bmo == 0) return 0;
  const orlicz::YoungFunction expl = orlicz::YoungFunction::exp_l();
  PrefixSums ps(b);
  double best = 0;
  family.for_each([&](const CellBox& q, double) {
    const double mean = ps.sum(q) / static_cast<double>(q.count(b.dim()));
    best = std::max(best, orlicz::luxemburg_norm(b, q, expl, mean));
  });
  return best / bmo;
}

}  // namespace commlab::weights
