#pragma once

// Young functions, associate (conjugate) functions, Luxemburg norms on
// cubes, Orlicz maximal operators, and B_p tail diagnostics.
//
// The built-in families are Phi(t) = t^r, t^r log(e+t)^s, t^r/log(e+t)^s and
// e^t - 1.  associate() is the exact Legendre conjugate (closed form for
// powers, monotone root-finding otherwise), so the sandwich
// t <= Phi^{-1}(t) PhiBar^{-1}(t) <= 2t holds to quadrature accuracy.  The
// paper-style asymptotic associates (log-bump <-> quotient exchanges) are
// exposed separately via associate_asymptotic().

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "commlab/grid.hpp"

namespace commlab::orlicz {

// Leading growth Phi(t) ~ t^r log(e+t)^s (or exponential).
struct Growth {
  bool known = false;
  bool exponential = false;
  double r = 0;
  double s = 0;
};

namespace detail {

struct Impl {
  virtual ~Impl() = default;
  virtual double eval(double t) const = 0;
  virtual double derivative(double t) const = 0;
  virtual Growth growth() const = 0;
  virtual std::string id() const = 0;
};

struct PowerImpl final : Impl {
  double r, coef;
  PowerImpl(double r_, double coef_ = 1.0) : r(r_), coef(coef_) {}
  double eval(double t) const override { return coef * std::pow(t, r); }
  double derivative(double t) const override {
    return coef * r * std::pow(t, r - 1);
  }
  Growth growth() const override { return {true, false, r, 0}; }
  std::string id() const override {
    return (coef == 1.0 ? "" : std::to_string(coef) + "*") + "power:" +
           std::to_string(r);
  }
};

struct LogBumpImpl final : Impl {
  double r, s;
  LogBumpImpl(double r_, double s_) : r(r_), s(s_) {}
  double eval(double t) const override {
    if (t == 0) return 0;
    return std::pow(t, r) * std::pow(std::log(std::exp(1.0) + t), s);
  }
  double derivative(double t) const override {
    if (t == 0) return r > 1 ? 0.0 : 1.0;
    const double L = std::log(std::exp(1.0) + t);
    return std::pow(t, r - 1) * std::pow(L, s - 1) *
           (r * L + s * t / (std::exp(1.0) + t));
  }
  Growth growth() const override { return {true, false, r, s}; }
  std::string id() const override {
    return "logbump:" + std::to_string(r) + ":" + std::to_string(s);
  }
};

struct QuotientImpl final : Impl {
  double r, s;
  QuotientImpl(double r_, double s_) : r(r_), s(s_) {}
  double eval(double t) const override {
    if (t == 0) return 0;
    return std::pow(t, r) / std::pow(std::log(std::exp(1.0) + t), s);
  }
  double derivative(double t) const override {
    if (t == 0) return 0;
    const double L = std::log(std::exp(1.0) + t);
    return std::pow(t, r - 1) * std::pow(L, -s - 1) *
           (r * L - s * t / (std::exp(1.0) + t));
  }
  Growth growth() const override { return {true, false, r, -s}; }
  std::string id() const override {
    return "quotient:" + std::to_string(r) + ":" + std::to_string(s);
  }
};

struct ExpLImpl final : Impl {
  double eval(double t) const override {
    return t > 700 ? std::numeric_limits<double>::infinity() : std::expm1(t);
  }
  double derivative(double t) const override {
    return t > 700 ? std::numeric_limits<double>::infinity() : std::exp(t);
  }
  Growth growth() const override { return {true, true, 0, 0}; }
  std::string id() const override { return "expl"; }
};

// Phi(t^gamma); gamma in (0,1] keeps convexity for our uses (gamma = 1/p
// applied to A(t) = Phi(t^p)-type transforms).
struct PowerComposeImpl final : Impl {
  std::shared_ptr<const Impl> base;
  double gamma;
  PowerComposeImpl(std::shared_ptr<const Impl> b, double g)
      : base(std::move(b)), gamma(g) {}
  double eval(double t) const override {
    return base->eval(std::pow(t, gamma));
  }
  double derivative(double t) const override {
    if (t == 0) return 0;
    const double u = std::pow(t, gamma);
    return base->derivative(u) * gamma * u / t;
  }
  Growth growth() const override {
    Growth g = base->growth();
    if (!g.known || g.exponential) return {false, g.exponential, 0, 0};
    return {true, false, g.r * gamma, g.s};
  }
  std::string id() const override {
    return base->id() + "^(t^" + std::to_string(gamma) + ")";
  }
};

// Exact Legendre conjugate sup_s [s t - Phi(s)], evaluated by solving
// Phi'(s) = t (Phi' is nondecreasing).
struct ConjugateImpl final : Impl {
  std::shared_ptr<const Impl> base;
  explicit ConjugateImpl(std::shared_ptr<const Impl> b) : base(std::move(b)) {}

  // argmax of g(s) = s*t - Phi(s): the root of the nondecreasing Phi'(s)=t.
  double argmax_s(double t) const {
    double lo = 0.0, hi = 1.0;
    while (base->derivative(hi) < t && hi < 1e300) hi *= 2;
    for (int i = 0; i < 140 && (hi - lo) > 1e-15 * hi; ++i) {
      const double mid = 0.5 * (lo + hi);
      (base->derivative(mid) < t ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }
  double eval(double t) const override {
    if (t <= 0) return 0;
    if (base->derivative(0.0) >= t) return 0.0;  // flat part of the conjugate
    const double s = argmax_s(t);
    return s * t - base->eval(s);
  }
  double derivative(double t) const override {
    if (t <= 0 || base->derivative(0.0) >= t) return 0.0;
    return argmax_s(t);
  }
  Growth growth() const override {
    const Growth g = base->growth();
    if (!g.known) return {false, false, 0, 0};
    if (g.exponential) return {true, false, 1, 1};  // conjugate of e^t is ~ t log t
    if (g.r > 1) {
      const double rp = g.r / (g.r - 1);
      return {true, false, rp, -g.s / (g.r - 1)};
    }
    if (g.r == 1 && g.s > 0) return {true, true, 0, 0};
    return {false, false, 0, 0};  // r == 1, s <= 0: conjugate degenerates
  }
  std::string id() const override { return "assoc(" + base->id() + ")"; }
};

}  // namespace detail

class YoungFunction {
 public:
  YoungFunction() = default;

  static YoungFunction power(double r) {
    if (r < 1) throw std::invalid_argument("power: need r >= 1");
    return YoungFunction(std::make_shared<detail::PowerImpl>(r));
  }
  static YoungFunction log_bump(double r, double s) {
    if (r < 1) throw std::invalid_argument("logbump: need r >= 1");
    return YoungFunction(std::make_shared<detail::LogBumpImpl>(r, s));
  }
  static YoungFunction quotient(double r, double s) {
    if (r < 1 || s < 0) throw std::invalid_argument("quotient: bad params");
    return YoungFunction(std::make_shared<detail::QuotientImpl>(r, s));
  }
  static YoungFunction llogl() { return log_bump(1, 1); }
  static YoungFunction exp_l() {
    return YoungFunction(std::make_shared<detail::ExpLImpl>());
  }

  double operator()(double t) const { return impl_->eval(t); }
  double derivative(double t) const { return impl_->derivative(t); }
  Growth growth() const { return impl_->growth(); }
  std::string id() const { return impl_->id(); }

  // Exact associate PhiBar(t) = sup_s [st - Phi(s)].
  YoungFunction associate() const {
    const Growth g = impl_->growth();
    if (g.known && !g.exponential && g.s == 0 && g.r > 1) {
      // Closed form: conjugate of t^r is (r-1) (t/r)^{r'}.
      const double rp = g.r / (g.r - 1);
      const double coef = (g.r - 1) * std::pow(g.r, -rp);
      return YoungFunction(std::make_shared<detail::PowerImpl>(rp, coef));
    }
    return YoungFunction(std::make_shared<detail::ConjugateImpl>(impl_));
  }

  // The paper's asymptotic associate family: for t^p log(e+t)^s (p>1) this
  // is t^{p'} log(e+t)^{-s/(p-1)} (a log-bump or quotient); for t log(e+t)^s
  // (s>0) it is exp-type.
  std::optional<YoungFunction> associate_asymptotic() const {
    const Growth g = impl_->growth();
    if (!g.known) return std::nullopt;
    if (g.exponential) return llogl();
    if (g.r > 1) {
      const double rp = g.r / (g.r - 1);
      const double sp = -g.s / (g.r - 1);
      if (sp >= 0) return log_bump(rp, sp);
      return quotient(rp, -sp);
    }
    if (g.r == 1 && g.s > 0) return exp_l();
    return std::nullopt;
  }

  // t -> Phi(t^gamma).
  YoungFunction compose_power(double gamma) const {
    if (gamma <= 0) throw std::invalid_argument("compose_power: gamma > 0");
    return YoungFunction(
        std::make_shared<detail::PowerComposeImpl>(impl_, gamma));
  }

  // Generalized inverse sup{t : Phi(t) <= y}; exact inverse when strictly
  // increasing.
  double inverse(double y) const {
    if (y <= 0) return 0;
    double lo = 0.0, hi = 1.0;
    while (impl_->eval(hi) <= y && hi < 1e300) {
      lo = hi;
      hi *= 2;
    }
    for (int i = 0; i < 160 && (hi - lo) > 1e-14 * hi; ++i) {
      const double mid = 0.5 * (lo + hi);
      (impl_->eval(mid) <= y ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }

 private:
  explicit YoungFunction(std::shared_ptr<const detail::Impl> impl)
      : impl_(std::move(impl)) {}
  std::shared_ptr<const detail::Impl> impl_;
};

// Parses power:r | logbump:r:s | quotient:r:s | llogl | expl.
inline YoungFunction parse(const std::string& id) {
  auto splitnum = [](const std::string& s, size_t from) {
    return std::stod(s.substr(from));
  };
  if (id == "llogl") return YoungFunction::llogl();
  if (id == "expl") return YoungFunction::exp_l();
  const auto c1 = id.find(':');
  if (c1 == std::string::npos)
    throw std::invalid_argument("unknown Young-function id: " + id);
  const std::string head = id.substr(0, c1);
  const auto c2 = id.find(':', c1 + 1);
  if (head == "power") return YoungFunction::power(splitnum(id, c1 + 1));
  if (c2 == std::string::npos)
    throw std::invalid_argument("unknown Young-function id: " + id);
  const double r = std::stod(id.substr(c1 + 1, c2 - c1 - 1));
  const double s = splitnum(id, c2 + 1);
  if (head == "logbump") return YoungFunction::log_bump(r, s);
  if (head == "quotient") return YoungFunction::quotient(r, s);
  throw std::invalid_argument("unknown Young-function id: " + id);
}

enum class BpDiagnosis { converges, diverges, marginal };

// Classifies \int^inf Phi(t) t^{-p} dt/t by the family's (r,s) exponents:
// converges iff r < p, or r = p and s < -1.
inline BpDiagnosis bp_tail_exponent(const YoungFunction& phi, double p) {
  if (p <= 1) throw std::invalid_argument("bp_tail_exponent: need p > 1");
  const Growth g = phi.growth();
  if (!g.known)
    throw std::invalid_argument(
        "bp_tail_exponent: no symbolic asymptotics for " + phi.id());
  if (g.exponential) return BpDiagnosis::diverges;
  if (g.r < p) return BpDiagnosis::converges;
  if (g.r > p) return BpDiagnosis::diverges;
  if (g.s < -1) return BpDiagnosis::converges;
  if (g.s > -1) return BpDiagnosis::diverges;
  return BpDiagnosis::marginal;
}

// Luxemburg norm inf{ lambda > 0 : avg_Q Phi(|f - offset|/lambda) <= 1 } by
// monotone bisection; 0 when f == offset on Q.
inline double luxemburg_norm(const SampledFunction& f, const CellBox& box,
                             const YoungFunction& phi, double offset = 0.0,
                             double rel_tol = 1e-10) {
  thread_local std::vector<double> vals;
  vals.clear();
  double sup = 0;
  f.for_each_cell(box, [&](std::int64_t i) {
    const double v = std::abs(f.samples()[static_cast<size_t>(i)] - offset);
    if (!std::isfinite(v))
      throw std::domain_error("luxemburg_norm: non-finite sample");
    sup = std::max(sup, v);
    vals.push_back(v);
  });
  if (sup == 0) return 0;
  const double inv_cnt = 1.0 / static_cast<double>(vals.size());
  auto constraint = [&](double lambda) {
    double acc = 0;
    for (double v : vals) {
      const double term = phi(v / lambda);
      if (!std::isfinite(term))
        return std::numeric_limits<double>::infinity();
      acc += term;
    }
    return acc * inv_cnt;
  };

  double lo = sup / phi.inverse(1e12);
  double hi = sup * std::max(1.0, 1.0 / phi.inverse(1.0));
  int guard = 0;
  while (constraint(lo) < 1.0 && guard++ < 80) lo *= 0.5;
  guard = 0;
  while (constraint(hi) > 1.0 && guard++ < 80) hi *= 2.0;
  for (int i = 0; i < 200 && (hi - lo) > rel_tol * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (constraint(mid) > 1.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline double luxemburg_norm(const SampledFunction& f, const DyadicCube& q,
                             const YoungFunction& phi, double offset = 0.0,
                             double rel_tol = 1e-10) {
  return luxemburg_norm(f, f.cells_of(q), phi, offset, rel_tol);
}

enum class MaximalFlavor { dyadic, all_cubes };

// M_{Phi,alpha} f per cell: sup over cubes containing the cell of
// |Q|^{alpha/n} ||f||_{Phi,Q}.  The all-cubes flavor ranges over every
// cell-lattice-translated cube with dyadic side.
inline SampledFunction orlicz_maximal(const SampledFunction& f,
                                      const YoungFunction& phi, double alpha,
                                      MaximalFlavor flavor) {
  const int n = f.dim();
  if (alpha < 0 || alpha >= n)
    throw std::invalid_argument("orlicz_maximal: need 0 <= alpha < n");
  SampledFunction out = f.map([](double) { return 0.0; });
  auto& ov = out.samples();
  const int top = top_contained_level(f);

  // Pure powers Phi(t) = c t^r have the closed norm (c avg |f|^r)^{1/r};
  // served from prefix sums instead of per-cube bisection.
  const Growth g = phi.growth();
  const bool pure_power = g.known && !g.exponential && g.s == 0;
  const double pr = pure_power ? g.r : 0;
  const double pc = pure_power ? phi(1.0) : 0;
  std::unique_ptr<PrefixSums> power_sums;
  if (pure_power) {
    power_sums = std::make_unique<PrefixSums>(
        f.map([&](double v) { return std::pow(std::abs(v), pr); }));
  }

  auto consider = [&](const CellBox& cells, double side) {
    const double factor = std::pow(side, alpha);  // |Q|^{alpha/n} = side^alpha
    double norm;
    if (pure_power) {
      const double mean =
          power_sums->sum(cells) / static_cast<double>(cells.count(n));
      norm = std::pow(pc * mean, 1.0 / pr);
    } else {
      norm = luxemburg_norm(f, cells, phi);
    }
    const double val = factor * norm;
    f.for_each_cell(cells, [&](std::int64_t i) {
      ov[static_cast<size_t>(i)] = std::max(ov[static_cast<size_t>(i)], val);
    });
  };

  if (flavor == MaximalFlavor::dyadic) {
    cubes_touching(
        f, f.cell_level(), top,
        [&](const DyadicCube& q) { consider(f.cells_of(q), q.side()); },
        /*contained=*/true);
  } else {
    for (int k = f.cell_level(); k <= top; ++k) {
      const std::int64_t s = std::int64_t{1} << (k - f.cell_level());
      const double side = f.cell_side() * static_cast<double>(s);
      Index t{0, 0, 0};
      std::function<void(int)> rec = [&](int axis) {
        if (axis == n) {
          CellBox b;
          for (int a = 0; a < n; ++a) {
            b.lo[a] = t[a];
            b.hi[a] = t[a] + s;
          }
          for (int a = n; a < kMaxDim; ++a) b.hi[a] = b.lo[a] + 1;
          consider(b, side);
          return;
        }
        for (t[axis] = f.origin()[axis];
             t[axis] + s <= f.origin()[axis] + f.extent()[axis]; ++t[axis])
          rec(axis + 1);
      };
      rec(0);
    }
  }
  return out;
}

}  // namespace commlab::orlicz
