#pragma once

// Dyadic cube geometry and cell-averaged sampled functions.
//
// A grid (n, r, beta) is the standard dyadic lattice scaled by r and
// translated by r*beta, so every cube has one parent and 2^n children and
// cubes at level k have side r*2^k.  A SampledFunction stores one value per
// cell (cells are grid cubes at a fixed level), with cell-average semantics:
// integrals against cell-aligned cubes are exact.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace commlab {

inline constexpr int kMaxDim = 3;

using Index = std::array<std::int64_t, kMaxDim>;

struct Box {
  int dim = 1;
  std::array<double, kMaxDim> lo{0, 0, 0};
  std::array<double, kMaxDim> hi{0, 0, 0};

  static Box cube(int dim, double lo, double hi) {
    Box b;
    b.dim = dim;
    for (int a = 0; a < dim; ++a) {
      b.lo[a] = lo;
      b.hi[a] = hi;
    }
    return b;
  }
  double volume() const {
    double v = 1;
    for (int a = 0; a < dim; ++a) v *= hi[a] - lo[a];
    return v;
  }
  bool contains(const std::array<double, kMaxDim>& x) const {
    for (int a = 0; a < dim; ++a)
      if (x[a] < lo[a] || x[a] >= hi[a]) return false;
    return true;
  }
};

struct DyadicGrid {
  int dim = 1;
  double scale = 1.0;  // r
  std::array<double, kMaxDim> shift{0, 0, 0};  // beta

  bool operator==(const DyadicGrid& o) const {
    if (dim != o.dim || scale != o.scale) return false;
    for (int a = 0; a < dim; ++a)
      if (shift[a] != o.shift[a]) return false;
    return true;
  }
};

struct DyadicCube {
  DyadicGrid grid;
  int level = 0;
  Index index{0, 0, 0};

  double side() const { return grid.scale * std::ldexp(1.0, level); }
  double volume() const {
    double v = 1;
    for (int a = 0; a < grid.dim; ++a) v *= side();
    return v;
  }
  double lo(int axis) const {
    return grid.scale *
           (std::ldexp(static_cast<double>(index[axis]), level) +
            grid.shift[axis]);
  }
  double hi(int axis) const {
    return grid.scale *
           (std::ldexp(static_cast<double>(index[axis] + 1), level) +
            grid.shift[axis]);
  }
  Box box() const {
    Box b;
    b.dim = grid.dim;
    for (int a = 0; a < grid.dim; ++a) {
      b.lo[a] = lo(a);
      b.hi[a] = hi(a);
    }
    return b;
  }

  DyadicCube parent() const {
    DyadicCube p = *this;
    p.level = level + 1;
    for (int a = 0; a < grid.dim; ++a) p.index[a] = index[a] >> 1;
    return p;
  }

  // The tau-fold ancestor Q^tau, |Q^tau| = 2^{tau*n} |Q|.
  DyadicCube ancestor(int tau) const {
    if (tau < 0) throw std::invalid_argument("ancestor: tau must be >= 0");
    DyadicCube p = *this;
    p.level = level + tau;
    for (int a = 0; a < grid.dim; ++a) p.index[a] = index[a] >> tau;
    return p;
  }

  std::vector<DyadicCube> children() const {
    const int n = grid.dim;
    std::vector<DyadicCube> out;
    out.reserve(std::size_t{1} << n);
    for (int e = 0; e < (1 << n); ++e) {
      DyadicCube c = *this;
      c.level = level - 1;
      for (int a = 0; a < n; ++a) c.index[a] = 2 * index[a] + ((e >> a) & 1);
      out.push_back(c);
    }
    return out;
  }

  bool contains(const DyadicCube& q) const {
    if (q.level > level) return false;
    for (int a = 0; a < grid.dim; ++a)
      if ((q.index[a] >> (level - q.level)) != index[a]) return false;
    return true;
  }

  std::string str() const {
    std::ostringstream os;
    os << "Q(level=" << level << ", index=[";
    for (int a = 0; a < grid.dim; ++a)
      os << index[a] << (a + 1 < grid.dim ? "," : "");
    os << "])";
    return os.str();
  }
};

// Half-open block of cells in absolute cell indices.
struct CellBox {
  Index lo{0, 0, 0};
  Index hi{0, 0, 0};  // exclusive
  std::int64_t count(int dim) const {
    std::int64_t c = 1;
    for (int a = 0; a < dim; ++a) c *= hi[a] - lo[a];
    return c;
  }
};

class SampledFunction {
 public:
  SampledFunction() = default;
  SampledFunction(DyadicGrid grid, int cell_level, Index origin, Index extent,
                  std::vector<double> samples)
      : grid_(grid),
        cell_level_(cell_level),
        origin_(origin),
        extent_(extent),
        samples_(std::move(samples)) {
    std::int64_t n = 1;
    for (int a = 0; a < grid_.dim; ++a) {
      if (extent_[a] <= 0)
        throw std::invalid_argument("SampledFunction: empty extent");
      n *= extent_[a];
    }
    if (static_cast<std::int64_t>(samples_.size()) != n)
      throw std::invalid_argument("SampledFunction: sample count mismatch");
    for (double v : samples_)
      if (!std::isfinite(v))
        throw std::invalid_argument("SampledFunction: non-finite sample");
  }

  static SampledFunction zeros(DyadicGrid grid, int cell_level, Index origin,
                               Index extent) {
    std::int64_t n = 1;
    for (int a = 0; a < grid.dim; ++a) n *= extent[a];
    return SampledFunction(grid, cell_level, origin, extent,
                           std::vector<double>(static_cast<size_t>(n), 0.0));
  }

  // Domain box aligned to the grid: corners must sit on the cell lattice.
  static SampledFunction zeros_on_box(const DyadicGrid& grid, const Box& box,
                                      int cell_level) {
    Index origin{0, 0, 0}, extent{1, 1, 1};
    box_to_cells(grid, box, cell_level, origin, extent);
    return zeros(grid, cell_level, origin, extent);
  }

  int dim() const { return grid_.dim; }
  const DyadicGrid& grid() const { return grid_; }
  int cell_level() const { return cell_level_; }
  const Index& origin() const { return origin_; }
  const Index& extent() const { return extent_; }
  double cell_side() const { return grid_.scale * std::ldexp(1.0, cell_level_); }
  double cell_volume() const {
    double v = 1;
    for (int a = 0; a < grid_.dim; ++a) v *= cell_side();
    return v;
  }
  std::int64_t cell_count() const {
    return static_cast<std::int64_t>(samples_.size());
  }
  const std::vector<double>& samples() const { return samples_; }
  std::vector<double>& samples() { return samples_; }

  Box domain() const {
    Box b;
    b.dim = grid_.dim;
    for (int a = 0; a < grid_.dim; ++a) {
      b.lo[a] = grid_.scale * (std::ldexp(static_cast<double>(origin_[a]),
                                          cell_level_) +
                               grid_.shift[a]);
      b.hi[a] = grid_.scale *
                (std::ldexp(static_cast<double>(origin_[a] + extent_[a]),
                            cell_level_) +
                 grid_.shift[a]);
    }
    return b;
  }

  CellBox full_box() const {
    CellBox c;
    c.lo = origin_;
    for (int a = 0; a < grid_.dim; ++a) c.hi[a] = origin_[a] + extent_[a];
    for (int a = grid_.dim; a < kMaxDim; ++a) c.hi[a] = c.lo[a] + 1;
    return c;
  }

  std::int64_t linear(const Index& cell) const {
    std::int64_t idx = 0;
    for (int a = 0; a < grid_.dim; ++a) {
      const std::int64_t rel = cell[a] - origin_[a];
      idx = idx * extent_[a] + rel;
    }
    return idx;
  }

  double value_at_cell(const Index& cell) const { return samples_[linear(cell)]; }

  // Cell containing a physical point (must lie in the domain).
  Index cell_of(const std::array<double, kMaxDim>& x) const {
    Index c{0, 0, 0};
    for (int a = 0; a < grid_.dim; ++a) {
      const double g = (x[a] / grid_.scale - grid_.shift[a]) *
                       std::ldexp(1.0, -cell_level_);
      const auto i = static_cast<std::int64_t>(std::floor(g));
      if (i < origin_[a] || i >= origin_[a] + extent_[a])
        throw std::out_of_range("cell_of: point outside domain");
      c[a] = i;
    }
    return c;
  }

  double value_at(const std::array<double, kMaxDim>& x) const {
    return value_at_cell(cell_of(x));
  }

  double integral() const {
    return cell_volume() *
           std::accumulate(samples_.begin(), samples_.end(), 0.0);
  }

  double sum_over(const CellBox& b) const {
    double s = 0;
    for_each_cell(b, [&](std::int64_t i) { s += samples_[i]; });
    return s;
  }

  double integral_over(const CellBox& b) const {
    return cell_volume() * sum_over(b);
  }

  // Mean value over a cell box (the paper's  a_f(E)  on aligned sets).
  double average_over(const CellBox& b) const {
    return sum_over(b) / static_cast<double>(b.count(grid_.dim));
  }

  bool cube_in_domain(const DyadicCube& q) const {
    if (!(q.grid == grid_)) return false;
    if (q.level < cell_level_) return false;
    const int sh = q.level - cell_level_;
    for (int a = 0; a < grid_.dim; ++a) {
      const std::int64_t lo = q.index[a] << sh;
      const std::int64_t hi = (q.index[a] + 1) << sh;
      if (lo < origin_[a] || hi > origin_[a] + extent_[a]) return false;
    }
    return true;
  }

  CellBox cells_of(const DyadicCube& q) const {
    if (!(q.grid == grid_))
      throw std::invalid_argument("cells_of: cube from a different grid");
    if (q.level < cell_level_)
      throw std::invalid_argument("cells_of: cube finer than the sample grid");
    if (!cube_in_domain(q))
      throw std::out_of_range("cells_of: cube outside the domain");
    const int sh = q.level - cell_level_;
    CellBox b;
    for (int a = 0; a < grid_.dim; ++a) {
      b.lo[a] = q.index[a] << sh;
      b.hi[a] = (q.index[a] + 1) << sh;
    }
    for (int a = grid_.dim; a < kMaxDim; ++a) b.hi[a] = b.lo[a] + 1;
    return b;
  }

  // (1/|Q|) \int_Q f, exact for cell-aligned cubes.
  double average(const DyadicCube& q) const { return average_over(cells_of(q)); }

  bool same_layout(const SampledFunction& o) const {
    return grid_ == o.grid_ && cell_level_ == o.cell_level_ &&
           origin_ == o.origin_ && extent_ == o.extent_;
  }

  template <class F>
  SampledFunction map(F&& f) const {
    SampledFunction out = *this;
    for (double& v : out.samples_) v = f(v);
    return out;
  }

  template <class F>
  SampledFunction zip(const SampledFunction& o, F&& f) const {
    if (!same_layout(o))
      throw std::invalid_argument("zip: layout mismatch");
    SampledFunction out = *this;
    for (size_t i = 0; i < samples_.size(); ++i)
      out.samples_[i] = f(samples_[i], o.samples_[i]);
    return out;
  }

  SampledFunction operator+(const SampledFunction& o) const {
    return zip(o, [](double a, double b) { return a + b; });
  }
  SampledFunction operator-(const SampledFunction& o) const {
    return zip(o, [](double a, double b) { return a - b; });
  }
  SampledFunction operator*(const SampledFunction& o) const {
    return zip(o, [](double a, double b) { return a * b; });
  }
  SampledFunction scaled(double c) const {
    return map([c](double v) { return c * v; });
  }

  double max_abs() const {
    double m = 0;
    for (double v : samples_) m = std::max(m, std::abs(v));
    return m;
  }

  double norm_l2() const {
    double s = 0;
    for (double v : samples_) s += v * v;
    return std::sqrt(s * cell_volume());
  }

  double norm_lp(double p, const SampledFunction* weight = nullptr) const {
    double s = 0;
    for (size_t i = 0; i < samples_.size(); ++i) {
      const double w = weight ? weight->samples_[i] : 1.0;
      s += std::pow(std::abs(samples_[i]), p) * w;
    }
    return std::pow(s * cell_volume(), 1.0 / p);
  }

  template <class F>
  void for_each_cell(const CellBox& b, F&& f) const {
    const int n = grid_.dim;
    if (n == 1) {
      const std::int64_t base = b.lo[0] - origin_[0];
      for (std::int64_t i = b.lo[0]; i < b.hi[0]; ++i)
        f(base + (i - b.lo[0]));
      return;
    }
    if (n == 2) {
      for (std::int64_t i = b.lo[0]; i < b.hi[0]; ++i) {
        const std::int64_t row = (i - origin_[0]) * extent_[1] - origin_[1];
        for (std::int64_t j = b.lo[1]; j < b.hi[1]; ++j) f(row + j);
      }
      return;
    }
    for (std::int64_t i = b.lo[0]; i < b.hi[0]; ++i)
      for (std::int64_t j = b.lo[1]; j < b.hi[1]; ++j) {
        const std::int64_t row =
            ((i - origin_[0]) * extent_[1] + (j - origin_[1])) * extent_[2] -
            origin_[2];
        for (std::int64_t k = b.lo[2]; k < b.hi[2]; ++k) f(row + k);
      }
  }

  // CSV layout: header "n,L,domain_lo...,domain_hi...", one row per cell in
  // row-major order.  L is the cell-size exponent (cell side = r*2^{-L}).
  void save_csv(std::ostream& os) const {
    const Box d = domain();
    os << grid_.dim << "," << -cell_level_;
    for (int a = 0; a < grid_.dim; ++a) os << "," << d.lo[a];
    for (int a = 0; a < grid_.dim; ++a) os << "," << d.hi[a];
    os << "\n";
    os.precision(17);
    for (double v : samples_) os << v << "\n";
  }

  void save_csv(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("save_csv: cannot open " + path);
    save_csv(os);
  }

  static SampledFunction load_csv(std::istream& is) {
    std::string header;
    if (!std::getline(is, header))
      throw std::runtime_error("load_csv: empty input");
    std::vector<double> fields;
    {
      std::istringstream hs(header);
      std::string tok;
      while (std::getline(hs, tok, ',')) fields.push_back(std::stod(tok));
    }
    if (fields.size() < 4)
      throw std::runtime_error("load_csv: malformed header");
    const int n = static_cast<int>(fields[0]);
    const int L = static_cast<int>(fields[1]);
    if (n < 1 || n > kMaxDim || fields.size() != 2 + 2 * size_t(n))
      throw std::runtime_error("load_csv: malformed header");
    Box box;
    box.dim = n;
    for (int a = 0; a < n; ++a) {
      box.lo[a] = fields[2 + a];
      box.hi[a] = fields[2 + n + a];
    }
    DyadicGrid grid;
    grid.dim = n;
    SampledFunction out = zeros_on_box(grid, box, -L);
    for (auto& v : out.samples_) {
      if (!(is >> v)) throw std::runtime_error("load_csv: short sample data");
    }
    return out;
  }

  static SampledFunction load_csv_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("load_csv: cannot open " + path);
    return load_csv(is);
  }

  static void box_to_cells(const DyadicGrid& grid, const Box& box,
                           int cell_level, Index& origin, Index& extent) {
    if (box.dim != grid.dim)
      throw std::invalid_argument("box/grid dimension mismatch");
    for (int a = 0; a < grid.dim; ++a) {
      const double inv = std::ldexp(1.0, -cell_level);
      const double glo = (box.lo[a] / grid.scale - grid.shift[a]) * inv;
      const double ghi = (box.hi[a] / grid.scale - grid.shift[a]) * inv;
      const double rlo = std::round(glo), rhi = std::round(ghi);
      if (std::abs(glo - rlo) > 1e-9 || std::abs(ghi - rhi) > 1e-9)
        throw std::invalid_argument(
            "domain box is not aligned to the cell lattice");
      origin[a] = static_cast<std::int64_t>(rlo);
      extent[a] = static_cast<std::int64_t>(rhi) - origin[a];
      if (extent[a] <= 0) throw std::invalid_argument("empty domain box");
    }
    for (int a = grid.dim; a < kMaxDim; ++a) {
      origin[a] = 0;
      extent[a] = 1;
    }
  }

 private:
  DyadicGrid grid_;
  int cell_level_ = 0;
  Index origin_{0, 0, 0};
  Index extent_{1, 1, 1};
  std::vector<double> samples_;
};

// O(1) box sums after O(N) setup (inclusion-exclusion on cumulative sums).
class PrefixSums {
 public:
  explicit PrefixSums(const SampledFunction& f)
      : dim_(f.dim()), origin_(f.origin()) {
    for (int a = 0; a < kMaxDim; ++a)
      ext_[a] = (a < dim_) ? f.extent()[a] + 1 : 2;
    table_.assign(static_cast<size_t>(ext_[0]) * (dim_ > 1 ? ext_[1] : 1) *
                      (dim_ > 2 ? ext_[2] : 1),
                  0.0);
    const auto& s = f.samples();
    const auto& e = f.extent();
    if (dim_ == 1) {
      for (std::int64_t i = 0; i < e[0]; ++i)
        at(i + 1, 0, 0) = at(i, 0, 0) + s[static_cast<size_t>(i)];
    } else if (dim_ == 2) {
      for (std::int64_t i = 0; i < e[0]; ++i)
        for (std::int64_t j = 0; j < e[1]; ++j)
          at(i + 1, j + 1, 0) = s[static_cast<size_t>(i * e[1] + j)] +
                                at(i, j + 1, 0) + at(i + 1, j, 0) -
                                at(i, j, 0);
    } else {
      for (std::int64_t i = 0; i < e[0]; ++i)
        for (std::int64_t j = 0; j < e[1]; ++j)
          for (std::int64_t k = 0; k < e[2]; ++k)
            at(i + 1, j + 1, k + 1) =
                s[static_cast<size_t>((i * e[1] + j) * e[2] + k)] +
                at(i, j + 1, k + 1) + at(i + 1, j, k + 1) +
                at(i + 1, j + 1, k) - at(i, j, k + 1) - at(i, j + 1, k) -
                at(i + 1, j, k) + at(i, j, k);
    }
  }

  double sum(const CellBox& b) const {
    const std::int64_t alo = b.lo[0] - origin_[0], ahi = b.hi[0] - origin_[0];
    if (dim_ == 1) return cat(ahi, 0, 0) - cat(alo, 0, 0);
    const std::int64_t blo = b.lo[1] - origin_[1], bhi = b.hi[1] - origin_[1];
    if (dim_ == 2)
      return cat(ahi, bhi, 0) - cat(alo, bhi, 0) - cat(ahi, blo, 0) +
             cat(alo, blo, 0);
    const std::int64_t clo = b.lo[2] - origin_[2], chi = b.hi[2] - origin_[2];
    return cat(ahi, bhi, chi) - cat(alo, bhi, chi) - cat(ahi, blo, chi) -
           cat(ahi, bhi, clo) + cat(alo, blo, chi) + cat(alo, bhi, clo) +
           cat(ahi, blo, clo) - cat(alo, blo, clo);
  }

 private:
  double& at(std::int64_t i, std::int64_t j, std::int64_t k) {
    return table_[static_cast<size_t>((i * (dim_ > 1 ? ext_[1] : 1) + j) *
                                          (dim_ > 2 ? ext_[2] : 1) +
                                      k)];
  }
  double cat(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return table_[static_cast<size_t>((i * (dim_ > 1 ? ext_[1] : 1) + j) *
                                          (dim_ > 2 ? ext_[2] : 1) +
                                      k)];
  }
  int dim_;
  Index origin_;
  Index ext_;
  std::vector<double> table_;
};

namespace detail {
inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b, r = a % b;
  return (r != 0 && ((r < 0) != (b < 0))) ? q - 1 : q;
}
inline std::int64_t ceil_div(std::int64_t a, std::int64_t b) {
  return -floor_div(-a, b);
}
}  // namespace detail

// Enumerates dyadic cubes of f's grid meeting the domain within the level
// range, each exactly once.  contained=true keeps only cubes inside the
// domain; otherwise any cube intersecting it is produced.
template <class F>
void cubes_touching(const SampledFunction& f, int level_lo, int level_hi,
                    F&& fn, bool contained = false) {
  const int n = f.dim();
  for (int k = std::max(level_lo, f.cell_level()); k <= level_hi; ++k) {
    const std::int64_t s = std::int64_t{1} << (k - f.cell_level());
    Index mlo{0, 0, 0}, mhi{0, 0, 0};
    bool empty = false;
    for (int a = 0; a < n; ++a) {
      const std::int64_t o = f.origin()[a], e = f.extent()[a];
      if (contained) {
        mlo[a] = detail::ceil_div(o, s);
        mhi[a] = detail::floor_div(o + e, s) - 1;
      } else {
        mlo[a] = detail::floor_div(o, s);
        mhi[a] = detail::floor_div(o + e - 1, s);
      }
      if (mlo[a] > mhi[a]) empty = true;
    }
    if (empty) continue;
    DyadicCube q;
    q.grid = f.grid();
    q.level = k;
    for (std::int64_t i = mlo[0]; i <= mhi[0]; ++i) {
      q.index[0] = i;
      if (n == 1) {
        fn(q);
        continue;
      }
      for (std::int64_t j = mlo[1]; j <= mhi[1]; ++j) {
        q.index[1] = j;
        if (n == 2) {
          fn(q);
          continue;
        }
        for (std::int64_t k3 = mlo[2]; k3 <= mhi[2]; ++k3) {
          q.index[2] = k3;
          fn(q);
        }
      }
    }
  }
}

// Largest level with at least one grid cube contained in f's domain.
inline int top_contained_level(const SampledFunction& f) {
  int best = f.cell_level();
  for (int k = f.cell_level();; ++k) {
    const std::int64_t s = std::int64_t{1} << (k - f.cell_level());
    bool any = true;
    for (int a = 0; a < f.dim(); ++a) {
      if (detail::ceil_div(f.origin()[a], s) >
          detail::floor_div(f.origin()[a] + f.extent()[a], s) - 1)
        any = false;
    }
    if (!any) return best;
    best = k;
    if (s > f.extent()[0] + std::abs(f.origin()[0]) + 4) return best;
  }
}

}  // namespace commlab
