#pragma once

// Medians, decreasing rearrangements, local mean oscillation, the dyadic
// local sharp maximal function, Calderon-Zygmund cubes at geometric heights,
// and the Lerner stopping-time decomposition.
//
// Conventions fixed here: medians break ties at the lower admissible value;
// rearrangements are left-continuous at cell-mass breakpoints.  Everything
// is exact on the cell grid.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "commlab/grid.hpp"

namespace commlab::osc {

// Lower admissible median: both {f > m} and {f < m} have mass <= |E|/2.
inline double median_of(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median: empty set");
  const size_t n = values.size();
  const size_t k = (n + 1) / 2;  // ceil(n/2), 1-based
  std::nth_element(values.begin(), values.begin() + (k - 1), values.end());
  return values[k - 1];
}

inline double median(const SampledFunction& f, const CellBox& box) {
  std::vector<double> vals;
  vals.reserve(static_cast<size_t>(box.count(f.dim())));
  f.for_each_cell(box, [&](std::int64_t i) {
    vals.push_back(f.samples()[static_cast<size_t>(i)]);
  });
  return median_of(std::move(vals));
}

inline double median(const SampledFunction& f, const DyadicCube& q) {
  return median(f, f.cells_of(q));
}

namespace detail {
// Index (1-based) of the rearrangement step containing mass t; the
// left-continuous convention returns step k at exact breakpoints t = k*vol.
inline std::int64_t rearrangement_rank(double t, double cell_vol,
                                       std::int64_t n_cells) {
  const double steps = t / cell_vol;
  auto k = static_cast<std::int64_t>(std::ceil(steps - 1e-9));
  return std::clamp<std::int64_t>(k, 1, n_cells);
}
}  // namespace detail

// ((f - offset) chi_Q)^*(t): the non-increasing rearrangement of
// |f - offset| over Q evaluated at mass t in (0, |Q|).
inline double rearrangement_value(const SampledFunction& f, const CellBox& box,
                                  double t, double offset = 0.0) {
  const std::int64_t n = box.count(f.dim());
  const double vol = f.cell_volume();
  if (!(t > 0) || !(t < static_cast<double>(n) * vol * (1 + 1e-12)))
    throw std::out_of_range("rearrangement_value: t outside (0,|Q|)");
  std::vector<double> vals;
  vals.reserve(static_cast<size_t>(n));
  f.for_each_cell(box, [&](std::int64_t i) {
    vals.push_back(std::abs(f.samples()[static_cast<size_t>(i)] - offset));
  });
  const std::int64_t k = detail::rearrangement_rank(t, vol, n);
  std::nth_element(vals.begin(), vals.begin() + (k - 1), vals.end(),
                   std::greater<>());
  return vals[static_cast<size_t>(k - 1)];
}

inline double rearrangement_value(const SampledFunction& f,
                                  const DyadicCube& q, double t,
                                  double offset = 0.0) {
  return rearrangement_value(f, f.cells_of(q), t, offset);
}

namespace detail {
// omega_lambda from sorted (ascending) cell values: the shortest window
// capturing N - ceil(lambda N) + 1 cells, halved.
inline double oscillation_from_sorted(const std::vector<double>& sorted,
                                      double lambda) {
  const auto n = static_cast<std::int64_t>(sorted.size());
  const std::int64_t j = rearrangement_rank(
      lambda * static_cast<double>(n), 1.0, n);
  const std::int64_t K = n - j + 1;
  double best = std::numeric_limits<double>::infinity();
  for (std::int64_t i = 0; i + K <= n; ++i)
    best = std::min(best, sorted[static_cast<size_t>(i + K - 1)] -
                              sorted[static_cast<size_t>(i)]);
  return 0.5 * best;
}
}  // namespace detail

// omega_lambda(f,Q) = inf_c ((f-c) chi_Q)^*(lambda |Q|).
inline double local_oscillation(const SampledFunction& f, const CellBox& box,
                                double lambda) {
  if (!(lambda > 0 && lambda < 1))
    throw std::invalid_argument("local_oscillation: lambda in (0,1)");
  std::vector<double> vals;
  vals.reserve(static_cast<size_t>(box.count(f.dim())));
  f.for_each_cell(box, [&](std::int64_t i) {
    vals.push_back(f.samples()[static_cast<size_t>(i)]);
  });
  std::sort(vals.begin(), vals.end());
  return detail::oscillation_from_sorted(vals, lambda);
}

inline double local_oscillation(const SampledFunction& f, const DyadicCube& q,
                                double lambda) {
  return local_oscillation(f, f.cells_of(q), lambda);
}

// M^{sharp,d}_{lambda,Q} f: per cell, the max of omega_lambda over the chain
// of dyadic ancestors within the root cube.  Cells outside the root are 0.
inline SampledFunction local_sharp_max(const SampledFunction& f,
                                       const DyadicCube& root, double lambda) {
  if (!(lambda > 0 && lambda < 1))
    throw std::invalid_argument("local_sharp_max: lambda in (0,1)");
  const int n = f.dim();
  const CellBox rootbox = f.cells_of(root);
  const int height = root.level - f.cell_level();

  // omega per cube, stored per relative level; cube order is row-major in
  // the cube index relative to the root.
  std::vector<std::vector<double>> omega(static_cast<size_t>(height) + 1);
  for (int h = 0; h <= height; ++h) {
    std::int64_t cnt = 1;
    for (int a = 0; a < n; ++a) cnt <<= (height - h);
    omega[static_cast<size_t>(h)].assign(static_cast<size_t>(cnt), 0.0);
  }

  const std::int64_t root_cells_per_axis = std::int64_t{1} << height;
  auto cube_linear = [&](int h, const Index& rel) {
    std::int64_t idx = 0;
    for (int a = 0; a < n; ++a)
      idx = idx * (root_cells_per_axis >> h) + rel[a];
    return idx;
  };

  // Bottom-up merge of sorted cell values.
  std::function<std::vector<double>(int, Index)> build = [&](int h,
                                                             Index rel) {
    std::vector<double> sorted;
    if (h == 0) {
      Index cell;
      for (int a = 0; a < n; ++a) cell[a] = rootbox.lo[a] + rel[a];
      for (int a = n; a < kMaxDim; ++a) cell[a] = 0;
      sorted = {f.value_at_cell(cell)};
    } else {
      for (int e = 0; e < (1 << n); ++e) {
        Index crel;
        for (int a = 0; a < n; ++a) crel[a] = 2 * rel[a] + ((e >> a) & 1);
        for (int a = n; a < kMaxDim; ++a) crel[a] = 0;
        std::vector<double> child = build(h - 1, crel);
        std::vector<double> merged(sorted.size() + child.size());
        std::merge(sorted.begin(), sorted.end(), child.begin(), child.end(),
                   merged.begin());
        sorted.swap(merged);
      }
    }
    omega[static_cast<size_t>(h)][static_cast<size_t>(cube_linear(h, rel))] =
        detail::oscillation_from_sorted(sorted, lambda);
    return sorted;
  };
  build(height, Index{0, 0, 0});

  // Top-down chain maxima.
  for (int h = height - 1; h >= 0; --h) {
    const std::int64_t w = root_cells_per_axis >> h;
    auto& cur = omega[static_cast<size_t>(h)];
    const auto& up = omega[static_cast<size_t>(h) + 1];
    for (std::int64_t lin = 0; lin < static_cast<std::int64_t>(cur.size());
         ++lin) {
      Index rel{0, 0, 0};
      std::int64_t tmp = lin;
      for (int a = n - 1; a >= 0; --a) {
        rel[a] = tmp % w;
        tmp /= w;
      }
      Index prel;
      for (int a = 0; a < n; ++a) prel[a] = rel[a] >> 1;
      for (int a = n; a < kMaxDim; ++a) prel[a] = 0;
      cur[static_cast<size_t>(lin)] =
          std::max(cur[static_cast<size_t>(lin)],
                   up[static_cast<size_t>(cube_linear(h + 1, prel))]);
    }
  }

  SampledFunction out = f.map([](double) { return 0.0; });
  auto& ov = out.samples();
  Index rel{0, 0, 0};
  std::function<void(int)> emit = [&](int axis) {
    if (axis == n) {
      Index cell;
      for (int a = 0; a < n; ++a) cell[a] = rootbox.lo[a] + rel[a];
      for (int a = n; a < kMaxDim; ++a) cell[a] = 0;
      ov[static_cast<size_t>(out.linear(cell))] =
          omega[0][static_cast<size_t>(cube_linear(0, rel))];
      return;
    }
    for (rel[axis] = 0; rel[axis] < root_cells_per_axis; ++rel[axis])
      emit(axis + 1);
  };
  emit(0);
  return out;
}

// Maximal dyadic subcubes of the root with average above the height.
// If the root itself exceeds it, the root is returned and flagged.
inline std::vector<DyadicCube> cz_cubes(const SampledFunction& f, double height,
                                        const DyadicCube& root,
                                        bool* root_flagged = nullptr) {
  for (double v : f.samples())
    if (v < 0) throw std::domain_error("cz_cubes: f must be nonnegative");
  if (!(height > 0)) throw std::invalid_argument("cz_cubes: height > 0");
  PrefixSums ps(f);
  if (root_flagged) *root_flagged = false;
  std::vector<DyadicCube> out;
  std::function<void(const DyadicCube&)> walk = [&](const DyadicCube& q) {
    const CellBox b = f.cells_of(q);
    const double avg = ps.sum(b) / static_cast<double>(b.count(f.dim()));
    if (avg > height) {
      out.push_back(q);
      return;
    }
    if (q.level == f.cell_level()) return;
    for (const DyadicCube& c : q.children()) walk(c);
  };
  const CellBox rb = f.cells_of(root);
  const double root_avg = ps.sum(rb) / static_cast<double>(rb.count(f.dim()));
  if (root_avg > height) {
    if (root_flagged) *root_flagged = true;
    return {root};
  }
  for (const DyadicCube& c :
       root.level == f.cell_level() ? std::vector<DyadicCube>{} : root.children())
    walk(c);
  return out;
}

struct DecompNode {
  CellBox cube;
  int level = 0;       // grid level of the cube
  double stat = 0;     // median (Lerner) or cube average (CZ)
  std::int64_t parent = -1;  // index into the previous tree level
};

struct DecompositionTree {
  enum class Mode { cz, lerner };
  Mode mode = Mode::lerner;
  int dim = 1;
  CellBox root;
  double root_stat = 0;
  std::vector<std::vector<DecompNode>> levels;  // levels[k-1] = {Q_j^k}
  std::vector<double> heights;                  // CZ: height per level
  bool root_flagged = false;
  double empirical_c = 0;  // Lerner: measured constant of property (iii)

  // Omega_k = union of level-k cubes, as a mask over f's cells.
  std::vector<std::uint8_t> omega_mask(const SampledFunction& f,
                                       size_t level_index) const {
    std::vector<std::uint8_t> mask(f.samples().size(), 0);
    if (level_index >= levels.size()) return mask;
    for (const DecompNode& node : levels[level_index])
      f.for_each_cell(node.cube,
                      [&](std::int64_t i) { mask[static_cast<size_t>(i)] = 1; });
    return mask;
  }

  struct InvariantReport {
    bool omega_nested = true;       // Omega_{k+1} subset Omega_k
    bool half_overlap = true;       // |Omega_{k+1} cap Q_j^k| <= |Q_j^k|/2
    bool e_disjoint = true;         // E_j^k pairwise disjoint
    bool e_mass = true;             // |Q_j^k| <= 2 |E_j^k|
    bool ok() const {
      return omega_nested && half_overlap && e_disjoint && e_mass;
    }
  };

  InvariantReport check_invariants(const SampledFunction& f) const {
    InvariantReport rep;
    std::vector<std::uint8_t> claimed(f.samples().size(), 0);  // any E_j^k
    for (size_t k = 0; k < levels.size(); ++k) {
      const auto next = omega_mask(f, k + 1);
      const auto cur = omega_mask(f, k);
      for (size_t i = 0; i < next.size(); ++i)
        if (next[i] && !cur[i]) rep.omega_nested = false;
      for (const DecompNode& node : levels[k]) {
        std::int64_t cells = 0, overlap = 0, e_cells = 0;
        f.for_each_cell(node.cube, [&](std::int64_t i) {
          ++cells;
          if (next[static_cast<size_t>(i)]) {
            ++overlap;
          } else {
            ++e_cells;
            if (claimed[static_cast<size_t>(i)]) rep.e_disjoint = false;
            claimed[static_cast<size_t>(i)] = 1;
          }
        });
        if (2 * overlap > cells) rep.half_overlap = false;
        if (cells > 2 * e_cells) rep.e_mass = false;
      }
    }
    return rep;
  }
};

// CZ decomposition at heights a^k, k in [k_lo, k_hi].
inline DecompositionTree cz_decompose(const SampledFunction& f,
                                      const DyadicCube& root, double a,
                                      int k_lo, int k_hi) {
  DecompositionTree tree;
  tree.mode = DecompositionTree::Mode::cz;
  tree.dim = f.dim();
  tree.root = f.cells_of(root);
  tree.root_stat = f.average(root);
  PrefixSums ps(f);
  for (int k = k_lo; k <= k_hi; ++k) {
    const double h = std::pow(a, k);
    bool flagged = false;
    std::vector<DyadicCube> cubes = cz_cubes(f, h, root, &flagged);
    tree.root_flagged = tree.root_flagged || flagged;
    std::vector<DecompNode> nodes;
    nodes.reserve(cubes.size());
    for (const DyadicCube& q : cubes) {
      DecompNode node;
      node.cube = f.cells_of(q);
      node.level = q.level;
      node.stat = f.average(q);
      nodes.push_back(node);
    }
    tree.heights.push_back(h);
    tree.levels.push_back(std::move(nodes));
  }
  return tree;
}

namespace detail {

// Maximal dyadic subcubes of P with |Q' cap E| > |Q'|/2.  E is encoded as
// stamp[i] == id so the buffer can be reused across stopping cubes.
inline void select_dense_subcubes(const SampledFunction& f,
                                  const DyadicCube& P,
                                  const std::vector<std::int64_t>& stamp,
                                  std::int64_t id,
                                  std::vector<DyadicCube>& out) {
  std::function<void(const DyadicCube&)> walk = [&](const DyadicCube& q) {
    const CellBox b = f.cells_of(q);
    std::int64_t cells = 0, hits = 0;
    f.for_each_cell(b, [&](std::int64_t i) {
      ++cells;
      hits += (stamp[static_cast<size_t>(i)] == id);
    });
    if (hits == 0) return;
    if (2 * hits > cells) {
      out.push_back(q);
      return;
    }
    if (q.level == f.cell_level()) return;
    for (const DyadicCube& c : q.children()) walk(c);
  };
  if (P.level == f.cell_level()) return;
  for (const DyadicCube& c : P.children()) walk(c);
}

}  // namespace detail

// Lerner stopping-time decomposition on the root cube.  Stopping cubes at
// generation k+1 are the maximal dyadic subcubes of each generation-k cube P
// carrying more than half their mass inside
//   E(P) = { x in P : |f(x) - m_f(P)| > ((f - m_f(P)) chi_P)^*(lambda_n |P|) },
// lambda_n = 2^{-n-2}.  The measured constant of property (iii) is returned
// in empirical_c (0/0 counts as 0).
inline DecompositionTree lerner_decompose(const SampledFunction& f,
                                          const DyadicCube& root) {
  const int n = f.dim();
  const double lambda_n = std::ldexp(1.0, -n - 2);
  DecompositionTree tree;
  tree.mode = DecompositionTree::Mode::lerner;
  tree.dim = n;
  tree.root = f.cells_of(root);
  tree.root_stat = median(f, root);

  std::vector<DyadicCube> current{root};
  // Sum term of property (iii): omega_{lambda_n}(f, parent(Q_j^k)) piled
  // onto the cells of Q_j^k.
  std::vector<double> sum_term(f.samples().size(), 0.0);
  std::vector<std::int64_t> stamp(f.samples().size(), -1);
  std::int64_t stamp_id = 0;

  while (!current.empty()) {
    std::vector<DyadicCube> next;
    std::vector<DecompNode> nodes;
    for (std::int64_t pi = 0; pi < static_cast<std::int64_t>(current.size());
         ++pi) {
      const DyadicCube& P = current[static_cast<size_t>(pi)];
      const CellBox pb = f.cells_of(P);
      const double m = median(f, pb);
      const auto pcells = static_cast<double>(pb.count(n));
      const double thresh =
          rearrangement_value(f, pb, lambda_n * pcells * f.cell_volume(), m);
      const std::int64_t id = stamp_id++;
      std::int64_t e_count = 0;
      f.for_each_cell(pb, [&](std::int64_t i) {
        if (std::abs(f.samples()[static_cast<size_t>(i)] - m) > thresh) {
          stamp[static_cast<size_t>(i)] = id;
          ++e_count;
        }
      });
      if (e_count == 0) continue;
      std::vector<DyadicCube> selected;
      detail::select_dense_subcubes(f, P, stamp, id, selected);
      for (const DyadicCube& q : selected) {
        DecompNode node;
        node.cube = f.cells_of(q);
        node.level = q.level;
        node.stat = median(f, node.cube);
        node.parent = tree.levels.empty() ? -1 : pi;
        // omega of the dyadic parent of the selected cube
        const double w =
            local_oscillation(f, f.cells_of(q.parent()), lambda_n);
        f.for_each_cell(node.cube, [&](std::int64_t i) {
          sum_term[static_cast<size_t>(i)] += w;
        });
        nodes.push_back(node);
        next.push_back(q);
      }
    }
    if (nodes.empty()) break;
    tree.levels.push_back(std::move(nodes));
    current = std::move(next);
  }

  // Empirical constant of property (iii).
  const SampledFunction sharp = local_sharp_max(f, root, 0.25);
  double chat = 0;
  f.for_each_cell(tree.root, [&](std::int64_t i) {
    const double num =
        std::abs(f.samples()[static_cast<size_t>(i)] - tree.root_stat);
    const double den = sharp.samples()[static_cast<size_t>(i)] +
                       sum_term[static_cast<size_t>(i)];
    if (num == 0) return;
    chat = (den == 0) ? std::numeric_limits<double>::infinity()
                      : std::max(chat, num / den);
  });
  tree.empirical_c = chat;
  return tree;
}

}  // namespace commlab::osc
