#pragma once

// Delay problems on trees: the fundamental solutions on a star, the general
// tree solver by the method of steps, and the boundary/junction determinant.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gdelay/core.hpp"
#include "gdelay/errors.hpp"
#include "gdelay/parallel.hpp"

namespace gdelay {

/// Values and x-derivatives of one solution on a uniform grid.
struct GGSComponent {
  GridFn value;
  GridFn deriv;
};

/// Star-graph GGS pieces on one edge. Y holds the fundamental pair; Z (a <= 1)
/// or P, Q (a in [1, 2)) hold the coupling solutions driven by edge 1.
struct GGSEdge {
  int edge = 1;
  std::array<GGSComponent, 2> Y;
  std::optional<std::array<GGSComponent, 2>> Z;
  std::optional<std::array<GGSComponent, 2>> PQ;
};

namespace detail {

enum class Side { left, right };

/// sin(ρx)/ρ written through λ = ρ², so it is even in ρ and finite at ρ = 0.
inline cplx sin_over(cplx rho, double x) {
  if (std::abs(rho * x) < 1e-4) {
    const cplx z2 = rho * rho * x * x;
    return x * (1.0 - z2 / 6.0 * (1.0 - z2 / 20.0 * (1.0 - z2 / 42.0)));
  }
  return std::sin(rho * x) / rho;
}

/// Smallest number of intervals per unit length, at least `base`, for which
/// every value in `lengths` is a whole number of intervals.
inline std::size_t aligned_intervals(std::size_t base, const std::vector<double>& lengths) {
  for (std::size_t D = 1; D <= 5000; ++D) {
    bool ok = true;
    for (double l : lengths) {
      const double v = l * static_cast<double>(D);
      if (std::abs(v - std::round(v)) > 1e-9 * std::max(1.0, v)) {
        ok = false;
        break;
      }
    }
    if (ok) return D * ((std::max<std::size_t>(base, 1) + D - 1) / D);
  }
  throw Unsupported("delay and edge lengths must be commensurate (common step with denominator <= 5000)");
}

inline std::size_t steps(double length, std::size_t per_unit) {
  return static_cast<std::size_t>(std::llround(length * static_cast<double>(per_unit)));
}

/// Cumulative integrals C(x_i) = ∫₀^{x_i} cos ρt f(t) dt and
/// S(x_i) = ∫₀^{x_i} sin ρt/ρ f(t) dt on nodes 0..n, integrating separately
/// between consecutive entries of `breaks` (which start at 0 and end at n).
/// f(i, side) gives the integrand at node i as seen from the segment on that
/// side. emit(i, C, S) is called in increasing i, and f(i, ·) is only
/// requested after emit for every node below i - 1.
template <class T, class F, class Emit>
void cumulative_trig(const std::vector<cplx>& cs, const std::vector<cplx>& sn, double h,
                     const std::vector<std::size_t>& breaks, const T& zero, F&& f, Emit&& emit) {
  T C = zero, S = zero;
  emit(std::size_t{0}, C, S);
  std::vector<T> gc, gs, ic, is;
  for (std::size_t b = 0; b + 1 < breaks.size(); ++b) {
    const std::size_t b0 = breaks[b], len = breaks[b + 1] - b0;
    gc.assign(len + 1, zero);
    gs.assign(len + 1, zero);
    ic.assign(len + 1, zero);
    is.assign(len + 1, zero);
    std::size_t have = 0;
    const auto load = [&](std::size_t r) {
      for (; have <= r; ++have) {
        const Side side = have == 0 ? Side::right : Side::left;
        const T v = f(b0 + have, side);
        gc[have] = cs[b0 + have] * v;
        gs[have] = sn[b0 + have] * v;
      }
    };
    ic[0] = C;
    is[0] = S;
    for (std::size_t r = 1; r <= len; ++r) {
      if (r == 1) {
        if (len >= 2) {
          load(2);
          ic[1] = ic[0] + h / 12.0 * (5.0 * gc[0] + 8.0 * gc[1] - gc[2]);
          is[1] = is[0] + h / 12.0 * (5.0 * gs[0] + 8.0 * gs[1] - gs[2]);
        } else {
          load(1);
          ic[1] = ic[0] + h / 2.0 * (gc[0] + gc[1]);
          is[1] = is[0] + h / 2.0 * (gs[0] + gs[1]);
        }
      } else if (r % 2 == 0) {
        load(r);
        ic[r] = ic[r - 2] + h / 3.0 * (gc[r - 2] + 4.0 * gc[r - 1] + gc[r]);
        is[r] = is[r - 2] + h / 3.0 * (gs[r - 2] + 4.0 * gs[r - 1] + gs[r]);
      } else {
        load(r);
        ic[r] = ic[r - 3] + 3.0 * h / 8.0 * (gc[r - 3] + 3.0 * gc[r - 2] + 3.0 * gc[r - 1] + gc[r]);
        is[r] = is[r - 3] + 3.0 * h / 8.0 * (gs[r - 3] + 3.0 * gs[r - 2] + 3.0 * gs[r - 1] + gs[r]);
      }
      emit(b0 + r, ic[r], is[r]);
    }
    C = ic[len];
    S = is[len];
  }
}

struct TrigTable {
  std::vector<cplx> cs, sn;  // cos ρx, sin ρx/ρ at the nodes
};

inline TrigTable trig_table(cplx lambda, std::size_t n, double h) {
  const cplx rho = std::sqrt(lambda);
  TrigTable t;
  t.cs.resize(n + 1);
  t.sn.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    const double x = h * static_cast<double>(i);
    t.cs[i] = std::cos(rho * x);
    t.sn[i] = sin_over(rho, x);
  }
  return t;
}

/// v(x) = ∫₀^x sin ρ(x-t)/ρ f(t) dt and v'(x) on nodes 0..n of [0, n h].
template <class F>
GGSComponent volterra(cplx lambda, std::size_t n, double h, const std::vector<std::size_t>& breaks, F&& f) {
  const TrigTable t = trig_table(lambda, n, h);
  std::vector<cplx> v(n + 1), d(n + 1);
  cumulative_trig(t.cs, t.sn, h, breaks, cplx(0.0), f, [&](std::size_t i, cplx C, cplx S) {
    v[i] = t.sn[i] * C - t.cs[i] * S;
    d[i] = t.cs[i] * C + lambda * t.sn[i] * S;
  });
  const double end = h * static_cast<double>(n);
  return {GridFn(0.0, end, std::move(v)), GridFn(0.0, end, std::move(d))};
}

inline std::vector<std::size_t> multiples(std::size_t d, std::size_t n) {
  std::vector<std::size_t> b{0};
  for (std::size_t k = d; k < n; k += d) b.push_back(k);
  b.push_back(n);
  return b;
}

inline GridFn add(const GridFn& a, const GridFn& b) {
  std::vector<cplx> v(a.values());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += b[i];
  return GridFn(a.start(), a.end(), std::move(v));
}

inline GGSComponent add(const GGSComponent& a, const GGSComponent& b) {
  return {add(a.value, b.value), add(a.deriv, b.deriv)};
}

/// Sum of the delayed Volterra iterates W_k(x) = ∫_{ka}^x sin ρ(x-t)/ρ q⁺(t) W_{k-1}(t-a) dt
/// starting from W_0 (nodes 0..n, delay d nodes).
inline GGSComponent iterate_delay(const GGSComponent& seed, const std::vector<cplx>& q, std::size_t d,
                                  cplx lambda, double h) {
  const std::size_t n = q.size() - 1;
  const auto breaks = multiples(d, n);
  GGSComponent total = seed, prev = seed;
  for (std::size_t k = 1; k * d < n; ++k) {
    prev = volterra(lambda, n, h, breaks, [&](std::size_t i, Side side) {
      if (i < d || (i == d && side == Side::left)) return cplx(0.0);
      return q[i] * prev.value[i - d];
    });
    total = add(total, prev);
  }
  return total;
}

struct UnitGrid {
  std::size_t n = 0;  // intervals on [0, 1]
  std::size_t d = 0;  // delay in intervals
  double h = 0.0;
  std::vector<cplx> q;
};

inline UnitGrid unit_grid(const GridFn& q, double shift) {
  if (std::abs(q.start()) > 1e-12 || std::abs(q.end() - 1.0) > 1e-12) {
    throw InvalidInput("edge potentials for the star constructions must be given on [0, 1]");
  }
  UnitGrid g;
  g.n = aligned_intervals(q.size() - 1, {shift});
  g.h = 1.0 / static_cast<double>(g.n);
  g.d = steps(shift, g.n);
  g.q.resize(g.n + 1);
  for (std::size_t i = 0; i <= g.n; ++i) g.q[i] = q.at(g.h * static_cast<double>(i));
  return g;
}

}  // namespace detail

/// q⁻ keeps q on [0, a] and q⁺ keeps it on (a, 1].
inline std::pair<GridFn, GridFn> split_q(const GridFn& q, double a) {
  if (!(a > 0.0 && a <= 1.0)) throw InvalidInput(detail::concat("split_q needs a in (0, 1], got ", a));
  const double tol = 1e-12 * q.step();
  GridFn minus = q.map([&](double x, cplx v) { return x <= a + tol ? v : cplx(0.0); });
  GridFn plus = q.map([&](double x, cplx v) { return x <= a + tol ? cplx(0.0) : v; });
  return {std::move(minus), std::move(plus)};
}

/// Y_ν(x, λ) = Σ_k Y_{ν,k}: the solution of -y'' + q⁺(x) y(x-a) = λy with
/// Y_ν^{(l)}(0) = δ_{ν,l+1}, a ∈ (0, 1].
inline GGSComponent ggs_Y(const GridFn& q, double a, cplx lambda, int nu) {
  if (!(a > 0.0 && a <= 1.0)) throw InvalidInput(detail::concat("ggs_Y needs a in (0, 1], got ", a));
  if (nu != 1 && nu != 2) throw InvalidInput("nu must be 1 or 2");
  const auto g = detail::unit_grid(q, a);
  if (g.d < 2) throw Unsupported("delay shorter than two grid steps");
  const auto t = detail::trig_table(lambda, g.n, g.h);
  GGSComponent seed;
  if (nu == 1) {
    seed.value = GridFn(0.0, 1.0, t.cs);
    std::vector<cplx> d(t.sn.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = -lambda * t.sn[i];
    seed.deriv = GridFn(0.0, 1.0, std::move(d));
  } else {
    seed.value = GridFn(0.0, 1.0, t.sn);
    seed.deriv = GridFn(0.0, 1.0, t.cs);
  }
  return detail::iterate_delay(seed, g.q, g.d, lambda, g.h);
}

/// Z(x, λ): the solution of -z'' + q⁺(x) z(x-a) = λz - q⁻(x) Y_ref(x-a+1) with
/// z(0) = z'(0) = 0, where Y_ref is Y_{ν,1} on edge 1 and a ∈ (0, 1].
inline GGSComponent ggs_Z(const GridFn& qj, const GGSComponent& Y_ref, double a, cplx lambda) {
  if (!(a > 0.0 && a <= 1.0)) throw InvalidInput(detail::concat("ggs_Z needs a in (0, 1], got ", a));
  const auto g = detail::unit_grid(qj, a);
  if (g.d < 2) throw Unsupported("delay shorter than two grid steps");
  std::vector<cplx> y(g.n + 1);
  for (std::size_t i = 0; i <= g.n; ++i) y[i] = Y_ref.value.at(g.h * static_cast<double>(i));
  const std::vector<std::size_t> breaks = g.d < g.n ? std::vector<std::size_t>{0, g.d, g.n}
                                                     : std::vector<std::size_t>{0, g.n};
  const GGSComponent seed = detail::volterra(lambda, g.n, g.h, breaks, [&](std::size_t i, detail::Side side) {
    if (i > g.d || (i == g.d && side == detail::Side::right)) return cplx(0.0);
    return g.q[i] * y[i + g.n - g.d];
  });
  return detail::iterate_delay(seed, g.q, g.d, lambda, g.h);
}

/// P(x, λ) = ∫_{a-1}^x sin ρ(x-t)/ρ q(t) cos ρ(t-a+1) dt and
/// Q(x, λ) = ∫_{a-1}^x sin ρ(x-t)/ρ q(t) sin ρ(t-a+1)/ρ dt, a ∈ [1, 2).
inline std::pair<GGSComponent, GGSComponent> ggs_PQ(const GridFn& qj, double a, cplx lambda) {
  if (!(a >= 1.0 && a < 2.0)) throw InvalidInput(detail::concat("ggs_PQ needs a in [1, 2), got ", a));
  const auto g = detail::unit_grid(qj, a - 1.0);
  const cplx rho = std::sqrt(lambda);
  const std::vector<std::size_t> breaks = g.d > 0 ? std::vector<std::size_t>{0, g.d, g.n}
                                                   : std::vector<std::size_t>{0, g.n};
  const auto active = [&](std::size_t i, detail::Side side) {
    return i > g.d || (i == g.d && side == detail::Side::right);
  };
  const auto shifted = [&](std::size_t i) { return g.h * static_cast<double>(i) - (a - 1.0); };
  GGSComponent P = detail::volterra(lambda, g.n, g.h, breaks, [&](std::size_t i, detail::Side side) {
    return active(i, side) ? g.q[i] * std::cos(rho * shifted(i)) : cplx(0.0);
  });
  GGSComponent Q = detail::volterra(lambda, g.n, g.h, breaks, [&](std::size_t i, detail::Side side) {
    return active(i, side) ? g.q[i] * detail::sin_over(rho, shifted(i)) : cplx(0.0);
  });
  return {std::move(P), std::move(Q)};
}

/// GGS pieces on the star with unit edges, edge 1 attached to the root and
/// the others emanating from its end. q[0] is q₁.
inline std::vector<GGSEdge> ggs_star(const std::vector<GridFn>& q, double a, cplx lambda) {
  if (q.size() < 2) throw InvalidInput("a star needs at least two edges");
  if (!(a > 0.0 && a < 2.0)) throw InvalidInput(detail::concat("ggs_star needs a in (0, 2), got ", a));
  std::vector<GGSEdge> out(q.size());
  const GridFn zero = GridFn::constant(0.0, 1.0, q[0].size(), 0.0);
  for (std::size_t j = 0; j < q.size(); ++j) {
    out[j].edge = static_cast<int>(j + 1);
    const GridFn& qy = a <= 1.0 ? q[j] : zero;
    const double ay = a <= 1.0 ? a : 1.0;
    for (int nu = 1; nu <= 2; ++nu) out[j].Y[static_cast<std::size_t>(nu - 1)] = ggs_Y(qy, ay, lambda, nu);
  }
  for (std::size_t j = 1; j < q.size(); ++j) {
    if (a <= 1.0) {
      out[j].Z = std::array<GGSComponent, 2>{ggs_Z(q[j], out[0].Y[0], a, lambda),
                                             ggs_Z(q[j], out[0].Y[1], a, lambda)};
    } else {
      auto [P, Q] = ggs_PQ(q[j], a, lambda);
      out[j].PQ = std::array<GGSComponent, 2>{std::move(P), std::move(Q)};
    }
  }
  return out;
}

struct TreeEdge {
  int tail = 0;
  int head = 0;
  double length = 1.0;
  GridFn q;
  /// Boundary derivative order ν_j at a boundary end (ignored at internal vertices).
  int nu = 0;
};

struct DelayPoint {
  int edge = 0;
  double x = 0.0;
};

/// Rooted compact tree with global delay. Edges are numbered 1..m, edge 1
/// leaves the root, and every edge is oriented away from the root.
class Tree {
 public:
  Tree(int vertex_count, int root, double delay, std::vector<TreeEdge> edges)
      : root_(root), delay_(delay), edges_(std::move(edges)) {
    const int m = static_cast<int>(edges_.size());
    if (m < 1) throw InvalidInput("a tree needs at least one edge");
    if (vertex_count != m + 1) {
      throw InvalidInput(detail::concat("a tree with ", m, " edges must have ", m + 1, " vertices, got ", vertex_count));
    }
    if (root < 0 || root >= vertex_count) throw InvalidInput("root id out of range");
    if (!(delay > 0.0)) throw InvalidInput("delay must be positive");
    std::vector<int> incoming(static_cast<std::size_t>(vertex_count), 0);
    std::vector<int> degree(static_cast<std::size_t>(vertex_count), 0);
    for (int j = 1; j <= m; ++j) {
      const auto& e = edge(j);
      if (e.tail < 0 || e.tail >= vertex_count || e.head < 0 || e.head >= vertex_count || e.tail == e.head) {
        throw InvalidInput(detail::concat("edge ", j, " has invalid endpoints"));
      }
      if (!(e.length > 0.0)) throw InvalidInput(detail::concat("edge ", j, " must have positive length"));
      if (e.q.size() < 3 || std::abs(e.q.start()) > 1e-12 || std::abs(e.q.end() - e.length) > 1e-9 * e.length) {
        throw InvalidInput(detail::concat("edge ", j, " potential must be sampled on [0, length]"));
      }
      if (e.nu != 0 && e.nu != 1) throw InvalidInput(detail::concat("edge ", j, " boundary order must be 0 or 1"));
      ++incoming[static_cast<std::size_t>(e.head)];
      ++degree[static_cast<std::size_t>(e.tail)];
      ++degree[static_cast<std::size_t>(e.head)];
    }
    if (degree[static_cast<std::size_t>(root)] != 1) throw InvalidInput("the root must be a boundary vertex");
    if (edge(1).tail != root) throw InvalidInput("edge 1 must emanate from the root");
    for (int v = 0; v < vertex_count; ++v) {
      const int want = v == root ? 0 : 1;
      if (incoming[static_cast<std::size_t>(v)] != want) {
        throw InvalidInput(detail::concat("vertex ", v, " must be entered by exactly ", want,
                                          " edge(s) when edges point away from the root"));
      }
    }
    into_.assign(static_cast<std::size_t>(vertex_count), 0);
    for (int j = 1; j <= m; ++j) into_[static_cast<std::size_t>(edge(j).head)] = j;
    parent_.assign(static_cast<std::size_t>(m) + 1, 0);
    children_.assign(static_cast<std::size_t>(m) + 1, {});
    for (int j = 1; j <= m; ++j) {
      const int p = edge(j).tail == root ? 0 : into_[static_cast<std::size_t>(edge(j).tail)];
      parent_[static_cast<std::size_t>(j)] = p;
      if (p > 0) children_[static_cast<std::size_t>(p)].push_back(j);
    }
    chain_.assign(static_cast<std::size_t>(m) + 1, {});
    start_.assign(static_cast<std::size_t>(m) + 1, 0.0);
    for (int j = 1; j <= m; ++j) {
      std::vector<int> c;
      for (int p = parent(j); p > 0; p = parent(p)) {
        if (static_cast<int>(c.size()) > m) throw InvalidInput("edges contain a cycle");
        c.push_back(p);
      }
      std::reverse(c.begin(), c.end());
      double s = 0.0;
      for (int p : c) s += edge(p).length;
      start_[static_cast<std::size_t>(j)] = s;
      chain_[static_cast<std::size_t>(j)] = std::move(c);
    }
    report_ = admissibility_violation();
  }

  int edge_count() const { return static_cast<int>(edges_.size()); }
  int vertex_count() const { return edge_count() + 1; }
  int root() const { return root_; }
  double delay() const { return delay_; }
  const TreeEdge& edge(int j) const { return edges_.at(static_cast<std::size_t>(j - 1)); }
  const std::vector<TreeEdge>& edges() const { return edges_; }
  /// Edge ending where edge j starts; 0 for edge 1.
  int parent(int j) const { return parent_.at(static_cast<std::size_t>(j)); }
  /// Chain from the root to the start of edge j, root edge first.
  const std::vector<int>& chain(int j) const { return chain_.at(static_cast<std::size_t>(j)); }
  /// Edges emanating from the end of edge j.
  const std::vector<int>& children(int j) const { return children_.at(static_cast<std::size_t>(j)); }
  bool ends_at_boundary(int j) const { return children(j).empty(); }
  /// Distance from the root to the start of edge j.
  double start_depth(int j) const { return start_.at(static_cast<std::size_t>(j)); }
  double height() const {
    double h = 0.0;
    for (int j = 1; j <= edge_count(); ++j) h = std::max(h, start_depth(j) + edge(j).length);
    return h;
  }

  bool admissible() const { return report_.empty(); }
  /// Throws InvalidInput unless every q_j vanishes (to 1e-12) at the samples of
  /// (0, min{l_j, a - |v_{k_j}|}) whenever |v_{k_j}| < a.
  void validate() const {
    if (!report_.empty()) throw InvalidInput(report_);
  }

 private:
  std::string admissibility_violation() const {
    for (int j = 1; j <= edge_count(); ++j) {
      const double s = start_depth(j);
      if (s >= delay_) continue;
      const auto& e = edge(j);
      const double bound = std::min(e.length, delay_ - s);
      const double tol = 1e-12 * e.length;
      for (std::size_t i = 0; i < e.q.size(); ++i) {
        const double x = e.q.node(i);
        if (x <= tol) continue;
        if (x >= bound - tol) break;
        if (std::abs(e.q[i]) > 1e-12) {
          return detail::concat("edge ", j, ": potential must vanish on (0, ", bound, ") but q(", x,
                                ") = ", std::abs(e.q[i]));
        }
      }
    }
    return {};
  }

  int root_;
  double delay_;
  std::vector<TreeEdge> edges_;
  std::vector<int> into_, parent_;
  std::vector<std::vector<int>> children_, chain_;
  std::vector<double> start_;
  std::string report_;
};

/// Location of x - a on the chain toward the root, following y_j(s) = y_p(s + offset)
/// on half-open pieces [-x_ν, -x_{ν+1}). Empty when x - a falls before the root.
inline std::optional<DelayPoint> resolve_delay(const Tree& t, int j, double x, double a) {
  if (j < 1 || j > t.edge_count()) throw InvalidInput(detail::concat("edge index ", j, " out of range"));
  const double l = t.edge(j).length;
  if (x < -1e-12 || x > l * (1.0 + 1e-12)) throw InvalidInput(detail::concat("x = ", x, " outside edge ", j));
  t.validate();
  double s = x - a;
  if (s >= 0.0) return DelayPoint{j, s};
  const auto& c = t.chain(j);
  for (auto it = c.rbegin(); it != c.rend(); ++it) {
    s += t.edge(*it).length;
    if (s >= 0.0) return DelayPoint{*it, s};
  }
  return std::nullopt;
}

struct TreeGridOptions {
  std::size_t intervals_per_unit = 2000;
  /// Deepest ancestor a delayed argument may land on (1 = parent edge).
  int max_ancestor_depth = 2;
};

/// Per-edge GGS basis: value[i](c) and deriv[i](c) are the contribution of
/// constant C_c, c = 2(j-1) + ν - 1, at node i.
struct EdgeSolution {
  int edge = 0;
  double step = 0.0;
  std::size_t intervals = 0;
  std::vector<Eigen::VectorXcd> value, deriv;
  std::vector<cplx> q;
  std::vector<char> is_break;

  GridFn component(const Eigen::VectorXcd& C, bool derivative = false) const {
    const auto& src = derivative ? deriv : value;
    std::vector<cplx> v(src.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = src[i].transpose() * C;
    return GridFn(0.0, step * static_cast<double>(intervals), std::move(v));
  }
};

struct TreeGGS {
  cplx lambda;
  std::size_t per_unit = 0;
  std::size_t delay_steps = 0;
  std::vector<EdgeSolution> edges;  // edges[j - 1]
  const EdgeSolution& edge(int j) const { return edges.at(static_cast<std::size_t>(j - 1)); }
};

namespace detail {

struct IndexPoint {
  int edge = 0;
  std::size_t idx = 0;
  int depth = 0;
};

/// Node-index version of the delay walk with one-sided junction handling:
/// Side::right takes the limit from above (half-open convention), Side::left
/// from below.
inline std::optional<IndexPoint> resolve_index(const Tree& t, const std::vector<std::size_t>& n, int j,
                                               std::size_t i, std::size_t d, Side side) {
  long s = static_cast<long>(i) - static_cast<long>(d);
  const auto inside = [&](long v) { return side == Side::right ? v >= 0 : v > 0; };
  if (inside(s)) return IndexPoint{j, static_cast<std::size_t>(s), 0};
  const auto& c = t.chain(j);
  int depth = 0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) {
    ++depth;
    s += static_cast<long>(n[static_cast<std::size_t>(*it - 1)]);
    if (inside(s)) return IndexPoint{*it, static_cast<std::size_t>(s), depth};
  }
  return std::nullopt;
}

inline std::string chain_name(const Tree& t, int j) {
  std::string s;
  for (int p : t.chain(j)) s += detail::concat("e", p, " -> ");
  return s + detail::concat("e", j);
}

}  // namespace detail

/// Global general solution on the tree by the method of steps: on each edge
/// y_j = C_{1,j} cos ρx + C_{2,j} sin ρx/ρ + ∫₀^x sin ρ(x-t)/ρ q_j(t) y(t-a) dt,
/// with y(t-a) resolved along the chain toward the root.
inline TreeGGS tree_ggs(const Tree& t, cplx lambda, const TreeGridOptions& opt = {}) {
  t.validate();
  const int m = t.edge_count();
  std::vector<double> lens{t.delay()};
  for (const auto& e : t.edges()) lens.push_back(e.length);
  TreeGGS out;
  out.lambda = lambda;
  out.per_unit = detail::aligned_intervals(opt.intervals_per_unit, lens);
  const double h = 1.0 / static_cast<double>(out.per_unit);
  const std::size_t d = detail::steps(t.delay(), out.per_unit);
  out.delay_steps = d;
  if (d < 2) throw Unsupported("delay shorter than two grid steps");
  std::vector<std::size_t> n(static_cast<std::size_t>(m));
  for (int j = 1; j <= m; ++j) n[static_cast<std::size_t>(j - 1)] = detail::steps(t.edge(j).length, out.per_unit);

  std::vector<std::vector<int>> levels;
  for (int j = 1; j <= m; ++j) {
    const auto depth = t.chain(j).size();
    if (levels.size() <= depth) levels.resize(depth + 1);
    levels[depth].push_back(j);
  }
  const Eigen::Index cols = 2 * m;
  const Eigen::VectorXcd zero = Eigen::VectorXcd::Zero(cols);
  out.edges.resize(static_cast<std::size_t>(m));

  for (const auto& level : levels) {
    parallel_for(level.size(), [&](std::size_t li) {
      const int j = level[li];
      const std::size_t nj = n[static_cast<std::size_t>(j - 1)];
      EdgeSolution& es = out.edges[static_cast<std::size_t>(j - 1)];
      es.edge = j;
      es.step = h;
      es.intervals = nj;
      es.q.resize(nj + 1);
      for (std::size_t i = 0; i <= nj; ++i) es.q[i] = t.edge(j).q.at(h * static_cast<double>(i));
      es.value.assign(nj + 1, zero);
      es.deriv.assign(nj + 1, zero);
      es.is_break.assign(nj + 1, 0);
      es.is_break[0] = es.is_break[nj] = 1;

      const auto source = [&](std::size_t i, detail::Side side) {
        return detail::resolve_index(t, n, j, i, d, side);
      };
      const auto break_of = [&](const detail::IndexPoint& p) {
        return out.edges[static_cast<std::size_t>(p.edge - 1)].is_break[p.idx] != 0;
      };
      // Breakpoints: the source edge changes, or the source sits on a breakpoint.
      for (std::size_t i = 1; i < nj; ++i) {
        const auto L = source(i, detail::Side::left);
        const auto R = source(i, detail::Side::right);
        bool br = L.has_value() != R.has_value();
        if (!br && L) br = L->edge != R->edge || L->idx != R->idx || break_of(*L);
        es.is_break[i] = br ? 1 : 0;
      }
      std::vector<std::size_t> breaks;
      for (std::size_t i = 0; i <= nj; ++i) {
        if (es.is_break[i]) breaks.push_back(i);
      }

      const auto tab = detail::trig_table(lambda, nj, h);
      const Eigen::Index c1 = 2 * (j - 1), c2 = c1 + 1;
      detail::cumulative_trig(
          tab.cs, tab.sn, h, breaks, zero,
          [&](std::size_t i, detail::Side side) -> Eigen::VectorXcd {
            const auto p = source(i, side);
            if (!p || es.q[i] == cplx(0.0)) return zero;
            if (p->depth > opt.max_ancestor_depth) {
              throw NotImplemented(detail::concat("delayed argument on edge ", j, " reaches edge ", p->edge,
                                                  " across ", p->depth, " junctions (chain ",
                                                  detail::chain_name(t, j), "); at most ",
                                                  opt.max_ancestor_depth, " are supported"));
            }
            return es.q[i] * out.edges[static_cast<std::size_t>(p->edge - 1)].value[p->idx];
          },
          [&](std::size_t i, const Eigen::VectorXcd& C, const Eigen::VectorXcd& S) {
            es.value[i] = tab.sn[i] * C - tab.cs[i] * S;
            es.deriv[i] = tab.cs[i] * C + lambda * tab.sn[i] * S;
            es.value[i](c1) += tab.cs[i];
            es.value[i](c2) += tab.sn[i];
            es.deriv[i](c1) += -lambda * tab.sn[i];
            es.deriv[i](c2) += tab.cs[i];
          });
    });
  }
  return out;
}

/// The 2m x 2m system for the constants: the boundary condition at the root,
/// continuity and Kirchhoff conditions at internal vertices, boundary
/// conditions at the other boundary vertices.
inline Eigen::MatrixXcd tree_matrix(const Tree& t, const TreeGGS& g) {
  const int m = t.edge_count();
  Eigen::MatrixXcd A(2 * m, 2 * m);
  Eigen::Index row = 0;
  const auto& e1 = g.edge(1);
  A.row(row++) = (t.edge(1).nu == 0 ? e1.value[0] : e1.deriv[0]).transpose();
  for (int j = 1; j <= m; ++j) {
    const auto& ej = g.edge(j);
    const std::size_t end = ej.intervals;
    if (t.ends_at_boundary(j)) {
      A.row(row++) = (t.edge(j).nu == 0 ? ej.value[end] : ej.deriv[end]).transpose();
      continue;
    }
    Eigen::VectorXcd flux = ej.deriv[end];
    for (int k : t.children(j)) {
      A.row(row++) = (ej.value[end] - g.edge(k).value[0]).transpose();
      flux -= g.edge(k).deriv[0];
    }
    A.row(row++) = flux.transpose();
  }
  return A;
}

inline Eigen::MatrixXcd tree_matrix(const Tree& t, cplx lambda, const TreeGridOptions& opt = {}) {
  return tree_matrix(t, tree_ggs(t, lambda, opt));
}

/// Characteristic determinant of the tree problem at λ.
inline cplx assemble_tree_det(const Tree& t, cplx lambda, const TreeGridOptions& opt = {}) {
  return tree_matrix(t, lambda, opt).partialPivLu().determinant();
}

/// Zero of the tree determinant near `seed` by secant iteration in λ.
inline cplx refine_tree_root(const Tree& t, cplx seed, const TreeGridOptions& opt = {}, double tol = 1e-12,
                             int max_iter = 60) {
  cplx x0 = seed, x1 = seed + 1e-4 * (1.0 + std::abs(seed));
  cplx f0 = assemble_tree_det(t, x0, opt), f1 = assemble_tree_det(t, x1, opt);
  for (int it = 0; it < max_iter; ++it) {
    if (f1 == f0) break;
    const cplx x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
    x0 = x1;
    f0 = f1;
    x1 = x2;
    f1 = assemble_tree_det(t, x1, opt);
    if (std::abs(x1 - x0) <= tol * (1.0 + std::abs(x1)) || f1 == cplx(0.0)) return x1;
  }
  throw RootFailure("secant iteration for the tree determinant did not converge", seed);
}

/// max |-y_j'' + q_j(x) y(x-a) - λ y_j| over interior nodes of edge j that are
/// not breakpoints, with y_j'' by centered differences and y = Σ C_c (basis)_c.
inline double edge_residual(const Tree& t, const TreeGGS& g, const Eigen::VectorXcd& C, int j) {
  const auto& es = g.edge(j);
  std::vector<std::size_t> n(static_cast<std::size_t>(t.edge_count()));
  for (int k = 1; k <= t.edge_count(); ++k) n[static_cast<std::size_t>(k - 1)] = g.edge(k).intervals;
  const auto y = [&](int e, std::size_t i) { return (g.edge(e).value[i].transpose() * C)(0); };
  const double h = es.step;
  double worst = 0.0;
  for (std::size_t i = 1; i < es.intervals; ++i) {
    if (es.is_break[i]) continue;
    const cplx ypp = (y(j, i - 1) - 2.0 * y(j, i) + y(j, i + 1)) / (h * h);
    const auto p = detail::resolve_index(t, n, j, i, g.delay_steps, detail::Side::right);
    const cplx delayed = p ? y(p->edge, p->idx) : cplx(0.0);
    worst = std::max(worst, std::abs(-ypp + es.q[i] * delayed - g.lambda * y(j, i)));
  }
  return worst;
}

}  // namespace gdelay
