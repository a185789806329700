#pragma once

#include <cmath>
#include <complex>
#include <Eigen/Dense>
#include <functional>
#include <random>
#include <vector>

#include "gdelay/core.hpp"
#include "gdelay/graph.hpp"

namespace testsupport {

using gdelay::cplx;
using gdelay::kPi;

/// Random smooth complex function on [0, 1]: a short trigonometric sum.
struct SmoothRandom {
  std::vector<cplx> a, b;
  cplx c0;

  explicit SmoothRandom(std::mt19937_64& rng, double amp = 1.0, int terms = 4) {
    std::normal_distribution<double> nd(0.0, amp);
    c0 = {nd(rng), nd(rng)};
    for (int m = 1; m <= terms; ++m) {
      a.emplace_back(nd(rng) / m, nd(rng) / m);
      b.emplace_back(nd(rng) / m, nd(rng) / m);
    }
  }

  cplx operator()(double x) const {
    cplx v = c0;
    for (std::size_t m = 0; m < a.size(); ++m) {
      const double f = kPi * static_cast<double>(m + 1) * x;
      v += a[m] * std::cos(f) + b[m] * std::sin(f);
    }
    return v;
  }
};

/// Bisection on a real function over [lo, hi] with a sign change.
inline double bisect(const std::function<double(double)>& f, double lo, double hi) {
  double flo = f(lo);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-15 * (1.0 + std::abs(mid))) break;
  }
  return 0.5 * (lo + hi);
}

/// Positive roots of a real function found by scanning with step `dx` and
/// bisecting each sign change. Tangential zeros are not detected.
inline std::vector<double> scan_roots(const std::function<double(double)>& f, double lo, double hi,
                                      double dx) {
  std::vector<double> out;
  double x0 = lo, f0 = f(lo);
  while (x0 < hi) {
    const double x1 = x0 + dx, f1 = f(x1);
    if (f0 == 0.0) {
      out.push_back(x0);
    } else if ((f0 < 0) != (f1 < 0) && f1 != 0.0) {
      out.push_back(bisect(f, x0, x1));
    }
    x0 = x1;
    f0 = f1;
  }
  return out;
}

/// Centered second difference at node i.
inline cplx fd2(const gdelay::GridFn& y, std::size_t i) {
  const double h = y.step();
  return (y[i - 1] - 2.0 * y[i] + y[i + 1]) / (h * h);
}

// Left and right limits at node m from one-sided cubic extrapolation and
// one-sided third-order differences.
struct Limits {
  cplx value_left, value_right, deriv_left, deriv_right;
};

inline Limits one_sided(const gdelay::GridFn& y, std::size_t m) {
  const double h = y.step();
  Limits l;
  l.value_left = 4.0 * y[m - 1] - 6.0 * y[m - 2] + 4.0 * y[m - 3] - y[m - 4];
  l.value_right = 4.0 * y[m + 1] - 6.0 * y[m + 2] + 4.0 * y[m + 3] - y[m + 4];
  l.deriv_left = (11.0 * y[m] - 18.0 * y[m - 1] + 9.0 * y[m - 2] - 2.0 * y[m - 3]) / (6.0 * h);
  l.deriv_right = (-11.0 * y[m] + 18.0 * y[m + 1] - 9.0 * y[m + 2] + 2.0 * y[m + 3]) / (6.0 * h);
  return l;
}

using EdgeFn = std::function<cplx(double)>;

/// Unit-length edge sampled on `nodes` points.
inline gdelay::TreeEdge unit_edge(int tail, int head, const EdgeFn& q, int nu = 0, std::size_t nodes = 2001) {
  return {tail, head, 1.0, gdelay::GridFn::sample(0.0, 1.0, nodes, q), nu};
}

/// The five-edge tree: e1 = [v0, v1], e2 = [v1, v2], e3 = [v1, v3],
/// e4 = [v2, v4], e5 = [v2, v5], unit edges. q[j] is q_{j+1}; nu holds ν₁, ν₃, ν₄, ν₅.
inline gdelay::Tree five_edge_tree(double a, const std::vector<EdgeFn>& q, const std::vector<int>& nu = {0, 0, 0, 0},
                              std::size_t nodes = 2001) {
  const int tails[5] = {0, 1, 1, 2, 2};
  const int nus[5] = {nu[0], 0, nu[1], nu[2], nu[3]};
  std::vector<gdelay::TreeEdge> edges;
  for (int j = 0; j < 5; ++j) edges.push_back(unit_edge(tails[j], j + 1, q[static_cast<std::size_t>(j)], nus[j], nodes));
  return gdelay::Tree(6, 0, a, std::move(edges));
}

/// Three-edge star of the problems with index k: q₁ = 0, ν₁ = 0, ν₂ = k - 1, ν₃ = 2 - k.
inline gdelay::Tree star3(const EdgeFn& q2, const EdgeFn& q3, int k, double a = 1.0) {
  std::vector<gdelay::TreeEdge> edges;
  edges.push_back(unit_edge(0, 1, [](double) { return cplx(0.0); }, 0));
  edges.push_back(unit_edge(1, 2, q2, k - 1));
  edges.push_back(unit_edge(1, 3, q3, 2 - k));
  return gdelay::Tree(4, 0, a, std::move(edges));
}

/// Closed-form system for the five-edge tree with a = 2, q₁ = q₂ = q₃ = 0 and
/// constant q₄ = c4, q₅ = c5. Edges 4 and 5 then see y₁(x):
///   ∫₀^x sin ρ(x-t)/ρ cos ρt dt = x S(x)/2,  ∫₀^x sin ρ(x-t)/ρ S(t) dt = (S(x) - x cos ρx)/(2λ),
/// with S(x) = sin ρx/ρ. Rows follow the order used by tree_matrix.
inline cplx five_edge_det(cplx lambda, cplx c4, cplx c5, const std::vector<int>& nu) {
  const cplx rho = std::sqrt(lambda);
  const cplx c = std::cos(rho), s = std::sin(rho) / rho;
  Eigen::Matrix<cplx, 10, 10> A = Eigen::Matrix<cplx, 10, 10>::Zero();
  A(0, nu[0]) = 1.0;
  A(1, 0) = c;  A(1, 1) = s;  A(1, 2) = -1.0;
  A(2, 0) = c;  A(2, 1) = s;  A(2, 4) = -1.0;
  A(3, 0) = -lambda * s;  A(3, 1) = c;  A(3, 3) = -1.0;  A(3, 5) = -1.0;
  A(4, 2) = c;  A(4, 3) = s;  A(4, 6) = -1.0;
  A(5, 2) = c;  A(5, 3) = s;  A(5, 8) = -1.0;
  A(6, 2) = -lambda * s;  A(6, 3) = c;  A(6, 7) = -1.0;  A(6, 9) = -1.0;
  if (nu[1] == 0) {
    A(7, 4) = c;  A(7, 5) = s;
  } else {
    A(7, 4) = -lambda * s;  A(7, 5) = c;
  }
  const cplx p_val = s / 2.0, q_val = (s - c) / (2.0 * lambda);
  const cplx p_der = (s + c) / 2.0, q_der = s / 2.0;
  const cplx cc[2] = {c4, c5};
  for (int e = 0; e < 2; ++e) {
    const int row = 8 + e, col = 6 + 2 * e;
    if (nu[static_cast<std::size_t>(2 + e)] == 0) {
      A(row, col) = c;  A(row, col + 1) = s;
      A(row, 0) = cc[e] * p_val;  A(row, 1) = cc[e] * q_val;
    } else {
      A(row, col) = -lambda * s;  A(row, col + 1) = c;
      A(row, 0) = cc[e] * p_der;  A(row, 1) = cc[e] * q_der;
    }
  }
  return A.determinant();
}

}  // namespace testsupport
