#pragma once

// Reconstruction of (q2, q3) from spectral data: the moment method on
// μ-subspectra, cosine inversion of the characteristic functions recovered
// from full spectra, the stability experiment and the support diagnostic.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gdelay/core.hpp"
#include "gdelay/forward.hpp"
#include "gdelay/model.hpp"
#include "gdelay/parallel.hpp"

namespace gdelay {

/// q2(x) = 2(w1 - w2)(2x) + 2(w1 + w2)(2 - 2x),
/// q3(x) = 2(w2 - w1)(2x) + 2(w1 + w2)(2 - 2x).
/// q is returned on the node count of w, so 2x and 2 - 2x are nodes of w and
/// the assembly involves no interpolation.
inline std::pair<Potential, Potential> recover_q(const GridFn& w1, const GridFn& w2) {
  const auto on_02 = [](const GridFn& w) {
    return std::abs(w.start()) < 1e-12 && std::abs(w.end() - 2.0) < 1e-12;
  };
  if (!on_02(w1) || !on_02(w2)) throw InvalidInput("recover_q expects kernels on [0, 2]");
  const std::size_t n = std::max(w1.size(), w2.size());
  const GridFn a = w1.resampled(n), b = w2.resampled(n);
  std::vector<cplx> q2(n), q3(n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t r = n - 1 - j;
    q2[j] = 2.0 * (a[j] - b[j]) + 2.0 * (a[r] + b[r]);
    q3[j] = 2.0 * (b[j] - a[j]) + 2.0 * (a[r] + b[r]);
  }
  const std::size_t nodes = std::max<std::size_t>(n, kWorkingNodes);
  return {Potential(GridFn(0.0, 1.0, std::move(q2)), nodes), Potential(GridFn(0.0, 1.0, std::move(q3)), nodes)};
}

/// One element c(x) = d^ν/dλ^ν cos(√λ x) at λ = μ.
struct BasisElement {
  cplx mu;
  int nu = 0;
  long n = 0;  ///< index of μ in the input sequence

  cplx operator()(double x) const {
    const cplx r = std::sqrt(mu);
    const bool small = std::abs(r) * std::max(1.0, x) < 1e-4;
    switch (nu) {
      case 0:
        return std::cos(r * x);
      case 1:
        if (small) return -x * x / 2.0 * (1.0 - mu * x * x / 12.0);
        return -x * std::sin(r * x) / (2.0 * r);
      case 2:
        if (small) return x * x * x * x / 12.0 * (1.0 - mu * x * x / 15.0);
        return -x * x * std::cos(r * x) / (4.0 * mu) + x * std::sin(r * x) / (4.0 * mu * r);
      default:
        throw Unsupported(detail::concat("derivative order ", nu, " is not supported"));
    }
  }
};

/// The functions c_n for a μ-sequence supplemented with μ₀ = 0. Values closer
/// than `cluster_tol` (relative to 1 + |μ|) count as one multiple point.
struct BasisSystem {
  std::vector<BasisElement> elements;
};

inline BasisSystem basis_c(const ComplexSeq& mu_seq, double cluster_tol = 1e-6) {
  struct Item {
    cplx mu;
    long n;
  };
  std::vector<Item> items{{cplx(0.0, 0.0), 0}};
  for (long n = mu_seq.first_index(); n <= mu_seq.last_index(); ++n) {
    if (n == 0) continue;
    items.push_back({mu_seq[n], n});
  }
  BasisSystem out;
  std::vector<bool> used(items.size(), false);
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (used[i]) continue;
    int nu = 0;
    for (std::size_t j = i; j < items.size(); ++j) {
      if (used[j]) continue;
      if (std::abs(items[j].mu - items[i].mu) <= cluster_tol * (1.0 + std::abs(items[i].mu))) {
        if (nu > 2) throw Unsupported("eigenvalue multiplicity above 3 in the moment basis");
        used[j] = true;
        out.elements.push_back({items[i].mu, nu, items[j].n});
        ++nu;
      }
    }
  }
  return out;
}

/// β for each basis element: -F_k^{(ν)}(μ).
struct MomentData {
  std::vector<cplx> beta;
  ModelFn model;
};

inline cplx model_derivative(const ModelFn& m, cplx mu, int nu) {
  if (nu == 0) return m.F(mu);
  const double h = 1e-4 * (1.0 + std::abs(mu));
  if (nu == 1) return (m.F(mu + h) - m.F(mu - h)) / (2.0 * h);
  if (nu == 2) return (m.F(mu + h) - 2.0 * m.F(mu) + m.F(mu - h)) / (h * h);
  throw Unsupported(detail::concat("derivative order ", nu, " is not supported"));
}

inline MomentData moments_beta(const ModelFn& m, const BasisSystem& b) {
  MomentData md;
  md.model = m;
  md.beta.reserve(b.elements.size());
  for (const auto& e : b.elements) md.beta.push_back(-model_derivative(m, e.mu, e.nu));
  return md;
}

struct MomentSolution {
  GridFn w;
  double condition = 0.0;
  bool ill_conditioned = false;
  int rank = 0;
};

namespace detail {

/// ∫₀² cos(a x) cos(b x) dx.
inline cplx cos_cos_integral(cplx a, cplx b) {
  return sinc(2.0 * (a - b)) + sinc(2.0 * (a + b));
}

}  // namespace detail

/// Least-squares solution of β_n = ∫₀² w c_n over w in span{e_0..e_M},
/// e_0 = 1/√2, e_m = cos(πmx/2). Singular values below 1e-10·σ_max are cut.
inline MomentSolution solve_w_moments(const BasisSystem& b, const MomentData& md, int M,
                                      std::size_t nodes = kWorkingNodes) {
  if (M < 0) throw InvalidInput("solve_w_moments needs M >= 0");
  if (md.beta.size() != b.elements.size()) throw InvalidInput("moment count does not match the basis");
  const auto rows = static_cast<Eigen::Index>(b.elements.size());
  const Eigen::Index cols = M + 1;
  Eigen::MatrixXcd G(rows, cols);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  const auto quad_grid = GridFn::sample(0.0, 2.0, 4001, [](double) { return 0.0; });
  parallel_for(static_cast<std::size_t>(rows), [&](std::size_t i) {
    const auto& e = b.elements[i];
    const auto r = static_cast<Eigen::Index>(i);
    if (e.nu == 0) {
      const cplx a = std::sqrt(e.mu);
      for (Eigen::Index m = 0; m < cols; ++m) {
        const double freq = kPi * static_cast<double>(m) / 2.0;
        G(r, m) = detail::cos_cos_integral(a, freq) * (m == 0 ? inv_sqrt2 : 1.0);
      }
      return;
    }
    std::vector<cplx> cv(quad_grid.size());
    for (std::size_t k = 0; k < cv.size(); ++k) cv[k] = e(quad_grid.node(k));
    const WeightedSamples ws(GridFn(0.0, 2.0, std::move(cv)));
    for (Eigen::Index m = 0; m < cols; ++m) {
      G(r, m) = ws.cosine(kPi * static_cast<double>(m) / 2.0) * (m == 0 ? inv_sqrt2 : 1.0);
    }
  });
  Eigen::VectorXcd beta(rows);
  for (Eigen::Index i = 0; i < rows; ++i) beta(i) = md.beta[static_cast<std::size_t>(i)];

  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(G, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double smax = sv.size() ? sv(0) : 0.0;
  const double cutoff = 1e-10 * smax;
  Eigen::VectorXcd utb = svd.matrixU().adjoint() * beta;
  Eigen::VectorXcd coef = Eigen::VectorXcd::Zero(cols);
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff) {
      coef += svd.matrixV().col(i) * (utb(i) / sv(i));
      ++rank;
    }
  }
  MomentSolution out;
  const double smin = sv.size() ? sv(sv.size() - 1) : 0.0;
  out.condition = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
  out.ill_conditioned = out.condition > 1e12;
  out.rank = rank;
  out.w = GridFn::sample(0.0, 2.0, nodes, [&](double x) {
    cplx v = coef(0) * inv_sqrt2;
    for (Eigen::Index m = 1; m < cols; ++m) v += coef(m) * std::cos(kPi * static_cast<double>(m) * x / 2.0);
    return v;
  });
  return out;
}

struct Reconstruction {
  Potential q2;
  Potential q3;
  cplx omega2{0.0, 0.0};
  cplx omega3{0.0, 0.0};
  GridFn w1;
  GridFn w2;
  std::vector<std::string> warnings;
};

struct Algorithm1Options {
  int M = 60;
  double cluster_tol = 1e-6;
};

/// Potentials from the two μ-subspectra (indexed n = ±1, ±2, ...).
inline Reconstruction algorithm1(const ComplexSeq& mu1, const ComplexSeq& mu2, const Algorithm1Options& opt = {}) {
  const cplx g1 = gamma_from_subspectrum(mu1);
  const cplx g2 = gamma_from_subspectrum(mu2);
  Reconstruction out;
  std::tie(out.omega2, out.omega3) = omega_from_gamma(g1, g2);
  std::array<GridFn, 2> w;
  for (int k = 1; k <= 2; ++k) {
    const ModelFn m(out.omega2, out.omega3, k);
    const BasisSystem b = basis_c(k == 1 ? mu1 : mu2, opt.cluster_tol);
    const MomentSolution s = solve_w_moments(b, moments_beta(m, b), opt.M);
    if (s.ill_conditioned) {
      out.warnings.push_back(detail::concat("k = ", k, ": moment matrix condition number ", s.condition));
    }
    w[static_cast<std::size_t>(k - 1)] = s.w;
  }
  out.w1 = w[0];
  out.w2 = w[1];
  std::tie(out.q2, out.q3) = recover_q(out.w1, out.w2);
  return out;
}

/// μ-subspectrum of a computed spectrum; throws NeedsOmega when fewer than 20
/// indices per side can be read off the classification.
inline ComplexSeq mu_from_spectrum(const Spectrum& s) {
  const ModelFn unused;
  const ComplexSeq mu = mu_subspectrum(classify_subspectra(s, unused));
  if (mu.last_index() < 20) {
    throw NeedsOmega(detail::concat("only ", mu.last_index(),
                                    " consecutive mu indices per side could be classified; supply omega explicitly"));
  }
  return mu;
}

struct Algorithm2Options {
  /// Highest cosine index used, as a fraction of 2 Re z_N / π.
  double cutoff_fraction = 0.75;
  /// Explicit (ω₂, ω₃); when absent they are estimated from the μ-parts.
  std::optional<std::pair<cplx, cplx>> omega;
};

/// Cosine coefficients A_n = λΔ(λ) - F(λ), λ = (πn/2)², n = 0..n_max, with
/// Δ evaluated from the zeros. A_0 = -F(0).
inline std::vector<cplx> algorithm2_coefficients(const ProductRep& p, int n_max) {
  std::vector<cplx> A(static_cast<std::size_t>(n_max) + 1);
  A[0] = -p.fn.F(0.0);
  parallel_for(static_cast<std::size_t>(n_max), [&](std::size_t i) {
    const double rho = kPi * static_cast<double>(i + 1) / 2.0;
    const cplx lambda = rho * rho;
    A[i + 1] = lambda * product_eval(p, lambda) - p.fn.F(lambda);
  });
  return A;
}

/// w(x) = A_0/2 + Σ_{n>=1} A_n cos(πnx/2) on [0, 2].
inline GridFn cosine_series_w(const std::vector<cplx>& A, std::size_t nodes = kWorkingNodes) {
  return GridFn::sample(0.0, 2.0, nodes, [&](double x) {
    cplx v = 0.5 * A[0];
    for (std::size_t n = 1; n < A.size(); ++n) v += A[n] * std::cos(kPi * static_cast<double>(n) * x / 2.0);
    return v;
  });
}

inline int algorithm2_cutoff(const Spectrum& s, double fraction) {
  const auto zs = s.zs();
  if (zs.empty()) throw InsufficientData("empty spectrum");
  return std::max(1, static_cast<int>(std::floor(fraction * 2.0 * zs.back().real() / kPi)));
}

/// Potentials from the two full spectra.
inline Reconstruction algorithm2(const Spectrum& spec1, const Spectrum& spec2, const Algorithm2Options& opt = {}) {
  Reconstruction out;
  if (opt.omega) {
    std::tie(out.omega2, out.omega3) = *opt.omega;
  } else {
    const cplx g1 = gamma_from_subspectrum(mu_from_spectrum(spec1));
    const cplx g2 = gamma_from_subspectrum(mu_from_spectrum(spec2));
    std::tie(out.omega2, out.omega3) = omega_from_gamma(g1, g2);
  }
  std::array<GridFn, 2> w;
  for (int k = 1; k <= 2; ++k) {
    const Spectrum& s = k == 1 ? spec1 : spec2;
    const ModelFn m(out.omega2, out.omega3, k);
    const auto eig = s.lambdas();
    const auto N = static_cast<int>(eig.size());
    const ProductRep p(eig, model_zeros(m, N), m);
    const int n_max = algorithm2_cutoff(s, opt.cutoff_fraction);
    w[static_cast<std::size_t>(k - 1)] = cosine_series_w(algorithm2_coefficients(p, n_max));
  }
  out.w1 = w[0];
  out.w2 = w[1];
  std::tie(out.q2, out.q3) = recover_q(out.w1, out.w2);
  return out;
}

struct StabilityReport {
  double lhs = 0.0;  ///< Σ_j ‖q_j - q̃_j‖
  double rhs = 0.0;  ///< Σ_k ‖{n(z_{n,k} - z̃_{n,k})}‖
  double ratio = 0.0;
  bool degenerate = false;  ///< both sides vanish
};

inline ComplexSeq z_sequence(const Spectrum& s, int N) {
  auto zs = s.zs();
  zs.resize(static_cast<std::size_t>(N));
  return ComplexSeq(1, std::move(zs));
}

/// Both sides of the Lipschitz estimate when the spectra of the first pair
/// (k = 1, 2, at least N points each) are already known.
inline StabilityReport stability_harness(const std::pair<Potential, Potential>& pair,
                                         const std::array<Spectrum, 2>& spectra,
                                         const std::pair<Potential, Potential>& pair_tilde, int N,
                                         const SearchOptions& opt = {}) {
  StabilityReport r;
  r.lhs = l2_distance(pair.first.q(), pair_tilde.first.q()) + l2_distance(pair.second.q(), pair_tilde.second.q());
  for (int k = 1; k <= 2; ++k) {
    const auto b = eigenvalues(pair_tilde.first, pair_tilde.second, k, N, opt);
    r.rhs += stability_metric(z_sequence(spectra[static_cast<std::size_t>(k - 1)], N), z_sequence(b, N));
  }
  if (r.lhs == 0.0 && r.rhs == 0.0) {
    r.degenerate = true;
    r.ratio = std::numeric_limits<double>::quiet_NaN();
  } else {
    r.ratio = r.lhs / r.rhs;
  }
  return r;
}

/// Both sides of the Lipschitz estimate for two potential pairs, with the
/// z-sequences truncated at N.
inline StabilityReport stability_harness(const std::pair<Potential, Potential>& pair,
                                         const std::pair<Potential, Potential>& pair_tilde, int N,
                                         const SearchOptions& opt = {}) {
  const std::array<Spectrum, 2> base{eigenvalues(pair.first, pair.second, 1, N, opt),
                                     eigenvalues(pair.first, pair.second, 2, N, opt)};
  return stability_harness(pair, base, pair_tilde, N, opt);
}

/// Perturbation direction number `index` for stability runs: mean-zero
/// combinations of cos πjx, j = 1..4, on both potentials, scaled so that
/// ‖δq₂‖ + ‖δq₃‖ = 1. Deterministic in (seed, index).
inline std::pair<GridFn, GridFn> perturbation_direction(std::uint64_t seed, int index,
                                                        std::size_t nodes = kWorkingNodes) {
  std::mt19937_64 rng(seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(index + 1));
  std::normal_distribution<double> nd;
  std::array<std::array<cplx, 4>, 2> c;
  for (auto& row : c)
    for (auto& v : row) v = cplx(nd(rng), nd(rng));
  std::array<GridFn, 2> d;
  for (std::size_t j = 0; j < 2; ++j) {
    d[j] = GridFn::sample(0.0, 1.0, nodes, [&](double x) {
      cplx v{0.0, 0.0};
      for (std::size_t m = 0; m < 4; ++m) v += c[j][m] * std::cos(kPi * static_cast<double>(m + 1) * x);
      return v;
    });
  }
  const double norm = l2_norm(d[0]) + l2_norm(d[1]);
  for (auto& f : d) f = f.map([norm](double, cplx v) { return v / norm; });
  return {d[0], d[1]};
}

struct PaleyWienerResult {
  double tail_norm = 0.0;  ///< L2 norm of the reconstructed w on (2, 3)
  GridFn w;                ///< reconstruction on [0, 3]
};

/// Reconstructs w on [0, 3] from λΔ(λ) - F(λ) sampled at ρ = πn/3,
/// n = 0..n_max, and reports its L2 norm on (2, 3). `lambda_delta` returns
/// λΔ(λ).
inline PaleyWienerResult paley_wiener_check(const std::function<cplx(cplx)>& lambda_delta, const ModelFn& m,
                                            int n_max, std::size_t nodes = 3001) {
  std::vector<cplx> A(static_cast<std::size_t>(n_max) + 1);
  A[0] = lambda_delta(cplx(0.0)) - m.F(0.0);
  parallel_for(static_cast<std::size_t>(n_max), [&](std::size_t i) {
    const double rho = kPi * static_cast<double>(i + 1) / 3.0;
    A[i + 1] = lambda_delta(rho * rho) - m.F(rho * rho);
  });
  PaleyWienerResult out;
  out.w = GridFn::sample(0.0, 3.0, nodes, [&](double x) {
    cplx v = A[0] / 3.0;
    for (std::size_t n = 1; n < A.size(); ++n) v += 2.0 / 3.0 * A[n] * std::cos(kPi * static_cast<double>(n) * x / 3.0);
    return v;
  });
  const std::size_t first = (nodes - 1) * 2 / 3;
  std::vector<cplx> tail(out.w.values().begin() + static_cast<std::ptrdiff_t>(first), out.w.values().end());
  out.tail_norm = l2_norm(GridFn(2.0, 3.0, std::move(tail)));
  return out;
}

inline PaleyWienerResult paley_wiener_check(const CharFn& c, int n_max = 600) {
  return paley_wiener_check([&c](cplx l) { return c.lambda_delta(l); }, c.model(), n_max);
}

inline PaleyWienerResult paley_wiener_check(const ProductRep& p, int n_max) {
  return paley_wiener_check([&p](cplx l) { return l * product_eval(p, l); }, p.fn, n_max);
}

}  // namespace gdelay
