#pragma once

// The potential-independent layer: Δ₀, the model functions S_k / F_k built
// from the potential means ω₂, ω₃ only, their zeros, and the product
// representation of a characteristic function through its zeros.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <tuple>
#include <utility>
#include <vector>

#include "gdelay/core.hpp"
#include "gdelay/roots.hpp"

namespace gdelay {

/// σ = ½ arccos(-1/3), the offset of the μ-families πn ± σ.
inline const double kSigma = 0.5 * std::acos(-1.0 / 3.0);

/// Δ₀(λ) = sin√λ / (2√λ) · (1 + 3 cos 2√λ).
inline cplx delta0(cplx lambda) {
  if (std::abs(lambda) < 1e-6) {
    // sin√λ/√λ = 1 - λ/6 + λ²/120, 1 + 3cos2√λ = 4 - 6λ + 2λ² - ...
    const cplx sinc_part = 1.0 - lambda / 6.0 + lambda * lambda / 120.0;
    const cplx cos_part = 4.0 - 6.0 * lambda + 2.0 * lambda * lambda;
    return 0.5 * sinc_part * cos_part;
  }
  const cplx rho = std::sqrt(lambda);
  return std::sin(rho) / (2.0 * rho) * (1.0 + 3.0 * std::cos(2.0 * rho));
}

/// Number of Taylor coefficients kept for series in λ around the origin.
inline constexpr int kSeriesOrder = 7;
using Series = std::array<cplx, kSeriesOrder>;

/// Model data (ω₂, ω₃, k). S_k(ρ) = ρ(1+3cos2ρ)/2·sinρ + h cos2ρ + g with
/// g = (-1)^k(ω₂-ω₃)/4 and h = -(ω₂+ω₃)/4; F_k(λ) = S_k(√λ).
struct ModelFn {
  cplx omega2{0.0, 0.0};
  cplx omega3{0.0, 0.0};
  int k = 1;

  ModelFn() = default;
  ModelFn(cplx w2, cplx w3, int kk) : omega2(w2), omega3(w3), k(kk) {
    if (k != 1 && k != 2) throw InvalidInput(detail::concat("k must be 1 or 2, got ", k));
  }

  double sign() const { return k == 1 ? -1.0 : 1.0; }
  cplx g() const { return sign() * (omega2 - omega3) / 4.0; }
  cplx h() const { return -(omega2 + omega3) / 4.0; }

  cplx S(cplx rho) const {
    return rho * 0.5 * (1.0 + 3.0 * std::cos(2.0 * rho)) * std::sin(rho) + h() * std::cos(2.0 * rho) + g();
  }

  /// {S(ρ), S'(ρ)}
  std::pair<cplx, cplx> S_with_derivative(cplx rho) const {
    const cplx s = std::sin(rho), c = std::cos(rho);
    const cplx c2 = std::cos(2.0 * rho), s2 = std::sin(2.0 * rho);
    const cplx H = 0.5 * (1.0 + 3.0 * c2) * s;
    const cplx dH = 0.5 * (1.0 + 3.0 * c2) * c - 3.0 * s * s2;
    return {rho * H + h() * c2 + g(), H + rho * dH - 2.0 * h() * s2};
  }

  cplx F(cplx lambda) const { return S(std::sqrt(lambda)); }

  /// Taylor coefficients of F_k in λ at the origin.
  Series taylor() const {
    Series a{}, c{};
    double fact = 1.0;  // (2j)!
    for (int j = 0; j < kSeriesOrder; ++j) {
      if (j > 0) fact *= (2.0 * j - 1.0) * (2.0 * j);
      c[j] = std::pow(-4.0, j) / fact;                 // cos 2ρ
      if (j + 1 < kSeriesOrder) a[j + 1] = std::pow(-1.0, j) / (fact * (2.0 * j + 1.0));  // ρ sin ρ
    }
    Series b{};
    for (int j = 0; j < kSeriesOrder; ++j) b[j] = 1.5 * c[j];
    b[0] += 0.5;
    Series f{};
    for (int i = 0; i < kSeriesOrder; ++i)
      for (int j = 0; i + j < kSeriesOrder; ++j) f[i + j] += a[i] * b[j];
    for (int j = 0; j < kSeriesOrder; ++j) f[j] += h() * c[j];
    f[0] += g();
    return f;
  }

  double scale() const { return 1.0 + std::abs(omega2) + std::abs(omega3); }
};

inline cplx eval_series(const Series& s, cplx x, int first = 0) {
  cplx acc{0.0, 0.0};
  for (int j = kSeriesOrder - 1; j >= first; --j) acc = acc * x + s[j];
  return acc;
}

/// F_k(λ) for the model m.
inline cplx F_k(const ModelFn& m, cplx lambda) { return m.F(lambda); }

struct SigmaGamma {
  double sigma;
  cplx gamma;
};

/// σ and γ_k = (√3/16)((ω₂+ω₃)/3 + (-1)^k(ω₂-ω₃)).
inline SigmaGamma sigma_gamma(const ModelFn& m) {
  const cplx gamma = std::sqrt(3.0) / 16.0 * ((m.omega2 + m.omega3) / 3.0 + m.sign() * (m.omega2 - m.omega3));
  return {kSigma, gamma};
}

/// Inverse of the γ map: ω₂ = (8/√3)(γ₁ + 2γ₂), ω₃ = (8/√3)(2γ₁ + γ₂).
inline std::pair<cplx, cplx> omega_from_gamma(cplx gamma1, cplx gamma2) {
  const double c = 8.0 / std::sqrt(3.0);
  return {c * (gamma1 + 2.0 * gamma2), c * (2.0 * gamma1 + gamma2)};
}

/// Estimate of γ_k from a μ-subspectrum indexed by n = ±1, ±2, ... (index 0,
/// if present, is ignored). Averages ½(-1)^n(μ_n - (πn+σ)²) over the top
/// quartile of the available |n| on each side, with equal weight per side so
/// the O(1/n) terms of opposite signs cancel.
inline cplx gamma_from_subspectrum(const ComplexSeq& mu) {
  std::vector<long> pos, neg;
  for (long n = mu.first_index(); n <= mu.last_index(); ++n) {
    if (n > 0) pos.push_back(n);
    if (n < 0) neg.push_back(n);
  }
  if (pos.size() < 20 || neg.size() < 20) {
    throw InsufficientData(detail::concat("gamma estimate needs >= 20 terms on each side, got ",
                                          pos.size(), " and ", neg.size()));
  }
  const auto side_mean = [&](std::vector<long> idx) {
    std::sort(idx.begin(), idx.end(), [](long a, long b) { return std::abs(a) > std::abs(b); });
    const std::size_t take = (idx.size() + 3) / 4;
    cplx acc{0.0, 0.0};
    for (std::size_t i = 0; i < take; ++i) {
      const long n = idx[i];
      const double base = kPi * static_cast<double>(n) + kSigma;
      const double parity = (n % 2 == 0) ? 1.0 : -1.0;
      acc += 0.5 * parity * (mu[n] - base * base);
    }
    return acc / static_cast<double>(take);
  };
  return 0.5 * (side_mean(pos) + side_mean(neg));
}

/// Zeros z⁰_0..z⁰_N of S_k in the closed right half-plane,
/// with the multiplicity s of the origin zero and α = lim S(ρ)/ρ^s.
struct ModelZeros {
  std::vector<cplx> zeros;
  int s = 0;
  cplx alpha{0.0, 0.0};

  /// λ⁰_n with the convention λ⁰_n = -1 when z⁰_n = 0.
  cplx lambda0(std::size_t n) const {
    const cplx z = zeros.at(n);
    if (z == cplx(0.0, 0.0)) return {-1.0, 0.0};
    return z * z;
  }
};

/// Asymptotic seeds for the model zeros owned by window n: πn with the
/// (g+h) correction and πn ± σ with the (g - h/3) correction.
inline std::vector<cplx> model_seeds(const ModelFn& m, int n) {
  const cplx g = m.g(), h = m.h();
  std::vector<cplx> seeds;
  if (n == 0) {
    seeds.push_back(kSigma);
    const cplx denom = 2.0 - 2.0 * h;
    if (std::abs(denom) > 1e-12) seeds.push_back(canonical_root(std::sqrt(-(g + h) / denom)));
    seeds.push_back(kSigma - (g + h) * 0.3);
    return seeds;
  }
  const double pn = kPi * n;
  const double parity = (n % 2 == 0) ? 1.0 : -1.0;
  const cplx xi_corr = -parity * (g + h) / (2.0 * pn);
  const cplx mu_corr = parity * std::sqrt(3.0) / (4.0 * pn) * (g - h / 3.0);
  seeds.push_back(pn - kSigma + mu_corr);
  seeds.push_back(pn + xi_corr);
  seeds.push_back(pn + kSigma + mu_corr);
  return seeds;
}

/// S_k as an EvenEntire for the window search.
inline EvenEntire model_entire(const ModelFn& m, int s) {
  EvenEntire f;
  f.value = [m](cplx rho) { return m.S(rho); };
  f.value_and_derivative = [m](cplx rho) { return m.S_with_derivative(rho); };
  f.origin_order = 0;
  f.origin_roots = s / 2;
  return f;
}

/// Origin data of F_k: s (0 or 2) and α. Throws Unsupported for s > 2.
inline std::pair<int, cplx> model_origin(const ModelFn& m) {
  const Series t = m.taylor();
  const double tol = 1e-12 * m.scale();
  if (std::abs(t[0]) >= tol) return {0, t[0]};
  if (std::abs(t[1]) < tol) throw Unsupported("zero of S_k at the origin has multiplicity > 2");
  return {2, t[1]};
}

/// First N+1 zeros of S_k. Multiple zeros are repeated.
inline ModelZeros model_zeros(const ModelFn& m, int N, const SearchOptions& opt = {}) {
  if (N < 1) throw InvalidInput("model_zeros needs N >= 1");
  ModelZeros out;
  std::tie(out.s, out.alpha) = model_origin(m);
  const EvenEntire f = model_entire(m, out.s);
  const auto want = static_cast<std::size_t>(N) + 1;
  for (int n = 0; out.zeros.size() < want; ++n) {
    const auto seeds = model_seeds(m, n);
    for (const auto& r : roots_in_window(f, n, seeds, opt)) {
      for (int j = 0; j < r.multiplicity; ++j) out.zeros.push_back(r.z);
    }
    if (n > 4 * N + 10) throw MissedRoot("model zero search ran past the expected range", 0, kPi * n);
  }
  out.zeros.resize(want);
  return out;
}

/// Eigenvalues λ_1..λ_N paired by index with the model zeros of the same ω.
struct ProductRep {
  std::vector<cplx> eigen;  ///< λ_n, n = 1..N (stored from position 0)
  ModelZeros model;         ///< at least N+1 zeros
  ModelFn fn;

  ProductRep() = default;
  ProductRep(std::vector<cplx> eig, ModelZeros mz, ModelFn m)
      : eigen(std::move(eig)), model(std::move(mz)), fn(m) {
    if (model.zeros.size() < eigen.size() + 1) {
      throw InvalidInput("ProductRep needs N+1 model zeros for N eigenvalues");
    }
  }
};

namespace detail {

/// D⁰(λ) = -α/λ⁰_0 ∏_{n>=1} (λ⁰_n - λ)/λ⁰_n in closed form: F(λ)/λ when
/// s = 2 and F(λ)/(λ - λ⁰_0) when s = 0.
inline cplx model_quotient(const ProductRep& p, cplx lambda) {
  const ModelFn& m = p.fn;
  if (p.model.s == 2) {
    if (std::abs(lambda) < 1e-4) return eval_series(m.taylor(), lambda, 1);
    return m.F(lambda) / lambda;
  }
  const cplx l0 = p.model.lambda0(0);
  const cplx d = lambda - l0;
  if (std::abs(d) < 1e-8 * (1.0 + std::abs(l0))) {
    const double del = 1e-5 * (1.0 + std::abs(l0));
    return (m.F(l0 + del) - m.F(l0 - del)) / (2.0 * del);
  }
  return m.F(lambda) / d;
}

}  // namespace detail

/// Characteristic function from its zeros:
///
///   Δ(λ) = -α/λ⁰_0 ∏_{n>=1} (λ_n - λ)/λ⁰_n
///        = D⁰(λ) · ∏_{n>=1} (λ_n - λ)/(λ⁰_n - λ),
///
/// where D⁰ is the same product over the model zeros, known in closed form
/// (F(λ)/λ if s = 2, F(λ)/(λ - λ⁰_0) if s = 0). The ratio product is truncated
/// at N; its factors are 1 + O(κ_n/n²), so the truncation error is far below
/// that of the bare product, whose factors are only 1 + O(1/n²) in λ.
/// A factor whose denominator vanishes is merged with D⁰ and evaluated as a
/// derivative.
inline cplx product_eval(const ProductRep& p, cplx lambda) {
  const std::size_t N = p.eigen.size();
  std::size_t hit = N;
  cplx ratio{1.0, 0.0};
  for (std::size_t n = 1; n <= N; ++n) {
    const cplx l0 = p.model.lambda0(n);
    const cplx num = p.eigen[n - 1] - lambda;
    const cplx den = l0 - lambda;
    if (hit == N && std::abs(den) < 1e-12 * (1.0 + std::abs(lambda))) {
      hit = n - 1;
      ratio *= num;
      continue;
    }
    ratio *= num / den;
  }
  if (hit == N) return detail::model_quotient(p, lambda) * ratio;
  // D⁰(λ)/(λ⁰_hit - λ) -> -dD⁰/dλ at λ⁰_hit.
  const cplx l0 = p.model.lambda0(hit + 1);
  const double del = 1e-5 * (1.0 + std::abs(l0));
  const cplx dD = (detail::model_quotient(p, l0 + del) - detail::model_quotient(p, l0 - del)) / (2.0 * del);
  return -dD * ratio;
}

/// Bare truncated product -α/λ⁰_0 ∏_{n=1}^N (λ_n - λ)/λ⁰_n, without the tail
/// acceleration. Used for comparisons.
inline cplx product_eval_direct(const ProductRep& p, cplx lambda) {
  cplx acc = -p.model.alpha / p.model.lambda0(0);
  for (std::size_t n = 1; n <= p.eigen.size(); ++n) acc *= (p.eigen[n - 1] - lambda) / p.model.lambda0(n);
  return acc;
}

/// (Σ_n |n (z_n - z̃_n)|²)^{1/2} over the common index range.
inline double stability_metric(const ComplexSeq& z, const ComplexSeq& z_tilde) {
  if (z.first_index() != z_tilde.first_index() || z.size() != z_tilde.size()) {
    throw InvalidInput("stability_metric: sequences must share one index range");
  }
  double acc = 0.0;
  for (long n = z.first_index(); n <= z.last_index(); ++n) {
    acc += std::norm(static_cast<double>(n) * (z[n] - z_tilde[n]));
  }
  return std::sqrt(acc);
}

}  // namespace gdelay
