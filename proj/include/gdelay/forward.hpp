#pragma once

// Forward problem on the 3-star with global delay a = 1: characteristic
// functions Δ_k built from the potentials, the 5x5 determinant they must
// agree with, and eigenvalue computation / classification.

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gdelay/core.hpp"
#include "gdelay/model.hpp"
#include "gdelay/parallel.hpp"
#include "gdelay/roots.hpp"

namespace gdelay {

/// A potential on [0, 1], held on the working grid, with its mean ω.
class Potential {
 public:
  Potential() : Potential(GridFn::constant(0.0, 1.0, kWorkingNodes, 0.0)) {}

  explicit Potential(const GridFn& q, std::size_t nodes = kWorkingNodes) {
    if (std::abs(q.start()) > 1e-12 || std::abs(q.end() - 1.0) > 1e-12) {
      throw InvalidInput("a potential must be given on [0, 1]");
    }
    q_ = q.size() == nodes ? q : q.resampled(nodes);
    omega_ = integrate(q_);
  }

  template <class Fn>
  static Potential from_function(Fn&& f, std::size_t nodes = kWorkingNodes) {
    return Potential(GridFn::sample(0.0, 1.0, nodes, std::forward<Fn>(f)), nodes);
  }

  const GridFn& q() const { return q_; }
  cplx omega() const { return omega_; }
  cplx operator()(double x) const { return q_.at(x); }

 private:
  GridFn q_;
  cplx omega_{0.0, 0.0};
};

/// u⁺(x) = ¼(q((1+x)/2) + q((1-x)/2)), u⁻(x) = ¼(q((1+x)/2) - q((1-x)/2)).
/// For an odd node count n the kernels are sampled on (n+1)/2 nodes so that
/// (1 ± x)/2 falls on nodes of q.
inline std::pair<GridFn, GridFn> u_pm(const Potential& pot) {
  const GridFn& q = pot.q();
  const std::size_t n = q.size();
  const std::size_t m = (n % 2 == 1) ? (n + 1) / 2 : n;
  std::vector<cplx> up(m), um(m);
  const std::size_t mid = (n - 1) / 2;
  for (std::size_t i = 0; i < m; ++i) {
    cplx a, b;
    if (n % 2 == 1) {
      a = q[mid + i];
      b = q[mid - i];
    } else {
      const double x = static_cast<double>(i) / static_cast<double>(m - 1);
      a = q.at(0.5 * (1.0 + x));
      b = q.at(0.5 * (1.0 - x));
    }
    up[i] = 0.25 * (a + b);
    um[i] = 0.25 * (a - b);
  }
  return {GridFn(0.0, 1.0, std::move(up)), GridFn(0.0, 1.0, std::move(um))};
}

/// The data of Δ_k: λΔ_k(λ) = F_k(λ) + ∫₀^L w(x) cos(√λ x) dx. L = 2 for
/// characteristic functions of potentials; longer supports are allowed for
/// diagnostics.
class CharFn {
 public:
  CharFn() = default;
  CharFn(cplx omega2, cplx omega3, int k, GridFn w)
      : model_(omega2, omega3, k), w_(std::move(w)), ws_(w_) {
    if (std::abs(w_.start()) > 1e-12) throw InvalidInput("CharFn kernel must start at x = 0");
    for (int j = 0; j < kSeriesOrder; ++j) moments_[j] = ws_.power_moment(2 * j);
  }

  const ModelFn& model() const { return model_; }
  cplx omega2() const { return model_.omega2; }
  cplx omega3() const { return model_.omega3; }
  int k() const { return model_.k; }
  const GridFn& w() const { return w_; }

  /// θ(ρ) = ρ²Δ(ρ²) and θ'(ρ).
  std::pair<cplx, cplx> theta_with_derivative(cplx rho) const {
    auto [s, ds] = model_.S_with_derivative(rho);
    auto [c, dc] = ws_.cosine_transform(rho);
    return {s + c, ds + dc};
  }
  cplx theta(cplx rho) const { return model_.S(rho) + ws_.cosine(rho); }

  /// λΔ(λ) as a function of λ.
  cplx lambda_delta(cplx lambda) const { return theta(std::sqrt(lambda)); }

  /// F_k(0) + ∫w: zero exactly when λ ↦ Δ_k(λ) is entire.
  cplx entirety_defect() const { return model_.F(0.0) + moments_[0]; }

  double scale() const { return model_.scale() + std::abs(moments_[0]); }

  /// Taylor coefficients of λΔ(λ) at the origin.
  Series lambda_delta_series() const {
    Series t = model_.taylor();
    double fact = 1.0;
    for (int j = 0; j < kSeriesOrder; ++j) {
      if (j > 0) fact *= (2.0 * j - 1.0) * (2.0 * j);
      t[j] += std::pow(-1.0, j) * moments_[j] / fact;
    }
    return t;
  }

 private:
  ModelFn model_;
  GridFn w_;
  WeightedSamples ws_;
  Series moments_{};
};

/// w_k on [0, 2]:  w_k(x) = ½(u⁺_{k+1} + u⁻_{4-k})(1-x) on (0,1) and
/// ½(u⁺_{k+1} - u⁻_{4-k})(x-1) on (1,2). Both branches reduce to
/// ⅛[q_{k+1}(x/2) + q_{k+1}(1-x/2) - q_{4-k}(x/2) + q_{4-k}(1-x/2)], so the
/// kernel is sampled on the node count of the potentials with x/2 and 1 - x/2
/// landing on their nodes. At x = 1 both one-sided limits coincide with this
/// value.
inline CharFn build_w(const Potential& q2, const Potential& q3, int k) {
  if (k != 1 && k != 2) throw InvalidInput("k must be 1 or 2");
  const Potential& qa = (k == 1) ? q2 : q3;  // q_{k+1}
  const Potential& qb = (k == 1) ? q3 : q2;  // q_{4-k}
  const std::size_t n = qa.q().size();
  if (qb.q().size() != n) throw InvalidInput("potentials must share one grid");
  std::vector<cplx> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = n - 1 - i;
    w[i] = 0.125 * (qa.q()[i] + qa.q()[j] - qb.q()[i] + qb.q()[j]);
  }
  return CharFn(q2.omega(), q3.omega(), k, GridFn(0.0, 2.0, std::move(w)));
}

/// Δ_k(λ). Near the origin (|λ| < 1e-4) it is evaluated from the Taylor
/// series of λΔ_k(λ) = F_k(λ) + ∫ w cos√λx, which requires the constant term
/// to vanish.
inline cplx eval_char(const CharFn& c, cplx lambda) {
  if (std::abs(lambda) < 1e-4) {
    const Series t = c.lambda_delta_series();
    if (std::abs(t[0]) > 1e-8 * c.scale()) {
      throw IllPosed(detail::concat("characteristic function is not entire: F(0) + ∫w = ", t[0]));
    }
    return eval_series(t, lambda, 1);
  }
  return c.lambda_delta(lambda) / lambda;
}

/// {Δ(λ), dΔ/dλ} near the origin from the series.
inline std::pair<cplx, cplx> char_series_with_derivative(const CharFn& c, cplx lambda) {
  const Series t = c.lambda_delta_series();
  cplx v{0.0, 0.0}, d{0.0, 0.0};
  for (int j = kSeriesOrder - 1; j >= 1; --j) v = v * lambda + t[j];
  for (int j = kSeriesOrder - 1; j >= 2; --j) d = d * lambda + static_cast<double>(j - 1) * t[j];
  return {v, d};
}

/// Q_j(1, λ) and Q_j'(1, λ) through the u± forms:
///   Q(1) = ∫₀¹ u⁺(x) cos ρx dx / ρ² - ω cos ρ / (2ρ²)
///   Q'(1) = ω sin ρ / (2ρ) + ∫₀¹ u⁻(x) sin ρx dx / ρ
struct QValues {
  cplx Q;
  cplx dQ;
};

inline QValues Q_forms_direct(const Potential& pot, cplx lambda);

inline QValues Q_forms(const Potential& pot, cplx lambda) {
  const cplx rho = std::sqrt(lambda);
  if (std::abs(rho) < 1e-2) return Q_forms_direct(pot, lambda);
  auto [up, um] = u_pm(pot);
  const cplx I(0.0, 1.0);
  std::vector<cplx> fc(up.size()), fs(um.size());
  for (std::size_t i = 0; i < up.size(); ++i) {
    const double x = up.node(i);
    fc[i] = up[i] * std::cos(rho * x);
    fs[i] = um[i] * std::sin(rho * x);
  }
  const double h = up.step();
  const cplx w = pot.omega();
  const cplx Q = integrate_samples(fc, h) / (rho * rho) - w * std::cos(rho) / (2.0 * rho * rho);
  const cplx dQ = w * std::sin(rho) / (2.0 * rho) + integrate_samples(fs, h) / rho;
  return {Q, dQ};
}

/// Q_j(1, λ), Q_j'(1, λ) by direct quadrature of
/// Q(x) = ∫₀^x sin ρ(x-t)/ρ · q(t) · sin ρt/ρ dt.
inline QValues Q_forms_direct(const Potential& pot, cplx lambda) {
  const cplx rho = std::sqrt(lambda);
  const GridFn& q = pot.q();
  std::vector<cplx> f(q.size()), g(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double t = q.node(i);
    const cplx st = t * sinc(rho * t);
    f[i] = (1.0 - t) * sinc(rho * (1.0 - t)) * q[i] * st;
    g[i] = std::cos(rho * (1.0 - t)) * q[i] * st;
  }
  return {integrate_samples(f, q.step()), integrate_samples(g, q.step())};
}

/// det 𝒜_k(λ): the 5x5 system for C = [C1, C12, C22, C13, C23] obtained from
/// the matching conditions at the internal vertex and the boundary conditions
/// y2^{(k-1)}(1) = y3^{(2-k)}(1) = 0.
inline cplx det_oracle(const Potential& q2, const Potential& q3, int k, cplx lambda) {
  if (k != 1 && k != 2) throw InvalidInput("k must be 1 or 2");
  const cplx rho = std::sqrt(lambda);
  const cplx s = sinc(rho);  // sin ρ / ρ
  const cplx c = std::cos(rho);
  const cplx ms = -rho * std::sin(rho);
  const QValues Q2 = Q_forms(q2, lambda);
  const QValues Q3 = Q_forms(q3, lambda);
  Eigen::Matrix<cplx, 5, 5> A = Eigen::Matrix<cplx, 5, 5>::Zero();
  A(0, 0) = s;  A(0, 1) = -1.0;
  A(1, 1) = -1.0;  A(1, 3) = 1.0;
  A(2, 0) = c;  A(2, 2) = -1.0;  A(2, 4) = -1.0;
  if (k == 1) {
    // y2(1) = 0, y3'(1) = 0
    A(3, 0) = Q2.Q;   A(3, 1) = c;   A(3, 2) = s;
    A(4, 0) = Q3.dQ;  A(4, 3) = ms;  A(4, 4) = c;
  } else {
    // y2'(1) = 0, y3(1) = 0
    A(3, 0) = Q2.dQ;  A(3, 1) = ms;  A(3, 2) = c;
    A(4, 0) = Q3.Q;   A(4, 3) = c;   A(4, 4) = s;
  }
  return A.determinant();
}

enum class Tag { mu, xi, unclassified };

inline const char* tag_name(Tag t) {
  switch (t) {
    case Tag::mu: return "mu";
    case Tag::xi: return "xi";
    default: return "unclassified";
  }
}

struct SpectralPoint {
  cplx lambda;
  cplx z;  ///< z² = λ, closed right half-plane
  int multiplicity = 1;
  Tag tag = Tag::unclassified;
  long n = 0;
};

/// Eigenvalues ordered by Re z (ties by Im z).
struct Spectrum {
  int k = 1;
  std::vector<SpectralPoint> points;

  /// λ values with multiplicity expanded.
  std::vector<cplx> lambdas() const {
    std::vector<cplx> out;
    for (const auto& p : points)
      for (int j = 0; j < p.multiplicity; ++j) out.push_back(p.lambda);
    return out;
  }
  std::vector<cplx> zs() const {
    std::vector<cplx> out;
    for (const auto& p : points)
      for (int j = 0; j < p.multiplicity; ++j) out.push_back(p.z);
    return out;
  }
  std::size_t count() const {
    std::size_t c = 0;
    for (const auto& p : points) c += static_cast<std::size_t>(p.multiplicity);
    return c;
  }
};

/// Δ_k(ρ²) as an even entire function of ρ for the window search.
inline EvenEntire char_entire(const CharFn& c) {
  EvenEntire f;
  f.value = [&c](cplx rho) {
    if (std::abs(rho) < 0.05) return eval_char(c, rho * rho);
    return c.theta(rho) / (rho * rho);
  };
  f.value_and_derivative = [&c](cplx rho) -> std::pair<cplx, cplx> {
    if (std::abs(rho) < 0.05) {
      auto [v, d] = char_series_with_derivative(c, rho * rho);
      return {v, 2.0 * rho * d};
    }
    auto [t, dt] = c.theta_with_derivative(rho);
    const cplx r2 = rho * rho;
    return {t / r2, dt / r2 - 2.0 * t / (r2 * rho)};
  };
  f.origin_order = 0;
  f.origin_roots = 0;
  return f;
}

/// First N eigenvalues (with multiplicity) of the problem whose
/// characteristic function is c, i.e. zeros of θ(ρ) = ρ²Δ(ρ²) with Re ρ > 0.
inline Spectrum eigenvalues(const CharFn& c, int N, const SearchOptions& opt = {}) {
  if (N < 1) throw InvalidInput("eigenvalues needs N >= 1");
  const EvenEntire f = char_entire(c);
  const ModelFn& m = c.model();
  const auto [s, alpha] = model_origin(m);
  (void)alpha;
  const EvenEntire model = model_entire(m, s);

  Spectrum out;
  out.k = c.k();
  std::vector<std::vector<WindowRoot>> found;
  std::size_t have = 0;
  int next_window = 0;
  const auto batch = static_cast<std::size_t>(std::max(1, thread_limit()));
  while (have < static_cast<std::size_t>(N)) {
    // Roughly three eigenvalues per window.
    const std::size_t remaining = static_cast<std::size_t>(N) - have;
    const std::size_t todo = std::max(batch, remaining / 3 + 1);
    std::vector<std::vector<WindowRoot>> chunk(todo);
    parallel_for(todo, [&](std::size_t i) {
      const int n = next_window + static_cast<int>(i);
      std::vector<cplx> seeds;
      try {
        for (const auto& r : roots_in_window(model, n, model_seeds(m, n), opt)) {
          if (std::abs(r.z) > 0.0) seeds.push_back(r.z);
        }
      } catch (const NumericalFailure&) {
      }
      for (cplx sd : model_seeds(m, n)) seeds.push_back(sd);
      chunk[i] = roots_in_window(f, n, seeds, opt);
    });
    for (auto& w : chunk) {
      for (const auto& r : w) have += static_cast<std::size_t>(r.multiplicity);
      found.push_back(std::move(w));
    }
    next_window += static_cast<int>(todo);
    if (next_window > 4 * N + 20) throw MissedRoot("eigenvalue search ran past the expected range", 0, kPi * next_window);
  }
  std::size_t taken = 0;
  for (const auto& w : found) {
    for (const auto& r : w) {
      if (taken >= static_cast<std::size_t>(N)) break;
      const int mult = std::min<int>(r.multiplicity, N - static_cast<int>(taken));
      out.points.push_back({r.z * r.z, r.z, mult, Tag::unclassified, 0});
      taken += static_cast<std::size_t>(mult);
    }
  }
  return out;
}

inline Spectrum eigenvalues(const Potential& q2, const Potential& q3, int k, int N,
                            const SearchOptions& opt = {}) {
  const CharFn c = build_w(q2, q3, k);
  return eigenvalues(c, N, opt);
}

/// Tags each point as μ (near πn + σ, n ∈ ℤ) or ξ (near πn, n >= 1) by the
/// nearer unperturbed family in the ρ-plane. μ index n is signed: z ≈ πm + σ
/// gives n = m, z ≈ πm - σ gives n = -m; the point near σ gets n = 0. Points
/// whose two distances differ by less than 1e-3 stay unclassified.
inline Spectrum classify_subspectra(const Spectrum& s, const ModelFn& /*m*/) {
  Spectrum out = s;
  for (auto& p : out.points) {
    const double re = p.z.real();
    const long nx = std::max(1L, std::lround(re / kPi));
    const double dxi = std::abs(p.z - cplx(kPi * nx, 0.0));
    const long np = std::max(0L, std::lround((re - kSigma) / kPi));
    const long nm = std::max(1L, std::lround((re + kSigma) / kPi));
    const double dp = std::abs(p.z - cplx(kPi * np + kSigma, 0.0));
    const double dm = std::abs(p.z - cplx(kPi * nm - kSigma, 0.0));
    const double dmu = std::min(dp, dm);
    const long nmu = dp <= dm ? np : -nm;
    if (std::abs(dxi - dmu) < 1e-3) {
      p.tag = Tag::unclassified;
      p.n = 0;
    } else if (dxi < dmu) {
      p.tag = Tag::xi;
      p.n = nx;
    } else {
      p.tag = Tag::mu;
      p.n = nmu;
    }
  }
  return out;
}

/// μ_n for n = -P..P (entry at 0 is a placeholder 0) where P is the largest
/// count such that every index 1..P and -1..-P is present exactly once.
inline ComplexSeq mu_subspectrum(const Spectrum& classified) {
  std::vector<std::pair<long, cplx>> mus;
  for (const auto& p : classified.points) {
    if (p.tag != Tag::mu || p.n == 0) continue;
    for (int j = 0; j < p.multiplicity; ++j) mus.emplace_back(p.n, p.lambda);
  }
  const auto find = [&](long n) -> const cplx* {
    const cplx* hit = nullptr;
    for (const auto& [idx, v] : mus) {
      if (idx == n) {
        if (hit) return nullptr;
        hit = &v;
      }
    }
    return hit;
  };
  long P = 0;
  while (find(P + 1) && find(-(P + 1))) ++P;
  std::vector<cplx> entries(static_cast<std::size_t>(2 * P + 1), cplx(0.0, 0.0));
  for (long n = 1; n <= P; ++n) {
    entries[static_cast<std::size_t>(P + n)] = *find(n);
    entries[static_cast<std::size_t>(P - n)] = *find(-n);
  }
  return ComplexSeq(-P, std::move(entries));
}

}  // namespace gdelay
