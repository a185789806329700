#pragma once

// Sampled functions on uniform grids, composite quadrature and the
// oscillatory cosine transforms used throughout the library.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "gdelay/errors.hpp"

namespace gdelay {

using cplx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;

/// Default node count of the working grids (2000 intervals). A multiple of 4
/// plus one, so x = 1 is an even node on [0, 2].
inline constexpr std::size_t kWorkingNodes = 2001;

/// Composite quadrature coefficients in units of h/24 for `count` uniform
/// nodes: Simpson on an even number of intervals; when the interval count is
/// odd the last three intervals use the 3/8 rule. All coefficients are
/// integers, so sums of constants stay exact.
inline std::vector<double> quadrature_coefficients(std::size_t count) {
  if (count < 3) {
    throw InvalidInput(detail::concat("quadrature needs at least 3 samples, got ", count));
  }
  std::vector<double> c(count, 0.0);
  const std::size_t intervals = count - 1;
  std::size_t simpson_end = intervals;  // last node index covered by Simpson
  if (intervals % 2 == 1) simpson_end = intervals - 3;
  for (std::size_t i = 0; i + 2 <= simpson_end; i += 2) {
    c[i] += 8.0;
    c[i + 1] += 32.0;
    c[i + 2] += 8.0;
  }
  if (intervals % 2 == 1) {
    const std::size_t s = simpson_end;
    c[s] += 9.0;
    c[s + 1] += 27.0;
    c[s + 2] += 27.0;
    c[s + 3] += 9.0;
  }
  return c;
}

inline std::vector<double> quadrature_weights(std::size_t count, double h) {
  auto w = quadrature_coefficients(count);
  for (auto& x : w) x *= h / 24.0;
  return w;
}

namespace detail {

/// Compensated (Neumaier) complex summation.
class CompensatedSum {
 public:
  void add(cplx v) {
    add_part(re_, cre_, v.real());
    add_part(im_, cim_, v.imag());
  }
  cplx value() const { return {re_ + cre_, im_ + cim_}; }

 private:
  static void add_part(double& sum, double& comp, double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      comp += (sum - t) + v;
    } else {
      comp += (v - t) + sum;
    }
    sum = t;
  }
  double re_ = 0.0, im_ = 0.0, cre_ = 0.0, cim_ = 0.0;
};

}  // namespace detail

/// Quadrature of raw uniform samples.
inline cplx integrate_samples(std::span<const cplx> f, double h) {
  const auto c = quadrature_coefficients(f.size());
  detail::CompensatedSum acc;
  for (std::size_t i = 0; i < f.size(); ++i) acc.add(c[i] * f[i]);
  return acc.value() * h / 24.0;
}

/// A complex function sampled at uniform nodes of [start, end], endpoints
/// included. Immutable after construction.
class GridFn {
 public:
  GridFn() = default;

  GridFn(double start, double end, std::vector<cplx> samples)
      : start_(start), end_(end), samples_(std::move(samples)) {
    if (samples_.size() < 3) {
      throw InvalidInput(detail::concat("GridFn needs at least 3 samples, got ", samples_.size()));
    }
    if (!(end_ > start_)) {
      throw InvalidInput("GridFn interval must satisfy end > start");
    }
  }

  template <class Fn>
  static GridFn sample(double start, double end, std::size_t count, Fn&& f) {
    if (count < 3) throw InvalidInput("GridFn::sample needs at least 3 nodes");
    std::vector<cplx> v(count);
    const double h = (end - start) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) {
      const double x = (i + 1 == count) ? end : start + h * static_cast<double>(i);
      v[i] = cplx(f(x));
    }
    return GridFn(start, end, std::move(v));
  }

  static GridFn constant(double start, double end, std::size_t count, cplx c) {
    return GridFn(start, end, std::vector<cplx>(count, c));
  }

  double start() const { return start_; }
  double end() const { return end_; }
  std::size_t size() const { return samples_.size(); }
  double step() const { return (end_ - start_) / static_cast<double>(samples_.size() - 1); }
  double node(std::size_t i) const {
    return (i + 1 == samples_.size()) ? end_ : start_ + step() * static_cast<double>(i);
  }
  const std::vector<cplx>& values() const { return samples_; }
  cplx operator[](std::size_t i) const { return samples_[i]; }

  /// Value at x by local cubic (4-point Lagrange) interpolation. Points within
  /// 1e-9 node spacings of a node return the node value; x outside the interval
  /// is clamped.
  cplx at(double x) const {
    const std::size_t n = samples_.size();
    const double h = step();
    double t = (x - start_) / h;
    t = std::clamp(t, 0.0, static_cast<double>(n - 1));
    const double r = std::round(t);
    if (std::abs(t - r) < 1e-9) return samples_[static_cast<std::size_t>(r)];
    if (n == 3) {
      // Quadratic through the three nodes.
      const double q0 = (t - 1) * (t - 2) / 2.0, q1 = -t * (t - 2), q2 = t * (t - 1) / 2.0;
      return q0 * samples_[0] + q1 * samples_[1] + q2 * samples_[2];
    }
    auto i = static_cast<std::ptrdiff_t>(std::floor(t)) - 1;
    i = std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(n) - 4);
    const double s = t - static_cast<double>(i);  // position within nodes i..i+3
    const double l0 = -(s - 1) * (s - 2) * (s - 3) / 6.0;
    const double l1 = s * (s - 2) * (s - 3) / 2.0;
    const double l2 = -s * (s - 1) * (s - 3) / 2.0;
    const double l3 = s * (s - 1) * (s - 2) / 6.0;
    const auto u = static_cast<std::size_t>(i);
    return l0 * samples_[u] + l1 * samples_[u + 1] + l2 * samples_[u + 2] + l3 * samples_[u + 3];
  }

  /// Resample on `count` uniform nodes of the same interval.
  GridFn resampled(std::size_t count) const {
    if (count == samples_.size()) return *this;
    return sample(start_, end_, count, [this](double x) { return at(x); });
  }

  template <class Fn>
  GridFn map(Fn&& f) const {
    std::vector<cplx> v(samples_.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(node(i), samples_[i]);
    return GridFn(start_, end_, std::move(v));
  }

 private:
  double start_ = 0.0;
  double end_ = 1.0;
  std::vector<cplx> samples_;
};

/// Complex sequence over a contiguous (possibly two-sided) integer index range.
class ComplexSeq {
 public:
  ComplexSeq() = default;
  ComplexSeq(long first_index, std::vector<cplx> entries)
      : first_(first_index), entries_(std::move(entries)) {}

  long first_index() const { return first_; }
  long last_index() const { return first_ + static_cast<long>(entries_.size()) - 1; }
  std::size_t size() const { return entries_.size(); }
  bool contains(long n) const { return n >= first_ && n <= last_index(); }
  cplx operator[](long n) const {
    if (!contains(n)) throw InvalidInput(detail::concat("ComplexSeq index ", n, " out of range"));
    return entries_[static_cast<std::size_t>(n - first_)];
  }
  const std::vector<cplx>& entries() const { return entries_; }

 private:
  long first_ = 0;
  std::vector<cplx> entries_;
};

/// Composite Simpson value of the integral of f over its interval.
inline cplx integrate(const GridFn& f) { return integrate_samples(f.values(), f.step()); }

/// L2 norm over the grid interval.
inline double l2_norm(const GridFn& f) {
  std::vector<cplx> sq(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) sq[i] = std::norm(f[i]);
  return std::sqrt(std::max(0.0, integrate_samples(sq, f.step()).real()));
}

/// L2 distance of two functions on the same interval (second is interpolated
/// onto the first's nodes when the grids differ).
inline double l2_distance(const GridFn& f, const GridFn& g) {
  std::vector<cplx> d(f.size());
  const bool same = g.size() == f.size();
  for (std::size_t i = 0; i < f.size(); ++i) d[i] = f[i] - (same ? g[i] : g.at(f.node(i)));
  return l2_norm(GridFn(f.start(), f.end(), std::move(d)));
}

/// Samples premultiplied by their quadrature weights; evaluating cosine
/// transforms of the same function at many frequencies reuses them.
class WeightedSamples {
 public:
  WeightedSamples() = default;
  explicit WeightedSamples(const GridFn& f)
      : start_(f.start()), h_(f.step()), wv_(f.size()) {
    const auto c = quadrature_coefficients(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) wv_[i] = c[i] * f[i];
  }

  /// Returns {∫ f(x) cos(ρx) dx, d/dρ of it = -∫ x f(x) sin(ρx) dx}.
  std::pair<cplx, cplx> cosine_transform(cplx rho) const {
    const cplx I(0.0, 1.0);
    detail::CompensatedSum c_acc, s_acc;
    const cplx step_fwd = std::exp(I * rho * h_);
    const cplx step_bwd = std::exp(-I * rho * h_);
    cplx ef, eb;
    constexpr std::size_t kAnchor = 64;
    for (std::size_t i = 0; i < wv_.size(); ++i) {
      const double x = start_ + h_ * static_cast<double>(i);
      if (i % kAnchor == 0) {
        ef = std::exp(I * rho * x);
        eb = std::exp(-I * rho * x);
      } else {
        ef *= step_fwd;
        eb *= step_bwd;
      }
      const cplx c = 0.5 * (ef + eb);
      const cplx s = (ef - eb) / (2.0 * I);
      c_acc.add(wv_[i] * c);
      s_acc.add(wv_[i] * x * s);
    }
    const double scale = h_ / 24.0;
    return {c_acc.value() * scale, -s_acc.value() * scale};
  }

  cplx cosine(cplx rho) const { return cosine_transform(rho).first; }

  /// ∫ f(x) x^p dx
  cplx power_moment(int p) const {
    detail::CompensatedSum acc;
    for (std::size_t i = 0; i < wv_.size(); ++i) {
      const double x = start_ + h_ * static_cast<double>(i);
      acc.add(wv_[i] * std::pow(x, p));
    }
    return acc.value() * (h_ / 24.0);
  }

  bool empty() const { return wv_.empty(); }

 private:
  double start_ = 0.0;
  double h_ = 0.0;
  std::vector<cplx> wv_;
};

/// ∫ w(x) cos(ρx) dx over the grid interval of w. Accurate when the grid has
/// at least ~10 nodes per period of Re ρ.
inline cplx cosine_moment(const GridFn& w, cplx rho) {
  return WeightedSamples(w).cosine(rho);
}

/// sin(z)/z with the removable singularity filled in.
inline cplx sinc(cplx z) {
  if (std::abs(z) < 1e-4) {
    const cplx z2 = z * z;
    return 1.0 - z2 / 6.0 + z2 * z2 / 120.0;
  }
  return std::sin(z) / z;
}

}  // namespace gdelay
