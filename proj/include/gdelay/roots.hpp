#pragma once

// Zeros of even entire functions of ρ, searched window by window in the
// closed right half-plane. Each window is a rectangle in the ρ-plane; its root
// count is fixed by the argument principle and Newton runs from asymptotic
// seeds have to account for every counted root.
//
// Windows: index 0 covers 0 <= Re ρ < π/2 and is counted on the symmetric
// rectangle [-π/2, π/2] x [-H, H] (evenness pairs ρ with -ρ); index n >= 1
// covers π(n - 1/2) <= Re ρ < π(n + 1/2). Boundaries sit halfway between the
// families πn and πn ± σ, so they stay clear of zeros for moderate data.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "gdelay/core.hpp"

namespace gdelay {

struct SearchOptions {
  double strip_im = 5.0;        ///< half-height H of the search strip in Im ρ
  double newton_tol = 1e-13;    ///< relative step tolerance in ρ
  int max_newton = 50;
  double collide_tol = 1e-7;    ///< iterates closer than this are the same root
  double contour_step = 0.05;   ///< initial sampling step along contours
};

/// An even entire function of ρ as seen by the window search.
struct EvenEntire {
  std::function<cplx(cplx)> value;
  std::function<std::pair<cplx, cplx>(cplx)> value_and_derivative;
  /// Order of the zero of `value` at ρ = 0 that must not be counted.
  int origin_order = 0;
  /// Number of λ-zeros sitting exactly at the origin (reported as z = 0);
  /// Newton is not asked to find them.
  int origin_roots = 0;
};

struct WindowRoot {
  cplx z;
  int multiplicity = 1;
};

/// Re ρ range owned by window n.
inline std::pair<double, double> window_re_range(int n) {
  if (n == 0) return {0.0, kPi / 2};
  return {kPi * (n - 0.5), kPi * (n + 0.5)};
}

/// Representative of {z, -z} in the closed right half-plane (upper half of the
/// imaginary axis). Ties Re z = 0 go to Im z >= 0.
inline cplx canonical_root(cplx z) {
  const double tiny = 1e-14 * (1.0 + std::abs(z));
  if (std::abs(z.real()) <= tiny) return {0.0, std::abs(z.imag())};
  return z.real() < 0 ? -z : z;
}

/// Ordering used for roots and spectra: Re ascending, ties by Im ascending.
inline bool root_less(cplx a, cplx b) {
  const double tol = 1e-12 * (1.0 + std::abs(a) + std::abs(b));
  if (std::abs(a.real() - b.real()) > tol) return a.real() < b.real();
  return a.imag() < b.imag();
}

namespace detail {

struct ContourHit {};

template <class Fn>
double arg_increment(Fn& f, cplx a, cplx fa, cplx b, cplx fb, int depth) {
  const double d = std::arg(fb / fa);
  if (std::abs(d) < 0.6 || depth > 30) return d;
  const cplx m = 0.5 * (a + b);
  const cplx fm = f(m);
  if (!(std::abs(fm) > 0.0) || !std::isfinite(std::abs(fm))) throw ContourHit{};
  return arg_increment(f, a, fa, m, fm, depth + 1) + arg_increment(f, m, fm, b, fb, depth + 1);
}

}  // namespace detail

/// Winding number of f around the positively oriented rectangle lo..hi.
template <class Fn>
int winding_number(Fn&& f, cplx lo, cplx hi, double base_step) {
  const cplx corners[5] = {lo, {hi.real(), lo.imag()}, hi, {lo.real(), hi.imag()}, lo};
  double total = 0.0;
  for (int e = 0; e < 4; ++e) {
    const cplx a = corners[e], b = corners[e + 1];
    const int segs = std::max(4, static_cast<int>(std::ceil(std::abs(b - a) / base_step)));
    cplx prev = a;
    cplx fprev = f(a);
    if (!(std::abs(fprev) > 0.0) || !std::isfinite(std::abs(fprev))) throw detail::ContourHit{};
    for (int s = 1; s <= segs; ++s) {
      const cplx p = a + (b - a) * (static_cast<double>(s) / segs);
      const cplx fp = f(p);
      if (!(std::abs(fp) > 0.0) || !std::isfinite(std::abs(fp))) throw detail::ContourHit{};
      total += detail::arg_increment(f, prev, fprev, p, fp, 0);
      prev = p;
      fprev = fp;
    }
  }
  const double turns = total / (2.0 * kPi);
  const double r = std::round(turns);
  if (std::abs(turns - r) > 0.2) throw detail::ContourHit{};
  return static_cast<int>(r);
}

/// Number of λ-zeros (zeros in the closed right half-plane, multiplicity
/// counted) owned by window n.
inline int window_zero_count(const EvenEntire& f, int n, const SearchOptions& opt) {
  const double H = opt.strip_im;
  auto [lo, hi] = window_re_range(n);
  try {
    if (n == 0) {
      const int w = winding_number(f.value, cplx(-hi, -H), cplx(hi, H), opt.contour_step);
      return (w - f.origin_order) / 2;
    }
    return winding_number(f.value, cplx(lo, -H), cplx(hi, H), opt.contour_step);
  } catch (const detail::ContourHit&) {
    throw MissedRoot(detail::concat("a zero lies on the contour of window ", n), lo, hi);
  }
}

/// Newton's method; falls back to the multiplicity-2 modified step when plain
/// Newton stalls. Throws RootFailure.
inline cplx newton_root(const EvenEntire& f, cplx seed, const SearchOptions& opt) {
  for (int mult = 1; mult <= 2; ++mult) {
    cplx z = seed;
    for (int it = 0; it < opt.max_newton; ++it) {
      auto [v, d] = f.value_and_derivative(z);
      if (v == cplx(0.0, 0.0)) return z;
      if (!(std::abs(d) > 0.0) || !std::isfinite(std::abs(v))) break;
      const cplx step = static_cast<double>(mult) * v / d;
      z -= step;
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) break;
      if (std::abs(step) < opt.newton_tol * std::max(1.0, std::abs(z))) return z;
    }
  }
  throw RootFailure(detail::concat("Newton iteration did not converge from seed ", seed), seed);
}

/// True when f has (numerically) a double zero at z.
inline bool looks_double(const EvenEntire& f, cplx z) {
  constexpr double r = 0.05;
  double fmax = 0.0;
  for (int i = 0; i < 8; ++i) {
    fmax = std::max(fmax, std::abs(f.value(z + std::polar(r, 2.0 * kPi * i / 8.0))));
  }
  const double deriv = std::abs(f.value_and_derivative(z).second);
  return deriv * r < 1e-5 * fmax;
}

/// All zeros owned by window n, found by Newton from `seeds` (plus a seed grid
/// when the primary seeds fall short) and certified by the window count.
inline std::vector<WindowRoot> roots_in_window(const EvenEntire& f, int n,
                                               std::span<const cplx> seeds,
                                               const SearchOptions& opt) {
  const auto [lo, hi] = window_re_range(n);
  const int expected = window_zero_count(f, n, opt);
  std::vector<WindowRoot> found;
  int counted = 0;
  if (n == 0 && f.origin_roots > 0) {
    found.push_back({cplx(0.0, 0.0), f.origin_roots});
    counted += f.origin_roots;
  }
  const auto owned = [&](cplx z) {
    return z.real() >= lo && z.real() < hi && std::abs(z.imag()) < opt.strip_im;
  };
  bool failed_seed = false;
  cplx failed_at{};
  const auto try_seed = [&](cplx s) {
    cplx z;
    try {
      z = canonical_root(newton_root(f, s, opt));
    } catch (const RootFailure&) {
      failed_seed = true;
      failed_at = s;
      return;
    }
    if (!owned(z)) return;
    if (std::abs(z) < opt.collide_tol && f.origin_roots > 0) return;
    for (const auto& r : found) {
      if (std::abs(r.z - z) < opt.collide_tol * std::max(1.0, std::abs(z))) return;
    }
    found.push_back({z, 1});
    ++counted;
  };
  for (cplx s : seeds) {
    if (counted >= expected) break;
    try_seed(s);
  }
  if (counted < expected) {
    const int nre = 16, nim = 9;
    for (int i = 0; i < nre && counted < expected; ++i) {
      for (int j = 0; j < nim && counted < expected; ++j) {
        const double re = lo + (hi - lo) * (i + 0.5) / nre;
        const double im = -opt.strip_im + 2.0 * opt.strip_im * (j + 0.5) / nim;
        try_seed(cplx(re, im * 0.6));
      }
    }
  }
  if (counted < expected) {
    for (auto& r : found) {
      if (counted >= expected) break;
      if (r.multiplicity == 1 && std::abs(r.z) > 0.0 && looks_double(f, r.z)) {
        r.multiplicity = 2;
        ++counted;
      }
    }
  }
  if (counted != expected) {
    if (failed_seed && counted < expected) {
      throw RootFailure(detail::concat("window ", n, ": Newton failed, found ", counted,
                                       " of ", expected, " zeros"),
                        failed_at);
    }
    throw MissedRoot(detail::concat("window ", n, ": contour counts ", expected,
                                    " zeros but Newton found ", counted),
                     lo, hi);
  }
  std::sort(found.begin(), found.end(),
            [](const WindowRoot& a, const WindowRoot& b) { return root_less(a.z, b.z); });
  return found;
}

}  // namespace gdelay
