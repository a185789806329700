#include "catch_amalgamated.hpp"

#include <chrono>
#include <cmath>
#include <random>

#include "gdelay/forward.hpp"
#include "support.hpp"

using namespace gdelay;
using Catch::Matchers::WithinAbs;
using testsupport::SmoothRandom;

namespace {

Potential constant(cplx c) { return Potential::from_function([c](double) { return c; }); }

// Argument-principle count of the zeros of f inside the rectangle lo..hi,
// with a fixed fine sampling of the boundary.
template <class Fn>
int count_zeros(Fn f, cplx lo, cplx hi, int per_edge) {
  const cplx c[5] = {lo, {hi.real(), lo.imag()}, hi, {lo.real(), hi.imag()}, lo};
  double total = 0.0;
  for (int e = 0; e < 4; ++e) {
    cplx prev = f(c[e]);
    for (int i = 1; i <= per_edge; ++i) {
      const cplx cur = f(c[e] + (c[e + 1] - c[e]) * (static_cast<double>(i) / per_edge));
      total += std::arg(cur / prev);
      prev = cur;
    }
  }
  return static_cast<int>(std::lround(total / (2.0 * kPi)));
}

}  // namespace

TEST_CASE("Potential caches its mean", "[forward]") {
  const auto p = Potential::from_function([](double x) { return cplx(x * x, -x); });
  CHECK(std::abs(p.omega() - cplx(1.0 / 3.0, -0.5)) < 1e-12);
  CHECK(p.q().size() == kWorkingNodes);
  CHECK_THROWS_AS(Potential(GridFn::constant(0.0, 2.0, 11, 1.0)), InvalidInput);
}

TEST_CASE("u_pm examples", "[forward]") {
  const auto [up, um] = u_pm(constant(cplx(0.8, -0.4)));
  for (std::size_t i = 0; i < up.size(); i += 37) {
    CHECK(std::abs(up[i] - cplx(0.4, -0.2)) < 1e-15);
    CHECK(std::abs(um[i]) < 1e-15);
  }
  const auto odd = Potential::from_function([](double x) { return std::sin(2.0 * kPi * x) + (x - 0.5); });
  CHECK(l2_norm(u_pm(odd).first) < 1e-13);
  const auto [lp, lm] = u_pm(Potential::from_function([](double x) { return x; }));
  for (std::size_t i = 0; i < lp.size(); i += 41) {
    CHECK(std::abs(lp[i] - 0.25) < 1e-15);
    CHECK(std::abs(lm[i] - lm.node(i) / 4.0) < 1e-15);
  }
}

TEST_CASE("build_w for constant potentials", "[forward]") {
  const cplx c2(1.3, 0.2), c3(-0.6, 0.5);
  const auto q2 = constant(c2), q3 = constant(c3);
  const auto w1 = build_w(q2, q3, 1), w2 = build_w(q2, q3, 2);
  for (std::size_t i = 0; i < w1.w().size(); i += 50) {
    CHECK(std::abs(w1.w()[i] - c2 / 4.0) < 1e-15);
    CHECK(std::abs(w2.w()[i] - c3 / 4.0) < 1e-15);
  }
  const auto z = build_w(constant(0.0), constant(0.0), 1);
  CHECK(l2_norm(z.w()) == 0.0);
  CHECK(z.omega2() == 0.0);
  CHECK_THROWS_AS(build_w(q2, q3, 3), InvalidInput);
}

TEST_CASE("build_w integral matches the means", "[forward]") {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 10; ++i) {
    const auto q2 = Potential::from_function(SmoothRandom(rng)), q3 = Potential::from_function(SmoothRandom(rng));
    for (int k = 1; k <= 2; ++k) {
      const auto c = build_w(q2, q3, k);
      const double sg = k == 1 ? -1.0 : 1.0;
      const cplx expect = (q2.omega() + q3.omega()) / 4.0 - sg * (q2.omega() - q3.omega()) / 4.0;
      CHECK(std::abs(integrate(c.w()) - expect) < 1e-8);
      // entirety: λΔ - F at the origin equals ∫w, and F(0) + ∫w = 0
      CHECK(std::abs(c.lambda_delta(1e-30) - c.model().F(1e-30) - integrate(c.w())) < 1e-8);
      CHECK(std::abs(c.entirety_defect()) < 1e-8);
    }
  }
}

TEST_CASE("w is continuous across x = 1", "[forward]") {
  std::mt19937_64 rng(22);
  const auto q2 = Potential::from_function(SmoothRandom(rng)), q3 = Potential::from_function(SmoothRandom(rng));
  const auto c = build_w(q2, q3, 2);
  const auto& w = c.w();
  const std::size_t mid = (w.size() - 1) / 2;
  CHECK(w.node(mid) == 1.0);
  // cubic extrapolation from each side lands on the stored value
  const cplx left = 4.0 * w[mid - 1] - 6.0 * w[mid - 2] + 4.0 * w[mid - 3] - w[mid - 4];
  const cplx right = 4.0 * w[mid + 1] - 6.0 * w[mid + 2] + 4.0 * w[mid + 3] - w[mid + 4];
  CHECK(std::abs(left - w[mid]) < 1e-8);
  CHECK(std::abs(right - w[mid]) < 1e-8);
}

TEST_CASE("eval_char closed forms", "[forward]") {
  const auto z = build_w(constant(0.0), constant(0.0), 1);
  for (cplx l : {cplx(0.0), cplx(3e-5, 1e-5), cplx(2.0, 1.0), cplx(-30.0, 4.0), cplx(400.0, 0.0)}) {
    CHECK(std::abs(eval_char(z, l) - delta0(l)) < 1e-13 * (1.0 + std::abs(delta0(l))));
  }
  const cplx c2(1.3, 0.2), c3(-0.6, 0.5);
  const auto c = build_w(constant(c2), constant(c3), 1);
  for (cplx l : {cplx(2.0, 1.0), cplx(-30.0, 4.0), cplx(90.0, -2.0)}) {
    const cplx r = std::sqrt(l), r2 = l;
    const cplx expect = delta0(l) - (c2 - c3) / (4.0 * r2) - (c2 + c3) / (4.0 * r2) * std::cos(2.0 * r) +
                        c2 / 4.0 * std::sin(2.0 * r) / (r2 * r);
    CHECK(std::abs(eval_char(c, l) - expect) < 1e-12 * (1.0 + std::abs(expect)));
  }
}

TEST_CASE("eval_char near the origin is continuous", "[forward]") {
  std::mt19937_64 rng(23);
  const auto c = build_w(Potential::from_function(SmoothRandom(rng)), Potential::from_function(SmoothRandom(rng)), 1);
  const cplx a = eval_char(c, cplx(0.99e-4, 0.0)), b = eval_char(c, cplx(1.01e-4, 0.0));
  CHECK(std::abs(a - b) < 1e-5 * (1.0 + std::abs(a)));
}

TEST_CASE("eval_char rejects a non-entire kernel near 0", "[forward]") {
  const CharFn bad(1.0, 0.0, 1, GridFn::constant(0.0, 2.0, 101, 0.0));
  CHECK_THROWS_AS(eval_char(bad, 1e-6), IllPosed);
  CHECK_NOTHROW(eval_char(bad, 1.0));
}

TEST_CASE("Q_forms closed forms and direct quadrature", "[forward]") {
  const auto zq = Q_forms(constant(0.0), cplx(3.0, 1.0));
  CHECK(zq.Q == 0.0);
  CHECK(zq.dQ == 0.0);
  const cplx c(0.7, -0.3);
  for (cplx l : {cplx(3.0, 1.0), cplx(-4.0, 0.5), cplx(50.0, 0.0)}) {
    const cplx r = std::sqrt(l);
    const cplx expect = c * (std::sin(r) - r * std::cos(r)) / (2.0 * r * r * r);
    CHECK(std::abs(Q_forms(constant(c), l).Q - expect) < 1e-12);
  }
  std::mt19937_64 rng(24);
  for (int i = 0; i < 5; ++i) {
    const auto q = Potential::from_function(SmoothRandom(rng));
    const auto a = Q_forms(q, cplx(4.0, 3.0)), b = Q_forms_direct(q, cplx(4.0, 3.0));
    CHECK(std::abs(a.Q - b.Q) < 1e-9);
    CHECK(std::abs(a.dQ - b.dQ) < 1e-9);
  }
}

TEST_CASE("det_oracle agrees with eval_char", "[forward]") {
  std::mt19937_64 rng(25);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 25; ++i) {
    const auto q2 = Potential::from_function(SmoothRandom(rng)), q3 = Potential::from_function(SmoothRandom(rng));
    for (int k = 1; k <= 2; ++k) {
      const auto c = build_w(q2, q3, k);
      for (int j = 0; j < 4; ++j) {
        cplx l(100.0 * u(rng), 100.0 * u(rng));
        if (std::abs(l) > 100.0) l *= 0.5;
        const cplx d = eval_char(c, l);
        worst = std::max(worst, std::abs(det_oracle(q2, q3, k, l) - d) / (1.0 + std::abs(d)));
      }
    }
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("det_oracle zero and symmetry", "[forward]") {
  CHECK(std::abs(det_oracle(constant(0.0), constant(0.0), 1, kPi * kPi)) < 1e-14);
  std::mt19937_64 rng(26);
  const auto q2 = Potential::from_function(SmoothRandom(rng)), q3 = Potential::from_function(SmoothRandom(rng));
  const cplx l(7.0, -2.0);
  CHECK(std::abs(det_oracle(q2, q3, 1, l) - det_oracle(q3, q2, 2, l)) < 1e-13);
}

TEST_CASE("zero-potential eigenvalues", "[forward]") {
  const auto t0 = std::chrono::steady_clock::now();
  const auto ref = testsupport::scan_roots(
      [](double r) { return std::sin(r) * (1.0 + 3.0 * std::cos(2.0 * r)); }, 0.01, 7.5, 1e-3);
  for (int k = 1; k <= 2; ++k) {
    const auto s = eigenvalues(constant(0.0), constant(0.0), k, 7);
    REQUIRE(s.points.size() == 7);
    for (int i = 0; i < 7; ++i) {
      CHECK(std::abs(s.points[i].lambda - ref[i] * ref[i]) < 1e-10);
      CHECK(s.points[i].multiplicity == 1);
    }
  }
  CHECK(std::chrono::steady_clock::now() - t0 < std::chrono::seconds(1));
}

TEST_CASE("winding oracle agrees with the eigenvalue count", "[forward]") {
  std::mt19937_64 rng(27);
  for (int trial = 0; trial < 3; ++trial) {
    const auto q2 = Potential::from_function(SmoothRandom(rng, 0.5));
    const auto q3 = Potential::from_function(SmoothRandom(rng, 0.5));
    const auto c = build_w(q2, q3, 1 + trial % 2);
    const auto s = eigenvalues(c, 16);
    int inside = 0;
    for (const auto& p : s.points) {
      if (p.z.real() > 0.05 && p.z.real() < 10.5 && std::abs(p.z.imag()) < 2.0) inside += p.multiplicity;
    }
    const auto theta = [&](cplx r) { return c.theta(r); };
    CHECK(count_zeros(theta, cplx(0.05, -2.0), cplx(10.5, 2.0), 4000) == inside);
    for (const auto& p : s.points) CHECK(std::abs(c.theta(p.z)) < 1e-9 * (1.0 + std::abs(p.z)));
  }
}

TEST_CASE("spectrum ordering and symmetry", "[forward]") {
  std::mt19937_64 rng(28);
  const auto q2 = Potential::from_function(SmoothRandom(rng, 0.7));
  const auto q3 = Potential::from_function(SmoothRandom(rng, 0.7));
  const auto a = eigenvalues(q2, q3, 1, 40);
  const auto b = eigenvalues(q3, q2, 2, 40);
  REQUIRE(a.points.size() == b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    CHECK(std::abs(a.points[i].lambda - b.points[i].lambda) < 1e-9 * (1.0 + std::abs(a.points[i].lambda)));
    if (i > 0) CHECK(a.points[i].z.real() >= a.points[i - 1].z.real());
    CHECK(a.points[i].z.real() >= 0.0);
  }
}

TEST_CASE("classification of the zero-potential spectrum", "[forward]") {
  const auto z = build_w(constant(0.0), constant(0.0), 1);
  const auto s = classify_subspectra(eigenvalues(z, 30), z.model());
  // σ, π-σ, π, π+σ, 2π-σ, 2π, ...
  CHECK(s.points[0].tag == Tag::mu);
  CHECK(s.points[0].n == 0);
  for (std::size_t i = 1; i < s.points.size(); ++i) CHECK(s.points[i].tag == (i % 3 == 2 ? Tag::xi : Tag::mu));
  CHECK(s.points[1].n == -1);
  CHECK(s.points[2].n == 1);
  CHECK(s.points[3].n == 1);

  std::mt19937_64 rng(29);
  const auto small = build_w(Potential::from_function(SmoothRandom(rng, 0.05)),
                             Potential::from_function(SmoothRandom(rng, 0.05)), 2);
  const auto sp = classify_subspectra(eigenvalues(small, 30), small.model());
  int mu = 0, xi = 0, un = 0;
  for (std::size_t i = 0; i < sp.points.size(); ++i) {
    CHECK(sp.points[i].tag == s.points[i].tag);
    CHECK(sp.points[i].n == s.points[i].n);
    mu += sp.points[i].tag == Tag::mu;
    xi += sp.points[i].tag == Tag::xi;
    un += sp.points[i].tag == Tag::unclassified;
  }
  CHECK(mu + xi + un == 30);

  const auto seq = mu_subspectrum(sp);
  CHECK(seq.first_index() == -seq.last_index());
  CHECK(std::abs(seq[1] - std::pow(kPi + kSigma, 2)) < 0.1);
}

TEST_CASE("eigenvalues of q2 = 1, q3 = 0 follow the asymptotics", "[forward]") {
  const auto q2 = constant(1.0), q3 = constant(0.0);
  for (int k = 1; k <= 2; ++k) {
    const auto c = build_w(q2, q3, k);
    const auto s = eigenvalues(c, 300);
    const auto mz = model_zeros(c.model(), 300);
    double partial = 0.0, at50 = 0.0;
    for (std::size_t n = 1; n <= 300; ++n) {
      const cplx d = static_cast<double>(n) * (s.zs()[n - 1] - mz.zeros[n]);
      partial += std::norm(d);
      if (n == 150) at50 = partial;
    }
    // ℓ₂ partial sums settle: the second half adds little
    CHECK(partial - at50 < 0.05 * partial + 1e-12);
  }
}
