#pragma once

// Command-line front end. run() parses the arguments, executes one
// subcommand and writes its table or document; it never calls exit().

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gdelay/core.hpp"
#include "gdelay/errors.hpp"
#include "gdelay/forward.hpp"
#include "gdelay/graph.hpp"
#include "gdelay/inverse.hpp"
#include "gdelay/io.hpp"
#include "gdelay/model.hpp"
#include "gdelay/parallel.hpp"

namespace gdelay::cli {

using nlohmann::json;

struct RunConfig {
  std::string command;

  std::string q2, q3, spec, spec1, spec2, mu1, mu2, tree, out;
  std::string format = "csv";
  std::optional<std::string> omega2, omega3;

  int k = 1;
  int n = 50;
  int m = 60;
  int mu_max = 80;
  int n_max = 600;
  int directions = 20;
  unsigned long seed = 1;
  std::vector<double> eps{1e-2, 5e-3, 2.5e-3};
  double cutoff = 0.75;

  std::vector<std::string> lambdas;
  std::string scan;
  bool refine = false;
  int max_depth = 2;

  std::optional<double> tol;
  std::optional<int> grid;
  std::optional<double> strip_im;
  std::optional<int> threads;
};

namespace detail_cli {

using gdelay::detail::concat;

inline cplx parse_complex(const std::string& s, const std::string& what) {
  const auto parts = io::detail_io::split(s, ',');
  if (parts.size() == 1) return {io::detail_io::to_double(parts[0], what), 0.0};
  if (parts.size() == 2) return {io::detail_io::to_double(parts[0], what), io::detail_io::to_double(parts[1], what)};
  throw InvalidInput(concat(what, ": expected 're' or 're,im', got '", s, "'"));
}

inline std::string fmt(double v) { return io::format_double(v); }

inline SearchOptions search_options(const RunConfig& c) {
  SearchOptions o;
  if (c.tol) o.newton_tol = *c.tol;
  if (c.strip_im) o.strip_im = *c.strip_im;
  return o;
}

inline std::size_t nodes(const RunConfig& c) { return c.grid ? static_cast<std::size_t>(*c.grid) : kWorkingNodes; }

inline Potential potential(const std::string& path, const RunConfig& c) {
  if (path.empty()) return Potential(GridFn::constant(0.0, 1.0, nodes(c), 0.0), nodes(c));
  return io::read_potential(path, nodes(c));
}

inline std::pair<Potential, Potential> potentials(const RunConfig& c) { return {potential(c.q2, c), potential(c.q3, c)}; }

/// Table or document to --out (summary to `out`) or to `out` (summary to `err`).
inline void emit(const RunConfig& c, const std::string& body, const std::string& summary, std::ostream& out,
                 std::ostream& err) {
  if (c.out.empty()) {
    out << body;
    if (!summary.empty()) err << summary;
  } else {
    io::write_text(c.out, body);
    out << summary;
  }
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline json complex_json(cplx v) { return {{"re", v.real()}, {"im", v.imag()}}; }

inline std::string potentials_csv(const Reconstruction& r) {
  std::string s = "x,q2_re,q2_im,q3_re,q3_im\n";
  const GridFn& a = r.q2.q();
  const GridFn& b = r.q3.q();
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += concat(fmt(a.node(i)), ",", fmt(a.values()[i].real()), ",", fmt(a.values()[i].imag()), ",",
                fmt(b.values()[i].real()), ",", fmt(b.values()[i].imag()), "\n");
  }
  return s;
}

inline json reconstruction_json(const Reconstruction& r) {
  json j;
  j["omega2"] = complex_json(r.omega2);
  j["omega3"] = complex_json(r.omega3);
  j["q2"] = io::grid_to_json(r.q2.q());
  j["q3"] = io::grid_to_json(r.q3.q());
  j["warnings"] = r.warnings;
  return j;
}

inline std::string omega_summary(const Reconstruction& r) {
  return concat("omega2 = ", fmt(r.omega2.real()), ",", fmt(r.omega2.imag()), "  omega3 = ", fmt(r.omega3.real()),
                ",", fmt(r.omega3.imag()), "\n");
}

inline std::optional<std::pair<cplx, cplx>> omegas(const RunConfig& c) {
  if (!c.omega2 && !c.omega3) return std::nullopt;
  if (!c.omega2 || !c.omega3) throw InvalidInput("--omega2 and --omega3 must be given together");
  return std::pair{parse_complex(*c.omega2, "--omega2"), parse_complex(*c.omega3, "--omega3")};
}

/// μ_n for 0 < |n| <= P.
inline ComplexSeq symmetric_part(const ComplexSeq& s, long P) {
  if (s.first_index() > -P || s.last_index() < P) {
    throw InsufficientData(concat("mu-subspectrum covers ", s.first_index(), "..", s.last_index(), ", need |n| <= ", P));
  }
  std::vector<cplx> v;
  for (long n = -P; n <= P; ++n) v.push_back(s[n]);
  return ComplexSeq(-P, std::move(v));
}

// ---- subcommands ----

inline int forward(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto [q2, q3] = potentials(c);
  const CharFn ch = build_w(q2, q3, c.k);
  const Spectrum s = classify_subspectra(eigenvalues(ch, c.n, search_options(c)), ch.model());
  const std::string body = c.format == "json" ? dump(io::spectrum_to_json(s)) : io::spectrum_to_csv(s);
  emit(c, body, concat("k = ", c.k, ": ", s.count(), " eigenvalues\n"), out, err);
  return 0;
}

inline int eigen_seeds(const RunConfig& c, std::ostream& out, std::ostream& err) {
  cplx w2, w3;
  if (const auto om = omegas(c)) {
    std::tie(w2, w3) = *om;
  } else {
    const auto [q2, q3] = potentials(c);
    w2 = q2.omega();
    w3 = q3.omega();
  }
  const ModelFn m(w2, w3, c.k);
  const ModelZeros z = model_zeros(m, c.n, search_options(c));
  std::string body;
  if (c.format == "json") {
    json j;
    j["k"] = c.k;
    j["omega2"] = complex_json(w2);
    j["omega3"] = complex_json(w3);
    j["s"] = z.s;
    j["alpha"] = complex_json(z.alpha);
    json zs = json::array();
    for (std::size_t i = 0; i < z.zeros.size(); ++i) {
      zs.push_back({{"index", i}, {"z", complex_json(z.zeros[i])}, {"lambda0", complex_json(z.lambda0(i))}});
    }
    j["zeros"] = std::move(zs);
    body = dump(j);
  } else {
    body = "index,z_re,z_im,lambda0_re,lambda0_im\n";
    for (std::size_t i = 0; i < z.zeros.size(); ++i) {
      body += concat(i, ",", fmt(z.zeros[i].real()), ",", fmt(z.zeros[i].imag()), ",", fmt(z.lambda0(i).real()), ",",
                     fmt(z.lambda0(i).imag()), "\n");
    }
  }
  emit(c, body, concat("s = ", z.s, "  alpha = ", fmt(z.alpha.real()), ",", fmt(z.alpha.imag()), "\n"), out, err);
  return 0;
}

inline ComplexSeq mu_input(const std::string& mu_path, const std::string& spec_path, const char* name) {
  if (!mu_path.empty()) return io::seq_from_json(io::parse_json(io::read_text(mu_path), mu_path), mu_path);
  if (!spec_path.empty()) return mu_from_spectrum(io::read_spectrum(spec_path));
  throw InvalidInput(concat("missing --mu", name, " or --spec", name));
}

inline int inverse_subspectra(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const ComplexSeq mu1 = mu_input(c.mu1, c.spec1, "1");
  const ComplexSeq mu2 = mu_input(c.mu2, c.spec2, "2");
  Algorithm1Options opt;
  opt.M = c.m;
  const Reconstruction r = algorithm1(mu1, mu2, opt);
  std::string summary = omega_summary(r);
  for (const auto& w : r.warnings) summary += "warning: " + w + "\n";
  emit(c, c.format == "json" ? dump(reconstruction_json(r)) : potentials_csv(r), summary, out, err);
  return 0;
}

inline int inverse_spectra(const RunConfig& c, std::ostream& out, std::ostream& err) {
  if (c.spec1.empty() || c.spec2.empty()) throw InvalidInput("inverse-spectra needs --spec1 and --spec2");
  const std::array<Spectrum, 2> in{io::read_spectrum(c.spec1), io::read_spectrum(c.spec2)};
  Algorithm2Options opt;
  opt.cutoff_fraction = c.cutoff;
  opt.omega = omegas(c);
  const Reconstruction r = algorithm2(in[0], in[1], opt);

  // Residual: the leading eigenvalues of the reconstruction against the input.
  json residual = json::array();
  std::string summary = omega_summary(r);
  for (int k = 1; k <= 2; ++k) {
    const auto given = in[static_cast<std::size_t>(k - 1)].lambdas();
    const int count = static_cast<int>(std::min<std::size_t>(20, given.size()));
    const auto got = eigenvalues(r.q2, r.q3, k, count, search_options(c)).lambdas();
    double worst = 0.0;
    for (int i = 0; i < count; ++i) {
      const auto u = static_cast<std::size_t>(i);
      worst = std::max(worst, std::abs(got[u] - given[u]) / (1.0 + std::abs(given[u])));
    }
    residual.push_back({{"k", k}, {"count", count}, {"max_relative_error", worst}});
    summary += concat("k = ", k, ": first ", count, " eigenvalues reproduced, max relative error ", fmt(worst), "\n");
  }
  std::string body;
  if (c.format == "json") {
    json j = reconstruction_json(r);
    j["residual"] = std::move(residual);
    body = dump(j);
  } else {
    body = potentials_csv(r);
  }
  emit(c, body, summary, out, err);
  return 0;
}

inline int roundtrip(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto [q2, q3] = potentials(c);
  const SearchOptions so = search_options(c);
  struct Row {
    std::string name;
    Reconstruction r;
  };
  std::vector<Row> rows;
  {
    Algorithm2Options opt;
    opt.cutoff_fraction = c.cutoff;
    rows.push_back({"algorithm2", algorithm2(eigenvalues(q2, q3, 1, c.n, so), eigenvalues(q2, q3, 2, c.n, so), opt)});
  }
  if (c.mu_max > 0) {
    // Three eigenvalues per period, two of them in the μ-family.
    const int N = 3 * c.mu_max + 12;
    const ComplexSeq mu1 = symmetric_part(mu_from_spectrum(eigenvalues(q2, q3, 1, N, so)), c.mu_max);
    const ComplexSeq mu2 = symmetric_part(mu_from_spectrum(eigenvalues(q2, q3, 2, N, so)), c.mu_max);
    Algorithm1Options opt;
    opt.M = c.m;
    rows.push_back({"algorithm1", algorithm1(mu1, mu2, opt)});
  }
  std::string body;
  json j = json::array();
  if (c.format != "json") body = "algorithm,q2_error,q3_error,total_error,omega2_error,omega3_error\n";
  std::string summary;
  for (const auto& row : rows) {
    const double e2 = l2_distance(row.r.q2.q(), q2.q());
    const double e3 = l2_distance(row.r.q3.q(), q3.q());
    const double o2 = std::abs(row.r.omega2 - q2.omega());
    const double o3 = std::abs(row.r.omega3 - q3.omega());
    j.push_back({{"algorithm", row.name}, {"q2_error", e2}, {"q3_error", e3}, {"total_error", e2 + e3},
                 {"omega2_error", o2}, {"omega3_error", o3}});
    body += concat(row.name, ",", fmt(e2), ",", fmt(e3), ",", fmt(e2 + e3), ",", fmt(o2), ",", fmt(o3), "\n");
    summary += concat(row.name, ": L2 error ", fmt(e2 + e3), "\n");
  }
  if (c.format == "json") body = dump(j);
  emit(c, body, summary, out, err);
  return 0;
}

inline int stability(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto base = potentials(c);
  const SearchOptions so = search_options(c);
  const std::array<Spectrum, 2> spectra{eigenvalues(base.first, base.second, 1, c.n, so),
                                        eigenvalues(base.first, base.second, 2, c.n, so)};
  std::string body = "direction,eps,lhs,rhs,ratio\n";
  json rows = json::array();
  double band = 1.0;
  for (int d = 0; d < c.directions; ++d) {
    const auto [d2, d3] = perturbation_direction(c.seed, d, nodes(c));
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (double e : c.eps) {
      const auto shift = [e](const GridFn& dq) { return dq.map([e](double, cplx v) { return e * v; }); };
      const auto add = [](const GridFn& a, const GridFn& b) {
        return a.map([&b](double x, cplx v) { return v + b.at(x); });
      };
      const std::pair<Potential, Potential> tilde{Potential(add(base.first.q(), shift(d2)), nodes(c)),
                                                  Potential(add(base.second.q(), shift(d3)), nodes(c))};
      const StabilityReport r = stability_harness(base, spectra, tilde, c.n, so);
      rows.push_back({{"direction", d}, {"eps", e}, {"lhs", r.lhs}, {"rhs", r.rhs}, {"ratio", r.ratio}});
      body += concat(d, ",", fmt(e), ",", fmt(r.lhs), ",", fmt(r.rhs), ",", fmt(r.ratio), "\n");
      if (!r.degenerate) {
        lo = std::min(lo, r.ratio);
        hi = std::max(hi, r.ratio);
      }
    }
    if (hi > 0.0) band = std::max(band, hi / lo);
  }
  if (c.format == "json") body = dump(json{{"rows", rows}, {"band", band}});
  emit(c, body, concat("largest ratio spread within a direction: ", fmt(band), "\n"), out, err);
  return 0;
}

inline int tree_det(const RunConfig& c, std::ostream& out, std::ostream& err) {
  if (c.tree.empty()) throw InvalidInput("tree-det needs --tree");
  if (c.lambdas.empty() && c.scan.empty()) throw InvalidInput("tree-det needs --lambda or --scan");
  const Tree t = io::read_tree(c.tree);
  TreeGridOptions opt;
  if (c.grid) opt.intervals_per_unit = static_cast<std::size_t>(*c.grid - 1);
  opt.max_ancestor_depth = c.max_depth;
  const double tol = c.tol.value_or(1e-12);

  struct Row {
    std::string kind;
    cplx lambda, det;
  };
  std::vector<Row> rows;
  std::vector<cplx> seeds;
  for (const auto& s : c.lambdas) {
    const cplx l = parse_complex(s, "--lambda");
    rows.push_back({"eval", l, assemble_tree_det(t, l, opt)});
    seeds.push_back(l);
  }
  if (!c.scan.empty()) {
    const auto parts = io::detail_io::split(c.scan, ',');
    if (parts.size() != 3) throw InvalidInput("--scan expects 'lo,hi,count'");
    const double lo = io::detail_io::to_double(parts[0], "--scan");
    const double hi = io::detail_io::to_double(parts[1], "--scan");
    const double cnt = io::detail_io::to_double(parts[2], "--scan");
    if (!(hi > lo) || cnt < 2 || cnt != std::floor(cnt)) throw InvalidInput("--scan needs lo < hi and count >= 2");
    const auto count = static_cast<std::size_t>(cnt);
    std::vector<cplx> dets(count);
    std::vector<double> ls(count);
    for (std::size_t i = 0; i < count; ++i) ls[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) {
      dets[i] = assemble_tree_det(t, ls[i], opt);
      rows.push_back({"scan", ls[i], dets[i]});
    }
    for (std::size_t i = 1; i < count; ++i) {
      if (dets[i - 1].real() * dets[i].real() < 0.0) seeds.push_back(0.5 * (ls[i - 1] + ls[i]));
    }
  }
  std::size_t roots = 0;
  if (c.refine) {
    for (cplx s : seeds) {
      const cplx r = refine_tree_root(t, s, opt, tol);
      rows.push_back({"root", r, assemble_tree_det(t, r, opt)});
      ++roots;
    }
  }
  std::string body;
  if (c.format == "json") {
    json j = json::array();
    for (const auto& r : rows) j.push_back({{"kind", r.kind}, {"lambda", complex_json(r.lambda)}, {"det", complex_json(r.det)}});
    body = dump(j);
  } else {
    body = "kind,lambda_re,lambda_im,det_re,det_im\n";
    for (const auto& r : rows) {
      body += concat(r.kind, ",", fmt(r.lambda.real()), ",", fmt(r.lambda.imag()), ",", fmt(r.det.real()), ",",
                     fmt(r.det.imag()), "\n");
    }
  }
  emit(c, body, concat(t.edge_count(), " edges, ", rows.size() - roots, " evaluations, ", roots, " roots\n"), out, err);
  return 0;
}

inline int paley_wiener(const RunConfig& c, std::ostream& out, std::ostream& err) {
  PaleyWienerResult r;
  if (!c.spec.empty()) {
    const auto om = omegas(c);
    if (!om) throw NeedsOmega("paley-wiener with --spec needs --omega2 and --omega3");
    const Spectrum s = io::read_spectrum(c.spec);
    const ModelFn m(om->first, om->second, s.k);
    const auto eig = s.lambdas();
    const ProductRep p(eig, model_zeros(m, static_cast<int>(eig.size()), search_options(c)), m);
    r = paley_wiener_check(p, c.n_max);
  } else {
    const auto [q2, q3] = potentials(c);
    r = paley_wiener_check(build_w(q2, q3, c.k), c.n_max);
  }
  std::string body;
  if (c.format == "json") {
    body = dump(json{{"tail_norm", r.tail_norm}, {"w", io::grid_to_json(r.w)}});
  } else {
    body = "x,w_re,w_im\n";
    for (std::size_t i = 0; i < r.w.size(); ++i) {
      body += concat(fmt(r.w.node(i)), ",", fmt(r.w.values()[i].real()), ",", fmt(r.w.values()[i].imag()), "\n");
    }
  }
  emit(c, body, concat("tail norm on (2, 3): ", fmt(r.tail_norm), "\n"), out, err);
  return 0;
}

class ThreadLimitGuard {
 public:
  ThreadLimitGuard() : saved_(gdelay::detail::thread_limit_storage()) {}
  ~ThreadLimitGuard() { set_thread_limit(saved_); }
  ThreadLimitGuard(const ThreadLimitGuard&) = delete;
  ThreadLimitGuard& operator=(const ThreadLimitGuard&) = delete;

 private:
  int saved_;
};

}  // namespace detail_cli

/// Executes one subcommand. Exit codes: 0 success, 1 invalid input or usage,
/// 2 numerical failure.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig c;
  CLI::App app("Spectral problems with global delay on star graphs and trees", "gdelay");
  app.require_subcommand(1);
  app.set_version_flag("--version", "gdelay 1.0");

  const auto common = [&c](CLI::App* s) {
    s->add_option("--out", c.out, "Output file (default: standard output)");
    s->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    s->add_option("--tol", c.tol, "Root tolerance")->check(CLI::PositiveNumber);
    s->add_option("--grid", c.grid, "Nodes per unit length")->check(CLI::Range(3, 1000001));
    s->add_option("--strip-im", c.strip_im, "Half-height of the root search strip in Im rho")->check(CLI::PositiveNumber);
    s->add_option("--threads", c.threads, "Worker thread cap (0: GDELAY_THREADS or hardware)")->check(CLI::NonNegativeNumber);
  };
  const auto pair_opts = [&c](CLI::App* s) {
    s->add_option("--q2", c.q2, "Potential q2 (JSON; zero when omitted)");
    s->add_option("--q3", c.q3, "Potential q3 (JSON; zero when omitted)");
  };
  const auto k_opt = [&c](CLI::App* s) { s->add_option("--k", c.k, "Problem index")->check(CLI::IsMember({1, 2})); };
  const auto omega_opts = [&c](CLI::App* s) {
    s->add_option("--omega2", c.omega2, "Mean of q2 as 're' or 're,im'");
    s->add_option("--omega3", c.omega3, "Mean of q3 as 're' or 're,im'");
  };

  auto* fwd = app.add_subcommand("forward", "Eigenvalues with mu/xi classification");
  pair_opts(fwd);
  k_opt(fwd);
  fwd->add_option("--n", c.n, "Number of eigenvalues")->check(CLI::PositiveNumber);
  common(fwd);

  auto* seeds = app.add_subcommand("eigen-seeds", "Zeros of the model function");
  pair_opts(seeds);
  omega_opts(seeds);
  k_opt(seeds);
  seeds->add_option("--n", c.n, "Highest zero index")->check(CLI::PositiveNumber);
  common(seeds);

  auto* inv1 = app.add_subcommand("inverse-subspectra", "Potentials from the two mu-subspectra");
  inv1->add_option("--mu1", c.mu1, "mu-subspectrum for k = 1 (JSON sequence)");
  inv1->add_option("--mu2", c.mu2, "mu-subspectrum for k = 2 (JSON sequence)");
  inv1->add_option("--spec1", c.spec1, "Spectrum for k = 1 (mu part is extracted)");
  inv1->add_option("--spec2", c.spec2, "Spectrum for k = 2 (mu part is extracted)");
  inv1->add_option("--m", c.m, "Basis truncation")->check(CLI::PositiveNumber);
  common(inv1);

  auto* inv2 = app.add_subcommand("inverse-spectra", "Potentials from the two full spectra");
  inv2->add_option("--spec1", c.spec1, "Spectrum for k = 1 (CSV or JSON)");
  inv2->add_option("--spec2", c.spec2, "Spectrum for k = 2 (CSV or JSON)");
  omega_opts(inv2);
  inv2->add_option("--cutoff", c.cutoff, "Cosine cutoff as a fraction of 2 Re z_N / pi")->check(CLI::PositiveNumber);
  common(inv2);

  auto* rt = app.add_subcommand("roundtrip", "Forward spectra, both reconstructions, L2 errors");
  pair_opts(rt);
  rt->add_option("--n", c.n, "Eigenvalues per spectrum for the full-spectrum method")->check(CLI::PositiveNumber);
  rt->add_option("--mu-max", c.mu_max, "Largest |n| of the mu-subspectra (0 skips that method)")
      ->check(CLI::NonNegativeNumber);
  rt->add_option("--m", c.m, "Basis truncation")->check(CLI::PositiveNumber);
  rt->add_option("--cutoff", c.cutoff, "Cosine cutoff fraction")->check(CLI::PositiveNumber);
  common(rt);

  auto* st = app.add_subcommand("stability", "Lipschitz ratio along random perturbation directions");
  pair_opts(st);
  st->add_option("--n", c.n, "Length of the z-sequences")->check(CLI::PositiveNumber);
  st->add_option("--directions", c.directions, "Number of directions")->check(CLI::PositiveNumber);
  st->add_option("--eps", c.eps, "Perturbation sizes")->delimiter(',')->check(CLI::PositiveNumber);
  st->add_option("--seed", c.seed, "Direction seed");
  common(st);

  auto* td = app.add_subcommand("tree-det", "Characteristic determinant on a tree");
  td->add_option("--tree", c.tree, "Tree description (JSON)");
  td->add_option("--lambda", c.lambdas, "Evaluation point 're' or 're,im' (repeatable)");
  td->add_option("--scan", c.scan, "Real scan 'lo,hi,count'");
  td->add_flag("--refine", c.refine, "Refine roots from the evaluation points and scan sign changes");
  td->add_option("--max-depth", c.max_depth, "Deepest ancestor edge a delayed argument may reach")
      ->check(CLI::PositiveNumber);
  common(td);

  auto* pw = app.add_subcommand("paley-wiener", "Support test of the reconstructed kernel on (2, 3)");
  pair_opts(pw);
  k_opt(pw);
  pw->add_option("--spec", c.spec, "Spectrum (with --omega2/--omega3) instead of potentials");
  omega_opts(pw);
  pw->add_option("--n-max", c.n_max, "Highest cosine index")->check(CLI::PositiveNumber);
  common(pw);

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << app.version() << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  c.command = app.get_subcommands().front()->get_name();
  detail_cli::ThreadLimitGuard guard;
  if (c.threads) set_thread_limit(*c.threads);

  try {
    if (fwd->parsed()) return detail_cli::forward(c, out, err);
    if (seeds->parsed()) return detail_cli::eigen_seeds(c, out, err);
    if (inv1->parsed()) return detail_cli::inverse_subspectra(c, out, err);
    if (inv2->parsed()) return detail_cli::inverse_spectra(c, out, err);
    if (rt->parsed()) return detail_cli::roundtrip(c, out, err);
    if (st->parsed()) return detail_cli::stability(c, out, err);
    if (td->parsed()) return detail_cli::tree_det(c, out, err);
    if (pw->parsed()) return detail_cli::paley_wiener(c, out, err);
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  err << app.help();
  return 1;
}

}  // namespace gdelay::cli
