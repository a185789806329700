#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gdelay/cli.hpp"
#include "gdelay/io.hpp"
#include "support.hpp"

using namespace gdelay;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string sample(const std::string& name) { return std::string(GDELAY_SAMPLE_DIR) + "/" + name; }

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "gdelay_test_cli";
  fs::create_directories(dir);
  return dir / name;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

bool same_bits(cplx a, cplx b) { return same_bits(a.real(), b.real()) && same_bits(a.imag(), b.imag()); }

}  // namespace

TEST_CASE("unknown or missing subcommands print usage and fail", "[cli]") {
  for (const auto& args : std::vector<std::vector<std::string>>{{}, {"bogus"}, {"forward", "--nonsense"}}) {
    const auto r = run_cli(args);
    CHECK(r.code == 1);
    CHECK(r.err.find("Usage") != std::string::npos);
  }
  const auto help = run_cli({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("tree-det") != std::string::npos);
}

TEST_CASE("validation errors exit with 1", "[cli]") {
  CHECK(run_cli({"forward", "--k", "3"}).code == 1);
  CHECK(run_cli({"forward", "--n", "0"}).code == 1);
  CHECK(run_cli({"forward", "--format", "xml"}).code == 1);
  CHECK(run_cli({"forward", "--q2", "/nonexistent/q.json"}).code == 1);
  CHECK(run_cli({"eigen-seeds", "--omega2", "1"}).code == 1);
  CHECK(run_cli({"eigen-seeds", "--omega2", "1,2,3", "--omega3", "0"}).code == 1);
  CHECK(run_cli({"inverse-spectra", "--spec1", sample("q2_cos.json")}).code == 1);
  CHECK(run_cli({"tree-det", "--tree", sample("star3_k1.json")}).code == 1);
  CHECK(run_cli({"tree-det", "--tree", sample("star3_k1.json"), "--scan", "5,1,10"}).code == 1);
  const auto bad = scratch("bad.json");
  io::write_text(bad.string(), "{\"grid\": [0, 0.5, 1], \"values_re\": [1, 2]}");
  const auto r = run_cli({"forward", "--q2", bad.string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("differ in length") != std::string::npos);
}

TEST_CASE("numerical failures exit with 2", "[cli]") {
  const auto r = run_cli({"forward", "--n", "5", "--tol", "1e-30"});
  CHECK(r.code == 2);
  CHECK(r.err.find("numerical failure") != std::string::npos);
  CHECK(run_cli({"tree-det", "--tree", sample("star3_k1.json"), "--lambda", "-1000", "--refine"}).code == 2);
}

TEST_CASE("forward writes a classified spectrum table", "[cli]") {
  const auto r = run_cli({"forward", "--n", "7", "--k", "2"});
  REQUIRE(r.code == 0);
  const Spectrum s = io::spectrum_from_csv(r.out);
  REQUIRE(s.count() == 7);
  CHECK(s.k == 2);
  const double sigma = 0.5 * std::acos(-1.0 / 3.0);
  CHECK(std::abs(s.points[0].lambda - sigma * sigma) < 1e-10);
  CHECK(s.points[0].tag == Tag::mu);
  CHECK(s.points[2].tag == Tag::xi);
  CHECK(r.err.find("7 eigenvalues") != std::string::npos);
}

TEST_CASE("--out sends the table to a file and the summary to stdout", "[cli]") {
  const auto path = scratch("spec.json");
  const auto r = run_cli({"forward", "--n", "4", "--format", "json", "--out", path.string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("4 eigenvalues") != std::string::npos);
  CHECK(r.err.empty());
  CHECK(io::read_spectrum(path.string()).count() == 4);
}

TEST_CASE("file formats round-trip bit for bit", "[cli]") {
  std::mt19937_64 rng(91);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  std::uniform_int_distribution<int> ex(-300, 300);
  const auto wild = [&] { return u(rng) * std::pow(10.0, ex(rng) / 10); };

  SECTION("potential") {
    std::vector<cplx> v(257);
    for (auto& x : v) x = {wild(), wild()};
    const GridFn f(0.0, 1.0, v);
    const GridFn g = io::grid_from_json(io::parse_json(io::grid_to_json(f).dump(), "p"));
    REQUIRE(g.size() == f.size());
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(same_bits(f.values()[i], g.values()[i]));
  }
  SECTION("sequence") {
    std::vector<cplx> v(41);
    for (auto& x : v) x = {wild(), wild()};
    const ComplexSeq s(-20, v);
    const ComplexSeq t = io::seq_from_json(io::parse_json(io::seq_to_json(s).dump(), "s"));
    CHECK(t.first_index() == -20);
    for (long n = -20; n <= 20; ++n) CHECK(same_bits(s[n], t[n]));
  }
  SECTION("spectrum in both formats") {
    Spectrum s;
    s.k = 2;
    for (int i = 0; i < 50; ++i) {
      const cplx z(wild(), wild());
      s.points.push_back({z * z, z, 1 + i % 2, static_cast<Tag>(i % 3), i - 25});
    }
    for (const Spectrum& t : {io::spectrum_from_csv(io::spectrum_to_csv(s)),
                              io::spectrum_from_json(io::parse_json(io::spectrum_to_json(s).dump(), "s"))}) {
      REQUIRE(t.points.size() == s.points.size());
      CHECK(t.k == 2);
      for (std::size_t i = 0; i < s.points.size(); ++i) {
        CHECK(same_bits(s.points[i].lambda, t.points[i].lambda));
        CHECK(same_bits(s.points[i].z, t.points[i].z));
        CHECK(s.points[i].multiplicity == t.points[i].multiplicity);
        CHECK(s.points[i].tag == t.points[i].tag);
        CHECK(s.points[i].n == t.points[i].n);
      }
    }
    CHECK(io::spectrum_to_csv(io::spectrum_from_csv(io::spectrum_to_csv(s))) == io::spectrum_to_csv(s));
  }
  SECTION("tree") {
    const Tree t = io::read_tree(sample("tree5_a15.json"));
    const Tree back = io::tree_from_json(io::parse_json(io::tree_to_json(t).dump(), "t"));
    CHECK(io::tree_to_json(back) == io::tree_to_json(t));
    CHECK(assemble_tree_det(back, cplx(7.3, 0.4)) == assemble_tree_det(t, cplx(7.3, 0.4)));
  }
  SECTION("file on disk") {
    const auto path = scratch("round.csv");
    Spectrum s;
    s.points.push_back({cplx(0.1, 1.0 / 3.0), std::sqrt(cplx(0.1, 1.0 / 3.0)), 1, Tag::xi, 4});
    io::write_text(path.string(), io::spectrum_to_csv(s));
    CHECK(same_bits(io::read_spectrum(path.string()).points[0].lambda, s.points[0].lambda));
  }
}

TEST_CASE("outputs are deterministic and independent of the thread cap", "[cli]") {
  const std::vector<std::string> base{"forward", "--q2", sample("q2_cos.json"), "--q3", sample("q3_linear.json"), "--n", "30"};
  auto one = base, four = base;
  one.insert(one.end(), {"--threads", "1"});
  four.insert(four.end(), {"--threads", "4"});
  const int cap = thread_limit();
  const auto a = run_cli(base), b = run_cli(base), c = run_cli(one), d = run_cli(four);
  CHECK(thread_limit() == cap);
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out == c.out);
  CHECK(a.out == d.out);
}

TEST_CASE("eigen-seeds from means and from potentials agree", "[cli]") {
  const auto om = run_cli({"eigen-seeds", "--omega2", "0", "--omega3", "0", "--n", "6", "--format", "json"});
  const auto pot = run_cli({"eigen-seeds", "--n", "6", "--format", "json"});
  REQUIRE(om.code == 0);
  CHECK(om.out == pot.out);
  const auto j = io::parse_json(om.out, "seeds");
  CHECK(j.at("s") == 2);
  CHECK(j.at("zeros").size() == 7);
  const double sigma = 0.5 * std::acos(-1.0 / 3.0);
  CHECK(std::abs(j.at("zeros")[1].at("z").at("re").get<double>() - sigma) < 1e-12);
}

TEST_CASE("spectra written by forward feed both inverse commands", "[cli]") {
  const auto s1 = scratch("s1.csv"), s2 = scratch("s2.csv"), q = scratch("q.json");
  for (int k = 1; k <= 2; ++k) {
    REQUIRE(run_cli({"forward", "--q2", sample("q2_cos.json"), "--q3", sample("q3_linear.json"), "--k",
                     std::to_string(k), "--n", "120", "--out", (k == 1 ? s1 : s2).string()})
                .code == 0);
  }
  const auto r2 = run_cli({"inverse-spectra", "--spec1", s1.string(), "--spec2", s2.string(), "--format", "json",
                           "--out", q.string()});
  REQUIRE(r2.code == 0);
  CHECK(r2.out.find("first 20 eigenvalues") != std::string::npos);
  const auto doc = io::parse_json(io::read_text(q.string()), "q");
  const Potential q2(io::grid_from_json(doc.at("q2")));
  const Potential q3(io::grid_from_json(doc.at("q3")));
  CHECK(l2_distance(q2.q(), io::read_potential(sample("q2_cos.json")).q()) < 5e-2);
  CHECK(l2_distance(q3.q(), io::read_potential(sample("q3_linear.json")).q()) < 5e-2);
  for (const auto& r : doc.at("residual")) CHECK(r.at("max_relative_error").get<double>() < 1e-4);

  const auto r1 = run_cli({"inverse-subspectra", "--spec1", s1.string(), "--spec2", s2.string()});
  REQUIRE(r1.code == 0);
  CHECK(r1.out.rfind("x,q2_re,q2_im,q3_re,q3_im\n", 0) == 0);
}

TEST_CASE("inverse-subspectra reads explicit sequences", "[cli]") {
  const Potential z;
  const ComplexSeq mu1 = mu_from_spectrum(eigenvalues(z, z, 1, 80));
  const ComplexSeq mu2 = mu_from_spectrum(eigenvalues(z, z, 2, 80));
  const auto p1 = scratch("mu1.json"), p2 = scratch("mu2.json");
  io::write_text(p1.string(), io::seq_to_json(mu1).dump());
  io::write_text(p2.string(), io::seq_to_json(mu2).dump());
  const auto r = run_cli({"inverse-subspectra", "--mu1", p1.string(), "--mu2", p2.string(), "--format", "json"});
  REQUIRE(r.code == 0);
  const auto doc = io::parse_json(r.out, "q");
  CHECK(l2_norm(io::grid_from_json(doc.at("q2"))) < 1e-2);
  CHECK(std::abs(doc.at("omega2").at("re").get<double>()) < 1e-6);
}

TEST_CASE("roundtrip and stability report small errors", "[cli]") {
  const auto rt = run_cli({"roundtrip", "--q2", sample("q2_cos.json"), "--q3", sample("q3_linear.json"), "--n", "100",
                           "--mu-max", "25", "--format", "json"});
  REQUIRE(rt.code == 0);
  const auto j = io::parse_json(rt.out, "roundtrip");
  REQUIRE(j.size() == 2);
  CHECK(j[0].at("algorithm") == "algorithm2");
  CHECK(j[0].at("total_error").get<double>() < 5e-2);
  CHECK(j[1].at("algorithm") == "algorithm1");
  CHECK(j[1].at("omega2_error").get<double>() < 1e-2);

  const auto st = run_cli({"stability", "--n", "30", "--directions", "2", "--eps", "1e-2,5e-3"});
  REQUIRE(st.code == 0);
  std::istringstream in(st.out);
  std::string line;
  int rows = 0;
  std::getline(in, line);
  CHECK(line == "direction,eps,lhs,rhs,ratio");
  while (std::getline(in, line)) {
    const auto f = io::detail_io::split(line, ',');
    REQUIRE(f.size() == 5);
    const double ratio = std::stod(f[4]);
    CHECK(std::isfinite(ratio));
    CHECK(ratio > 0.0);
    ++rows;
  }
  CHECK(rows == 4);
}

TEST_CASE("tree-det roots on the star match the forward spectrum", "[cli]") {
  const auto td = run_cli({"tree-det", "--tree", sample("star3_k1.json"), "--scan", "0.5,40,80", "--refine"});
  REQUIRE(td.code == 0);
  const auto fw = run_cli({"forward", "--q2", sample("q2_cos.json"), "--q3", sample("q3_linear.json"), "--n", "6"});
  const Spectrum s = io::spectrum_from_csv(fw.out);
  std::vector<double> roots;
  std::istringstream in(td.out);
  std::string line;
  while (std::getline(in, line)) {
    const auto f = io::detail_io::split(line, ',');
    if (f[0] == "root") roots.push_back(std::stod(f[1]));
  }
  REQUIRE(roots.size() == 6);
  for (std::size_t i = 0; i < roots.size(); ++i) CHECK(std::abs(roots[i] - s.points[i].lambda.real()) < 1e-8);
}

TEST_CASE("paley-wiener reports the tail norm", "[cli]") {
  const auto r = run_cli({"paley-wiener", "--q2", sample("q2_bump.json"), "--n-max", "200", "--format", "json"});
  REQUIRE(r.code == 0);
  const auto j = io::parse_json(r.out, "pw");
  CHECK(j.at("tail_norm").get<double>() < 1e-3);
  CHECK(run_cli({"paley-wiener", "--spec", sample("q2_cos.json")}).code == 1);
}
