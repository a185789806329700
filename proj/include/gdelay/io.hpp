#pragma once

// JSON and CSV readers and writers for potentials, sequences, spectra and trees.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "gdelay/core.hpp"
#include "gdelay/errors.hpp"
#include "gdelay/forward.hpp"
#include "gdelay/graph.hpp"

namespace gdelay::io {

using nlohmann::json;

/// Decimal text with 17 significant digits; parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput(detail::concat("cannot open '", path, "'"));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput(detail::concat("cannot write '", path, "'"));
  out << text;
  if (!out) throw InvalidInput(detail::concat("write to '", path, "' failed"));
}

inline json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidInput(detail::concat(what, ": ", e.what()));
  }
}

namespace detail_io {

inline std::vector<double> numbers(const json& j, const char* key, const std::string& what) {
  if (!j.contains(key)) throw InvalidInput(gdelay::detail::concat(what, ": missing '", key, "'"));
  const auto& a = j.at(key);
  if (!a.is_array()) throw InvalidInput(gdelay::detail::concat(what, ": '", key, "' must be an array"));
  std::vector<double> v;
  v.reserve(a.size());
  for (const auto& x : a) {
    if (!x.is_number()) throw InvalidInput(gdelay::detail::concat(what, ": '", key, "' must hold numbers"));
    v.push_back(x.get<double>());
  }
  return v;
}

inline std::vector<cplx> complex_values(const json& j, const std::string& what) {
  const auto re = numbers(j, "values_re", what);
  std::vector<double> im(re.size(), 0.0);
  if (j.contains("values_im")) im = numbers(j, "values_im", what);
  if (im.size() != re.size()) throw InvalidInput(what + ": values_re and values_im differ in length");
  std::vector<cplx> v(re.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = {re[i], im[i]};
  return v;
}

inline void put_complex_values(json& j, const std::vector<cplx>& v) {
  json re = json::array(), im = json::array();
  for (const auto& c : v) {
    re.push_back(c.real());
    im.push_back(c.imag());
  }
  j["values_re"] = std::move(re);
  j["values_im"] = std::move(im);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline double to_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InvalidInput(gdelay::detail::concat(what, ": cannot read number '", s, "'"));
  }
}

}  // namespace detail_io

/// {"grid": [...], "values_re": [...], "values_im": [...]} on a uniform grid.
inline json grid_to_json(const GridFn& f) {
  json j;
  json grid = json::array();
  for (std::size_t i = 0; i < f.size(); ++i) grid.push_back(f.node(i));
  j["grid"] = std::move(grid);
  detail_io::put_complex_values(j, f.values());
  return j;
}

inline GridFn grid_from_json(const json& j, const std::string& what = "potential") {
  if (!j.is_object()) throw InvalidInput(what + ": expected an object");
  const auto grid = detail_io::numbers(j, "grid", what);
  auto values = detail_io::complex_values(j, what);
  if (grid.size() != values.size()) throw InvalidInput(what + ": grid and values differ in length");
  if (grid.size() < 3) throw InvalidInput(what + ": at least 3 samples are required");
  const double h = (grid.back() - grid.front()) / static_cast<double>(grid.size() - 1);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (std::abs(grid[i] - (grid.front() + h * static_cast<double>(i))) > 1e-9 * std::max(1.0, std::abs(h))) {
      throw InvalidInput(what + ": grid must be uniform");
    }
  }
  return GridFn(grid.front(), grid.back(), std::move(values));
}

inline Potential read_potential(const std::string& path, std::size_t nodes = kWorkingNodes) {
  return Potential(grid_from_json(parse_json(read_text(path), path), path), nodes);
}

inline json seq_to_json(const ComplexSeq& s) {
  json j;
  j["first_index"] = s.first_index();
  detail_io::put_complex_values(j, s.entries());
  return j;
}

inline ComplexSeq seq_from_json(const json& j, const std::string& what = "sequence") {
  if (!j.is_object() || !j.contains("first_index") || !j.at("first_index").is_number_integer()) {
    throw InvalidInput(what + ": expected an object with integer 'first_index'");
  }
  return ComplexSeq(j.at("first_index").get<long>(), detail_io::complex_values(j, what));
}

inline const char* kSpectrumHeader = "k,index,lambda_re,lambda_im,z_re,z_im,multiplicity,tag,n";

inline std::string spectrum_to_csv(const Spectrum& s) {
  std::string out = std::string(kSpectrumHeader) + "\n";
  std::size_t idx = 0;
  for (const auto& p : s.points) {
    out += detail::concat(s.k, ",", idx++, ",", format_double(p.lambda.real()), ",", format_double(p.lambda.imag()),
                          ",", format_double(p.z.real()), ",", format_double(p.z.imag()), ",", p.multiplicity, ",",
                          tag_name(p.tag), ",", p.n, "\n");
  }
  return out;
}

inline Tag tag_from_name(const std::string& s, const std::string& what) {
  if (s == "mu") return Tag::mu;
  if (s == "xi") return Tag::xi;
  if (s == "unclassified") return Tag::unclassified;
  throw InvalidInput(detail::concat(what, ": unknown tag '", s, "'"));
}

inline Spectrum spectrum_from_csv(const std::string& text, const std::string& what = "spectrum") {
  Spectrum s;
  std::istringstream in(text);
  std::string line;
  bool header = false;
  int row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header) {
      if (line != kSpectrumHeader) throw InvalidInput(what + ": unexpected CSV header");
      header = true;
      continue;
    }
    const auto f = detail_io::split(line, ',');
    const std::string where = detail::concat(what, " row ", ++row);
    if (f.size() != 9) throw InvalidInput(where + ": expected 9 fields");
    SpectralPoint p;
    s.k = static_cast<int>(detail_io::to_double(f[0], where));
    p.lambda = {detail_io::to_double(f[2], where), detail_io::to_double(f[3], where)};
    p.z = {detail_io::to_double(f[4], where), detail_io::to_double(f[5], where)};
    p.multiplicity = static_cast<int>(detail_io::to_double(f[6], where));
    p.tag = tag_from_name(f[7], where);
    p.n = static_cast<long>(detail_io::to_double(f[8], where));
    s.points.push_back(p);
  }
  if (!header) throw InvalidInput(what + ": empty spectrum file");
  return s;
}

inline json spectrum_to_json(const Spectrum& s) {
  json j;
  j["k"] = s.k;
  json pts = json::array();
  for (const auto& p : s.points) {
    pts.push_back({{"lambda_re", p.lambda.real()},
                   {"lambda_im", p.lambda.imag()},
                   {"z_re", p.z.real()},
                   {"z_im", p.z.imag()},
                   {"multiplicity", p.multiplicity},
                   {"tag", tag_name(p.tag)},
                   {"n", p.n}});
  }
  j["points"] = std::move(pts);
  return j;
}

inline Spectrum spectrum_from_json(const json& j, const std::string& what = "spectrum") {
  if (!j.is_object() || !j.contains("points") || !j.at("points").is_array()) {
    throw InvalidInput(what + ": expected an object with a 'points' array");
  }
  Spectrum s;
  s.k = j.value("k", 1);
  try {
    for (const auto& e : j.at("points")) {
      SpectralPoint p;
      p.lambda = {e.at("lambda_re").get<double>(), e.value("lambda_im", 0.0)};
      p.z = e.contains("z_re") ? cplx(e.at("z_re").get<double>(), e.value("z_im", 0.0)) : canonical_root(std::sqrt(p.lambda));
      p.multiplicity = e.value("multiplicity", 1);
      p.tag = tag_from_name(e.value("tag", std::string("unclassified")), what);
      p.n = e.value("n", 0L);
      s.points.push_back(p);
    }
  } catch (const json::exception& e) {
    throw InvalidInput(detail::concat(what, ": ", e.what()));
  }
  return s;
}

/// Spectrum file in either format; JSON when the first non-blank character is '{'.
inline Spectrum read_spectrum(const std::string& path) {
  const std::string text = read_text(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') return spectrum_from_json(parse_json(text, path), path);
  return spectrum_from_csv(text, path);
}

/// Tree document:
/// {"vertices": V, "root": r, "delay": a,
///  "edges": [{"tail": t, "head": h, "length": l, "nu": 0|1, "potential": {grid, values_re, values_im}}, ...]}
/// Edges are numbered by their position (edge 1 first). A missing potential means q = 0.
inline Tree tree_from_json(const json& j, const std::string& what = "tree") {
  try {
    const int vertices = j.at("vertices").get<int>();
    const int root = j.value("root", 0);
    const double delay = j.at("delay").get<double>();
    std::vector<TreeEdge> edges;
    int idx = 0;
    for (const auto& e : j.at("edges")) {
      ++idx;
      TreeEdge te;
      te.tail = e.at("tail").get<int>();
      te.head = e.at("head").get<int>();
      te.length = e.value("length", 1.0);
      te.nu = e.value("nu", 0);
      te.q = e.contains("potential") ? grid_from_json(e.at("potential"), detail::concat(what, " edge ", idx))
                                     : GridFn::constant(0.0, te.length, 3, 0.0);
      edges.push_back(std::move(te));
    }
    return Tree(vertices, root, delay, std::move(edges));
  } catch (const json::exception& e) {
    throw InvalidInput(detail::concat(what, ": ", e.what()));
  }
}

inline json tree_to_json(const Tree& t) {
  json j;
  j["vertices"] = t.vertex_count();
  j["root"] = t.root();
  j["delay"] = t.delay();
  json edges = json::array();
  for (const auto& e : t.edges()) {
    edges.push_back({{"tail", e.tail}, {"head", e.head}, {"length", e.length}, {"nu", e.nu}, {"potential", grid_to_json(e.q)}});
  }
  j["edges"] = std::move(edges);
  return j;
}

inline Tree read_tree(const std::string& path) { return tree_from_json(parse_json(read_text(path), path), path); }

}  // namespace gdelay::io
