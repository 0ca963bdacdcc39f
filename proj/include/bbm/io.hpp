#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bbm/atoms.hpp"
#include "bbm/distance.hpp"
#include "bbm/errors.hpp"
#include "bbm/family.hpp"
#include "bbm/grid.hpp"
#include "bbm/oscillation.hpp"

namespace bbm::io {

using nlohmann::json;
namespace fs = std::filesystem;

/// Shortest form is not required; 17 significant digits always round-trip.
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline double parse_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw FormatError("not a number: '" + s + "'");
  }
  while (used < s.size() && std::isspace(static_cast<unsigned char>(s[used]))) ++used;
  if (used != s.size()) throw FormatError("trailing characters in number '" + s + "'");
  return v;
}

/// Writes via a temporary file and a rename so readers never see a partial file.
inline void write_atomic(const fs::path& path, const std::string& content,
                         std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, mode | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + tmp.string() + " for writing");
    out << content;
    if (!out) throw FormatError("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline std::string read_file(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(what + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Grid files: JSON header {d, n, dtype: "f64", layout: "row-major"} with
// either "values" (inline CSV string) or "data_file" (sidecar of n^d
// little-endian IEEE-754 doubles, path relative to the header).

enum class GridStorage { inline_csv, binary };

inline std::string to_csv(std::span<const double> values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += format_double(values[i]);
  }
  return out;
}

inline std::vector<double> from_csv(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    out.push_back(parse_double(item));
  }
  return out;
}

inline std::string to_little_endian(std::span<const double> values) {
  std::string bytes(values.size() * 8, '\0');
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(values[i]);
    for (int b = 0; b < 8; ++b) bytes[i * 8 + b] = static_cast<char>((bits >> (8 * b)) & 0xffu);
  }
  return bytes;
}

inline std::vector<double> from_little_endian(const std::string& bytes) {
  if (bytes.size() % 8 != 0) throw FormatError("binary grid payload is not a multiple of 8 bytes");
  std::vector<double> out(bytes.size() / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) {
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i * 8 + b])) << (8 * b);
    }
    out[i] = std::bit_cast<double>(bits);
  }
  return out;
}

inline json grid_header(const GridFunction& f) {
  return json{{"d", f.dim()}, {"n", f.cells()}, {"dtype", "f64"}, {"layout", "row-major"}};
}

inline json grid_to_json(const GridFunction& f) {
  json j = grid_header(f);
  j["values"] = to_csv(f.values());
  return j;
}

inline GridFunction grid_from_json(const json& j, const fs::path& base_dir = {}) {
  try {
    if (j.value("dtype", "f64") != "f64") throw FormatError("only dtype f64 is supported");
    if (j.value("layout", "row-major") != "row-major") throw FormatError("only row-major layout is supported");
    const int d = j.at("d").get<int>();
    const int n = j.at("n").get<int>();
    std::vector<double> values;
    if (j.contains("values")) {
      const auto& v = j.at("values");
      values = v.is_string() ? from_csv(v.get<std::string>()) : v.get<std::vector<double>>();
    } else if (j.contains("data_file")) {
      values = from_little_endian(
          read_file(base_dir / j.at("data_file").get<std::string>(), std::ios::in | std::ios::binary));
    } else {
      throw FormatError("grid file has neither values nor data_file");
    }
    return GridFunction(d, n, std::move(values));
  } catch (const json::exception& e) {
    throw FormatError(std::string("grid header: ") + e.what());
  }
}

/// `meta` keys are copied into the header; readers ignore them.
inline void write_grid(const fs::path& path, const GridFunction& f,
                       GridStorage storage = GridStorage::inline_csv, const json& meta = json::object()) {
  json j = grid_header(f);
  for (const auto& [k, v] : meta.items()) j[k] = v;
  if (storage == GridStorage::binary) {
    fs::path data = path;
    data += ".bin";
    write_atomic(data, to_little_endian(f.values()), std::ios::out | std::ios::binary);
    j["data_file"] = data.filename().string();
  } else {
    j["values"] = to_csv(f.values());
  }
  write_atomic(path, j.dump(2) + "\n");
}

inline GridFunction read_grid(const fs::path& path) {
  return grid_from_json(parse_json(read_file(path), path.string()), path.parent_path());
}

// ---------------------------------------------------------------------------
// Families and curves.

inline json cube_to_json(const Cube& q, int dim, int n) {
  json anchor = json::array(), coords = json::array();
  for (int a = 0; a < dim; ++a) {
    anchor.push_back(q.anchor[a]);
    coords.push_back(q.anchor_coord(a, n));
  }
  return json{{"anchor", anchor}, {"scale", q.scale}, {"side", q.side}, {"lower", coords}};
}

inline Cube cube_from_json(const json& j, int dim) {
  Cube q;
  q.side = j.at("side").get<int>();
  q.scale = j.value("scale", 1);
  const auto anchor = j.at("anchor").get<std::vector<std::int64_t>>();
  if (static_cast<int>(anchor.size()) != dim) throw FormatError("cube anchor has wrong length");
  for (int a = 0; a < dim; ++a) q.anchor[a] = anchor[a];
  return q;
}

inline json family_to_json(const CubeFamily& F) {
  json cubes = json::array();
  for (const Cube& q : F.cubes) cubes.push_back(cube_to_json(q, F.dim, F.cells));
  return json{{"d", F.dim},   {"n", F.cells},           {"side", F.side},
              {"epsilon", F.epsilon()}, {"constrained", F.constrained}, {"cubes", cubes}};
}

inline std::string witness_anchor_list(const CubeFamily& F) {
  std::string out;
  for (std::size_t i = 0; i < F.cubes.size(); ++i) {
    if (i) out += ';';
    for (int a = 0; a < F.dim; ++a) {
      if (a) out += ' ';
      out += format_double(F.cubes[i].anchor_coord(a, F.cells));
    }
  }
  return out;
}

/// CSV columns: epsilon,value,k,witness_anchor_list. Anchors are real lower
/// corners, coordinates separated by spaces and cubes by semicolons.
inline std::string curve_to_csv(const OscillationCurve& c) {
  std::string out = "epsilon,value,k,witness_anchor_list\n";
  for (const auto& p : c.points) {
    out += format_double(p.epsilon) + ',' + format_double(p.value) + ',' + std::to_string(p.cap) +
           ",\"" + witness_anchor_list(p.witness) + "\"\n";
  }
  return out;
}

inline json curve_to_json(const OscillationCurve& c) {
  json pts = json::array();
  for (const auto& p : c.points) {
    pts.push_back(json{{"epsilon", p.epsilon},
                       {"side", p.side},
                       {"k", p.cap},
                       {"value", p.value},
                       {"solver", std::string(to_string(p.solver))},
                       {"witness", family_to_json(p.witness)}});
  }
  return json{{"points", pts}};
}

// ---------------------------------------------------------------------------
// Atoms: {epsilon, side, d, n, cubes: [[offsets]], grid_ref} with the values
// in a grid file; functionals: [{lambda, atom_path}].

inline void write_atom(const fs::path& path, const Atom& a) {
  fs::path grid = path;
  grid.replace_extension(".grid.json");
  write_grid(grid, a.values);
  json cubes = json::array();
  for (const Cube& q : a.family.cubes) {
    json off = json::array();
    for (int k = 0; k < a.family.dim; ++k) off.push_back(q.anchor[k] / q.scale);
    cubes.push_back(off);
  }
  json j{{"epsilon", a.family.epsilon()}, {"side", a.family.side}, {"d", a.family.dim},
         {"n", a.family.cells},           {"cubes", cubes},          {"grid_ref", grid.filename().string()}};
  write_atomic(path, j.dump(2) + "\n");
}

inline Atom read_atom(const fs::path& path) {
  const json j = parse_json(read_file(path), path.string());
  try {
    GridFunction g = read_grid(path.parent_path() / j.at("grid_ref").get<std::string>());
    const int n = j.value("n", g.cells());
    const int d = j.value("d", g.dim());
    int side = j.contains("side") ? j.at("side").get<int>()
                                  : side_from_epsilon(j.at("epsilon").get<double>(), n);
    std::vector<Cube> cubes;
    for (const auto& off : j.at("cubes")) {
      const auto o = off.get<std::vector<std::int64_t>>();
      if (static_cast<int>(o.size()) != d) throw FormatError("atom cube offset has wrong length");
      Cube q{side, {0, 0, 0}, 1};
      for (int a = 0; a < d; ++a) q.anchor[a] = o[a];
      cubes.push_back(q);
    }
    return Atom{make_family(d, n, side, std::move(cubes), true), std::move(g)};
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

inline AtomicFunctional read_functional(const fs::path& path) {
  const json j = parse_json(read_file(path), path.string());
  AtomicFunctional phi;
  try {
    for (const auto& term : j) {
      phi.terms.push_back(
          {term.at("lambda").get<double>(),
           read_atom(path.parent_path() / term.at("atom_path").get<std::string>())});
    }
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return phi;
}

inline json report_to_json(const DistanceReport& r) {
  return json{{"tail_lower", r.tail_lower},
              {"upper", r.upper},
              {"best_t", r.best_t},
              {"upper_per_t", r.upper_per_t},
              {"epsilon_cut", r.epsilon_cut},
              {"t_grid", r.t_grid},
              {"inconsistent", r.inconsistent},
              {"curve", curve_to_json(r.curve)}};
}

}  // namespace bbm::io
