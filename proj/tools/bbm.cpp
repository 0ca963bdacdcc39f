// Command-line front end. Every command prints one JSON document on stdout
// (and writes it to --out where that makes sense) with the effective
// configuration under "config".
//
// Exit codes: 0 success, 2 usage or input error, 3 numerical inconsistency
// under --strict, 1 anything unexpected.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bbm/bbm.hpp"
#include "bbm/io.hpp"

namespace {

using bbm::io::json;
namespace fs = std::filesystem;

constexpr int kExitUsage = 2;
constexpr int kExitInconsistent = 3;

struct RunConfig {
  std::string command;
  std::string input;
  std::string out;
  std::string atom;
  std::string functional;
  std::string kind = "constant";
  int d = 1;
  int n = 16;
  std::map<std::string, double> params;
  bool binary = false;
  std::string mode = "auto";
  int s = 2;
  int side = 0;  // 0: every side
  std::uint64_t seed = 0;
  double eps_cut = 0.25;
  std::vector<double> t_grid{0.125, 0.0625, 0.03125};
  std::string kernel = "tent";
  int supersample = 4;
  std::string quadrature = "exact";
  double tolerance = 0.05;
  double oracle_tol = 1e-12;
  double p = 1.2;
  int threads = 1;
  bool strict = false;
};

// Flag values; unset ones fall back to the config file, then to defaults.
struct Flags {
  std::optional<std::string> config, input, out, atom, functional, kind, mode, kernel, quadrature;
  std::optional<int> d, n, s, side, supersample, threads;
  std::optional<std::uint64_t> seed;
  std::optional<double> eps_cut, tolerance, oracle_tol, p;
  std::vector<double> t_grid;
  std::vector<std::string> params;
  bool binary = false;
  bool strict = false;
  bool json_errors = false;
};

json config_to_json(const RunConfig& c) {
  return json{{"command", c.command},   {"input", c.input},       {"out", c.out},
              {"atom", c.atom},         {"functional", c.functional}, {"kind", c.kind},
              {"d", c.d},               {"n", c.n},               {"params", c.params},
              {"binary", c.binary},     {"mode", c.mode},         {"s", c.s},
              {"side", c.side},         {"seed", c.seed},         {"eps_cut", c.eps_cut},
              {"t", c.t_grid},          {"kernel", c.kernel},     {"supersample", c.supersample},
              {"quadrature", c.quadrature}, {"tolerance", c.tolerance}, {"oracle_tol", c.oracle_tol},
              {"p", c.p},               {"threads", c.threads},   {"strict", c.strict}};
}

template <class T>
void take(const json& j, const char* key, T& dst) {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw bbm::ArgumentError(std::string("config key '") + key + "': " + e.what());
  }
}

void apply_file(RunConfig& c, const std::string& path) {
  const json j = bbm::io::parse_json(bbm::io::read_file(path), path);
  if (!j.is_object()) throw bbm::ArgumentError("config file must hold a JSON object");
  static const std::vector<std::string> known{
      "input", "out",  "atom", "functional", "kind",    "d",           "n",          "params",
      "binary", "mode", "s",   "side",       "seed",    "eps_cut",     "t",          "kernel",
      "supersample", "quadrature", "tolerance", "oracle_tol", "p", "threads", "strict"};
  for (const auto& [k, v] : j.items()) {
    if (std::find(known.begin(), known.end(), k) == known.end()) {
      throw bbm::ArgumentError("unknown config key '" + k + "'");
    }
  }
  take(j, "input", c.input);
  take(j, "out", c.out);
  take(j, "atom", c.atom);
  take(j, "functional", c.functional);
  take(j, "kind", c.kind);
  take(j, "d", c.d);
  take(j, "n", c.n);
  take(j, "params", c.params);
  take(j, "binary", c.binary);
  take(j, "mode", c.mode);
  take(j, "s", c.s);
  take(j, "side", c.side);
  take(j, "seed", c.seed);
  take(j, "eps_cut", c.eps_cut);
  if (j.contains("t") && j.at("t").is_number()) {
    c.t_grid = {j.at("t").get<double>()};
  } else {
    take(j, "t", c.t_grid);
  }
  take(j, "kernel", c.kernel);
  take(j, "supersample", c.supersample);
  take(j, "quadrature", c.quadrature);
  take(j, "tolerance", c.tolerance);
  take(j, "oracle_tol", c.oracle_tol);
  take(j, "p", c.p);
  take(j, "threads", c.threads);
  take(j, "strict", c.strict);
}

template <class T>
void overlay(const std::optional<T>& flag, T& dst) {
  if (flag) dst = *flag;
}

RunConfig resolve(const Flags& f, const std::string& command) {
  RunConfig c;
  c.command = command;
  c.threads = bbm::default_thread_count();
  if (f.config) apply_file(c, *f.config);
  overlay(f.input, c.input);
  overlay(f.out, c.out);
  overlay(f.atom, c.atom);
  overlay(f.functional, c.functional);
  overlay(f.kind, c.kind);
  overlay(f.d, c.d);
  overlay(f.n, c.n);
  overlay(f.mode, c.mode);
  overlay(f.s, c.s);
  overlay(f.side, c.side);
  overlay(f.seed, c.seed);
  overlay(f.eps_cut, c.eps_cut);
  overlay(f.kernel, c.kernel);
  overlay(f.supersample, c.supersample);
  overlay(f.quadrature, c.quadrature);
  overlay(f.tolerance, c.tolerance);
  overlay(f.oracle_tol, c.oracle_tol);
  overlay(f.p, c.p);
  overlay(f.threads, c.threads);
  if (!f.t_grid.empty()) c.t_grid = f.t_grid;
  for (const auto& kv : f.params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw bbm::ArgumentError("--param expects key=value, got '" + kv + "'");
    c.params[kv.substr(0, eq)] = bbm::io::parse_double(kv.substr(eq + 1));
  }
  c.binary = c.binary || f.binary;
  c.strict = c.strict || f.strict;

  if (c.threads < 1) throw bbm::ArgumentError("--threads must be >= 1");
  if (c.s < 1) throw bbm::ArgumentError("--s must be >= 1");
  if (c.side < 0) throw bbm::ArgumentError("--side must be >= 0");
  if (c.tolerance < 0) throw bbm::ArgumentError("--tolerance must be >= 0");
  for (double t : c.t_grid) {
    if (!(t > 0.0 && t < 0.5)) throw bbm::ArgumentError("every t must lie in (0, 1/2)");
  }
  bbm::parse_solve_mode(c.mode);
  bbm::parse_kernel(c.kernel);
  bbm::parse_quadrature(c.quadrature);
  return c;
}

bbm::SelectOptions select_options(const RunConfig& c) {
  return {bbm::parse_solve_mode(c.mode), c.s, c.threads};
}

bbm::MollifierParams mollifier_params(const RunConfig& c, double t) {
  return {t, bbm::parse_kernel(c.kernel), c.supersample, bbm::parse_quadrature(c.quadrature)};
}

bbm::GridFunction load_input(const RunConfig& c) {
  if (c.input.empty()) throw bbm::ArgumentError(c.command + " needs --input");
  return bbm::io::read_grid(c.input);
}

// Prints the result and mirrors it to --out when given.
void emit(const RunConfig& c, json result, bool to_file = true) {
  result["config"] = config_to_json(c);
  const std::string text = result.dump(2) + "\n";
  if (to_file && !c.out.empty()) bbm::io::write_atomic(c.out, text);
  std::cout << text;
}

int cmd_gen(const RunConfig& c) {
  if (c.out.empty()) throw bbm::ArgumentError("gen needs --out");
  const auto f = bbm::generate({c.kind, c.d, c.n, c.seed, c.params});
  bbm::io::write_grid(c.out, f, c.binary ? bbm::io::GridStorage::binary : bbm::io::GridStorage::inline_csv,
                      json{{"config", config_to_json(c)}});
  emit(c, json{{"grid", c.out}, {"d", f.dim()}, {"n", f.cells()}, {"mean", bbm::mean(f)}}, false);
  return 0;
}

int cmd_norm(const RunConfig& c) {
  const auto f = load_input(c);
  const auto r = bbm::b_norm(f, select_options(c));
  json witness = nullptr;
  for (const auto& p : r.curve.points) {
    if (p.epsilon == r.witness_epsilon) witness = bbm::io::family_to_json(p.witness);
  }
  emit(c, json{{"b_norm", r.value}, {"witness_epsilon", r.witness_epsilon}, {"witness", witness}});
  return 0;
}

int cmd_curve(const RunConfig& c) {
  const auto f = load_input(c);
  const auto r = bbm::b_norm(f, select_options(c));
  if (c.out.empty()) {
    std::cout << bbm::io::curve_to_csv(r.curve);
    return 0;
  }
  if (fs::path(c.out).extension() == ".json") {
    json j = bbm::io::curve_to_json(r.curve);
    j["config"] = config_to_json(c);
    bbm::io::write_atomic(c.out, j.dump(2) + "\n");
  } else {
    // CSV has no room for metadata; the config goes next to it.
    bbm::io::write_atomic(c.out, bbm::io::curve_to_csv(r.curve));
    bbm::io::write_atomic(c.out + ".config.json", config_to_json(c).dump(2) + "\n");
  }
  emit(c, json{{"curve", c.out}, {"points", r.curve.points.size()}, {"b_norm", r.value}}, false);
  return 0;
}

int cmd_bmo(const RunConfig& c) {
  const auto f = load_input(c);
  emit(c, json{{"bmo", bbm::bmo_norm(f, c.s, c.threads)}});
  return 0;
}

int cmd_bv_compare(const RunConfig& c) {
  const auto f = load_input(c);
  const auto opt = select_options(c);
  const auto bv = bbm::bv_functional(f, opt);
  const double tv = bbm::discrete_tv(f);
  emit(c, json{{"bv", bv.value},
               {"bv_epsilon", bv.epsilon},
               {"tv", tv},
               {"ratio", tv > 0.0 ? json(bv.value / tv) : json(nullptr)},
               {"b_norm", bbm::b_norm(f, opt).value}});
  return 0;
}

int cmd_atom_validate(const RunConfig& c) {
  if (c.input.empty()) throw bbm::ArgumentError("atom-validate needs --input <atom.json>");
  const auto a = bbm::io::read_atom(c.input);
  const auto r = bbm::validate_atom(a, c.oracle_tol);
  emit(c, json{{"valid", r.valid},
               {"support_violation", r.support_violation},
               {"bound_violation", r.bound_violation},
               {"mean_violation", r.mean_violation},
               {"message", r.message}});
  return (c.strict && !r.valid) ? kExitInconsistent : 0;
}

int cmd_atom_pair(const RunConfig& c) {
  const auto f = load_input(c);
  const double norm = bbm::b_norm(f, select_options(c)).value;
  const double slack = c.oracle_tol * std::max(1.0, norm);
  if (!c.atom.empty() == !c.functional.empty()) {
    throw bbm::ArgumentError("atom-pair needs exactly one of --atom or --functional");
  }
  bool holds = true;
  json result;
  if (!c.atom.empty()) {
    const auto a = bbm::io::read_atom(c.atom);
    const double p = bbm::pair(f, a);
    const double fv = bbm::family_value(f, a.family);
    holds = std::abs(p) <= fv + slack && fv <= norm + slack;
    result = json{{"pair", p}, {"family_value", fv}, {"b_norm", norm}, {"holds", holds}};
  } else {
    const auto phi = bbm::io::read_functional(c.functional);
    const double v = bbm::functional_value(f, phi);
    const double bound = phi.l1_mass() * norm;
    holds = std::abs(v) <= bound + slack * std::max(1.0, phi.l1_mass());
    result = json{{"value", v}, {"l1_mass", phi.l1_mass()}, {"b_norm", norm}, {"bound", bound}, {"holds", holds}};
  }
  emit(c, result);
  return (c.strict && !holds) ? kExitInconsistent : 0;
}

int cmd_mollify(const RunConfig& c) {
  const auto f = load_input(c);
  if (c.t_grid.size() != 1) throw bbm::ArgumentError("mollify takes a single --t");
  const auto p = mollifier_params(c, c.t_grid.front());
  const auto g = bbm::approximant(f, p);
  json result{{"t", p.t},
              {"lp_distance", bbm::lp_distance_mod_constants(g, f, c.p)},
              {"kernel_mass", bbm::kernel_mass(f.cells(), f.dim(), p)}};
  if (!c.out.empty()) {
    bbm::io::write_grid(c.out, g, c.binary ? bbm::io::GridStorage::binary : bbm::io::GridStorage::inline_csv,
                        json{{"config", config_to_json(c)}});
    result["grid"] = c.out;
  }
  emit(c, result, false);
  return 0;
}

int cmd_distance(const RunConfig& c) {
  const auto f = load_input(c);
  bbm::DistanceOptions o;
  o.epsilon_cut = c.eps_cut;
  o.t_grid = c.t_grid;
  o.mollifier = mollifier_params(c, c.t_grid.front());
  o.select = select_options(c);
  o.tolerance = c.tolerance;
  const auto r = bbm::distance_report(f, o);
  emit(c, bbm::io::report_to_json(r));
  return (c.strict && r.inconsistent) ? kExitInconsistent : 0;
}

int cmd_oracle_check(const RunConfig& c) {
  const auto f = load_input(c);
  std::vector<int> sides = c.side > 0 ? std::vector<int>{c.side} : bbm::sweep_sides(f.cells());
  json rows = json::array();
  int mismatches = 0;
  for (int m : sides) {
    const auto cand = bbm::candidate_cubes(f.dim(), f.cells(), m, c.s);
    if (cand.size() > bbm::kOracleCandidateLimit) {
      rows.push_back(json{{"side", m}, {"skipped", true}, {"candidates", cand.size()}});
      continue;
    }
    const auto got = bbm::select_family(f, m, select_options(c));
    const auto truth = bbm::oracle_family(f, m, true, c.s);
    const bool match = std::abs(got.value - truth.value) <= c.oracle_tol * std::max(1.0, truth.value);
    if (!match) ++mismatches;
    rows.push_back(json{{"side", m},
                        {"epsilon", static_cast<double>(m) / f.cells()},
                        {"value", got.value},
                        {"oracle", truth.value},
                        {"solver", std::string(bbm::to_string(got.solver))},
                        {"match", match}});
  }
  emit(c, json{{"checks", rows}, {"mismatches", mismatches}});
  return (c.strict && mismatches > 0) ? kExitInconsistent : 0;
}

void report_error(bool as_json, const std::string& kind, const std::string& message) {
  if (as_json) {
    std::cerr << json{{"error", kind}, {"message", message}}.dump() << "\n";
  } else {
    std::cerr << "error (" << kind << "): " << message << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Oscillation seminorm toolkit on piecewise-constant grids"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags fl;

  app.add_option("--config", fl.config, "JSON config file; flags override it")->check(CLI::ExistingFile);
  app.add_option("--threads", fl.threads, "Worker threads (default: BBM_THREADS or 1)");
  app.add_flag("--json-errors", fl.json_errors, "Report errors as JSON on stderr");
  app.add_flag("--strict", fl.strict, "Exit 3 when a numerical consistency check fails");

  const auto add_input = [&](CLI::App* sub) { sub->add_option("--input,-i", fl.input, "Input file"); };
  const auto add_out = [&](CLI::App* sub) { sub->add_option("--out,-o", fl.out, "Output file"); };
  const auto add_select = [&](CLI::App* sub) {
    sub->add_option("--mode", fl.mode, "Family solver: exact|bnb|greedy|auto");
    sub->add_option("--s", fl.s, "Anchor refinement: anchors on multiples of eps/s");
  };
  const auto add_mollifier = [&](CLI::App* sub) {
    sub->add_option("--t", fl.t_grid, "Mollifier parameter(s), comma separated")->delimiter(',');
    sub->add_option("--kernel", fl.kernel, "Mollifier kernel (tent)");
    sub->add_option("--supersample", fl.supersample, "Midpoint quadrature supersampling");
    sub->add_option("--quadrature", fl.quadrature, "exact|midpoint");
  };

  auto* gen = app.add_subcommand("gen", "Write a synthetic grid function");
  gen->add_option("--kind", fl.kind, "constant|step|checkerboard|indicator|cascade|random|random-cells|smooth|log");
  gen->add_option("--d", fl.d, "Dimension (1..3)");
  gen->add_option("--n", fl.n, "Cells per axis");
  gen->add_option("--seed", fl.seed, "Generator seed");
  gen->add_option("--param", fl.params, "Generator parameter key=value (repeatable)");
  gen->add_flag("--binary", fl.binary, "Store values in a little-endian sidecar");
  add_out(gen);

  auto* norm = app.add_subcommand("norm", "B-norm with its witness scale");
  add_input(norm);
  add_out(norm);
  add_select(norm);

  auto* curve = app.add_subcommand("curve", "Oscillation curve over every lattice eps");
  add_input(curve);
  add_out(curve);
  add_select(curve);

  auto* bmo = app.add_subcommand("bmo", "BMO norm over the refined anchor lattice");
  add_input(bmo);
  add_out(bmo);
  bmo->add_option("--s", fl.s, "Anchor refinement");

  auto* bv = app.add_subcommand("bv-compare", "Uncapped functional against discrete total variation");
  add_input(bv);
  add_out(bv);
  add_select(bv);

  auto* av = app.add_subcommand("atom-validate", "Check support, bound and mean conditions of an atom");
  add_input(av);
  add_out(av);
  av->add_option("--tol", fl.oracle_tol, "Tolerance");

  auto* ap = app.add_subcommand("atom-pair", "Pair a grid with an atom or an atomic functional");
  add_input(ap);
  add_out(ap);
  add_select(ap);
  ap->add_option("--atom", fl.atom, "Atom file");
  ap->add_option("--functional", fl.functional, "Functional file (list of lambda, atom_path)");

  auto* mol = app.add_subcommand("mollify", "Write the mollified approximant");
  add_input(mol);
  add_out(mol);
  add_mollifier(mol);
  mol->add_flag("--binary", fl.binary, "Store values in a little-endian sidecar");
  mol->add_option("--p", fl.p, "Exponent for the distance modulo constants");

  auto* dist = app.add_subcommand("distance", "Tail lower bound and mollifier upper bound");
  add_input(dist);
  add_out(dist);
  add_select(dist);
  add_mollifier(dist);
  dist->add_option("--eps-cut", fl.eps_cut, "Largest eps counted in the tail");
  dist->add_option("--tolerance", fl.tolerance, "Relative slack before flagging inconsistency");

  auto* oc = app.add_subcommand("oracle-check", "Compare the solver with exhaustive search");
  add_input(oc);
  add_out(oc);
  add_select(oc);
  oc->add_option("--side", fl.side, "Side in cells (default: every side)");
  oc->add_option("--tol", fl.oracle_tol, "Tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error(fl.json_errors, "usage", e.what());
    return kExitUsage;
  }

  const std::map<std::string, int (*)(const RunConfig&)> commands{
      {"gen", cmd_gen},          {"norm", cmd_norm},
      {"curve", cmd_curve},      {"bmo", cmd_bmo},
      {"bv-compare", cmd_bv_compare}, {"atom-validate", cmd_atom_validate},
      {"atom-pair", cmd_atom_pair},   {"mollify", cmd_mollify},
      {"distance", cmd_distance},     {"oracle-check", cmd_oracle_check}};
  const std::string name = app.get_subcommands().front()->get_name();
  try {
    return commands.at(name)(resolve(fl, name));
  } catch (const bbm::Error& e) {
    report_error(fl.json_errors, e.kind(), e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    report_error(fl.json_errors, "internal", e.what());
    return 1;
  }
}
