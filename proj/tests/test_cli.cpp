#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "bbm/generators.hpp"
#include "bbm/io.hpp"

namespace fs = std::filesystem;
using bbm::io::json;

namespace {

const fs::path& work() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "bbm_test_cli";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string at(const std::string& name) { return (work() / name).string(); }

// Runs the CLI with stdout to `stdout_file`; returns the exit status.
int run(const std::string& args, const std::string& stdout_file = "out.txt") {
  const std::string cmd = std::string(BBM_CLI) + " " + args + " > " + at(stdout_file) + " 2> " + at("err.txt");
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

json stdout_json(const std::string& file = "out.txt") {
  return bbm::io::parse_json(bbm::io::read_file(at(file)), file);
}

}  // namespace

TEST(Cli, GenThenNormOfStep) {
  ASSERT_EQ(run("gen --kind step --d 1 --n 16 --out " + at("step.json")), 0);
  ASSERT_EQ(run("norm --input " + at("step.json") + " --mode bnb --s 2"), 0);
  const auto j = stdout_json();
  EXPECT_DOUBLE_EQ(j.at("b_norm").get<double>(), 0.5);
  EXPECT_TRUE(j.contains("witness_epsilon"));
  EXPECT_EQ(j.at("config").at("mode"), "bnb");
  EXPECT_EQ(j.at("config").at("s"), 2);
}

TEST(Cli, GenIsDeterministic) {
  ASSERT_EQ(run("gen --kind random --d 2 --n 12 --seed 9 --out " + at("r1.json")), 0);
  ASSERT_EQ(run("gen --kind random --d 2 --n 12 --seed 9 --out " + at("r2.json")), 0);
  auto a = stdout_json("r1.json"), b = stdout_json("r2.json");
  EXPECT_NE(a.at("config").at("out"), b.at("config").at("out"));
  a.erase("config");
  b.erase("config");
  EXPECT_EQ(a.dump(), b.dump());
}

TEST(Cli, CurveCsvWithConfigSidecar) {
  ASSERT_EQ(run("gen --kind checkerboard --d 2 --n 8 --param scale=0.25 --out " + at("cb.json")), 0);
  ASSERT_EQ(run("curve --input " + at("cb.json") + " --out " + at("cb.csv")), 0);
  const auto csv = bbm::io::read_file(at("cb.csv"));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "epsilon,value,k,witness_anchor_list");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 9);
  EXPECT_TRUE(fs::exists(at("cb.csv.config.json")));
}

TEST(Cli, SameNumbersAcrossThreadCounts) {
  ASSERT_EQ(run("gen --kind cascade --d 2 --n 16 --out " + at("cas.json")), 0);
  ASSERT_EQ(run("--threads 1 distance --input " + at("cas.json") + " --mode greedy", "t1.txt"), 0);
  ASSERT_EQ(run("--threads 4 distance --input " + at("cas.json") + " --mode greedy", "t4.txt"), 0);
  auto a = stdout_json("t1.txt"), b = stdout_json("t4.txt");
  a.erase("config");
  b.erase("config");
  EXPECT_EQ(a.dump(), b.dump());
}

TEST(Cli, ConfigFilePrecedence) {
  bbm::io::write_atomic(at("cfg.json"), R"({"mode": "greedy", "s": 1, "eps_cut": 0.5})");
  ASSERT_EQ(run("gen --kind step --n 8 --out " + at("s8.json")), 0);
  ASSERT_EQ(run("--config " + at("cfg.json") + " norm --input " + at("s8.json") + " --s 3"), 0);
  const auto c = stdout_json().at("config");
  EXPECT_EQ(c.at("mode"), "greedy");
  EXPECT_EQ(c.at("s"), 3);
  bbm::io::write_atomic(at("bad.json"), R"({"colour": 1})");
  EXPECT_EQ(run("--config " + at("bad.json") + " norm --input " + at("s8.json")), 2);
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run("norm --no-such-flag"), 2);
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("gen --kind spiral --out " + at("x.json")), 2);
  EXPECT_FALSE(fs::exists(at("x.json")));
  EXPECT_EQ(run("norm --input " + at("missing.json")), 2);
  EXPECT_EQ(run("--json-errors norm --input " + at("missing.json")), 2);
  const auto err = bbm::io::parse_json(bbm::io::read_file(at("err.txt")), "stderr");
  EXPECT_EQ(err.at("error"), "format");
  EXPECT_EQ(run("norm --mode fastest --input " + at("s8.json")), 2);
}

TEST(Cli, StrictInconsistencyExitsThree) {
  ASSERT_EQ(run("gen --kind step --n 64 --out " + at("s64.json")), 0);
  const std::string base = "distance --input " + at("s64.json") + " --mode exact --t 0.015625";
  EXPECT_EQ(run(base), 0);
  EXPECT_TRUE(stdout_json().at("inconsistent").get<bool>());
  EXPECT_EQ(run("--strict " + base), 3);
  ASSERT_EQ(run("gen --kind step --n 256 --out " + at("s256.json")), 0);
  EXPECT_EQ(run("--strict distance --input " + at("s256.json") + " --mode exact --t 0.125"), 0);
}

TEST(Cli, AtomCommands) {
  const auto F = bbm::make_family(1, 8, 4, {bbm::Cube{4, {0, 0, 0}, 1}, bbm::Cube{4, {4, 0, 0}, 1}}, true);
  // Cap is 1 for d = 1, so keep a single cube.
  const auto G = bbm::make_family(1, 8, 4, {bbm::Cube{4, {2, 0, 0}, 1}}, true);
  EXPECT_FALSE(bbm::is_valid(F));
  const auto a = bbm::make_atom(G, bbm::gen_random_cells(1, 8, 3));
  bbm::io::write_atom(at("atom.json"), a);
  ASSERT_EQ(run("atom-validate --input " + at("atom.json")), 0);
  EXPECT_TRUE(stdout_json().at("valid").get<bool>());
  ASSERT_EQ(run("gen --kind random-cells --n 8 --seed 4 --out " + at("f8.json")), 0);
  ASSERT_EQ(run("--strict atom-pair --input " + at("f8.json") + " --atom " + at("atom.json")), 0);
  EXPECT_TRUE(stdout_json().at("holds").get<bool>());
  EXPECT_EQ(run("atom-pair --input " + at("f8.json")), 2);
}

TEST(Cli, MollifyAndBvAndOracle) {
  ASSERT_EQ(run("gen --kind indicator --d 2 --n 16 --out " + at("ind.json")), 0);
  ASSERT_EQ(run("mollify --input " + at("ind.json") + " --t 0.125 --out " + at("ind_t.json")), 0);
  EXPECT_TRUE(fs::exists(at("ind_t.json")));
  EXPECT_GT(stdout_json().at("lp_distance").get<double>(), 0.0);
  EXPECT_EQ(run("mollify --input " + at("ind.json") + " --t 0.125,0.25"), 2);
  ASSERT_EQ(run("bv-compare --input " + at("ind.json") + " --mode greedy"), 0);
  EXPECT_DOUBLE_EQ(stdout_json().at("tv").get<double>(), 1.0);
  ASSERT_EQ(run("gen --kind random-cells --d 2 --n 5 --seed 2 --out " + at("r5.json")), 0);
  ASSERT_EQ(run("--strict oracle-check --input " + at("r5.json") + " --mode exact --s 1"), 0);
  EXPECT_EQ(stdout_json().at("mismatches"), 0);
}
