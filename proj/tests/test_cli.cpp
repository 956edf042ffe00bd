// End-to-end tests that drive the installed command-line binary as a
// subprocess and check its files, stdout contract and exit codes.
// SOT_CLI_BIN and SOT_TEST_TMP are injected by the build.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "sot/io.hpp"
#include "sot/measures.hpp"
#include "sot/solvers.hpp"

using namespace sot;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CmdResult {
  int rc;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

// Fresh per-test working directory under the build tree.
fs::path work_dir(const std::string& tag) {
  const fs::path dir = fs::path(SOT_TEST_TMP) / tag;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

CmdResult run_cli(const std::string& args, const fs::path& dir, const std::string& env = "") {
  const fs::path out = dir / "stdout.txt";
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = env + (env.empty() ? "" : " ") + "'" SOT_CLI_BIN "' " + args + " > '" +
                          out.string() + "' 2> '" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  const int rc = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return {rc, slurp(out), slurp(err)};
}

// Value of the first "key=value" pair found in the text.
std::string field(const std::string& text, const std::string& key) {
  const std::string needle = key + "=";
  size_t pos = 0;
  while ((pos = text.find(needle, pos)) != std::string::npos) {
    if (pos == 0 || text[pos - 1] == '\n' || text[pos - 1] == ' ') {
      const size_t start = pos + needle.size();
      size_t end = start;
      while (end < text.size() && text[end] != ' ' && text[end] != '\n') ++end;
      return text.substr(start, end - start);
    }
    ++pos;
  }
  return "";
}

json point_rows(const std::vector<std::vector<double>>& rows) {
  json a = json::array();
  for (const auto& r : rows) a.push_back(r);
  return a;
}

// Two well-separated two-point clusters on each side; small enough that every
// algorithm converges in a blink, structured enough that class groups exist.
json small_problem(const fs::path& dir, const std::string& structure_type) {
  json j;
  j["source"] = {{"points", point_rows({{0, 0}, {0.1, 0}, {3, 0}, {3.1, 0}})},
                 {"labels", {0, 0, 1, 1}}};
  j["target"] = {{"points", point_rows({{0, 1}, {0.1, 1}, {3, 1}, {3.1, 1}})},
                 {"labels", {0, 0, 1, 1}}};
  j["cost"] = {{"metric", "euclidean"}};
  if (structure_type == "class_groups") {
    j["structure"] = {{"type", "class_groups"},
                      {"concave", {{"kind", "threshold_sqrt"}, {"alpha", 0.3}}}};
  } else {
    j["structure"] = {{"type", structure_type}};
  }
  j["solver"] = {{"algorithm", "spmp"}, {"tol", 1e-3}, {"max_iter", 4000}, {"eta0", 2.0}};
  j["output"] = {{"dir", (dir / "out").string()}, {"prefix", "case"}};
  return j;
}

fs::path write_problem(const fs::path& dir, const json& j) {
  const fs::path p = dir / "problem.json";
  std::ofstream f(p);
  f << j.dump(2) << '\n';
  return p;
}

}  // namespace

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

TEST_CASE("solve on a modular problem matches the exact transport baseline") {
  const fs::path dir = work_dir("cli_solve_modular");
  const fs::path problem = write_problem(dir, small_problem(dir, "modular"));

  const CmdResult iterative = run_cli("solve '" + problem.string() + "'", dir);
  REQUIRE(iterative.rc != 1);
  const double value = std::stod(field(iterative.out, "value"));

  const CmdResult exact = run_cli("solve '" + problem.string() + "' --algorithm emd", dir);
  REQUIRE(exact.rc == 0);
  const double lp = std::stod(field(exact.out, "value"));
  CHECK(std::abs(value - lp) <= 1e-3 * std::max(1.0, std::abs(lp)));
}

TEST_CASE("solve writes the full output set and a parseable result") {
  const fs::path dir = work_dir("cli_solve_outputs");
  const fs::path problem = write_problem(dir, small_problem(dir, "class_groups"));
  const CmdResult r = run_cli("solve '" + problem.string() + "'", dir);
  REQUIRE(r.rc == 0);  // converges on this instance

  const fs::path stem = dir / "out" / "case";
  const Eigen::MatrixXd gamma = read_matrix_csv(stem.string() + "_coupling.csv");
  CHECK(gamma.rows() == 4);
  CHECK(gamma.cols() == 4);
  CHECK(std::abs(gamma.sum() - 1.0) <= 1e-9);
  const Eigen::MatrixXd dual = read_matrix_csv(stem.string() + "_dual.csv");
  CHECK(dual.size() == 16);

  json result;
  std::ifstream(stem.string() + "_result.json") >> result;
  CHECK(result.at("algorithm") == "spmp");
  CHECK(result.at("certified") == true);
  CHECK(result.at("gap").get<double>() <= 1e-3);
  CHECK(result.at("iterations").get<int>() >= 1);

  // History CSV: header plus one row per logged iteration.
  std::ifstream hist(stem.string() + "_history.csv");
  std::string line;
  REQUIRE(std::getline(hist, line));
  CHECK(line == "iteration,f_value,gap,wall_ms");
  int rows = 0;
  while (std::getline(hist, line))
    if (!line.empty()) ++rows;
  CHECK(rows >= 1);
}

TEST_CASE("solve repeats bit-identically for the same inputs") {
  const fs::path dir = work_dir("cli_solve_repeat");
  json j = small_problem(dir, "class_groups");
  j["output"]["dir"] = (dir / "a").string();
  const fs::path pa = dir / "pa.json";
  std::ofstream(pa) << j.dump(2);
  j["output"]["dir"] = (dir / "b").string();
  const fs::path pb = dir / "pb.json";
  std::ofstream(pb) << j.dump(2);

  REQUIRE(run_cli("solve '" + pa.string() + "'", dir).rc == 0);
  REQUIRE(run_cli("solve '" + pb.string() + "'", dir).rc == 0);
  CHECK(slurp(dir / "a" / "case_coupling.csv") == slurp(dir / "b" / "case_coupling.csv"));
  CHECK(slurp(dir / "a" / "case_dual.csv") == slurp(dir / "b" / "case_dual.csv"));
  CHECK(slurp(dir / "a" / "case_result.json") == slurp(dir / "b" / "case_result.json"));
}

TEST_CASE("a missing problem file exits with an input error and a diagnostic") {
  const fs::path dir = work_dir("cli_missing");
  const CmdResult r = run_cli("solve '" + (dir / "no_such_file.json").string() + "'", dir);
  CHECK(r.rc == 1);
  CHECK(r.err.find("error") != std::string::npos);
}

TEST_CASE("an iteration budget of one exits as best-effort, not certified") {
  const fs::path dir = work_dir("cli_maxiter");
  const fs::path problem = write_problem(dir, small_problem(dir, "class_groups"));
  const CmdResult r = run_cli("solve '" + problem.string() + "' --max-iter 1", dir);
  CHECK(r.rc == 2);
  CHECK(field(r.out, "certified") == "false");
  json result;
  std::ifstream((dir / "out" / "case_result.json").string()) >> result;
  CHECK(result.at("certified") == false);
  CHECK(result.at("iterations").get<int>() == 1);
}

TEST_CASE("the out-dir override redirects every artifact") {
  const fs::path dir = work_dir("cli_outdir");
  const fs::path problem = write_problem(dir, small_problem(dir, "modular"));
  const fs::path other = dir / "elsewhere";
  const CmdResult r =
      run_cli("solve '" + problem.string() + "' --out-dir '" + other.string() + "'", dir);
  REQUIRE(r.rc != 1);
  CHECK(fs::exists(other / "case_coupling.csv"));
  CHECK(fs::exists(other / "case_result.json"));
  CHECK(!fs::exists(dir / "out" / "case_coupling.csv"));
}

TEST_CASE("schema violations report the offending field by path") {
  const fs::path dir = work_dir("cli_schema");
  json j = small_problem(dir, "modular");
  j.erase("target");
  const fs::path problem = write_problem(dir, j);
  const CmdResult r = run_cli("solve '" + problem.string() + "'", dir);
  CHECK(r.rc == 1);
  CHECK(r.err.find("/target") != std::string::npos);
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

TEST_CASE("generate writes byte-identical files for identical flags") {
  const fs::path dir = work_dir("cli_generate_repeat");
  const std::string flags =
      "generate --clusters 3 --per-cluster 10 --spread 0.2 --seed 17 --shift 0.5,0.1";
  REQUIRE(run_cli(flags + " --out-dir '" + (dir / "a").string() + "'", dir).rc == 0);
  REQUIRE(run_cli(flags + " --out-dir '" + (dir / "b").string() + "'", dir).rc == 0);
  for (const char* name : {"src.json", "tgt.json", "src.csv", "tgt.csv"}) {
    INFO(name);
    const std::string a = slurp(dir / "a" / name);
    CHECK(!a.empty());
    CHECK(a == slurp(dir / "b" / name));
  }
  // A different seed changes the payload.
  REQUIRE(run_cli("generate --clusters 3 --per-cluster 10 --spread 0.2 --seed 18 "
                  "--shift 0.5,0.1 --out-dir '" +
                      (dir / "c").string() + "'",
                  dir)
              .rc == 0);
  CHECK(slurp(dir / "a" / "src.json") != slurp(dir / "c" / "src.json"));
}

TEST_CASE("generate emits one row per point plus the header") {
  const fs::path dir = work_dir("cli_generate_rows");
  const CmdResult r =
      run_cli("generate --clusters 3 --per-cluster 10 --seed 3 --out-dir '" + dir.string() + "'",
              dir);
  REQUIRE(r.rc == 0);
  for (const char* name : {"src.csv", "tgt.csv"}) {
    std::ifstream f(dir / name);
    std::string line;
    REQUIRE(std::getline(f, line));
    CHECK(line == "x0,x1,weight,label");
    int rows = 0;
    while (std::getline(f, line))
      if (!line.empty()) ++rows;
    CHECK(rows == 30);
  }
  // The CSVs parse back into labeled measures.
  const DiscreteMeasure src = read_measure_csv((dir / "src.csv").string());
  CHECK(src.size() == 30);
  CHECK(src.has_labels());
}

TEST_CASE("generate rejects a two-moons request outside the plane") {
  const fs::path dir = work_dir("cli_generate_moons");
  const CmdResult r = run_cli(
      "generate --shape two_moons --dim 3 --out-dir '" + dir.string() + "'", dir);
  CHECK(r.rc == 1);
  CHECK(r.err.find("error") != std::string::npos);
}

TEST_CASE("generate rejects an unknown shape") {
  const fs::path dir = work_dir("cli_generate_shape");
  const CmdResult r =
      run_cli("generate --shape hexagons --out-dir '" + dir.string() + "'", dir);
  CHECK(r.rc == 1);
}

// ---------------------------------------------------------------------------
// distance / adapt
// ---------------------------------------------------------------------------

TEST_CASE("distance on a modular problem equals the exact transport value") {
  const fs::path dir = work_dir("cli_distance");
  const fs::path problem = write_problem(dir, small_problem(dir, "modular"));
  const CmdResult r = run_cli("distance '" + problem.string() + "'", dir);
  REQUIRE(r.rc != 1);
  const double d = std::stod(field(r.out, "distance"));
  CHECK(field(r.out, "hypothesis_ok") == "true");

  const CmdResult exact = run_cli("solve '" + problem.string() + "' --algorithm emd", dir);
  const double lp = std::stod(field(exact.out, "value"));
  CHECK(std::abs(d - lp) <= 1e-3 * std::max(1.0, std::abs(lp)));
}

TEST_CASE("adapt prints one accuracy row per configured method") {
  const fs::path dir = work_dir("cli_adapt");
  json j = small_problem(dir, "class_groups");
  j["adapt"] = {{"test", {{"points", point_rows({{0.05, 1}, {3.05, 1}})}, {"labels", {0, 1}}}},
                {"methods", {"emd", "spmp"}}};
  const fs::path problem = write_problem(dir, j);
  const CmdResult r = run_cli("adapt '" + problem.string() + "'", dir);
  REQUIRE(r.rc != 1);
  CHECK(r.out.find("method") != std::string::npos);
  CHECK(r.out.find("emd") != std::string::npos);
  CHECK(r.out.find("spmp") != std::string::npos);
  // Clusters sit far apart and do not move: both methods must adapt perfectly.
  std::istringstream lines(r.out);
  std::string line;
  std::getline(lines, line);  // header
  int perfect = 0;
  while (std::getline(lines, line)) {
    std::istringstream row(line);
    std::string method, accuracy;
    if (row >> method >> accuracy && accuracy == "1") ++perfect;
  }
  CHECK(perfect == 2);
}

TEST_CASE("adapt without a test block is an input error") {
  const fs::path dir = work_dir("cli_adapt_missing");
  const fs::path problem = write_problem(dir, small_problem(dir, "class_groups"));
  const CmdResult r = run_cli("adapt '" + problem.string() + "'", dir);
  CHECK(r.rc == 1);
}

// ---------------------------------------------------------------------------
// gapcheck
// ---------------------------------------------------------------------------

TEST_CASE("gapcheck reproduces the stored gap from the written artifacts") {
  const fs::path dir = work_dir("cli_gapcheck");
  const fs::path problem = write_problem(dir, small_problem(dir, "class_groups"));
  REQUIRE(run_cli("solve '" + problem.string() + "'", dir).rc == 0);

  const fs::path stem = dir / "out" / "case";
  json result;
  std::ifstream(stem.string() + "_result.json") >> result;
  const double stored = result.at("gap").get<double>();

  const CmdResult r = run_cli("gapcheck '" + stem.string() + "_coupling.csv' '" +
                                  stem.string() + "_dual.csv' '" + problem.string() + "'",
                              dir);
  REQUIRE(r.rc == 0);
  const double reprinted = std::stod(field(r.out, "gap"));
  CHECK(std::abs(reprinted - stored) <= 1e-9);
  CHECK(field(r.out, "certified") == "true");
}

TEST_CASE("gapcheck rejects an empty coupling file") {
  const fs::path dir = work_dir("cli_gapcheck_empty");
  const fs::path problem = write_problem(dir, small_problem(dir, "class_groups"));
  const fs::path empty = dir / "empty.csv";
  std::ofstream(empty).close();
  std::ofstream(dir / "dual.csv") << "0\n";
  const CmdResult r = run_cli("gapcheck '" + empty.string() + "' '" +
                                  (dir / "dual.csv").string() + "' '" + problem.string() + "'",
                              dir);
  CHECK(r.rc == 1);
  CHECK(r.err.find("error") != std::string::npos);
}

TEST_CASE("gapcheck rejects a coupling whose shape mismatches the problem") {
  const fs::path dir = work_dir("cli_gapcheck_shape");
  const fs::path problem = write_problem(dir, small_problem(dir, "class_groups"));
  std::ofstream(dir / "coupling.csv") << "0.5,0.5\n0.5,0.5\n";
  std::ofstream(dir / "dual.csv") << "1,1,1,1\n";
  const CmdResult r = run_cli("gapcheck '" + (dir / "coupling.csv").string() + "' '" +
                                  (dir / "dual.csv").string() + "' '" + problem.string() + "'",
                              dir);
  CHECK(r.rc == 1);
}

// ---------------------------------------------------------------------------
// logging and flag plumbing
// ---------------------------------------------------------------------------

TEST_CASE("the info log level narrates on stderr without polluting stdout") {
  const fs::path dir = work_dir("cli_logging");
  const fs::path problem = write_problem(dir, small_problem(dir, "modular"));
  const CmdResult quiet = run_cli("solve '" + problem.string() + "'", dir);
  CHECK(quiet.err.find("[info]") == std::string::npos);
  const CmdResult chatty =
      run_cli("solve '" + problem.string() + "'", dir, "SOT_LOG_LEVEL=info");
  CHECK(chatty.err.find("[info]") != std::string::npos);
  CHECK(field(chatty.out, "value") == field(quiet.out, "value"));
}

TEST_CASE("an unknown algorithm name is an input error") {
  const fs::path dir = work_dir("cli_bad_algorithm");
  const fs::path problem = write_problem(dir, small_problem(dir, "modular"));
  const CmdResult r = run_cli("solve '" + problem.string() + "' --algorithm simplex2", dir);
  CHECK(r.rc == 1);
}

// ---------------------------------------------------------------------------
// measure file round-trips (library level; the formats the commands speak)
// ---------------------------------------------------------------------------

TEST_CASE("measures survive the JSON and CSV round trip exactly") {
  Eigen::MatrixXd P(3, 2);
  P << 0.1, -2.25, 1e-7, 3.5, 42.0, 0.3333333333333333;
  Eigen::VectorXd w(3);
  w << 0.25, 0.5, 0.25;
  const std::vector<int> labels = {4, 0, 4};
  const fs::path dir = work_dir("cli_roundtrip");

  const DiscreteMeasure labeled(P, w, labels);
  write_measure_json((dir / "m.json").string(), labeled);
  const DiscreteMeasure from_json = read_measure_json((dir / "m.json").string());
  CHECK(from_json.points() == labeled.points());
  CHECK(from_json.weights() == labeled.weights());
  REQUIRE(from_json.has_labels());
  CHECK(from_json.labels() == labels);

  write_measure_csv((dir / "m.csv").string(), labeled);
  const DiscreteMeasure from_csv = read_measure_csv((dir / "m.csv").string());
  CHECK(from_csv.points() == labeled.points());
  CHECK(from_csv.weights() == labeled.weights());
  REQUIRE(from_csv.has_labels());
  CHECK(from_csv.labels() == labels);

  const DiscreteMeasure unlabeled(P, w, std::nullopt);
  write_measure_csv((dir / "u.csv").string(), unlabeled);
  const DiscreteMeasure u = read_measure_csv((dir / "u.csv").string());
  CHECK(!u.has_labels());
  CHECK(u.points() == unlabeled.points());

  // Weightless CSV input defaults to the uniform distribution.
  std::ofstream(dir / "w.csv") << "x0,x1,weight\n1,2,0.5\n3,4,0.5\n";
  const DiscreteMeasure wm = read_measure_csv((dir / "w.csv").string());
  CHECK(wm.weights()[0] == doctest::Approx(0.5));
}

TEST_CASE("matrix CSV files rebuild the exact doubles they stored") {
  std::mt19937_64 rng(91);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  Eigen::MatrixXd M(7, 3);
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 3; ++j) M(i, j) = std::pow(10.0, u(rng)) * (u(rng) < 0 ? -1 : 1);
  const fs::path dir = work_dir("cli_matrix_roundtrip");
  write_matrix_csv((dir / "m.csv").string(), M);
  const Eigen::MatrixXd R = read_matrix_csv((dir / "m.csv").string());
  REQUIRE(R.rows() == M.rows());
  REQUIRE(R.cols() == M.cols());
  CHECK(R == M);  // bitwise: shortest round-trip decimals
}
