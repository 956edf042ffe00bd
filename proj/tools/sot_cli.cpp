#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sot/harness.hpp"
#include "sot/io.hpp"
#include "sot/measures.hpp"
#include "sot/solvers.hpp"

namespace {

namespace fs = std::filesystem;
using namespace sot;

struct SolveFlags {
  std::string problem;
  Overrides overrides;
};

void add_override_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--algorithm", o.algorithm, "mda | spmd | spmp | emd | sinkhorn");
  cmd->add_option("--eta0", o.eta0, "initial step size (0 = automatic)");
  cmd->add_option("--tol", o.tol, "target certified gap");
  cmd->add_option("--max-iter", o.max_iter, "iteration budget");
  cmd->add_option("--alpha", o.alpha, "concave threshold override");
  cmd->add_option("--lambda", o.lambda, "entropic regularization (sinkhorn baseline)");
  cmd->add_option("--seed", o.seed, "solver seed");
  cmd->add_option("--out-dir", o.out_dir, "output directory override");
}

int run_solve(const SolveFlags& f) {
  Problem p = load_problem(f.problem, f.overrides);
  log_line(LogLevel::info, "solving '" + f.problem + "' with " + algorithm_name(p.solver.algorithm));
  const SolveResult res = solve(p.src, p.tgt, p.structure, p.cost.entries(), p.solver);
  fs::create_directories(p.out_dir);
  const std::string stem = (fs::path(p.out_dir) / p.prefix).string();
  write_matrix_csv(stem + "_coupling.csv", res.coupling.gamma());
  write_matrix_csv(stem + "_dual.csv", res.dual.kappa.transpose());
  write_result_json(stem + "_result.json", res);
  write_history_csv(stem + "_history.csv", res.history);
  std::cout << "algorithm=" << algorithm_name(res.algorithm) << " value="
            << format_double(res.primal_value) << " gap=" << format_double(res.gap)
            << " certified=" << (res.certified ? "true" : "false")
            << " iterations=" << res.iterations << '\n';
  return res.certified ? 0 : 2;
}

int run_generate(const SyntheticSpec& spec, const std::string& shape, const std::string& out_dir,
                 const std::vector<double>& shift) {
  SyntheticSpec s = spec;
  if (shape == "gaussian_blobs")
    s.shape = Shape::gaussian_blobs;
  else if (shape == "two_moons")
    s.shape = Shape::two_moons;
  else
    throw InputError("generate: unknown shape '" + shape + "'");
  if (!shift.empty())
    s.shift = Eigen::Map<const Eigen::VectorXd>(shift.data(), static_cast<Eigen::Index>(shift.size()));
  const SyntheticPair pair = generate(s);
  fs::create_directories(out_dir);
  write_measure_json((fs::path(out_dir) / "src.json").string(), pair.src);
  write_measure_json((fs::path(out_dir) / "tgt.json").string(), pair.tgt);
  write_measure_csv((fs::path(out_dir) / "src.csv").string(), pair.src);
  write_measure_csv((fs::path(out_dir) / "tgt.csv").string(), pair.tgt);
  std::cout << "wrote " << pair.src.size() << " source and " << pair.tgt.size()
            << " target points to " << out_dir << '\n';
  return 0;
}

int run_distance(const SolveFlags& f) {
  Problem p = load_problem(f.problem, f.overrides);
  const SotDistance d = sot_distance(p.src, p.tgt, p.structure, p.cost.entries(), p.solver);
  std::cout << "distance=" << format_double(d.value) << '\n'
            << "gap=" << format_double(d.gap) << '\n'
            << "certified=" << (d.certified ? "true" : "false") << '\n'
            << "hypothesis_ok=" << (d.hypothesis_ok ? "true" : "false") << '\n';
  if (!d.hypothesis_ok)
    log_line(LogLevel::error, "cost fails the semi-metric hypotheses; value is still reported");
  return d.certified ? 0 : 2;
}

int run_adapt(const SolveFlags& f) {
  Problem p = load_problem(f.problem, f.overrides);
  if (!p.test) throw InputError("/adapt: missing (the adapt command needs a test block)");
  bool all_certified = true;
  std::cout << std::left << std::setw(10) << "method" << std::setw(12) << "accuracy"
            << std::setw(16) << "value" << std::setw(16) << "gap"
            << "certified" << '\n';
  for (Algorithm method : p.adapt_methods) {
    SolverConfig cfg = p.solver;
    cfg.algorithm = method;
    const AdaptResult r = adapt_and_score(p.src, p.tgt, *p.test, p.structure,
                                          p.cost.entries(), cfg);
    all_certified = all_certified && r.result.certified;
    std::cout << std::left << std::setw(10) << algorithm_name(method) << std::setw(12)
              << format_double(r.accuracy) << std::setw(16)
              << format_double(r.result.primal_value) << std::setw(16)
              << format_double(r.result.gap) << (r.result.certified ? "true" : "false") << '\n';
  }
  return all_certified ? 0 : 2;
}

int run_gapcheck(const std::string& coupling_path, const std::string& dual_path,
                 const SolveFlags& f) {
  Problem p = load_problem(f.problem, f.overrides);
  const Eigen::MatrixXd gamma = read_matrix_csv(coupling_path);
  const Eigen::MatrixXd dual = read_matrix_csv(dual_path);
  if (gamma.rows() != p.src.size() || gamma.cols() != p.tgt.size())
    throw InputError("gapcheck: coupling shape does not match the problem");
  if (dual.size() != gamma.size())
    throw InputError("gapcheck: dual length does not match the coupling");
  Eigen::VectorXd kappa(dual.size());
  for (Eigen::Index i = 0; i < dual.rows(); ++i)
    for (Eigen::Index j = 0; j < dual.cols(); ++j) kappa[i * dual.cols() + j] = dual(i, j);
  const double gap =
      saddle_gap(gamma, kappa, p.structure, p.src.weights(), p.tgt.weights());
  std::cout << "gap=" << format_double(gap) << '\n'
            << "certified=" << (gap <= p.solver.tol ? "true" : "false") << '\n';
  return gap <= p.solver.tol ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"structured optimal transport solver"};
  app.require_subcommand(1);
  int rc = 0;

  SolveFlags solve_flags;
  CLI::App* c_solve = app.add_subcommand("solve", "solve a problem file and write outputs");
  c_solve->add_option("problem", solve_flags.problem, "problem JSON file")->required();
  add_override_flags(c_solve, solve_flags.overrides);
  c_solve->callback([&] { rc = run_solve(solve_flags); });

  SyntheticSpec gen_spec;
  std::string gen_shape = "gaussian_blobs";
  std::string gen_out = ".";
  std::vector<double> gen_shift;
  CLI::App* c_gen = app.add_subcommand("generate", "write a seeded synthetic cluster pair");
  c_gen->add_option("--shape", gen_shape, "gaussian_blobs | two_moons");
  c_gen->add_option("--clusters", gen_spec.clusters, "number of clusters");
  c_gen->add_option("--per-cluster", gen_spec.per_cluster, "points per cluster");
  c_gen->add_option("--dim", gen_spec.dim, "ambient dimension");
  c_gen->add_option("--spread", gen_spec.spread, "within-cluster standard deviation");
  c_gen->add_option("--separation", gen_spec.separation, "distance between neighboring clusters");
  c_gen->add_option("--shift", gen_shift, "target translation, comma separated")->delimiter(',');
  c_gen->add_option("--seed", gen_spec.seed, "random seed");
  c_gen->add_flag("--swap-pair,!--no-swap-pair", gen_spec.swap_pair,
                  "exchange the two closest cluster identities in the target");
  c_gen->add_option("--out-dir", gen_out, "output directory");
  c_gen->callback([&] { rc = run_generate(gen_spec, gen_shape, gen_out, gen_shift); });

  SolveFlags dist_flags;
  CLI::App* c_dist = app.add_subcommand("distance", "structured transport distance with certificate");
  c_dist->add_option("problem", dist_flags.problem, "problem JSON file")->required();
  add_override_flags(c_dist, dist_flags.overrides);
  c_dist->callback([&] { rc = run_distance(dist_flags); });

  SolveFlags adapt_flags;
  CLI::App* c_adapt = app.add_subcommand("adapt", "domain adaptation accuracy table");
  c_adapt->add_option("problem", adapt_flags.problem, "problem JSON file with an adapt block")
      ->required();
  add_override_flags(c_adapt, adapt_flags.overrides);
  c_adapt->callback([&] { rc = run_adapt(adapt_flags); });

  SolveFlags gap_flags;
  std::string gap_coupling, gap_dual;
  CLI::App* c_gap = app.add_subcommand("gapcheck", "recertify a stored coupling/dual pair");
  c_gap->add_option("coupling", gap_coupling, "coupling CSV")->required();
  c_gap->add_option("dual", gap_dual, "dual vector CSV")->required();
  c_gap->add_option("problem", gap_flags.problem, "problem JSON file")->required();
  add_override_flags(c_gap, gap_flags.overrides);
  c_gap->callback([&] { rc = run_gapcheck(gap_coupling, gap_dual, gap_flags); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const sot::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return rc;
}
