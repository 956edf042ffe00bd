#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "sot/measures.hpp"
#include "sot/projections.hpp"
#include "sot/submodular.hpp"

namespace sot {

enum class Algorithm { mda, spmd, spmp, emd, sinkhorn_ot };

// inv_sqrt_t: eta_t = eta0 / sqrt(t).  auto_rule resolves per algorithm:
// mirror descent variants decay, mirror prox keeps a constant step.
enum class StepRule { auto_rule, inv_sqrt_t, constant };

// Which mirror-prox iterates enter the averaged output pair.
enum class DualAverage { leader, corrector };

struct SolverConfig {
  Algorithm algorithm = Algorithm::spmp;
  double eta0 = 0;  // <= 0 means 1 / (max entry of greedy_vertex(F, C) + 1)
  StepRule step_rule = StepRule::auto_rule;
  double tol = 1e-4;
  int max_iter = 5000;
  int gap_every = 25;
  SinkhornConfig sinkhorn{};
  double entropic_lambda = 10.0;  // sinkhorn_ot baseline, kernel exp(-lambda * C)
  std::uint64_t seed = 0;
  DualAverage spmp_average = DualAverage::leader;
  double overlap_outer_tol = 1e-9;
  int overlap_max_sweeps = 100;
};

struct HistoryRecord {
  int iteration = 0;
  double f_value = 0;
  double gap = std::numeric_limits<double>::quiet_NaN();  // NaN when not evaluated
  double wall_ms = 0;
};

struct SolveResult {
  Coupling coupling;   // averaged primal iterate
  DualPoint dual;      // averaged dual iterate
  double primal_value = 0;
  double gap = std::numeric_limits<double>::quiet_NaN();
  bool certified = false;  // gap <= cfg.tol at exit
  int iterations = 0;
  Algorithm algorithm = Algorithm::spmp;
  std::vector<HistoryRecord> history;
};

struct LpResult {
  double value = 0;
  Eigen::MatrixXd plan;
  int pivots = 0;
};

// Exact discrete optimal transport by the transportation network simplex.
// Costs may be negative (the saddle-point gap evaluates dual vectors as
// costs); marginals must be positive with equal mass.  The optimum is a
// vertex: at most n + m - 1 nonzero entries.
LpResult exact_ot_lp(const Eigen::MatrixXd& C, const Eigen::VectorXd& mu,
                     const Eigen::VectorXd& nu);
LpResult exact_ot_lp(const CostMatrix& C, const DiscreteMeasure& mu, const DiscreteMeasure& nu);

// Entropy-regularized optimal transport: KL projection of the Gibbs kernel
// exp(-lambda * C) onto the transport polytope.  Larger lambda means weaker
// smoothing; the objective approaches the exact LP value as lambda grows.
KlProjection entropic_ot(const Eigen::MatrixXd& C, const Eigen::VectorXd& mu,
                         const Eigen::VectorXd& nu, double lambda, const SinkhornConfig& cfg = {});

// Certified saddle-point gap  lovasz(F, gamma) - min_{coupling} <coupling, kappa>.
// Nonnegative (up to roundoff) whenever kappa lies in the base polytope of F;
// zero exactly at a saddle point.
double saddle_gap(const Eigen::MatrixXd& gamma, const Eigen::VectorXd& kappa,
                  const SubmodularCost& F, const Eigen::VectorXd& mu, const Eigen::VectorXd& nu);
double saddle_gap(const Coupling& gamma, const DualPoint& kappa, const SubmodularCost& F,
                  const DiscreteMeasure& mu, const DiscreteMeasure& nu);

// Structured transport solvers.  The ground cost C seeds the dual iterate
// (projection of C onto the base polytope) and the default step size.
SolveResult solve_mda(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                      const SubmodularCost& F, const Eigen::MatrixXd& C, const SolverConfig& cfg);
SolveResult solve_spmd(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                       const SubmodularCost& F, const Eigen::MatrixXd& C, const SolverConfig& cfg);
SolveResult solve_spmp(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                       const SubmodularCost& F, const Eigen::MatrixXd& C, const SolverConfig& cfg);

// Dispatch on cfg.algorithm, including the classical baselines (emd,
// sinkhorn_ot), which ignore the structure of F and report the linear cost
// <coupling, C>.
SolveResult solve(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const SubmodularCost& F,
                  const Eigen::MatrixXd& C, const SolverConfig& cfg);

}  // namespace sot
