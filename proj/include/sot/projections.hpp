#pragma once

#include <Eigen/Dense>

#include <vector>

#include "sot/measures.hpp"
#include "sot/submodular.hpp"

namespace sot {

struct SinkhornConfig {
  double inner_tol = 1e-9;
  int max_inner = 10000;
  double underflow_floor = 1e-300;  // applied to kernel entries
};

// Result of a KL (Sinkhorn) projection onto the transport polytope.  The
// output always has the scaling form gamma = diag(u) * w * diag(v); the
// scalings are kept in logs so extreme kernels cannot overflow them.
struct KlProjection {
  Eigen::MatrixXd gamma;
  Eigen::VectorXd log_u, log_v;
  int iterations = 0;
  bool converged = false;
  double residual = 0;  // worst marginal violation at exit

  Eigen::VectorXd u() const { return log_u.array().exp(); }
  Eigen::VectorXd v() const { return log_v.array().exp(); }
  Coupling coupling() const { return Coupling(gamma, std::max(residual, 1e-15)); }
};

KlProjection kl_project(const Eigen::MatrixXd& w, const Eigen::VectorXd& mu,
                        const Eigen::VectorXd& nu, const SinkhornConfig& cfg = {});
KlProjection kl_project(const Eigen::MatrixXd& w, const DiscreteMeasure& mu,
                        const DiscreteMeasure& nu, const SinkhornConfig& cfg = {});
// Same fixed point with the kernel supplied entrywise in logs, for kernels
// whose linear-domain entries underflow.
KlProjection kl_project_log(const Eigen::MatrixXd& log_w, const Eigen::VectorXd& mu,
                            const Eigen::VectorXd& nu, const SinkhornConfig& cfg = {});
// Warm-started variant: scaling iterations begin from the supplied column
// log-potential instead of zero.  The fixed point is the same; a potential
// carried over from a nearby kernel just reaches it in far fewer sweeps.
KlProjection kl_project_log(const Eigen::MatrixXd& log_w, const Eigen::VectorXd& mu,
                            const Eigen::VectorXd& nu, const SinkhornConfig& cfg,
                            const Eigen::VectorXd& log_v0);

// Minimizer of  g(sum_{e in S} w_e) + sum_{e in S} (m_e - lambda)  over
// subsets S of the group of a concave_of_sum cost with strictly positive
// weights.  Returns sorted flat edge ids; ties resolve to the smallest
// minimizer.  Runs in O(k log k) via a ratio sort and prefix scan.
std::vector<int> sfm_concave_of_sum(const SubmodularCost& F, const Eigen::VectorXd& m,
                                    double lambda);

// Euclidean projection of z onto the base polytope of a concave_of_sum cost,
// via parametric cuts recovered by bracket bisection.  Coordinates the cost
// does not depend on (edges outside the group, zero-weight members) project
// to zero.
Eigen::VectorXd project_base_concave_of_sum(const SubmodularCost& F, const Eigen::VectorXd& z);

// Projection onto the base polytope of a decomposable cost whose components
// have pairwise disjoint supports: concatenation of per-component projections.
Eigen::VectorXd project_base_decomposable(const SubmodularCost& F, const Eigen::VectorXd& z);

struct OverlapProjection {
  Eigen::VectorXd kappa;
  int sweeps = 0;
  bool converged = false;
  double last_change = 0;  // L-inf movement of the final sweep
};

// Projection onto the base polytope of a decomposable cost with overlapping
// supports.  The base polytope of a sum is the Minkowski sum of the component
// base polytopes, so the iterate sum stays exactly feasible throughout;
// deterministic cyclic block sweeps refine it toward the projection.
OverlapProjection project_base_overlapping(const SubmodularCost& F, const Eigen::VectorXd& z,
                                           double outer_tol = 1e-9, int max_sweeps = 100);

struct MnpResult {
  Eigen::VectorXd point;
  double gap = 0;  // ||y||^2 - <y, greedy_vertex(F, -y)>
  bool certified = false;
  int major_iterations = 0;
};

// Fujishige-Wolfe minimum-norm point of the base polytope of F.  The overload
// with a shift works on the base polytope of F - <shift, .>, which is how
// Euclidean base projections reduce to the minimum-norm problem.
MnpResult mnp_fujishige_wolfe(const SubmodularCost& F, double tol = 1e-9);
MnpResult mnp_fujishige_wolfe(const SubmodularCost& F, double tol, const Eigen::VectorXd& shift);

struct BaseProjectionConfig {
  double overlap_outer_tol = 1e-9;
  int overlap_max_sweeps = 100;
  double mnp_tol = 1e-10;
};

// Projection of z onto the base polytope of F, routed to the fastest
// applicable method for the cost's structure.
Eigen::VectorXd project_base(const SubmodularCost& F, const Eigen::VectorXd& z,
                             const BaseProjectionConfig& cfg = {});

}  // namespace sot
