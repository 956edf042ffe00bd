// Scratch scanner: iterations each algorithm needs to reach a target gap on
// the two-cluster jittered instance, per seed.  argv: per_side sigma alpha
// eta0 tol max_iter gap_every n_seeds
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <random>
#include <vector>

#include "sot/measures.hpp"
#include "sot/solvers.hpp"
#include "sot/submodular.hpp"

using namespace sot;

namespace {

struct Inst {
  DiscreteMeasure mu, nu;
  Eigen::MatrixXd C;
  SubmodularCost F;
};

Inst make(std::uint64_t seed, int per_cluster, double alpha, double sigma) {
  std::mt19937_64 rng(seed);
  const int n = 2 * per_cluster;
  std::normal_distribution<double> noise(0.0, sigma);
  Eigen::MatrixXd S(n, 2), T(n, 2);
  std::vector<int> labels(n);
  for (int k = 0; k < 2; ++k)
    for (int p = 0; p < per_cluster; ++p) {
      const int row = k * per_cluster + p;
      labels[row] = k;
      S(row, 0) = 4.0 * k + noise(rng);
      S(row, 1) = noise(rng);
      T(row, 0) = 4.0 * k + noise(rng);
      T(row, 1) = 1.0 + noise(rng);
    }
  DiscreteMeasure mu = DiscreteMeasure::uniform(S, labels);
  DiscreteMeasure nu = DiscreteMeasure::uniform(T, labels);
  const CostMatrix cost = build_cost(mu, nu, Metric::euclidean);
  const EdgeIndex idx(n, n);
  std::vector<std::vector<int>> groups(4);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      groups[labels[i] * 2 + labels[j]].push_back(idx.flatten(i, j));
  const GroupStructure gs(groups, GroupStructure::CoverType::partition, false, idx);
  SubmodularCost F =
      SubmodularCost::from_groups(gs, cost.entries(), ConcaveFn::threshold_sqrt(alpha));
  return {std::move(mu), std::move(nu), cost.entries(), std::move(F)};
}

// Uniform clouds with a random saturated edge partition: no block shortcut.
Inst make_random(std::uint64_t seed, int n, double alpha, int n_groups) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd S(n, 2), T(n, 2);
  for (int i = 0; i < n; ++i) {
    S(i, 0) = u(rng);
    S(i, 1) = u(rng);
    T(i, 0) = u(rng);
    T(i, 1) = u(rng);
  }
  DiscreteMeasure mu = DiscreteMeasure::uniform(S);
  DiscreteMeasure nu = DiscreteMeasure::uniform(T);
  const CostMatrix cost = build_cost(mu, nu, Metric::euclidean);
  const EdgeIndex idx(n, n);
  std::vector<int> ids(size_t(n) * n);
  std::iota(ids.begin(), ids.end(), 0);
  std::shuffle(ids.begin(), ids.end(), rng);
  std::vector<std::vector<int>> groups(n_groups);
  for (size_t e = 0; e < ids.size(); ++e) groups[e % n_groups].push_back(ids[e]);
  for (auto& g : groups) std::sort(g.begin(), g.end());
  const GroupStructure gs(groups, GroupStructure::CoverType::partition, false, idx);
  SubmodularCost F =
      SubmodularCost::from_groups(gs, cost.entries(), ConcaveFn::threshold_sqrt(alpha));
  return {std::move(mu), std::move(nu), cost.entries(), std::move(F)};
}

int to_gap(const SolveResult& r, double target) {
  for (const HistoryRecord& h : r.history)
    if (!std::isnan(h.gap) && h.gap <= target) return h.iteration;
  return -1;
}

}  // namespace

int main(int argc, char** argv) {
  const int per = argc > 1 ? std::atoi(argv[1]) : 50;
  const double sigma = argc > 2 ? std::atof(argv[2]) : 0.02;
  const double alpha = argc > 3 ? std::atof(argv[3]) : 0.5;
  const double eta0 = argc > 4 ? std::atof(argv[4]) : 12.0;
  const double tol = argc > 5 ? std::atof(argv[5]) : 1e-2;
  const int max_iter = argc > 6 ? std::atoi(argv[6]) : 20000;
  const int gap_every = argc > 7 ? std::atoi(argv[7]) : 25;
  const int n_seeds = argc > 8 ? std::atoi(argv[8]) : 5;
  const int rand_groups = argc > 9 ? std::atoi(argv[9]) : 0;  // >0: random mode

  for (int s = 0; s < n_seeds; ++s) {
    const Inst inst = rand_groups > 0 ? make_random(200 + s, 2 * per, alpha, rand_groups)
                                      : make(200 + s, per, alpha, sigma);
    std::printf("seed=%d", s);
    for (Algorithm alg : {Algorithm::mda, Algorithm::spmd, Algorithm::spmp}) {
      SolverConfig cfg;
      cfg.algorithm = alg;
      cfg.tol = tol;
      cfg.max_iter = max_iter;
      cfg.eta0 = eta0;
      cfg.gap_every = gap_every;
      const auto t0 = std::chrono::steady_clock::now();
      const SolveResult r = solve(inst.mu, inst.nu, inst.F, inst.C, cfg);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::printf(" %d:iters=%d gap=%.3e secs=%.1f", int(alg), to_gap(r, tol), r.gap, secs);
    }
    std::printf("\n");
    std::fflush(stdout);
  }
  return 0;
}
