#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>

#include "sot/measures.hpp"
#include "sot/solvers.hpp"
#include "sot/submodular.hpp"

using namespace sot;

int main(int argc, char** argv) {
  const int per = argc > 1 ? std::atoi(argv[1]) : 10;
  const double alpha = argc > 2 ? std::atof(argv[2]) : 0.5;
  const double eta0 = argc > 3 ? std::atof(argv[3]) : 0.0;
  const int max_iter = argc > 4 ? std::atoi(argv[4]) : 5000;
  const double scale = argc > 5 ? std::atof(argv[5]) : 1.0;
  const double tol = argc > 6 ? std::atof(argv[6]) : 1e-3;
  const double sigma = argc > 7 ? std::atof(argv[7]) : 0.1;

  std::mt19937_64 rng(61);
  const int n = 2 * per;
  std::normal_distribution<double> noise(0.0, sigma * scale);
  Eigen::MatrixXd S(n, 2), T(n, 2);
  std::vector<int> labels(n);
  for (int k = 0; k < 2; ++k)
    for (int p = 0; p < per; ++p) {
      const int row = k * per + p;
      labels[row] = k;
      S(row, 0) = 4.0 * scale * k + noise(rng);
      S(row, 1) = noise(rng);
      T(row, 0) = 4.0 * scale * k + noise(rng);
      T(row, 1) = 1.0 * scale + noise(rng);
    }
  DiscreteMeasure mu = DiscreteMeasure::uniform(S, labels);
  DiscreteMeasure nu = DiscreteMeasure::uniform(T, labels);
  const CostMatrix cost = build_cost(mu, nu, Metric::euclidean);
  const EdgeIndex idx(n, n);
  std::vector<std::vector<int>> groups(4);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) groups[labels[i] * 2 + labels[j]].push_back(idx.flatten(i, j));
  const GroupStructure gs(groups, GroupStructure::CoverType::partition, false, idx);
  const SubmodularCost F =
      SubmodularCost::from_groups(gs, cost.entries(), ConcaveFn::threshold_sqrt(alpha));

  for (Algorithm alg : {Algorithm::mda, Algorithm::spmd, Algorithm::spmp}) {
    SolverConfig cfg;
    cfg.algorithm = alg;
    cfg.tol = tol;
    cfg.max_iter = max_iter;
    cfg.gap_every = 25;
    cfg.eta0 = eta0;
    const auto t0 = std::chrono::steady_clock::now();
    const SolveResult r = solve(mu, nu, F, cost.entries(), cfg);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("alg=%d certified=%d iters=%d final_gap=%.6g primal=%.6g secs=%.1f\n", int(alg),
                int(r.certified), r.iterations, r.gap, r.primal_value, secs);
    int shown = 0;
    for (const auto& h : r.history) {
      if (std::isnan(h.gap)) continue;
      if (++shown % 20 == 0 || h.iteration == r.iterations)
        std::printf("  it=%5d f=%.6f gap=%.6g\n", h.iteration, h.f_value, h.gap);
    }
  }
  return 0;
}
