// Scratch scan: domain-adaptation accuracy of structured vs modular transport
// across synthetic-spec parameters, to pin robust test instances.
#include <chrono>
#include <cstdio>
#include <cstdlib>

#include "sot/harness.hpp"
#include "sot/measures.hpp"
#include "sot/solvers.hpp"
#include "sot/submodular.hpp"

using namespace sot;

namespace {
Eigen::VectorXd flatten(const Eigen::MatrixXd& G) {
  Eigen::VectorXd v(G.size());
  for (Eigen::Index i = 0; i < G.rows(); ++i)
    for (Eigen::Index j = 0; j < G.cols(); ++j) v[i * G.cols() + j] = G(i, j);
  return v;
}
}  // namespace

int main(int argc, char** argv) {
  const int clusters = argc > 1 ? std::atoi(argv[1]) : 3;
  const int per = argc > 2 ? std::atoi(argv[2]) : 5;
  const double spread = argc > 3 ? std::atof(argv[3]) : 0.5;
  const double sx = argc > 4 ? std::atof(argv[4]) : 1.2;
  const double sy = argc > 5 ? std::atof(argv[5]) : 0.4;
  const int swap = argc > 6 ? std::atoi(argv[6]) : 1;
  const double alpha = argc > 7 ? std::atof(argv[7]) : 0.2;
  const double sep = argc > 8 ? std::atof(argv[8]) : 3.0;
  const double eta0 = argc > 9 ? std::atof(argv[9]) : 0.0;
  const int max_iter = argc > 10 ? std::atoi(argv[10]) : 1500;
  const double inner_tol = argc > 11 ? std::atof(argv[11]) : 1e-9;
  const int max_inner = argc > 12 ? std::atoi(argv[12]) : 10000;

  int wins = 0, strict = 0, wins_vs_sink = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto t0 = std::chrono::steady_clock::now();
    SyntheticSpec spec;
    spec.seed = seed;
    spec.clusters = clusters;
    spec.per_cluster = per;
    spec.spread = spread;
    spec.separation = sep;
    spec.shift = Eigen::Vector2d(sx, sy);
    spec.swap_pair = swap != 0;
    const SyntheticPair pair = generate(spec);
    const CostMatrix cost = build_cost(pair.src, pair.tgt, Metric::euclidean);

    const GroupStructure gs = class_groups(pair.src.labels(), pair.tgt.size());
    const SubmodularCost F =
        SubmodularCost::from_groups(gs, cost.entries(), ConcaveFn::threshold_sqrt(alpha));
    SolverConfig cfg;
    cfg.algorithm = Algorithm::spmp;
    cfg.tol = 1e-3;
    cfg.max_iter = max_iter;
    cfg.eta0 = eta0;
    cfg.sinkhorn.inner_tol = inner_tol;
    cfg.sinkhorn.max_inner = max_inner;
    const AdaptResult st = adapt_and_score(pair.src, pair.tgt, pair.tgt, F, cost.entries(), cfg);

    SolverConfig ecfg;
    ecfg.algorithm = Algorithm::emd;
    const SubmodularCost M = SubmodularCost::modular(
        EdgeIndex(pair.src.size(), pair.tgt.size()), flatten(cost.entries()));
    const AdaptResult em = adapt_and_score(pair.src, pair.tgt, pair.tgt, M, cost.entries(), ecfg);

    SolverConfig scfg;
    scfg.algorithm = Algorithm::sinkhorn_ot;
    const AdaptResult sk = adapt_and_score(pair.src, pair.tgt, pair.tgt, M, cost.entries(), scfg);

    const LpResult lp = exact_ot_lp(cost.entries(), pair.src.weights(), pair.tgt.weights());
    const double emd_frac = in_class_fraction(lp.plan, pair.src.labels(), pair.tgt.labels());
    const double st_frac =
        in_class_fraction(st.result.coupling.gamma(), pair.src.labels(), pair.tgt.labels());

    wins += st.accuracy >= em.accuracy;
    strict += st.accuracy > em.accuracy;
    wins_vs_sink += st.accuracy >= sk.accuracy;
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf(
        "seed=%llu struct_acc=%.3f emd_acc=%.3f sink_acc=%.3f struct_frac=%.3f emd_frac=%.3f "
        "cert=%d secs=%.1f\n",
        (unsigned long long)seed, st.accuracy, em.accuracy, sk.accuracy, st_frac, emd_frac,
        int(st.result.certified), secs);
  }
  std::printf("wins(>=)=%d strict(>)=%d wins_vs_sink(>=)=%d\n", wins, strict, wins_vs_sink);
  return 0;
}
