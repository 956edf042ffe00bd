// Acceptance gate: one self-contained check per shipped guarantee, each
// printed as a single PASS/FAIL line with its measured numbers.  Run via
// `ctest -R acceptance` or directly; the exit code is the number of failed
// checks.  Every check is deterministic.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "sot/harness.hpp"
#include "sot/measures.hpp"
#include "sot/projections.hpp"
#include "sot/solvers.hpp"
#include "sot/submodular.hpp"

using namespace sot;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* pattern, ...) {
  va_list args;
  va_start(args, pattern);
  char buf[512];
  std::vsnprintf(buf, sizeof(buf), pattern, args);
  va_end(args);
  return std::string(buf);
}

int g_failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail) {
  std::printf("%s %2d  %-52s %s\n", pass ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

Eigen::VectorXd flatten(const Eigen::MatrixXd& G) {
  Eigen::VectorXd v(G.size());
  for (Eigen::Index i = 0; i < G.rows(); ++i)
    for (Eigen::Index j = 0; j < G.cols(); ++j) v[i * G.cols() + j] = G(i, j);
  return v;
}

Eigen::VectorXd random_vector(std::mt19937_64& rng, int n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, int n, int m, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::MatrixXd M(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) M(i, j) = u(rng);
  return M;
}

Eigen::VectorXd random_simplex(std::mt19937_64& rng, int n) {
  Eigen::VectorXd v = random_vector(rng, n, 0.2, 1.0);
  return v / v.sum();
}

// Two well-separated clusters per side with Gaussian jitter; one concave
// group per (source cluster, target cluster) block.  Tight jitter keeps the
// optimal coupling diffuse inside the blocks, the regime where the averaged
// iterates of every algorithm certify quickly.
struct ClusteredInstance {
  DiscreteMeasure mu, nu;
  Eigen::MatrixXd C;
  SubmodularCost F;
  std::vector<int> labels;
};

ClusteredInstance make_clustered(std::uint64_t seed, int per_cluster, double alpha,
                                 double sigma) {
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
  return {std::move(mu), std::move(nu), cost.entries(), std::move(F), std::move(labels)};
}

// ---------------------------------------------------------------------------
// 1. Structured base projection against the minimum-norm-point oracle.
// ---------------------------------------------------------------------------
void check_projection_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  double worst = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::uniform_int_distribution<int> ksize(2, 25);
    const int total = ksize(rng);
    std::uniform_int_distribution<int> kmem(1, total);
    const int k = kmem(rng);
    const EdgeIndex idx(1, total);
    std::vector<int> ids(total);
    std::iota(ids.begin(), ids.end(), 0);
    std::shuffle(ids.begin(), ids.end(), rng);
    ids.resize(k);
    std::sort(ids.begin(), ids.end());
    std::uniform_real_distribution<double> ua(0.1, 3.0);
    const SubmodularCost F = SubmodularCost::concave_of_sum(
        idx, ids, random_vector(rng, k, 0.1, 2.0), ConcaveFn::threshold_sqrt(ua(rng)));
    const Eigen::VectorXd z = random_vector(rng, total, -2.0, 2.0);
    const Eigen::VectorXd fast = project_base_concave_of_sum(F, z);
    const MnpResult oracle = mnp_fujishige_wolfe(F, 1e-12, z);
    worst = std::max(worst, (fast - (oracle.point + z)).lpNorm<Eigen::Infinity>());
  }
  const double secs = seconds_since(t0);
  report(1, "base projection matches the min-norm oracle",
         worst <= 1e-6 && secs < 60.0,
         fmt("200 instances, max err %.2e, %.1fs (limit 1e-6, 60s)", worst, secs));
}

// ---------------------------------------------------------------------------
// 2. Closed-form minimizer against exhaustive enumeration.
// ---------------------------------------------------------------------------
void check_sfm_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(102);
  double worst = 0;
  for (int trial = 0; trial < 500; ++trial) {
    std::uniform_int_distribution<int> ksize(1, 12);
    const int k = ksize(rng);
    const EdgeIndex idx(1, k);
    std::vector<int> ids(k);
    std::iota(ids.begin(), ids.end(), 0);
    const Eigen::VectorXd w = random_vector(rng, k, 0.1, 2.0);
    std::uniform_int_distribution<int> which(0, 2);
    ConcaveFn g = ConcaveFn::sqrt();
    std::uniform_real_distribution<double> ua(0.2, 2.5);
    switch (which(rng)) {
      case 0: g = ConcaveFn::sqrt(); break;
      case 1: g = ConcaveFn::threshold_sqrt(ua(rng)); break;
      default: g = ConcaveFn::power(0.6); break;
    }
    const SubmodularCost F = SubmodularCost::concave_of_sum(idx, ids, w, g);
    const Eigen::VectorXd m = random_vector(rng, k, -1.0, 1.0);
    std::uniform_real_distribution<double> ul(-0.5, 1.5);
    const double lambda = ul(rng);

    const std::vector<int> S = sfm_concave_of_sum(F, m, lambda);
    double fast_value = F.fn()(std::accumulate(
        S.begin(), S.end(), 0.0, [&](double acc, int e) { return acc + w[e]; }));
    for (int e : S) fast_value += m[e] - lambda;

    double best = 0;  // empty set
    for (int mask = 0; mask < (1 << k); ++mask) {
      double wsum = 0, lin = 0;
      for (int e = 0; e < k; ++e)
        if (mask & (1 << e)) {
          wsum += w[e];
          lin += m[e] - lambda;
        }
      best = std::min(best, F.fn()(wsum) + lin);
    }
    worst = std::max(worst, std::abs(fast_value - best));
  }
  const double secs = seconds_since(t0);
  report(2, "fast minimizer matches exhaustive enumeration",
         worst <= 1e-10 && secs < 30.0,
         fmt("500 instances, max value err %.2e, %.1fs (limit 1e-10, 30s)", worst, secs));
}

// ---------------------------------------------------------------------------
// 3. Extension agrees with the set function and with every greedy vertex.
// ---------------------------------------------------------------------------
void check_extension_exactness() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(103);
  double worst_indicator = 0;
  for (int trial = 0; trial < 30; ++trial) {
    std::uniform_int_distribution<int> ksize(1, 10);
    const int total = ksize(rng);
    const EdgeIndex idx(1, total);
    std::vector<int> ids(total);
    std::iota(ids.begin(), ids.end(), 0);
    const SubmodularCost F = SubmodularCost::concave_of_sum(
        idx, ids, random_vector(rng, total, 0.1, 2.0), ConcaveFn::sqrt());
    for (int mask = 0; mask < (1 << total); ++mask) {
      std::vector<int> S;
      Eigen::VectorXd ind = Eigen::VectorXd::Zero(total);
      for (int e = 0; e < total; ++e)
        if (mask & (1 << e)) {
          S.push_back(e);
          ind[e] = 1.0;
        }
      worst_indicator = std::max(worst_indicator, std::abs(lovasz(F, ind) - F.eval(S)));
    }
  }

  // The extension is the support function of the base polytope: its value at
  // y equals the best inner product over the vertices of every ordering.
  double worst_vertex = 0;
  for (int trial = 0; trial < 10; ++trial) {
    std::uniform_int_distribution<int> ksize(2, 8);
    const int total = ksize(rng);
    const EdgeIndex idx(1, total);
    std::vector<int> ids(total);
    std::iota(ids.begin(), ids.end(), 0);
    const SubmodularCost F = SubmodularCost::concave_of_sum(
        idx, ids, random_vector(rng, total, 0.1, 2.0), ConcaveFn::power(0.7));
    const Eigen::VectorXd y = random_vector(rng, total, 0.0, 1.5);
    std::vector<int> order(total);
    std::iota(order.begin(), order.end(), 0);
    double best = -std::numeric_limits<double>::infinity();
    std::sort(order.begin(), order.end());
    do {
      double prev = 0, dot = 0;
      std::vector<int> prefix;
      for (int e : order) {
        prefix.push_back(e);
        const double cur = F.eval(prefix);
        dot += y[e] * (cur - prev);
        prev = cur;
      }
      best = std::max(best, dot);
    } while (std::next_permutation(order.begin(), order.end()));
    worst_vertex = std::max(worst_vertex, std::abs(lovasz(F, y) - best));
  }
  const double secs = seconds_since(t0);
  report(3, "extension matches the set function and greedy hull",
         worst_indicator <= 1e-10 && worst_vertex <= 1e-10 && secs < 30.0,
         fmt("indicator err %.2e, vertex err %.2e, %.1fs (limits 1e-10, 30s)", worst_indicator,
             worst_vertex, secs));
}

// ---------------------------------------------------------------------------
// 4. All three structured solvers collapse to exact transport on modular costs.
// ---------------------------------------------------------------------------
void check_modular_collapse() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(104);
  double worst_rel = 0;
  int done = 0;
  for (int trial = 0; trial < 20; ++trial) {
    std::uniform_int_distribution<int> size(2, 30);
    const int n = size(rng), m = size(rng);
    const Eigen::MatrixXd C = random_matrix(rng, n, m, 0.2, 2.0);
    const Eigen::VectorXd muw = random_simplex(rng, n);
    const Eigen::VectorXd nuw = random_simplex(rng, m);
    const DiscreteMeasure mu(random_matrix(rng, n, 2, -1, 1), muw);
    const DiscreteMeasure nu(random_matrix(rng, m, 2, -1, 1), nuw);
    const SubmodularCost F = SubmodularCost::modular(EdgeIndex(n, m), flatten(C));
    const double lp = exact_ot_lp(C, muw, nuw).value;
    const double scale = std::max(1.0, std::abs(lp));
    for (Algorithm alg : {Algorithm::mda, Algorithm::spmd, Algorithm::spmp}) {
      SolverConfig cfg;
      cfg.algorithm = alg;
      cfg.tol = 0.9e-3 * scale;  // certified stop slightly inside the target
      cfg.max_iter = alg == Algorithm::spmp ? 20000 : 60000;
      // With a constant subgradient the mirror chain is entropic transport at
      // temperature 1/(sum of steps); large steps anneal the average fast.
      cfg.eta0 = alg == Algorithm::spmp ? 2.0 : 60.0;
      const SolveResult r = solve(mu, nu, F, C, cfg);
      worst_rel = std::max(worst_rel, std::abs(r.primal_value - lp) / scale);
      ++done;
    }
  }
  const double secs = seconds_since(t0);
  report(4, "modular costs collapse to exact transport",
         worst_rel <= 1e-3 && secs < 300.0,
         fmt("%d solves, max rel err %.2e, %.1fs (limit 1e-3, 300s)", done, worst_rel, secs));
}

// ---------------------------------------------------------------------------
// 5. Mirror prox certifies a 50x50 clustered instance; weak duality all along.
// ---------------------------------------------------------------------------
void check_gap_certification() {
  const auto t0 = Clock::now();
  const ClusteredInstance inst = make_clustered(105, 25, 0.5, 0.02);  // 50 x 50
  SolverConfig cfg;
  cfg.algorithm = Algorithm::spmp;
  cfg.tol = 1e-3;
  cfg.max_iter = 5000;
  cfg.eta0 = 12.0;
  const SolveResult r = solve(inst.mu, inst.nu, inst.F, inst.C, cfg);
  bool weak_duality = true;
  double min_gap = std::numeric_limits<double>::infinity();
  for (const HistoryRecord& h : r.history) {
    if (std::isnan(h.gap)) continue;
    weak_duality = weak_duality && h.gap >= -1e-8;
    min_gap = std::min(min_gap, h.gap);
  }
  const double secs = seconds_since(t0);
  report(5, "mirror prox certifies a 50x50 clustered instance",
         r.certified && r.gap <= 1e-3 && r.iterations <= 5000 && weak_duality && secs < 600.0,
         fmt("gap %.2e in %d iters, weak duality %s, %.1fs (limits 1e-3, 5000, 600s)", r.gap,
             r.iterations, weak_duality ? "held" : "VIOLATED", secs));
}

// ---------------------------------------------------------------------------
// 6. Mirror prox reaches a loose gap in no more iterations than the
//    descent-style methods (soft on one straggler seed).
// ---------------------------------------------------------------------------
int iterations_to_gap(const SolveResult& r, double target) {
  for (const HistoryRecord& h : r.history)
    if (!std::isnan(h.gap) && h.gap <= target) return h.iteration;
  return std::numeric_limits<int>::max();
}

// Uniform clouds with a random saturated edge partition.  Unlike the blocky
// clustered family — where every block-diagonal coupling is near-optimal and
// all methods certify almost immediately — this family has no shortcut, so
// measured iteration counts reflect convergence rates.
struct RandomInstance {
  DiscreteMeasure mu, nu;
  Eigen::MatrixXd C;
  SubmodularCost F;
};

RandomInstance make_random_groups(std::uint64_t seed, int n, double alpha, int n_groups) {
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

void check_rate_ordering() {
  const auto t0 = Clock::now();
  int ordered = 0;
  std::string lines;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const RandomInstance inst = make_random_groups(200 + seed, 100, 0.2, 100);  // 100 x 100
    int iters[3] = {0, 0, 0};
    const Algorithm algs[3] = {Algorithm::mda, Algorithm::spmd, Algorithm::spmp};
    for (int a = 0; a < 3; ++a) {
      SolverConfig cfg;
      cfg.algorithm = algs[a];
      cfg.tol = 1e-2;
      cfg.max_iter = 4000;
      cfg.eta0 = 2.0;
      cfg.gap_every = 25;
      iters[a] = iterations_to_gap(solve(inst.mu, inst.nu, inst.F, inst.C, cfg), 1e-2);
    }
    // A method that never reached the target inside the shared budget has a
    // later crossing than one that did; the comparison needs the prox
    // crossing itself to be inside the budget to be meaningful.
    const bool ok = iters[2] < std::numeric_limits<int>::max() && iters[2] <= iters[0] &&
                    iters[2] <= iters[1];
    ordered += ok;
    const auto show = [](int it) { return it == std::numeric_limits<int>::max() ? -1 : it; };
    lines += fmt(" s%llu:%d/%d/%d%s", (unsigned long long)seed, show(iters[0]), show(iters[1]),
                 show(iters[2]), ok ? "" : "!");
  }
  const double secs = seconds_since(t0);
  report(6, "mirror prox needs no more iterations to a 1e-2 gap",
         ordered >= 4,
         fmt("%d/5 seeds ordered (mda/spmd/spmp iters:%s), %.1fs", ordered, lines.c_str(), secs));
}

// ---------------------------------------------------------------------------
// 7. In-class block mass is nonincreasing in the threshold; the saturated
//    threshold reproduces the exact transport value.
// ---------------------------------------------------------------------------
void check_alpha_interpolation() {
  const auto t0 = Clock::now();
  // A shifted loose cloud whose cheapest linear plan crosses class blocks, so
  // the sweep has real room to decrease as the threshold grows.
  SyntheticSpec spec;
  spec.seed = 6;
  spec.clusters = 3;
  spec.per_cluster = 5;
  spec.spread = 0.7;
  spec.separation = 3.0;
  spec.shift = Eigen::Vector2d(1.4, 0.6);
  spec.swap_pair = false;
  const SyntheticPair pair = generate(spec);
  const CostMatrix cost = build_cost(pair.src, pair.tgt, Metric::euclidean);
  const GroupStructure gs = class_groups(pair.src.labels(), pair.tgt.labels());

  // No group can exceed its modular mass, so this alpha never thresholds.
  double saturating = 1.0;
  const Eigen::VectorXd cflat = flatten(cost.entries());
  for (const auto& g : gs.groups()) {
    double mass = 0;
    for (int e : g) mass += cflat[e];
    saturating = std::max(saturating, mass + 1.0);
  }

  const std::vector<double> alphas = {0.05, 0.5, 2.0, saturating};
  std::vector<double> fracs;
  double final_cost = 0;
  bool all_finite = true;
  for (double alpha : alphas) {
    const SubmodularCost F =
        SubmodularCost::from_groups(gs, cost.entries(), ConcaveFn::threshold_sqrt(alpha));
    SolverConfig cfg;
    cfg.algorithm = Algorithm::spmp;
    cfg.tol = 1e-3;
    cfg.max_iter = 8000;
    cfg.eta0 = 2.0;
    const SolveResult r = solve(pair.src, pair.tgt, F, cost.entries(), cfg);
    all_finite = all_finite && std::isfinite(r.gap);
    fracs.push_back(
        in_class_fraction(r.coupling.gamma(), pair.src.labels(), pair.tgt.labels()));
    final_cost = (r.coupling.gamma().array() * cost.entries().array()).sum();
  }
  bool nonincreasing = true;
  for (size_t i = 1; i < fracs.size(); ++i)
    nonincreasing = nonincreasing && fracs[i] <= fracs[i - 1] + 5e-3;
  const double lp = exact_ot_lp(cost.entries(), pair.src.weights(), pair.tgt.weights()).value;
  const bool matches_lp = std::abs(final_cost - lp) <= 1e-3 * std::max(1.0, std::abs(lp));
  const double secs = seconds_since(t0);
  report(7, "block mass interpolates monotonically in the threshold",
         all_finite && nonincreasing && matches_lp,
         fmt("fractions %.4f/%.4f/%.4f/%.4f, saturated rel err %.2e, %.1fs", fracs[0], fracs[1],
             fracs[2], fracs[3], std::abs(final_cost - lp) / std::max(1.0, std::abs(lp)), secs));
}

// ---------------------------------------------------------------------------
// 8. The certified distance behaves as a semi-metric across 50 seeds.
// ---------------------------------------------------------------------------
void check_semi_metric() {
  const auto t0 = Clock::now();
  const double tol = 1e-3;
  double worst_identity = 0, worst_asym = 0, most_negative = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    SyntheticSpec spec;
    spec.seed = 300 + seed;
    spec.clusters = 2;
    spec.per_cluster = 4;
    spec.spread = 0.15;
    spec.separation = 3.0;
    spec.shift = Eigen::Vector2d(0.3, 0.1);
    spec.swap_pair = false;
    const SyntheticPair pair = generate(spec);

    SolverConfig cfg;
    cfg.algorithm = Algorithm::spmp;
    cfg.tol = tol;
    cfg.max_iter = 4000;
    cfg.eta0 = 2.0;

    // Identity: the distance from a measure to itself.
    {
      const CostMatrix cost = build_cost(pair.src, pair.src, Metric::euclidean);
      const GroupStructure gs = class_groups(pair.src.labels(), pair.src.labels());
      const SubmodularCost F =
          SubmodularCost::from_groups(gs, cost.entries(), ConcaveFn::threshold_sqrt(0.5));
      const SotDistance d = sot_distance(pair.src, pair.src, F, cost.entries(), cfg);
      worst_identity = std::max(worst_identity, d.value);
      most_negative = std::min(most_negative, d.value);
    }
    // Symmetry: the same construction applied to the reversed pair, i.e. the
    // transposed cost with the class groups built in the opposite order.
    {
      const CostMatrix cost = build_cost(pair.src, pair.tgt, Metric::euclidean);
      const GroupStructure fg = class_groups(pair.src.labels(), pair.tgt.labels());
      const SubmodularCost F =
          SubmodularCost::from_groups(fg, cost.entries(), ConcaveFn::threshold_sqrt(0.5));
      const SotDistance fwd = sot_distance(pair.src, pair.tgt, F, cost.entries(), cfg);

      const Eigen::MatrixXd Ct = cost.entries().transpose();
      const GroupStructure bg = class_groups(pair.tgt.labels(), pair.src.labels());
      const SubmodularCost Ft = SubmodularCost::from_groups(bg, Ct, ConcaveFn::threshold_sqrt(0.5));
      const SotDistance bwd = sot_distance(pair.tgt, pair.src, Ft, Ct, cfg);

      worst_asym = std::max(worst_asym, std::abs(fwd.value - bwd.value));
      most_negative = std::min({most_negative, fwd.value, bwd.value});
    }
  }
  const double secs = seconds_since(t0);
  report(8, "the certified distance behaves as a semi-metric",
         worst_identity <= tol + 1e-9 && worst_asym <= 2 * tol && most_negative >= -1e-12 &&
             secs < 300.0,
         fmt("50 seeds: identity %.2e, asymmetry %.2e, min %.2e, %.1fs (limits %g, %g, 300s)",
             worst_identity, worst_asym, most_negative, secs, tol, 2 * tol));
}

// ---------------------------------------------------------------------------
// 9. Structured adaptation dominates the baselines in the expected direction.
// ---------------------------------------------------------------------------
SyntheticPair shifted_cloud_pair(std::uint64_t seed) {
  SyntheticSpec spec;
  spec.seed = seed;
  spec.clusters = 3;
  spec.per_cluster = 5;
  spec.spread = 0.7;
  spec.separation = 3.0;
  spec.shift = Eigen::Vector2d(1.4, 0.6);
  spec.swap_pair = false;
  return generate(spec);
}

AdaptResult structured_adapt(const SyntheticPair& pair, const Eigen::MatrixXd& C) {
  // Unsupervised grouping: source classes only, each target its own group.
  const GroupStructure gs = class_groups(pair.src.labels(), pair.tgt.size());
  const SubmodularCost F = SubmodularCost::from_groups(gs, C, ConcaveFn::threshold_sqrt(0.3));
  SolverConfig cfg;
  cfg.algorithm = Algorithm::spmp;
  cfg.tol = 1e-3;
  cfg.max_iter = 2500;
  // Mid-run couplings only need approximate feasibility; capping the
  // projection work bounds the runtime without changing the accuracies.
  cfg.sinkhorn.inner_tol = 1e-8;
  cfg.sinkhorn.max_inner = 400;
  return adapt_and_score(pair.src, pair.tgt, pair.tgt, F, C, cfg);
}

AdaptResult baseline_adapt(const SyntheticPair& pair, const Eigen::MatrixXd& C, Algorithm alg) {
  const SubmodularCost modular =
      SubmodularCost::modular(EdgeIndex(pair.src.size(), pair.tgt.size()), flatten(C));
  SolverConfig cfg;
  cfg.algorithm = alg;
  return adapt_and_score(pair.src, pair.tgt, pair.tgt, modular, C, cfg);
}

void check_adaptation_direction() {
  const auto t0 = Clock::now();
  int wins_vs_entropic = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const SyntheticPair pair = shifted_cloud_pair(seed);
    const CostMatrix cost = build_cost(pair.src, pair.tgt, Metric::euclidean);
    const AdaptResult structured = structured_adapt(pair, cost.entries());
    const AdaptResult entropic = baseline_adapt(pair, cost.entries(), Algorithm::sinkhorn_ot);
    if (structured.accuracy >= entropic.accuracy) ++wins_vs_entropic;
  }

  // The constructed crossing instance: the exact linear matcher provably
  // sends mass across class blocks and pays for it in accuracy.
  const SyntheticPair pair = shifted_cloud_pair(6);
  const CostMatrix cost = build_cost(pair.src, pair.tgt, Metric::euclidean);
  const LpResult lp = exact_ot_lp(cost.entries(), pair.src.weights(), pair.tgt.weights());
  const double emd_in_class =
      in_class_fraction(lp.plan, pair.src.labels(), pair.tgt.labels());
  const AdaptResult structured = structured_adapt(pair, cost.entries());
  const AdaptResult plain = baseline_adapt(pair, cost.entries(), Algorithm::emd);
  const bool strict_win = structured.accuracy > plain.accuracy;

  const double secs = seconds_since(t0);
  report(9, "structured adaptation dominates the baselines",
         wins_vs_entropic >= 8 && strict_win && emd_in_class < 1.0 && secs < 600.0,
         fmt("vs entropic %d/10, strict win on crossing instance %s (crossing mass %.2f), %.1fs",
             wins_vs_entropic, strict_win ? "yes" : "NO", 1.0 - emd_in_class, secs));
}

// ---------------------------------------------------------------------------
// 10. Scaling projections factor exactly and satisfy the marginals.
// ---------------------------------------------------------------------------
void check_scaling_projection() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(110);
  double worst_recon = 0, worst_residual = 0;
  bool all_converged = true;
  for (int trial = 0; trial < 100; ++trial) {
    std::uniform_int_distribution<int> size(1, 100);
    const int n = size(rng), m = size(rng);
    const Eigen::MatrixXd w = random_matrix(rng, n, m, 0.05, 5.0);
    const Eigen::VectorXd mu = random_simplex(rng, n);
    const Eigen::VectorXd nu = random_simplex(rng, m);
    SinkhornConfig cfg;
    cfg.inner_tol = 1e-10;
    cfg.max_inner = 20000;
    const KlProjection p = kl_project(w, mu, nu, cfg);
    all_converged = all_converged && p.converged;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) {
        const double rebuilt = std::exp(p.log_u[i] + std::log(w(i, j)) + p.log_v[j]);
        worst_recon = std::max(worst_recon, std::abs(rebuilt - p.gamma(i, j)));
      }
    worst_residual = std::max(worst_residual, (p.gamma.rowwise().sum() - mu).lpNorm<Eigen::Infinity>());
    worst_residual = std::max(worst_residual, (p.gamma.colwise().sum().transpose() - nu).lpNorm<Eigen::Infinity>());
  }
  const double secs = seconds_since(t0);
  report(10, "scaling projections factor exactly and hit the marginals",
         worst_recon <= 1e-10 && worst_residual <= 1e-9 && all_converged && secs < 60.0,
         fmt("100 kernels, reconstruction %.2e, residual %.2e, %.1fs (limits 1e-10, 1e-9, 60s)",
             worst_recon, worst_residual, secs));
}

}  // namespace

int main() {
  std::printf("acceptance checks (deterministic; one line per shipped guarantee)\n");
  check_projection_oracle();
  check_sfm_oracle();
  check_extension_exactness();
  check_modular_collapse();
  check_gap_certification();
  check_rate_ordering();
  check_alpha_interpolation();
  check_semi_metric();
  check_adaptation_direction();
  check_scaling_projection();
  if (g_failures == 0)
    std::printf("all checks passed\n");
  else
    std::printf("%d check(s) failed\n", g_failures);
  return g_failures;
}
