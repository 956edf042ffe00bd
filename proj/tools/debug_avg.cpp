// Scratch experiment: SP-MD averaging schemes (full history vs suffix) on the
// clustered instance, to pick the scheme the library should use.
#include <cmath>
#include <cstdio>
#include <random>

#include "sot/measures.hpp"
#include "sot/projections.hpp"
#include "sot/solvers.hpp"
#include "sot/submodular.hpp"

using namespace sot;

int main(int argc, char** argv) {
  const int per = argc > 1 ? std::atoi(argv[1]) : 10;
  const double alpha = argc > 2 ? std::atof(argv[2]) : 0.5;
  const double eta0 = argc > 3 ? std::atof(argv[3]) : 10.0;
  const int max_iter = argc > 4 ? std::atoi(argv[4]) : 4000;

  std::mt19937_64 rng(61);
  const int n = 2 * per;
  std::normal_distribution<double> noise(0.0, 0.1);
  Eigen::MatrixXd S(n, 2), T(n, 2);
  std::vector<int> labels(n);
  for (int k = 0; k < 2; ++k)
    for (int p = 0; p < per; ++p) {
      const int row = k * per + p;
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
    for (int j = 0; j < n; ++j) groups[labels[i] * 2 + labels[j]].push_back(idx.flatten(i, j));
  const GroupStructure gs(groups, GroupStructure::CoverType::partition, false, idx);
  const SubmodularCost F =
      SubmodularCost::from_groups(gs, cost.entries(), ConcaveFn::threshold_sqrt(alpha));
  const Eigen::MatrixXd& C = cost.entries();
  const Eigen::VectorXd muw = mu.weights(), nuw = nu.weights();

  const auto flat = [&](const Eigen::MatrixXd& G) {
    Eigen::VectorXd v(G.size());
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) v[i * n + j] = G(i, j);
    return v;
  };
  const auto gap_of = [&](const Eigen::MatrixXd& gb, const Eigen::VectorXd& kb) {
    return saddle_gap(gb, kb, F, muw, nuw);
  };

  Eigen::MatrixXd gamma = muw * nuw.transpose();
  Eigen::VectorXd kappa = project_base(F, flat(C));

  // full-history sums
  Eigen::MatrixXd gsum = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd ksum = Eigen::VectorXd::Zero(n * n);
  double wsum = 0;
  // previous doubling window + current window sums (suffix average)
  Eigen::MatrixXd gprev = Eigen::MatrixXd::Zero(n, n), gcur = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd kprev = Eigen::VectorXd::Zero(n * n), kcur = Eigen::VectorXd::Zero(n * n);
  double wprev = 0, wcur = 0;
  int next_restart = 2;

  for (int t = 1; t <= max_iter; ++t) {
    const double eta = eta0 / std::sqrt(double(t));
    Eigen::MatrixXd L(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        L(i, j) = std::log(std::max(gamma(i, j), 1e-300)) -
                  std::clamp(eta * kappa[i * n + j], -700.0, 700.0);
    Eigen::MatrixXd gamma_next = kl_project_log(L, muw, nuw).gamma;
    Eigen::VectorXd kappa_next = project_base(F, kappa + eta * flat(gamma));
    gamma = std::move(gamma_next);
    kappa = std::move(kappa_next);

    gsum += eta * gamma;
    ksum += eta * kappa;
    wsum += eta;
    if (t >= next_restart) {
      gprev = gcur;
      kprev = kcur;
      wprev = wcur;
      gcur.setZero();
      kcur.setZero();
      wcur = 0;
      next_restart *= 2;
    }
    gcur += eta * gamma;
    kcur += eta * kappa;
    wcur += eta;

    if (t % 250 == 0 || t == max_iter) {
      const double full = gap_of(gsum / wsum, ksum / wsum);
      const double sw = wprev + wcur;
      const double suffix = gap_of((gprev + gcur) / sw, (kprev + kcur) / sw);
      std::printf("t=%5d eta=%.4f full_gap=%.6g suffix_gap=%.6g\n", t, eta, full, suffix);
    }
  }
  return 0;
}
