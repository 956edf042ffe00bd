#include "sot/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace sot {
namespace {

// Gaussian draws via Box-Muller on top of mt19937_64, which the standard
// pins bit-for-bit; std::normal_distribution would be free to differ across
// library implementations and would break byte-identical outputs.
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) : rng_(seed) {}

  double operator()() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = (static_cast<double>(rng_() >> 11) + 1.0) * 0x1p-53;  // (0, 1]
    const double u2 = static_cast<double>(rng_() >> 11) * 0x1p-53;          // [0, 1)
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::mt19937_64 rng_;
  bool has_spare_ = false;
  double spare_ = 0;
};

// Noise-free anchor of point p in cluster l.
Eigen::VectorXd anchor(const SyntheticSpec& spec, int l, int p) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(spec.dim);
  if (spec.shape == Shape::two_moons) {
    const double R = spec.separation;
    const double th = M_PI * (p + 0.5) / spec.per_cluster;
    if (l == 0) {
      x[0] = R * std::cos(th);
      x[1] = R * std::sin(th);
    } else {
      x[0] = R - R * std::cos(th);
      x[1] = R / 2 - R * std::sin(th);
    }
    return x;
  }
  if (spec.clusters == 1) return x;
  if (spec.dim == 1) {
    x[0] = spec.separation * l;
    return x;
  }
  // Ring layout: neighboring anchors sit `separation` apart.
  const double R = spec.separation / (2.0 * std::sin(M_PI / spec.clusters));
  const double th = 2.0 * M_PI * l / spec.clusters;
  x[0] = R * std::cos(th);
  x[1] = R * std::sin(th);
  return x;
}

std::vector<int> identity_swap(const SyntheticSpec& spec) {
  std::vector<int> perm(spec.clusters);
  std::iota(perm.begin(), perm.end(), 0);
  if (!spec.swap_pair || spec.clusters < 2) return perm;
  // Exchange the two clusters whose anchors are closest (first pair on ties).
  int ba = 0, bb = 1;
  double best = std::numeric_limits<double>::infinity();
  for (int a = 0; a < spec.clusters; ++a)
    for (int b = a + 1; b < spec.clusters; ++b) {
      const double d = (anchor(spec, a, 0) - anchor(spec, b, 0)).norm();
      if (d < best) {
        best = d;
        ba = a;
        bb = b;
      }
    }
  std::swap(perm[ba], perm[bb]);
  return perm;
}

}  // namespace

SyntheticPair generate(const SyntheticSpec& spec) {
  if (spec.clusters < 1) throw InputError("generate: clusters must be at least 1");
  if (spec.per_cluster < 1) throw InputError("generate: per_cluster must be at least 1");
  if (spec.dim < 1) throw InputError("generate: dim must be at least 1");
  if (!(spec.spread >= 0)) throw InputError("generate: spread must be nonnegative");
  if (!(spec.separation > 0)) throw InputError("generate: separation must be positive");
  if (spec.shape == Shape::two_moons && spec.dim != 2)
    throw InputError("generate: two_moons requires dim = 2");
  if (spec.shape == Shape::two_moons && spec.clusters != 2)
    throw InputError("generate: two_moons requires clusters = 2");
  Eigen::VectorXd shift = spec.shift;
  if (shift.size() == 0) shift = Eigen::VectorXd::Zero(spec.dim);
  if (shift.size() != spec.dim)
    throw InputError("generate: shift dimension does not match dim");

  const int N = spec.clusters * spec.per_cluster;
  NormalSampler noise(spec.seed);
  const std::vector<int> perm = identity_swap(spec);

  Eigen::MatrixXd src_pts(N, spec.dim), tgt_pts(N, spec.dim);
  std::vector<int> labels(N);
  int row = 0;
  for (int l = 0; l < spec.clusters; ++l)
    for (int p = 0; p < spec.per_cluster; ++p, ++row) {
      Eigen::VectorXd x = anchor(spec, l, p);
      for (int d = 0; d < spec.dim; ++d) x[d] += spec.spread * noise();
      src_pts.row(row) = x;
      labels[row] = l;
    }
  row = 0;
  for (int l = 0; l < spec.clusters; ++l)
    for (int p = 0; p < spec.per_cluster; ++p, ++row) {
      Eigen::VectorXd x = anchor(spec, perm[l], p) + shift;
      for (int d = 0; d < spec.dim; ++d) x[d] += spec.spread * noise();
      tgt_pts.row(row) = x;
    }

  const Eigen::VectorXd w = Eigen::VectorXd::Constant(N, 1.0 / N);
  return SyntheticPair{DiscreteMeasure(src_pts, w, labels), DiscreteMeasure(tgt_pts, w, labels)};
}

GroupStructure class_groups(const std::vector<int>& src_labels, int n_targets) {
  std::vector<int> tgt_labels(static_cast<size_t>(n_targets));
  std::iota(tgt_labels.begin(), tgt_labels.end(), 0);  // every target is its own class
  return class_groups(src_labels, tgt_labels);
}

GroupStructure class_groups(const std::vector<int>& src_labels,
                            const std::vector<int>& tgt_labels) {
  const int n = static_cast<int>(src_labels.size());
  const int m = static_cast<int>(tgt_labels.size());
  if (n == 0 || m == 0) throw InputError("class_groups: labels must cover all points");
  auto distinct = [](const std::vector<int>& v) {
    std::vector<int> d = v;
    std::sort(d.begin(), d.end());
    d.erase(std::unique(d.begin(), d.end()), d.end());
    return d;
  };
  const std::vector<int> src_classes = distinct(src_labels);
  const std::vector<int> tgt_classes = distinct(tgt_labels);
  std::vector<std::vector<int>> groups;
  groups.reserve(src_classes.size() * tgt_classes.size());
  for (int k : src_classes)
    for (int l : tgt_classes) {
      std::vector<int> edges;
      for (int i = 0; i < n; ++i) {
        if (src_labels[i] != k) continue;
        for (int j = 0; j < m; ++j)
          if (tgt_labels[j] == l) edges.push_back(i * m + j);
      }
      groups.push_back(std::move(edges));
    }
  return GroupStructure(std::move(groups), GroupStructure::CoverType::partition, false,
                        EdgeIndex(n, m));
}

GroupStructure ngram_groups(int src_len, int tgt_len, int n) {
  if (n < 1) throw InputError("ngram_groups: n must be at least 1");
  if (src_len < n || tgt_len < n)
    throw InputError("ngram_groups: n exceeds a sequence length");
  std::vector<std::vector<int>> groups;
  groups.reserve(static_cast<size_t>(src_len - n + 1) * (tgt_len - n + 1));
  for (int ws = 0; ws + n <= src_len; ++ws)
    for (int wt = 0; wt + n <= tgt_len; ++wt) {
      std::vector<int> edges;
      edges.reserve(static_cast<size_t>(n) * n);
      for (int i = ws; i < ws + n; ++i)
        for (int j = wt; j < wt + n; ++j) edges.push_back(i * tgt_len + j);
      groups.push_back(std::move(edges));
    }
  const auto type =
      n == 1 ? GroupStructure::CoverType::partition : GroupStructure::CoverType::cover;
  return GroupStructure(std::move(groups), type, false, EdgeIndex(src_len, tgt_len));
}

namespace {

// Indices of `point` itself plus its k nearest peers (ties toward lower index).
std::vector<std::vector<int>> neighborhoods(const Eigen::MatrixXd& pts, int k) {
  const int N = static_cast<int>(pts.rows());
  const int kk = std::min(k, N - 1);
  std::vector<std::vector<int>> out(N);
  std::vector<std::pair<double, int>> order(N);
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j)
      order[j] = {(pts.row(i) - pts.row(j)).squaredNorm(), j};
    order[i].first = -1;  // self always first
    std::sort(order.begin(), order.end());
    out[i].reserve(kk + 1);
    for (int j = 0; j <= kk; ++j) out[i].push_back(order[j].second);
    std::sort(out[i].begin(), out[i].end());
  }
  return out;
}

}  // namespace

GroupStructure knn_groups(const Eigen::MatrixXd& src_points, const Eigen::MatrixXd& tgt_points,
                          int k_neighbors) {
  if (k_neighbors < 0) throw InputError("knn_groups: k_neighbors must be nonnegative");
  const int n = static_cast<int>(src_points.rows());
  const int m = static_cast<int>(tgt_points.rows());
  if (n == 0 || m == 0) throw InputError("knn_groups: empty point set");
  const auto ns = neighborhoods(src_points, k_neighbors);
  const auto nt = neighborhoods(tgt_points, k_neighbors);
  std::vector<std::vector<int>> groups;
  groups.reserve(static_cast<size_t>(n) * m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      std::vector<int> edges;
      edges.reserve(ns[i].size() * nt[j].size());
      for (int a : ns[i])
        for (int b : nt[j]) edges.push_back(a * m + b);
      std::sort(edges.begin(), edges.end());
      groups.push_back(std::move(edges));
    }
  return GroupStructure(std::move(groups), GroupStructure::CoverType::cover, false,
                        EdgeIndex(n, m));
}

SotDistance sot_distance(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                         const SubmodularCost& F, const Eigen::MatrixXd& C,
                         const SolverConfig& cfg) {
  SotDistance out;
  // Semi-metric hypotheses: monotone cost vanishing on the empty set, with
  // singletons charged exactly where the ground cost is positive.
  out.hypothesis_ok = F.monotone_hint();
  if (out.hypothesis_ok) {
    const int E = F.index().count();
    for (int e = 0; e < E && out.hypothesis_ok; ++e) {
      const double fe = F.eval(std::vector<int>{e});
      const double ce = C(e / C.cols(), e % C.cols());
      if ((fe > 1e-12) != (ce > 1e-12)) out.hypothesis_ok = false;
    }
  }
  const SolveResult res = solve(mu, nu, F, C, cfg);
  out.value = res.primal_value;
  out.gap = res.gap;
  out.certified = res.certified;
  out.iterations = res.iterations;
  return out;
}

Eigen::MatrixXd barycentric_map(const Eigen::MatrixXd& gamma, const Eigen::MatrixXd& tgt_points) {
  if (gamma.cols() != tgt_points.rows())
    throw InputError("barycentric_map: coupling columns do not match the target support");
  Eigen::MatrixXd out(gamma.rows(), tgt_points.cols());
  for (Eigen::Index i = 0; i < gamma.rows(); ++i) {
    const double mass = gamma.row(i).sum();
    if (!(mass > 0))
      throw InputError("barycentric_map: row " + std::to_string(i) + " has zero mass");
    out.row(i) = (gamma.row(i) * tgt_points) / mass;
  }
  return out;
}

namespace {

int predict_1nn(const Eigen::MatrixXd& train_pts, const std::vector<int>& train_labels,
                const Eigen::RowVectorXd& x) {
  double best = std::numeric_limits<double>::infinity();
  int label = std::numeric_limits<int>::max();
  for (Eigen::Index i = 0; i < train_pts.rows(); ++i) {
    const double d = (train_pts.row(i) - x).squaredNorm();
    if (d < best || (d == best && train_labels[i] < label)) {
      best = d;
      label = train_labels[i];
    }
  }
  return label;
}

}  // namespace

AdaptResult adapt_and_score(const DiscreteMeasure& src, const DiscreteMeasure& tgt,
                            const DiscreteMeasure& test, const SubmodularCost& F,
                            const Eigen::MatrixXd& C, const SolverConfig& cfg) {
  if (!src.has_labels()) throw InputError("adapt_and_score: source labels are required");
  if (!test.has_labels()) throw InputError("adapt_and_score: test labels are required");
  if (test.dim() != tgt.dim())
    throw InputError("adapt_and_score: test dimension does not match the target");
  SolveResult res = solve(src, tgt, F, C, cfg);
  Eigen::MatrixXd mapped = barycentric_map(res.coupling.gamma(), tgt.points());
  int correct = 0;
  for (int t = 0; t < test.size(); ++t) {
    if (predict_1nn(mapped, src.labels(), test.points().row(t)) == test.labels()[t]) ++correct;
  }
  AdaptResult out{static_cast<double>(correct) / std::max(1, test.size()), std::move(mapped),
                  std::move(res)};
  return out;
}

double in_class_fraction(const Eigen::MatrixXd& gamma, const std::vector<int>& src_labels,
                         const std::vector<int>& tgt_labels) {
  if (static_cast<Eigen::Index>(src_labels.size()) != gamma.rows() ||
      static_cast<Eigen::Index>(tgt_labels.size()) != gamma.cols())
    throw InputError("in_class_fraction: label lengths do not match the coupling");
  double inside = 0, total = 0;
  for (Eigen::Index i = 0; i < gamma.rows(); ++i)
    for (Eigen::Index j = 0; j < gamma.cols(); ++j) {
      total += gamma(i, j);
      if (src_labels[i] == tgt_labels[j]) inside += gamma(i, j);
    }
  if (!(total > 0)) throw InputError("in_class_fraction: coupling has no mass");
  return inside / total;
}

}  // namespace sot
