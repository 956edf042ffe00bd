#include "sot/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sot {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw InputError(msg);
}

}  // namespace

EdgeIndex::EdgeIndex(int n, int m) : n_(n), m_(m) {
  require(n >= 1 && m >= 1, "EdgeIndex: both sides must be nonempty");
}

int EdgeIndex::flatten(int i, int j) const {
  require(i >= 0 && i < n_ && j >= 0 && j < m_, "EdgeIndex: pair out of range");
  return i * m_ + j;
}

std::pair<int, int> EdgeIndex::unflatten(int e) const {
  require(e >= 0 && e < count(), "EdgeIndex: flat index out of range");
  return {e / m_, e % m_};
}

Eigen::VectorXd EdgeIndex::to_flat(const Eigen::MatrixXd& M) const {
  require(M.rows() == n_ && M.cols() == m_, "EdgeIndex: matrix shape mismatch");
  Eigen::VectorXd v(count());
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < m_; ++j) v[i * m_ + j] = M(i, j);
  return v;
}

Eigen::MatrixXd EdgeIndex::to_matrix(const Eigen::VectorXd& v) const {
  require(v.size() == count(), "EdgeIndex: vector length mismatch");
  Eigen::MatrixXd M(n_, m_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < m_; ++j) M(i, j) = v[i * m_ + j];
  return M;
}

DiscreteMeasure::DiscreteMeasure(Eigen::MatrixXd points, Eigen::VectorXd weights,
                                 std::optional<std::vector<int>> labels)
    : points_(std::move(points)), weights_(std::move(weights)), labels_(std::move(labels)) {
  const int n = static_cast<int>(points_.rows());
  require(n >= 1, "measure: needs at least one point");
  require(points_.cols() >= 1, "measure: points must have dimension >= 1");
  require(points_.allFinite(), "measure: points must be finite");
  require(weights_.size() == n, "measure: weight count must match point count");
  for (int i = 0; i < n; ++i)
    require(std::isfinite(weights_[i]) && weights_[i] > 0,
            "measure: weights must be finite and strictly positive");

  const double sum = weights_.sum();
  require(std::abs(sum - 1.0) <= 1e-9, "measure: weights must sum to one (within 1e-9)");
  weights_ /= sum;  // absorb roundoff so downstream code can rely on the sum

  // Reject duplicated support points; several invariants (and the semi-metric
  // identity property) assume the support is a set.
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      require((points_.row(i) - points_.row(j)).norm() >= 1e-12,
              "measure: duplicate support points at rows " + std::to_string(i) + " and " +
                  std::to_string(j));

  if (labels_) {
    require(static_cast<int>(labels_->size()) == n, "measure: label count must match point count");
    for (int lab : *labels_) require(lab >= 0, "measure: labels must be nonnegative");
  }
}

DiscreteMeasure DiscreteMeasure::uniform(Eigen::MatrixXd points,
                                         std::optional<std::vector<int>> labels) {
  const auto n = points.rows();
  return DiscreteMeasure(std::move(points), Eigen::VectorXd::Constant(n, 1.0 / double(n)),
                         std::move(labels));
}

const std::vector<int>& DiscreteMeasure::labels() const {
  if (!labels_) throw InputError("measure: labels requested but not present");
  return *labels_;
}

CostMatrix::CostMatrix(Eigen::MatrixXd entries, Metric metric)
    : entries_(std::move(entries)), metric_(metric) {
  require(entries_.rows() >= 1 && entries_.cols() >= 1, "cost: empty matrix");
  require(entries_.allFinite(), "cost: entries must be finite");
  require(entries_.minCoeff() >= 0, "cost: entries must be nonnegative");
}

CostMatrix build_cost(const DiscreteMeasure& src, const DiscreteMeasure& tgt, Metric metric) {
  require(src.dim() == tgt.dim(), "build_cost: dimension mismatch between measures");
  require(metric == Metric::euclidean || metric == Metric::squared_euclidean,
          "build_cost: precomputed costs are constructed directly from a matrix");
  Eigen::MatrixXd C(src.size(), tgt.size());
  for (int i = 0; i < src.size(); ++i) {
    for (int j = 0; j < tgt.size(); ++j) {
      const double d2 = (src.points().row(i) - tgt.points().row(j)).squaredNorm();
      C(i, j) = metric == Metric::euclidean ? std::sqrt(d2) : d2;
    }
  }
  return CostMatrix(std::move(C), metric);
}

Coupling::Coupling(Eigen::MatrixXd gamma, double marginal_tol)
    : gamma_(std::move(gamma)), marginal_tol_(marginal_tol) {
  require(gamma_.rows() >= 1 && gamma_.cols() >= 1, "coupling: empty matrix");
  require(gamma_.allFinite(), "coupling: entries must be finite");
  require(gamma_.minCoeff() >= -1e-12, "coupling: entries must be nonnegative");
  require(marginal_tol_ >= 0, "coupling: marginal tolerance must be nonnegative");
  gamma_ = gamma_.cwiseMax(0.0);  // clear roundoff-level negatives
}

Coupling product_coupling(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  return Coupling(mu.weights() * nu.weights().transpose(), 1e-14);
}

CouplingCheck check_coupling(const Eigen::MatrixXd& gamma, const Eigen::VectorXd& mu,
                             const Eigen::VectorXd& nu, double tol) {
  CouplingCheck out;
  if (gamma.rows() != mu.size() || gamma.cols() != nu.size())
    throw InputError("check_coupling: shape mismatch");
  double worst = 0;
  if (!gamma.allFinite()) {
    out.max_violation = std::numeric_limits<double>::infinity();
    return out;
  }
  worst = std::max(worst, -gamma.minCoeff());
  worst = std::max(worst, (gamma.rowwise().sum() - mu).cwiseAbs().maxCoeff());
  worst = std::max(worst, (gamma.colwise().sum().transpose() - nu).cwiseAbs().maxCoeff());
  out.max_violation = worst;
  out.ok = worst <= tol;
  return out;
}

CouplingCheck check_coupling(const Coupling& gamma, const DiscreteMeasure& mu,
                             const DiscreteMeasure& nu, double tol) {
  return check_coupling(gamma.gamma(), mu.weights(), nu.weights(), tol);
}

GroupStructure::GroupStructure(std::vector<std::vector<int>> groups, CoverType cover_type,
                               bool singleton_remainder, const EdgeIndex& index)
    : groups_(std::move(groups)),
      cover_type_(cover_type),
      singleton_remainder_(singleton_remainder),
      index_(index) {
  std::vector<int> cover_count(index_.count(), 0);
  for (size_t g = 0; g < groups_.size(); ++g) {
    require(!groups_[g].empty(), "groups: group " + std::to_string(g) + " is empty");
    for (int e : groups_[g]) {
      require(e >= 0 && e < index_.count(),
              "groups: edge id out of range in group " + std::to_string(g));
      ++cover_count[e];
    }
    std::vector<int> sorted = groups_[g];
    std::sort(sorted.begin(), sorted.end());
    require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(),
            "groups: group " + std::to_string(g) + " lists an edge twice");
  }
  for (int e = 0; e < index_.count(); ++e) {
    if (cover_type_ == CoverType::partition)
      require(cover_count[e] <= 1, "groups: partition assigns edge " + std::to_string(e) +
                                       " to more than one group");
    if (cover_count[e] == 0) {
      require(singleton_remainder_,
              "groups: edge " + std::to_string(e) + " is uncovered and singleton completion is off");
      remainder_.push_back(e);
    }
  }
}

}  // namespace sot
