#pragma once

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sot {

// Invalid user-supplied data (bad weights, shape mismatches, malformed files).
// The CLI maps this exception to exit code 1.
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

// Row-major mapping between edge (i, j) of the n x m bipartite graph and the
// flat index i*m + j.  Every module that mixes matrix and vector views of the
// same data goes through this class so that the layout is fixed in one place.
class EdgeIndex {
 public:
  EdgeIndex(int n, int m);

  int n() const { return n_; }
  int m() const { return m_; }
  int count() const { return n_ * m_; }

  int flatten(int i, int j) const;
  std::pair<int, int> unflatten(int e) const;

  Eigen::VectorXd to_flat(const Eigen::MatrixXd& M) const;
  Eigen::MatrixXd to_matrix(const Eigen::VectorXd& v) const;

  bool operator==(const EdgeIndex& o) const { return n_ == o.n_ && m_ == o.m_; }

 private:
  int n_, m_;
};

// Weighted point cloud with optional class labels.  Weights must be strictly
// positive and sum to one; sums within 1e-9 of one are renormalized, anything
// further off is rejected.  Duplicate support points are rejected as well.
class DiscreteMeasure {
 public:
  DiscreteMeasure(Eigen::MatrixXd points, Eigen::VectorXd weights,
                  std::optional<std::vector<int>> labels = std::nullopt);

  // Uniform weights over the given support.
  static DiscreteMeasure uniform(Eigen::MatrixXd points,
                                 std::optional<std::vector<int>> labels = std::nullopt);

  int size() const { return static_cast<int>(points_.rows()); }
  int dim() const { return static_cast<int>(points_.cols()); }
  const Eigen::MatrixXd& points() const { return points_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  bool has_labels() const { return labels_.has_value(); }
  const std::vector<int>& labels() const;

 private:
  Eigen::MatrixXd points_;   // one point per row
  Eigen::VectorXd weights_;
  std::optional<std::vector<int>> labels_;
};

enum class Metric { euclidean, squared_euclidean, precomputed };

// Nonnegative ground cost between two supports, remembering how it was built.
class CostMatrix {
 public:
  CostMatrix(Eigen::MatrixXd entries, Metric metric);

  int n() const { return static_cast<int>(entries_.rows()); }
  int m() const { return static_cast<int>(entries_.cols()); }
  const Eigen::MatrixXd& entries() const { return entries_; }
  Metric metric() const { return metric_; }
  EdgeIndex edge_index() const { return EdgeIndex(n(), m()); }

 private:
  Eigen::MatrixXd entries_;
  Metric metric_;
};

CostMatrix build_cost(const DiscreteMeasure& src, const DiscreteMeasure& tgt, Metric metric);

// Transport plan between two measures.  Entries must be nonnegative; marginal
// agreement is tracked by the tolerance the producer guarantees.
class Coupling {
 public:
  Coupling(Eigen::MatrixXd gamma, double marginal_tol);

  int n() const { return static_cast<int>(gamma_.rows()); }
  int m() const { return static_cast<int>(gamma_.cols()); }
  const Eigen::MatrixXd& gamma() const { return gamma_; }
  double marginal_tol() const { return marginal_tol_; }

 private:
  Eigen::MatrixXd gamma_;
  double marginal_tol_;
};

Coupling product_coupling(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

struct CouplingCheck {
  bool ok = false;
  double max_violation = 0;  // worst marginal residual or negativity
};

CouplingCheck check_coupling(const Eigen::MatrixXd& gamma, const Eigen::VectorXd& mu,
                             const Eigen::VectorXd& nu, double tol);
CouplingCheck check_coupling(const Coupling& gamma, const DiscreteMeasure& mu,
                             const DiscreteMeasure& nu, double tol);

// Edge groups over which structured costs apply.  Groups hold flat edge ids.
// A partition may not assign an edge twice; a cover may.  Edges left out of
// every group become implicit singleton groups when singleton_remainder is
// set, otherwise full coverage is required.
class GroupStructure {
 public:
  enum class CoverType { partition, cover };

  GroupStructure(std::vector<std::vector<int>> groups, CoverType cover_type,
                 bool singleton_remainder, const EdgeIndex& index);

  const std::vector<std::vector<int>>& groups() const { return groups_; }
  CoverType cover_type() const { return cover_type_; }
  bool singleton_remainder() const { return singleton_remainder_; }
  const EdgeIndex& index() const { return index_; }
  // Edges not claimed by any explicit group (the implicit singletons).
  const std::vector<int>& remainder() const { return remainder_; }

 private:
  std::vector<std::vector<int>> groups_;
  CoverType cover_type_;
  bool singleton_remainder_;
  EdgeIndex index_;
  std::vector<int> remainder_;
};

}  // namespace sot
