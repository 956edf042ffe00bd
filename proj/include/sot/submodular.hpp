#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <vector>

#include "sot/measures.hpp"

namespace sot {

// Nondecreasing concave scalar function with g(0) = 0, applied to group cost
// sums.  threshold_sqrt grows linearly up to alpha and like a square root
// beyond it; the min keeps the slope from jumping up at the threshold, so the
// function stays concave on all of [0, inf).
class ConcaveFn {
 public:
  enum class Kind { identity, sqrt, threshold_sqrt, power };

  static ConcaveFn identity();
  static ConcaveFn sqrt();
  static ConcaveFn threshold_sqrt(double alpha);  // alpha > 0
  static ConcaveFn power(double p);               // 0 < p <= 1

  double operator()(double x) const;
  Kind kind() const { return kind_; }
  double alpha() const { return alpha_; }
  double exponent() const { return p_; }

 private:
  ConcaveFn(Kind kind, double alpha, double p) : kind_(kind), alpha_(alpha), p_(p) {}
  Kind kind_;
  double alpha_;
  double p_;
};

// Normalized submodular set function over the flat edge ground set of an
// n x m transport problem.  Four variants:
//   modular          F(S) = sum of per-edge costs
//   concave_of_sum   F(S) = g(total weight of S inside one edge group)
//   decomposable     F(S) = sum of component functions
//   black_box        arbitrary user evaluator (slow paths only)
// The support is the set of edges the value actually depends on; coordinates
// off the support are modular with value zero.
class SubmodularCost {
 public:
  enum class Kind { modular, concave_of_sum, decomposable, black_box };

  static SubmodularCost modular(const EdgeIndex& index, Eigen::VectorXd costs);
  // Modular cost restricted to an explicit support (used as a component of a
  // decomposable function, e.g. for singleton-completed remainder edges).
  static SubmodularCost modular_on(const EdgeIndex& index, std::vector<int> edges,
                                   Eigen::VectorXd values);
  static SubmodularCost concave_of_sum(const EdgeIndex& index, std::vector<int> group,
                                       Eigen::VectorXd weights, ConcaveFn g);
  static SubmodularCost decomposable(const EdgeIndex& index, std::vector<SubmodularCost> parts);
  static SubmodularCost black_box(const EdgeIndex& index,
                                  std::function<double(const std::vector<int>&)> fn);

  // Builds the standard structured cost: one concave_of_sum component per
  // group with weights taken from the cost matrix, plus a modular component
  // g(C_e) for implicit singleton remainder edges.
  static SubmodularCost from_groups(const GroupStructure& groups, const Eigen::MatrixXd& cost,
                                    const ConcaveFn& g);

  Kind kind() const { return kind_; }
  const EdgeIndex& index() const { return index_; }
  int ground_size() const { return index_.count(); }

  // F(S).  Indices may come in any order; out-of-range or repeated indices
  // are input errors.  F(empty) == 0 for every variant.
  double eval(const std::vector<int>& subset) const;
  double total() const { return total_; }  // F of the full ground set

  // Structurally monotone (nonnegative weights/costs and nondecreasing g).
  // Black boxes are never assumed monotone.
  bool monotone_hint() const { return monotone_hint_; }

  // Sorted edge ids the value depends on; full_support() means every edge.
  const std::vector<int>& support() const { return support_; }
  bool full_support() const { return full_support_; }

  // modular access
  const Eigen::VectorXd& modular_costs() const;  // full length, zero off support

  // concave_of_sum access
  const std::vector<int>& group() const;          // sorted edge ids
  const Eigen::VectorXd& group_weights() const;   // aligned with group()
  const ConcaveFn& fn() const;
  double weight_total() const;

  // decomposable access
  const std::vector<SubmodularCost>& parts() const;
  bool parts_overlap() const;

 private:
  SubmodularCost(Kind kind, const EdgeIndex& index);

  double eval_impl(const std::vector<char>& mask, int count) const;
  void finalize();

  Kind kind_;
  EdgeIndex index_;
  double total_ = 0;
  bool monotone_hint_ = false;
  std::vector<int> support_;
  bool full_support_ = false;

  // modular
  Eigen::VectorXd costs_;
  // concave_of_sum
  std::vector<int> group_;
  Eigen::VectorXd weights_;
  std::shared_ptr<ConcaveFn> g_;
  double weight_total_ = 0;
  // decomposable
  std::vector<SubmodularCost> parts_;
  bool parts_overlap_ = false;
  // edge -> (part, position inside that part's group), CSR layout
  std::vector<int> adj_offsets_;
  std::vector<std::pair<int, int>> adj_entries_;
  // black box
  std::function<double(const std::vector<int>&)> fn_;

  friend class GainTracker;
};

// Incremental marginal-gain evaluator: add(e) returns F(S + e) - F(S) for the
// running set S.  This is what makes greedy and the Lovasz extension cost
// O(N log N) for structured costs instead of O(N) full evaluations.
class GainTracker {
 public:
  explicit GainTracker(const SubmodularCost& F);
  double add(int e);
  void reset();

 private:
  const SubmodularCost& F_;
  double concave_sum_ = 0;                 // concave_of_sum running weight
  std::vector<double> part_sums_;          // per concave component
  std::vector<int> members_;               // black-box running subset
  double last_value_ = 0;                  // black-box F(S)
};

// Value of the Lovasz extension of F at w >= 0.
double lovasz(const SubmodularCost& F, const Eigen::VectorXd& w);

// Base-polytope vertex produced by sorting w in descending order (ties broken
// by ascending flat edge index) and taking marginal gains along that order.
// This maximizes <kappa, w> over the base polytope of F.
Eigen::VectorXd greedy_vertex(const SubmodularCost& F, const Eigen::VectorXd& w);

// Exhaustive diminishing-returns check; refuses ground sets larger than
// max_ground (the table has 2^N entries).
bool check_submodular(const SubmodularCost& F, int max_ground = 12, double tol = 1e-10);

// Point of (or near) the base polytope, tagged with how it was obtained.
struct DualPoint {
  enum class Source { greedy, projection, initialization };
  Eigen::VectorXd kappa;
  Source source = Source::initialization;
};

struct DualPointCheck {
  bool ok = false;
  double sum_violation = 0;     // |kappa(V) - F(V)|
  double worst_excess = 0;      // max over checked A of kappa(A) - F(A)
  double worst_negative = 0;    // most negative entry (monotone F only)
  int sets_checked = 0;
};

// Verifies kappa(V) == F(V) and kappa(A) <= F(A) on sampled subsets
// (exhaustive when the ground set is small); for structurally monotone F the
// entries must also be nonnegative up to roundoff.
DualPointCheck check_dual_point(const SubmodularCost& F, const Eigen::VectorXd& kappa,
                                std::uint64_t seed = 0, int samples = 200, double tol = 1e-8);

}  // namespace sot
