#include "sot/submodular.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace sot {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw InputError(msg);
}

std::vector<int> sorted_unique(std::vector<int> v, int bound, const char* what) {
  for (int e : v)
    require(e >= 0 && e < bound, std::string(what) + ": edge id out of range");
  std::sort(v.begin(), v.end());
  require(std::adjacent_find(v.begin(), v.end()) == v.end(),
          std::string(what) + ": repeated edge id");
  return v;
}

// Descending by value, ties by ascending flat index; shared by greedy_vertex
// and the Lovasz extension so both walk the same chain of level sets.
std::vector<int> descending_order(const Eigen::VectorXd& w) {
  std::vector<int> order(w.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (w[a] != w[b]) return w[a] > w[b];
    return a < b;
  });
  return order;
}

}  // namespace

ConcaveFn ConcaveFn::identity() { return ConcaveFn(Kind::identity, 0, 1); }

ConcaveFn ConcaveFn::sqrt() { return ConcaveFn(Kind::sqrt, 0, 0.5); }

ConcaveFn ConcaveFn::threshold_sqrt(double alpha) {
  if (!(std::isfinite(alpha) && alpha > 0))
    throw InputError("threshold_sqrt: alpha must be positive");
  return ConcaveFn(Kind::threshold_sqrt, alpha, 0.5);
}

ConcaveFn ConcaveFn::power(double p) {
  if (!(std::isfinite(p) && p > 0 && p <= 1))
    throw InputError("power: exponent must lie in (0, 1]");
  return ConcaveFn(Kind::power, 0, p);
}

double ConcaveFn::operator()(double x) const {
  if (!(x >= -1e-12)) throw InputError("concave fn: negative argument");
  x = std::max(x, 0.0);
  switch (kind_) {
    case Kind::identity:
      return x;
    case Kind::sqrt:
      return std::sqrt(x);
    case Kind::threshold_sqrt:
      if (x <= alpha_) return x;
      return std::min(x, alpha_ + std::sqrt(x - alpha_));
    case Kind::power:
      return std::pow(x, p_);
  }
  return x;  // unreachable
}

SubmodularCost::SubmodularCost(Kind kind, const EdgeIndex& index) : kind_(kind), index_(index) {}

SubmodularCost SubmodularCost::modular(const EdgeIndex& index, Eigen::VectorXd costs) {
  require(costs.size() == index.count(), "modular: cost vector length mismatch");
  require(costs.allFinite(), "modular: costs must be finite");
  SubmodularCost F(Kind::modular, index);
  F.costs_ = std::move(costs);
  F.support_.resize(index.count());
  std::iota(F.support_.begin(), F.support_.end(), 0);
  F.full_support_ = true;
  F.finalize();
  return F;
}

SubmodularCost SubmodularCost::modular_on(const EdgeIndex& index, std::vector<int> edges,
                                          Eigen::VectorXd values) {
  require(values.size() == static_cast<Eigen::Index>(edges.size()),
          "modular_on: value count must match edge count");
  require(values.allFinite(), "modular_on: values must be finite");
  SubmodularCost F(Kind::modular, index);
  F.costs_ = Eigen::VectorXd::Zero(index.count());
  std::vector<std::pair<int, double>> pairs;
  pairs.reserve(edges.size());
  for (size_t i = 0; i < edges.size(); ++i) pairs.emplace_back(edges[i], values[i]);
  F.support_ = sorted_unique(std::move(edges), index.count(), "modular_on");
  for (auto& [e, v] : pairs) F.costs_[e] = v;
  F.full_support_ = static_cast<int>(F.support_.size()) == index.count();
  F.finalize();
  return F;
}

SubmodularCost SubmodularCost::concave_of_sum(const EdgeIndex& index, std::vector<int> group,
                                              Eigen::VectorXd weights, ConcaveFn g) {
  require(!group.empty(), "concave_of_sum: group must be nonempty");
  require(weights.size() == static_cast<Eigen::Index>(group.size()),
          "concave_of_sum: weight count must match group size");
  require(weights.allFinite() && weights.minCoeff() >= 0,
          "concave_of_sum: weights must be finite and nonnegative");
  // Sort the group by edge id, keeping weights aligned.
  std::vector<int> perm(group.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::sort(perm.begin(), perm.end(), [&](int a, int b) { return group[a] < group[b]; });
  SubmodularCost F(Kind::concave_of_sum, index);
  F.group_.reserve(group.size());
  F.weights_.resize(weights.size());
  for (size_t i = 0; i < perm.size(); ++i) {
    F.group_.push_back(group[perm[i]]);
    F.weights_[static_cast<Eigen::Index>(i)] = weights[perm[i]];
  }
  sorted_unique(F.group_, index.count(), "concave_of_sum");
  F.g_ = std::make_shared<ConcaveFn>(g);
  F.weight_total_ = F.weights_.sum();
  F.support_ = F.group_;
  F.full_support_ = static_cast<int>(F.support_.size()) == index.count();
  F.finalize();
  return F;
}

SubmodularCost SubmodularCost::decomposable(const EdgeIndex& index,
                                            std::vector<SubmodularCost> parts) {
  require(!parts.empty(), "decomposable: needs at least one component");
  for (const auto& p : parts) {
    require(p.index() == index, "decomposable: component edge index mismatch");
    require(p.kind() == Kind::modular || p.kind() == Kind::concave_of_sum,
            "decomposable: components must be modular or concave_of_sum");
  }
  SubmodularCost F(Kind::decomposable, index);
  F.parts_ = std::move(parts);

  std::vector<int> cover(index.count(), 0);
  std::vector<std::vector<std::pair<int, int>>> adj(index.count());
  for (size_t p = 0; p < F.parts_.size(); ++p) {
    const auto& sup = F.parts_[p].support();
    for (size_t pos = 0; pos < sup.size(); ++pos) {
      ++cover[sup[pos]];
      adj[sup[pos]].emplace_back(static_cast<int>(p), static_cast<int>(pos));
    }
  }
  for (int e = 0; e < index.count(); ++e) {
    if (cover[e] > 0) F.support_.push_back(e);
    if (cover[e] > 1) F.parts_overlap_ = true;
  }
  F.full_support_ = static_cast<int>(F.support_.size()) == index.count();
  F.adj_offsets_.assign(index.count() + 1, 0);
  for (int e = 0; e < index.count(); ++e)
    F.adj_offsets_[e + 1] = F.adj_offsets_[e] + static_cast<int>(adj[e].size());
  F.adj_entries_.reserve(F.adj_offsets_.back());
  for (int e = 0; e < index.count(); ++e)
    F.adj_entries_.insert(F.adj_entries_.end(), adj[e].begin(), adj[e].end());
  F.finalize();
  return F;
}

SubmodularCost SubmodularCost::black_box(const EdgeIndex& index,
                                         std::function<double(const std::vector<int>&)> fn) {
  require(static_cast<bool>(fn), "black_box: evaluator must be callable");
  SubmodularCost F(Kind::black_box, index);
  F.fn_ = std::move(fn);
  F.support_.resize(index.count());
  std::iota(F.support_.begin(), F.support_.end(), 0);
  F.full_support_ = true;
  F.finalize();
  return F;
}

SubmodularCost SubmodularCost::from_groups(const GroupStructure& groups,
                                           const Eigen::MatrixXd& cost, const ConcaveFn& g) {
  const EdgeIndex& idx = groups.index();
  require(cost.rows() == idx.n() && cost.cols() == idx.m(), "from_groups: cost shape mismatch");
  Eigen::VectorXd flat = idx.to_flat(cost);
  std::vector<SubmodularCost> parts;
  parts.reserve(groups.groups().size() + 1);
  for (const auto& group : groups.groups()) {
    Eigen::VectorXd w(group.size());
    for (size_t i = 0; i < group.size(); ++i) w[static_cast<Eigen::Index>(i)] = flat[group[i]];
    parts.push_back(concave_of_sum(idx, group, std::move(w), g));
  }
  if (!groups.remainder().empty()) {
    // Implicit singleton groups: g applied to a single edge weight is modular.
    Eigen::VectorXd vals(groups.remainder().size());
    for (size_t i = 0; i < groups.remainder().size(); ++i)
      vals[static_cast<Eigen::Index>(i)] = g(flat[groups.remainder()[i]]);
    parts.push_back(modular_on(idx, groups.remainder(), std::move(vals)));
  }
  return decomposable(idx, std::move(parts));
}

void SubmodularCost::finalize() {
  switch (kind_) {
    case Kind::modular:
      monotone_hint_ = costs_.size() == 0 || costs_.minCoeff() >= 0;
      total_ = costs_.sum();
      break;
    case Kind::concave_of_sum:
      monotone_hint_ = true;  // nonnegative weights, nondecreasing g
      total_ = (*g_)(weight_total_);
      break;
    case Kind::decomposable:
      monotone_hint_ = std::all_of(parts_.begin(), parts_.end(),
                                   [](const SubmodularCost& p) { return p.monotone_hint(); });
      total_ = 0;
      for (const auto& p : parts_) total_ += p.total();
      break;
    case Kind::black_box: {
      monotone_hint_ = false;
      std::vector<int> full(index_.count());
      std::iota(full.begin(), full.end(), 0);
      total_ = fn_(full);
      require(std::isfinite(total_), "black_box: non-finite value on full ground set");
      std::vector<int> empty;
      require(std::abs(fn_(empty)) <= 1e-12, "black_box: F(empty) must be zero");
      break;
    }
  }
}

double SubmodularCost::eval(const std::vector<int>& subset) const {
  std::vector<char> mask(index_.count(), 0);
  for (int e : subset) {
    require(e >= 0 && e < index_.count(), "eval: index out of range");
    require(!mask[e], "eval: repeated index");
    mask[e] = 1;
  }
  if (kind_ == Kind::black_box) {
    std::vector<int> sorted = subset;
    std::sort(sorted.begin(), sorted.end());
    double v = fn_(sorted);
    require(std::isfinite(v), "black_box: non-finite value");
    return v;
  }
  return eval_impl(mask, static_cast<int>(subset.size()));
}

double SubmodularCost::eval_impl(const std::vector<char>& mask, int count) const {
  switch (kind_) {
    case Kind::modular: {
      double s = 0;
      for (int e : support_)
        if (mask[e]) s += costs_[e];
      return s;
    }
    case Kind::concave_of_sum: {
      double s = 0;
      for (size_t i = 0; i < group_.size(); ++i)
        if (mask[group_[i]]) s += weights_[static_cast<Eigen::Index>(i)];
      return (*g_)(s);
    }
    case Kind::decomposable: {
      double s = 0;
      for (const auto& p : parts_) s += p.eval_impl(mask, count);
      return s;
    }
    case Kind::black_box:
      break;  // handled in eval()
  }
  return 0;
}

const Eigen::VectorXd& SubmodularCost::modular_costs() const {
  require(kind_ == Kind::modular, "modular_costs: not a modular cost");
  return costs_;
}

const std::vector<int>& SubmodularCost::group() const {
  require(kind_ == Kind::concave_of_sum, "group: not a concave_of_sum cost");
  return group_;
}

const Eigen::VectorXd& SubmodularCost::group_weights() const {
  require(kind_ == Kind::concave_of_sum, "group_weights: not a concave_of_sum cost");
  return weights_;
}

const ConcaveFn& SubmodularCost::fn() const {
  require(kind_ == Kind::concave_of_sum, "fn: not a concave_of_sum cost");
  return *g_;
}

double SubmodularCost::weight_total() const {
  require(kind_ == Kind::concave_of_sum, "weight_total: not a concave_of_sum cost");
  return weight_total_;
}

const std::vector<SubmodularCost>& SubmodularCost::parts() const {
  require(kind_ == Kind::decomposable, "parts: not a decomposable cost");
  return parts_;
}

bool SubmodularCost::parts_overlap() const {
  require(kind_ == Kind::decomposable, "parts_overlap: not a decomposable cost");
  return parts_overlap_;
}

GainTracker::GainTracker(const SubmodularCost& F) : F_(F) {
  if (F_.kind() == SubmodularCost::Kind::decomposable) part_sums_.assign(F_.parts_.size(), 0.0);
}

void GainTracker::reset() {
  concave_sum_ = 0;
  std::fill(part_sums_.begin(), part_sums_.end(), 0.0);
  members_.clear();
  last_value_ = 0;
}

double GainTracker::add(int e) {
  switch (F_.kind()) {
    case SubmodularCost::Kind::modular:
      return F_.costs_[e];
    case SubmodularCost::Kind::concave_of_sum: {
      auto it = std::lower_bound(F_.group_.begin(), F_.group_.end(), e);
      if (it == F_.group_.end() || *it != e) return 0.0;
      const double w = F_.weights_[it - F_.group_.begin()];
      const double before = (*F_.g_)(concave_sum_);
      concave_sum_ += w;
      return (*F_.g_)(concave_sum_) - before;
    }
    case SubmodularCost::Kind::decomposable: {
      double gain = 0;
      for (int a = F_.adj_offsets_[e]; a < F_.adj_offsets_[e + 1]; ++a) {
        const auto [p, pos] = F_.adj_entries_[a];
        const SubmodularCost& part = F_.parts_[p];
        if (part.kind() == SubmodularCost::Kind::modular) {
          gain += part.costs_[e];
        } else {
          const double w = part.weights_[pos];
          const double before = (*part.g_)(part_sums_[p]);
          part_sums_[p] += w;
          gain += (*part.g_)(part_sums_[p]) - before;
        }
      }
      return gain;
    }
    case SubmodularCost::Kind::black_box: {
      members_.insert(std::upper_bound(members_.begin(), members_.end(), e), e);
      const double v = F_.fn_(members_);
      const double gain = v - last_value_;
      last_value_ = v;
      return gain;
    }
  }
  return 0;
}

double lovasz(const SubmodularCost& F, const Eigen::VectorXd& w) {
  if (w.size() != F.ground_size()) throw InputError("lovasz: vector length mismatch");
  if (!w.allFinite()) throw InputError("lovasz: entries must be finite");
  if (w.minCoeff() < 0) throw InputError("lovasz: entries must be nonnegative");
  const auto order = descending_order(w);
  GainTracker tracker(F);
  double value = 0;
  for (int e : order) value += w[e] * tracker.add(e);
  return value;
}

Eigen::VectorXd greedy_vertex(const SubmodularCost& F, const Eigen::VectorXd& w) {
  if (w.size() != F.ground_size()) throw InputError("greedy_vertex: vector length mismatch");
  if (!w.allFinite()) throw InputError("greedy_vertex: entries must be finite");
  const auto order = descending_order(w);
  GainTracker tracker(F);
  Eigen::VectorXd kappa(w.size());
  for (int e : order) kappa[e] = tracker.add(e);
  return kappa;
}

bool check_submodular(const SubmodularCost& F, int max_ground, double tol) {
  const int N = F.ground_size();
  if (N > max_ground || N > 24)
    throw InputError("check_submodular: ground set too large for exhaustive check");
  const size_t table_size = size_t{1} << N;
  std::vector<double> value(table_size);
  std::vector<int> subset;
  for (size_t mask = 0; mask < table_size; ++mask) {
    subset.clear();
    for (int e = 0; e < N; ++e)
      if (mask >> e & 1) subset.push_back(e);
    value[mask] = F.eval(subset);
    if (!std::isfinite(value[mask])) return false;
  }
  // F(S+u) - F(S) >= F(S+u+v) - F(S+v) for all S and u, v not in S.
  for (size_t mask = 0; mask < table_size; ++mask) {
    for (int u = 0; u < N; ++u) {
      if (mask >> u & 1) continue;
      const size_t with_u = mask | (size_t{1} << u);
      for (int v = u + 1; v < N; ++v) {
        if (mask >> v & 1) continue;
        const size_t with_v = mask | (size_t{1} << v);
        if (value[with_u] - value[mask] < value[with_u | with_v] - value[with_v] - tol)
          return false;
      }
    }
  }
  return true;
}

DualPointCheck check_dual_point(const SubmodularCost& F, const Eigen::VectorXd& kappa,
                                std::uint64_t seed, int samples, double tol) {
  DualPointCheck out;
  if (kappa.size() != F.ground_size()) throw InputError("check_dual_point: length mismatch");
  const int N = F.ground_size();
  out.sum_violation = std::abs(kappa.sum() - F.total());

  std::vector<int> subset;
  auto excess = [&](const std::vector<int>& A) {
    double ks = 0;
    for (int e : A) ks += kappa[e];
    return ks - F.eval(A);
  };
  if (N <= 12) {
    for (size_t mask = 0; mask < (size_t{1} << N); ++mask) {
      subset.clear();
      for (int e = 0; e < N; ++e)
        if (mask >> e & 1) subset.push_back(e);
      out.worst_excess = std::max(out.worst_excess, excess(subset));
      ++out.sets_checked;
    }
  } else {
    std::mt19937_64 rng(seed);
    for (int s = 0; s < samples; ++s) {
      subset.clear();
      for (int e = 0; e < N; ++e)
        if (rng() & 1) subset.push_back(e);
      out.worst_excess = std::max(out.worst_excess, excess(subset));
      ++out.sets_checked;
    }
  }
  if (F.monotone_hint()) out.worst_negative = std::max(0.0, -kappa.minCoeff());
  out.ok = out.sum_violation <= tol && out.worst_excess <= tol && out.worst_negative <= 1e-10;
  return out;
}

}  // namespace sot
