#include "sot/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

// Transportation network simplex on the complete bipartite graph plus an
// artificial root.  Every source and target starts attached to the root by a
// big-M arc, which makes the initial spanning tree strongly feasible; the
// leaving arc is then always the last blocking arc met when walking the pivot
// cycle from the apex in the direction of the entering arc, which keeps the
// tree strongly feasible and rules out cycling (Cunningham's rule).

namespace sot {
namespace {

struct Tree {
  // Per non-root node: the arc joining it to its parent.
  std::vector<int> parent;
  std::vector<int> dir;  // +1: arc points node -> parent, -1: parent -> node
  std::vector<double> flow;
  std::vector<double> cost;
  std::vector<int> depth;
  std::vector<double> pot;
};

void recompute_potentials(Tree& T, int root) {
  const int V = static_cast<int>(T.parent.size());
  std::vector<std::vector<int>> children(V);
  for (int x = 0; x < V; ++x) {
    if (x != root) children[T.parent[x]].push_back(x);
  }
  T.depth[root] = 0;
  T.pot[root] = 0;
  std::vector<int> stack{root};
  while (!stack.empty()) {
    const int p = stack.back();
    stack.pop_back();
    for (int x : children[p]) {
      T.depth[x] = T.depth[p] + 1;
      // Tree arcs price to zero: arc x->p gives pot[x] = cost + pot[p],
      // arc p->x gives pot[x] = pot[p] - cost.
      T.pot[x] = (T.dir[x] == +1) ? T.cost[x] + T.pot[p] : T.pot[p] - T.cost[x];
      stack.push_back(x);
    }
  }
}

}  // namespace

LpResult exact_ot_lp(const Eigen::MatrixXd& C, const Eigen::VectorXd& mu,
                     const Eigen::VectorXd& nu) {
  const int n = static_cast<int>(mu.size());
  const int m = static_cast<int>(nu.size());
  if (n == 0 || m == 0) throw InputError("exact_ot_lp: empty marginal");
  if (C.rows() != n || C.cols() != m)
    throw InputError("exact_ot_lp: cost matrix shape does not match the marginals");
  if (!C.allFinite()) throw InputError("exact_ot_lp: cost matrix has non-finite entries");
  for (int i = 0; i < n; ++i)
    if (!(mu[i] > 0)) throw InputError("exact_ot_lp: source weights must be positive");
  for (int j = 0; j < m; ++j)
    if (!(nu[j] > 0)) throw InputError("exact_ot_lp: target weights must be positive");
  if (std::abs(mu.sum() - nu.sum()) > 1e-9)
    throw InputError("exact_ot_lp: marginals must have equal total mass");
  // Remove the tiny mass imbalance so the flow balance is exact.
  Eigen::VectorXd nub = nu * (mu.sum() / nu.sum());

  const int root = n + m;
  const int V = root + 1;
  const double cmax = C.cwiseAbs().maxCoeff();
  const double bigM = 1.0 + cmax * static_cast<double>(n + m);
  const double enter_eps = 1e-11 * (1.0 + cmax);

  Tree T;
  T.parent.assign(V, -1);
  T.dir.assign(V, 0);
  T.flow.assign(V, 0);
  T.cost.assign(V, 0);
  T.depth.assign(V, 0);
  T.pot.assign(V, 0);
  for (int i = 0; i < n; ++i) {
    T.parent[i] = root;
    T.dir[i] = +1;  // source -> root carries the supply
    T.flow[i] = mu[i];
    T.cost[i] = bigM;
  }
  for (int j = 0; j < m; ++j) {
    T.parent[n + j] = root;
    T.dir[n + j] = -1;  // root -> target delivers the demand
    T.flow[n + j] = nub[j];
    T.cost[n + j] = bigM;
  }
  recompute_potentials(T, root);

  const int pivot_cap = 1000 + 200 * (n + m);
  int pivots = 0;
  std::vector<int> up_u, up_w;  // nodes whose parent arc lies on the cycle
  for (; pivots < pivot_cap; ++pivots) {
    // Entering arc: most negative reduced cost among real arcs, first by
    // row-major order on ties.
    int ei = -1, ej = -1;
    double best = -enter_eps;
    for (int i = 0; i < n; ++i) {
      const double pi = T.pot[i];
      for (int j = 0; j < m; ++j) {
        const double r = C(i, j) - pi + T.pot[n + j];
        if (r < best) {
          best = r;
          ei = i;
          ej = j;
        }
      }
    }
    if (ei < 0) break;  // optimal

    const int u = ei, w = n + ej;
    // Collect the tree paths from both endpoints up to their lowest common
    // ancestor (the apex of the pivot cycle).
    up_u.clear();
    up_w.clear();
    {
      int a = u, b = w;
      while (T.depth[a] > T.depth[b]) {
        up_u.push_back(a);
        a = T.parent[a];
      }
      while (T.depth[b] > T.depth[a]) {
        up_w.push_back(b);
        b = T.parent[b];
      }
      while (a != b) {
        up_u.push_back(a);
        a = T.parent[a];
        up_w.push_back(b);
        b = T.parent[b];
      }
    }

    // Walk the cycle from the apex: down to u, across the entering arc,
    // back up to w.  Arcs traversed against their orientation lose flow; the
    // last arc attaining the minimum residual leaves (ties resolved toward
    // the end of the walk keep the tree strongly feasible).
    double theta = std::numeric_limits<double>::infinity();
    int leave = -1;  // node whose parent arc leaves the basis
    auto consider = [&](int node, int sign) {
      if (sign < 0 && T.flow[node] <= theta) {
        theta = T.flow[node];
        leave = node;
      }
    };
    for (auto it = up_u.rbegin(); it != up_u.rend(); ++it) consider(*it, -T.dir[*it]);
    for (int node : up_w) consider(node, +T.dir[node]);

    if (leave < 0)
      throw InputError("exact_ot_lp: unbounded pivot (cost matrix not usable)");

    for (int node : up_u) T.flow[node] -= static_cast<double>(T.dir[node]) * theta;
    for (int node : up_w) T.flow[node] += static_cast<double>(T.dir[node]) * theta;

    // Re-root the subtree cut off by the leaving arc onto the entering arc.
    const bool u_side = std::find(up_u.begin(), up_u.end(), leave) != up_u.end();
    const int q = u_side ? u : w;  // endpoint of the entering arc inside the cut subtree
    std::vector<int> chain;
    for (int x = q; x != leave; x = T.parent[x]) chain.push_back(x);
    chain.push_back(leave);
    std::vector<int> old_parent(chain.size());
    std::vector<int> old_dir(chain.size());
    std::vector<double> old_flow(chain.size()), old_cost(chain.size());
    for (size_t k = 0; k < chain.size(); ++k) {
      old_parent[k] = T.parent[chain[k]];
      old_dir[k] = T.dir[chain[k]];
      old_flow[k] = T.flow[chain[k]];
      old_cost[k] = T.cost[chain[k]];
    }
    T.parent[q] = u_side ? w : u;
    T.dir[q] = u_side ? +1 : -1;  // entering arc points source -> target
    T.flow[q] = theta;
    T.cost[q] = C(ei, ej);
    for (size_t k = 1; k < chain.size(); ++k) {
      // The old parent arc of chain[k-1] now hangs below chain[k].
      T.parent[chain[k]] = chain[k - 1];
      T.dir[chain[k]] = -old_dir[k - 1];
      T.flow[chain[k]] = old_flow[k - 1];
      T.cost[chain[k]] = old_cost[k - 1];
    }
    recompute_potentials(T, root);
  }

  if (pivots >= pivot_cap)
    throw InputError("exact_ot_lp: pivot limit exceeded; the instance looks degenerate");

  // Only artificial arcs touch the root; at optimality they carry no flow.
  for (int x = 0; x < root; ++x) {
    if (T.parent[x] == root && T.flow[x] > 1e-9 * (1.0 + mu.sum()))
      throw InputError("exact_ot_lp: artificial arc kept flow; marginals are inconsistent");
  }

  LpResult out;
  out.plan = Eigen::MatrixXd::Zero(n, m);
  for (int x = 0; x < root; ++x) {
    const int p = T.parent[x];
    if (p == root) continue;
    const int i = (x < n) ? x : p;
    const int j = (x < n) ? p - n : x - n;
    out.plan(i, j) += T.flow[x];
  }
  out.value = (out.plan.array() * C.array()).sum();
  out.pivots = pivots;
  return out;
}

LpResult exact_ot_lp(const CostMatrix& C, const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  return exact_ot_lp(C.entries(), mu.weights(), nu.weights());
}

}  // namespace sot
