#include "sot/projections.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace sot {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw InputError(msg);
}

void validate_marginals(const Eigen::VectorXd& mu, const Eigen::VectorXd& nu) {
  require(mu.size() >= 1 && nu.size() >= 1, "kl_project: empty marginals");
  require(mu.allFinite() && nu.allFinite(), "kl_project: marginals must be finite");
  require(mu.minCoeff() > 0 && nu.minCoeff() > 0, "kl_project: marginals must be positive");
  require(std::abs(mu.sum() - nu.sum()) <= 1e-9, "kl_project: marginals must have equal mass");
}

void validate_sinkhorn_config(const SinkhornConfig& cfg) {
  require(cfg.inner_tol > 0 && cfg.max_inner >= 1 && cfg.underflow_floor > 0,
          "kl_project: invalid Sinkhorn configuration");
}

Eigen::VectorXd row_logsumexp(const Eigen::MatrixXd& L, const Eigen::VectorXd& add_col) {
  Eigen::VectorXd out(L.rows());
  for (Eigen::Index i = 0; i < L.rows(); ++i) {
    const Eigen::ArrayXd row = L.row(i).transpose().array() + add_col.array();
    const double hi = row.maxCoeff();
    out[i] = hi + std::log((row - hi).exp().sum());
  }
  return out;
}

Eigen::VectorXd col_logsumexp(const Eigen::MatrixXd& L, const Eigen::VectorXd& add_row) {
  Eigen::VectorXd out(L.cols());
  for (Eigen::Index j = 0; j < L.cols(); ++j) {
    const Eigen::ArrayXd col = L.col(j).array() + add_row.array();
    const double hi = col.maxCoeff();
    out[j] = hi + std::log((col - hi).exp().sum());
  }
  return out;
}

}  // namespace

KlProjection kl_project_log(const Eigen::MatrixXd& log_w, const Eigen::VectorXd& mu,
                            const Eigen::VectorXd& nu, const SinkhornConfig& cfg) {
  return kl_project_log(log_w, mu, nu, cfg, Eigen::VectorXd::Zero(nu.size()));
}

KlProjection kl_project_log(const Eigen::MatrixXd& log_w, const Eigen::VectorXd& mu,
                            const Eigen::VectorXd& nu, const SinkhornConfig& cfg,
                            const Eigen::VectorXd& log_v0) {
  validate_marginals(mu, nu);
  validate_sinkhorn_config(cfg);
  require(log_w.rows() == mu.size() && log_w.cols() == nu.size(),
          "kl_project: kernel shape mismatch");
  require(!log_w.hasNaN() && log_w.maxCoeff() < std::numeric_limits<double>::infinity(),
          "kl_project: kernel logs must not be NaN or +inf");
  require(log_v0.size() == nu.size() && log_v0.allFinite(),
          "kl_project: initial potential must be finite and match the column count");

  const double log_floor = std::log(cfg.underflow_floor);
  Eigen::MatrixXd L = log_w.cwiseMax(log_floor);

  const Eigen::VectorXd log_mu = mu.array().log();
  const Eigen::VectorXd log_nu = nu.array().log();
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(mu.size());
  Eigen::VectorXd beta = log_v0;

  KlProjection out;
  Eigen::VectorXd row_lse = row_logsumexp(L, beta);
  for (int it = 1; it <= cfg.max_inner; ++it) {
    alpha = log_mu - row_lse;
    beta = log_nu - col_logsumexp(L, alpha);
    row_lse = row_logsumexp(L, beta);
    out.iterations = it;
    out.residual = ((alpha + row_lse).array().exp() - mu.array()).abs().maxCoeff();
    if (out.residual <= cfg.inner_tol) {
      out.converged = true;
      break;
    }
  }

  out.gamma = ((L.colwise() + alpha).rowwise() + beta.transpose()).array().exp();
  out.log_u = alpha;
  out.log_v = beta;
  return out;
}

KlProjection kl_project(const Eigen::MatrixXd& w, const Eigen::VectorXd& mu,
                        const Eigen::VectorXd& nu, const SinkhornConfig& cfg) {
  validate_marginals(mu, nu);
  validate_sinkhorn_config(cfg);
  require(w.rows() == mu.size() && w.cols() == nu.size(), "kl_project: kernel shape mismatch");
  require(w.allFinite(), "kl_project: kernel must be finite");
  require(w.minCoeff() >= 0, "kl_project: kernel entries must be nonnegative");
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    require(w.row(i).maxCoeff() > 0, "kl_project: kernel row " + std::to_string(i) + " is zero");
  for (Eigen::Index j = 0; j < w.cols(); ++j)
    require(w.col(j).maxCoeff() > 0, "kl_project: kernel column " + std::to_string(j) + " is zero");

  const Eigen::MatrixXd K = w.cwiseMax(cfg.underflow_floor);
  if (K.minCoeff() < 1e-100) return kl_project_log(K.array().log(), mu, nu, cfg);

  Eigen::VectorXd u = Eigen::VectorXd::Ones(mu.size());
  Eigen::VectorXd v = Eigen::VectorXd::Ones(nu.size());
  Eigen::VectorXd Kv = K * v;

  KlProjection out;
  for (int it = 1; it <= cfg.max_inner; ++it) {
    u = mu.cwiseQuotient(Kv);
    v = nu.cwiseQuotient(K.transpose() * u);
    if (!u.allFinite() || !v.allFinite())  // kernel too skewed for linear-domain scalings
      return kl_project_log(K.array().log(), mu, nu, cfg);
    Kv = K * v;
    out.iterations = it;
    out.residual = (u.cwiseProduct(Kv) - mu).cwiseAbs().maxCoeff();
    if (out.residual <= cfg.inner_tol) {
      out.converged = true;
      break;
    }
  }

  out.gamma = u.asDiagonal() * K * v.asDiagonal();
  out.log_u = u.array().log();
  out.log_v = v.array().log();
  return out;
}

KlProjection kl_project(const Eigen::MatrixXd& w, const DiscreteMeasure& mu,
                        const DiscreteMeasure& nu, const SinkhornConfig& cfg) {
  return kl_project(w, mu.weights(), nu.weights(), cfg);
}

namespace {

struct SfmItem {
  int id;     // flat edge id (tie-break and reporting)
  double w;   // strictly positive weight
  double d;   // modular term added when the element is selected
};

// Minimize  g(base + sum_{i in S} w_i) - g(base) + sum_{i in S} (d_i - lambda)
// over subsets of `items`.  Every candidate optimal set is a prefix of the
// ratio order r_i = (lambda - d_i) / w_i (descending), so a scan over the
// prefixes -- with the empty set competing -- finds the minimum; taking the
// first best prefix yields the smallest minimizer.  Selected items are moved
// to the front of `items` and their count is returned.
int sfm_prefix(std::vector<SfmItem>& items, double base, double lambda, const ConcaveFn& g) {
  std::sort(items.begin(), items.end(), [&](const SfmItem& a, const SfmItem& b) {
    const double ra = (lambda - a.d) / a.w;
    const double rb = (lambda - b.d) / b.w;
    if (ra != rb) return ra > rb;
    return a.id < b.id;
  });
  const double g_base = g(base);
  double cum_w = 0, cum_lin = 0;
  double best = 0;
  int best_k = 0;
  for (size_t k = 0; k < items.size(); ++k) {
    cum_w += items[k].w;
    cum_lin += items[k].d - lambda;
    const double val = g(base + cum_w) - g_base + cum_lin;
    if (val < best) {
      best = val;
      best_k = static_cast<int>(k) + 1;
    }
  }
  return best_k;
}

// Breakpoint recovery for the parametric problem over one concave_of_sum
// component: y[i] converges to the critical lambda at which item i enters the
// minimizer, which is the min-norm point of the base polytope of the
// z-shifted component.  Recursion halves the lambda bracket; elements inside
// the midpoint minimizer go left, the rest are contracted into the base sum
// and go right.
void dac_breakpoints(std::vector<SfmItem>& items, int lo_idx, int hi_idx, double base,
                     double lambda_lo, double lambda_hi, const ConcaveFn& g,
                     std::vector<double>& y, double cutoff) {
  if (lo_idx >= hi_idx) return;
  if (lambda_hi - lambda_lo <= cutoff) {
    const double mid = 0.5 * (lambda_lo + lambda_hi);
    for (int i = lo_idx; i < hi_idx; ++i) y[items[i].id] = mid;
    return;
  }
  const double mid = 0.5 * (lambda_lo + lambda_hi);
  std::vector<SfmItem> slice(items.begin() + lo_idx, items.begin() + hi_idx);
  const int k = sfm_prefix(slice, base, mid, g);
  std::copy(slice.begin(), slice.end(), items.begin() + lo_idx);
  double selected_w = 0;
  for (int i = 0; i < k; ++i) selected_w += slice[i].w;
  dac_breakpoints(items, lo_idx, lo_idx + k, base, lambda_lo, mid, g, y, cutoff);
  dac_breakpoints(items, lo_idx + k, hi_idx, base + selected_w, mid, lambda_hi, g, y, cutoff);
}

std::vector<SfmItem> concave_items(const SubmodularCost& F, const Eigen::VectorXd& m,
                                   bool require_positive) {
  std::vector<SfmItem> items;
  items.reserve(F.group().size());
  for (size_t i = 0; i < F.group().size(); ++i) {
    const int e = F.group()[i];
    const double w = F.group_weights()[static_cast<Eigen::Index>(i)];
    if (require_positive)
      require(w > 0, "sfm_concave_of_sum: weights must be strictly positive");
    else if (w <= 0)
      continue;  // the cost does not depend on zero-weight members
    items.push_back({e, w, m[e]});
  }
  return items;
}

}  // namespace

std::vector<int> sfm_concave_of_sum(const SubmodularCost& F, const Eigen::VectorXd& m,
                                    double lambda) {
  require(F.kind() == SubmodularCost::Kind::concave_of_sum,
          "sfm_concave_of_sum: cost must be concave_of_sum");
  require(m.size() == F.ground_size(), "sfm_concave_of_sum: vector length mismatch");
  require(m.allFinite() && std::isfinite(lambda), "sfm_concave_of_sum: non-finite input");
  std::vector<SfmItem> items = concave_items(F, m, /*require_positive=*/true);
  const int k = sfm_prefix(items, 0.0, lambda, F.fn());
  std::vector<int> out;
  out.reserve(k);
  for (int i = 0; i < k; ++i) out.push_back(items[i].id);
  std::sort(out.begin(), out.end());
  return out;
}

Eigen::VectorXd project_base_concave_of_sum(const SubmodularCost& F, const Eigen::VectorXd& z) {
  require(F.kind() == SubmodularCost::Kind::concave_of_sum,
          "project_base_concave_of_sum: cost must be concave_of_sum");
  require(z.size() == F.ground_size(), "project_base_concave_of_sum: vector length mismatch");
  require(z.allFinite(), "project_base_concave_of_sum: non-finite input");

  Eigen::VectorXd kappa = Eigen::VectorXd::Zero(z.size());
  // Shifted component: minimize over B of F - <z, .>, so modular terms are -z.
  std::vector<SfmItem> items = concave_items(F, -z, /*require_positive=*/false);
  if (items.empty()) return kappa;  // all weights zero: the polytope is the origin

  const ConcaveFn& g = F.fn();
  double total_w = 0;
  for (const auto& it : items) total_w += it.w;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& it : items) {
    lo = std::min(lo, g(total_w) - g(total_w - it.w) + it.d);  // smallest marginal
    hi = std::max(hi, g(it.w) + it.d);                         // singleton value
  }
  const double pad = 1e-9 * (1 + std::abs(lo) + std::abs(hi));
  lo -= pad;
  hi += pad;

  std::vector<double> y(z.size(), 0.0);
  dac_breakpoints(items, 0, static_cast<int>(items.size()), 0.0, lo, hi, g, y, 1e-12);
  for (const auto& it : items) kappa[it.id] = y[it.id] + z[it.id];
  return kappa;
}

namespace {

// Projection of z onto the base polytope of a single decomposable component.
Eigen::VectorXd project_part(const SubmodularCost& part, const Eigen::VectorXd& z) {
  if (part.kind() == SubmodularCost::Kind::modular) return part.modular_costs();
  return project_base_concave_of_sum(part, z);
}

}  // namespace

Eigen::VectorXd project_base_decomposable(const SubmodularCost& F, const Eigen::VectorXd& z) {
  require(F.kind() == SubmodularCost::Kind::decomposable,
          "project_base_decomposable: cost must be decomposable");
  require(!F.parts_overlap(),
          "project_base_decomposable: overlapping supports; use project_base_overlapping");
  require(z.size() == F.ground_size(), "project_base_decomposable: vector length mismatch");
  require(z.allFinite(), "project_base_decomposable: non-finite input");
  Eigen::VectorXd kappa = Eigen::VectorXd::Zero(z.size());
  for (const auto& part : F.parts()) kappa += project_part(part, z);
  return kappa;
}

OverlapProjection project_base_overlapping(const SubmodularCost& F, const Eigen::VectorXd& z,
                                           double outer_tol, int max_sweeps) {
  require(F.kind() == SubmodularCost::Kind::decomposable,
          "project_base_overlapping: cost must be decomposable");
  require(z.size() == F.ground_size(), "project_base_overlapping: vector length mismatch");
  require(z.allFinite(), "project_base_overlapping: non-finite input");
  require(outer_tol > 0 && max_sweeps >= 1, "project_base_overlapping: invalid configuration");

  const auto& parts = F.parts();
  const int P = static_cast<int>(parts.size());

  Eigen::VectorXd cover = Eigen::VectorXd::Zero(z.size());
  for (const auto& part : parts)
    for (int e : part.support()) cover[e] += 1;

  // Split z across covering components for the initial per-part targets; the
  // running sum of per-part points is feasible (Minkowski sum) from the start.
  std::vector<Eigen::VectorXd> block(P);
  Eigen::VectorXd total = Eigen::VectorXd::Zero(z.size());
  Eigen::VectorXd target = Eigen::VectorXd::Zero(z.size());
  for (int p = 0; p < P; ++p) {
    for (int e : parts[p].support()) target[e] = z[e] / cover[e];
    block[p] = project_part(parts[p], target);
    for (int e : parts[p].support()) target[e] = 0;
    total += block[p];
  }

  OverlapProjection out;
  if (P == 1 || !F.parts_overlap()) {
    // Disjoint supports: one correction sweep lands on the exact projection.
  }
  Eigen::VectorXd prev = total;
  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    for (int p = 0; p < P; ++p) {
      // Project the residual the other blocks leave on this support.
      for (int e : parts[p].support()) target[e] = z[e] - (total[e] - block[p][e]);
      Eigen::VectorXd updated = project_part(parts[p], target);
      for (int e : parts[p].support()) target[e] = 0;
      total += updated - block[p];
      block[p] = std::move(updated);
    }
    out.sweeps = sweep;
    out.last_change = (total - prev).cwiseAbs().maxCoeff();
    prev = total;
    if (out.last_change <= outer_tol) {
      out.converged = true;
      break;
    }
  }
  out.kappa = std::move(total);
  return out;
}

namespace {

// Affine minimizer of the span of the columns of S subject to coefficients
// summing to one: bordered normal equations solved with a rank-revealing
// decomposition so nearly dependent corrals stay stable.
bool affine_minimizer(const Eigen::MatrixXd& S, Eigen::VectorXd& coeffs) {
  const Eigen::Index k = S.cols();
  Eigen::MatrixXd sys(k + 1, k + 1);
  sys.topLeftCorner(k, k) = S.transpose() * S;
  sys.topRightCorner(k, 1).setOnes();
  sys.bottomLeftCorner(1, k).setOnes();
  sys(k, k) = 0;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k + 1);
  rhs[k] = 1;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(sys);
  cod.setThreshold(1e-12);
  Eigen::VectorXd sol = cod.solve(rhs);
  if (!sol.allFinite()) return false;
  coeffs = sol.head(k);
  return true;
}

void drop_columns(Eigen::MatrixXd& S, Eigen::VectorXd& lam, double threshold) {
  Eigen::Index keep = 0;
  for (Eigen::Index i = 0; i < S.cols(); ++i) {
    if (lam[i] > threshold || (keep == 0 && i == S.cols() - 1)) {
      S.col(keep) = S.col(i);
      lam[keep] = lam[i];
      ++keep;
    }
  }
  S.conservativeResize(Eigen::NoChange, keep);
  lam.conservativeResize(keep);
  const double sum = lam.sum();
  if (sum > 0) lam /= sum;
}

}  // namespace

MnpResult mnp_fujishige_wolfe(const SubmodularCost& F, double tol, const Eigen::VectorXd& shift) {
  require(tol > 0, "mnp: tolerance must be positive");
  require(shift.size() == F.ground_size(), "mnp: shift length mismatch");
  const int N = F.ground_size();

  auto lmo = [&](const Eigen::VectorXd& dir) -> Eigen::VectorXd {
    return greedy_vertex(F, -dir) - shift;
  };

  Eigen::VectorXd x = lmo(Eigen::VectorXd::Zero(N));
  Eigen::MatrixXd S(N, 1);
  S.col(0) = x;
  Eigen::VectorXd lam = Eigen::VectorXd::Ones(1);

  MnpResult out;
  const int major_cap = 200 + 20 * N;
  for (int major = 1; major <= major_cap; ++major) {
    out.major_iterations = major;
    const Eigen::VectorXd q = lmo(x);
    out.gap = x.squaredNorm() - x.dot(q);
    if (out.gap <= tol) {
      out.certified = true;
      break;
    }
    // A vertex already in the corral cannot improve the affine fit; stop
    // rather than cycle (roundoff stall near the optimum).
    bool duplicate = false;
    for (Eigen::Index c = 0; c < S.cols() && !duplicate; ++c)
      duplicate = (S.col(c) - q).cwiseAbs().maxCoeff() < 1e-12;
    if (duplicate) break;

    S.conservativeResize(Eigen::NoChange, S.cols() + 1);
    S.col(S.cols() - 1) = q;
    lam.conservativeResize(lam.size() + 1);
    lam[lam.size() - 1] = 0;

    for (int minor = 0; minor < 1000; ++minor) {
      Eigen::VectorXd coeffs;
      if (!affine_minimizer(S, coeffs)) {
        out.point = x;
        return out;  // numerically unsalvageable corral; report best iterate
      }
      if (coeffs.minCoeff() >= -1e-12) {
        lam = coeffs.cwiseMax(0.0);
        x = S * lam;
        drop_columns(S, lam, 1e-12);
        break;
      }
      // Step to the boundary of the simplex toward the affine minimizer.
      double theta = 1.0;
      for (Eigen::Index i = 0; i < coeffs.size(); ++i)
        if (coeffs[i] < 0) theta = std::min(theta, lam[i] / (lam[i] - coeffs[i]));
      lam = lam + theta * (coeffs - lam);
      x = S * lam;
      drop_columns(S, lam, 1e-12);
    }
  }
  out.point = x;
  return out;
}

MnpResult mnp_fujishige_wolfe(const SubmodularCost& F, double tol) {
  return mnp_fujishige_wolfe(F, tol, Eigen::VectorXd::Zero(F.ground_size()));
}

Eigen::VectorXd project_base(const SubmodularCost& F, const Eigen::VectorXd& z,
                             const BaseProjectionConfig& cfg) {
  switch (F.kind()) {
    case SubmodularCost::Kind::modular:
      return F.modular_costs();  // the base polytope is a single point
    case SubmodularCost::Kind::concave_of_sum:
      return project_base_concave_of_sum(F, z);
    case SubmodularCost::Kind::decomposable:
      if (F.parts_overlap())
        return project_base_overlapping(F, z, cfg.overlap_outer_tol, cfg.overlap_max_sweeps).kappa;
      return project_base_decomposable(F, z);
    case SubmodularCost::Kind::black_box: {
      MnpResult mnp = mnp_fujishige_wolfe(F, cfg.mnp_tol, z);
      return mnp.point + z;
    }
  }
  throw InputError("project_base: unknown cost kind");
}

}  // namespace sot
