#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "sot/measures.hpp"
#include "sot/solvers.hpp"
#include "sot/submodular.hpp"

namespace sot {

enum class Shape { gaussian_blobs, two_moons };

// Seeded synthetic cluster pairs.  The target cloud reuses the source layout,
// translated by `shift`, with the identities of the two closest clusters
// exchanged when `swap_pair` is set — the mismatch that makes plain linear
// matching cross class boundaries.
struct SyntheticSpec {
  std::uint64_t seed = 0;
  int clusters = 2;
  int per_cluster = 10;
  int dim = 2;
  double spread = 0.1;      // within-cluster standard deviation
  double separation = 4.0;  // distance between neighboring cluster anchors
  Eigen::VectorXd shift;    // empty means no shift
  Shape shape = Shape::gaussian_blobs;
  bool swap_pair = true;
};

struct SyntheticPair {
  DiscreteMeasure src;
  DiscreteMeasure tgt;
};

SyntheticPair generate(const SyntheticSpec& spec);

// One group per (source class, target point): edges from all points of one
// class into a single target sample.  The labeled overload groups by class
// pair instead.  Both are partitions of the edge set.
GroupStructure class_groups(const std::vector<int>& src_labels, int n_targets);
GroupStructure class_groups(const std::vector<int>& src_labels,
                            const std::vector<int>& tgt_labels);

// Sliding n-gram windows on both index sequences; one group per window pair.
// Windows overlap for n >= 2, so the result is a cover.
GroupStructure ngram_groups(int src_len, int tgt_len, int n);

// One group per (source point, target point): all edges between their
// k-nearest neighborhoods (each point includes itself).  Overlapping cover.
GroupStructure knn_groups(const Eigen::MatrixXd& src_points, const Eigen::MatrixXd& tgt_points,
                          int k_neighbors);

struct SotDistance {
  double value = 0;
  double gap = 0;
  bool certified = false;
  bool hypothesis_ok = true;  // monotone, F(empty)=0, singleton costs positive iff C positive
  int iterations = 0;
};

// Structured transport distance with its optimality certificate.  When the
// cost fails the semi-metric hypotheses the value is still computed and the
// flag is lowered.
SotDistance sot_distance(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                         const SubmodularCost& F, const Eigen::MatrixXd& C,
                         const SolverConfig& cfg);

// Row-normalized image of the source points under a coupling:
// x_i -> sum_j gamma_ij y_j / sum_j gamma_ij.
Eigen::MatrixXd barycentric_map(const Eigen::MatrixXd& gamma, const Eigen::MatrixXd& tgt_points);

struct AdaptResult {
  double accuracy = 0;
  Eigen::MatrixXd mapped;  // transported source points
  SolveResult result;
};

// Domain adaptation pipeline: solve structured transport, transport the
// source samples, classify the test set by the nearest transported sample
// (distance ties broken toward the lowest label id).
AdaptResult adapt_and_score(const DiscreteMeasure& src, const DiscreteMeasure& tgt,
                            const DiscreteMeasure& test, const SubmodularCost& F,
                            const Eigen::MatrixXd& C, const SolverConfig& cfg);

// Fraction of coupling mass on edges whose endpoints share a label.
double in_class_fraction(const Eigen::MatrixXd& gamma, const std::vector<int>& src_labels,
                         const std::vector<int>& tgt_labels);

}  // namespace sot
