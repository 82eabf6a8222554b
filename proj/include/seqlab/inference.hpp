#ifndef SEQLAB_INFERENCE_HPP
#define SEQLAB_INFERENCE_HPP

#include <cstdint>
#include <vector>

#include "seqlab/core.hpp"

namespace seqlab {

// Node/edge posteriors and the log partition function of one sequence.
struct Marginals {
  int length = 0;
  int num_labels = 0;
  std::vector<double> node;  // length x k, row-major: p(y^j = c)
  std::vector<double> edge;  // (length-1) x k x k: p(y^j = a, y^{j+1} = b)
  double log_z = 0.0;           // from the forward recursion
  double log_z_backward = 0.0;  // same quantity from the backward recursion

  double node_at(int j, int c) const { return node[j * num_labels + c]; }
  double edge_at(int j, int a, int b) const {
    return edge[(j * num_labels + a) * num_labels + b];
  }
};

struct ScoredLabeling {
  LabelSequence labels;
  double value = 0.0;
};

// argmax_y w^T f(x,y). Ties resolve to the lexicographically smallest
// label-index sequence.
LabelSequence viterbi_decode(const WeightVector& w, const TokenSequence& x,
                             const FeatureSpace& fs);

// argmax_y [w^T f(x_i,y) + hamming(y_i, y)] and the attained value.
// Hamming decomposes per node, so this is Viterbi with +1 node bonuses.
ScoredLabeling loss_augmented_viterbi(const WeightVector& w,
                                      const LabeledPair& pair,
                                      const FeatureSpace& fs);

// The n highest-scoring labelings, best first (fewer when k^L < n).
// Deterministic but not guaranteed lexicographic within tied scores.
std::vector<ScoredLabeling> nbest_decode(const WeightVector& w,
                                         const TokenSequence& x,
                                         const FeatureSpace& fs, int n);

// Log-space forward-backward: marginals plus log Z_x. weight_scale lets a
// caller that stores w as scale * base read through without materializing.
Marginals forward_backward(const WeightVector& w, const TokenSequence& x,
                           const FeatureSpace& fs, double weight_scale = 1.0);

// log p(y_i | x_i; w) = w^T f(x_i,y_i) - log Z_x, always <= 0.
double sequence_log_likelihood(const WeightVector& w, const LabeledPair& pair,
                               const FeatureSpace& fs);

// E_{p(y|x;w)} f(x,y), assembled from the marginals.
SparseVector expected_feature(const WeightVector& w, const TokenSequence& x,
                              const FeatureSpace& fs, double weight_scale = 1.0);

// ---- Exhaustive-enumeration oracles (test-scale only) ----
// Refuse when k^L exceeds max_labelings. Tie-break identical to the DPs.

struct BruteForceOptions {
  std::int64_t max_labelings = 1000000;
};

ScoredLabeling brute_force_argmax(const WeightVector& w, const TokenSequence& x,
                                  const FeatureSpace& fs,
                                  const BruteForceOptions& opts = {});

ScoredLabeling brute_force_loss_augmented_argmax(
    const WeightVector& w, const LabeledPair& pair, const FeatureSpace& fs,
    const BruteForceOptions& opts = {});

double brute_force_log_z(const WeightVector& w, const TokenSequence& x,
                         const FeatureSpace& fs,
                         const BruteForceOptions& opts = {});

SparseVector brute_force_expected_feature(const WeightVector& w,
                                          const TokenSequence& x,
                                          const FeatureSpace& fs,
                                          const BruteForceOptions& opts = {});

}  // namespace seqlab

#endif  // SEQLAB_INFERENCE_HPP
