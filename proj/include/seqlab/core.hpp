#ifndef SEQLAB_CORE_HPP
#define SEQLAB_CORE_HPP

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "seqlab/errors.hpp"

namespace seqlab {

// Dense parameter vector of dimension k^2 + d*k.
using WeightVector = std::vector<double>;

// Label sequence: one label index in [0,k) per token.
using LabelSequence = std::vector<int>;

// The fixed feature-index layout shared by every trainer:
//   [0, k^2)        transition counts, (a,b) at a*k + b
//   [k^2, k^2+d*k)  emission block of label c at [k^2 + c*d, k^2 + (c+1)*d)
struct FeatureSpace {
  int num_labels = 0;  // k
  int input_dim = 0;   // d

  int dim() const { return num_labels * num_labels + num_labels * input_dim; }
  int transition_index(int a, int b) const { return a * num_labels + b; }
  int emission_index(int c, int t) const {
    return num_labels * num_labels + c * input_dim + t;
  }
};

// The k output labels in a stable index order.
class LabelAlphabet {
 public:
  // Returns the index of the label, adding it if unseen.
  int add(const std::string& label);
  // Index of the label, or -1.
  int find(const std::string& label) const;
  int size() const { return static_cast<int>(labels_.size()); }
  const std::string& name(int index) const { return labels_.at(index); }
  const std::vector<std::string>& labels() const { return labels_; }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, int> index_;
};

// One input sequence: a sparse binary feature-index set per token.
// Feature ids are deduplicated and kept sorted.
struct TokenSequence {
  std::vector<std::vector<int>> tokens;

  int length() const { return static_cast<int>(tokens.size()); }
};

// One training pair (x_i, y_i); lengths must match.
struct LabeledPair {
  TokenSequence x;
  LabelSequence y;
};

// Sparse vector over [0, N): sorted (index, value) entries, no stored zeros.
class SparseVector {
 public:
  using Entry = std::pair<int, double>;

  SparseVector() = default;

  // Sorts, merges duplicate indices, drops exact zeros.
  static SparseVector from_unsorted(std::vector<Entry> entries);

  const std::vector<Entry>& entries() const { return entries_; }
  int nnz() const { return static_cast<int>(entries_.size()); }
  bool empty() const { return entries_.empty(); }

  double value_at(int index) const;
  double dot(const WeightVector& w) const;
  double dot(const SparseVector& other) const;
  double squared_norm() const;

  // w += scale * this
  void add_to(WeightVector& w, double scale) const;
  // this - other, exact entrywise, zeros dropped
  SparseVector minus(const SparseVector& other) const;

  bool operator==(const SparseVector&) const = default;

 private:
  std::vector<Entry> entries_;
};

// Joint feature map f(x,y): transition bigram counts plus per-label
// aggregated token features.
SparseVector joint_feature(const TokenSequence& x, const LabelSequence& y,
                           const FeatureSpace& fs);

// f(x_i, y_i) - f(x_i, y)
SparseVector delta_feature(const LabeledPair& pair, const LabelSequence& y,
                           const FeatureSpace& fs);

// w^T f(x,y)
double score(const WeightVector& w, const TokenSequence& x,
             const LabelSequence& y, const FeatureSpace& fs);

// Number of positions where the two sequences disagree.
int hamming_loss(const LabelSequence& y_true, const LabelSequence& y);

}  // namespace seqlab

#endif  // SEQLAB_CORE_HPP
