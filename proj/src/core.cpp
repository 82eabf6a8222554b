#include "seqlab/core.hpp"

#include <algorithm>
#include <cmath>

namespace seqlab {

int LabelAlphabet::add(const std::string& label) {
  auto it = index_.find(label);
  if (it != index_.end()) return it->second;
  int id = static_cast<int>(labels_.size());
  labels_.push_back(label);
  index_.emplace(label, id);
  return id;
}

int LabelAlphabet::find(const std::string& label) const {
  auto it = index_.find(label);
  return it == index_.end() ? -1 : it->second;
}

SparseVector SparseVector::from_unsorted(std::vector<Entry> entries) {
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.first < b.first; });
  SparseVector out;
  out.entries_.reserve(entries.size());
  for (const Entry& e : entries) {
    if (!out.entries_.empty() && out.entries_.back().first == e.first) {
      out.entries_.back().second += e.second;
    } else {
      out.entries_.push_back(e);
    }
  }
  std::erase_if(out.entries_, [](const Entry& e) { return e.second == 0.0; });
  return out;
}

double SparseVector::value_at(int index) const {
  auto it = std::lower_bound(
      entries_.begin(), entries_.end(), index,
      [](const Entry& e, int idx) { return e.first < idx; });
  if (it != entries_.end() && it->first == index) return it->second;
  return 0.0;
}

double SparseVector::dot(const WeightVector& w) const {
  double sum = 0.0;
  for (const Entry& e : entries_) {
    if (e.first < 0 || e.first >= static_cast<int>(w.size()))
      throw InvalidInput("sparse index out of range of weight vector");
    sum += e.second * w[e.first];
  }
  return sum;
}

double SparseVector::dot(const SparseVector& other) const {
  double sum = 0.0;
  auto a = entries_.begin(), b = other.entries_.begin();
  while (a != entries_.end() && b != other.entries_.end()) {
    if (a->first < b->first) {
      ++a;
    } else if (b->first < a->first) {
      ++b;
    } else {
      sum += a->second * b->second;
      ++a;
      ++b;
    }
  }
  return sum;
}

double SparseVector::squared_norm() const {
  double sum = 0.0;
  for (const Entry& e : entries_) sum += e.second * e.second;
  return sum;
}

void SparseVector::add_to(WeightVector& w, double scale) const {
  for (const Entry& e : entries_) {
    if (e.first < 0 || e.first >= static_cast<int>(w.size()))
      throw InvalidInput("sparse index out of range of weight vector");
    w[e.first] += scale * e.second;
  }
}

SparseVector SparseVector::minus(const SparseVector& other) const {
  SparseVector out;
  out.entries_.reserve(entries_.size() + other.entries_.size());
  auto a = entries_.begin(), b = other.entries_.begin();
  while (a != entries_.end() || b != other.entries_.end()) {
    if (b == other.entries_.end() ||
        (a != entries_.end() && a->first < b->first)) {
      out.entries_.push_back(*a++);
    } else if (a == entries_.end() || b->first < a->first) {
      out.entries_.emplace_back(b->first, -b->second);
      ++b;
    } else {
      double v = a->second - b->second;
      if (v != 0.0) out.entries_.emplace_back(a->first, v);
      ++a;
      ++b;
    }
  }
  return out;
}

namespace {

void check_pair(const TokenSequence& x, const LabelSequence& y,
                const FeatureSpace& fs) {
  if (x.length() < 1) throw InvalidInput("sequence length must be >= 1");
  if (x.length() != static_cast<int>(y.size()))
    throw InvalidInput("token and label sequence lengths differ");
  for (int label : y)
    if (label < 0 || label >= fs.num_labels)
      throw InvalidInput("label index out of range");
  for (const auto& feats : x.tokens)
    for (int t : feats)
      if (t < 0 || t >= fs.input_dim)
        throw InvalidInput("token feature index out of range");
}

}  // namespace

SparseVector joint_feature(const TokenSequence& x, const LabelSequence& y,
                           const FeatureSpace& fs) {
  check_pair(x, y, fs);
  std::vector<SparseVector::Entry> entries;
  const int L = x.length();
  entries.reserve(static_cast<size_t>(L) * 4);
  for (int j = 0; j + 1 < L; ++j)
    entries.emplace_back(fs.transition_index(y[j], y[j + 1]), 1.0);
  for (int j = 0; j < L; ++j)
    for (int t : x.tokens[j]) entries.emplace_back(fs.emission_index(y[j], t), 1.0);
  return SparseVector::from_unsorted(std::move(entries));
}

SparseVector delta_feature(const LabeledPair& pair, const LabelSequence& y,
                           const FeatureSpace& fs) {
  if (pair.x.length() != static_cast<int>(y.size()))
    throw InvalidInput("candidate labeling length differs from the example");
  return joint_feature(pair.x, pair.y, fs).minus(joint_feature(pair.x, y, fs));
}

double score(const WeightVector& w, const TokenSequence& x,
             const LabelSequence& y, const FeatureSpace& fs) {
  if (static_cast<int>(w.size()) != fs.dim())
    throw InvalidInput("weight vector dimension differs from feature space");
  return joint_feature(x, y, fs).dot(w);
}

int hamming_loss(const LabelSequence& y_true, const LabelSequence& y) {
  if (y_true.size() != y.size())
    throw InvalidInput("hamming_loss requires equal-length sequences");
  int loss = 0;
  for (size_t j = 0; j < y.size(); ++j)
    if (y_true[j] != y[j]) ++loss;
  return loss;
}

}  // namespace seqlab
