#include "seqlab/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace seqlab {

namespace {

// Per-sequence score tables: trans(a,b) is position-independent, node(j,c)
// aggregates the token features under label c.
struct ScoreTables {
  int L = 0, k = 0;
  std::vector<double> trans;  // k x k
  std::vector<double> node;   // L x k

  double t(int a, int b) const { return trans[a * k + b]; }
  double n(int j, int c) const { return node[j * k + c]; }
};

ScoreTables build_tables(const WeightVector& w, const TokenSequence& x,
                         const FeatureSpace& fs, double weight_scale = 1.0) {
  if (static_cast<int>(w.size()) != fs.dim())
    throw InvalidInput("weight vector dimension differs from feature space");
  if (x.length() < 1) throw InvalidInput("sequence length must be >= 1");
  const int k = fs.num_labels;
  ScoreTables tb;
  tb.L = x.length();
  tb.k = k;
  tb.trans.resize(static_cast<size_t>(k) * k);
  for (int i = 0; i < k * k; ++i) tb.trans[i] = weight_scale * w[i];
  tb.node.assign(static_cast<size_t>(tb.L) * k, 0.0);
  for (int j = 0; j < tb.L; ++j) {
    for (int t : x.tokens[j]) {
      if (t < 0 || t >= fs.input_dim)
        throw InvalidInput("token feature index out of range");
      for (int c = 0; c < k; ++c)
        tb.node[j * k + c] += weight_scale * w[fs.emission_index(c, t)];
    }
  }
  for (double v : tb.trans)
    if (!std::isfinite(v)) throw InvalidInput("non-finite weight");
  for (double v : tb.node)
    if (!std::isfinite(v)) throw InvalidInput("non-finite weight");
  return tb;
}

// Backward max pass + forward reconstruction. Scanning labels in increasing
// order with strict improvement yields the lexicographically smallest argmax.
ScoredLabeling max_decode(const ScoreTables& tb,
                          const std::vector<double>* node_bonus) {
  const int L = tb.L, k = tb.k;
  auto bonus = [&](int j, int c) {
    return node_bonus ? (*node_bonus)[j * k + c] : 0.0;
  };
  std::vector<double> suffix(static_cast<size_t>(L) * k);
  for (int c = 0; c < k; ++c)
    suffix[(L - 1) * k + c] = tb.n(L - 1, c) + bonus(L - 1, c);
  for (int j = L - 2; j >= 0; --j) {
    for (int c = 0; c < k; ++c) {
      double best = -std::numeric_limits<double>::infinity();
      for (int b = 0; b < k; ++b) {
        double v = tb.t(c, b) + suffix[(j + 1) * k + b];
        if (v > best) best = v;
      }
      suffix[j * k + c] = tb.n(j, c) + bonus(j, c) + best;
    }
  }
  ScoredLabeling out;
  out.labels.resize(L);
  int arg = 0;
  for (int c = 1; c < k; ++c)
    if (suffix[c] > suffix[arg]) arg = c;
  out.labels[0] = arg;
  out.value = suffix[arg];
  for (int j = 0; j + 1 < L; ++j) {
    int prev = out.labels[j];
    int best = 0;
    double best_v = -std::numeric_limits<double>::infinity();
    for (int b = 0; b < k; ++b) {
      double v = tb.t(prev, b) + suffix[(j + 1) * k + b];
      if (v > best_v) {
        best_v = v;
        best = b;
      }
    }
    out.labels[j + 1] = best;
  }
  return out;
}

double log_sum_exp(const double* v, int n) {
  double m = v[0];
  for (int i = 1; i < n; ++i) m = std::max(m, v[i]);
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::exp(v[i] - m);
  return m + std::log(s);
}

std::int64_t checked_labeling_count(int k, int L, std::int64_t cap) {
  std::int64_t count = 1;
  for (int j = 0; j < L; ++j) {
    count *= k;
    if (count > cap)
      throw InvalidInput("brute-force oracle refused: k^L exceeds cap");
  }
  return count;
}

// Calls fn(y) for every labeling in lexicographic order.
template <typename Fn>
void for_each_labeling(int k, int L, Fn&& fn) {
  LabelSequence y(L, 0);
  while (true) {
    fn(static_cast<const LabelSequence&>(y));
    int j = L - 1;
    while (j >= 0 && y[j] == k - 1) y[j--] = 0;
    if (j < 0) break;
    ++y[j];
  }
}

}  // namespace

LabelSequence viterbi_decode(const WeightVector& w, const TokenSequence& x,
                             const FeatureSpace& fs) {
  return max_decode(build_tables(w, x, fs), nullptr).labels;
}

ScoredLabeling loss_augmented_viterbi(const WeightVector& w,
                                      const LabeledPair& pair,
                                      const FeatureSpace& fs) {
  if (pair.x.length() != static_cast<int>(pair.y.size()))
    throw InvalidInput("token and label sequence lengths differ");
  ScoreTables tb = build_tables(w, pair.x, fs);
  std::vector<double> bonus(static_cast<size_t>(tb.L) * tb.k, 1.0);
  for (int j = 0; j < tb.L; ++j) bonus[j * tb.k + pair.y[j]] = 0.0;
  return max_decode(tb, &bonus);
}

std::vector<ScoredLabeling> nbest_decode(const WeightVector& w,
                                         const TokenSequence& x,
                                         const FeatureSpace& fs, int n) {
  if (n < 1) throw InvalidInput("nbest_decode requires n >= 1");
  ScoreTables tb = build_tables(w, x, fs);
  const int L = tb.L, k = tb.k;

  struct Hyp {
    double score;
    int prev_label;  // -1 at the first position
    int prev_rank;
  };
  // lists[j*k + c] holds up to n partial hypotheses ending in label c,
  // best first; ties ordered by (previous label, rank) for determinism.
  std::vector<std::vector<Hyp>> lists(static_cast<size_t>(L) * k);
  auto worse = [](const Hyp& a, const Hyp& b) {
    if (a.score != b.score) return a.score < b.score;
    if (a.prev_label != b.prev_label) return a.prev_label > b.prev_label;
    return a.prev_rank > b.prev_rank;
  };
  for (int c = 0; c < k; ++c) lists[c] = {Hyp{tb.n(0, c), -1, -1}};
  std::vector<Hyp> cand;
  for (int j = 1; j < L; ++j) {
    for (int c = 0; c < k; ++c) {
      cand.clear();
      for (int a = 0; a < k; ++a) {
        const auto& prev = lists[(j - 1) * k + a];
        for (int r = 0; r < static_cast<int>(prev.size()); ++r)
          cand.push_back(Hyp{prev[r].score + tb.t(a, c) + tb.n(j, c), a, r});
      }
      std::sort(cand.begin(), cand.end(),
                [&](const Hyp& a, const Hyp& b) { return worse(b, a); });
      if (static_cast<int>(cand.size()) > n) cand.resize(n);
      lists[j * k + c] = cand;
    }
  }

  // gather final hypotheses as (label, rank), backtrace each
  struct Final {
    double score;
    int label;
    int rank;
  };
  std::vector<Final> finals;
  for (int c = 0; c < k; ++c)
    for (int r = 0; r < static_cast<int>(lists[(L - 1) * k + c].size()); ++r)
      finals.push_back(Final{lists[(L - 1) * k + c][r].score, c, r});
  std::sort(finals.begin(), finals.end(), [](const Final& a, const Final& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.label != b.label) return a.label < b.label;
    return a.rank < b.rank;
  });
  if (static_cast<int>(finals.size()) > n) finals.resize(n);

  std::vector<ScoredLabeling> out;
  out.reserve(finals.size());
  for (const Final& f : finals) {
    ScoredLabeling sl;
    sl.value = f.score;
    sl.labels.assign(L, 0);
    int label = f.label, rank = f.rank;
    for (int j = L - 1; j >= 0; --j) {
      sl.labels[j] = label;
      const Hyp& h = lists[j * k + label][rank];
      label = h.prev_label;
      rank = h.prev_rank;
    }
    out.push_back(std::move(sl));
  }
  return out;
}

Marginals forward_backward(const WeightVector& w, const TokenSequence& x,
                           const FeatureSpace& fs, double weight_scale) {
  ScoreTables tb = build_tables(w, x, fs, weight_scale);
  const int L = tb.L, k = tb.k;

  std::vector<double> alpha(static_cast<size_t>(L) * k);
  std::vector<double> beta(static_cast<size_t>(L) * k);
  std::vector<double> scratch(k);

  for (int c = 0; c < k; ++c) alpha[c] = tb.n(0, c);
  for (int j = 1; j < L; ++j) {
    for (int b = 0; b < k; ++b) {
      for (int a = 0; a < k; ++a) scratch[a] = alpha[(j - 1) * k + a] + tb.t(a, b);
      alpha[j * k + b] = log_sum_exp(scratch.data(), k) + tb.n(j, b);
    }
  }
  for (int c = 0; c < k; ++c) beta[(L - 1) * k + c] = 0.0;
  for (int j = L - 2; j >= 0; --j) {
    for (int a = 0; a < k; ++a) {
      for (int b = 0; b < k; ++b)
        scratch[b] = tb.t(a, b) + tb.n(j + 1, b) + beta[(j + 1) * k + b];
      beta[j * k + a] = log_sum_exp(scratch.data(), k);
    }
  }

  Marginals m;
  m.length = L;
  m.num_labels = k;
  m.log_z = log_sum_exp(alpha.data() + (L - 1) * k, k);
  for (int c = 0; c < k; ++c) scratch[c] = tb.n(0, c) + beta[c];
  m.log_z_backward = log_sum_exp(scratch.data(), k);
  // Normalize rows/slices explicitly so they sum to one exactly.
  m.node.resize(static_cast<size_t>(L) * k);
  for (int j = 0; j < L; ++j) {
    double row = 0.0;
    for (int c = 0; c < k; ++c) {
      double p = std::exp(alpha[j * k + c] + beta[j * k + c] - m.log_z);
      m.node[j * k + c] = p;
      row += p;
    }
    for (int c = 0; c < k; ++c) m.node[j * k + c] /= row;
  }
  m.edge.resize(static_cast<size_t>(L - 1) * k * k);
  for (int j = 0; j + 1 < L; ++j) {
    double slice = 0.0;
    for (int a = 0; a < k; ++a) {
      for (int b = 0; b < k; ++b) {
        double p = std::exp(alpha[j * k + a] + tb.t(a, b) + tb.n(j + 1, b) +
                            beta[(j + 1) * k + b] - m.log_z);
        m.edge[(j * k + a) * k + b] = p;
        slice += p;
      }
    }
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b) m.edge[(j * k + a) * k + b] /= slice;
  }
  return m;
}

double sequence_log_likelihood(const WeightVector& w, const LabeledPair& pair,
                               const FeatureSpace& fs) {
  Marginals m = forward_backward(w, pair.x, fs);
  double s = score(w, pair.x, pair.y, fs);
  return std::min(0.0, s - m.log_z);
}

SparseVector expected_feature(const WeightVector& w, const TokenSequence& x,
                              const FeatureSpace& fs, double weight_scale) {
  Marginals m = forward_backward(w, x, fs, weight_scale);
  const int L = m.length, k = m.num_labels;
  std::vector<SparseVector::Entry> entries;
  entries.reserve(static_cast<size_t>(k) * k + static_cast<size_t>(L) * k);
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) {
      double sum = 0.0;
      for (int j = 0; j + 1 < L; ++j) sum += m.edge_at(j, a, b);
      if (sum != 0.0) entries.emplace_back(fs.transition_index(a, b), sum);
    }
  }
  for (int j = 0; j < L; ++j)
    for (int t : x.tokens[j])
      for (int c = 0; c < k; ++c)
        entries.emplace_back(fs.emission_index(c, t), m.node_at(j, c));
  return SparseVector::from_unsorted(std::move(entries));
}

ScoredLabeling brute_force_argmax(const WeightVector& w, const TokenSequence& x,
                                  const FeatureSpace& fs,
                                  const BruteForceOptions& opts) {
  checked_labeling_count(fs.num_labels, x.length(), opts.max_labelings);
  ScoredLabeling best;
  best.value = -std::numeric_limits<double>::infinity();
  for_each_labeling(fs.num_labels, x.length(), [&](const LabelSequence& y) {
    double s = score(w, x, y, fs);
    if (s > best.value) {
      best.value = s;
      best.labels = y;
    }
  });
  return best;
}

ScoredLabeling brute_force_loss_augmented_argmax(const WeightVector& w,
                                                 const LabeledPair& pair,
                                                 const FeatureSpace& fs,
                                                 const BruteForceOptions& opts) {
  checked_labeling_count(fs.num_labels, pair.x.length(), opts.max_labelings);
  ScoredLabeling best;
  best.value = -std::numeric_limits<double>::infinity();
  for_each_labeling(fs.num_labels, pair.x.length(), [&](const LabelSequence& y) {
    double s = score(w, pair.x, y, fs) + hamming_loss(pair.y, y);
    if (s > best.value) {
      best.value = s;
      best.labels = y;
    }
  });
  return best;
}

double brute_force_log_z(const WeightVector& w, const TokenSequence& x,
                         const FeatureSpace& fs, const BruteForceOptions& opts) {
  std::int64_t count =
      checked_labeling_count(fs.num_labels, x.length(), opts.max_labelings);
  std::vector<double> scores;
  scores.reserve(count);
  for_each_labeling(fs.num_labels, x.length(), [&](const LabelSequence& y) {
    scores.push_back(score(w, x, y, fs));
  });
  return log_sum_exp(scores.data(), static_cast<int>(scores.size()));
}

SparseVector brute_force_expected_feature(const WeightVector& w,
                                          const TokenSequence& x,
                                          const FeatureSpace& fs,
                                          const BruteForceOptions& opts) {
  double log_z = brute_force_log_z(w, x, fs, opts);
  WeightVector dense(fs.dim(), 0.0);
  for_each_labeling(fs.num_labels, x.length(), [&](const LabelSequence& y) {
    double p = std::exp(score(w, x, y, fs) - log_z);
    joint_feature(x, y, fs).add_to(dense, p);
  });
  std::vector<SparseVector::Entry> entries;
  for (int i = 0; i < static_cast<int>(dense.size()); ++i)
    if (dense[i] != 0.0) entries.emplace_back(i, dense[i]);
  return SparseVector::from_unsorted(std::move(entries));
}

}  // namespace seqlab
