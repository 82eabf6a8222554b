#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "seqlab/core.hpp"

using namespace seqlab;

namespace {

TokenSequence make_x(std::vector<std::vector<int>> tokens) {
  TokenSequence x;
  x.tokens = std::move(tokens);
  return x;
}

// Random instance with small dyadic-friendly sizes.
struct RandomInstance {
  FeatureSpace fs;
  TokenSequence x;
  LabelSequence y;
};

RandomInstance random_instance(std::mt19937& rng, int max_k = 3, int max_d = 4,
                               int max_len = 5) {
  RandomInstance inst;
  inst.fs.num_labels = 1 + static_cast<int>(rng() % max_k);
  inst.fs.input_dim = 1 + static_cast<int>(rng() % max_d);
  int L = 1 + static_cast<int>(rng() % max_len);
  inst.x.tokens.resize(L);
  inst.y.resize(L);
  for (int j = 0; j < L; ++j) {
    for (int t = 0; t < inst.fs.input_dim; ++t)
      if (rng() % 2) inst.x.tokens[j].push_back(t);
    inst.y[j] = static_cast<int>(rng() % inst.fs.num_labels);
  }
  return inst;
}

WeightVector random_weights(std::mt19937& rng, int n) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  WeightVector w(n);
  for (double& v : w) v = dist(rng);
  return w;
}

}  // namespace

TEST_CASE("joint_feature layout on a hand-enumerated instance") {
  // k=2, d=2, x=[{0},{1}], y=[0,1]
  FeatureSpace fs{2, 2};
  TokenSequence x = make_x({{0}, {1}});
  LabelSequence y = {0, 1};
  SparseVector f = joint_feature(x, y, fs);
  CHECK(f.nnz() == 3);
  CHECK(f.value_at(fs.transition_index(0, 1)) == 1.0);
  CHECK(f.value_at(fs.emission_index(0, 0)) == 1.0);
  CHECK(f.value_at(fs.emission_index(1, 1)) == 1.0);
}

TEST_CASE("joint_feature: L=1 has no transition entries") {
  FeatureSpace fs{3, 2};
  SparseVector f = joint_feature(make_x({{0, 1}}), {2}, fs);
  for (const auto& [idx, val] : f.entries()) CHECK(idx >= fs.num_labels * fs.num_labels);
  CHECK(f.value_at(fs.emission_index(2, 0)) == 1.0);
  CHECK(f.value_at(fs.emission_index(2, 1)) == 1.0);
}

TEST_CASE("joint_feature: empty token feature sets give only transitions") {
  FeatureSpace fs{2, 3};
  TokenSequence x = make_x({{}, {}, {}});
  LabelSequence y = {0, 1, 1};
  SparseVector f = joint_feature(x, y, fs);
  double total = 0.0;
  for (const auto& [idx, val] : f.entries()) {
    CHECK(idx < fs.num_labels * fs.num_labels);
    total += val;
  }
  CHECK(total == 2.0);  // L-1 bigrams
}

TEST_CASE("joint_feature mass invariants on random instances") {
  std::mt19937 rng(7);
  for (int rep = 0; rep < 50; ++rep) {
    RandomInstance inst = random_instance(rng);
    SparseVector f = joint_feature(inst.x, inst.y, inst.fs);
    double trans_mass = 0.0, emis_mass = 0.0;
    int kk = inst.fs.num_labels * inst.fs.num_labels;
    for (const auto& [idx, val] : f.entries())
      (idx < kk ? trans_mass : emis_mass) += val;
    CHECK(trans_mass == static_cast<double>(inst.x.length() - 1));
    double expected = 0.0;
    for (const auto& feats : inst.x.tokens) expected += feats.size();
    CHECK(emis_mass == expected);
  }
}

TEST_CASE("joint_feature rejects mismatched lengths and bad indices") {
  FeatureSpace fs{2, 2};
  CHECK_THROWS_AS(joint_feature(make_x({{0}}), {0, 1}, fs), InvalidInput);
  CHECK_THROWS_AS(joint_feature(make_x({{2}}), {0}, fs), InvalidInput);
  CHECK_THROWS_AS(joint_feature(make_x({{0}}), {2}, fs), InvalidInput);
}

TEST_CASE("delta_feature of the gold labeling is exactly zero") {
  std::mt19937 rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    RandomInstance inst = random_instance(rng);
    LabeledPair pair{inst.x, inst.y};
    CHECK(delta_feature(pair, inst.y, inst.fs).nnz() == 0);
  }
}

TEST_CASE("delta_feature equals the two-call subtraction") {
  FeatureSpace fs{2, 1};
  TokenSequence x = make_x({{0}, {0}});
  LabeledPair pair{x, {0, 0}};
  LabelSequence y = {1, 0};
  SparseVector d = delta_feature(pair, y, fs);
  SparseVector ref = joint_feature(x, pair.y, fs).minus(joint_feature(x, y, fs));
  CHECK(d == ref);
  // hand check: gold has trans(0,0) and two emissions at (0,f0);
  // y has trans(1,0), emission (1,f0) and (0,f0).
  CHECK(d.value_at(fs.transition_index(0, 0)) == 1.0);
  CHECK(d.value_at(fs.transition_index(1, 0)) == -1.0);
  CHECK(d.value_at(fs.emission_index(0, 0)) == 1.0);
  CHECK(d.value_at(fs.emission_index(1, 0)) == -1.0);
}

TEST_CASE("score: zero weights and all-ones weights") {
  std::mt19937 rng(13);
  for (int rep = 0; rep < 20; ++rep) {
    RandomInstance inst = random_instance(rng);
    WeightVector zero(inst.fs.dim(), 0.0);
    CHECK(score(zero, inst.x, inst.y, inst.fs) == 0.0);
    WeightVector ones(inst.fs.dim(), 1.0);
    double feats = 0.0;
    for (const auto& f : inst.x.tokens) feats += f.size();
    CHECK(score(ones, inst.x, inst.y, inst.fs) ==
          doctest::Approx(inst.x.length() - 1 + feats));
  }
}

TEST_CASE("score matches a dense dot product with joint_feature") {
  std::mt19937 rng(17);
  for (int rep = 0; rep < 20; ++rep) {
    RandomInstance inst = random_instance(rng);
    WeightVector w = random_weights(rng, inst.fs.dim());
    SparseVector f = joint_feature(inst.x, inst.y, inst.fs);
    double dense = 0.0;
    for (int i = 0; i < inst.fs.dim(); ++i) dense += w[i] * f.value_at(i);
    CHECK(score(w, inst.x, inst.y, inst.fs) == doctest::Approx(dense).epsilon(1e-12));
  }
}

TEST_CASE("score is linear in w") {
  std::mt19937 rng(19);
  for (int rep = 0; rep < 20; ++rep) {
    RandomInstance inst = random_instance(rng);
    WeightVector w1 = random_weights(rng, inst.fs.dim());
    WeightVector w2 = random_weights(rng, inst.fs.dim());
    double a = 0.75, b = -1.5;
    WeightVector mix(inst.fs.dim());
    for (int i = 0; i < inst.fs.dim(); ++i) mix[i] = a * w1[i] + b * w2[i];
    double lhs = score(mix, inst.x, inst.y, inst.fs);
    double rhs = a * score(w1, inst.x, inst.y, inst.fs) +
                 b * score(w2, inst.x, inst.y, inst.fs);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  }
}

TEST_CASE("hamming_loss basics") {
  CHECK(hamming_loss({0, 1, 2}, {0, 1, 2}) == 0);
  CHECK(hamming_loss({0, 1, 2}, {1, 2, 0}) == 3);
  CHECK(hamming_loss({0, 0, 0, 0, 0}, {0, 0, 1, 0, 0}) == 1);
  CHECK_THROWS_AS(hamming_loss({0}, {0, 1}), InvalidInput);
}

TEST_CASE("hamming_loss is a metric on random triples") {
  std::mt19937 rng(23);
  for (int rep = 0; rep < 200; ++rep) {
    int L = 1 + static_cast<int>(rng() % 6);
    LabelSequence a(L), b(L), c(L);
    for (int j = 0; j < L; ++j) {
      a[j] = static_cast<int>(rng() % 3);
      b[j] = static_cast<int>(rng() % 3);
      c[j] = static_cast<int>(rng() % 3);
    }
    CHECK(hamming_loss(a, b) == hamming_loss(b, a));
    CHECK(hamming_loss(a, c) <= hamming_loss(a, b) + hamming_loss(b, c));
    CHECK(hamming_loss(a, a) == 0);
  }
}

TEST_CASE("SparseVector drops zeros and merges duplicates") {
  SparseVector v = SparseVector::from_unsorted({{3, 1.0}, {1, 2.0}, {3, -1.0}, {0, 0.0}});
  CHECK(v.nnz() == 1);
  CHECK(v.value_at(1) == 2.0);
  CHECK(v.value_at(3) == 0.0);
}

TEST_CASE("SparseVector sparse-sparse dot and minus") {
  SparseVector a = SparseVector::from_unsorted({{0, 1.0}, {2, 2.0}, {5, -1.0}});
  SparseVector b = SparseVector::from_unsorted({{2, 3.0}, {5, -1.0}, {7, 4.0}});
  CHECK(a.dot(b) == 7.0);
  SparseVector d = a.minus(b);
  CHECK(d.value_at(0) == 1.0);
  CHECK(d.value_at(2) == -1.0);
  CHECK(d.value_at(5) == 0.0);
  CHECK(d.value_at(7) == -4.0);
  CHECK(d.nnz() == 3);
  CHECK(d.squared_norm() == doctest::Approx(1 + 1 + 16));
}

TEST_CASE("LabelAlphabet keeps first-appearance order") {
  LabelAlphabet alpha;
  CHECK(alpha.add("B") == 0);
  CHECK(alpha.add("I") == 1);
  CHECK(alpha.add("B") == 0);
  CHECK(alpha.add("O") == 2);
  CHECK(alpha.find("I") == 1);
  CHECK(alpha.find("missing") == -1);
  CHECK(alpha.size() == 3);
}
