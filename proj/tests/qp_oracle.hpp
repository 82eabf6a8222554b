#ifndef SEQLAB_TESTS_QP_ORACLE_HPP
#define SEQLAB_TESTS_QP_ORACLE_HPP

// Enumerated-simplex QP oracle for the hinge-loss dual: projected gradient
// over every labeling of every example. Test-only; independent of the
// trainer's pair-step path.

#include <algorithm>
#include <cmath>
#include <vector>

#include "seqlab/core.hpp"

namespace seqlab::testing {

struct EnumeratedQp {
  const std::vector<LabeledPair>& data;
  FeatureSpace fs;
  double lambda;
  std::vector<std::vector<SparseVector>> deltas;
  std::vector<std::vector<double>> losses;
  std::vector<std::vector<double>> alpha;

  EnumeratedQp(const std::vector<LabeledPair>& d, const FeatureSpace& f,
               double lam)
      : data(d), fs(f), lambda(lam) {
    for (const LabeledPair& ex : data) {
      std::vector<SparseVector> dd;
      std::vector<double> ll;
      LabelSequence y(ex.x.length(), 0);
      bool more = true;
      while (more) {
        dd.push_back(delta_feature(ex, y, fs));
        ll.push_back(hamming_loss(ex.y, y));
        int j = ex.x.length() - 1;
        while (j >= 0 && y[j] == fs.num_labels - 1) y[j--] = 0;
        if (j < 0)
          more = false;
        else
          ++y[j];
      }
      deltas.push_back(std::move(dd));
      losses.push_back(std::move(ll));
      std::vector<double> a(deltas.back().size(), 0.0);
      for (size_t yidx = 0; yidx < deltas.back().size(); ++yidx)
        if (deltas.back()[yidx].nnz() == 0 && losses.back()[yidx] == 0.0)
          a[yidx] = 1.0;
      alpha.push_back(std::move(a));
    }
  }

  WeightVector weights() const {
    WeightVector w(fs.dim(), 0.0);
    for (size_t i = 0; i < alpha.size(); ++i)
      for (size_t y = 0; y < alpha[i].size(); ++y)
        deltas[i][y].add_to(w, alpha[i][y] / lambda);
    return w;
  }

  double objective() const {
    WeightVector w = weights();
    double sq = 0.0;
    for (double v : w) sq += v * v;
    double obj = 0.5 * lambda * sq;
    for (size_t i = 0; i < alpha.size(); ++i)
      for (size_t y = 0; y < alpha[i].size(); ++y)
        obj -= alpha[i][y] * losses[i][y];
    return obj;
  }

  static void project_to_simplex(std::vector<double>& v) {
    std::vector<double> u = v;
    std::sort(u.rbegin(), u.rend());
    double css = 0.0, theta = 0.0;
    for (int j = 0; j < static_cast<int>(u.size()); ++j) {
      css += u[j];
      double t = (css - 1.0) / (j + 1);
      if (u[j] > t) theta = t;
    }
    for (double& x : v) x = std::max(0.0, x - theta);
  }

  void solve(int iterations) {
    double lip = 0.0;
    for (size_t i = 0; i < deltas.size(); ++i)
      for (size_t y = 0; y < deltas[i].size(); ++y)
        lip += deltas[i][y].squared_norm();
    lip = std::max(lip / lambda, 1e-8);
    double step = 1.0 / lip;
    for (int it = 0; it < iterations; ++it) {
      WeightVector w = weights();
      for (size_t i = 0; i < alpha.size(); ++i) {
        for (size_t y = 0; y < alpha[i].size(); ++y) {
          double g = deltas[i][y].dot(w) - losses[i][y];
          alpha[i][y] -= step * g;
        }
        project_to_simplex(alpha[i]);
      }
    }
  }
};

}  // namespace seqlab::testing

#endif  // SEQLAB_TESTS_QP_ORACLE_HPP
