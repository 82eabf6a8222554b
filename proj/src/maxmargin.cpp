#include "seqlab/maxmargin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace seqlab {

namespace {

double dot(const WeightVector& a, const WeightVector& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

double structural_svm_primal(const WeightVector& w,
                             const std::vector<LabeledPair>& data,
                             const FeatureSpace& fs, double lambda) {
  double obj = 0.5 * lambda * dot(w, w);
  for (const LabeledPair& ex : data) {
    ScoredLabeling hit = loss_augmented_viterbi(w, ex, fs);
    double slack = hit.value - score(w, ex.x, ex.y, fs);
    obj += std::max(0.0, slack);
  }
  return obj;
}

// ---- SvmSdmTrainer ----

SvmSdmTrainer::SvmSdmTrainer(const std::vector<LabeledPair>& data,
                             const FeatureSpace& fs, double lambda,
                             SvmSdmOptions opts)
    : data_(data), fs_(fs), lambda_(lambda), opts_(opts) {
  if (lambda <= 0.0) throw InvalidInput("lambda must be > 0");
  w_.assign(fs.dim(), 0.0);
  active_.resize(data.size());
  for (size_t i = 0; i < data.size(); ++i) {
    if (data[i].x.length() != static_cast<int>(data[i].y.size()))
      throw InvalidInput("token and label sequence lengths differ");
    active_[i].push_back(Member{data[i].y, 1.0, SparseVector{}, 0.0});
  }
}

void SvmSdmTrainer::transfer_mass(int i, int from, int to, double tau) {
  auto& A = active_[i];
  A[from].alpha -= tau;
  A[to].alpha += tau;
  A[to].delta.add_to(w_, tau / lambda_);
  A[from].delta.add_to(w_, -tau / lambda_);
}

PairStepInfo SvmSdmTrainer::pair_step(int i) {
  PairStepInfo info;
  auto& A = active_[i];
  if (A.size() < 2) return info;

  std::vector<double> g(A.size());
  for (size_t m = 0; m < A.size(); ++m) g[m] = gradient_of(A[m]);

  // receivers sorted by ascending gradient, donors (with support) descending
  std::vector<int> recv(A.size()), donor;
  for (size_t m = 0; m < A.size(); ++m) recv[m] = static_cast<int>(m);
  std::sort(recv.begin(), recv.end(), [&](int a, int b) { return g[a] < g[b]; });
  for (size_t m = 0; m < A.size(); ++m)
    if (A[m].alpha > 0.0) donor.push_back(static_cast<int>(m));
  std::sort(donor.begin(), donor.end(), [&](int a, int b) { return g[a] > g[b]; });

  for (int q : donor) {
    for (int p : recv) {
      if (p == q) continue;
      if (g[q] - g[p] < opts_.kkt_tol) break;  // receivers only get worse
      SparseVector delta = A[p].delta.minus(A[q].delta);
      double q2 = delta.squared_norm();
      double tau;
      if (q2 == 0.0) {
        // identical features but different losses: the restriction is linear
        // in tau, so the full transfer is optimal
        tau = A[q].alpha;
        info.clipped = true;
      } else {
        tau = lambda_ * (g[q] - g[p]) / q2;
        info.clipped = tau > A[q].alpha;
        if (info.clipped) tau = A[q].alpha;
      }
      if (tau <= 0.0) continue;
      transfer_mass(i, q, p, tau);
      info.stepped = true;
      info.tau = tau;
      info.grad_p_after = gradient_of(A[p]);
      info.grad_q_after = gradient_of(A[q]);
      return info;
    }
  }
  return info;
}

double SvmSdmTrainer::update_example(int i) {
  auto& A = active_[i];

  // (a) most violated constraint via loss-augmented decoding;
  // hit.value = w'f(x,yhat) + loss, so g(yhat) = w'f(x,y_i) - hit.value
  ScoredLabeling hit = loss_augmented_viterbi(w_, data_[i], fs_);
  double loss = static_cast<double>(hamming_loss(data_[i].y, hit.labels));
  double g_hat = score(w_, data_[i].x, data_[i].y, fs_) - hit.value;

  double g_min = std::numeric_limits<double>::infinity();
  double g_max_support = -std::numeric_limits<double>::infinity();
  for (const Member& m : A) {
    double g = gradient_of(m);
    g_min = std::min(g_min, g);
    if (m.alpha > 0.0) g_max_support = std::max(g_max_support, g);
  }
  double violation =
      std::max(0.0, g_max_support - std::min(g_min, g_hat));

  if (g_hat < g_min - opts_.insertion_tol) {
    bool present = false;
    for (const Member& m : A)
      if (m.labels == hit.labels) {
        present = true;
        break;
      }
    if (!present) {
      A.push_back(Member{hit.labels, 0.0,
                         delta_feature(data_[i], hit.labels, fs_), loss});
      if (static_cast<int>(A.size()) > opts_.max_active) {
        int evict = -1;
        for (int m = 1; m < static_cast<int>(A.size()) - 1; ++m)
          if (evict < 0 || A[m].alpha < A[evict].alpha) evict = m;
        if (evict >= 0) {
          transfer_mass(i, evict, 0, A[evict].alpha);
          A.erase(A.begin() + evict);
        }
      }
    }
  }

  // (b) SMO pair steps
  for (int it = 0; it < opts_.max_pair_steps; ++it)
    if (!pair_step(i).stepped) break;

  // (c) drop members whose mass hit zero (never the gold labeling) and
  // absorb float drift into the gold member, whose delta is zero
  for (int m = static_cast<int>(A.size()) - 1; m >= 1; --m)
    if (A[m].alpha <= 0.0) A.erase(A.begin() + m);
  double sum = 0.0;
  for (const Member& m : A) sum += m.alpha;
  double drift = 1.0 - sum;
  if (A[0].alpha + drift >= 0.0) {
    A[0].alpha += drift;
  } else {
    int big = 0;
    for (size_t m = 1; m < A.size(); ++m)
      if (A[m].alpha > A[big].alpha) big = static_cast<int>(m);
    A[big].alpha += drift;
  }
  return violation;
}

double SvmSdmTrainer::pass() {
  double worst = 0.0;
  for (size_t i = 0; i < data_.size(); ++i)
    worst = std::max(worst, update_example(static_cast<int>(i)));
  return worst;
}

double SvmSdmTrainer::dual_objective() const {
  double obj = 0.5 * lambda_ * dot(w_, w_);
  for (const auto& A : active_)
    for (const Member& m : A) obj -= m.alpha * m.loss;
  return obj;
}

double SvmSdmTrainer::primal_objective() const {
  return structural_svm_primal(w_, data_, fs_, lambda_);
}

WeightVector SvmSdmTrainer::recomputed_weights() const {
  WeightVector out(fs_.dim(), 0.0);
  for (const auto& A : active_)
    for (const Member& m : A) m.delta.add_to(out, m.alpha / lambda_);
  return out;
}

std::vector<SvmSdmTrainer::ActiveEntry> SvmSdmTrainer::active_set(int i) const {
  std::vector<ActiveEntry> out;
  out.reserve(active_[i].size());
  for (const Member& m : active_[i]) out.push_back({m.labels, m.alpha, m.loss});
  return out;
}

// ---- CuttingPlaneTrainer ----

CuttingPlaneTrainer::CuttingPlaneTrainer(const std::vector<LabeledPair>& data,
                                         const FeatureSpace& fs, double lambda,
                                         CuttingPlaneOptions opts)
    : data_(data), fs_(fs), lambda_(lambda), opts_(opts),
      dummy_beta_(static_cast<double>(data.size())) {
  if (lambda <= 0.0) throw InvalidInput("lambda must be > 0");
  if (opts.epsilon <= 0.0) throw InvalidInput("epsilon must be > 0");
  if (data.empty()) throw InvalidInput("cutting plane needs a non-empty dataset");
  w_.assign(fs.dim(), 0.0);
}

double CuttingPlaneTrainer::xi() const {
  double v = 0.0;
  for (const auto& c : constraints_)
    v = std::max(v, c.avg_loss - c.avg_delta.dot(w_));
  return v;
}

double CuttingPlaneTrainer::restricted_dual_value() const {
  double v = -0.5 * lambda_ * dot(w_, w_);
  for (const auto& c : constraints_) v += c.beta * c.avg_loss;
  return v;
}

double CuttingPlaneTrainer::restricted_primal_objective() const {
  return 0.5 * lambda_ * dot(w_, w_) +
         static_cast<double>(data_.size()) * xi();
}

WeightVector CuttingPlaneTrainer::recomputed_weights() const {
  WeightVector out(fs_.dim(), 0.0);
  for (const auto& c : constraints_) c.avg_delta.add_to(out, c.beta / lambda_);
  return out;
}

// Coordinate ascent on the working-set dual: beta >= 0 with total mass n,
// the surplus held by a dummy coordinate with zero constraint. Pair steps
// are the same closed form as in the SMO trainer.
void CuttingPlaneTrainer::solve_restricted_dual() {
  const int m = static_cast<int>(constraints_.size());
  if (m == 0) return;
  const double tol = std::min(opts_.qp_tol, 0.01 * opts_.epsilon);
  auto grad = [&](int c) {
    return c < 0 ? 0.0
                 : constraints_[c].avg_delta.dot(w_) - constraints_[c].avg_loss;
  };
  auto beta_of = [&](int c) -> double& {
    return c < 0 ? dummy_beta_ : constraints_[c].beta;
  };
  const SparseVector zero;
  auto delta_of = [&](int c) -> const SparseVector& {
    return c < 0 ? zero : constraints_[c].avg_delta;
  };
  for (long step = 0; step < opts_.qp_max_steps; ++step) {
    int p = -1, q = -2;
    double gp = grad(-1), gq = -std::numeric_limits<double>::infinity();
    for (int c = -1; c < m; ++c) {
      double g = grad(c);
      if (g < gp) {
        gp = g;
        p = c;
      }
      if (beta_of(c) > 0.0 && g > gq) {
        gq = g;
        q = c;
      }
    }
    if (q == -2 || q == p || gq - gp < tol) break;
    SparseVector delta = delta_of(p).minus(delta_of(q));
    double q2 = delta.squared_norm();
    // q2 == 0 makes the restriction linear: move the full mass
    double tau = q2 == 0.0 ? beta_of(q)
                           : std::min(lambda_ * (gq - gp) / q2, beta_of(q));
    if (tau <= 0.0) break;
    beta_of(q) -= tau;
    beta_of(p) += tau;
    delta.add_to(w_, tau / lambda_);
  }
}

bool CuttingPlaneTrainer::iterate() {
  if (converged_) return false;
  solve_restricted_dual();

  // most violated aggregate constraint at the current w
  const int n = static_cast<int>(data_.size());
  WeightVector dense(fs_.dim(), 0.0);
  double loss_sum = 0.0;
  for (const LabeledPair& ex : data_) {
    ScoredLabeling hit = loss_augmented_viterbi(w_, ex, fs_);
    delta_feature(ex, hit.labels, fs_).add_to(dense, 1.0);
    loss_sum += hamming_loss(ex.y, hit.labels);
  }
  std::vector<SparseVector::Entry> entries;
  for (int i = 0; i < fs_.dim(); ++i)
    if (dense[i] != 0.0) entries.emplace_back(i, dense[i] / n);
  CuttingPlaneConstraint cand;
  cand.avg_delta = SparseVector::from_unsorted(std::move(entries));
  cand.avg_loss = loss_sum / n;

  double violation = cand.avg_loss - cand.avg_delta.dot(w_);
  if (violation <= xi() + opts_.epsilon) {
    converged_ = true;
    return false;
  }
  for (const auto& c : constraints_)
    if (c.avg_loss == cand.avg_loss && c.avg_delta == cand.avg_delta) {
      // already present: the restricted dual was not solved tightly enough
      // for this epsilon; report convergence at the achieved gap instead of
      // duplicating constraints
      converged_ = true;
      return false;
    }
  constraints_.push_back(std::move(cand));
  ++iterations_;
  return true;
}

CuttingPlaneResult cutting_plane_train(const std::vector<LabeledPair>& data,
                                       const FeatureSpace& fs, double lambda,
                                       double epsilon, int max_iter) {
  CuttingPlaneOptions opts;
  opts.epsilon = epsilon;
  opts.max_iter = max_iter;
  CuttingPlaneTrainer trainer(data, fs, lambda, opts);
  while (trainer.iterations() < max_iter && trainer.iterate()) {
  }
  if (!trainer.converged()) trainer.solve_working_set();
  CuttingPlaneResult res;
  res.w = trainer.weights();
  res.working_set = trainer.working_set();
  res.xi = trainer.xi();
  res.iterations = trainer.iterations();
  res.converged = trainer.converged();
  return res;
}

}  // namespace seqlab
