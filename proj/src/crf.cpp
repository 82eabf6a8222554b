#include "seqlab/crf.hpp"

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

double inf_norm(const WeightVector& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

void check_finite(const WeightVector& w) {
  for (double v : w)
    if (!std::isfinite(v)) throw InvalidInput("non-finite weight vector");
}

double safe_log(double x) { return std::log(std::max(x, 1e-300)); }

}  // namespace

double crf_objective(const WeightVector& w, const std::vector<LabeledPair>& data,
                     const FeatureSpace& fs, double lambda) {
  if (lambda < 0.0) throw InvalidInput("lambda must be >= 0");
  check_finite(w);
  double obj = 0.5 * lambda * dot(w, w);
  for (const LabeledPair& ex : data) {
    Marginals m = forward_backward(w, ex.x, fs);
    obj += m.log_z - score(w, ex.x, ex.y, fs);
  }
  return obj;
}

ObjectiveGradient crf_objective_and_gradient(const WeightVector& w,
                                             const std::vector<LabeledPair>& data,
                                             const FeatureSpace& fs,
                                             double lambda) {
  if (lambda < 0.0) throw InvalidInput("lambda must be >= 0");
  check_finite(w);
  ObjectiveGradient out;
  out.objective = 0.5 * lambda * dot(w, w);
  out.gradient.resize(w.size());
  for (size_t i = 0; i < w.size(); ++i) out.gradient[i] = lambda * w[i];
  for (const LabeledPair& ex : data) {
    Marginals m = forward_backward(w, ex.x, fs);
    out.objective += m.log_z - score(w, ex.x, ex.y, fs);
    joint_feature(ex.x, ex.y, fs).add_to(out.gradient, -1.0);
    expected_feature(w, ex.x, fs).add_to(out.gradient, 1.0);
  }
  return out;
}

// ---- AsgdTrainer ----

AsgdTrainer::AsgdTrainer(const FeatureSpace& fs, double lambda, double gamma0,
                         int num_examples)
    : fs_(fs), lambda_(lambda), gamma0_(gamma0) {
  if (lambda < 0.0) throw InvalidInput("lambda must be >= 0");
  if (gamma0 <= 0.0) throw InvalidInput("gamma0 must be > 0");
  if (num_examples < 1) throw InvalidInput("num_examples must be >= 1");
  lambda_visit_ = lambda / static_cast<double>(num_examples);
  base_.assign(fs.dim(), 0.0);
  avg_.assign(fs.dim(), 0.0);
}

void AsgdTrainer::renormalize() {
  // Materialize w and wbar with the current scalars, then reset them.
  for (size_t i = 0; i < base_.size(); ++i) {
    avg_[i] = vscale_ * avg_[i] + cross_ * base_[i];
    base_[i] = wscale_ * base_[i];
    if (!std::isfinite(base_[i]) || !std::isfinite(avg_[i]))
      throw TrainingDiverged("asgd weights left the finite range; lower gamma0");
  }
  wscale_ = 1.0;
  vscale_ = 1.0;
  cross_ = 0.0;
}

void AsgdTrainer::step(const LabeledPair& example) {
  if (!std::isfinite(wscale_) || !std::isfinite(cross_))
    throw TrainingDiverged("asgd scalars left the finite range; lower gamma0");
  SparseVector ef = expected_feature(base_, example.x, fs_, wscale_);
  SparseVector s = joint_feature(example.x, example.y, fs_).minus(ef);

  double gamma =
      gamma0_ / (1.0 + gamma0_ * lambda_visit_ * static_cast<double>(t_));
  wscale_ *= 1.0 - gamma * lambda_visit_;
  if (wscale_ == 0.0 || std::abs(wscale_) < 1e-60 || std::abs(wscale_) > 1e60)
    renormalize();

  for (const auto& [j, sv] : s.entries()) {
    double delta = gamma * sv / wscale_;
    base_[j] += delta;
    avg_[j] -= cross_ * delta / vscale_;
    if (!std::isfinite(base_[j]) || !std::isfinite(avg_[j]))
      throw TrainingDiverged("asgd weights left the finite range; lower gamma0");
  }

  double mu = 1.0 / static_cast<double>(t_ + 1);
  vscale_ *= 1.0 - mu;
  cross_ = (1.0 - mu) * cross_ + mu * wscale_;
  if (!std::isfinite(cross_))
    throw TrainingDiverged("asgd scalars left the finite range; lower gamma0");
  if (vscale_ == 0.0) {
    // first step: wbar_1 = w_1, carried entirely by the cross term
    vscale_ = 1.0;
    std::fill(avg_.begin(), avg_.end(), 0.0);
  } else if (std::abs(vscale_) < 1e-6) {
    renormalize();
  }
  ++t_;
}

WeightVector AsgdTrainer::weights() const {
  WeightVector out(base_.size());
  for (size_t i = 0; i < base_.size(); ++i) out[i] = wscale_ * base_[i];
  return out;
}

WeightVector AsgdTrainer::averaged_weights() const {
  if (t_ == 0) return weights();
  WeightVector out(base_.size());
  for (size_t i = 0; i < base_.size(); ++i)
    out[i] = vscale_ * avg_[i] + cross_ * base_[i];
  return out;
}

double calibrate_learning_rate(const std::vector<LabeledPair>& sample,
                               const FeatureSpace& fs, double lambda,
                               const std::vector<double>& candidates) {
  if (sample.empty()) throw InvalidInput("calibration sample is empty");
  if (candidates.empty()) throw InvalidInput("no learning-rate candidates");
  double best_gamma = 0.0;
  double best_obj = std::numeric_limits<double>::infinity();
  bool any = false;
  for (double gamma0 : candidates) {
    if (gamma0 <= 0.0) continue;
    double obj;
    try {
      AsgdTrainer trainer(fs, lambda, gamma0,
                          static_cast<int>(sample.size()));
      for (const LabeledPair& ex : sample) trainer.step(ex);
      obj = crf_objective(trainer.averaged_weights(), sample, fs, lambda);
    } catch (const TrainingDiverged&) {
      continue;
    }
    if (!std::isfinite(obj)) continue;
    if (obj < best_obj) {
      best_obj = obj;
      best_gamma = gamma0;
    }
    any = true;
  }
  if (!any)
    throw CalibrationFailed("every candidate learning rate diverged");
  return best_gamma;
}

// ---- LbfgsOptimizer ----

LbfgsOptimizer::LbfgsOptimizer(const std::vector<LabeledPair>& data,
                               const FeatureSpace& fs, double lambda,
                               LbfgsOptions opts)
    : data_(data), fs_(fs), lambda_(lambda), opts_(opts) {
  if (lambda <= 0.0) throw InvalidInput("lambda must be > 0");
  w_.assign(fs.dim(), 0.0);
  ObjectiveGradient og = crf_objective_and_gradient(w_, data_, fs_, lambda_);
  objective_ = og.objective;
  grad_ = std::move(og.gradient);
  converged_ = inf_norm(grad_) < opts_.tol * std::max(1.0, inf_norm(w_));
}

double LbfgsOptimizer::grad_inf_norm() const { return inf_norm(grad_); }

bool LbfgsOptimizer::done() const { return converged_ || line_search_failed_; }

WeightVector LbfgsOptimizer::search_direction() const {
  WeightVector d(grad_.size());
  for (size_t i = 0; i < d.size(); ++i) d[i] = -grad_[i];
  const int m = static_cast<int>(s_hist_.size());
  if (m == 0) return d;
  std::vector<double> alpha(m);
  for (int j = m - 1; j >= 0; --j) {
    alpha[j] = rho_hist_[j] * dot(s_hist_[j], d);
    for (size_t i = 0; i < d.size(); ++i) d[i] -= alpha[j] * y_hist_[j][i];
  }
  double yy = dot(y_hist_[m - 1], y_hist_[m - 1]);
  double h0 = yy > 0.0 ? dot(s_hist_[m - 1], y_hist_[m - 1]) / yy : 1.0;
  for (double& v : d) v *= h0;
  for (int j = 0; j < m; ++j) {
    double beta = rho_hist_[j] * dot(y_hist_[j], d);
    for (size_t i = 0; i < d.size(); ++i)
      d[i] += (alpha[j] - beta) * s_hist_[j][i];
  }
  return d;
}

bool LbfgsOptimizer::step() {
  if (done()) return false;
  WeightVector d = search_direction();
  double gd = dot(grad_, d);
  if (gd >= 0.0) {
    // stale curvature; fall back to steepest descent
    for (size_t i = 0; i < d.size(); ++i) d[i] = -grad_[i];
    gd = -dot(grad_, grad_);
    if (gd == 0.0) {
      converged_ = true;
      return false;
    }
  }

  double t = 1.0;
  WeightVector w_new(w_.size());
  double obj_new = 0.0;
  bool accepted = false;
  for (int bt = 0; bt < opts_.max_backtracks; ++bt) {
    for (size_t i = 0; i < w_.size(); ++i) w_new[i] = w_[i] + t * d[i];
    obj_new = crf_objective(w_new, data_, fs_, lambda_);
    if (std::isfinite(obj_new) &&
        obj_new <= objective_ + opts_.sufficient_decrease * t * gd) {
      accepted = true;
      break;
    }
    t *= opts_.backtrack_factor;
  }
  if (!accepted) {
    line_search_failed_ = true;
    return false;
  }

  ObjectiveGradient og = crf_objective_and_gradient(w_new, data_, fs_, lambda_);
  WeightVector s(w_.size()), y(w_.size());
  for (size_t i = 0; i < w_.size(); ++i) {
    s[i] = w_new[i] - w_[i];
    y[i] = og.gradient[i] - grad_[i];
  }
  double sy = dot(s, y);
  if (sy > 1e-12 * std::sqrt(dot(s, s)) * std::sqrt(dot(y, y))) {
    s_hist_.push_back(std::move(s));
    y_hist_.push_back(std::move(y));
    rho_hist_.push_back(1.0 / sy);
    if (static_cast<int>(s_hist_.size()) > opts_.memory) {
      s_hist_.pop_front();
      y_hist_.pop_front();
      rho_hist_.pop_front();
    }
  }
  w_ = std::move(w_new);
  grad_ = std::move(og.gradient);
  objective_ = og.objective;
  ++iterations_;
  converged_ = inf_norm(grad_) < opts_.tol * std::max(1.0, inf_norm(w_));
  return true;
}

LbfgsResult lbfgs_train(const std::vector<LabeledPair>& data,
                        const FeatureSpace& fs, double lambda, int memory,
                        int max_iter, double tol) {
  LbfgsOptions opts;
  opts.memory = memory;
  opts.max_iter = max_iter;
  opts.tol = tol;
  LbfgsOptimizer opt(data, fs, lambda, opts);
  while (opt.iterations() < max_iter && opt.step()) {
  }
  LbfgsResult res;
  res.w = opt.weights();
  res.objective = opt.objective();
  res.grad_inf_norm = opt.grad_inf_norm();
  res.iterations = opt.iterations();
  res.converged = opt.converged();
  res.line_search_failed = opt.line_search_failed();
  return res;
}

// ---- CrfSdmTrainer ----

CrfSdmTrainer::CrfSdmTrainer(const std::vector<LabeledPair>& data,
                             const FeatureSpace& fs, double lambda,
                             CrfSdmOptions opts)
    : data_(data), fs_(fs), lambda_(lambda), opts_(opts) {
  if (lambda <= 0.0) throw InvalidInput("lambda must be > 0");
  w_.assign(fs.dim(), 0.0);
  active_.resize(data.size());
  for (size_t i = 0; i < data.size(); ++i) {
    if (data[i].x.length() != static_cast<int>(data[i].y.size()))
      throw InvalidInput("token and label sequence lengths differ");
    active_[i].push_back(Member{data[i].y, 1.0, SparseVector{}});
  }
}

void CrfSdmTrainer::transfer_mass(int i, int from, int to, double tau) {
  auto& V = active_[i];
  V[from].alpha -= tau;
  V[to].alpha += tau;
  V[to].delta.add_to(w_, tau / lambda_);
  V[from].delta.add_to(w_, -tau / lambda_);
}

// Minimizes the 1-D restriction
//   phi(tau) = tau*w'delta + tau^2*|delta|^2/(2 lambda)
//            + (a_p+tau)log(a_p+tau) + (a_q-tau)log(a_q-tau)
// over tau in [0, a_q). phi'(0) < 0 by pair selection; the entropy barrier
// keeps the root interior. Safeguarded Newton with a bisection bracket.
double CrfSdmTrainer::solve_pair_step(const Member& p, const Member& q) const {
  SparseVector delta = p.delta.minus(q.delta);
  const double wd = delta.dot(w_);
  const double q2 = delta.squared_norm() / lambda_;
  const double ap = p.alpha, aq = q.alpha;

  auto dphi = [&](double tau) {
    return wd + tau * q2 + safe_log(ap + tau) - safe_log(aq - tau);
  };
  auto ddphi = [&](double tau) {
    return q2 + 1.0 / std::max(ap + tau, 1e-300) +
           1.0 / std::max(aq - tau, 1e-300);
  };

  double hi = aq * (1.0 - 1e-16);
  if (dphi(hi) <= 0.0) return hi;  // optimum pinned at the top of the range
  double lo = 0.0;
  double tau = 0.0;
  double g = dphi(tau);
  for (int it = 0; it < opts_.newton_max_iter; ++it) {
    if (std::abs(g) < 1e-12 * std::max(1.0, std::abs(wd))) break;
    double next = tau - g / ddphi(tau);
    if (!std::isfinite(next) || next <= lo || next >= hi)
      next = 0.5 * (lo + hi);
    double gn = dphi(next);
    if (gn < 0.0)
      lo = next;
    else
      hi = next;
    tau = next;
    g = gn;
    if (hi - lo < 1e-18 * aq) break;
  }
  // phi decreases on [0, root]; lo never passes the root, so fall back to it
  // if the last iterate ended on the ascending side without converging.
  if (g > 1e-12 * std::max(1.0, std::abs(wd))) return lo;
  return tau;
}

void CrfSdmTrainer::update_example(int i) {
  auto& V = active_[i];

  // (a) candidate generation: the best sequence not yet in V_i. Absent
  // sequences sit at the entropic dual's log barrier, so the highest-scoring
  // one is the steepest-descent candidate; a plain Viterbi argmax stalls as
  // soon as the MAP sequence is already active.
  auto ranked = nbest_decode(w_, data_[i].x, fs_,
                             static_cast<int>(V.size()) + 1);
  int fresh = -1;
  for (const ScoredLabeling& cand : ranked) {
    bool present = false;
    for (const Member& m : V)
      if (m.labels == cand.labels) {
        present = true;
        break;
      }
    if (!present) {
      V.push_back(Member{cand.labels, 0.0, delta_feature(data_[i], cand.labels, fs_)});
      fresh = static_cast<int>(V.size()) - 1;
      int donor = 0;
      for (int m = 0; m < fresh; ++m)
        if (V[m].alpha > V[donor].alpha) donor = m;
      transfer_mass(i, donor, fresh, opts_.eta);
      break;
    }
  }
  if (fresh >= 0 && static_cast<int>(V.size()) > opts_.max_active) {
    // evict the lowest-mass member that is neither the gold labeling nor
    // the fresh candidate, returning its mass to the gold labeling
    int evict = -1;
    for (int m = 1; m < static_cast<int>(V.size()) - 1; ++m)
      if (evict < 0 || V[m].alpha < V[evict].alpha) evict = m;
    if (evict >= 0) {
      transfer_mass(i, evict, 0, V[evict].alpha);
      V.erase(V.begin() + evict);
    }
  }

  // (b) pair steps between the most violating pair
  for (int it = 0; it < opts_.max_pair_steps && V.size() > 1; ++it) {
    int p = 0, q = 0;
    double gp = std::numeric_limits<double>::infinity();
    double gq = -std::numeric_limits<double>::infinity();
    for (size_t m = 0; m < V.size(); ++m) {
      double g = V[m].delta.dot(w_) + safe_log(V[m].alpha) + 1.0;
      if (g < gp) {
        gp = g;
        p = static_cast<int>(m);
      }
      if (g > gq) {
        gq = g;
        q = static_cast<int>(m);
      }
    }
    if (p == q || gq - gp < opts_.kkt_tol) break;
    double tau = solve_pair_step(V[p], V[q]);
    if (tau <= 0.0) break;
    transfer_mass(i, q, p, tau);
  }

  // (c) truncate negligible members and absorb float drift (the gold member
  // has a zero delta, so adjusting its mass never touches w)
  for (int m = static_cast<int>(V.size()) - 1; m >= 1; --m) {
    if (V[m].alpha <= opts_.eta) {
      transfer_mass(i, m, 0, V[m].alpha);
      V.erase(V.begin() + m);
    }
  }
  double sum = 0.0;
  for (const Member& m : V) sum += m.alpha;
  double drift = 1.0 - sum;
  if (V[0].alpha + drift > 0.0) {
    V[0].alpha += drift;
  } else {
    int big = 0;
    for (size_t m = 1; m < V.size(); ++m)
      if (V[m].alpha > V[big].alpha) big = static_cast<int>(m);
    V[big].alpha += drift;
  }
}

void CrfSdmTrainer::pass() {
  for (size_t i = 0; i < data_.size(); ++i) update_example(static_cast<int>(i));
}

double CrfSdmTrainer::dual_objective() const {
  double obj = 0.5 * lambda_ * dot(w_, w_);
  for (const auto& V : active_)
    for (const Member& m : V) obj += m.alpha * safe_log(m.alpha);
  return obj;
}

WeightVector CrfSdmTrainer::recomputed_weights() const {
  WeightVector out(fs_.dim(), 0.0);
  for (const auto& V : active_)
    for (const Member& m : V) m.delta.add_to(out, m.alpha / lambda_);
  return out;
}

std::vector<CrfSdmTrainer::ActiveEntry> CrfSdmTrainer::active_set(int i) const {
  std::vector<ActiveEntry> out;
  out.reserve(active_[i].size());
  for (const Member& m : active_[i]) out.push_back({m.labels, m.alpha});
  return out;
}

}  // namespace seqlab
