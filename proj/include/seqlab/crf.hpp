#ifndef SEQLAB_CRF_HPP
#define SEQLAB_CRF_HPP

#include <cstdint>
#include <deque>
#include <vector>

#include "seqlab/core.hpp"
#include "seqlab/inference.hpp"

namespace seqlab {

struct ObjectiveGradient {
  double objective = 0.0;
  WeightVector gradient;
};

// Regularized negative log-likelihood:
//   (lambda/2) ||w||^2 - sum_i log p(y_i | x_i; w)
double crf_objective(const WeightVector& w, const std::vector<LabeledPair>& data,
                     const FeatureSpace& fs, double lambda);

// Objective plus its exact gradient lambda*w - sum_i (f_i - E f).
ObjectiveGradient crf_objective_and_gradient(const WeightVector& w,
                                             const std::vector<LabeledPair>& data,
                                             const FeatureSpace& fs,
                                             double lambda);

// ---- Averaged stochastic gradient descent ----
//
// Optimizes (lambda/2)||w||^2 + sum_i -log p(y_i|x_i;w) over a dataset of
// num_examples sequences, so the per-visit regularizer is lambda/num_examples
// (the batch shrinkage split across one pass). Weights are stored as
// w = wscale * base and the running average as wbar = vscale*avg + cross*base,
// so one step touches only the sparse gradient's entries plus three scalars.
// gamma_t = gamma0 / (1 + gamma0*lambda_visit*t).
class AsgdTrainer {
 public:
  AsgdTrainer(const FeatureSpace& fs, double lambda, double gamma0,
              int num_examples = 1);

  // One stochastic step on a single example; throws TrainingDiverged when the
  // update leaves the finite range (lower gamma0).
  void step(const LabeledPair& example);

  std::int64_t steps() const { return t_; }
  double lambda() const { return lambda_; }
  double gamma0() const { return gamma0_; }

  WeightVector weights() const;
  WeightVector averaged_weights() const;

 private:
  void renormalize();

  FeatureSpace fs_;
  double lambda_;
  double lambda_visit_;
  double gamma0_;
  std::int64_t t_ = 0;
  double wscale_ = 1.0;
  double vscale_ = 1.0;
  double cross_ = 0.0;
  WeightVector base_;
  WeightVector avg_;
};

// Runs one ASGD epoch per candidate gamma0 on the sample and returns the
// candidate whose averaged weights give the lowest objective. Ties keep the
// earlier candidate; throws CalibrationFailed when every candidate diverges.
double calibrate_learning_rate(const std::vector<LabeledPair>& sample,
                               const FeatureSpace& fs, double lambda,
                               const std::vector<double>& candidates);

// ---- Batch L-BFGS ----

struct LbfgsOptions {
  int memory = 10;
  int max_iter = 200;
  double tol = 1e-6;           // stop when ||g||_inf < tol * max(1, ||w||_inf)
  double sufficient_decrease = 1e-4;
  double backtrack_factor = 0.5;
  int max_backtracks = 50;
};

struct LbfgsResult {
  WeightVector w;
  double objective = 0.0;
  double grad_inf_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  bool line_search_failed = false;
};

// Two-loop-recursion L-BFGS with a backtracking Armijo line search.
// step() performs one accepted iteration; done() reports convergence or a
// failed line search (best iterate is kept either way).
class LbfgsOptimizer {
 public:
  LbfgsOptimizer(const std::vector<LabeledPair>& data, const FeatureSpace& fs,
                 double lambda, LbfgsOptions opts = {});

  bool step();
  bool done() const;

  const WeightVector& weights() const { return w_; }
  double objective() const { return objective_; }
  double grad_inf_norm() const;
  bool converged() const { return converged_; }
  bool line_search_failed() const { return line_search_failed_; }
  int iterations() const { return iterations_; }

 private:
  WeightVector search_direction() const;

  const std::vector<LabeledPair>& data_;
  FeatureSpace fs_;
  double lambda_;
  LbfgsOptions opts_;
  WeightVector w_;
  WeightVector grad_;
  double objective_ = 0.0;
  std::deque<WeightVector> s_hist_;
  std::deque<WeightVector> y_hist_;
  std::deque<double> rho_hist_;
  int iterations_ = 0;
  bool converged_ = false;
  bool line_search_failed_ = false;
};

LbfgsResult lbfgs_train(const std::vector<LabeledPair>& data,
                        const FeatureSpace& fs, double lambda, int memory = 10,
                        int max_iter = 200, double tol = 1e-6);

// ---- Sequential dual method on the entropic dual ----
//
// Minimizes (lambda/2)||w(a)||^2 + sum a*log(a) over per-example simplices,
// keeping a truncated active set V_i per example. Candidate generation is a
// plain Viterbi decode; pair steps use a safeguarded Newton on the 1-D
// restriction with a bisection fallback.
struct CrfSdmOptions {
  double eta = 1e-18;    // active-set truncation threshold
  int max_active = 25;   // cap on |V_i|
  int max_pair_steps = 5;
  double kkt_tol = 1e-10;
  int newton_max_iter = 50;
};

class CrfSdmTrainer {
 public:
  CrfSdmTrainer(const std::vector<LabeledPair>& data, const FeatureSpace& fs,
                double lambda, CrfSdmOptions opts = {});

  void update_example(int i);
  void pass();

  double dual_objective() const;
  const WeightVector& weights() const { return w_; }
  // Reference (1/lambda) sum alpha * delta_f, recomputed from scratch.
  WeightVector recomputed_weights() const;
  double lambda() const { return lambda_; }

  struct ActiveEntry {
    LabelSequence labels;
    double alpha = 0.0;
  };
  std::vector<ActiveEntry> active_set(int i) const;

 private:
  struct Member {
    LabelSequence labels;
    double alpha = 0.0;
    SparseVector delta;  // f(x_i,y_i) - f(x_i,y)
  };

  // Moves tau of mass from `from` to `to` in example i, keeping w in sync.
  void transfer_mass(int i, int from, int to, double tau);
  double solve_pair_step(const Member& p, const Member& q) const;

  const std::vector<LabeledPair>& data_;
  FeatureSpace fs_;
  double lambda_;
  CrfSdmOptions opts_;
  WeightVector w_;
  std::vector<std::vector<Member>> active_;  // member 0 is always y_i
};

}  // namespace seqlab

#endif  // SEQLAB_CRF_HPP
