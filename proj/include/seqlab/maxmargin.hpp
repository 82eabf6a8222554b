#ifndef SEQLAB_MAXMARGIN_HPP
#define SEQLAB_MAXMARGIN_HPP

#include <vector>

#include "seqlab/core.hpp"
#include "seqlab/inference.hpp"

namespace seqlab {

// Hinge-loss primal value:
//   (lambda/2)||w||^2 + sum_i max_y [l_i(y) - w'delta_f_i(y)]
// with the inner max computed by loss-augmented decoding.
double structural_svm_primal(const WeightVector& w,
                             const std::vector<LabeledPair>& data,
                             const FeatureSpace& fs, double lambda);

struct PairStepInfo {
  bool stepped = false;
  bool clipped = false;
  double tau = 0.0;
  double grad_p_after = 0.0;
  double grad_q_after = 0.0;
};

struct SvmSdmOptions {
  int max_active = 25;
  int max_pair_steps = 5;
  double kkt_tol = 1e-10;       // minimum pair violation worth a step
  double insertion_tol = 1e-10; // decode must beat the active minimum by this
};

// SMO-style coordinate descent on the hinge-loss dual: per-example simplex
// over labelings, w = (1/lambda) sum alpha * delta_f. The per-labeling
// gradient is g(y) = w'delta_f_i(y) - l_i(y); pair steps move mass from the
// largest gradient with support to the smallest, with the closed-form
// clipped step tau = lambda (g_q - g_p) / ||delta_p - delta_q||^2.
class SvmSdmTrainer {
 public:
  SvmSdmTrainer(const std::vector<LabeledPair>& data, const FeatureSpace& fs,
                double lambda, SvmSdmOptions opts = {});

  // Candidate generation + pair steps + cleanup for one example; returns the
  // example's KKT violation before the update (0 when already optimal).
  double update_example(int i);
  // One sweep; returns the largest pre-update violation seen.
  double pass();
  // A single most-violating pair step, exposed for the step-level contract.
  PairStepInfo pair_step(int i);

  double dual_objective() const;    // minimization form of the hinge dual
  double primal_objective() const;  // structural_svm_primal at current w
  const WeightVector& weights() const { return w_; }
  WeightVector recomputed_weights() const;
  double lambda() const { return lambda_; }

  struct ActiveEntry {
    LabelSequence labels;
    double alpha = 0.0;
    double loss = 0.0;
  };
  std::vector<ActiveEntry> active_set(int i) const;

 private:
  struct Member {
    LabelSequence labels;
    double alpha = 0.0;
    SparseVector delta;
    double loss = 0.0;
  };

  void transfer_mass(int i, int from, int to, double tau);
  double gradient_of(const Member& m) const { return m.delta.dot(w_) - m.loss; }

  const std::vector<LabeledPair>& data_;
  FeatureSpace fs_;
  double lambda_;
  SvmSdmOptions opts_;
  WeightVector w_;
  std::vector<std::vector<Member>> active_;  // member 0 is always y_i
};

// ---- 1-slack cutting plane ----

struct CuttingPlaneConstraint {
  SparseVector avg_delta;  // (1/n) sum_i delta_f_i(yhat_i)
  double avg_loss = 0.0;   // (1/n) sum_i l_i(yhat_i)
  double beta = 0.0;       // dual weight
};

struct CuttingPlaneOptions {
  double epsilon = 0.1;  // termination slack, in average-Hamming units
  int max_iter = 1000;
  double qp_tol = 1e-6;  // restricted-dual KKT tolerance
  long qp_max_steps = 200000;
};

// Aggregated-constraint cutting plane: each outer iteration solves the
// restricted dual over the working set (coordinate ascent with the same
// closed-form pair steps as SvmSdmTrainer, plus a zero dummy coordinate that
// carries the unused slack mass), then adds the most violated aggregate
// constraint, stopping when its violation is at most xi + epsilon. The slack
// term is weighted by n so the optimum coincides with the per-example hinge
// primal at the same lambda.
class CuttingPlaneTrainer {
 public:
  CuttingPlaneTrainer(const std::vector<LabeledPair>& data,
                      const FeatureSpace& fs, double lambda,
                      CuttingPlaneOptions opts = {});

  // One outer iteration; returns false once converged (no constraint added).
  bool iterate();
  // Re-solves the restricted dual without touching the working set.
  void solve_working_set() { solve_restricted_dual(); }

  bool converged() const { return converged_; }
  int iterations() const { return iterations_; }
  double xi() const;
  const WeightVector& weights() const { return w_; }
  const std::vector<CuttingPlaneConstraint>& working_set() const {
    return constraints_;
  }
  // Value of the restricted dual (maximization form).
  double restricted_dual_value() const;
  // Restricted primal (lambda/2)||w||^2 + n*xi.
  double restricted_primal_objective() const;
  WeightVector recomputed_weights() const;

 private:
  void solve_restricted_dual();

  const std::vector<LabeledPair>& data_;
  FeatureSpace fs_;
  double lambda_;
  CuttingPlaneOptions opts_;
  WeightVector w_;
  std::vector<CuttingPlaneConstraint> constraints_;
  double dummy_beta_;  // n - sum beta, the inactive-slack mass
  int iterations_ = 0;
  bool converged_ = false;
};

struct CuttingPlaneResult {
  WeightVector w;
  std::vector<CuttingPlaneConstraint> working_set;
  double xi = 0.0;
  int iterations = 0;
  bool converged = false;
};

CuttingPlaneResult cutting_plane_train(const std::vector<LabeledPair>& data,
                                       const FeatureSpace& fs, double lambda,
                                       double epsilon, int max_iter = 1000);

}  // namespace seqlab

#endif  // SEQLAB_MAXMARGIN_HPP
