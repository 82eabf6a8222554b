#ifndef SEQLAB_BENCH_HPP
#define SEQLAB_BENCH_HPP

#include <string>
#include <vector>

#include "seqlab/core.hpp"
#include "seqlab/data_io.hpp"

namespace seqlab {

enum class Algorithm { kAsgd, kLbfgs, kCrfSdm, kSvmSdm, kCuttingPlane, kPerceptron };

Algorithm algorithm_from_name(const std::string& name);
const char* algorithm_name(Algorithm algo);
// Likelihood-side methods track validation NLL (down); margin-side methods
// and the perceptron track validation accuracy (up).
bool uses_likelihood_metric(Algorithm algo);

struct EvalResult {
  double accuracy_pct = 0.0;
  double nll_total = 0.0;
  double nll_per_seq = 0.0;
};

// Token accuracy via Viterbi plus total and per-sequence test NLL.
EvalResult evaluate(const WeightVector& w, const std::vector<LabeledPair>& test,
                    const FeatureSpace& fs);

// True once the running best has gone `patience` consecutive passes without
// a relative improvement above tol (accuracy up, NLL down).
bool should_stop(const std::vector<double>& history, int patience, double tol,
                 bool higher_is_better);

struct RunConfig {
  Algorithm algo = Algorithm::kAsgd;
  double lambda = 1.0;
  int max_passes = 50;
  int patience = 3;
  double improve_tol = 1e-4;
  unsigned seed = 1;
  double gamma0 = 0.0;       // 0 = calibrate on a sample
  double eta = 0.0;          // 0 = calibrate on an 80/20 split (perceptron)
  double epsilon = 0.1;      // cutting-plane termination slack
  double eta_trunc = 1e-18;  // crf-sdm active-set threshold
  int max_active = 25;
  int pair_steps = 5;  // SDM inner pair-optimization steps per example visit
  int lbfgs_memory = 10;
  double tol = 1e-6;         // lbfgs gradient tolerance
  bool timing = true;        // false writes cpu_s = 0 for diffable traces
};

struct TraceRecord {
  int pass = 0;
  double cpu_s = 0.0;  // cumulative training cpu, evaluation excluded
  double val_metric = 0.0;
  double test_acc = 0.0;
  double test_nll_total = 0.0;
  double test_nll_avg = 0.0;
  bool stopped = false;
};

struct RunResult {
  std::vector<TraceRecord> trace;
  WeightVector final_weights;
  WeightVector stopped_weights;  // snapshot at the stop marker
  int stop_pass = 0;
  std::string csv;
};

// The benchmark protocol: evaluate every pass (untimed), mark the
// validation stopping point once, keep training to max_passes.
RunResult run(const RunConfig& config, const Dataset& train, const Dataset& val,
              const Dataset& test);

struct SweepRow {
  double lambda = 0.0;
  bool ok = false;
  std::string error;
  int stop_pass = 0;
  EvalResult at_stop;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::string csv;
};

inline const std::vector<double>& default_lambda_grid() {
  static const std::vector<double> grid{1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3};
  return grid;
}

// One run per lambda, reporting the metrics at each run's stopping point.
// A failed run becomes an error row and the sweep continues.
SweepResult sweep_lambda(const RunConfig& base, const std::vector<double>& grid,
                         const Dataset& train, const Dataset& val,
                         const Dataset& test);

}  // namespace seqlab

#endif  // SEQLAB_BENCH_HPP
