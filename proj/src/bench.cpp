#include "seqlab/bench.hpp"

#include <cmath>
#include <cstdio>
#include <ctime>
#include <memory>
#include <random>
#include <sstream>

#include "seqlab/crf.hpp"
#include "seqlab/inference.hpp"
#include "seqlab/maxmargin.hpp"
#include "seqlab/perceptron.hpp"

namespace seqlab {

Algorithm algorithm_from_name(const std::string& name) {
  if (name == "asgd") return Algorithm::kAsgd;
  if (name == "lbfgs") return Algorithm::kLbfgs;
  if (name == "crf-sdm") return Algorithm::kCrfSdm;
  if (name == "svm-sdm") return Algorithm::kSvmSdm;
  if (name == "cp") return Algorithm::kCuttingPlane;
  if (name == "perceptron") return Algorithm::kPerceptron;
  throw InvalidInput("unknown algorithm '" + name + "'");
}

const char* algorithm_name(Algorithm algo) {
  switch (algo) {
    case Algorithm::kAsgd: return "asgd";
    case Algorithm::kLbfgs: return "lbfgs";
    case Algorithm::kCrfSdm: return "crf-sdm";
    case Algorithm::kSvmSdm: return "svm-sdm";
    case Algorithm::kCuttingPlane: return "cp";
    case Algorithm::kPerceptron: return "perceptron";
  }
  return "?";
}

bool uses_likelihood_metric(Algorithm algo) {
  return algo == Algorithm::kAsgd || algo == Algorithm::kLbfgs ||
         algo == Algorithm::kCrfSdm;
}

EvalResult evaluate(const WeightVector& w, const std::vector<LabeledPair>& test,
                    const FeatureSpace& fs) {
  if (test.empty()) throw InvalidInput("evaluation set is empty");
  long correct = 0, total = 0;
  double nll = 0.0;
  for (const LabeledPair& ex : test) {
    LabelSequence pred = viterbi_decode(w, ex.x, fs);
    for (size_t j = 0; j < pred.size(); ++j)
      if (pred[j] == ex.y[j]) ++correct;
    total += ex.x.length();
    nll -= sequence_log_likelihood(w, ex, fs);
  }
  EvalResult res;
  res.accuracy_pct = 100.0 * static_cast<double>(correct) / total;
  res.nll_total = nll;
  res.nll_per_seq = nll / static_cast<double>(test.size());
  return res;
}

bool should_stop(const std::vector<double>& history, int patience, double tol,
                 bool higher_is_better) {
  if (history.empty()) throw InvalidInput("empty metric history");
  if (patience < 1) throw InvalidInput("patience must be >= 1");
  double best = history.front();
  int stagnant = 0;
  for (size_t t = 1; t < history.size(); ++t) {
    double gain = higher_is_better ? history[t] - best : best - history[t];
    if (gain > tol * std::max(std::abs(best), 1e-12))
      stagnant = 0;
    else
      ++stagnant;
    bool better = higher_is_better ? history[t] > best : history[t] < best;
    if (better) best = history[t];
  }
  return stagnant >= patience;
}

namespace {

// One training unit per pass, uniform across the six algorithms.
struct PassTrainer {
  virtual ~PassTrainer() = default;
  virtual void train_pass() = 0;
  virtual WeightVector eval_weights() const = 0;
  virtual bool exhausted() const { return false; }
};

void shuffle_order(std::vector<int>& order, std::mt19937& rng) {
  for (int i = static_cast<int>(order.size()) - 1; i > 0; --i)
    std::swap(order[i], order[rng() % static_cast<unsigned>(i + 1)]);
}

struct AsgdPass : PassTrainer {
  const std::vector<LabeledPair>& data;
  AsgdTrainer trainer;
  std::vector<int> order;
  std::mt19937 rng;

  AsgdPass(const std::vector<LabeledPair>& d, const FeatureSpace& fs,
           double lambda, double gamma0, unsigned seed)
      : data(d),
        trainer(fs, lambda, gamma0, static_cast<int>(d.size())),
        rng(seed) {
    order.resize(data.size());
    for (size_t i = 0; i < data.size(); ++i) order[i] = static_cast<int>(i);
  }

  void train_pass() override {
    shuffle_order(order, rng);
    for (int i : order) trainer.step(data[i]);
  }
  WeightVector eval_weights() const override {
    return trainer.averaged_weights();
  }
};

struct LbfgsPass : PassTrainer {
  LbfgsOptimizer opt;
  LbfgsPass(const std::vector<LabeledPair>& d, const FeatureSpace& fs,
            double lambda, const LbfgsOptions& opts)
      : opt(d, fs, lambda, opts) {}
  void train_pass() override { opt.step(); }
  WeightVector eval_weights() const override { return opt.weights(); }
  bool exhausted() const override { return opt.done(); }
};

struct CrfSdmPass : PassTrainer {
  CrfSdmTrainer trainer;
  CrfSdmPass(const std::vector<LabeledPair>& d, const FeatureSpace& fs,
             double lambda, const CrfSdmOptions& opts)
      : trainer(d, fs, lambda, opts) {}
  void train_pass() override { trainer.pass(); }
  WeightVector eval_weights() const override { return trainer.weights(); }
};

struct SvmSdmPass : PassTrainer {
  SvmSdmTrainer trainer;
  SvmSdmPass(const std::vector<LabeledPair>& d, const FeatureSpace& fs,
             double lambda, const SvmSdmOptions& opts)
      : trainer(d, fs, lambda, opts) {}
  void train_pass() override { trainer.pass(); }
  WeightVector eval_weights() const override { return trainer.weights(); }
};

struct CuttingPlanePass : PassTrainer {
  CuttingPlaneTrainer trainer;
  CuttingPlanePass(const std::vector<LabeledPair>& d, const FeatureSpace& fs,
                   double lambda, const CuttingPlaneOptions& opts)
      : trainer(d, fs, lambda, opts) {}
  void train_pass() override { trainer.iterate(); }
  WeightVector eval_weights() const override { return trainer.weights(); }
  bool exhausted() const override { return trainer.converged(); }
};

struct PerceptronPass : PassTrainer {
  const std::vector<LabeledPair>& data;
  PerceptronTrainer trainer;
  std::vector<int> order;
  std::mt19937 rng;

  PerceptronPass(const std::vector<LabeledPair>& d, const FeatureSpace& fs,
                 double eta, unsigned seed)
      : data(d), trainer(fs, eta), rng(seed) {
    order.resize(data.size());
    for (size_t i = 0; i < data.size(); ++i) order[i] = static_cast<int>(i);
  }
  void train_pass() override {
    shuffle_order(order, rng);
    for (int i : order) trainer.step(data[i]);
  }
  WeightVector eval_weights() const override {
    return trainer.averaged_weights();
  }
};

std::unique_ptr<PassTrainer> make_trainer(const RunConfig& cfg,
                                          const Dataset& train) {
  const auto& data = train.pairs;
  FeatureSpace fs = train.space();
  switch (cfg.algo) {
    case Algorithm::kAsgd: {
      double gamma0 = cfg.gamma0;
      if (gamma0 <= 0.0) {
        size_t m = std::min<size_t>(data.size(), 256);
        std::vector<LabeledPair> sample(data.begin(), data.begin() + m);
        gamma0 = calibrate_learning_rate(sample, fs, cfg.lambda,
                                         {1e-3, 1e-2, 1e-1, 1.0, 10.0});
      }
      return std::make_unique<AsgdPass>(data, fs, cfg.lambda, gamma0, cfg.seed);
    }
    case Algorithm::kLbfgs: {
      LbfgsOptions opts;
      opts.memory = cfg.lbfgs_memory;
      opts.max_iter = cfg.max_passes;
      opts.tol = cfg.tol;
      return std::make_unique<LbfgsPass>(data, fs, cfg.lambda, opts);
    }
    case Algorithm::kCrfSdm: {
      CrfSdmOptions opts;
      opts.eta = cfg.eta_trunc;
      opts.max_active = cfg.max_active;
      opts.max_pair_steps = cfg.pair_steps;
      return std::make_unique<CrfSdmPass>(data, fs, cfg.lambda, opts);
    }
    case Algorithm::kSvmSdm: {
      SvmSdmOptions opts;
      opts.max_active = cfg.max_active;
      opts.max_pair_steps = cfg.pair_steps;
      return std::make_unique<SvmSdmPass>(data, fs, cfg.lambda, opts);
    }
    case Algorithm::kCuttingPlane: {
      CuttingPlaneOptions opts;
      opts.epsilon = cfg.epsilon;
      opts.max_iter = cfg.max_passes;
      return std::make_unique<CuttingPlanePass>(data, fs, cfg.lambda, opts);
    }
    case Algorithm::kPerceptron: {
      double eta = cfg.eta;
      if (eta <= 0.0) {
        size_t cut = std::max<size_t>(1, data.size() * 8 / 10);
        if (cut == data.size()) cut = data.size() - 1;
        if (cut == 0)
          eta = 1.0;  // single-example dataset: nothing to hold out
        else {
          std::vector<LabeledPair> tr(data.begin(), data.begin() + cut);
          std::vector<LabeledPair> ho(data.begin() + cut, data.end());
          eta = calibrate_perceptron_rate(tr, ho, fs,
                                          {1e-3, 1e-2, 1e-1, 1.0, 10.0});
        }
      }
      return std::make_unique<PerceptronPass>(data, fs, eta, cfg.seed);
    }
  }
  throw InvalidInput("unknown algorithm");
}

double cpu_seconds() {
  return static_cast<double>(std::clock()) / CLOCKS_PER_SEC;
}

std::string render_csv(const RunConfig& cfg, const std::vector<TraceRecord>& trace) {
  const char* pass_unit = "epoch";
  if (cfg.algo == Algorithm::kLbfgs) pass_unit = "lbfgs_iteration";
  if (cfg.algo == Algorithm::kCuttingPlane) pass_unit = "cutting_plane_iteration";
  const char* metric =
      uses_likelihood_metric(cfg.algo) ? "val_nll_total" : "val_accuracy";
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "# seqlab trace algo=%s lambda=%.10g seed=%u pass_unit=%s "
                "val_metric=%s\n",
                algorithm_name(cfg.algo), cfg.lambda, cfg.seed, pass_unit,
                metric);
  out << buf;
  out << "pass,cpu_s,val_metric,test_acc,test_nll_total,test_nll_avg,stopped\n";
  for (const TraceRecord& r : trace) {
    std::snprintf(buf, sizeof buf, "%d,%.6f,%.10g,%.10g,%.10g,%.10g,%d\n",
                  r.pass, r.cpu_s, r.val_metric, r.test_acc, r.test_nll_total,
                  r.test_nll_avg, r.stopped ? 1 : 0);
    out << buf;
  }
  return out.str();
}

}  // namespace

RunResult run(const RunConfig& config, const Dataset& train, const Dataset& val,
              const Dataset& test) {
  if (train.pairs.empty()) throw InvalidInput("training set is empty");
  if (val.pairs.empty()) throw InvalidInput("validation set is empty");
  if (test.pairs.empty()) throw InvalidInput("test set is empty");
  if (config.max_passes < 0) throw InvalidInput("max_passes must be >= 0");
  if (config.patience < 1) throw InvalidInput("patience must be >= 1");
  if (config.lambda <= 0.0 && config.algo != Algorithm::kPerceptron)
    throw InvalidInput("lambda must be > 0 for objective-based methods");

  FeatureSpace fs = train.space();
  const bool likelihood = uses_likelihood_metric(config.algo);

  RunResult res;
  std::vector<double> history;

  auto record_pass = [&](int pass, double cpu, const WeightVector& w) {
    EvalResult val_eval = evaluate(w, val.pairs, fs);
    EvalResult test_eval = evaluate(w, test.pairs, fs);
    TraceRecord rec;
    rec.pass = pass;
    rec.cpu_s = config.timing ? cpu : 0.0;
    rec.val_metric = likelihood ? val_eval.nll_total : val_eval.accuracy_pct;
    rec.test_acc = test_eval.accuracy_pct;
    rec.test_nll_total = test_eval.nll_total;
    rec.test_nll_avg = test_eval.nll_per_seq;
    history.push_back(rec.val_metric);
    res.trace.push_back(rec);
  };

  WeightVector initial(fs.dim(), 0.0);
  record_pass(0, 0.0, initial);
  res.final_weights = initial;

  bool marked = false;
  if (config.max_passes > 0) {
    double cpu = 0.0;
    double t0 = cpu_seconds();
    std::unique_ptr<PassTrainer> trainer = make_trainer(config, train);
    cpu += cpu_seconds() - t0;  // calibration counts as training time

    for (int pass = 1; pass <= config.max_passes; ++pass) {
      t0 = cpu_seconds();
      trainer->train_pass();
      cpu += cpu_seconds() - t0;
      WeightVector w = trainer->eval_weights();
      record_pass(pass, cpu, w);
      res.final_weights = w;
      if (!marked &&
          should_stop(history, config.patience, config.improve_tol,
                      !likelihood)) {
        res.trace.back().stopped = true;
        res.stopped_weights = w;
        res.stop_pass = pass;
        marked = true;
      }
      if (trainer->exhausted()) break;
    }
  }

  if (!marked) {
    res.trace.back().stopped = true;
    res.stopped_weights = res.final_weights;
    res.stop_pass = res.trace.back().pass;
  }
  res.csv = render_csv(config, res.trace);
  return res;
}

SweepResult sweep_lambda(const RunConfig& base, const std::vector<double>& grid,
                         const Dataset& train, const Dataset& val,
                         const Dataset& test) {
  if (grid.empty()) throw InvalidInput("empty lambda grid");
  SweepResult out;
  std::ostringstream csv;
  csv << "lambda,status,stop_pass,test_acc,test_nll_total,test_nll_avg\n";
  char buf[256];
  for (double lambda : grid) {
    SweepRow row;
    row.lambda = lambda;
    RunConfig cfg = base;
    cfg.lambda = lambda;
    try {
      RunResult res = run(cfg, train, val, test);
      const TraceRecord* at = &res.trace.back();
      for (const TraceRecord& r : res.trace)
        if (r.stopped) at = &r;
      row.ok = true;
      row.stop_pass = at->pass;
      row.at_stop.accuracy_pct = at->test_acc;
      row.at_stop.nll_total = at->test_nll_total;
      row.at_stop.nll_per_seq = at->test_nll_avg;
      std::snprintf(buf, sizeof buf, "%.10g,ok,%d,%.10g,%.10g,%.10g\n", lambda,
                    row.stop_pass, row.at_stop.accuracy_pct,
                    row.at_stop.nll_total, row.at_stop.nll_per_seq);
      csv << buf;
    } catch (const Error& e) {
      row.ok = false;
      row.error = e.what();
      std::snprintf(buf, sizeof buf, "%.10g,error,,,,\n", lambda);
      csv << buf;
    }
    out.rows.push_back(std::move(row));
  }
  out.csv = csv.str();
  return out;
}

}  // namespace seqlab
