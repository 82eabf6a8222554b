#include "seqlab/perceptron.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "seqlab/inference.hpp"

namespace seqlab {

PerceptronTrainer::PerceptronTrainer(const FeatureSpace& fs, double eta,
                                     std::optional<unsigned> init_seed)
    : fs_(fs), eta_(eta) {
  if (eta <= 0.0) throw InvalidInput("eta must be > 0");
  w_.assign(fs.dim(), 0.0);
  u_.assign(fs.dim(), 0.0);
  if (init_seed) {
    std::mt19937 rng(*init_seed);
    auto uniform01 = [&rng]() {
      return (static_cast<double>(rng()) + 0.5) / 4294967296.0;
    };
    for (double& v : w_) {
      double u1 = uniform01();
      double u2 = uniform01();
      v = 0.01 * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }
  }
}

bool PerceptronTrainer::step(const LabeledPair& example) {
  LabelSequence predicted = viterbi_decode(w_, example.x, fs_);
  bool mistake = predicted != example.y;
  if (mistake) {
    SparseVector delta = joint_feature(example.x, example.y, fs_)
                             .minus(joint_feature(example.x, predicted, fs_));
    delta.add_to(w_, eta_);
    delta.add_to(u_, static_cast<double>(c_) * eta_);
  }
  ++c_;
  return mistake;
}

int PerceptronTrainer::pass(const std::vector<LabeledPair>& data) {
  int mistakes = 0;
  for (const LabeledPair& ex : data)
    if (step(ex)) ++mistakes;
  return mistakes;
}

WeightVector PerceptronTrainer::averaged_weights() const {
  if (c_ == 0) return w_;
  WeightVector out(w_.size());
  double c = static_cast<double>(c_);
  for (size_t i = 0; i < w_.size(); ++i) out[i] = (c * w_[i] - u_[i]) / c;
  return out;
}

int count_token_errors(const WeightVector& w,
                       const std::vector<LabeledPair>& data,
                       const FeatureSpace& fs) {
  int errors = 0;
  for (const LabeledPair& ex : data)
    errors += hamming_loss(ex.y, viterbi_decode(w, ex.x, fs));
  return errors;
}

double calibrate_perceptron_rate(const std::vector<LabeledPair>& train_split,
                                 const std::vector<LabeledPair>& holdout_split,
                                 const FeatureSpace& fs,
                                 const std::vector<double>& candidates,
                                 std::optional<unsigned> init_seed) {
  if (train_split.empty() || holdout_split.empty())
    throw InvalidInput("calibration needs non-empty train and holdout splits");
  if (candidates.empty()) throw InvalidInput("no learning-rate candidates");

  double best_eta = 0.0;
  int best_errors = std::numeric_limits<int>::max();
  for (double eta : candidates) {
    if (eta <= 0.0) continue;
    PerceptronTrainer trainer(fs, eta, init_seed);
    trainer.pass(train_split);
    int errors = count_token_errors(trainer.averaged_weights(), holdout_split, fs);
    if (errors < best_errors || (errors == best_errors && eta < best_eta)) {
      best_errors = errors;
      best_eta = eta;
    }
  }
  if (best_eta == 0.0) throw InvalidInput("no positive candidate eta");
  return best_eta;
}

}  // namespace seqlab
