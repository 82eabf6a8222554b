#ifndef SEQLAB_PERCEPTRON_HPP
#define SEQLAB_PERCEPTRON_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "seqlab/core.hpp"

namespace seqlab {

// Averaged structured perceptron. The visit counter c increments on every
// visit, mistaken or not, and updates accumulate u += c * eta * delta, so the
// per-visit average of the trajectory is (c*w - u) / c without snapshots.
class PerceptronTrainer {
 public:
  // Weights start at zero; pass init_seed for a small random initialization
  // (which breaks the scale invariance in eta and makes calibration bite).
  PerceptronTrainer(const FeatureSpace& fs, double eta,
                    std::optional<unsigned> init_seed = std::nullopt);

  // Decode, update on a mistake, advance the counter. Returns true on update.
  bool step(const LabeledPair& example);
  // One sweep in order; returns the number of mistakes.
  int pass(const std::vector<LabeledPair>& data);

  const WeightVector& weights() const { return w_; }
  WeightVector averaged_weights() const;
  std::int64_t visits() const { return c_; }
  double eta() const { return eta_; }

 private:
  FeatureSpace fs_;
  double eta_;
  WeightVector w_;
  WeightVector u_;
  std::int64_t c_ = 0;
};

// One perceptron pass per candidate eta on the train split; returns the
// candidate whose averaged weights make the fewest token errors on the
// holdout split. Ties go to the smaller eta.
double calibrate_perceptron_rate(const std::vector<LabeledPair>& train_split,
                                 const std::vector<LabeledPair>& holdout_split,
                                 const FeatureSpace& fs,
                                 const std::vector<double>& candidates,
                                 std::optional<unsigned> init_seed = std::nullopt);

// Token-level mistakes of viterbi decoding with w over the data.
int count_token_errors(const WeightVector& w,
                       const std::vector<LabeledPair>& data,
                       const FeatureSpace& fs);

}  // namespace seqlab

#endif  // SEQLAB_PERCEPTRON_HPP
