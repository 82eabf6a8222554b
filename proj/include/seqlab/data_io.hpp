#ifndef SEQLAB_DATA_IO_HPP
#define SEQLAB_DATA_IO_HPP

#include <iosfwd>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "seqlab/core.hpp"

namespace seqlab {

// Label and feature-name dictionaries; indices are first-appearance order.
struct Dictionary {
  LabelAlphabet alphabet;
  std::vector<std::string> feature_names;
  std::unordered_map<std::string, int> feature_ids;

  int k() const { return alphabet.size(); }
  int d() const { return static_cast<int>(feature_names.size()); }
  FeatureSpace space() const { return FeatureSpace{k(), d()}; }

  int add_feature(const std::string& name);
  int find_feature(const std::string& name) const;  // -1 if absent
};

struct Dataset {
  std::vector<LabeledPair> pairs;
  std::vector<std::vector<std::string>> surfaces;  // raw first-column tokens
  Dictionary dict;

  FeatureSpace space() const { return dict.space(); }
  int num_sequences() const { return static_cast<int>(pairs.size()); }
  int num_tokens() const;
};

// CoNLL-style columns: one token per line as
//   <surface> <feature-name>... <label>
// with a blank line between sequences. The first field is display-only.
// Without a frozen dictionary, labels and features are added in appearance
// order. With one, unknown features are dropped and an unknown label is a
// FormatError carrying the line number; zero-length sequences are skipped
// with a warning on stderr.
Dataset load_conll(const std::string& path);
Dataset load_conll(const std::string& path, const Dictionary& frozen);
Dataset load_conll_stream(std::istream& in, const Dictionary* frozen);

void write_conll(std::ostream& out, const Dataset& data);
void write_conll(const std::string& path, const Dataset& data);

// Samples a planted weight vector (entries ~ scale * N(0,1)), i.i.d. token
// features, and labels every sequence by decoding under the planted weights,
// so the data is exactly separable by construction. Deterministic in seed.
std::pair<Dataset, WeightVector> generate_synthetic(int k, int d, int n,
                                                    int min_len, int max_len,
                                                    unsigned seed,
                                                    double weight_scale);

// Flips each token's label to a uniformly random different label with the
// given probability. Deterministic in seed; no-op when k < 2.
void flip_labels(Dataset& data, double prob, unsigned seed);

// Line-oriented text model format:
//   seqlab 1 <k> <d>
//   k label lines, d feature-name lines, then "<index> <value>" non-zeros
// with 17-significant-digit values, so a round trip is bit-exact.
struct LoadedModel {
  Dictionary dict;
  WeightVector w;
};

void save_model(const std::string& path, const Dictionary& dict,
                const WeightVector& w);
void save_model(std::ostream& out, const Dictionary& dict,
                const WeightVector& w);
LoadedModel load_model(const std::string& path);
LoadedModel load_model(std::istream& in);

}  // namespace seqlab

#endif  // SEQLAB_DATA_IO_HPP
