#include "seqlab/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "seqlab/inference.hpp"

namespace seqlab {

int Dictionary::add_feature(const std::string& name) {
  auto it = feature_ids.find(name);
  if (it != feature_ids.end()) return it->second;
  int id = static_cast<int>(feature_names.size());
  feature_names.push_back(name);
  feature_ids.emplace(name, id);
  return id;
}

int Dictionary::find_feature(const std::string& name) const {
  auto it = feature_ids.find(name);
  return it == feature_ids.end() ? -1 : it->second;
}

int Dataset::num_tokens() const {
  int total = 0;
  for (const LabeledPair& p : pairs) total += p.x.length();
  return total;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) fields.push_back(std::move(tok));
  return fields;
}

}  // namespace

Dataset load_conll_stream(std::istream& in, const Dictionary* frozen) {
  Dataset out;
  if (frozen) out.dict = *frozen;

  std::vector<std::vector<int>> tokens;
  LabelSequence labels;
  std::vector<std::string> surface;
  bool saw_separator = false;  // a blank line since the last sequence ended
  int line_no = 0;

  auto flush = [&](bool from_blank) {
    if (!tokens.empty()) {
      LabeledPair pair;
      pair.x.tokens = std::move(tokens);
      pair.y = std::move(labels);
      out.pairs.push_back(std::move(pair));
      out.surfaces.push_back(std::move(surface));
      saw_separator = false;
    } else if (from_blank && saw_separator) {
      std::cerr << "warning: skipping zero-length sequence at line " << line_no
                << "\n";
    }
    tokens.clear();
    labels.clear();
    surface.clear();
  };

  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> fields = split_fields(line);
    if (fields.empty()) {
      flush(true);
      saw_separator = true;
      continue;
    }
    if (fields.size() < 2)
      throw FormatError("token line needs a surface form and a label", line_no);

    surface.push_back(fields.front());
    const std::string& label = fields.back();
    int label_id;
    if (frozen) {
      label_id = out.dict.alphabet.find(label);
      if (label_id < 0)
        throw FormatError("label '" + label + "' not in the frozen dictionary",
                          line_no);
    } else {
      label_id = out.dict.alphabet.add(label);
    }
    labels.push_back(label_id);

    std::vector<int> feats;
    for (size_t f = 1; f + 1 < fields.size(); ++f) {
      int id = frozen ? out.dict.find_feature(fields[f])
                      : out.dict.add_feature(fields[f]);
      if (id >= 0) feats.push_back(id);
    }
    std::sort(feats.begin(), feats.end());
    feats.erase(std::unique(feats.begin(), feats.end()), feats.end());
    tokens.push_back(std::move(feats));
  }
  flush(false);
  return out;
}

Dataset load_conll(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "'");
  return load_conll_stream(in, nullptr);
}

Dataset load_conll(const std::string& path, const Dictionary& frozen) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "'");
  return load_conll_stream(in, &frozen);
}

void write_conll(std::ostream& out, const Dataset& data) {
  for (size_t i = 0; i < data.pairs.size(); ++i) {
    const LabeledPair& p = data.pairs[i];
    for (int j = 0; j < p.x.length(); ++j) {
      if (i < data.surfaces.size() && j < static_cast<int>(data.surfaces[i].size()))
        out << data.surfaces[i][j];
      else
        out << "tok" << j;
      for (int t : p.x.tokens[j]) out << ' ' << data.dict.feature_names[t];
      out << ' ' << data.dict.alphabet.name(p.y[j]) << '\n';
    }
    out << '\n';
  }
}

void write_conll(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  write_conll(out, data);
}

std::pair<Dataset, WeightVector> generate_synthetic(int k, int d, int n,
                                                    int min_len, int max_len,
                                                    unsigned seed,
                                                    double weight_scale) {
  if (k < 1 || d < 1 || n < 1) throw InvalidInput("k, d, n must all be >= 1");
  if (min_len < 1 || max_len < min_len) throw InvalidInput("bad length range");

  Dataset data;
  for (int c = 0; c < k; ++c) data.dict.alphabet.add("y" + std::to_string(c));
  for (int t = 0; t < d; ++t) data.dict.add_feature("f" + std::to_string(t));
  FeatureSpace fs = data.dict.space();

  std::mt19937 rng(seed);
  auto uniform01 = [&rng]() {
    return (static_cast<double>(rng()) + 0.5) / 4294967296.0;
  };
  // Box-Muller keeps the stream identical across standard libraries.
  auto normal = [&]() {
    double u1 = uniform01(), u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  };

  WeightVector planted(fs.dim());
  for (double& v : planted) v = weight_scale * normal();

  double feature_prob = std::min(1.0, 3.0 / d);
  for (int i = 0; i < n; ++i) {
    int L = min_len + static_cast<int>(rng() % (max_len - min_len + 1));
    LabeledPair pair;
    pair.x.tokens.resize(L);
    std::vector<std::string> surface(L);
    for (int j = 0; j < L; ++j) {
      for (int t = 0; t < d; ++t)
        if (uniform01() < feature_prob) pair.x.tokens[j].push_back(t);
      surface[j] = "tok" + std::to_string(j);
    }
    pair.y = viterbi_decode(planted, pair.x, fs);
    data.pairs.push_back(std::move(pair));
    data.surfaces.push_back(std::move(surface));
  }
  return {std::move(data), std::move(planted)};
}

void flip_labels(Dataset& data, double prob, unsigned seed) {
  if (prob < 0.0 || prob > 1.0) throw InvalidInput("noise probability in [0,1]");
  const int k = data.dict.k();
  if (k < 2 || prob == 0.0) return;
  std::mt19937 rng(seed);
  auto uniform01 = [&rng]() {
    return (static_cast<double>(rng()) + 0.5) / 4294967296.0;
  };
  for (LabeledPair& p : data.pairs)
    for (int& y : p.y)
      if (uniform01() < prob) {
        int offset = 1 + static_cast<int>(rng() % static_cast<unsigned>(k - 1));
        y = (y + offset) % k;
      }
}

void save_model(std::ostream& out, const Dictionary& dict,
                const WeightVector& w) {
  FeatureSpace fs = dict.space();
  if (static_cast<int>(w.size()) != fs.dim())
    throw InvalidInput("weight vector dimension differs from the dictionary");
  out << "seqlab 1 " << dict.k() << ' ' << dict.d() << '\n';
  for (int c = 0; c < dict.k(); ++c) out << dict.alphabet.name(c) << '\n';
  for (const std::string& f : dict.feature_names) out << f << '\n';
  char buf[64];
  for (size_t i = 0; i < w.size(); ++i) {
    if (w[i] == 0.0) continue;
    std::snprintf(buf, sizeof buf, "%zu %.17g\n", i, w[i]);
    out << buf;
  }
}

void save_model(const std::string& path, const Dictionary& dict,
                const WeightVector& w) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  save_model(out, dict, w);
}

LoadedModel load_model(std::istream& in) {
  std::string magic;
  int version = 0, k = 0, d = 0;
  if (!(in >> magic >> version >> k >> d) || magic != "seqlab")
    throw FormatError("not a seqlab model file", 1);
  if (version != 1)
    throw FormatError("unsupported model version " + std::to_string(version), 1);
  if (k < 1 || d < 0) throw FormatError("bad model dimensions", 1);

  LoadedModel model;
  std::string name;
  for (int c = 0; c < k; ++c) {
    if (!(in >> name)) throw FormatError("truncated model file: labels");
    model.dict.alphabet.add(name);
  }
  if (model.dict.k() != k)
    throw FormatError("duplicate label names in model file");
  for (int t = 0; t < d; ++t) {
    if (!(in >> name)) throw FormatError("truncated model file: features");
    model.dict.add_feature(name);
  }
  if (model.dict.d() != d)
    throw FormatError("duplicate feature names in model file");

  model.w.assign(model.dict.space().dim(), 0.0);
  long long index;
  std::string value;
  while (in >> index) {
    if (!(in >> value)) throw FormatError("truncated model file: weights");
    if (index < 0 || index >= static_cast<long long>(model.w.size()))
      throw FormatError("weight index out of range");
    model.w[index] = std::strtod(value.c_str(), nullptr);
  }
  return model;
}

LoadedModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "'");
  return load_model(in);
}

}  // namespace seqlab
