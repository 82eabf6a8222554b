#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "seqlab/bench.hpp"
#include "seqlab/crf.hpp"
#include "seqlab/data_io.hpp"
#include "seqlab/inference.hpp"
#include "seqlab/maxmargin.hpp"
#include "seqlab/perceptron.hpp"

namespace py = pybind11;
using namespace seqlab;

namespace {

TokenSequence tokens_from_lists(const std::vector<std::vector<int>>& tokens) {
  TokenSequence x;
  x.tokens = tokens;
  return x;
}

py::dict eval_to_dict(const EvalResult& res) {
  py::dict out;
  out["accuracy_pct"] = res.accuracy_pct;
  out["nll_total"] = res.nll_total;
  out["nll_per_seq"] = res.nll_per_seq;
  return out;
}

}  // namespace

PYBIND11_MODULE(_seqlab, m) {
  m.doc() = "linear-chain sequence labeling: exact inference and six trainers";

  py::register_exception<FormatError>(m, "FormatError");
  py::register_exception<TrainingDiverged>(m, "TrainingDiverged");
  py::register_exception<InvalidInput>(m, "InvalidInputError");

  py::class_<Dataset>(m, "Dataset")
      .def_property_readonly("num_sequences", &Dataset::num_sequences)
      .def_property_readonly("num_tokens", &Dataset::num_tokens)
      .def_property_readonly("k", [](const Dataset& d) { return d.dict.k(); })
      .def_property_readonly("d", [](const Dataset& d) { return d.dict.d(); })
      .def_property_readonly(
          "labels",
          [](const Dataset& d) { return d.dict.alphabet.labels(); })
      .def("tokens",
           [](const Dataset& d, int i) { return d.pairs.at(i).x.tokens; })
      .def("gold_labels", [](const Dataset& d, int i) { return d.pairs.at(i).y; });

  m.def("load_conll", [](const std::string& path) { return load_conll(path); },
        py::arg("path"));
  m.def(
      "load_conll_frozen",
      [](const std::string& path, const Dataset& base) {
        return load_conll(path, base.dict);
      },
      py::arg("path"), py::arg("base"),
      "Load with the base dataset's label/feature dictionaries frozen.");
  m.def(
      "generate_synthetic",
      [](int k, int d, int n, int min_len, int max_len, unsigned seed,
         double scale) {
        auto [data, planted] =
            generate_synthetic(k, d, n, min_len, max_len, seed, scale);
        return py::make_tuple(std::move(data), std::move(planted));
      },
      py::arg("k"), py::arg("d"), py::arg("n"), py::arg("min_len") = 2,
      py::arg("max_len") = 6, py::arg("seed") = 1, py::arg("scale") = 1.0);
  m.def("flip_labels", &flip_labels, py::arg("data"), py::arg("prob"),
        py::arg("seed"));

  m.def(
      "viterbi",
      [](const std::vector<double>& w,
         const std::vector<std::vector<int>>& tokens, int k, int d) {
        return viterbi_decode(w, tokens_from_lists(tokens), FeatureSpace{k, d});
      },
      py::arg("weights"), py::arg("tokens"), py::arg("k"), py::arg("d"));
  m.def(
      "log_partition",
      [](const std::vector<double>& w,
         const std::vector<std::vector<int>>& tokens, int k, int d) {
        return forward_backward(w, tokens_from_lists(tokens), FeatureSpace{k, d})
            .log_z;
      },
      py::arg("weights"), py::arg("tokens"), py::arg("k"), py::arg("d"));
  m.def("hamming_loss", &hamming_loss, py::arg("y_true"), py::arg("y"));

  m.def(
      "evaluate",
      [](const std::vector<double>& w, const Dataset& data) {
        return eval_to_dict(evaluate(w, data.pairs, data.space()));
      },
      py::arg("weights"), py::arg("data"));

  m.def(
      "train",
      [](const std::string& algo, const Dataset& train_data, const Dataset& val,
         const Dataset& test, double lambda, int passes, int patience,
         double improve_tol, unsigned seed, bool timing) {
        RunConfig cfg;
        cfg.algo = algorithm_from_name(algo);
        cfg.lambda = lambda;
        cfg.max_passes = passes;
        cfg.patience = patience;
        cfg.improve_tol = improve_tol;
        cfg.seed = seed;
        cfg.timing = timing;
        RunResult res = run(cfg, train_data, val, test);
        py::dict out;
        out["csv"] = res.csv;
        out["stop_pass"] = res.stop_pass;
        out["weights"] = res.stopped_weights;
        out["final_weights"] = res.final_weights;
        return out;
      },
      py::arg("algo"), py::arg("train"), py::arg("val"), py::arg("test"),
      py::arg("lambda_") = 1.0, py::arg("passes") = 20, py::arg("patience") = 3,
      py::arg("improve_tol") = 1e-4, py::arg("seed") = 1,
      py::arg("timing") = true);

  m.def(
      "save_model",
      [](const std::string& path, const Dataset& data,
         const std::vector<double>& w) { save_model(path, data.dict, w); },
      py::arg("path"), py::arg("data"), py::arg("weights"));
  m.def(
      "load_model",
      [](const std::string& path) {
        LoadedModel model = load_model(path);
        py::dict out;
        out["k"] = model.dict.k();
        out["d"] = model.dict.d();
        out["labels"] = model.dict.alphabet.labels();
        out["features"] = model.dict.feature_names;
        out["weights"] = model.w;
        return out;
      },
      py::arg("path"));
}
