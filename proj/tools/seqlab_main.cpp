#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "seqlab/bench.hpp"
#include "seqlab/data_io.hpp"
#include "seqlab/inference.hpp"

namespace {

using namespace seqlab;

struct DataArgs {
  std::string train_path, val_path, test_path;
};

void add_data_flags(CLI::App* cmd, DataArgs& args) {
  cmd->add_option("--train", args.train_path, "training data (CoNLL columns)")
      ->required();
  cmd->add_option("--val", args.val_path, "validation data")->required();
  cmd->add_option("--test", args.test_path, "test data")->required();
}

void add_run_flags(CLI::App* cmd, RunConfig& cfg, std::string& algo_name) {
  cmd->add_option("--algo", algo_name,
                  "asgd | lbfgs | crf-sdm | svm-sdm | cp | perceptron")
      ->required();
  cmd->add_option("--lambda", cfg.lambda, "regularization weight");
  cmd->add_option("--passes", cfg.max_passes, "maximum training passes");
  cmd->add_option("--patience", cfg.patience, "stagnant passes before the stop marker");
  cmd->add_option("--improve-tol", cfg.improve_tol,
                  "relative validation improvement below this is stagnation");
  cmd->add_option("--seed", cfg.seed, "random seed");
  cmd->add_option("--gamma0", cfg.gamma0, "asgd learning rate (0 = calibrate)");
  cmd->add_option("--eta", cfg.eta, "perceptron learning rate (0 = calibrate)");
  cmd->add_option("--epsilon", cfg.epsilon, "cutting-plane slack tolerance");
  cmd->add_option("--eta-trunc", cfg.eta_trunc, "crf-sdm active-set threshold");
  cmd->add_option("--max-active", cfg.max_active, "active-set size cap");
  cmd->add_option("--memory", cfg.lbfgs_memory, "lbfgs history size");
  cmd->add_option("--tol", cfg.tol, "lbfgs gradient tolerance");
  cmd->add_flag_callback(
      "--no-timing", [&cfg] { cfg.timing = false; },
      "write cpu_s as 0 for byte-diffable traces");
}

struct LoadedSplits {
  Dataset train, val, test;
};

LoadedSplits load_splits(const DataArgs& args) {
  LoadedSplits s;
  s.train = load_conll(args.train_path);
  s.val = load_conll(args.val_path, s.train.dict);
  s.test = load_conll(args.test_path, s.train.dict);
  return s;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  out << text;
}

int run_main(int argc, char** argv) {
  CLI::App app{"seqlab: linear-chain sequence labeling trainers and benchmarks"};
  app.require_subcommand(1);

  // train
  auto* train_cmd = app.add_subcommand("train", "train one algorithm, tracing every pass");
  RunConfig train_cfg;
  std::string train_algo;
  DataArgs train_data;
  std::string train_out = "run";
  add_run_flags(train_cmd, train_cfg, train_algo);
  add_data_flags(train_cmd, train_data);
  train_cmd->add_option("--out", train_out, "output prefix (.trace.csv, .model)");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "run a lambda sensitivity sweep");
  RunConfig sweep_cfg;
  std::string sweep_algo;
  DataArgs sweep_data;
  std::string sweep_out = "sweep";
  std::vector<double> sweep_grid;
  add_run_flags(sweep_cmd, sweep_cfg, sweep_algo);
  add_data_flags(sweep_cmd, sweep_data);
  sweep_cmd->add_option("--grid", sweep_grid,
                        "lambda grid (default 1e-3 ... 1e3 by decades)");
  sweep_cmd->add_option("--out", sweep_out, "output prefix (.sweep.csv)");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a saved model on a dataset");
  std::string eval_model, eval_data;
  eval_cmd->add_option("--model", eval_model, "model file")->required();
  eval_cmd->add_option("--data", eval_data, "dataset (CoNLL columns)")->required();

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "generate planted-weight synthetic splits");
  int synth_k = 3, synth_d = 10;
  int synth_n_train = 200, synth_n_val = 50, synth_n_test = 100;
  int synth_min_len = 3, synth_max_len = 8;
  unsigned synth_seed = 1;
  double synth_scale = 1.0, synth_noise = 0.0;
  std::string synth_out = "synth";
  synth_cmd->add_option("--k", synth_k, "number of labels");
  synth_cmd->add_option("--d", synth_d, "input feature dimension");
  synth_cmd->add_option("--n-train", synth_n_train, "training sequences");
  synth_cmd->add_option("--n-val", synth_n_val, "validation sequences");
  synth_cmd->add_option("--n-test", synth_n_test, "test sequences");
  synth_cmd->add_option("--min-len", synth_min_len, "minimum sequence length");
  synth_cmd->add_option("--max-len", synth_max_len, "maximum sequence length");
  synth_cmd->add_option("--seed", synth_seed, "random seed");
  synth_cmd->add_option("--scale", synth_scale, "planted weight scale");
  synth_cmd->add_option("--noise", synth_noise,
                        "label-flip probability applied to the training split");
  synth_cmd->add_option("--out", synth_out,
                        "output prefix (.train/.val/.test.conll, .planted.model)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;  // usage errors are exit 1; help stays 0
  }

  if (train_cmd->parsed()) {
    train_cfg.algo = algorithm_from_name(train_algo);
    LoadedSplits s = load_splits(train_data);
    RunResult res = run(train_cfg, s.train, s.val, s.test);
    write_text(train_out + ".trace.csv", res.csv);
    save_model(train_out + ".model", s.train.dict, res.stopped_weights);
    const TraceRecord* at = &res.trace.back();
    for (const TraceRecord& r : res.trace)
      if (r.stopped) at = &r;
    std::cout << "stopped at pass " << at->pass << ": test_acc=" << at->test_acc
              << " test_nll_total=" << at->test_nll_total
              << " test_nll_avg=" << at->test_nll_avg << "\n"
              << "trace: " << train_out << ".trace.csv\n"
              << "model: " << train_out << ".model\n";
  } else if (sweep_cmd->parsed()) {
    sweep_cfg.algo = algorithm_from_name(sweep_algo);
    LoadedSplits s = load_splits(sweep_data);
    const std::vector<double>& grid =
        sweep_grid.empty() ? default_lambda_grid() : sweep_grid;
    SweepResult res = sweep_lambda(sweep_cfg, grid, s.train, s.val, s.test);
    write_text(sweep_out + ".sweep.csv", res.csv);
    std::cout << res.csv;
    std::cout << "sweep: " << sweep_out << ".sweep.csv\n";
  } else if (eval_cmd->parsed()) {
    LoadedModel model = load_model(eval_model);
    Dataset data = load_conll(eval_data, model.dict);
    EvalResult res = evaluate(model.w, data.pairs, model.dict.space());
    std::cout << "sequences: " << data.num_sequences() << "\n"
              << "token_accuracy_pct: " << res.accuracy_pct << "\n"
              << "test_nll_total: " << res.nll_total << "\n"
              << "test_nll_per_seq: " << res.nll_per_seq << "\n";
  } else if (synth_cmd->parsed()) {
    int total = synth_n_train + synth_n_val + synth_n_test;
    auto [all, planted] =
        generate_synthetic(synth_k, synth_d, total, synth_min_len,
                           synth_max_len, synth_seed, synth_scale);
    Dataset train, val, test;
    train.dict = val.dict = test.dict = all.dict;
    for (int i = 0; i < synth_n_train; ++i) {
      train.pairs.push_back(all.pairs[i]);
      train.surfaces.push_back(all.surfaces[i]);
    }
    for (int i = 0; i < synth_n_val; ++i) {
      val.pairs.push_back(all.pairs[synth_n_train + i]);
      val.surfaces.push_back(all.surfaces[synth_n_train + i]);
    }
    for (int i = 0; i < synth_n_test; ++i) {
      test.pairs.push_back(all.pairs[synth_n_train + synth_n_val + i]);
      test.surfaces.push_back(all.surfaces[synth_n_train + synth_n_val + i]);
    }
    if (synth_noise > 0.0) flip_labels(train, synth_noise, synth_seed + 7919);
    write_conll(synth_out + ".train.conll", train);
    write_conll(synth_out + ".val.conll", val);
    write_conll(synth_out + ".test.conll", test);
    save_model(synth_out + ".planted.model", all.dict, planted);
    std::cout << "wrote " << synth_out << ".{train,val,test}.conll and "
              << synth_out << ".planted.model\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_main(argc, argv);
  } catch (const seqlab::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const seqlab::TrainingDiverged& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const seqlab::CalibrationFailed& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const seqlab::InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
