#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "seqlab/bench.hpp"
#include "seqlab/inference.hpp"

using namespace seqlab;

namespace {

struct Splits {
  Dataset train, val, test;
  WeightVector planted;
};

Splits make_splits(int k, int d, int n_train, int n_val, int n_test,
                   unsigned seed, double scale = 1.0) {
  auto [all, planted] =
      generate_synthetic(k, d, n_train + n_val + n_test, 2, 5, seed, scale);
  Splits s;
  s.planted = planted;
  s.train.dict = s.val.dict = s.test.dict = all.dict;
  for (int i = 0; i < n_train; ++i) s.train.pairs.push_back(all.pairs[i]);
  for (int i = 0; i < n_val; ++i) s.val.pairs.push_back(all.pairs[n_train + i]);
  for (int i = 0; i < n_test; ++i)
    s.test.pairs.push_back(all.pairs[n_train + n_val + i]);
  return s;
}

std::string strip_cpu_column(const std::string& csv) {
  std::istringstream in(csv);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    size_t first = line.find(',');
    if (first == std::string::npos || line[0] == '#' || line[0] == 'p') {
      out << line << '\n';
      continue;
    }
    size_t second = line.find(',', first + 1);
    out << line.substr(0, first) << line.substr(second) << '\n';
  }
  return out.str();
}

}  // namespace

TEST_CASE("evaluate: zero weights on synthetic data") {
  Splits s = make_splits(3, 5, 10, 5, 8, 3);
  FeatureSpace fs = s.train.space();
  WeightVector zero(fs.dim(), 0.0);
  EvalResult res = evaluate(zero, s.test.pairs, fs);

  // the all-zeros decode gets exactly the tokens whose gold label is 0
  long correct = 0, total = 0, loglen = 0;
  for (const auto& p : s.test.pairs) {
    for (int y : p.y) correct += y == 0;
    total += p.x.length();
    loglen += p.x.length();
  }
  CHECK(res.accuracy_pct == doctest::Approx(100.0 * correct / total));
  CHECK(res.nll_total == doctest::Approx(loglen * std::log(3.0)).epsilon(1e-10));
  CHECK(res.nll_per_seq ==
        doctest::Approx(res.nll_total / s.test.pairs.size()).epsilon(1e-12));
}

TEST_CASE("evaluate: planted weights score 100 percent") {
  Splits s = make_splits(3, 6, 5, 3, 10, 7);
  EvalResult res = evaluate(s.planted, s.test.pairs, s.test.space());
  CHECK(res.accuracy_pct == 100.0);
  CHECK(res.nll_total >= 0.0);
}

TEST_CASE("evaluate: nll matches the enumeration oracle") {
  Splits s = make_splits(2, 3, 4, 2, 6, 11);
  FeatureSpace fs = s.test.space();
  // keep sequences short enough to enumerate
  std::vector<LabeledPair> small;
  for (const auto& p : s.test.pairs)
    if (p.x.length() <= 3) small.push_back(p);
  REQUIRE(!small.empty());
  std::mt19937 rng(5);
  WeightVector w(fs.dim());
  for (double& v : w) v = (static_cast<double>(rng() % 200) - 100.0) / 100.0;
  EvalResult res = evaluate(w, small, fs);
  double expect = 0.0;
  for (const auto& p : small)
    expect -= score(w, p.x, p.y, fs) - brute_force_log_z(w, p.x, fs);
  CHECK(res.nll_total == doctest::Approx(expect).epsilon(1e-6));
}

TEST_CASE("evaluate rejects an empty set") {
  FeatureSpace fs{2, 2};
  CHECK_THROWS_AS(evaluate(WeightVector(fs.dim(), 0.0), {}, fs), InvalidInput);
}

TEST_CASE("should_stop") {
  SUBCASE("strictly improving history never stops") {
    CHECK_FALSE(should_stop({1.0, 2.0, 3.0, 4.0, 5.0}, 3, 1e-4, true));
    CHECK_FALSE(should_stop({5.0, 4.0, 3.0, 2.0, 1.0}, 3, 1e-4, false));
  }
  SUBCASE("flat history of length patience+1 stops") {
    CHECK(should_stop({2.0, 2.0, 2.0, 2.0}, 3, 1e-4, true));
    CHECK(should_stop({2.0, 2.0}, 1, 1e-4, false));
  }
  SUBCASE("sub-tolerance improvement counts as stagnation") {
    // relative tol 1e-2 of best=100 means +1 is needed
    std::vector<double> h{100.0, 100.5, 100.9, 101.2};
    CHECK(should_stop(h, 3, 1e-2, true));
    std::vector<double> h2{100.0, 100.5, 100.9};
    CHECK_FALSE(should_stop(h2, 3, 1e-2, true));
  }
  SUBCASE("direction matters") {
    CHECK(should_stop({1.0, 2.0, 3.0, 4.0}, 3, 1e-4, false));
    CHECK(should_stop({4.0, 3.0, 2.0, 1.0}, 3, 1e-4, true));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(should_stop({}, 3, 1e-4, true), InvalidInput);
    CHECK_THROWS_AS(should_stop({1.0}, 0, 1e-4, true), InvalidInput);
  }
}

TEST_CASE("run: max_passes=0 evaluates the initial model once") {
  Splits s = make_splits(2, 4, 6, 3, 3, 13);
  RunConfig cfg;
  cfg.algo = Algorithm::kPerceptron;
  cfg.max_passes = 0;
  RunResult res = run(cfg, s.train, s.val, s.test);
  REQUIRE(res.trace.size() == 1);
  CHECK(res.trace[0].pass == 0);
  CHECK(res.trace[0].cpu_s == 0.0);
  CHECK(res.trace[0].stopped);
  for (double v : res.stopped_weights) CHECK(v == 0.0);
}

TEST_CASE("run: perceptron on separable data reaches perfect training accuracy") {
  Splits s = make_splits(3, 6, 30, 10, 10, 17);
  RunConfig cfg;
  cfg.algo = Algorithm::kPerceptron;
  cfg.eta = 1.0;
  cfg.max_passes = 60;
  RunResult res = run(cfg, s.train, s.val, s.test);

  // exactly one stop marker
  int stops = 0;
  for (const auto& r : res.trace) stops += r.stopped;
  CHECK(stops == 1);

  // cpu is monotone and every row carries test metrics
  for (size_t i = 1; i < res.trace.size(); ++i)
    CHECK(res.trace[i].cpu_s >= res.trace[i - 1].cpu_s);
  for (const auto& r : res.trace) {
    CHECK(r.test_acc >= 0.0);
    CHECK(r.test_acc <= 100.0);
    CHECK(r.test_nll_total >= 0.0);
  }

  // the trained weights fit the training data (separable by construction)
  EvalResult train_eval =
      evaluate(res.final_weights, s.train.pairs, s.train.space());
  CHECK(train_eval.accuracy_pct == 100.0);
}

TEST_CASE("run: identical seeds give byte-identical traces") {
  Splits s = make_splits(2, 4, 12, 4, 4, 19);
  RunConfig cfg;
  cfg.algo = Algorithm::kAsgd;
  cfg.lambda = 0.5;
  cfg.max_passes = 8;
  cfg.seed = 99;

  SUBCASE("with timing disabled the whole file matches") {
    cfg.timing = false;
    RunResult a = run(cfg, s.train, s.val, s.test);
    RunResult b = run(cfg, s.train, s.val, s.test);
    CHECK(a.csv == b.csv);
    CHECK(!a.csv.empty());
  }
  SUBCASE("with timing enabled everything but cpu_s matches") {
    RunResult a = run(cfg, s.train, s.val, s.test);
    RunResult b = run(cfg, s.train, s.val, s.test);
    CHECK(strip_cpu_column(a.csv) == strip_cpu_column(b.csv));
  }
  SUBCASE("a different seed changes the trace") {
    cfg.timing = false;
    RunResult a = run(cfg, s.train, s.val, s.test);
    cfg.seed = 100;
    RunResult b = run(cfg, s.train, s.val, s.test);
    CHECK(a.csv != b.csv);  // shuffled visit order differs
  }
}

TEST_CASE("run: every algorithm produces a sane trace") {
  Splits s = make_splits(2, 4, 10, 4, 4, 23);
  for (Algorithm algo :
       {Algorithm::kAsgd, Algorithm::kLbfgs, Algorithm::kCrfSdm,
        Algorithm::kSvmSdm, Algorithm::kCuttingPlane, Algorithm::kPerceptron}) {
    CAPTURE(algorithm_name(algo));
    RunConfig cfg;
    cfg.algo = algo;
    cfg.lambda = 1.0;
    cfg.max_passes = 6;
    RunResult res = run(cfg, s.train, s.val, s.test);
    CHECK(res.trace.size() >= 2);
    int stops = 0;
    for (const auto& r : res.trace) stops += r.stopped;
    CHECK(stops == 1);
    CHECK(res.trace.front().pass == 0);
    // training should beat the initial model on test NLL or accuracy
    CHECK(res.csv.find("pass,cpu_s,val_metric") != std::string::npos);
  }
}

TEST_CASE("sweep_lambda: grid order, degenerate lambda, failure rows") {
  Splits s = make_splits(2, 4, 10, 4, 6, 29);
  RunConfig cfg;
  cfg.algo = Algorithm::kSvmSdm;
  cfg.max_passes = 10;
  cfg.timing = false;

  SUBCASE("single point") {
    SweepResult res = sweep_lambda(cfg, {1.0}, s.train, s.val, s.test);
    REQUIRE(res.rows.size() == 1);
    CHECK(res.rows[0].ok);
    CHECK(res.rows[0].lambda == 1.0);
  }
  SUBCASE("rows appear in grid order and extreme regularization hurts") {
    SweepResult res = sweep_lambda(cfg, {1.0, 1e6}, s.train, s.val, s.test);
    REQUIRE(res.rows.size() == 2);
    CHECK(res.rows[0].lambda == 1.0);
    CHECK(res.rows[1].lambda == 1e6);
    REQUIRE(res.rows[0].ok);
    REQUIRE(res.rows[1].ok);
    CHECK(res.rows[1].at_stop.accuracy_pct <= res.rows[0].at_stop.accuracy_pct);
  }
  SUBCASE("a failing run is recorded and the sweep continues") {
    SweepResult res = sweep_lambda(cfg, {-1.0, 1.0}, s.train, s.val, s.test);
    REQUIRE(res.rows.size() == 2);
    CHECK_FALSE(res.rows[0].ok);
    CHECK(res.rows[1].ok);
    CHECK(res.csv.find("error") != std::string::npos);
  }
  SUBCASE("empty grid is rejected") {
    CHECK_THROWS_AS(sweep_lambda(cfg, {}, s.train, s.val, s.test), InvalidInput);
  }
}
