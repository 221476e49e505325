#include <doctest.h>

#include <numbers>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "selmopf/errors.hpp"
#include "selmopf/harness.hpp"

using namespace selmopf;
using Eigen::Index;
using Eigen::MatrixXd;

namespace {

const std::string kCases = std::string(SELMOPF_DATA_DIR) + "/cases";

const CaseData& case3() {
  static const CaseData c = load_case(kCases + "/case3.case");
  return c;
}

std::vector<std::string> group_names() {
  std::vector<std::string> g;
  for (Quantity q : kAllQuantities) g.push_back(quantity_name(q));
  return g;
}

GroupValues uniform_thresholds(double v) {
  GroupValues t;
  t.fill(v);
  return t;
}

SelmConfig small_selm(int l = 60) {
  SelmConfig s;
  s.hidden_neurons = l;
  s.reduced_neurons = l / 10;
  s.stack_iterations = 2;
  return s;
}

PipelineConfig small_pipeline() {
  PipelineConfig p;
  p.classifier = small_selm(40);
  p.stage1 = p.stage2 = p.stage3 = small_selm();
  return p;
}

CompareOptions small_compare(std::vector<Method> methods, std::vector<std::uint64_t> seeds) {
  CompareOptions o;
  o.train_n = 200;
  o.test_n = 60;
  o.methods = std::move(methods);
  o.seeds = std::move(seeds);
  o.pipeline = small_pipeline();
  return o;
}

nlohmann::ordered_json stable(const EvalReport& r) {
  auto j = report_json(r);
  j.erase("volatile");
  return j;
}

}  // namespace

TEST_CASE("zero error scores 100 everywhere") {
  const ColumnLayout l(case3());
  const MatrixXd t = MatrixXd::Random(7, l.n_targets());
  for (double p : accuracy_index(t, t, uniform_thresholds(1e-9), l)) CHECK(p == 100.0);
}

TEST_CASE("errors of twice the threshold score 0") {
  const ColumnLayout l(case3());
  const MatrixXd t = MatrixXd::Random(5, l.n_targets());
  GroupValues thr{};
  for (std::size_t g = 0; g < kGroupCount; ++g) thr[g] = 0.01 * static_cast<double>(g + 1);
  MatrixXd p = t;
  for (std::size_t g = 0; g < kGroupCount; ++g) {
    const Quantity q = kAllQuantities[g];
    const double e = q == Quantity::THETA ? 2.0 * thr[g] * std::numbers::pi / 180.0 : 2.0 * thr[g];
    p.middleCols(l.offset(q), l.width(q)).array() += e;
  }
  for (double v : accuracy_index(p, t, thr, l)) CHECK(v == 0.0);
}

TEST_CASE("four-element group scores 50") {
  const ColumnLayout l(2, 1, 1);
  std::vector<ColumnLabel> spec;
  for (Quantity q : kAllQuantities) {
    for (Index k = 0; k < l.width(q); ++k) spec.push_back({quantity_name(q), static_cast<int>(k + 1)});
  }
  MatrixXd truth = MatrixXd::Zero(2, l.n_targets());
  MatrixXd pred = truth;
  const double thr = 0.25;
  const Index v = l.offset(Quantity::V);
  pred(1, v) = 2 * thr;
  pred(1, v + 1) = 2 * thr;
  const GroupValues p = accuracy_index(pred, truth, uniform_thresholds(thr), l);
  CHECK(p[2] == 50.0);
  const auto brute = oracle::accuracy(pred, truth, spec, group_names(), std::vector<double>(kGroupCount, thr));
  for (std::size_t g = 0; g < kGroupCount; ++g) CHECK(p[g] == brute[g]);
}

TEST_CASE("matches the counting oracle on random pairs") {
  const CaseData& c = case3();
  const ColumnLayout l(c);
  const auto spec = target_labels(c);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Index rows = 1 + static_cast<Index>(rng() % 12);
    MatrixXd truth(rows, l.n_targets()), pred(rows, l.n_targets());
    for (Index r = 0; r < rows; ++r) {
      for (Index k = 0; k < l.n_targets(); ++k) {
        truth(r, k) = u(rng) * 4 - 2;
        pred(r, k) = truth(r, k) + (u(rng) - 0.5) * 0.04;
      }
    }
    GroupValues thr{};
    std::vector<double> thr_v;
    for (std::size_t g = 0; g < kGroupCount; ++g) {
      thr[g] = 0.002 + 0.02 * u(rng);
      thr_v.push_back(thr[g]);
    }
    thr[3] *= 57.0;
    thr_v[3] = thr[3];
    const GroupValues p = accuracy_index(pred, truth, thr, l);
    const auto expect = oracle::accuracy(pred, truth, spec, group_names(), thr_v);
    for (std::size_t g = 0; g < kGroupCount; ++g) CHECK(p[g] == expect[g]);
  }
}

TEST_CASE("angle errors are compared in degrees") {
  const ColumnLayout l(1, 1, 1);
  MatrixXd truth = MatrixXd::Zero(1, l.n_targets());
  MatrixXd pred = truth;
  const Index th = l.offset(Quantity::THETA);
  GroupValues thr = uniform_thresholds(1.0);
  thr[3] = 0.5;
  pred(0, th) = 0.4 * std::numbers::pi / 180.0;
  CHECK(accuracy_index(pred, truth, thr, l)[3] == 100.0);
  pred(0, th) = 0.6 * std::numbers::pi / 180.0;
  CHECK(accuracy_index(pred, truth, thr, l)[3] == 0.0);
}

TEST_CASE("an error equal to the threshold misses") {
  const ColumnLayout l(1, 1, 1);
  MatrixXd truth = MatrixXd::Zero(1, l.n_targets());
  MatrixXd pred = truth;
  pred(0, l.offset(Quantity::V)) = 0.001;
  ThresholdSpec s;
  const GroupValues thr = s.absolute(std::vector<double>(kGroupCount, 1.0));
  CHECK(accuracy_index(pred, truth, thr, l)[2] == 0.0);
}

TEST_CASE("accuracy shape checks") {
  const ColumnLayout l(case3());
  const GroupValues t = uniform_thresholds(1.0);
  CHECK_THROWS_AS(accuracy_index(MatrixXd::Zero(2, l.n_targets()), MatrixXd::Zero(3, l.n_targets()), t, l),
                  DimensionMismatch);
  CHECK_THROWS_AS(accuracy_index(MatrixXd::Zero(2, 4), MatrixXd::Zero(2, 4), t, l), DimensionMismatch);
}

TEST_CASE("absolute thresholds follow the training means") {
  ThresholdSpec s;
  const std::vector<double> mean{2.0, 0.5, 1.0, 0.1, 3.0, 0.7, 5300.0};
  const GroupValues t = s.absolute(mean);
  CHECK(t[0] == 0.01 * 2.0);
  CHECK(t[1] == 0.01 * 0.5);
  CHECK(t[2] == 0.001);
  CHECK(t[3] == 0.5);
  CHECK(t[4] == 0.01 * 3.0);
  CHECK(t[5] == 0.01 * 0.7);
  CHECK(t[6] == 0.001 * 5300.0);
  CHECK_THROWS_AS(s.absolute({1.0}), DimensionMismatch);
  ThresholdSpec bad;
  bad.theta_thr_deg = 0.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = ThresholdSpec{};
  bad.f_relative = -1.0;
  CHECK_THROWS_AS(bad.absolute(mean), ValidationError);
}

TEST_CASE("method names and configurations") {
  for (Method m : {Method::M3, Method::M4, Method::M5, Method::M6}) CHECK(parse_method(method_name(m)) == m);
  CHECK_THROWS_AS(parse_method("M7"), ValidationError);
  const PipelineConfig base;
  const PipelineConfig m3 = method_config(Method::M3, base), m4 = method_config(Method::M4, base),
                       m5 = method_config(Method::M5, base), m6 = method_config(Method::M6, base);
  CHECK(m3.direct);
  CHECK(!m4.direct);
  CHECK(m4.classes == 1);
  CHECK(m4.reinforcement_layers == 0);
  CHECK(m5.classes == 1);
  CHECK(m5.reinforcement_layers == base.reinforcement_layers);
  CHECK(m6 == base);
  PipelineConfig aliased = base;
  aliased.classes = 1;
  aliased.reinforcement_layers = 0;
  CHECK(method_config(Method::M6, aliased) == m4);
}

TEST_CASE("evaluation p values come from accuracy_index") {
  UncertaintyConfig u;
  const Dataset train = build_dataset(case3(), u, 150);
  u.seed = test_stream_seed(u.seed);
  const Dataset test = build_dataset(case3(), u, 40);
  const OpfRegressor reg = train_pipeline(train, case3(), method_config(Method::M5, small_pipeline()));
  const ThresholdSpec spec;
  const MethodResult m = evaluate_regressor(reg, test, spec, "M5", 1);
  const GroupValues thr = spec.absolute(reg.group_abs_mean);
  CHECK(m.thresholds == thr);
  CHECK(m.p == accuracy_index(infer_batch(reg, test.inputs).targets, test.targets, thr, reg.layout));
  CHECK(m.mean_p == doctest::Approx(mean_over_groups(m.p)).epsilon(1e-15));
  CHECK(m.n_test == static_cast<std::size_t>(test.rows()));
  CHECK(m.test_seconds >= 0.0);
  for (double p : m.p) {
    CHECK(p >= 0.0);
    CHECK(p <= 100.0);
  }
  const auto labels = target_labels(case3());
  for (std::size_t g = 0; g < kGroupCount; ++g) {
    const Quantity q = kAllQuantities[g];
    double s = 0.0;
    for (Index r = 0; r < train.rows(); ++r) {
      for (Index k = 0; k < reg.layout.width(q); ++k) s += std::abs(train.targets(r, reg.layout.offset(q) + k));
    }
    const double mean = s / static_cast<double>(train.rows() * reg.layout.width(q));
    CHECK(reg.group_abs_mean[g] == doctest::Approx(mean).epsilon(1e-12));
  }
  const Dataset other = build_dataset(load_case(kCases + "/case9.case"), UncertaintyConfig{}, 10);
  CHECK_THROWS_AS(evaluate_regressor(reg, other, spec, "M5", 1), DimensionMismatch);
}

TEST_CASE("test stream seed differs from the training seed") {
  for (std::uint64_t s : {0ULL, 1ULL, 2ULL, 12345ULL}) CHECK(test_stream_seed(s) != s);
  CHECK(test_stream_seed(test_stream_seed(7)) == 7);
}

TEST_CASE("single-method comparison has one row per seed") {
  const EvalReport r = compare_methods(case3(), UncertaintyConfig{}, small_compare({Method::M3}, {1, 2}));
  REQUIRE(r.results.size() == 2);
  CHECK(r.results[0].method == "M3");
  CHECK(r.results[0].seed == 1);
  CHECK(r.results[1].seed == 2);
  for (const auto& m : r.results) {
    UncertaintyConfig u;
    u.seed = m.seed;
    CHECK(m.n_train == static_cast<std::size_t>(build_dataset(case3(), u, 200).rows()));
    u.seed = test_stream_seed(m.seed);
    CHECK(m.n_test == static_cast<std::size_t>(build_dataset(case3(), u, 60).rows()));
  }
  CHECK(r.case_hash == case_hash(case3()));
}

TEST_CASE("M6 with one class and no reinforcement aliases M4") {
  CompareOptions opt = small_compare({Method::M4, Method::M6}, {3});
  opt.pipeline.classes = 1;
  opt.pipeline.reinforcement_layers = 0;
  const EvalReport r = compare_methods(case3(), UncertaintyConfig{}, opt);
  REQUIRE(r.results.size() == 2);
  for (std::size_t g = 0; g < kGroupCount; ++g) {
    CHECK(std::abs(r.results[0].p[g] - r.results[1].p[g]) <= 1e-12);
    CHECK(r.results[0].thresholds[g] == r.results[1].thresholds[g]);
  }
}

TEST_CASE("comparison reports are reproducible and round-trip") {
  const CompareOptions opt = small_compare({Method::M3, Method::M6}, {1});
  const EvalReport a = compare_methods(case3(), UncertaintyConfig{}, opt);
  const EvalReport b = compare_methods(case3(), UncertaintyConfig{}, opt);
  REQUIRE(a.results.size() == 2);
  CHECK(a.results[0].method == "M3");
  CHECK(a.results[1].method == "M6");
  CHECK(stable(a).dump() == stable(b).dump());
  for (const auto& m : a.results) {
    CHECK(m.train_seconds >= 0.0);
    CHECK(m.test_seconds >= 0.0);
  }

  const auto j = report_json(a);
  CHECK(j.at("volatile").contains("timestamp"));
  CHECK(j.at("volatile").at("timings").size() == 2);
  const EvalReport back = report_from_json(nlohmann::ordered_json::parse(j.dump()));
  CHECK(report_json(back).dump() == j.dump());

  const std::string csv = report_csv(a);
  std::istringstream in(csv);
  std::string header, line;
  std::getline(in, header);
  CHECK(header == "method,seed,p_PF,p_QF,p_V,p_THETA,p_PG,p_QG,p_F,mean_p,train_seconds,test_seconds");
  int rows = 0;
  while (std::getline(in, line)) {
    CHECK(std::count(line.begin(), line.end(), ',') == 11);
    ++rows;
  }
  CHECK(rows == 2);
}

TEST_CASE("malformed reports are FormatError") {
  CHECK_THROWS_AS(report_from_json(nlohmann::ordered_json::parse(R"({"format": "other"})")), FormatError);
  CHECK_THROWS_AS(report_from_json(nlohmann::ordered_json::parse(R"({"format": "selmopf-report", "version": 9})")),
                  FormatError);
  CHECK_THROWS_AS(report_from_json(nlohmann::ordered_json::parse(R"({"format": "selmopf-report", "version": 1})")),
                  FormatError);
}

TEST_CASE("comparison preconditions") {
  CompareOptions opt = small_compare({Method::M3}, {1});
  opt.train_n = 0;
  CHECK_THROWS_AS(compare_methods(case3(), UncertaintyConfig{}, opt), ValidationError);
  opt = small_compare({}, {1});
  CHECK_THROWS_AS(compare_methods(case3(), UncertaintyConfig{}, opt), ValidationError);
  opt = small_compare({Method::M3}, {});
  CHECK_THROWS_AS(compare_methods(case3(), UncertaintyConfig{}, opt), ValidationError);
}
