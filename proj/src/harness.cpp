#include "selmopf/harness.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "selmopf/errors.hpp"

namespace selmopf {

using Eigen::Index;
using Eigen::MatrixXd;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

nlohmann::ordered_json group_object(const GroupValues& v) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (std::size_t g = 0; g < kGroupCount; ++g) j[quantity_name(kAllQuantities[g])] = v[g];
  return j;
}

GroupValues group_values(const nlohmann::ordered_json& j) {
  GroupValues v{};
  for (std::size_t g = 0; g < kGroupCount; ++g) v[g] = j.at(quantity_name(kAllQuantities[g])).get<double>();
  return v;
}

}  // namespace

void ThresholdSpec::validate() const {
  if (!(v_thr > 0.0 && theta_thr_deg > 0.0 && relative > 0.0 && f_relative > 0.0)) {
    throw ValidationError("ThresholdSpec: all thresholds must be > 0");
  }
}

GroupValues ThresholdSpec::absolute(const std::vector<double>& group_abs_mean) const {
  validate();
  if (group_abs_mean.size() != kGroupCount) throw DimensionMismatch("one training mean per group required");
  GroupValues t{};
  for (std::size_t g = 0; g < kGroupCount; ++g) {
    switch (kAllQuantities[g]) {
      case Quantity::V: t[g] = v_thr; break;
      case Quantity::THETA: t[g] = theta_thr_deg; break;
      case Quantity::F: t[g] = f_relative * group_abs_mean[g]; break;
      default: t[g] = relative * group_abs_mean[g]; break;
    }
  }
  return t;
}

GroupValues accuracy_index(const MatrixXd& pred, const MatrixXd& truth, const GroupValues& thresholds,
                           const ColumnLayout& layout) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols() || pred.cols() != layout.n_targets()) {
    throw DimensionMismatch("accuracy_index: prediction and truth shapes differ from the layout");
  }
  GroupValues p{};
  for (std::size_t g = 0; g < kGroupCount; ++g) {
    const Quantity q = kAllQuantities[g];
    const double scale = q == Quantity::THETA ? 180.0 / std::numbers::pi : 1.0;
    const Index off = layout.offset(q), width = layout.width(q);
    std::size_t hits = 0, total = 0;
    for (Index r = 0; r < pred.rows(); ++r) {
      for (Index k = off; k < off + width; ++k) {
        hits += std::abs(pred(r, k) - truth(r, k)) * scale < thresholds[g];
        ++total;
      }
    }
    p[g] = total ? 100.0 * static_cast<double>(hits) / static_cast<double>(total) : 100.0;
  }
  return p;
}

double mean_over_groups(const GroupValues& p) {
  double s = 0.0;
  for (double v : p) s += v;
  return s / static_cast<double>(kGroupCount);
}

const char* method_name(Method m) {
  switch (m) {
    case Method::M3: return "M3";
    case Method::M4: return "M4";
    case Method::M5: return "M5";
    case Method::M6: return "M6";
  }
  return "?";
}

Method parse_method(const std::string& s) {
  for (Method m : {Method::M3, Method::M4, Method::M5, Method::M6}) {
    if (s == method_name(m)) return m;
  }
  throw ValidationError("unknown method '" + s + "' (expected M3, M4, M5 or M6)");
}

PipelineConfig method_config(Method m, const PipelineConfig& base) {
  PipelineConfig c = base;
  c.direct = false;
  switch (m) {
    case Method::M3:
      c.direct = true;
      c.classes = 1;
      c.reinforcement_layers = 0;
      break;
    case Method::M4:
      c.classes = 1;
      c.reinforcement_layers = 0;
      break;
    case Method::M5:
      c.classes = 1;
      break;
    case Method::M6:
      break;
  }
  return c;
}

nlohmann::ordered_json report_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["format"] = "selmopf-report";
  j["version"] = 1;
  j["case_name"] = r.case_name;
  j["case_hash"] = r.case_hash;
  j["config"] = r.config;
  auto groups = nlohmann::ordered_json::array();
  for (Quantity q : kAllQuantities) groups.push_back(quantity_name(q));
  j["groups"] = groups;
  auto results = nlohmann::ordered_json::array();
  auto timings = nlohmann::ordered_json::array();
  for (const auto& m : r.results) {
    nlohmann::ordered_json e;
    e["method"] = m.method;
    e["seed"] = m.seed;
    e["n_train"] = m.n_train;
    e["n_test"] = m.n_test;
    e["thresholds"] = group_object(m.thresholds);
    e["p"] = group_object(m.p);
    e["mean_p"] = m.mean_p;
    e["warnings"] = m.warnings;
    results.push_back(e);
    timings.push_back({{"method", m.method},
                       {"seed", m.seed},
                       {"train_seconds", m.train_seconds},
                       {"test_seconds", m.test_seconds}});
  }
  j["results"] = results;
  j["volatile"] = {{"timestamp", r.timestamp}, {"timings", timings}};
  return j;
}

EvalReport report_from_json(const nlohmann::ordered_json& j) {
  EvalReport r;
  try {
    if (j.at("format").get<std::string>() != "selmopf-report") throw FormatError("not a selmopf report");
    if (j.at("version").get<int>() != 1) throw FormatError("unsupported report version");
    r.case_name = j.at("case_name").get<std::string>();
    r.case_hash = j.at("case_hash").get<std::string>();
    r.config = j.at("config");
    const auto& timings = j.at("volatile").at("timings");
    r.timestamp = j.at("volatile").at("timestamp").get<std::string>();
    std::size_t k = 0;
    for (const auto& e : j.at("results")) {
      MethodResult m;
      m.method = e.at("method").get<std::string>();
      m.seed = e.at("seed").get<std::uint64_t>();
      m.n_train = e.at("n_train").get<std::size_t>();
      m.n_test = e.at("n_test").get<std::size_t>();
      m.thresholds = group_values(e.at("thresholds"));
      m.p = group_values(e.at("p"));
      m.mean_p = e.at("mean_p").get<double>();
      m.warnings = e.at("warnings").get<std::vector<std::string>>();
      if (k < timings.size()) {
        m.train_seconds = timings[k].at("train_seconds").get<double>();
        m.test_seconds = timings[k].at("test_seconds").get<double>();
      }
      ++k;
      r.results.push_back(std::move(m));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad report: ") + e.what());
  }
  return r;
}

std::string report_csv(const EvalReport& r) {
  std::ostringstream out;
  out << "method,seed";
  for (Quantity q : kAllQuantities) out << ",p_" << quantity_name(q);
  out << ",mean_p,train_seconds,test_seconds\n";
  for (const auto& m : r.results) {
    out << m.method << ',' << m.seed;
    for (double p : m.p) out << ',' << format_g17(p);
    out << ',' << format_g17(m.mean_p) << ',' << format_g17(m.train_seconds) << ','
        << format_g17(m.test_seconds) << '\n';
  }
  return out.str();
}

void save_report(const EvalReport& r, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write '" + path + "'");
  out << report_json(r).dump(2) << '\n';
}

MethodResult evaluate_regressor(const OpfRegressor& reg, const Dataset& test, const ThresholdSpec& spec,
                                const std::string& label, std::uint64_t seed) {
  test.check();
  if (!(test.layout == reg.layout)) throw DimensionMismatch("evaluate: dataset layout differs from the model");
  MethodResult m;
  m.method = label;
  m.seed = seed;
  m.n_test = static_cast<std::size_t>(test.rows());
  m.thresholds = spec.absolute(reg.group_abs_mean);
  const auto t0 = std::chrono::steady_clock::now();
  const Prediction pred = infer_batch(reg, test.inputs);
  m.test_seconds = seconds_since(t0);
  m.p = accuracy_index(pred.targets, test.targets, m.thresholds, reg.layout);
  m.mean_p = mean_over_groups(m.p);
  m.warnings = reg.warnings;
  return m;
}

std::uint64_t test_stream_seed(std::uint64_t seed) { return seed ^ 0x7e57'0000'0000'0000ULL; }

EvalReport compare_methods(const CaseData& c, const UncertaintyConfig& u, const CompareOptions& opt) {
  if (opt.train_n < 1 || opt.test_n < 1) throw ValidationError("compare: train_n, test_n >= 1 required");
  if (opt.methods.empty() || opt.seeds.empty()) throw ValidationError("compare: methods and seeds required");
  opt.thresholds.validate();

  EvalReport report;
  report.case_name = c.name;
  report.case_hash = case_hash(c);
  report.timestamp = utc_timestamp();
  nlohmann::ordered_json cfg;
  cfg["train_n"] = opt.train_n;
  cfg["test_n"] = opt.test_n;
  auto methods = nlohmann::ordered_json::array();
  for (Method m : opt.methods) methods.push_back(method_name(m));
  cfg["methods"] = methods;
  cfg["seeds"] = opt.seeds;
  cfg["pipeline"] = nlohmann::json(opt.pipeline);
  cfg["uncertainty"] = nlohmann::json(u);
  cfg["thresholds"] = {{"v_thr", opt.thresholds.v_thr},
                       {"theta_thr_deg", opt.thresholds.theta_thr_deg},
                       {"relative", opt.thresholds.relative},
                       {"f_relative", opt.thresholds.f_relative}};
  report.config = cfg;

  for (std::uint64_t seed : opt.seeds) {
    UncertaintyConfig us = u;
    us.seed = seed;
    const Dataset train = build_dataset(c, us, opt.train_n, opt.opf, Execution::parallel);
    us.seed = test_stream_seed(seed);
    const Dataset test = build_dataset(c, us, opt.test_n, opt.opf, Execution::parallel);
    for (Method m : opt.methods) {
      PipelineConfig pc = method_config(m, opt.pipeline);
      pc.seed = seed;
      const auto t0 = std::chrono::steady_clock::now();
      const OpfRegressor reg = train_pipeline(train, c, pc);
      const double train_seconds = seconds_since(t0);
      MethodResult r = evaluate_regressor(reg, test, opt.thresholds, method_name(m), seed);
      r.n_train = static_cast<std::size_t>(train.rows());
      r.train_seconds = train_seconds;
      report.results.push_back(std::move(r));
    }
  }
  return report;
}

}  // namespace selmopf
