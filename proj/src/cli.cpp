#include "selmopf/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <omp.h>

#include "selmopf/case_io.hpp"
#include "selmopf/dataset.hpp"
#include "selmopf/errors.hpp"
#include "selmopf/harness.hpp"
#include "selmopf/scenario.hpp"

namespace selmopf {

namespace {

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("'" + path + "' is not valid JSON: " + e.what());
  }
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

ThresholdSpec thresholds_from_json(const nlohmann::json& j, ThresholdSpec t) {
  t.v_thr = j.value("v_thr", t.v_thr);
  t.theta_thr_deg = j.value("theta_thr_deg", t.theta_thr_deg);
  t.relative = j.value("relative", t.relative);
  t.f_relative = j.value("f_relative", t.f_relative);
  t.validate();
  return t;
}

/// Sections of a --config file.
struct FileConfig {
  nlohmann::json root = nlohmann::json::object();

  const nlohmann::json* section(const char* key) const {
    return root.contains(key) ? &root.at(key) : nullptr;
  }
};

FileConfig load_config(const std::string& path) {
  FileConfig c;
  if (path.empty()) return c;
  c.root = read_json_file(path);
  if (!c.root.is_object()) throw ValidationError("--config must hold a JSON object");
  for (const auto& [key, value] : c.root.items()) {
    if (key != "uncertainty" && key != "opf" && key != "pipeline" && key != "thresholds") {
      throw ValidationError("unknown --config section '" + key + "'");
    }
  }
  return c;
}

UncertaintyConfig uncertainty_from(const FileConfig& cfg, const std::string& file) {
  UncertaintyConfig u;
  try {
    if (const auto* s = cfg.section("uncertainty")) u = s->get<UncertaintyConfig>();
    if (!file.empty()) u = read_json_file(file).get<UncertaintyConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad uncertainty config: ") + e.what());
  }
  u.validate();
  return u;
}

void print_error(const Error& e) {
  nlohmann::ordered_json j;
  j["error"] = e.name();
  j["module"] = e.module();
  j["message"] = e.what();
  std::cerr << j.dump() << '\n';
}

int cmd_generate(const std::string& case_path, std::size_t samples, std::uint64_t seed, bool seed_set,
                 const std::string& uncertainty, const std::string& out, const FileConfig& cfg,
                 bool serial) {
  const CaseData c = load_case(case_path);
  UncertaintyConfig u = uncertainty_from(cfg, uncertainty);
  if (seed_set) u.seed = seed;
  OpfConfig opf;
  if (const auto* s = cfg.section("opf")) opf = opf_config_from_json(*s);
  const Dataset d = build_dataset(c, u, samples, opf, serial ? Execution::serial : Execution::parallel);
  save_dataset(d, out);
  std::cout << "wrote " << d.rows() << " rows (" << d.meta.n_failed << " failed) to " << out << '\n';
  return 0;
}

int cmd_train(const std::string& data, const std::string& case_path, const std::string& out,
              const std::string& method, std::uint64_t seed, bool seed_set, const FileConfig& cfg) {
  const CaseData c = load_case(case_path);
  const Dataset d = load_dataset(data);
  if (d.meta.case_hash != case_hash(c)) {
    throw ValidationError("dataset was generated from a different case (hash " + d.meta.case_hash + ")");
  }
  PipelineConfig pc;
  if (const auto* s = cfg.section("pipeline")) pc = pipeline_config_from_file(*s);
  pc = method_config(parse_method(method), pc);
  if (seed_set) pc.seed = seed;
  const OpfRegressor reg = train_pipeline(d, c, pc);
  save_regressor(reg, out);
  std::cout << "trained " << method << " on " << d.rows() << " rows, wrote " << out << '\n';
  for (const auto& w : reg.warnings) std::cout << "warning: " << w << '\n';
  return 0;
}

int cmd_predict(const std::string& model, const std::string& input, const std::string& out) {
  const OpfRegressor reg = load_regressor(model);
  std::vector<std::string> header;
  const Eigen::MatrixXd x = read_csv(input, &header);
  std::vector<std::string> expected;
  for (const auto& l : reg.input_spec) expected.push_back(l.to_string());
  if (header != expected) {
    throw DimensionMismatch("demand CSV header does not match the model inputs (" +
                            std::to_string(expected.size()) + " columns PD_*, QD_* expected)");
  }
  const Prediction p = infer_batch(reg, x);
  std::vector<std::string> labels;
  for (const auto& l : reg.target_spec) labels.push_back(l.to_string());
  write_csv(out, labels, p.targets);
  return 0;
}

int cmd_evaluate(const std::string& model, const std::string& data, const std::string& out,
                 const std::string& csv, const FileConfig& cfg) {
  const OpfRegressor reg = load_regressor(model);
  const Dataset d = load_dataset(data);
  ThresholdSpec spec;
  if (const auto* s = cfg.section("thresholds")) spec = thresholds_from_json(*s, spec);
  EvalReport r;
  r.case_name = d.meta.case_name;
  r.case_hash = reg.case_hash;
  r.timestamp = utc_timestamp();
  r.config["pipeline"] = nlohmann::json(reg.config);
  r.config["thresholds"] = {{"v_thr", spec.v_thr},
                            {"theta_thr_deg", spec.theta_thr_deg},
                            {"relative", spec.relative},
                            {"f_relative", spec.f_relative}};
  const std::string label = reg.config.direct ? "direct" : "pipeline";
  r.results.push_back(evaluate_regressor(reg, d, spec, label, reg.config.seed));
  save_report(r, out);
  if (!csv.empty()) {
    std::ofstream(csv, std::ios::binary) << report_csv(r);
  }
  return 0;
}

int cmd_compare(const std::string& case_path, std::size_t train_n, std::size_t test_n,
                const std::string& methods, const std::string& seeds, const std::string& uncertainty,
                const std::string& out, const std::string& csv, const FileConfig& cfg) {
  const CaseData c = load_case(case_path);
  const UncertaintyConfig u = uncertainty_from(cfg, uncertainty);
  CompareOptions opt;
  opt.train_n = train_n;
  opt.test_n = test_n;
  opt.methods.clear();
  for (const auto& m : split_list(methods)) opt.methods.push_back(parse_method(m));
  opt.seeds.clear();
  for (const auto& s : split_list(seeds)) {
    try {
      opt.seeds.push_back(std::stoull(s));
    } catch (const std::exception&) {
      throw ValidationError("bad seed '" + s + "'");
    }
  }
  if (const auto* s = cfg.section("pipeline")) opt.pipeline = pipeline_config_from_file(*s);
  if (const auto* s = cfg.section("opf")) opt.opf = opf_config_from_json(*s);
  if (const auto* s = cfg.section("thresholds")) opt.thresholds = thresholds_from_json(*s, opt.thresholds);
  const EvalReport r = compare_methods(c, u, opt);
  save_report(r, out);
  if (!csv.empty()) {
    std::ofstream(csv, std::ios::binary) << report_csv(r);
  }
  for (const auto& m : r.results) {
    std::cout << m.method << " seed " << m.seed << " mean p " << m.mean_p << '\n';
  }
  return 0;
}

}  // namespace

PipelineConfig pipeline_config_from_file(const nlohmann::json& j, PipelineConfig base) {
  from_json(j, base);
  if (base.reinforcement_layers < 1) {
    throw ValidationError("pipeline.reinforcement_layers >= 1 required");
  }
  base.validate();
  return base;
}

OpfConfig opf_config_from_json(const nlohmann::json& j, OpfConfig c) {
  try {
    c.feas_tol = j.value("feas_tol", c.feas_tol);
    c.comp_tol = j.value("comp_tol", c.comp_tol);
    c.stat_tol = j.value("stat_tol", c.stat_tol);
    c.active_tol = j.value("active_tol", c.active_tol);
    c.termination_margin = j.value("termination_margin", c.termination_margin);
    c.max_iter = j.value("max_iter", c.max_iter);
    c.step_to_boundary = j.value("step_to_boundary", c.step_to_boundary);
    c.barrier_reduction = j.value("barrier_reduction", c.barrier_reduction);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad opf config: ") + e.what());
  }
  c.validate();
  return c;
}

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"selmopf: learning AC-OPF solutions with stacked extreme learning machines", "selmopf"};
  app.require_subcommand(1);
  std::string config_path;
  int threads = 0;
  app.add_option("--config", config_path, "JSON file with uncertainty/opf/pipeline/thresholds sections");
  app.add_option("--threads", threads, "OpenMP threads (0 keeps the runtime default)")->check(CLI::NonNegativeNumber);

  std::string case_path, out, data, uncertainty, model, input, method = "M6", csv;
  std::string methods = "M3,M4,M5,M6", seeds = "1,2,3";
  std::size_t samples = 0, train_n = 2000, test_n = 500;
  std::uint64_t seed = 1;
  bool serial = false;

  auto* gen = app.add_subcommand("generate", "sample scenarios and label them with the interior-point OPF");
  gen->add_option("--case", case_path, "case file")->required();
  gen->add_option("--samples", samples, "scenarios to draw")->required()->check(CLI::PositiveNumber);
  auto* gen_seed = gen->add_option("--seed", seed, "scenario seed");
  gen->add_option("--uncertainty", uncertainty, "uncertainty JSON");
  gen->add_option("--out", out, "dataset directory")->required();
  gen->add_flag("--serial", serial, "label scenarios on one thread");

  auto* train = app.add_subcommand("train", "train an OPF regressor from a dataset");
  train->add_option("--data", data, "dataset directory")->required();
  train->add_option("--case", case_path, "case file the dataset came from")->required();
  train->add_option("--out", out, "model archive")->required();
  train->add_option("--method", method, "M3, M4, M5 or M6");
  auto* train_seed = train->add_option("--seed", seed, "weight seed");

  auto* predict = app.add_subcommand("predict", "predict OPF targets for demand rows");
  predict->add_option("--model", model, "model archive")->required();
  predict->add_option("--input", input, "demand CSV with PD_*, QD_* columns")->required();
  predict->add_option("--out", out, "prediction CSV")->required();

  auto* evaluate = app.add_subcommand("evaluate", "accuracy report of a model on a dataset");
  evaluate->add_option("--model", model, "model archive")->required();
  evaluate->add_option("--data", data, "dataset directory")->required();
  evaluate->add_option("--out", out, "report JSON")->required();
  evaluate->add_option("--csv", csv, "also write a CSV table");

  auto* compare = app.add_subcommand("compare", "ablation over methods and seeds");
  compare->add_option("--case", case_path, "case file")->required();
  compare->add_option("--train", train_n, "training scenarios per seed")->check(CLI::PositiveNumber);
  compare->add_option("--test", test_n, "test scenarios per seed")->check(CLI::PositiveNumber);
  compare->add_option("--methods", methods, "comma-separated subset of M3,M4,M5,M6");
  compare->add_option("--seeds", seeds, "comma-separated seeds");
  compare->add_option("--uncertainty", uncertainty, "uncertainty JSON");
  compare->add_option("--out", out, "report JSON")->required();
  compare->add_option("--csv", csv, "also write a CSV table");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (threads > 0) omp_set_num_threads(threads);
    const FileConfig cfg = load_config(config_path);
    if (*gen) return cmd_generate(case_path, samples, seed, gen_seed->count() > 0, uncertainty, out, cfg, serial);
    if (*train) return cmd_train(data, case_path, out, method, seed, train_seed->count() > 0, cfg);
    if (*predict) return cmd_predict(model, input, out);
    if (*evaluate) return cmd_evaluate(model, data, out, csv, cfg);
    if (*compare) return cmd_compare(case_path, train_n, test_n, methods, seeds, uncertainty, out, csv, cfg);
  } catch (const Error& e) {
    print_error(e);
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    print_error(FormatError(e.what()));
    return 1;
  }
  return 2;
}

int run_cli(int argc, char** argv) { return run_cli(std::vector<std::string>(argv, argv + argc)); }

}  // namespace selmopf
