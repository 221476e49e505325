#include "selmopf/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "selmopf/binary_io.hpp"
#include "selmopf/errors.hpp"

namespace selmopf {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr char kRegressorMagic[9] = "SELMOPFR";
constexpr std::uint32_t kRegressorVersion = 1;

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix(mix(mix(mix(base) ^ a) ^ b) ^ c);
}

const char* activation_name(Activation a) { return a == Activation::sigmoid ? "sigmoid" : "tanh"; }

const char* family_name(ConstraintFamily f) {
  return f == ConstraintFamily::voltage_magnitude ? "voltage_magnitude" : "all_inequalities";
}

MatrixXd hcat(std::initializer_list<const MatrixXd*> parts) {
  Index cols = 0, rows = (*parts.begin())->rows();
  for (const auto* p : parts) cols += p->cols();
  MatrixXd out(rows, cols);
  Index c = 0;
  for (const auto* p : parts) {
    out.middleCols(c, p->cols()) = *p;
    c += p->cols();
  }
  return out;
}

MatrixXd select_rows(const MatrixXd& m, const std::vector<Index>& rows) {
  MatrixXd out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Index>(r)) = m.row(rows[r]);
  return out;
}

SelmConfig seeded(const PipelineConfig& cfg, const SelmConfig& base, std::uint64_t pool,
                  std::uint64_t role) {
  SelmConfig out = base;
  out.weight_seed = derive_seed(cfg.seed, base.weight_seed, pool, role);
  return out;
}

struct StageBlocks {
  Index flows, state, control;  // column widths of the three target blocks
};

StageBlocks blocks(const ColumnLayout& l) {
  return {2 * l.n_branch, 2 * l.n_bus, 2 * l.n_gen + 1};
}

ClassModels train_pool(const MatrixXd& x, const MatrixXd& t, const ColumnLayout& layout,
                       Index slack, const PipelineConfig& cfg, std::uint64_t pool) {
  const StageBlocks w = blocks(layout);
  const MatrixXd t1 = t.leftCols(w.flows);
  const MatrixXd t2 = t.middleCols(w.flows, w.state);
  const MatrixXd t3 = t.rightCols(w.control);
  const int rl = cfg.reinforcement_layers;

  ClassModels out;
  out.n_rows = static_cast<std::size_t>(x.rows());
  out.stages[0] = train_stage(x, t1, seeded(cfg, cfg.stage1, pool, 1), rl);
  MatrixXd in2 = t1;
  if (cfg.cascade_training) in2 = predict_stage(out.stages[0], x);
  out.stages[1] = train_stage(in2, t2, seeded(cfg, cfg.stage2, pool, 2), rl);
  MatrixXd state = t2;
  if (cfg.cascade_training) {
    state = predict_stage(out.stages[1], in2);
    state.col(layout.n_bus + slack).setZero();
  }
  const MatrixXd in3 = hcat({&x, &in2, &state});
  out.stages[2] = train_stage(in3, t3, seeded(cfg, cfg.stage3, pool, 3), rl);
  return out;
}

MatrixXd run_pool(const ClassModels& pool, const MatrixXd& x, const ColumnLayout& layout, Index slack) {
  const MatrixXd flows = predict_stage(pool.stages[0], x);
  MatrixXd state = predict_stage(pool.stages[1], flows);
  state.col(layout.n_bus + slack).setZero();
  const MatrixXd in3 = hcat({&x, &flows, &state});
  const MatrixXd control = predict_stage(pool.stages[2], in3);
  return hcat({&flows, &state, &control});
}

void put_chain(std::ostream& out, const StageChain& chain) {
  binary::put<std::uint32_t>(out, static_cast<std::uint32_t>(chain.size()));
  for (const auto& m : chain) write_selm(out, m);
}

StageChain get_chain(std::istream& in) {
  const auto n = binary::get<std::uint32_t>(in);
  if (n > 1000) throw FormatError("implausible chain length in regressor archive");
  StageChain chain;
  for (std::uint32_t k = 0; k < n; ++k) chain.push_back(read_selm(in));
  return chain;
}

void put_strings(std::ostream& out, const std::vector<std::string>& v) {
  binary::put<std::uint64_t>(out, v.size());
  for (const auto& s : v) binary::put_string(out, s);
}

std::vector<std::string> get_strings(std::istream& in) {
  const auto n = binary::get<std::uint64_t>(in);
  if (n > (1ULL << 24)) throw FormatError("implausible list length in regressor archive");
  std::vector<std::string> v;
  for (std::uint64_t k = 0; k < n; ++k) v.push_back(binary::get_string(in));
  return v;
}

}  // namespace

void PipelineConfig::validate() const {
  if (classes < 1) throw ValidationError("PipelineConfig: classes >= 1 required");
  if (reinforcement_layers < 0) throw ValidationError("PipelineConfig: reinforcement_layers >= 0 required");
  classifier.validate();
  stage1.validate();
  stage2.validate();
  stage3.validate();
}

const SelmConfig& PipelineConfig::stage(int s) const {
  return s == 1 ? stage1 : s == 2 ? stage2 : stage3;
}

void to_json(nlohmann::json& j, const SelmConfig& c) {
  j = nlohmann::json{{"hidden_neurons", c.hidden_neurons},
                     {"reduced_neurons", c.reduced_neurons},
                     {"stack_iterations", c.stack_iterations},
                     {"ridge", c.ridge},
                     {"activation", activation_name(c.activation)},
                     {"weight_seed", c.weight_seed}};
}

void from_json(const nlohmann::json& j, SelmConfig& c) {
  try {
    if (j.contains("hidden_neurons")) {
      c.hidden_neurons = j.at("hidden_neurons").get<int>();
      if (!j.contains("reduced_neurons")) c.reduced_neurons = 0;
    }
    if (j.contains("reduced_neurons")) c.reduced_neurons = j.at("reduced_neurons").get<int>();
    if (j.contains("stack_iterations")) c.stack_iterations = j.at("stack_iterations").get<int>();
    if (j.contains("ridge")) c.ridge = j.at("ridge").get<double>();
    if (j.contains("weight_seed")) c.weight_seed = j.at("weight_seed").get<std::uint64_t>();
    if (j.contains("activation")) {
      const auto a = j.at("activation").get<std::string>();
      if (a == "sigmoid") c.activation = Activation::sigmoid;
      else if (a == "tanh") c.activation = Activation::tanh;
      else throw ValidationError("unknown activation '" + a + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad SELM config: ") + e.what());
  }
}

void to_json(nlohmann::json& j, const PipelineConfig& c) {
  j = nlohmann::json{{"classes", c.classes},
                     {"reinforcement_layers", c.reinforcement_layers},
                     {"constraint_family", family_name(c.constraint_family)},
                     {"cascade_training", c.cascade_training},
                     {"direct", c.direct},
                     {"seed", c.seed},
                     {"classifier", c.classifier},
                     {"stage1", c.stage1},
                     {"stage2", c.stage2},
                     {"stage3", c.stage3}};
}

void from_json(const nlohmann::json& j, PipelineConfig& c) {
  try {
    if (j.contains("classes")) c.classes = j.at("classes").get<int>();
    if (j.contains("reinforcement_layers")) c.reinforcement_layers = j.at("reinforcement_layers").get<int>();
    if (j.contains("cascade_training")) c.cascade_training = j.at("cascade_training").get<bool>();
    if (j.contains("direct")) c.direct = j.at("direct").get<bool>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("constraint_family")) {
      const auto f = j.at("constraint_family").get<std::string>();
      if (f == "voltage_magnitude") c.constraint_family = ConstraintFamily::voltage_magnitude;
      else if (f == "all_inequalities") c.constraint_family = ConstraintFamily::all_inequalities;
      else throw ValidationError("unknown constraint_family '" + f + "'");
    }
    if (j.contains("selm")) {
      for (SelmConfig* s : {&c.classifier, &c.stage1, &c.stage2, &c.stage3}) from_json(j.at("selm"), *s);
    }
    if (j.contains("classifier")) from_json(j.at("classifier"), c.classifier);
    if (j.contains("stage1")) from_json(j.at("stage1"), c.stage1);
    if (j.contains("stage2")) from_json(j.at("stage2"), c.stage2);
    if (j.contains("stage3")) from_json(j.at("stage3"), c.stage3);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad pipeline config: ") + e.what());
  }
}

std::size_t hamming(const ActiveSetSignature& a, const ActiveSetSignature& b) {
  if (a.size() != b.size()) throw ValidationError("hamming: signature lengths differ");
  std::size_t d = 0;
  for (std::size_t k = 0; k < a.size(); ++k) d += a.active[k] != b.active[k];
  return d;
}

Clustering cluster_by_active_set(const std::vector<ActiveSetSignature>& signatures, int m) {
  if (signatures.empty()) throw ValidationError("cluster_by_active_set: no signatures");
  if (m < 1) throw ValidationError("cluster_by_active_set: m >= 1 required");

  struct Distinct {
    ActiveSetSignature sig;
    std::size_t count = 0;
    std::size_t first = 0;
  };
  std::vector<Distinct> distinct;
  std::map<std::string, std::size_t> index;
  std::vector<std::size_t> sample_to_distinct(signatures.size());
  for (std::size_t s = 0; s < signatures.size(); ++s) {
    auto [it, fresh] = index.emplace(signatures[s].to_string(), distinct.size());
    if (fresh) distinct.push_back({signatures[s], 0, s});
    ++distinct[it->second].count;
    sample_to_distinct[s] = it->second;
  }

  std::vector<std::size_t> order(distinct.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return distinct[a].count > distinct[b].count;
  });

  Clustering out;
  const auto n_distinct = distinct.size();
  std::size_t k_eff = static_cast<std::size_t>(m);
  if (n_distinct < k_eff) {
    out.warnings.push_back("classes reduced from " + std::to_string(m) + " to " +
                           std::to_string(n_distinct) + ": only " + std::to_string(n_distinct) +
                           " distinct signatures");
    k_eff = n_distinct;
  }
  std::vector<std::size_t> medoid(order.begin(), order.begin() + static_cast<long>(k_eff));

  std::vector<std::vector<std::size_t>> dist(n_distinct, std::vector<std::size_t>(n_distinct));
  for (std::size_t a = 0; a < n_distinct; ++a) {
    for (std::size_t b = a; b < n_distinct; ++b) {
      dist[a][b] = dist[b][a] = hamming(distinct[a].sig, distinct[b].sig);
    }
  }

  std::vector<std::size_t> assign(n_distinct, 0);
  for (int iter = 0; iter < 100; ++iter) {
    for (std::size_t d = 0; d < n_distinct; ++d) {
      std::size_t best = 0;
      for (std::size_t k = 1; k < k_eff; ++k) {
        if (dist[d][medoid[k]] < dist[d][medoid[best]]) best = k;
      }
      assign[d] = best;
    }
    bool changed = false;
    for (std::size_t k = 0; k < k_eff; ++k) {
      auto cost = [&](std::size_t cand) {
        std::size_t c = 0;
        for (std::size_t d = 0; d < n_distinct; ++d) {
          if (assign[d] == k) c += distinct[d].count * dist[cand][d];
        }
        return c;
      };
      std::size_t best = medoid[k];
      std::size_t best_cost = cost(best);
      for (std::size_t d = 0; d < n_distinct; ++d) {
        if (assign[d] != k || d == medoid[k]) continue;
        const std::size_t c = cost(d);
        if (c < best_cost || (c == best_cost && best != medoid[k] && distinct[d].first < distinct[best].first)) {
          best = d;
          best_cost = c;
        }
      }
      if (best != medoid[k]) {
        medoid[k] = best;
        changed = true;
      }
    }
    if (!changed) break;
  }

  out.labels.resize(signatures.size());
  for (std::size_t s = 0; s < signatures.size(); ++s) {
    out.labels[s] = static_cast<int>(assign[sample_to_distinct[s]]);
  }
  for (std::size_t k : medoid) out.medoids.push_back(distinct[k].sig);
  return out;
}

StageChain train_stage(const MatrixXd& x, const MatrixXd& t, const SelmConfig& cfg,
                       int reinforcement_layers) {
  if (x.rows() == 0) throw InsufficientData("train_stage: empty slice");
  StageChain chain;
  chain.push_back(train_selm(x, t, cfg));
  MatrixXd prev = selm_predict(chain.back(), x);
  for (int k = 1; k <= reinforcement_layers; ++k) {
    SelmConfig rc = cfg;
    rc.weight_seed = mix(cfg.weight_seed + static_cast<std::uint64_t>(k));
    const MatrixXd in = hcat({&x, &prev});
    chain.push_back(train_selm(in, t, rc));
    if (k < reinforcement_layers) prev = selm_predict(chain.back(), in);
  }
  return chain;
}

MatrixXd predict_stage(const StageChain& chain, const MatrixXd& x) {
  if (chain.empty()) throw ValidationError("predict_stage: empty chain");
  MatrixXd prev = selm_predict(chain.front(), x);
  for (std::size_t k = 1; k < chain.size(); ++k) prev = selm_predict(chain[k], hcat({&x, &prev}));
  return prev;
}

std::size_t small_class_threshold(const PipelineConfig& cfg) {
  const int l = std::max({cfg.stage1.hidden_neurons, cfg.stage2.hidden_neurons, cfg.stage3.hidden_neurons});
  return std::max<std::size_t>(50, static_cast<std::size_t>(5 * l / 100));
}

OpfRegressor train_pipeline(const Dataset& train, const CaseData& c, const PipelineConfig& cfg) {
  cfg.validate();
  train.check();
  if (!(train.layout == ColumnLayout(c))) {
    throw DimensionMismatch("train_pipeline: dataset layout does not match the case");
  }
  if (train.rows() < 10) {
    throw InsufficientData("train_pipeline: " + std::to_string(train.rows()) + " rows, at least 10 required");
  }

  OpfRegressor reg;
  reg.config = cfg;
  reg.layout = train.layout;
  reg.input_spec = train.input_spec;
  reg.target_spec = train.target_spec;
  reg.slack_bus = c.slack_bus();
  reg.case_hash = case_hash(c);
  for (Quantity q : kAllQuantities) {
    reg.group_abs_mean.push_back(
        train.targets.middleCols(reg.layout.offset(q), reg.layout.width(q)).cwiseAbs().mean());
  }

  if (cfg.direct) {
    reg.direct = train_selm(train.inputs, train.targets, seeded(cfg, cfg.stage1, 0, 0));
    return reg;
  }

  if (static_cast<Index>(train.signatures.size()) != train.rows()) {
    throw ValidationError("train_pipeline: every training row needs an active-set signature");
  }
  const InequalityLayout ineq(c);
  std::vector<ActiveSetSignature> restricted;
  restricted.reserve(train.signatures.size());
  for (const auto& s : train.signatures) restricted.push_back(restrict_signature(s, ineq, cfg.constraint_family));

  Clustering cl = cluster_by_active_set(restricted, cfg.classes);
  reg.medoids = cl.medoids;
  reg.warnings = cl.warnings;
  const auto m = static_cast<int>(cl.medoids.size());

  std::vector<std::vector<Index>> rows(static_cast<std::size_t>(m));
  for (std::size_t r = 0; r < cl.labels.size(); ++r) {
    rows[static_cast<std::size_t>(cl.labels[r])].push_back(static_cast<Index>(r));
  }

  if (m >= 2) {
    reg.classifier = train_classifier(train.inputs, cl.labels, m, seeded(cfg, cfg.classifier, 0, 0xC1A55));
  }

  const std::size_t threshold = small_class_threshold(cfg);
  int global = -1;
  reg.class_pool.assign(static_cast<std::size_t>(m), -1);
  for (int k = 0; k < m; ++k) {
    const auto& idx = rows[static_cast<std::size_t>(k)];
    if (m >= 2 && idx.size() < threshold) {
      reg.warnings.push_back("class " + std::to_string(k) + " has " + std::to_string(idx.size()) +
                             " rows (< " + std::to_string(threshold) + "), using the global pool");
      if (global < 0) {
        global = m;
        reg.pools.resize(static_cast<std::size_t>(m) + 1);
      }
      reg.class_pool[static_cast<std::size_t>(k)] = global;
    }
  }
  reg.pools.resize(static_cast<std::size_t>(global < 0 ? m : m + 1));
  for (int k = 0; k < m; ++k) {
    if (reg.class_pool[static_cast<std::size_t>(k)] >= 0) continue;
    const auto& idx = rows[static_cast<std::size_t>(k)];
    reg.class_pool[static_cast<std::size_t>(k)] = k;
    reg.pools[static_cast<std::size_t>(k)] =
        train_pool(select_rows(train.inputs, idx), select_rows(train.targets, idx), reg.layout,
                   reg.slack_bus, cfg, static_cast<std::uint64_t>(k));
  }
  if (global >= 0) {
    reg.pools[static_cast<std::size_t>(global)] =
        train_pool(train.inputs, train.targets, reg.layout, reg.slack_bus, cfg,
                   static_cast<std::uint64_t>(global));
  }
  return reg;
}

namespace {

Prediction infer_impl(const OpfRegressor& reg, const MatrixXd& inputs, int force_class) {
  if (inputs.cols() != reg.layout.n_inputs()) {
    throw DimensionMismatch("inference expects " + std::to_string(reg.layout.n_inputs()) +
                            " input columns, got " + std::to_string(inputs.cols()));
  }
  Prediction out;
  const Index theta_col = reg.layout.offset(Quantity::THETA) + reg.slack_bus;
  if (reg.direct) {
    out.targets = selm_predict(*reg.direct, inputs);
    out.targets.col(theta_col).setZero();
    out.classes.assign(static_cast<std::size_t>(inputs.rows()), 0);
    return out;
  }
  if (force_class >= 0) {
    if (force_class >= reg.n_classes()) throw ValidationError("forced class out of range");
    out.classes.assign(static_cast<std::size_t>(inputs.rows()), force_class);
  } else if (reg.classifier) {
    out.classes = classify(*reg.classifier, inputs);
  } else {
    out.classes.assign(static_cast<std::size_t>(inputs.rows()), 0);
  }
  out.targets.resize(inputs.rows(), reg.layout.n_targets());
  std::vector<std::vector<Index>> by_pool(reg.pools.size());
  for (std::size_t r = 0; r < out.classes.size(); ++r) {
    by_pool[static_cast<std::size_t>(reg.class_pool[static_cast<std::size_t>(out.classes[r])])].push_back(
        static_cast<Index>(r));
  }
  for (std::size_t p = 0; p < by_pool.size(); ++p) {
    if (by_pool[p].empty()) continue;
    const MatrixXd y = run_pool(reg.pools[p], select_rows(inputs, by_pool[p]), reg.layout, reg.slack_bus);
    for (std::size_t r = 0; r < by_pool[p].size(); ++r) out.targets.row(by_pool[p][r]) = y.row(static_cast<Index>(r));
  }
  return out;
}

}  // namespace

Prediction infer_batch(const OpfRegressor& reg, const MatrixXd& inputs) { return infer_impl(reg, inputs, -1); }

Prediction infer_batch_as(const OpfRegressor& reg, const MatrixXd& inputs, int force_class) {
  if (force_class < 0) throw ValidationError("forced class must be >= 0");
  return infer_impl(reg, inputs, force_class);
}

OpfSolution infer_opf(const OpfRegressor& reg, const VectorXd& pd, const VectorXd& qd) {
  if (pd.size() != reg.layout.n_bus || qd.size() != reg.layout.n_bus) {
    throw DimensionMismatch("infer_opf: demand vectors must have one entry per bus");
  }
  MatrixXd x(1, 2 * reg.layout.n_bus);
  x << pd.transpose(), qd.transpose();
  const VectorXd row = infer_batch(reg, x).targets.row(0).transpose();
  const ColumnLayout& l = reg.layout;
  OpfSolution sol;
  sol.pf = row.segment(l.offset(Quantity::PF), l.n_branch);
  sol.qf = row.segment(l.offset(Quantity::QF), l.n_branch);
  sol.state.v = row.segment(l.offset(Quantity::V), l.n_bus);
  sol.state.theta = row.segment(l.offset(Quantity::THETA), l.n_bus);
  sol.pg = row.segment(l.offset(Quantity::PG), l.n_gen);
  sol.qg = row.segment(l.offset(Quantity::QG), l.n_gen);
  sol.objective = row[l.offset(Quantity::F)];
  sol.converged = false;
  return sol;
}

void write_regressor(std::ostream& out, const OpfRegressor& reg) {
  using namespace binary;
  put_magic(out, kRegressorMagic, kRegressorVersion);
  put_string(out, nlohmann::json(reg.config).dump());
  put<std::int64_t>(out, reg.layout.n_bus);
  put<std::int64_t>(out, reg.layout.n_branch);
  put<std::int64_t>(out, reg.layout.n_gen);
  put<std::int64_t>(out, reg.slack_bus);
  put_string(out, reg.case_hash);
  std::vector<std::string> labels;
  for (const auto& l : reg.input_spec) labels.push_back(l.to_string());
  put_strings(out, labels);
  labels.clear();
  for (const auto& l : reg.target_spec) labels.push_back(l.to_string());
  put_strings(out, labels);
  put_doubles(out, reg.group_abs_mean);
  put<std::uint8_t>(out, reg.classifier ? 1 : 0);
  if (reg.classifier) write_selm(out, *reg.classifier);
  labels.clear();
  for (const auto& s : reg.medoids) labels.push_back(s.to_string());
  put_strings(out, labels);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(reg.class_pool.size()));
  for (int p : reg.class_pool) put<std::int32_t>(out, p);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(reg.pools.size()));
  for (const auto& pool : reg.pools) {
    put<std::uint64_t>(out, pool.n_rows);
    for (const auto& chain : pool.stages) put_chain(out, chain);
  }
  put<std::uint8_t>(out, reg.direct ? 1 : 0);
  if (reg.direct) write_selm(out, *reg.direct);
  put_strings(out, reg.warnings);
}

OpfRegressor read_regressor(std::istream& in) {
  using namespace binary;
  const std::uint32_t version = get_magic(in, kRegressorMagic);
  if (version != kRegressorVersion) {
    throw FormatError("unsupported regressor archive version " + std::to_string(version));
  }
  OpfRegressor reg;
  try {
    from_json(nlohmann::json::parse(get_string(in)), reg.config);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad config block in regressor archive: ") + e.what());
  }
  reg.layout.n_bus = get<std::int64_t>(in);
  reg.layout.n_branch = get<std::int64_t>(in);
  reg.layout.n_gen = get<std::int64_t>(in);
  reg.slack_bus = get<std::int64_t>(in);
  reg.case_hash = get_string(in);
  for (const auto& s : get_strings(in)) reg.input_spec.push_back(ColumnLabel::parse(s));
  for (const auto& s : get_strings(in)) reg.target_spec.push_back(ColumnLabel::parse(s));
  reg.group_abs_mean = get_doubles(in);
  if (get<std::uint8_t>(in)) reg.classifier = read_selm(in);
  for (const auto& s : get_strings(in)) reg.medoids.push_back(ActiveSetSignature::from_string(s));
  const auto n_classes = get<std::uint32_t>(in);
  for (std::uint32_t k = 0; k < n_classes; ++k) reg.class_pool.push_back(get<std::int32_t>(in));
  const auto n_pools = get<std::uint32_t>(in);
  for (std::uint32_t k = 0; k < n_pools; ++k) {
    ClassModels pool;
    pool.n_rows = get<std::uint64_t>(in);
    for (auto& chain : pool.stages) chain = get_chain(in);
    reg.pools.push_back(std::move(pool));
  }
  if (get<std::uint8_t>(in)) reg.direct = read_selm(in);
  reg.warnings = get_strings(in);
  for (int p : reg.class_pool) {
    if (p < 0 || p >= static_cast<int>(reg.pools.size())) throw FormatError("class maps to a missing pool");
  }
  return reg;
}

void save_regressor(const OpfRegressor& reg, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write '" + path + "'");
  write_regressor(out, reg);
}

OpfRegressor load_regressor(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read '" + path + "'");
  return read_regressor(in);
}

}  // namespace selmopf
