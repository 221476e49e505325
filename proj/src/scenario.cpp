#include "selmopf/scenario.hpp"

#include <cmath>
#include <optional>
#include <random>

#include "selmopf/errors.hpp"

namespace selmopf {

using Eigen::Index;
using Eigen::VectorXd;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::mt19937_64 substream(std::uint64_t seed, std::uint64_t index) {
  return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(index + 0x5eedULL)));
}

double draw_beta(std::mt19937_64& rng, double a, double b) {
  std::gamma_distribution<double> ga(a, 1.0), gb(b, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  return x + y > 0.0 ? x / (x + y) : 0.0;
}

const char* kind_name(RenewableKind k) { return k == RenewableKind::wind ? "wind" : "pv"; }

}  // namespace

void UncertaintyConfig::validate() const {
  if (!(load_fluctuation >= 0.0 && load_fluctuation < 1.0)) {
    throw ValidationError("UncertaintyConfig: 0 <= load_fluctuation < 1 violated");
  }
  for (const auto& r : renewables) {
    if (!(r.capacity >= 0.0)) throw ValidationError("UncertaintyConfig: capacity >= 0 violated");
    if (r.kind == RenewableKind::wind) {
      if (!(r.weibull_shape > 0.0 && r.weibull_scale > 0.0)) {
        throw ValidationError("UncertaintyConfig: Weibull parameters must be > 0");
      }
      if (!(0.0 <= r.cut_in && r.cut_in < r.rated && r.rated < r.cut_out)) {
        throw ValidationError("UncertaintyConfig: cut_in < rated < cut_out required");
      }
    } else if (!(r.beta_alpha > 0.0 && r.beta_beta > 0.0)) {
      throw ValidationError("UncertaintyConfig: Beta parameters must be > 0");
    }
  }
}

double UncertaintyConfig::penetration(const CaseData& c) const {
  double cap = 0.0, load = 0.0;
  for (const auto& r : renewables) cap += r.capacity;
  for (const auto& b : c.buses) load += b.pd;
  return load > 0.0 ? cap / load : 0.0;
}

void to_json(nlohmann::json& j, const UncertaintyConfig& u) {
  j = nlohmann::json::object();
  j["load_fluctuation"] = u.load_fluctuation;
  j["load_distribution"] =
      u.load_distribution == LoadDistribution::uniform ? "uniform" : "truncated_normal";
  j["seed"] = u.seed;
  auto arr = nlohmann::json::array();
  for (const auto& r : u.renewables) {
    nlohmann::json e;
    e["bus"] = r.bus_id;
    e["kind"] = kind_name(r.kind);
    e["capacity"] = r.capacity;
    if (r.kind == RenewableKind::wind) {
      e["weibull_shape"] = r.weibull_shape;
      e["weibull_scale"] = r.weibull_scale;
      e["cut_in"] = r.cut_in;
      e["rated"] = r.rated;
      e["cut_out"] = r.cut_out;
    } else {
      e["beta_alpha"] = r.beta_alpha;
      e["beta_beta"] = r.beta_beta;
    }
    arr.push_back(e);
  }
  j["renewables"] = arr;
}

void from_json(const nlohmann::json& j, UncertaintyConfig& u) {
  u = UncertaintyConfig{};
  u.load_fluctuation = j.value("load_fluctuation", u.load_fluctuation);
  const std::string dist = j.value("load_distribution", std::string("uniform"));
  if (dist == "uniform") u.load_distribution = LoadDistribution::uniform;
  else if (dist == "truncated_normal") u.load_distribution = LoadDistribution::truncated_normal;
  else throw ValidationError("unknown load_distribution '" + dist + "'");
  u.seed = j.value("seed", u.seed);
  if (j.contains("renewables")) {
    for (const auto& e : j.at("renewables")) {
      RenewableSource r;
      r.bus_id = e.at("bus").get<int>();
      const std::string kind = e.at("kind").get<std::string>();
      if (kind == "wind") r.kind = RenewableKind::wind;
      else if (kind == "pv") r.kind = RenewableKind::pv;
      else throw ValidationError("unknown renewable kind '" + kind + "'");
      r.capacity = e.at("capacity").get<double>();
      r.weibull_shape = e.value("weibull_shape", r.weibull_shape);
      r.weibull_scale = e.value("weibull_scale", r.weibull_scale);
      r.cut_in = e.value("cut_in", r.cut_in);
      r.rated = e.value("rated", r.rated);
      r.cut_out = e.value("cut_out", r.cut_out);
      r.beta_alpha = e.value("beta_alpha", r.beta_alpha);
      r.beta_beta = e.value("beta_beta", r.beta_beta);
      u.renewables.push_back(r);
    }
  }
}

double wind_power_fraction(const RenewableSource& src, double speed) {
  if (speed < src.cut_in || speed >= src.cut_out) return 0.0;
  if (speed >= src.rated) return 1.0;
  return (speed - src.cut_in) / (src.rated - src.cut_in);
}

Scenario sample_scenario(const CaseData& c, const UncertaintyConfig& u, std::uint64_t index) {
  const auto n = static_cast<Index>(c.n_bus());
  std::mt19937_64 rng = substream(u.seed, index);
  const double r = u.load_fluctuation;
  Scenario s{VectorXd(n), VectorXd(n)};
  std::uniform_real_distribution<double> uni(-r, r);
  std::normal_distribution<double> normal(0.0, 0.5 * r);
  for (Index i = 0; i < n; ++i) {
    double factor = 0.0;
    if (r > 0.0) {
      if (u.load_distribution == LoadDistribution::uniform) {
        factor = uni(rng);
      } else {
        do {
          factor = normal(rng);
        } while (std::abs(factor) > r);
      }
    }
    s.pd[i] = c.buses[i].pd * (1.0 + factor);
    s.qd[i] = c.buses[i].qd * (1.0 + factor);
  }
  for (const auto& src : u.renewables) {
    const int bus = c.bus_index(src.bus_id);
    if (bus < 0) throw ValidationError("renewable at unknown bus " + std::to_string(src.bus_id));
    double fraction = 0.0;
    if (src.kind == RenewableKind::wind) {
      std::weibull_distribution<double> speed(src.weibull_shape, src.weibull_scale);
      fraction = wind_power_fraction(src, speed(rng));
    } else {
      fraction = draw_beta(rng, src.beta_alpha, src.beta_beta);
    }
    s.pd[bus] -= src.capacity * fraction;
  }
  return s;
}

std::vector<Scenario> sample_scenarios(const CaseData& c, const UncertaintyConfig& u, std::size_t n) {
  u.validate();
  std::vector<Scenario> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) out.push_back(sample_scenario(c, u, k));
  return out;
}

VectorXd target_row(const OpfSolution& sol) {
  const Index nl = sol.pf.size(), nb = sol.state.v.size(), ng = sol.pg.size();
  VectorXd row(2 * nl + 2 * nb + 2 * ng + 1);
  row << sol.pf, sol.qf, sol.state.v, sol.state.theta, sol.pg, sol.qg, sol.objective;
  return row;
}

Dataset build_dataset(const CaseData& c, const UncertaintyConfig& u, std::size_t n,
                      const OpfConfig& opf, Execution exec) {
  if (n < 1) throw ValidationError("build_dataset: n >= 1 required");
  u.validate();
  opf.validate();
  for (const auto& src : u.renewables) {
    if (c.bus_index(src.bus_id) < 0) throw ValidationError("renewable at unknown bus " + std::to_string(src.bus_id));
  }

  std::vector<std::optional<LabeledRow>> solved(n);
  auto label = [&](std::size_t k) {
    Scenario s = sample_scenario(c, u, k);
    try {
      OpfSolution sol = solve_acopf(c, s.pd, s.qd, opf);
      const KktResiduals r = kkt_residuals(sol, c, s.pd, s.qd);
      if (r.primal_eq > opf.feas_tol || r.primal_ineq > opf.feas_tol ||
          r.stationarity > opf.stat_tol || r.complementarity > opf.comp_tol ||
          r.dual_feas > opf.comp_tol) {
        return;
      }
      ActiveSetSignature sig = extract_active_set(sol, opf.active_tol);
      solved[k] = LabeledRow{std::move(s), std::move(sol), std::move(sig)};
    } catch (const Infeasible&) {
    } catch (const MaxIterations&) {
    }
  };

  const auto count = static_cast<long long>(n);
  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(dynamic, 4)
    for (long long k = 0; k < count; ++k) label(static_cast<std::size_t>(k));
  } else {
    for (long long k = 0; k < count; ++k) label(static_cast<std::size_t>(k));
  }

  std::size_t ok = 0;
  for (const auto& row : solved) ok += row.has_value();
  const std::size_t failed = n - ok;
  if (static_cast<double>(failed) > 0.2 * static_cast<double>(n)) {
    throw TooManyFailures(std::to_string(failed) + " of " + std::to_string(n) +
                          " scenarios failed to solve (limit 20%)");
  }

  Dataset d;
  d.layout = ColumnLayout(c);
  d.input_spec = input_labels(c);
  d.target_spec = target_labels(c);
  d.inputs.resize(static_cast<Index>(ok), d.layout.n_inputs());
  d.targets.resize(static_cast<Index>(ok), d.layout.n_targets());
  Index r = 0;
  for (auto& row : solved) {
    if (!row) continue;
    d.inputs.row(r) << row->scenario.pd.transpose(), row->scenario.qd.transpose();
    d.targets.row(r) = target_row(row->solution).transpose();
    d.signatures.push_back(std::move(row->signature));
    ++r;
  }
  d.meta.seed = u.seed;
  d.meta.case_name = c.name;
  d.meta.case_hash = case_hash(c);
  d.meta.feas_tol = opf.feas_tol;
  d.meta.comp_tol = opf.comp_tol;
  d.meta.stat_tol = opf.stat_tol;
  d.meta.active_tol = opf.active_tol;
  d.meta.n_requested = n;
  d.meta.n_failed = failed;
  d.meta.uncertainty = nlohmann::json(u).dump();
  d.meta.generation_timestamp = utc_timestamp();
  d.check();
  return d;
}

}  // namespace selmopf
