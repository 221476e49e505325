#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "selmopf/acopf.hpp"
#include "selmopf/case_io.hpp"
#include "selmopf/dataset.hpp"

namespace selmopf {

enum class RenewableKind { wind, pv };
enum class LoadDistribution { uniform, truncated_normal };

/// One renewable unit, injected as negative active load at `bus_id`.
struct RenewableSource {
  int bus_id = 0;  // original bus id
  RenewableKind kind = RenewableKind::wind;
  double capacity = 0.0;  // p.u.
  double weibull_shape = 2.0;
  double weibull_scale = 8.0;  // m/s
  double cut_in = 3.0;
  double rated = 12.0;
  double cut_out = 25.0;
  double beta_alpha = 2.0;
  double beta_beta = 2.0;
};

struct UncertaintyConfig {
  double load_fluctuation = 0.10;
  LoadDistribution load_distribution = LoadDistribution::uniform;
  std::vector<RenewableSource> renewables;
  std::uint64_t seed = 1;

  void validate() const;
  /// sum(capacity) / sum(base pd).
  double penetration(const CaseData& c) const;
};

void to_json(nlohmann::json& j, const UncertaintyConfig& u);
void from_json(const nlohmann::json& j, UncertaintyConfig& u);

struct Scenario {
  Eigen::VectorXd pd;
  Eigen::VectorXd qd;
};

/// Normalized wind output in [0, 1] for a hub-height speed (linear ramp
/// between cut-in and rated, zero beyond cut-out).
double wind_power_fraction(const RenewableSource& src, double speed);

/// Seeded generator for scenario `index`. Each scenario draws from its own
/// substream, so results do not depend on evaluation order.
std::vector<Scenario> sample_scenarios(const CaseData& c, const UncertaintyConfig& u, std::size_t n);
Scenario sample_scenario(const CaseData& c, const UncertaintyConfig& u, std::uint64_t index);

enum class Execution { serial, parallel };

struct LabeledRow {
  Scenario scenario;
  OpfSolution solution;
  ActiveSetSignature signature;
};

/// Solves the OPF for every scenario. Rows whose solve fails (or whose KKT
/// residuals exceed the configured tolerances) are dropped and counted.
/// Throws TooManyFailures when more than 20% of the scenarios fail.
Dataset build_dataset(const CaseData& c, const UncertaintyConfig& u, std::size_t n,
                      const OpfConfig& opf = {}, Execution exec = Execution::parallel);

/// The dataset row for one solved scenario (target columns in TargetLayout order).
Eigen::VectorXd target_row(const OpfSolution& sol);

}  // namespace selmopf
