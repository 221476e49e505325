#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "selmopf/acopf.hpp"
#include "selmopf/dataset.hpp"
#include "selmopf/pipeline.hpp"
#include "selmopf/scenario.hpp"

namespace selmopf {

inline constexpr std::size_t kGroupCount = 7;
/// One value per target group, kAllQuantities order.
using GroupValues = std::array<double, kGroupCount>;

struct ThresholdSpec {
  double v_thr = 0.001;        // p.u.
  double theta_thr_deg = 0.5;  // degrees
  double relative = 0.01;      // PF, QF, PG, QG: fraction of the training mean |value|
  double f_relative = 0.001;   // F: fraction of the training mean |value|

  void validate() const;
  /// Absolute thresholds; THETA stays in degrees.
  GroupValues absolute(const std::vector<double>& group_abs_mean) const;
};

/// Percentage of elements per group with |pred - truth| < threshold. THETA
/// errors are converted to degrees first. Throws DimensionMismatch.
GroupValues accuracy_index(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth,
                           const GroupValues& thresholds, const ColumnLayout& layout);
double mean_over_groups(const GroupValues& p);

enum class Method { M3, M4, M5, M6 };
const char* method_name(Method m);
/// Throws ValidationError.
Method parse_method(const std::string& s);
/// M3 direct SELM; M4 three stages; M5 adds reinforcement; M6 adds classing.
PipelineConfig method_config(Method m, const PipelineConfig& base);

struct MethodResult {
  std::string method;
  std::uint64_t seed = 0;
  GroupValues p{};
  double mean_p = 0.0;
  GroupValues thresholds{};
  std::size_t n_train = 0, n_test = 0;
  double train_seconds = 0.0, test_seconds = 0.0;
  std::vector<std::string> warnings;
};

struct EvalReport {
  std::string case_name;
  std::string case_hash;
  nlohmann::ordered_json config;
  std::vector<MethodResult> results;
  std::string timestamp;
};

/// Deterministic fields at the top level; timestamp and wall times live under
/// "volatile".
nlohmann::ordered_json report_json(const EvalReport& r);
EvalReport report_from_json(const nlohmann::ordered_json& j);
std::string report_csv(const EvalReport& r);
void save_report(const EvalReport& r, const std::string& path);

MethodResult evaluate_regressor(const OpfRegressor& reg, const Dataset& test, const ThresholdSpec& spec,
                                const std::string& label, std::uint64_t seed);

/// Seed of the held-out scenario stream paired with training seed `seed`.
std::uint64_t test_stream_seed(std::uint64_t seed);

struct CompareOptions {
  std::size_t train_n = 2000;
  std::size_t test_n = 500;
  std::vector<Method> methods{Method::M3, Method::M4, Method::M5, Method::M6};
  std::vector<std::uint64_t> seeds{1, 2, 3};
  PipelineConfig pipeline;
  OpfConfig opf;
  ThresholdSpec thresholds;
};

/// One (train, test) dataset pair per seed, shared by every method.
EvalReport compare_methods(const CaseData& c, const UncertaintyConfig& u, const CompareOptions& opt);

}  // namespace selmopf
