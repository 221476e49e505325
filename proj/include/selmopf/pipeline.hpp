#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "selmopf/acopf.hpp"
#include "selmopf/dataset.hpp"
#include "selmopf/selm.hpp"

namespace selmopf {

struct PipelineConfig {
  int classes = 2;
  int reinforcement_layers = 2;
  ConstraintFamily constraint_family = ConstraintFamily::voltage_magnitude;
  SelmConfig classifier;
  SelmConfig stage1, stage2, stage3;
  /// Train stages 2 and 3 on upstream predictions instead of true values.
  bool cascade_training = false;
  /// One SELM from (PD, QD) to every target; stage1 settings are used.
  bool direct = false;
  std::uint64_t seed = 1;

  /// reinforcement_layers >= 0 here; the config-file loader demands >= 1.
  void validate() const;
  const SelmConfig& stage(int s) const;
  bool operator==(const PipelineConfig&) const = default;
};

void to_json(nlohmann::json& j, const SelmConfig& c);
void from_json(const nlohmann::json& j, SelmConfig& c);
void to_json(nlohmann::json& j, const PipelineConfig& c);
/// Partial objects override defaults. Throws ValidationError.
void from_json(const nlohmann::json& j, PipelineConfig& c);

struct Clustering {
  std::vector<int> labels;
  std::vector<ActiveSetSignature> medoids;
  std::vector<std::string> warnings;
};

std::size_t hamming(const ActiveSetSignature& a, const ActiveSetSignature& b);

/// k-medoids under Hamming distance, seeded with the m most frequent distinct
/// signatures. m shrinks to the number of distinct signatures when needed.
Clustering cluster_by_active_set(const std::vector<ActiveSetSignature>& signatures, int m);

/// Model 0 maps X to T; model k maps [X | prediction of model k-1] to T.
using StageChain = std::vector<SelmModel>;

StageChain train_stage(const Eigen::MatrixXd& x, const Eigen::MatrixXd& t, const SelmConfig& cfg,
                       int reinforcement_layers);
/// Output of the last model in the chain.
Eigen::MatrixXd predict_stage(const StageChain& chain, const Eigen::MatrixXd& x);

struct ClassModels {
  StageChain stages[3];
  std::size_t n_rows = 0;
  bool operator==(const ClassModels&) const = default;
};

struct OpfRegressor {
  PipelineConfig config;
  ColumnLayout layout;
  std::vector<ColumnLabel> input_spec;
  std::vector<ColumnLabel> target_spec;
  Eigen::Index slack_bus = 0;
  std::string case_hash;
  /// Mean |value| of each target group over the training rows, in
  /// kAllQuantities order (THETA in radians).
  std::vector<double> group_abs_mean;

  std::optional<SelmModel> classifier;
  std::vector<ActiveSetSignature> medoids;
  /// Index into `pools` for each class.
  std::vector<int> class_pool;
  std::vector<ClassModels> pools;
  std::optional<SelmModel> direct;
  std::vector<std::string> warnings;

  int n_classes() const { return static_cast<int>(class_pool.size()); }
  bool operator==(const OpfRegressor&) const = default;
};

/// Rows below this count train against the global pool instead.
std::size_t small_class_threshold(const PipelineConfig& cfg);

OpfRegressor train_pipeline(const Dataset& train, const CaseData& c, const PipelineConfig& cfg);

struct Prediction {
  Eigen::MatrixXd targets;  // target_spec column order
  std::vector<int> classes;
};

/// Throws DimensionMismatch.
Prediction infer_batch(const OpfRegressor& reg, const Eigen::MatrixXd& inputs);
/// `force_class` routes every row to one class regardless of the classifier.
Prediction infer_batch_as(const OpfRegressor& reg, const Eigen::MatrixXd& inputs, int force_class);
OpfSolution infer_opf(const OpfRegressor& reg, const Eigen::VectorXd& pd, const Eigen::VectorXd& qd);

void write_regressor(std::ostream& out, const OpfRegressor& reg);
OpfRegressor read_regressor(std::istream& in);
void save_regressor(const OpfRegressor& reg, const std::string& path);
OpfRegressor load_regressor(const std::string& path);

}  // namespace selmopf
