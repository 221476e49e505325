#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "selmopf/kernels.hpp"

namespace selmopf {

struct SelmConfig {
  int hidden_neurons = 1000;
  int reduced_neurons = 0;  // 0 means hidden_neurons / 10 (at least 1)
  int stack_iterations = 10;
  double ridge = 0x1p-30;
  Activation activation = Activation::sigmoid;
  std::uint64_t weight_seed = 1;

  int effective_reduced() const;
  /// Throws ValidationError.
  void validate() const;
  bool operator==(const SelmConfig&) const = default;
};

/// Column-wise z-score statistics. Zero-variance columns keep stddev 1.
struct ZScore {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;

  static ZScore fit(const Eigen::MatrixXd& m, std::vector<Eigen::Index>* constant_columns = nullptr);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& m) const;
  Eigen::MatrixXd invert(const Eigen::MatrixXd& z) const;
  bool operator==(const ZScore&) const = default;
};

struct SelmLayer {
  Eigen::MatrixXd w;          // fresh neurons x d_in
  Eigen::VectorXd b;          // fresh neurons
  Eigen::MatrixXd v_reduced;  // L x l, empty on the last layer
  Eigen::VectorXd center;     // L column means removed before projection
  Eigen::MatrixXd psi;        // L x n_out
  bool operator==(const SelmLayer&) const = default;
};

struct SelmModel {
  SelmConfig config;
  std::vector<SelmLayer> layers;
  ZScore input_norm;
  ZScore target_norm;
  std::vector<double> train_rmse;             // original units, one per iteration
  std::vector<double> train_rmse_normalized;  // z-score units
  std::vector<std::string> warnings;
  int n_classes = 0;  // > 0 for a classification head

  Eigen::Index d_in() const { return input_norm.mean.size(); }
  Eigen::Index d_out() const { return target_norm.mean.size(); }
  bool is_classifier() const { return n_classes > 0; }
  bool operator==(const SelmModel&) const = default;
};

/// H = g(X W' + 1 b').
Eigen::MatrixXd hidden_layer(const Eigen::MatrixXd& x, const Eigen::MatrixXd& w,
                             const Eigen::VectorXd& b, Activation act);

/// Psi = (lambda I + H'H)^-1 H'T by Cholesky. Throws SingularSystem.
Eigen::MatrixXd solve_output_weights(const Eigen::MatrixXd& h, const Eigen::MatrixXd& t, double lambda);

struct PcaResult {
  Eigen::MatrixXd reduced;      // Ns x l
  Eigen::MatrixXd basis;        // L x l, orthonormal columns
  Eigen::VectorXd center;       // L
  Eigen::VectorXd eigenvalues;  // top l covariance eigenvalues, descending
  double total_variance = 0.0;  // trace of the covariance
};

/// Top-l principal directions of the column-centered H.
PcaResult pca_reduce(const Eigen::MatrixXd& h, int l);

SelmModel train_selm(const Eigen::MatrixXd& x, const Eigen::MatrixXd& t, const SelmConfig& cfg);
/// Throws DimensionMismatch.
Eigen::MatrixXd selm_predict(const SelmModel& model, const Eigen::MatrixXd& x);

SelmModel train_classifier(const Eigen::MatrixXd& x, const std::vector<int>& labels, int n_classes,
                           const SelmConfig& cfg);
std::vector<int> classify(const SelmModel& model, const Eigen::MatrixXd& x);
/// Row-wise argmax, ties to the lowest column.
std::vector<int> argmax_rows(const Eigen::MatrixXd& scores);

void write_selm(std::ostream& out, const SelmModel& model);
SelmModel read_selm(std::istream& in);
void save_selm(const SelmModel& model, const std::string& path);
SelmModel load_selm(const std::string& path);

}  // namespace selmopf
