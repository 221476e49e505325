#pragma once

#include <Eigen/Dense>

namespace selmopf {

enum class Activation { sigmoid, tanh };

/// Dense kernels behind SELM training. `serial::` is the plain-loop
/// reference used by the tests; `omp::` splits rows into fixed blocks of
/// kBlockRows and reduces partial results in block order, so its output does
/// not depend on the number of threads.
namespace kernels {

inline constexpr Eigen::Index kBlockRows = 256;

namespace serial {

/// H(s, k) = g(W.row(k) . X.row(s) + b(k)); X is Ns x d, W is L x d.
Eigen::MatrixXd hidden_layer(const Eigen::MatrixXd& x, const Eigen::MatrixXd& w,
                             const Eigen::VectorXd& b, Activation act);
/// A' A.
Eigen::MatrixXd gram(const Eigen::MatrixXd& a);
/// A' B.
Eigen::MatrixXd cross(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

}  // namespace serial

namespace omp {

Eigen::MatrixXd hidden_layer(const Eigen::MatrixXd& x, const Eigen::MatrixXd& w,
                             const Eigen::VectorXd& b, Activation act);
Eigen::MatrixXd gram(const Eigen::MatrixXd& a);
Eigen::MatrixXd cross(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

}  // namespace omp

int max_threads();

}  // namespace kernels
}  // namespace selmopf
