#include "selmopf/kernels.hpp"

#include <cmath>
#include <vector>

#include <omp.h>

namespace selmopf::kernels {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

inline double activate(double z, Activation act) {
  return act == Activation::sigmoid ? 1.0 / (1.0 + std::exp(-z)) : std::tanh(z);
}

Index block_count(Index rows) { return (rows + kBlockRows - 1) / kBlockRows; }

}  // namespace

int max_threads() { return omp_get_max_threads(); }

namespace serial {

MatrixXd hidden_layer(const MatrixXd& x, const MatrixXd& w, const VectorXd& b, Activation act) {
  const Index ns = x.rows(), d = x.cols(), l = w.rows();
  MatrixXd h(ns, l);
  for (Index s = 0; s < ns; ++s) {
    for (Index k = 0; k < l; ++k) {
      double z = b[k];
      for (Index j = 0; j < d; ++j) z += w(k, j) * x(s, j);
      h(s, k) = activate(z, act);
    }
  }
  return h;
}

MatrixXd gram(const MatrixXd& a) {
  const Index n = a.rows(), m = a.cols();
  MatrixXd g(m, m);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j <= i; ++j) {
      double acc = 0.0;
      for (Index s = 0; s < n; ++s) acc += a(s, i) * a(s, j);
      g(i, j) = acc;
      g(j, i) = acc;
    }
  }
  return g;
}

MatrixXd cross(const MatrixXd& a, const MatrixXd& b) {
  const Index n = a.rows();
  MatrixXd c(a.cols(), b.cols());
  for (Index i = 0; i < a.cols(); ++i) {
    for (Index j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (Index s = 0; s < n; ++s) acc += a(s, i) * b(s, j);
      c(i, j) = acc;
    }
  }
  return c;
}

}  // namespace serial

namespace omp {

MatrixXd hidden_layer(const MatrixXd& x, const MatrixXd& w, const VectorXd& b, Activation act) {
  const Index ns = x.rows(), l = w.rows();
  MatrixXd h(ns, l);
  const Index blocks = block_count(ns);
#pragma omp parallel for schedule(static)
  for (Index blk = 0; blk < blocks; ++blk) {
    const Index r0 = blk * kBlockRows;
    const Index nr = std::min(kBlockRows, ns - r0);
    auto out = h.middleRows(r0, nr);
    out.noalias() = x.middleRows(r0, nr) * w.transpose();
    out.rowwise() += b.transpose();
    if (act == Activation::sigmoid) {
      out = (1.0 + (-out.array()).exp()).inverse().matrix();
    } else {
      out = out.array().tanh().matrix();
    }
  }
  return h;
}

MatrixXd gram(const MatrixXd& a) {
  const Index m = a.cols();
  const Index blocks = block_count(a.rows());
  std::vector<MatrixXd> partial(static_cast<std::size_t>(blocks));
#pragma omp parallel for schedule(static)
  for (Index blk = 0; blk < blocks; ++blk) {
    const Index r0 = blk * kBlockRows;
    const Index nr = std::min(kBlockRows, a.rows() - r0);
    MatrixXd& p = partial[static_cast<std::size_t>(blk)];
    const auto rows = a.middleRows(r0, nr);
    p.noalias() = rows.transpose() * rows;
  }
  MatrixXd g = MatrixXd::Zero(m, m);
  for (const auto& p : partial) g += p;
  g.triangularView<Eigen::StrictlyUpper>() = g.transpose();
  return g;
}

MatrixXd cross(const MatrixXd& a, const MatrixXd& b) {
  const Index blocks = block_count(a.rows());
  std::vector<MatrixXd> partial(static_cast<std::size_t>(blocks));
#pragma omp parallel for schedule(static)
  for (Index blk = 0; blk < blocks; ++blk) {
    const Index r0 = blk * kBlockRows;
    const Index nr = std::min(kBlockRows, a.rows() - r0);
    partial[static_cast<std::size_t>(blk)].noalias() =
        a.middleRows(r0, nr).transpose() * b.middleRows(r0, nr);
  }
  MatrixXd c = MatrixXd::Zero(a.cols(), b.cols());
  for (const auto& p : partial) c += p;
  return c;
}

}  // namespace omp
}  // namespace selmopf::kernels
