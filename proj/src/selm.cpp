#include "selmopf/selm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <lapacke.h>

#include "selmopf/binary_io.hpp"
#include "selmopf/errors.hpp"

namespace selmopf {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr char kModelMagic[9] = "SELMMODL";
constexpr std::uint32_t kModelVersion = 1;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void random_layer(std::uint64_t seed, std::size_t layer, Index rows, Index d_in, MatrixXd& w,
                  VectorXd& b) {
  std::mt19937_64 rng(splitmix64(splitmix64(seed) + layer));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  w.resize(rows, d_in);
  b.resize(rows);
  for (Index k = 0; k < rows; ++k) {
    for (Index j = 0; j < d_in; ++j) w(k, j) = u(rng);
  }
  for (Index k = 0; k < rows; ++k) b[k] = u(rng);
}

MatrixXd project(const MatrixXd& h, const VectorXd& center, const MatrixXd& basis) {
  MatrixXd hc = h.rowwise() - center.transpose();
  return hc * basis;
}

MatrixXd concat_cols(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

double rms(const MatrixXd& e) {
  return e.size() ? std::sqrt(e.squaredNorm() / static_cast<double>(e.size())) : 0.0;
}

/// Psi from the normal equations (G + lambda I) Psi = rhs.
MatrixXd solve_normal(MatrixXd g, const MatrixXd& rhs, double lambda) {
  g.diagonal().array() += lambda;
  Eigen::LLT<MatrixXd> llt(g);
  if (llt.info() == Eigen::Success) {
    MatrixXd psi = llt.solve(rhs);
    if (psi.allFinite()) return psi;
  }
  if (lambda == 0.0) {
    throw SingularSystem("H'H is not numerically positive definite and ridge is 0");
  }
  Eigen::LDLT<MatrixXd> ldlt(g);
  MatrixXd psi = ldlt.solve(rhs);
  if (ldlt.info() != Eigen::Success || !psi.allFinite()) {
    throw SingularSystem("ridge system could not be factorized");
  }
  return psi;
}

/// Fills basis, eigenvalues and total_variance from a covariance matrix.
void top_eigenvectors(MatrixXd cov, int l, PcaResult& r) {
  const Index cols = cov.cols();
  r.total_variance = cov.trace();
  const auto n = static_cast<lapack_int>(cols);
  lapack_int found = 0;
  VectorXd w(cols);
  MatrixXd z(cols, l);
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(cols));
  const lapack_int info = LAPACKE_dsyevr(
      LAPACK_COL_MAJOR, 'V', l == cols ? 'A' : 'I', 'L', n, cov.data(), n, 0.0, 0.0,
      n - static_cast<lapack_int>(l) + 1, n, 0.0, &found, w.data(), z.data(), n, support.data());
  if (info != 0 || found != l) throw SingularSystem("eigendecomposition failed in pca_reduce");

  r.basis.resize(cols, l);
  r.eigenvalues.resize(l);
  for (int k = 0; k < l; ++k) {
    const int src = l - 1 - k;
    Index imax = 0;
    z.col(src).cwiseAbs().maxCoeff(&imax);
    const double sign = z(imax, src) < 0.0 ? -1.0 : 1.0;
    r.basis.col(k) = sign * z.col(src);
    r.eigenvalues[k] = w[src];
  }
}

/// Forward pass over rows that are already normalized.
MatrixXd forward(const SelmModel& m, const MatrixXd& xn) {
  const Activation act = m.config.activation;
  MatrixXd h = kernels::omp::hidden_layer(xn, m.layers[0].w, m.layers[0].b, act);
  for (std::size_t i = 1; i < m.layers.size(); ++i) {
    const SelmLayer& prev = m.layers[i - 1];
    MatrixXd fresh = kernels::omp::hidden_layer(xn, m.layers[i].w, m.layers[i].b, act);
    h = concat_cols(project(h, prev.center, prev.v_reduced), fresh);
  }
  return h * m.layers.back().psi;
}

}  // namespace

int SelmConfig::effective_reduced() const {
  return reduced_neurons > 0 ? reduced_neurons : std::max(1, hidden_neurons / 10);
}

void SelmConfig::validate() const {
  if (hidden_neurons < 1) throw ValidationError("SelmConfig: hidden_neurons >= 1 required");
  const int l = effective_reduced();
  if (l < 1 || l > hidden_neurons) throw ValidationError("SelmConfig: 1 <= l <= L required");
  if (stack_iterations < 1) throw ValidationError("SelmConfig: stack_iterations >= 1 required");
  if (!(ridge >= 0.0) || !std::isfinite(ridge)) throw ValidationError("SelmConfig: ridge >= 0 required");
}

ZScore ZScore::fit(const MatrixXd& m, std::vector<Index>* constant_columns) {
  ZScore z;
  const Index n = m.rows();
  z.mean = m.colwise().mean().transpose();
  z.stddev.resize(m.cols());
  for (Index k = 0; k < m.cols(); ++k) {
    const double var =
        n > 1 ? (m.col(k).array() - z.mean[k]).square().sum() / static_cast<double>(n - 1) : 0.0;
    const double sd = std::sqrt(var);
    if (!(sd > 1e-8 * std::max(1.0, std::abs(z.mean[k])))) {
      z.stddev[k] = 1.0;
      if (constant_columns) constant_columns->push_back(k);
    } else {
      z.stddev[k] = sd;
    }
  }
  return z;
}

MatrixXd ZScore::apply(const MatrixXd& m) const {
  return ((m.rowwise() - mean.transpose()).array().rowwise() / stddev.transpose().array()).matrix();
}

MatrixXd ZScore::invert(const MatrixXd& z) const {
  return ((z.array().rowwise() * stddev.transpose().array()).rowwise() + mean.transpose().array())
      .matrix();
}

MatrixXd hidden_layer(const MatrixXd& x, const MatrixXd& w, const VectorXd& b, Activation act) {
  if (x.cols() != w.cols() || w.rows() != b.size()) {
    throw DimensionMismatch("hidden_layer: X is " + std::to_string(x.rows()) + "x" +
                            std::to_string(x.cols()) + ", W is " + std::to_string(w.rows()) + "x" +
                            std::to_string(w.cols()) + ", b has " + std::to_string(b.size()));
  }
  return kernels::omp::hidden_layer(x, w, b, act);
}

MatrixXd solve_output_weights(const MatrixXd& h, const MatrixXd& t, double lambda) {
  if (h.rows() != t.rows()) throw DimensionMismatch("solve_output_weights: H and T row counts differ");
  if (!(lambda >= 0.0)) throw ValidationError("solve_output_weights: lambda >= 0 required");
  return solve_normal(kernels::omp::gram(h), kernels::omp::cross(h, t), lambda);
}

PcaResult pca_reduce(const MatrixXd& h, int l) {
  if (l < 1 || l > h.cols()) throw ValidationError("pca_reduce: 1 <= l <= L required");
  if (h.rows() < 2) throw ValidationError("pca_reduce: at least two rows required");
  PcaResult r;
  r.center = h.colwise().mean().transpose();
  const MatrixXd hc = h.rowwise() - r.center.transpose();
  top_eigenvectors(kernels::omp::gram(hc) / static_cast<double>(h.rows() - 1), l, r);
  r.reduced = hc * r.basis;
  return r;
}

SelmModel train_selm(const MatrixXd& x, const MatrixXd& t, const SelmConfig& cfg) {
  cfg.validate();
  if (x.rows() != t.rows()) throw DimensionMismatch("train_selm: X and T row counts differ");
  if (x.rows() < 2) throw ValidationError("train_selm: at least two rows required");
  if (!x.allFinite() || !t.allFinite()) throw ValidationError("train_selm: non-finite training data");

  SelmModel m;
  m.config = cfg;
  m.input_norm = ZScore::fit(x);
  std::vector<Index> constant;
  m.target_norm = ZScore::fit(t, &constant);
  for (Index k : constant) {
    m.warnings.push_back("DegenerateTarget: column " + std::to_string(k) + " is constant");
  }
  const MatrixXd xn = m.input_norm.apply(x);
  const MatrixXd tn = m.target_norm.apply(t);

  const Index big_l = cfg.hidden_neurons;
  const Index small_l = cfg.effective_reduced();
  MatrixXd h;
  for (int it = 0; it < cfg.stack_iterations; ++it) {
    SelmLayer layer;
    const Index fresh = it == 0 ? big_l : big_l - small_l;
    random_layer(cfg.weight_seed, static_cast<std::size_t>(it), fresh, xn.cols(), layer.w, layer.b);
    MatrixXd hf = kernels::omp::hidden_layer(xn, layer.w, layer.b, cfg.activation);
    h = it == 0 ? std::move(hf) : concat_cols(h, hf);

    const MatrixXd g = kernels::omp::gram(h);
    layer.psi = solve_normal(g, kernels::omp::cross(h, tn), cfg.ridge);
    const MatrixXd fit = h * layer.psi;
    m.train_rmse_normalized.push_back(rms(fit - tn));
    m.train_rmse.push_back(rms(m.target_norm.invert(fit) - t));

    if (it + 1 < cfg.stack_iterations) {
      // Centered covariance from the gram already formed for the ridge solve.
      PcaResult p;
      p.center = h.colwise().mean().transpose();
      const double ns = static_cast<double>(h.rows());
      top_eigenvectors((g - ns * p.center * p.center.transpose()) / (ns - 1.0),
                       static_cast<int>(small_l), p);
      layer.v_reduced = std::move(p.basis);
      layer.center = std::move(p.center);
      h = project(h, layer.center, layer.v_reduced);
    }
    m.layers.push_back(std::move(layer));
  }
  return m;
}

MatrixXd selm_predict(const SelmModel& model, const MatrixXd& x) {
  if (model.layers.empty()) throw ValidationError("selm_predict: untrained model");
  if (x.cols() != model.d_in()) {
    throw DimensionMismatch("selm_predict: model expects " + std::to_string(model.d_in()) +
                            " input columns, got " + std::to_string(x.cols()));
  }
  // Every block is padded to kBlockRows so each row goes through identically
  // shaped products: a row's output does not depend on the batch it is in.
  constexpr Index block = kernels::kBlockRows;
  const Index ns = x.rows();
  const Index blocks = (ns + block - 1) / block;
  MatrixXd out(ns, model.d_out());
#pragma omp parallel for schedule(static)
  for (Index blk = 0; blk < blocks; ++blk) {
    const Index r0 = blk * block;
    const Index nr = std::min(block, ns - r0);
    MatrixXd xb = MatrixXd::Zero(block, x.cols());
    xb.topRows(nr) = model.input_norm.apply(x.middleRows(r0, nr));
    const MatrixXd yb = forward(model, xb);
    out.middleRows(r0, nr) = model.target_norm.invert(yb.topRows(nr));
  }
  return out;
}

SelmModel train_classifier(const MatrixXd& x, const std::vector<int>& labels, int n_classes,
                           const SelmConfig& cfg) {
  if (n_classes < 1) throw ValidationError("train_classifier: at least one class required");
  if (static_cast<Index>(labels.size()) != x.rows()) {
    throw DimensionMismatch("train_classifier: one label per row required");
  }
  MatrixXd onehot = MatrixXd::Zero(x.rows(), n_classes);
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (labels[r] < 0 || labels[r] >= n_classes) {
      throw ValidationError("train_classifier: label " + std::to_string(labels[r]) + " out of range");
    }
    onehot(static_cast<Index>(r), labels[r]) = 1.0;
  }
  SelmModel m = train_selm(x, onehot, cfg);
  m.n_classes = n_classes;
  return m;
}

std::vector<int> argmax_rows(const MatrixXd& scores) {
  std::vector<int> out(static_cast<std::size_t>(scores.rows()), 0);
  for (Index r = 0; r < scores.rows(); ++r) {
    int best = 0;
    for (Index k = 1; k < scores.cols(); ++k) {
      if (scores(r, k) > scores(r, best)) best = static_cast<int>(k);
    }
    out[static_cast<std::size_t>(r)] = best;
  }
  return out;
}

std::vector<int> classify(const SelmModel& model, const MatrixXd& x) {
  if (!model.is_classifier()) throw ValidationError("classify: model is not a classification head");
  return argmax_rows(selm_predict(model, x));
}

void write_selm(std::ostream& out, const SelmModel& m) {
  using namespace binary;
  put_magic(out, kModelMagic, kModelVersion);
  put<std::int32_t>(out, m.config.hidden_neurons);
  put<std::int32_t>(out, m.config.reduced_neurons);
  put<std::int32_t>(out, m.config.stack_iterations);
  put<double>(out, m.config.ridge);
  put<std::uint8_t>(out, m.config.activation == Activation::sigmoid ? 0 : 1);
  put<std::uint64_t>(out, m.config.weight_seed);
  put<std::int32_t>(out, m.n_classes);
  put_vector(out, m.input_norm.mean);
  put_vector(out, m.input_norm.stddev);
  put_vector(out, m.target_norm.mean);
  put_vector(out, m.target_norm.stddev);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(m.layers.size()));
  for (const auto& l : m.layers) {
    put_matrix(out, l.w);
    put_vector(out, l.b);
    put_matrix(out, l.v_reduced);
    put_vector(out, l.center);
    put_matrix(out, l.psi);
  }
  put_doubles(out, m.train_rmse);
  put_doubles(out, m.train_rmse_normalized);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(m.warnings.size()));
  for (const auto& w : m.warnings) put_string(out, w);
}

SelmModel read_selm(std::istream& in) {
  using namespace binary;
  const std::uint32_t version = get_magic(in, kModelMagic);
  if (version != kModelVersion) {
    throw FormatError("unsupported SELM model version " + std::to_string(version));
  }
  SelmModel m;
  m.config.hidden_neurons = get<std::int32_t>(in);
  m.config.reduced_neurons = get<std::int32_t>(in);
  m.config.stack_iterations = get<std::int32_t>(in);
  m.config.ridge = get<double>(in);
  m.config.activation = get<std::uint8_t>(in) == 0 ? Activation::sigmoid : Activation::tanh;
  m.config.weight_seed = get<std::uint64_t>(in);
  m.n_classes = get<std::int32_t>(in);
  m.input_norm.mean = get_vector(in);
  m.input_norm.stddev = get_vector(in);
  m.target_norm.mean = get_vector(in);
  m.target_norm.stddev = get_vector(in);
  const auto n_layers = get<std::uint32_t>(in);
  if (n_layers == 0 || n_layers > 100000) throw FormatError("implausible layer count in SELM model");
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    SelmLayer l;
    l.w = get_matrix(in);
    l.b = get_vector(in);
    l.v_reduced = get_matrix(in);
    l.center = get_vector(in);
    l.psi = get_matrix(in);
    m.layers.push_back(std::move(l));
  }
  m.train_rmse = get_doubles(in);
  m.train_rmse_normalized = get_doubles(in);
  const auto n_warn = get<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < n_warn; ++i) m.warnings.push_back(get_string(in));
  return m;
}

void save_selm(const SelmModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write '" + path + "'");
  write_selm(out, model);
}

SelmModel load_selm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read '" + path + "'");
  return read_selm(in);
}

}  // namespace selmopf
