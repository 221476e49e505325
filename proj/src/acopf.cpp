#include "selmopf/acopf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "selmopf/errors.hpp"

namespace selmopf {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void OpfConfig::validate() const {
  if (!(feas_tol > 0.0) || !(comp_tol > 0.0) || !(stat_tol > 0.0) || !(active_tol > 0.0)) {
    throw ValidationError("OpfConfig: tolerances must be positive");
  }
  if (max_iter < 1) throw ValidationError("OpfConfig: max_iter >= 1 violated");
  if (!(step_to_boundary > 0.0 && step_to_boundary < 1.0)) {
    throw ValidationError("OpfConfig: step_to_boundary must lie in (0, 1)");
  }
  if (!(barrier_reduction > 0.0 && barrier_reduction < 1.0)) {
    throw ValidationError("OpfConfig: barrier_reduction must lie in (0, 1)");
  }
  if (!(termination_margin > 0.0 && termination_margin <= 1.0)) {
    throw ValidationError("OpfConfig: termination_margin must lie in (0, 1]");
  }
}

std::string InequalityLayout::label(std::size_t j) const {
  const char* names[] = {"pg_max", "pg_min", "qg_max", "qg_min",
                         "v_max",  "v_min",  "pf_max", "pf_min"};
  const std::size_t sizes[] = {n_gen, n_gen, n_gen, n_gen, n_bus, n_bus, n_branch, n_branch};
  for (int f = 0; f < 8; ++f) {
    if (j < sizes[f]) return std::string(names[f]) + "[" + std::to_string(j) + "]";
    j -= sizes[f];
  }
  return "out_of_range";
}

std::size_t ActiveSetSignature::count() const {
  return static_cast<std::size_t>(std::count(active.begin(), active.end(), true));
}

std::string ActiveSetSignature::to_string() const {
  std::string s(active.size(), '0');
  for (std::size_t j = 0; j < active.size(); ++j) s[j] = active[j] ? '1' : '0';
  return s;
}

ActiveSetSignature ActiveSetSignature::from_string(const std::string& bits) {
  ActiveSetSignature sig;
  sig.active.reserve(bits.size());
  for (char ch : bits) {
    if (ch != '0' && ch != '1') throw FormatError("active-set signature must be a 0/1 string");
    sig.active.push_back(ch == '1');
  }
  return sig;
}

double KktResiduals::max() const {
  return std::max({stationarity, primal_eq, primal_ineq, complementarity, dual_feas});
}

namespace {

// Gradient and Hessian of w * Vi * Vj * (a cos(ti - tj) + b sin(ti - tj)).
// Indices of -1 denote a fixed variable (the slack angle).
struct PairTerm {
  Index ti, tj, vi, vj;
  double v_i, v_j, angle;
};

template <typename Row>
void add_pair_gradient(Row&& row, const PairTerm& p, double a, double b, double w) {
  const double c = std::cos(p.angle), s = std::sin(p.angle);
  const double val = a * c + b * s;
  const double dval = -a * s + b * c;
  if (p.ti >= 0) row(p.ti) += w * p.v_i * p.v_j * dval;
  if (p.tj >= 0) row(p.tj) -= w * p.v_i * p.v_j * dval;
  row(p.vi) += w * p.v_j * val;
  row(p.vj) += w * p.v_i * val;
}

void add_pair_hessian(MatrixXd& h, const PairTerm& p, double a, double b, double w) {
  if (w == 0.0 || (a == 0.0 && b == 0.0)) return;
  const double c = std::cos(p.angle), s = std::sin(p.angle);
  const double val = w * (a * c + b * s);
  const double dval = w * (-a * s + b * c);
  const double vv = p.v_i * p.v_j;
  auto add = [&h](Index r, Index k, double v) {
    if (r < 0 || k < 0) return;
    h(r, k) += v;
    if (r != k) h(k, r) += v;
  };
  add(p.ti, p.ti, -vv * val);
  add(p.tj, p.tj, -vv * val);
  add(p.ti, p.tj, vv * val);
  add(p.ti, p.vi, p.v_j * dval);
  add(p.ti, p.vj, p.v_i * dval);
  add(p.tj, p.vi, -p.v_j * dval);
  add(p.tj, p.vj, -p.v_i * dval);
  add(p.vi, p.vj, val);
}

}  // namespace

OpfModel::OpfModel(const CaseData& c, VectorXd pd, VectorXd qd)
    : case_(c), pd_(std::move(pd)), qd_(std::move(qd)), y_(build_admittance(c)), layout_(c) {
  nb_ = static_cast<Index>(c.n_bus());
  ng_ = static_cast<Index>(c.n_gen());
  nl_ = static_cast<Index>(c.n_branch());
  if (pd_.size() != nb_ || qd_.size() != nb_) {
    throw DimensionMismatch("demand vectors do not match the number of buses");
  }
  const int slack = c.slack_bus();
  theta_idx_.assign(static_cast<std::size_t>(nb_), -1);
  Index next = 0;
  for (Index i = 0; i < nb_; ++i) {
    if (i != slack) theta_idx_[i] = next++;
  }
  v0_ = next;
  pg0_ = v0_ + nb_;
  qg0_ = pg0_ + ng_;
  nx_ = qg0_ + ng_;
  branch_y_.reserve(c.n_branch());
  for (const auto& br : c.branches) branch_y_.push_back(branch_admittance(br));
}

VectorXd OpfModel::pack(const StateVector& s, const VectorXd& pg, const VectorXd& qg) const {
  VectorXd x(nx_);
  for (Index i = 0; i < nb_; ++i) {
    if (theta_idx_[i] >= 0) x[theta_idx_[i]] = s.theta[i];
    x[v0_ + i] = s.v[i];
  }
  x.segment(pg0_, ng_) = pg;
  x.segment(qg0_, ng_) = qg;
  return x;
}

StateVector OpfModel::state(const VectorXd& x) const {
  StateVector s{x.segment(v0_, nb_), VectorXd::Zero(nb_)};
  for (Index i = 0; i < nb_; ++i) {
    if (theta_idx_[i] >= 0) s.theta[i] = x[theta_idx_[i]];
  }
  return s;
}

VectorXd OpfModel::initial_point() const {
  StateVector s = StateVector::flat(static_cast<std::size_t>(nb_));
  for (Index i = 0; i < nb_; ++i) {
    const auto& b = case_.buses[i];
    if (s.v[i] <= b.vmin || s.v[i] >= b.vmax) s.v[i] = 0.5 * (b.vmin + b.vmax);
  }
  VectorXd pg(ng_), qg(ng_);
  for (Index k = 0; k < ng_; ++k) {
    pg[k] = 0.5 * (case_.gens[k].pmin + case_.gens[k].pmax);
    qg[k] = 0.5 * (case_.gens[k].qmin + case_.gens[k].qmax);
  }
  return pack(s, pg, qg);
}

double OpfModel::objective(const VectorXd& x) const {
  double f = 0.0;
  for (Index k = 0; k < ng_; ++k) f += generation_cost(case_.gens[k], x[pg0_ + k], case_.base_mva);
  return f;
}

VectorXd OpfModel::objective_gradient(const VectorXd& x) const {
  VectorXd df = VectorXd::Zero(nx_);
  for (Index k = 0; k < ng_; ++k) {
    df[pg0_ + k] = generation_cost_gradient(case_.gens[k], x[pg0_ + k], case_.base_mva);
  }
  return df;
}

VectorXd OpfModel::equalities(const VectorXd& x) const {
  const NodalPower inj = power_injections(state(x), y_);
  VectorXd h(2 * nb_);
  h.head(nb_) = inj.p + pd_;
  h.tail(nb_) = inj.q + qd_;
  for (Index k = 0; k < ng_; ++k) {
    const Index bus = case_.gens[k].bus;
    h[bus] -= x[pg0_ + k];
    h[nb_ + bus] -= x[qg0_ + k];
  }
  return h;
}

MatrixXd OpfModel::equality_jacobian(const VectorXd& x) const {
  const StateVector s = state(x);
  const NodalPower inj = power_injections(s, y_);
  const InjectionJacobian dj = injection_jacobian(s, y_, inj);
  MatrixXd jac = MatrixXd::Zero(2 * nb_, nx_);
  for (Index i = 0; i < nb_; ++i) {
    for (Index j = 0; j < nb_; ++j) {
      if (theta_idx_[j] >= 0) {
        jac(i, theta_idx_[j]) = dj.dp_dtheta(i, j);
        jac(nb_ + i, theta_idx_[j]) = dj.dq_dtheta(i, j);
      }
      jac(i, v0_ + j) = dj.dp_dv(i, j);
      jac(nb_ + i, v0_ + j) = dj.dq_dv(i, j);
    }
  }
  for (Index k = 0; k < ng_; ++k) {
    const Index bus = case_.gens[k].bus;
    jac(bus, pg0_ + k) = -1.0;
    jac(nb_ + bus, qg0_ + k) = -1.0;
  }
  return jac;
}

VectorXd OpfModel::inequalities(const VectorXd& x) const {
  const auto& L = layout_;
  VectorXd g(n_ineq());
  for (Index k = 0; k < ng_; ++k) {
    const auto& gen = case_.gens[k];
    g[L.pg_upper(k)] = x[pg0_ + k] - gen.pmax;
    g[L.pg_lower(k)] = gen.pmin - x[pg0_ + k];
    g[L.qg_upper(k)] = x[qg0_ + k] - gen.qmax;
    g[L.qg_lower(k)] = gen.qmin - x[qg0_ + k];
  }
  for (Index i = 0; i < nb_; ++i) {
    g[L.v_upper(i)] = x[v0_ + i] - case_.buses[i].vmax;
    g[L.v_lower(i)] = case_.buses[i].vmin - x[v0_ + i];
  }
  const BranchFlows fl = branch_flows(state(x), case_);
  for (Index k = 0; k < nl_; ++k) {
    const double rate = case_.branches[k].flow_limit;
    g[L.pf_upper(k)] = fl.pf[k] - rate;
    g[L.pf_lower(k)] = -rate - fl.pf[k];
  }
  return g;
}

MatrixXd OpfModel::inequality_jacobian(const VectorXd& x) const {
  const auto& L = layout_;
  MatrixXd jac = MatrixXd::Zero(n_ineq(), nx_);
  for (Index k = 0; k < ng_; ++k) {
    jac(L.pg_upper(k), pg0_ + k) = 1.0;
    jac(L.pg_lower(k), pg0_ + k) = -1.0;
    jac(L.qg_upper(k), qg0_ + k) = 1.0;
    jac(L.qg_lower(k), qg0_ + k) = -1.0;
  }
  for (Index i = 0; i < nb_; ++i) {
    jac(L.v_upper(i), v0_ + i) = 1.0;
    jac(L.v_lower(i), v0_ + i) = -1.0;
  }
  for (Index k = 0; k < nl_; ++k) {
    const auto& br = case_.branches[k];
    const auto& a = branch_y_[k];
    const PairTerm p{theta_idx_[br.from], theta_idx_[br.to], v0_ + br.from, v0_ + br.to,
                     x[v0_ + br.from], x[v0_ + br.to],
                     (theta_idx_[br.from] >= 0 ? x[theta_idx_[br.from]] : 0.0) -
                         (theta_idx_[br.to] >= 0 ? x[theta_idx_[br.to]] : 0.0)};
    auto up = jac.row(static_cast<Index>(L.pf_upper(k)));
    add_pair_gradient(up, p, a.gft, a.bft, 1.0);
    up(v0_ + br.from) += 2.0 * p.v_i * a.gff;
    jac.row(static_cast<Index>(L.pf_lower(k))) = -jac.row(static_cast<Index>(L.pf_upper(k)));
  }
  return jac;
}

MatrixXd OpfModel::lagrangian_hessian(const VectorXd& x, const VectorXd& lambda,
                                      const VectorXd& sigma) const {
  MatrixXd h = MatrixXd::Zero(nx_, nx_);
  for (Index k = 0; k < ng_; ++k) {
    h(pg0_ + k, pg0_ + k) = generation_cost_curvature(case_.gens[k], case_.base_mva);
  }
  const StateVector s = state(x);
  auto pair = [&](Index i, Index j) {
    return PairTerm{theta_idx_[i], theta_idx_[j], v0_ + i, v0_ + j, s.v[i], s.v[j],
                    s.theta[i] - s.theta[j]};
  };
  for (Index i = 0; i < nb_; ++i) {
    const double lp = lambda[i], lq = lambda[nb_ + i];
    for (Index j = 0; j < nb_; ++j) {
      const double gij = y_.g(i, j), bij = y_.b(i, j);
      if (i == j) {
        h(v0_ + i, v0_ + i) += 2.0 * (lp * gij - lq * bij);
        continue;
      }
      if (gij == 0.0 && bij == 0.0) continue;
      add_pair_hessian(h, pair(i, j), lp * gij - lq * bij, lp * bij + lq * gij, 1.0);
    }
  }
  const auto& L = layout_;
  for (Index k = 0; k < nl_; ++k) {
    const double w = sigma[L.pf_upper(k)] - sigma[L.pf_lower(k)];
    if (w == 0.0) continue;
    const auto& br = case_.branches[k];
    const auto& a = branch_y_[k];
    add_pair_hessian(h, pair(br.from, br.to), a.gft, a.bft, w);
    h(v0_ + br.from, v0_ + br.from) += 2.0 * w * a.gff;
  }
  return h;
}

namespace {

OpfSolution make_solution(const OpfModel& model, const CaseData& c, const VectorXd& x,
                          const VectorXd& lambda, const VectorXd& sigma) {
  OpfSolution sol;
  sol.state = model.state(x);
  sol.pg = model.pg(x);
  sol.qg = model.qg(x);
  const BranchFlows fl = branch_flows(sol.state, c);
  sol.pf = fl.pf;
  sol.qf = fl.qf;
  sol.objective = generation_cost(c, std::vector<double>(sol.pg.data(), sol.pg.data() + sol.pg.size()));
  sol.lambda = lambda;
  sol.sigma = sigma;
  sol.ineq = model.inequalities(x);
  return sol;
}

}  // namespace

OpfSolution solve_acopf(const CaseData& c, const VectorXd& pd, const VectorXd& qd,
                        const OpfConfig& cfg) {
  constexpr int kStallIterations = 10;
  cfg.validate();
  if (!pd.allFinite() || !qd.allFinite()) throw ValidationError("non-finite demand");
  const OpfModel model(c, pd, qd);
  const Index nx = model.nx(), neq = model.n_eq(), m = model.n_ineq();

  double pmax_total = 0.0;
  for (const auto& g : c.gens) pmax_total += g.pmax;
  if (pmax_total < pd.sum()) {
    throw Infeasible("total generation capacity is below total demand", {});
  }

  VectorXd x = model.initial_point();
  VectorXd g = model.inequalities(x);
  VectorXd z = VectorXd::Ones(m);
  for (Index j = 0; j < m; ++j) {
    if (g[j] < -1.0) z[j] = -g[j];
  }
  VectorXd sigma = VectorXd::Ones(m);
  VectorXd lambda = VectorXd::Zero(neq);
  double gamma = 1.0;
  // Internal cost scaling; multipliers are kept in scaled units and every
  // reported residual is unscaled.
  const double scale = std::min(1.0, 1e4 / std::max(1.0, model.objective_gradient(x).lpNorm<Eigen::Infinity>()));

  const double feas_stop = cfg.feas_tol * cfg.termination_margin;
  const double stat_stop = cfg.stat_tol * cfg.termination_margin;
  const double comp_stop = cfg.comp_tol * cfg.termination_margin;

  IpmResiduals res;
  struct Best {
    double score = std::numeric_limits<double>::infinity();
    int iter = -1;
    VectorXd x, lambda, sigma;
  } best;
  MatrixXd kkt(nx + neq, nx + neq);
  VectorXd rhs(nx + neq);
  for (int iter = 0;; ++iter) {
    const VectorXd h = model.equalities(x);
    g = model.inequalities(x);
    const MatrixXd jh = model.equality_jacobian(x);
    const MatrixXd jg = model.inequality_jacobian(x);
    const VectorXd lx =
        scale * model.objective_gradient(x) + jh.transpose() * lambda + jg.transpose() * sigma;

    res.primal = std::max(h.lpNorm<Eigen::Infinity>(), std::max(0.0, g.maxCoeff()));
    res.stationarity = lx.lpNorm<Eigen::Infinity>() / scale;
    res.complementarity = std::max((sigma.array() * z.array()).maxCoeff(),
                                   (sigma.array() * g.array()).abs().maxCoeff()) / scale;
    res.iterations = iter;

    if (!x.allFinite() || !lambda.allFinite() || !sigma.allFinite() ||
        x.lpNorm<Eigen::Infinity>() > 1e8) {
      throw Infeasible("interior-point iterates diverged", res);
    }
    if (res.primal <= feas_stop && res.stationarity <= stat_stop &&
        res.complementarity <= comp_stop) {
      OpfSolution sol = make_solution(model, c, x, lambda / scale, sigma / scale);
      sol.converged = true;
      sol.iterations = iter;
      return sol;
    }
    // Degenerate vertices can stall or drift once the barrier is spent; fall
    // back to the best iterate when it already meets the tolerances.
    const double score = std::max({res.primal / cfg.feas_tol, res.stationarity / cfg.stat_tol,
                                   res.complementarity / cfg.comp_tol});
    if (score < best.score) best = {score, iter, x, lambda, sigma};
    if (best.score <= 1.0 && (iter - best.iter >= kStallIterations || iter == cfg.max_iter)) {
      OpfSolution sol = make_solution(model, c, best.x, best.lambda / scale, best.sigma / scale);
      sol.converged = true;
      sol.iterations = best.iter;
      return sol;
    }
    if (iter == cfg.max_iter) {
      if (res.primal > 1e-3) throw Infeasible("interior point failed to reach a feasible point", res);
      throw MaxIterations("interior point reached the iteration limit", res);
    }

    const MatrixXd lxx = scale * model.lagrangian_hessian(x, lambda / scale, sigma / scale);
    const VectorXd zinv = z.cwiseInverse();
    const MatrixXd jg_scaled = zinv.cwiseProduct(sigma).asDiagonal() * jg;
    kkt.setZero();
    kkt.topLeftCorner(nx, nx) = lxx + jg.transpose() * jg_scaled;
    kkt.topRightCorner(nx, neq) = jh.transpose();
    kkt.bottomLeftCorner(neq, nx) = jh;
    const VectorXd n_vec =
        lx + jg.transpose() * (zinv.array() * (sigma.array() * g.array() + gamma)).matrix();
    rhs.head(nx) = -n_vec;
    rhs.tail(neq) = -h;

    Eigen::PartialPivLU<MatrixXd> lu(kkt);
    const VectorXd step = lu.solve(rhs);
    if (!step.allFinite()) throw Infeasible("singular interior-point Newton system", res);
    const VectorXd dx = step.head(nx);
    const VectorXd dlambda = step.tail(neq);
    const VectorXd dz = -g - z - jg * dx;
    const VectorXd dsigma =
        -sigma + (zinv.array() * (gamma - sigma.array() * dz.array())).matrix();

    double alpha_p = 1.0, alpha_d = 1.0;
    for (Index j = 0; j < m; ++j) {
      if (dz[j] < 0.0) alpha_p = std::min(alpha_p, -cfg.step_to_boundary * z[j] / dz[j]);
      if (dsigma[j] < 0.0) alpha_d = std::min(alpha_d, -cfg.step_to_boundary * sigma[j] / dsigma[j]);
    }
    x += alpha_p * dx;
    z += alpha_p * dz;
    lambda += alpha_d * dlambda;
    sigma += alpha_d * dsigma;
    gamma = std::max(cfg.barrier_reduction * z.dot(sigma) / static_cast<double>(m), 0.1 * comp_stop * scale);
  }
}

KktResiduals kkt_residuals(const OpfSolution& sol, const CaseData& c, const VectorXd& pd,
                           const VectorXd& qd) {
  const OpfModel model(c, pd, qd);
  if (sol.lambda.size() != model.n_eq() || sol.sigma.size() != model.n_ineq() ||
      sol.pg.size() != static_cast<Index>(c.n_gen())) {
    throw DimensionMismatch("solution dimensions do not match the case");
  }
  const VectorXd x = model.pack(sol.state, sol.pg, sol.qg);
  const VectorXd h = model.equalities(x);
  const VectorXd g = model.inequalities(x);
  const VectorXd lx = model.objective_gradient(x) +
                      model.equality_jacobian(x).transpose() * sol.lambda +
                      model.inequality_jacobian(x).transpose() * sol.sigma;
  KktResiduals r;
  r.stationarity = lx.lpNorm<Eigen::Infinity>();
  r.primal_eq = h.lpNorm<Eigen::Infinity>();
  r.primal_ineq = std::max(0.0, g.maxCoeff());
  r.complementarity = (sol.sigma.array() * g.array()).abs().maxCoeff();
  r.dual_feas = std::max(0.0, -sol.sigma.minCoeff());
  return r;
}

ActiveSetSignature extract_active_set(const OpfSolution& sol, double active_tol) {
  ActiveSetSignature sig;
  sig.active.resize(static_cast<std::size_t>(sol.ineq.size()));
  for (Index j = 0; j < sol.ineq.size(); ++j) {
    sig.active[static_cast<std::size_t>(j)] = std::abs(sol.ineq[j]) <= active_tol;
  }
  return sig;
}

ActiveSetSignature restrict_signature(const ActiveSetSignature& sig, const InequalityLayout& layout,
                                      ConstraintFamily family) {
  if (sig.size() != layout.size()) {
    throw DimensionMismatch("signature length does not match the inequality layout");
  }
  if (family == ConstraintFamily::all_inequalities) return sig;
  ActiveSetSignature out;
  out.active.assign(sig.active.begin() + static_cast<std::ptrdiff_t>(layout.v_begin()),
                    sig.active.begin() + static_cast<std::ptrdiff_t>(layout.v_end()));
  return out;
}

}  // namespace selmopf
