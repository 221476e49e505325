#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "selmopf/case_io.hpp"
#include "selmopf/grid.hpp"

namespace selmopf {

struct OpfConfig {
  double feas_tol = 1e-6;
  double comp_tol = 1e-6;
  double stat_tol = 1e-6;
  double active_tol = 1e-5;
  /// The solver stops once every residual is below tolerance times this
  /// factor, so that the reported KKT residuals clear the tolerances.
  double termination_margin = 1e-2;
  int max_iter = 150;
  double step_to_boundary = 0.995;
  double barrier_reduction = 0.1;

  void validate() const;
};

/// Ordering of the inequality list g(x) <= 0. Each family contributes an
/// upper block followed by a lower block:
///   [pg - pmax | pmin - pg | qg - qmax | qmin - qg |
///    v - vmax  | vmin - v  | pf - rate | -rate - pf]
/// with generators, buses and branches in case order.
struct InequalityLayout {
  std::size_t n_gen = 0, n_bus = 0, n_branch = 0;

  explicit InequalityLayout(const CaseData& c)
      : n_gen(c.n_gen()), n_bus(c.n_bus()), n_branch(c.n_branch()) {}
  InequalityLayout() = default;

  std::size_t size() const { return 4 * n_gen + 2 * n_bus + 2 * n_branch; }
  std::size_t pg_upper(std::size_t k) const { return k; }
  std::size_t pg_lower(std::size_t k) const { return n_gen + k; }
  std::size_t qg_upper(std::size_t k) const { return 2 * n_gen + k; }
  std::size_t qg_lower(std::size_t k) const { return 3 * n_gen + k; }
  std::size_t v_upper(std::size_t i) const { return 4 * n_gen + i; }
  std::size_t v_lower(std::size_t i) const { return 4 * n_gen + n_bus + i; }
  std::size_t pf_upper(std::size_t k) const { return 4 * n_gen + 2 * n_bus + k; }
  std::size_t pf_lower(std::size_t k) const { return 4 * n_gen + 2 * n_bus + n_branch + k; }
  /// Index range [begin, end) of the voltage-magnitude family.
  std::size_t v_begin() const { return 4 * n_gen; }
  std::size_t v_end() const { return 4 * n_gen + 2 * n_bus; }
  std::string label(std::size_t j) const;
};

struct OpfSolution {
  StateVector state;
  Eigen::VectorXd pg, qg;  // per generator, p.u.
  Eigen::VectorXd pf, qf;  // per branch, from side, p.u.
  double objective = 0.0;
  Eigen::VectorXd lambda;  // [active balance per bus | reactive balance per bus]
  Eigen::VectorXd sigma;   // one per inequality, InequalityLayout order
  Eigen::VectorXd ineq;    // g(x) at the solution
  bool converged = false;
  int iterations = 0;
};

struct ActiveSetSignature {
  std::vector<bool> active;

  std::size_t size() const { return active.size(); }
  std::size_t count() const;
  std::string to_string() const;  // '0'/'1' per constraint
  static ActiveSetSignature from_string(const std::string& bits);
  bool operator==(const ActiveSetSignature&) const = default;
};

/// Smooth OPF model on x = [theta (non-slack buses), V, PG, QG].
/// Equalities h(x) = P(V,theta) + PD - Cg PG (then the Q analog) = 0.
class OpfModel {
 public:
  OpfModel(const CaseData& c, Eigen::VectorXd pd, Eigen::VectorXd qd);

  Eigen::Index nx() const { return nx_; }
  Eigen::Index n_eq() const { return 2 * nb_; }
  Eigen::Index n_ineq() const { return static_cast<Eigen::Index>(layout_.size()); }
  const InequalityLayout& layout() const { return layout_; }

  /// Variable index of theta_i, or -1 for the slack bus.
  Eigen::Index theta_index(Eigen::Index bus) const { return theta_idx_[bus]; }
  Eigen::Index v_index(Eigen::Index bus) const { return v0_ + bus; }
  Eigen::Index pg_index(Eigen::Index gen) const { return pg0_ + gen; }
  Eigen::Index qg_index(Eigen::Index gen) const { return qg0_ + gen; }

  Eigen::VectorXd pack(const StateVector& s, const Eigen::VectorXd& pg,
                       const Eigen::VectorXd& qg) const;
  StateVector state(const Eigen::VectorXd& x) const;
  Eigen::VectorXd pg(const Eigen::VectorXd& x) const { return x.segment(pg0_, ng_); }
  Eigen::VectorXd qg(const Eigen::VectorXd& x) const { return x.segment(qg0_, ng_); }

  /// Deterministic interior starting point.
  Eigen::VectorXd initial_point() const;

  double objective(const Eigen::VectorXd& x) const;
  Eigen::VectorXd objective_gradient(const Eigen::VectorXd& x) const;
  Eigen::VectorXd equalities(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd equality_jacobian(const Eigen::VectorXd& x) const;
  Eigen::VectorXd inequalities(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd inequality_jacobian(const Eigen::VectorXd& x) const;
  /// Hessian of f + lambda' h + sigma' g.
  Eigen::MatrixXd lagrangian_hessian(const Eigen::VectorXd& x, const Eigen::VectorXd& lambda,
                                     const Eigen::VectorXd& sigma) const;

 private:
  CaseData case_;
  Eigen::VectorXd pd_, qd_;
  AdmittanceMatrix y_;
  std::vector<BranchAdmittance> branch_y_;
  InequalityLayout layout_;
  Eigen::Index nb_ = 0, ng_ = 0, nl_ = 0, nx_ = 0, v0_ = 0, pg0_ = 0, qg0_ = 0;
  std::vector<Eigen::Index> theta_idx_;
};

/// Primal-dual interior-point solve of the quadratic-cost AC OPF.
/// Throws Infeasible or MaxIterations carrying the final residuals.
OpfSolution solve_acopf(const CaseData& c, const Eigen::VectorXd& pd, const Eigen::VectorXd& qd,
                        const OpfConfig& cfg = {});

struct KktResiduals {
  double stationarity = 0.0;
  double primal_eq = 0.0;
  double primal_ineq = 0.0;
  double complementarity = 0.0;
  double dual_feas = 0.0;

  double max() const;
};

/// Infinity norms of the KKT system evaluated from the primal and dual
/// values stored in `sol` (flows and inequality values are recomputed).
KktResiduals kkt_residuals(const OpfSolution& sol, const CaseData& c, const Eigen::VectorXd& pd,
                           const Eigen::VectorXd& qd);

/// Bit j set iff |g_j| <= active_tol.
ActiveSetSignature extract_active_set(const OpfSolution& sol, double active_tol);

/// Restriction of a signature to a constraint family.
enum class ConstraintFamily { voltage_magnitude, all_inequalities };
ActiveSetSignature restrict_signature(const ActiveSetSignature& sig, const InequalityLayout& layout,
                                      ConstraintFamily family);

}  // namespace selmopf
