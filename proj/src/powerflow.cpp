#include "selmopf/powerflow.hpp"

#include <cmath>
#include <string>

#include "selmopf/errors.hpp"

namespace selmopf {

void PfConfig::validate() const {
  if (!(tol > 0.0)) throw ValidationError("PfConfig: tol > 0 violated");
  if (max_iter < 1) throw ValidationError("PfConfig: max_iter >= 1 violated");
}

PfResult solve_power_flow(const CaseData& c, const Eigen::VectorXd& pd, const Eigen::VectorXd& qd,
                          const PfSetpoints& sp, const PfConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<Eigen::Index>(c.n_bus());
  if (pd.size() != n || qd.size() != n || sp.v.size() != n ||
      sp.pg.size() != static_cast<Eigen::Index>(c.n_gen())) {
    throw DimensionMismatch("power flow inputs do not match the case dimensions");
  }
  if (!pd.allFinite() || !qd.allFinite()) throw ValidationError("non-finite demand");

  const int slack = c.slack_bus();
  std::vector<bool> has_gen(n, false);
  Eigen::VectorXd p_spec = -pd;
  for (std::size_t k = 0; k < c.n_gen(); ++k) {
    has_gen[c.gens[k].bus] = true;
    p_spec[c.gens[k].bus] += sp.pg[k];
  }

  // unknowns: theta at every non-slack bus, then V at every PQ bus
  std::vector<Eigen::Index> theta_idx, v_idx;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i != slack) theta_idx.push_back(i);
    if (i != slack && !has_gen[i]) v_idx.push_back(i);
  }
  const auto nt = static_cast<Eigen::Index>(theta_idx.size());
  const auto nv = static_cast<Eigen::Index>(v_idx.size());

  const AdmittanceMatrix y = build_admittance(c);
  StateVector s = StateVector::flat(c.n_bus());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i == slack || has_gen[i]) s.v[i] = sp.v[i];
  }

  Eigen::VectorXd mismatch(nt + nv);
  auto evaluate = [&](const NodalPower& inj) {
    for (Eigen::Index r = 0; r < nt; ++r) mismatch[r] = p_spec[theta_idx[r]] - inj.p[theta_idx[r]];
    for (Eigen::Index r = 0; r < nv; ++r) mismatch[nt + r] = -qd[v_idx[r]] - inj.q[v_idx[r]];
    return mismatch.size() ? mismatch.lpNorm<Eigen::Infinity>() : 0.0;
  };

  std::vector<double> history;
  NodalPower inj = power_injections(s, y);
  double norm = evaluate(inj);
  history.push_back(norm);
  int iter = 0;
  Eigen::MatrixXd jac(nt + nv, nt + nv);
  while (norm > cfg.tol) {
    if (iter == cfg.max_iter || !std::isfinite(norm)) {
      throw NonConvergence("power flow did not converge in " + std::to_string(iter) +
                               " iterations (mismatch " + std::to_string(norm) + ")",
                           norm, iter);
    }
    const InjectionJacobian dj = injection_jacobian(s, y, inj);
    for (Eigen::Index r = 0; r < nt; ++r) {
      for (Eigen::Index k = 0; k < nt; ++k) jac(r, k) = dj.dp_dtheta(theta_idx[r], theta_idx[k]);
      for (Eigen::Index k = 0; k < nv; ++k) jac(r, nt + k) = dj.dp_dv(theta_idx[r], v_idx[k]);
    }
    for (Eigen::Index r = 0; r < nv; ++r) {
      for (Eigen::Index k = 0; k < nt; ++k) jac(nt + r, k) = dj.dq_dtheta(v_idx[r], theta_idx[k]);
      for (Eigen::Index k = 0; k < nv; ++k) jac(nt + r, nt + k) = dj.dq_dv(v_idx[r], v_idx[k]);
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(jac);
    if (!(lu.rcond() > 1e-14)) throw SingularJacobian("power flow Jacobian is singular");
    const Eigen::VectorXd dx = lu.solve(mismatch);
    for (Eigen::Index r = 0; r < nt; ++r) s.theta[theta_idx[r]] += dx[r];
    for (Eigen::Index r = 0; r < nv; ++r) s.v[v_idx[r]] += dx[nt + r];
    ++iter;
    inj = power_injections(s, y);
    norm = evaluate(inj);
    history.push_back(norm);
  }

  PfResult out;
  out.state = std::move(s);
  out.injection = std::move(inj);
  out.mismatch_history = Eigen::Map<Eigen::VectorXd>(history.data(), static_cast<Eigen::Index>(history.size()));
  out.iterations = iter;
  return out;
}

}  // namespace selmopf
