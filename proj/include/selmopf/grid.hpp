#pragma once

#include <Eigen/Dense>

#include "selmopf/case_io.hpp"

namespace selmopf {

/// Dense nodal admittance Y = G + jB, per-unit.
struct AdmittanceMatrix {
  Eigen::MatrixXd g;
  Eigen::MatrixXd b;

  Eigen::Index size() const { return g.rows(); }
};

/// Bus voltage magnitudes (p.u.) and angles (radians).
struct StateVector {
  Eigen::VectorXd v;
  Eigen::VectorXd theta;

  static StateVector flat(std::size_t n_bus) {
    return {Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n_bus)),
            Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_bus))};
  }
};

/// Two-port pi-model admittances of one branch (tap on the from side).
struct BranchAdmittance {
  double gff, bff, gft, bft;
  double gtf, btf, gtt, btt;
};

BranchAdmittance branch_admittance(const Branch& br);

/// Standard Y-bus: series 1/(r+jx), half charging per end, from-side tap,
/// bus shunts on the diagonal. Throws SingularBranch when r == x == 0.
AdmittanceMatrix build_admittance(const CaseData& c);

struct NodalPower {
  Eigen::VectorXd p;
  Eigen::VectorXd q;
};

/// p_i = V_i sum_j V_j (G_ij cos t_ij + B_ij sin t_ij),
/// q_i = V_i sum_j V_j (G_ij sin t_ij - B_ij cos t_ij).
NodalPower power_injections(const StateVector& s, const AdmittanceMatrix& y);

/// Partial derivatives of `power_injections` (n x n blocks).
struct InjectionJacobian {
  Eigen::MatrixXd dp_dtheta, dp_dv;
  Eigen::MatrixXd dq_dtheta, dq_dv;
};

InjectionJacobian injection_jacobian(const StateVector& s, const AdmittanceMatrix& y,
                                     const NodalPower& at);

struct BranchFlows {
  Eigen::VectorXd pf;  // from side, positive leaving the from bus
  Eigen::VectorXd qf;
  Eigen::VectorXd pt;  // to side, positive leaving the to bus
  Eigen::VectorXd qt;
};

BranchFlows branch_flows(const StateVector& s, const CaseData& c);

/// Total active power consumed by bus shunts: sum_i gs_i V_i^2.
double shunt_consumption(const StateVector& s, const CaseData& c);

}  // namespace selmopf
