#pragma once

#include <vector>

#include <Eigen/Dense>

#include "selmopf/case_io.hpp"
#include "selmopf/grid.hpp"

namespace selmopf {

struct PfConfig {
  double tol = 1e-8;  // infinity norm of the mismatch, p.u.
  int max_iter = 30;

  void validate() const;
};

/// Generator dispatch for a power flow. `pg` is per generator (the slack
/// generator's entry is ignored), `v` is per bus and is read at the slack
/// bus and at every bus that hosts a generator.
struct PfSetpoints {
  Eigen::VectorXd pg;
  Eigen::VectorXd v;
};

struct PfResult {
  StateVector state;
  NodalPower injection;        // net injection at every bus
  Eigen::VectorXd mismatch_history;  // infinity norms, starting with the initial point
  int iterations = 0;

  double final_mismatch() const { return mismatch_history[mismatch_history.size() - 1]; }
};

/// Full polar Newton-Raphson from a flat start (V at voltage-controlled buses
/// taken from the setpoints). Buses with generators are PV, no Q limits.
/// Throws NonConvergence or SingularJacobian.
PfResult solve_power_flow(const CaseData& c, const Eigen::VectorXd& pd, const Eigen::VectorXd& qd,
                          const PfSetpoints& sp, const PfConfig& cfg = {});

}  // namespace selmopf
