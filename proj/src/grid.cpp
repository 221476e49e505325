#include "selmopf/grid.hpp"

#include <cmath>
#include <string>

#include "selmopf/errors.hpp"

namespace selmopf {

BranchAdmittance branch_admittance(const Branch& br) {
  const double z2 = br.r * br.r + br.x * br.x;
  if (z2 == 0.0) throw SingularBranch("branch with r == 0 and x == 0");
  const double gs = br.r / z2;
  const double bs = -br.x / z2;
  const double half_b = 0.5 * br.b_charge;
  const double t = br.tap;
  BranchAdmittance a{};
  a.gff = gs / (t * t);
  a.bff = (bs + half_b) / (t * t);
  a.gft = -gs / t;
  a.bft = -bs / t;
  a.gtf = -gs / t;
  a.btf = -bs / t;
  a.gtt = gs;
  a.btt = bs + half_b;
  return a;
}

AdmittanceMatrix build_admittance(const CaseData& c) {
  const auto n = static_cast<Eigen::Index>(c.n_bus());
  AdmittanceMatrix y{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n)};
  for (const auto& br : c.branches) {
    if (!br.in_service) continue;
    const auto a = branch_admittance(br);
    const int f = br.from, t = br.to;
    y.g(f, f) += a.gff;
    y.b(f, f) += a.bff;
    y.g(f, t) += a.gft;
    y.b(f, t) += a.bft;
    y.g(t, f) += a.gtf;
    y.b(t, f) += a.btf;
    y.g(t, t) += a.gtt;
    y.b(t, t) += a.btt;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    y.g(i, i) += c.buses[i].gs;
    y.b(i, i) += c.buses[i].bs;
  }
  return y;
}

NodalPower power_injections(const StateVector& s, const AdmittanceMatrix& y) {
  const Eigen::Index n = y.size();
  if (s.v.size() != n || s.theta.size() != n) {
    throw DimensionMismatch("state has " + std::to_string(s.v.size()) + " buses, admittance has " +
                            std::to_string(n));
  }
  NodalPower out{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    double p = 0.0, q = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double gij = y.g(i, j), bij = y.b(i, j);
      if (gij == 0.0 && bij == 0.0) continue;
      const double t = s.theta[i] - s.theta[j];
      const double c = std::cos(t), sn = std::sin(t);
      p += s.v[j] * (gij * c + bij * sn);
      q += s.v[j] * (gij * sn - bij * c);
    }
    out.p[i] = s.v[i] * p;
    out.q[i] = s.v[i] * q;
  }
  return out;
}

InjectionJacobian injection_jacobian(const StateVector& s, const AdmittanceMatrix& y,
                                     const NodalPower& at) {
  const Eigen::Index n = y.size();
  InjectionJacobian jac{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n),
                        Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const double vi = s.v[i];
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const double gij = y.g(i, j), bij = y.b(i, j);
      if (gij == 0.0 && bij == 0.0) continue;
      const double t = s.theta[i] - s.theta[j];
      const double c = std::cos(t), sn = std::sin(t);
      const double re = gij * c + bij * sn;  // d/dV_j of p_i (times 1/V_i)
      const double im = gij * sn - bij * c;
      jac.dp_dtheta(i, j) = vi * s.v[j] * im;
      jac.dp_dv(i, j) = vi * re;
      jac.dq_dtheta(i, j) = -vi * s.v[j] * re;
      jac.dq_dv(i, j) = vi * im;
    }
    const double gii = y.g(i, i), bii = y.b(i, i);
    jac.dp_dtheta(i, i) = -at.q[i] - bii * vi * vi;
    jac.dp_dv(i, i) = at.p[i] / vi + gii * vi;
    jac.dq_dtheta(i, i) = at.p[i] - gii * vi * vi;
    jac.dq_dv(i, i) = at.q[i] / vi - bii * vi;
  }
  return jac;
}

BranchFlows branch_flows(const StateVector& s, const CaseData& c) {
  const auto m = static_cast<Eigen::Index>(c.n_branch());
  if (s.v.size() != static_cast<Eigen::Index>(c.n_bus())) {
    throw DimensionMismatch("state size does not match case");
  }
  BranchFlows out{Eigen::VectorXd::Zero(m), Eigen::VectorXd::Zero(m), Eigen::VectorXd::Zero(m),
                  Eigen::VectorXd::Zero(m)};
  for (Eigen::Index k = 0; k < m; ++k) {
    const auto& br = c.branches[k];
    if (!br.in_service) continue;
    const auto a = branch_admittance(br);
    const double vi = s.v[br.from], vj = s.v[br.to];
    const double t = s.theta[br.from] - s.theta[br.to];
    const double cs = std::cos(t), sn = std::sin(t);
    out.pf[k] = vi * vi * a.gff + vi * vj * (a.gft * cs + a.bft * sn);
    out.qf[k] = -vi * vi * a.bff + vi * vj * (a.gft * sn - a.bft * cs);
    // angle difference seen from the to side is -t
    out.pt[k] = vj * vj * a.gtt + vi * vj * (a.gtf * cs - a.btf * sn);
    out.qt[k] = -vj * vj * a.btt + vi * vj * (-a.gtf * sn - a.btf * cs);
  }
  return out;
}

double shunt_consumption(const StateVector& s, const CaseData& c) {
  double total = 0.0;
  for (std::size_t i = 0; i < c.n_bus(); ++i) total += c.buses[i].gs * s.v[i] * s.v[i];
  return total;
}

}  // namespace selmopf
