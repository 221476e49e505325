#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "selmopf/acopf.hpp"
#include "selmopf/case_io.hpp"
#include "selmopf/dataset.hpp"
#include "selmopf/errors.hpp"
#include "selmopf/powerflow.hpp"

namespace oracle {

/// Psi = (H'H + lambda I)^-1 H'T via an explicit LU inverse.
inline Eigen::MatrixXd ridge(const Eigen::MatrixXd& h, const Eigen::MatrixXd& t, double lambda) {
  const Eigen::MatrixXd a =
      h.transpose() * h + lambda * Eigen::MatrixXd::Identity(h.cols(), h.cols());
  return Eigen::FullPivLU<Eigen::MatrixXd>(a).inverse() * (h.transpose() * t);
}

/// Sum of squared singular values of the centered matrix beyond the first l.
inline double pca_discarded(const Eigen::MatrixXd& h, Eigen::Index l) {
  const Eigen::RowVectorXd mu = h.colwise().mean();
  const Eigen::MatrixXd c = h.rowwise() - mu;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(c);
  const Eigen::VectorXd s = svd.singularValues();
  double acc = 0.0;
  for (Eigen::Index k = l; k < s.size(); ++k) acc += s[k] * s[k];
  return acc;
}

/// Hit percentage per quantity name, counted element by element from labels.
inline std::vector<double> accuracy(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth,
                                    const std::vector<selmopf::ColumnLabel>& spec,
                                    const std::vector<std::string>& groups,
                                    const std::vector<double>& thresholds) {
  std::vector<double> out;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    long hits = 0, total = 0;
    for (std::size_t k = 0; k < spec.size(); ++k) {
      if (spec[k].quantity != groups[g]) continue;
      for (Eigen::Index r = 0; r < pred.rows(); ++r) {
        double e = std::fabs(pred(r, static_cast<Eigen::Index>(k)) - truth(r, static_cast<Eigen::Index>(k)));
        if (groups[g] == "THETA") e = e * 180.0 / 3.14159265358979323846;
        if (e < thresholds[g]) ++hits;
        ++total;
      }
    }
    out.push_back(total ? 100.0 * static_cast<double>(hits) / static_cast<double>(total) : 100.0);
  }
  return out;
}

inline double bisect(const std::function<double(double)>& f, double lo, double hi) {
  double flo = f(lo);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Lossless 2-bus line x = 0.1, slack V1 = 1, load P + jQ at bus 2.
struct TwoBus {
  double v2, theta2;
};

inline TwoBus two_bus(double p, double q) {
  auto th = [p](double v) { return std::asin(-p / (10.0 * v)); };
  auto f = [&](double v) { return 10.0 * v * v - 10.0 * v * std::cos(th(v)) + q; };
  const double lo = std::sqrt(p / 10.0) + 1e-9;
  const double v = bisect(f, std::max(lo, 0.5), 1.5);
  return {v, th(v)};
}

inline std::vector<double> nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> x0, double step, int iters) {
  const std::size_t n = x0.size();
  std::vector<std::vector<double>> p(n + 1, x0);
  std::vector<double> fv(n + 1);
  for (std::size_t i = 0; i < n; ++i) p[i + 1][i] += step;
  for (std::size_t i = 0; i <= n; ++i) fv[i] = f(p[i]);
  for (int it = 0; it < iters; ++it) {
    std::vector<std::size_t> ord(n + 1);
    for (std::size_t i = 0; i <= n; ++i) ord[i] = i;
    std::sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const std::size_t best = ord[0], worst = ord[n], second = ord[n - 1];
    double spread = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
      for (std::size_t k = 0; k < n; ++k) spread = std::max(spread, std::fabs(p[i][k] - p[best][k]));
    }
    if (spread < 1e-12) break;
    std::vector<double> cen(n, 0.0);
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == worst) continue;
      for (std::size_t k = 0; k < n; ++k) cen[k] += p[i][k] / static_cast<double>(n);
    }
    auto along = [&](double t) {
      std::vector<double> x(n);
      for (std::size_t k = 0; k < n; ++k) x[k] = cen[k] + t * (p[worst][k] - cen[k]);
      return x;
    };
    std::vector<double> xr = along(-1.0);
    const double fr = f(xr);
    if (fr < fv[best]) {
      std::vector<double> xe = along(-2.0);
      const double fe = f(xe);
      if (fe < fr) {
        p[worst] = xe;
        fv[worst] = fe;
      } else {
        p[worst] = xr;
        fv[worst] = fr;
      }
    } else if (fr < fv[second]) {
      p[worst] = xr;
      fv[worst] = fr;
    } else {
      std::vector<double> xc = along(fr < fv[worst] ? -0.5 : 0.5);
      const double fc = f(xc);
      if (fc < std::min(fr, fv[worst])) {
        p[worst] = xc;
        fv[worst] = fc;
      } else {
        for (std::size_t i = 0; i <= n; ++i) {
          if (i == best) continue;
          for (std::size_t k = 0; k < n; ++k) p[i][k] = p[best][k] + 0.5 * (p[i][k] - p[best][k]);
          fv[i] = f(p[i]);
        }
      }
    }
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i <= n; ++i) {
    if (fv[i] < fv[best]) best = i;
  }
  return p[best];
}

/// Brute-force OPF for small cases: coarse grid over (V at generator buses,
/// non-slack PG), refined by a shrinking pattern search. Every candidate is a
/// Newton power flow; infeasible points are discarded.
struct GridSearchResult {
  double objective = 0.0;
  bool found = false;
};

inline GridSearchResult grid_search_opf(const selmopf::CaseData& c, const Eigen::VectorXd& pd,
                                        const Eigen::VectorXd& qd) {
  using namespace selmopf;
  const auto nb = static_cast<Eigen::Index>(c.n_bus());
  const auto ng = static_cast<Eigen::Index>(c.n_gen());
  std::vector<int> vbus;
  for (const auto& g : c.gens) {
    if (std::find(vbus.begin(), vbus.end(), g.bus) == vbus.end()) vbus.push_back(g.bus);
  }
  const int slack = c.slack_bus();
  int slack_gen = -1;
  for (Eigen::Index k = 0; k < ng; ++k) {
    if (c.gens[static_cast<std::size_t>(k)].bus == slack) slack_gen = static_cast<int>(k);
  }
  const std::size_t nv = vbus.size();
  const std::size_t dim = nv + static_cast<std::size_t>(ng) - 1;

  // Cost and worst limit violation of the power flow at setpoints z.
  auto evaluate = [&](const std::vector<double>& z, double& cost, double& viol) {
    PfSetpoints sp{Eigen::VectorXd::Zero(ng), Eigen::VectorXd::Ones(nb)};
    for (std::size_t i = 0; i < nv; ++i) sp.v[vbus[i]] = z[i];
    std::size_t j = nv;
    for (Eigen::Index k = 0; k < ng; ++k) {
      if (k == slack_gen) continue;
      sp.pg[k] = z[j++];
    }
    PfResult pf;
    try {
      pf = solve_power_flow(c, pd, qd, sp);
    } catch (const Error&) {
      return false;
    }
    viol = 0.0;
    auto over = [&](double v, double lo_, double hi_) { viol = std::max({viol, lo_ - v, v - hi_}); };
    for (Eigen::Index i = 0; i < nb; ++i) {
      const auto& b = c.buses[static_cast<std::size_t>(i)];
      over(pf.state.v[i], b.vmin, b.vmax);
    }
    Eigen::VectorXd pg = sp.pg;
    const Eigen::VectorXd qg_bus = pf.injection.q + qd;
    const Eigen::VectorXd pg_bus = pf.injection.p + pd;
    for (Eigen::Index k = 0; k < ng; ++k) {
      const auto& g = c.gens[static_cast<std::size_t>(k)];
      if (k == slack_gen) pg[k] = pg_bus[g.bus];
      over(pg[k], g.pmin, g.pmax);
      over(qg_bus[g.bus], g.qmin, g.qmax);
    }
    const BranchFlows fl = branch_flows(pf.state, c);
    for (std::size_t k = 0; k < c.n_branch(); ++k) {
      const double f = fl.pf[static_cast<Eigen::Index>(k)];
      over(f, -c.branches[k].flow_limit, c.branches[k].flow_limit);
    }
    std::vector<double> pgv(pg.data(), pg.data() + pg.size());
    cost = generation_cost(c, pgv);
    return true;
  };
  auto eval = [&](const std::vector<double>& z, double& cost) {
    double viol = 0.0;
    return evaluate(z, cost, viol) && viol <= 1e-9;
  };

  std::vector<double> lo(dim), hi(dim);
  for (std::size_t i = 0; i < nv; ++i) {
    lo[i] = c.buses[static_cast<std::size_t>(vbus[i])].vmin;
    hi[i] = c.buses[static_cast<std::size_t>(vbus[i])].vmax;
  }
  {
    std::size_t j = nv;
    for (Eigen::Index k = 0; k < ng; ++k) {
      if (k == slack_gen) continue;
      lo[j] = c.gens[static_cast<std::size_t>(k)].pmin;
      hi[j] = c.gens[static_cast<std::size_t>(k)].pmax;
      ++j;
    }
  }

  GridSearchResult best;
  std::vector<double> zbest(dim);
  const int steps = 12;
  std::vector<int> idx(dim, 0);
  while (true) {
    std::vector<double> z(dim);
    for (std::size_t i = 0; i < dim; ++i) z[i] = lo[i] + (hi[i] - lo[i]) * idx[i] / steps;
    double cost = 0.0;
    if (eval(z, cost) && (!best.found || cost < best.objective)) {
      best = {cost, true};
      zbest = z;
    }
    std::size_t i = 0;
    while (i < dim && ++idx[i] > steps) idx[i++] = 0;
    if (i == dim) break;
  }
  if (!best.found) return best;

  // Poll every direction of {-1, 0, 1}^dim on a shrinking mesh.
  std::vector<std::vector<double>> dirs;
  {
    std::vector<int> d(dim, -1);
    while (true) {
      if (std::any_of(d.begin(), d.end(), [](int v) { return v != 0; })) dirs.emplace_back(d.begin(), d.end());
      std::size_t i = 0;
      while (i < dim && ++d[i] > 1) d[i++] = -1;
      if (i == dim) break;
    }
  }
  // Seeded random unit directions on top of the fixed set reach optima in
  // thin feasible cones.
  std::mt19937_64 rng(0x0ac1e);
  std::normal_distribution<double> gauss;
  for (double h = 0.02; h >= 1e-8; h *= 0.5) {
    std::vector<std::vector<double>> poll;
    for (const auto& d : dirs) poll.emplace_back(d.begin(), d.end());
    for (int k = 0; k < 64; ++k) {
      std::vector<double> d(dim);
      double norm = 0.0;
      for (auto& v : d) {
        v = gauss(rng);
        norm += v * v;
      }
      for (auto& v : d) v /= std::sqrt(norm);
      poll.push_back(d);
    }
    bool improved = true;
    while (improved) {
      improved = false;
      for (const auto& dir : poll) {
        std::vector<double> z = zbest;
        for (std::size_t i = 0; i < dim; ++i) {
          const double scale = i < nv ? 1.0 : std::max(1.0, hi[i] - lo[i]);
          z[i] = std::clamp(z[i] + dir[i] * h * scale, lo[i], hi[i]);
        }
        double cost = 0.0;
        if (eval(z, cost) && cost < best.objective - 1e-12) {
          best.objective = cost;
          zbest = z;
          improved = true;
        }
      }
    }
  }
  // Quadratic-penalty Nelder-Mead polish: vertex optima sit in cones too
  // thin for a feasibility-filtered mesh.
  std::vector<double> z0 = zbest;
  for (double rho : {1e4, 1e6, 1e8, 1e10}) {
    auto pen = [&](const std::vector<double>& z) {
      for (std::size_t i = 0; i < dim; ++i) {
        if (z[i] < lo[i] || z[i] > hi[i]) return 1e300;
      }
      double cost = 0.0, viol = 0.0;
      if (!evaluate(z, cost, viol)) return 1e300;
      return cost + rho * viol * viol;
    };
    if (pen(zbest) < pen(z0)) z0 = zbest;
    for (int restart = 0; restart < 20; ++restart) {
      const double before = pen(z0);
      for (double step : {1e-3, 1e-2, 1e-4}) {
        const std::vector<double> z = nelder_mead(pen, z0, step, 4000);
        if (pen(z) < pen(z0)) z0 = z;
        double cost = 0.0, viol = 0.0;
        if (evaluate(z0, cost, viol) && viol <= 1e-6 && cost < best.objective) {
          best.objective = cost;
          zbest = z0;
        }
      }
      if (pen(z0) > before - 1e-9 * std::abs(before)) break;
    }
  }
  return best;
}

}  // namespace oracle
