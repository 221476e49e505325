#include <doctest.h>

#include "oracles.hpp"
#include "selmopf/errors.hpp"
#include "selmopf/grid.hpp"
#include "selmopf/powerflow.hpp"

using namespace selmopf;

namespace {

const std::string kCases = std::string(SELMOPF_DATA_DIR) + "/cases";

CaseData two_bus() {
  CaseData c;
  c.name = "two";
  c.buses = {Bus{1, BusType::slack, 0, 0, 0.9, 1.1, 0, 0}, Bus{2, BusType::pq, 0.5, 0.1, 0.9, 1.1, 0, 0}};
  c.branches = {Branch{0, 1, 0.0, 0.1, 0.0, 1.0, 1.0, true}};
  c.gens = {Gen{0, 0, 2, -1, 1, {}}};
  return c;
}

Eigen::VectorXd demand(const CaseData& c, bool reactive) {
  Eigen::VectorXd d(static_cast<Eigen::Index>(c.n_bus()));
  for (std::size_t i = 0; i < c.n_bus(); ++i) d[static_cast<Eigen::Index>(i)] = reactive ? c.buses[i].qd : c.buses[i].pd;
  return d;
}

PfSetpoints midpoint_setpoints(const CaseData& c) {
  PfSetpoints sp{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(c.n_gen())),
                 Eigen::VectorXd::Constant(static_cast<Eigen::Index>(c.n_bus()), 1.0)};
  double load = demand(c, false).sum();
  for (std::size_t k = 0; k < c.n_gen(); ++k) {
    sp.pg[static_cast<Eigen::Index>(k)] = load / static_cast<double>(c.n_gen());
    sp.v[c.gens[k].bus] = 1.03;
  }
  return sp;
}

}  // namespace

TEST_CASE("config validation") {
  CHECK_THROWS_AS((PfConfig{0.0, 10}.validate()), ValidationError);
  CHECK_THROWS_AS((PfConfig{1e-8, 0}.validate()), ValidationError);
  CHECK_NOTHROW(PfConfig{}.validate());
}

TEST_CASE("zero demand on a lossless case is solved at the flat start") {
  CaseData c = two_bus();
  c.buses[1].pd = c.buses[1].qd = 0.0;
  const Eigen::VectorXd z = Eigen::VectorXd::Zero(2);
  const PfResult r = solve_power_flow(c, z, z, {Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(2)});
  CHECK(r.iterations <= 1);
  CHECK((r.state.v.array() - 1.0).abs().maxCoeff() < 1e-12);
  CHECK(r.state.theta.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("two-bus solution matches the bisection oracle") {
  for (auto [p, q] : {std::pair{0.5, 0.1}, std::pair{1.0, 0.3}, std::pair{0.2, -0.1}, std::pair{2.0, 0.5}}) {
    CAPTURE(p);
    CaseData c = two_bus();
    c.buses[1].pd = p;
    c.buses[1].qd = q;
    const PfResult r = solve_power_flow(c, demand(c, false), demand(c, true),
                                        {Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(2)});
    const oracle::TwoBus o = oracle::two_bus(p, q);
    CHECK(std::abs(r.state.v[1] - o.v2) < 1e-8);
    CHECK(std::abs(r.state.theta[1] - o.theta2) < 1e-8);
    CHECK(r.state.theta[0] == 0.0);
    CHECK(r.final_mismatch() <= 1e-8);
  }
}

TEST_CASE("fixtures converge with a monotone tail and reproduce the demand") {
  for (const char* name : {"case3", "case9", "case14"}) {
    CAPTURE(name);
    const CaseData c = load_case(kCases + "/" + name + ".case");
    const Eigen::VectorXd pd = demand(c, false), qd = demand(c, true);
    const PfSetpoints sp = midpoint_setpoints(c);
    const PfResult r = solve_power_flow(c, pd, qd, sp);
    CHECK(r.final_mismatch() <= 1e-8);
    const auto& h = r.mismatch_history;
    REQUIRE(h.size() >= 2);
    for (Eigen::Index k = std::max<Eigen::Index>(1, h.size() - 3); k < h.size(); ++k) CHECK(h[k] <= h[k - 1]);
    if (h.size() >= 3 && h[h.size() - 2] < 1e-2) {
      MESSAGE("tail ratio " << h[h.size() - 1] / (h[h.size() - 2] * h[h.size() - 2]));
    }

    const NodalPower s = power_injections(r.state, build_admittance(c));
    CHECK((s.p - r.injection.p).cwiseAbs().maxCoeff() < 1e-12);
    std::vector<bool> has_gen(c.n_bus(), false);
    for (const auto& g : c.gens) has_gen[static_cast<std::size_t>(g.bus)] = true;
    for (std::size_t i = 0; i < c.n_bus(); ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      if (!has_gen[i]) {
        CHECK(std::abs(s.p[ii] + pd[ii]) <= 1e-8);
        CHECK(std::abs(s.q[ii] + qd[ii]) <= 1e-8);
      } else {
        CHECK(std::abs(r.state.v[ii] - sp.v[ii]) < 1e-15);
      }
    }
    for (std::size_t k = 0; k < c.n_gen(); ++k) {
      const int b = c.gens[k].bus;
      if (b == c.slack_bus()) continue;
      CHECK(std::abs(s.p[b] + pd[b] - sp.pg[static_cast<Eigen::Index>(k)]) <= 1e-8);
    }
  }
}

TEST_CASE("identical inputs give bit-identical outputs") {
  const CaseData c = load_case(kCases + "/case14.case");
  const PfSetpoints sp = midpoint_setpoints(c);
  const PfResult a = solve_power_flow(c, demand(c, false), demand(c, true), sp);
  const PfResult b = solve_power_flow(c, demand(c, false), demand(c, true), sp);
  CHECK(a.state.v == b.state.v);
  CHECK(a.state.theta == b.state.theta);
  CHECK(a.mismatch_history == b.mismatch_history);
}

TEST_CASE("hopeless loading reports the last mismatch") {
  CaseData c = two_bus();
  c.buses[1].pd = 50.0;
  PfConfig cfg;
  cfg.max_iter = 5;
  try {
    solve_power_flow(c, demand(c, false), demand(c, true), {Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(2)}, cfg);
    FAIL("expected an error");
  } catch (const NonConvergence& e) {
    CHECK(e.last_mismatch > cfg.tol);
    CHECK(e.iterations == cfg.max_iter);
  } catch (const SingularJacobian&) {
  }
}

TEST_CASE("dimension checks") {
  const CaseData c = two_bus();
  CHECK_THROWS_AS(solve_power_flow(c, Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(2),
                                   {Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(2)}),
                  DimensionMismatch);
}
