#include <doctest.h>

#include <json.hpp>

#include "selmopf/errors.hpp"
#include "selmopf/scenario.hpp"

using namespace selmopf;
using Eigen::VectorXd;

namespace {

const std::string kCases = std::string(SELMOPF_DATA_DIR) + "/cases";

VectorXd base(const CaseData& c, bool reactive) {
  VectorXd d(static_cast<Eigen::Index>(c.n_bus()));
  for (std::size_t i = 0; i < c.n_bus(); ++i) d[static_cast<Eigen::Index>(i)] = reactive ? c.buses[i].qd : c.buses[i].pd;
  return d;
}

RenewableSource wind(int bus, double cap) {
  RenewableSource r;
  r.bus_id = bus;
  r.kind = RenewableKind::wind;
  r.capacity = cap;
  return r;
}

RenewableSource pv(int bus, double cap) {
  RenewableSource r;
  r.bus_id = bus;
  r.kind = RenewableKind::pv;
  r.capacity = cap;
  return r;
}

}  // namespace

TEST_CASE("zero fluctuation reproduces base demand") {
  const CaseData c = load_case(kCases + "/case9.case");
  UncertaintyConfig u;
  u.load_fluctuation = 0.0;
  for (const Scenario& s : sample_scenarios(c, u, 20)) {
    CHECK(s.pd == base(c, false));
    CHECK(s.qd == base(c, true));
  }
}

TEST_CASE("same seed gives bit-identical scenarios; different seeds differ") {
  const CaseData c = load_case(kCases + "/case9.case");
  UncertaintyConfig u;
  u.renewables = {wind(5, 0.5), pv(7, 0.35)};
  const auto a = sample_scenarios(c, u, 50);
  const auto b = sample_scenarios(c, u, 50);
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].pd == b[k].pd);
    CHECK(a[k].qd == b[k].qd);
  }
  const Scenario one = sample_scenario(c, u, 17);
  CHECK(one.pd == a[17].pd);
  u.seed = 2;
  CHECK_FALSE(sample_scenario(c, u, 0).pd == a[0].pd);
}

TEST_CASE("uniform fluctuation statistics") {
  const CaseData c = load_case(kCases + "/case9.case");
  UncertaintyConfig u;
  u.seed = 42;
  const std::size_t n = 10000;
  const auto s = sample_scenarios(c, u, n);
  const VectorXd pd0 = base(c, false), qd0 = base(c, true);
  VectorXd mean = VectorXd::Zero(pd0.size());
  for (const auto& x : s) {
    mean += x.pd / static_cast<double>(n);
    for (Eigen::Index i = 0; i < pd0.size(); ++i) {
      CHECK(x.pd[i] >= 0.9 * pd0[i] - 1e-15);
      CHECK(x.pd[i] <= 1.1 * pd0[i] + 1e-15);
      if (pd0[i] != 0.0) CHECK(std::abs(x.qd[i] / qd0[i] - x.pd[i] / pd0[i]) < 1e-12);
    }
  }
  for (Eigen::Index i = 0; i < pd0.size(); ++i) {
    if (pd0[i] != 0.0) CHECK(std::abs(mean[i] / pd0[i] - 1.0) < 0.01);
  }
}

TEST_CASE("truncated normal stays within the fluctuation band") {
  const CaseData c = load_case(kCases + "/case9.case");
  UncertaintyConfig u;
  u.load_distribution = LoadDistribution::truncated_normal;
  const VectorXd pd0 = base(c, false);
  for (const auto& x : sample_scenarios(c, u, 2000)) {
    CHECK(((x.pd - 0.9 * pd0).array() >= -1e-15).all());
    CHECK(((1.1 * pd0 - x.pd).array() >= -1e-15).all());
  }
}

TEST_CASE("renewable draws stay within capacity and leave reactive demand alone") {
  const CaseData c = load_case(kCases + "/case9.case");
  UncertaintyConfig u;
  u.load_fluctuation = 0.0;
  u.renewables = {wind(5, 0.5), pv(7, 0.35)};
  const VectorXd pd0 = base(c, false), qd0 = base(c, true);
  const int b5 = c.bus_index(5), b7 = c.bus_index(7);
  double wind_sum = 0.0, pv_min = 1.0, pv_max = 0.0;
  bool saw_full = false, saw_zero = false;
  const std::size_t n = 5000;
  for (const auto& x : sample_scenarios(c, u, n)) {
    const double w = pd0[b5] - x.pd[b5];
    const double p = pd0[b7] - x.pd[b7];
    CHECK(w >= 0.0);
    CHECK(w <= 0.5 + 1e-15);
    CHECK(p >= 0.0);
    CHECK(p <= 0.35 + 1e-15);
    saw_full |= std::abs(w - 0.5) < 1e-15;
    saw_zero |= w == 0.0;
    wind_sum += w;
    pv_min = std::min(pv_min, p);
    pv_max = std::max(pv_max, p);
    CHECK(x.qd == qd0);
  }
  CHECK(saw_full);
  CHECK(saw_zero);
  CHECK(pv_min < 0.05);
  CHECK(pv_max > 0.3);
  // Beta(2, 2) has mean 1/2.
  UncertaintyConfig only_pv = u;
  only_pv.renewables = {pv(7, 1.0)};
  double mean = 0.0;
  for (const auto& x : sample_scenarios(c, only_pv, n)) mean += (pd0[b7] - x.pd[b7]) / static_cast<double>(n);
  CHECK(std::abs(mean - 0.5) < 0.02);
}

TEST_CASE("wind power curve") {
  const RenewableSource w = wind(1, 1.0);
  CHECK(wind_power_fraction(w, 0.0) == 0.0);
  CHECK(wind_power_fraction(w, 2.99) == 0.0);
  CHECK(wind_power_fraction(w, 3.0) == 0.0);
  CHECK(wind_power_fraction(w, 7.5) == doctest::Approx(0.5));
  CHECK(wind_power_fraction(w, 12.0) == 1.0);
  CHECK(wind_power_fraction(w, 24.9) == 1.0);
  CHECK(wind_power_fraction(w, 25.0) == 0.0);
}

TEST_CASE("uncertainty validation and JSON round trip") {
  UncertaintyConfig u;
  u.load_fluctuation = 1.0;
  CHECK_THROWS_AS(u.validate(), ValidationError);
  u.load_fluctuation = -0.1;
  CHECK_THROWS_AS(u.validate(), ValidationError);
  u = {};
  u.renewables = {wind(5, -1.0)};
  CHECK_THROWS_AS(u.validate(), ValidationError);
  u.renewables = {wind(5, 1.0)};
  u.renewables[0].weibull_shape = 0.0;
  CHECK_THROWS_AS(u.validate(), ValidationError);
  u.renewables = {pv(5, 1.0)};
  u.renewables[0].beta_beta = 0.0;
  CHECK_THROWS_AS(u.validate(), ValidationError);

  u = {};
  u.load_fluctuation = 0.05;
  u.load_distribution = LoadDistribution::truncated_normal;
  u.seed = 0xfffffffffffffff1ULL;
  u.renewables = {wind(5, 0.5), pv(7, 0.35)};
  const nlohmann::json j = u;
  const UncertaintyConfig back = j.get<UncertaintyConfig>();
  CHECK(nlohmann::json(back) == j);
  CHECK(back.seed == u.seed);
  CHECK(back.renewables.size() == 2);

  const CaseData c = load_case(kCases + "/case9.case");
  CHECK(u.penetration(c) == doctest::Approx(0.85 / 3.15));
}

TEST_CASE("renewable at an unknown bus") {
  const CaseData c = load_case(kCases + "/case9.case");
  UncertaintyConfig u;
  u.renewables = {wind(99, 0.5)};
  CHECK_THROWS_AS(sample_scenario(c, u, 0), ValidationError);
  CHECK_THROWS_AS(build_dataset(c, u, 4), ValidationError);
}
