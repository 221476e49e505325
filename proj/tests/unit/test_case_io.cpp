#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include <json.hpp>

#include "selmopf/case_io.hpp"
#include "selmopf/errors.hpp"

using namespace selmopf;

namespace {

const std::string kData = SELMOPF_TEST_DATA_DIR;
const std::string kCases = std::string(SELMOPF_DATA_DIR) + "/cases";

const char* kTwoBus = R"(function mpc = two
mpc.version = '2';
mpc.baseMVA = 100;
mpc.bus = [
	1	3	0	0	0	0	1	1	0	230	1	1.1	0.9;
	2	1	50	10	0	0	1	1	0	230	1	1.1	0.9;
];
mpc.gen = [
	1	0	0	100	-100	1	100	1	200	0;
];
mpc.branch = [
	1	2	0	0.1	0	100	100	100	0	0	1	-360	360;
];
mpc.gencost = [
	2	0	0	3	0.01	40	0;
];
)";

std::string without_branch_rows(std::string text) {
  const auto b = text.find("mpc.branch = [");
  const auto e = text.find("];", b);
  return text.substr(0, b) + "mpc.branch = [\n" + text.substr(e);
}

}  // namespace

TEST_CASE("two-bus file maps to per-unit CaseData") {
  const CaseData c = parse_case(kTwoBus);
  REQUIRE(c.n_bus() == 2);
  REQUIRE(c.n_branch() == 1);
  CHECK(c.branches[0].x == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(c.buses[1].pd == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(c.buses[1].qd == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(c.slack_bus() == 0);
  CHECK(c.bus_index(2) == 1);
  CHECK(c.bus_index(7) == -1);
  CHECK(c.gens[0].cost == CostCoeffs{0.01, 40, 0});
}

TEST_CASE("deleting the only branch isolates bus 2") {
  CHECK_THROWS_AS(parse_case(without_branch_rows(kTwoBus)), IslandError);
}

TEST_CASE("gencost round-trips bit-exactly") {
  const CaseData c = parse_case(kTwoBus);
  const CaseData back = parse_case(serialize_case(c));
  CHECK(back == c);
  CHECK(back.gens[0].cost.a2 == 0.01);
  CHECK(back.gens[0].cost.a1 == 40.0);
  CHECK(parse_case(serialize_case_json(c)) == c);
}

TEST_CASE("bundled cases round-trip through both formats") {
  for (const char* name : {"case3", "case9", "case14"}) {
    CAPTURE(name);
    const CaseData c = load_case(kCases + "/" + name + ".case");
    CHECK(parse_case(serialize_case(c)) == c);
    CHECK(parse_case(serialize_case_json(c)) == c);
    CHECK(case_hash(parse_case(serialize_case(c))) == case_hash(c));
  }
}

TEST_CASE("randomly perturbed cases round-trip field-exactly") {
  const CaseData base = load_case(kCases + "/case14.case");
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  for (int trial = 0; trial < 20; ++trial) {
    CaseData c = base;
    for (auto& b : c.buses) {
      b.pd *= u(rng);
      b.qd *= u(rng);
      b.gs = (u(rng) - 1.0) * 1e-3;
    }
    for (auto& br : c.branches) {
      br.r *= u(rng);
      br.x *= u(rng);
      br.flow_limit *= u(rng);
    }
    for (auto& g : c.gens) g.cost.a2 *= u(rng);
    CHECK(parse_case(serialize_case(c)) == c);
    CHECK(parse_case(serialize_case_json(c)) == c);
  }
}

TEST_CASE("per-unit conversion of loads") {
  const std::string path = kCases + "/case14.case";
  const CaseData c = load_case(path);
  std::ifstream in(path);
  std::string line;
  bool in_bus = false;
  std::size_t k = 0;
  while (std::getline(in, line)) {
    if (line.rfind("mpc.bus", 0) == 0) {
      in_bus = true;
      continue;
    }
    if (in_bus && line.rfind("];", 0) == 0) break;
    if (!in_bus || line.find_first_not_of(" \t") == std::string::npos || line[0] == '%') continue;
    std::istringstream row(line);
    double id, type, pd_mw, qd_mvar;
    row >> id >> type >> pd_mw >> qd_mvar;
    CHECK(c.buses[k].pd * c.base_mva == doctest::Approx(pd_mw).epsilon(1e-12));
    CHECK(c.buses[k].qd * c.base_mva == doctest::Approx(qd_mvar).epsilon(1e-12));
    ++k;
  }
  CHECK(k == c.n_bus());
}

TEST_CASE("every invalid fixture is rejected with its named invariant") {
  std::ifstream in(kData + "/invalid/manifest.json");
  const auto manifest = nlohmann::json::parse(in);
  REQUIRE(manifest.size() >= 20);
  for (const auto& e : manifest) {
    const std::string file = e.at("file");
    CAPTURE(file);
    bool thrown = false;
    try {
      load_case(kData + "/invalid/" + file);
    } catch (const Error& err) {
      thrown = true;
      CHECK(std::string(err.name()) == e.at("error").get<std::string>());
      CHECK(std::string(err.what()).find(e.at("message").get<std::string>()) != std::string::npos);
    }
    CHECK(thrown);
  }
}

TEST_CASE("every listed invariant has a fixture") {
  std::ifstream in(kData + "/invalid/manifest.json");
  const auto manifest = nlohmann::json::parse(in);
  std::string all;
  for (const auto& e : manifest) all += e.at("message").get<std::string>() + "|";
  for (const char* inv : {"exactly one slack bus", "missing bus", "pmin <= pmax", "qmin <= qmax", "vmin < vmax",
                          "flow_limit > 0", "r >= 0", "x != 0", "tap > 0", "not connected"}) {
    CAPTURE(inv);
    CHECK(all.find(inv) != std::string::npos);
  }
}

TEST_CASE("out-of-service elements are dropped after the connectivity check") {
  std::string text = kTwoBus;
  const auto pos = text.find("mpc.branch = [\n") + std::string("mpc.branch = [\n").size();
  text.insert(pos, "\t1\t2\t0\t0.2\t0\t100\t100\t100\t0\t0\t0\t-360\t360;\n");
  const CaseData c = parse_case(text);
  CHECK(c.n_branch() == 1);
  CHECK(c.branches[0].x == doctest::Approx(0.1));
}

TEST_CASE("malformed JSON mirror") {
  CHECK_THROWS_AS(parse_case("{ not json"), MalformedFile);
  CHECK_THROWS_AS(parse_case(R"({"base_mva": 100})"), MalformedFile);
}

TEST_CASE("missing file") {
  CHECK_THROWS_AS(load_case(kData + "/no_such_file.case"), MalformedFile);
}

TEST_CASE("generation cost uses MW") {
  const CaseData c = parse_case(kTwoBus);
  const Gen& g = c.gens[0];
  CHECK(generation_cost(g, 0.5, 100.0) == doctest::Approx(0.01 * 2500 + 40 * 50));
  CHECK(generation_cost_gradient(g, 0.5, 100.0) == doctest::Approx((2 * 0.01 * 50 + 40) * 100));
  CHECK(generation_cost_curvature(g, 100.0) == doctest::Approx(2 * 0.01 * 100 * 100));
  CHECK(generation_cost(c, {0.5}) == doctest::Approx(2025.0));
}
