#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace selmopf {

enum class BusType { slack, pv, pq };

/// Quadratic generation cost a2*P^2 + a1*P + a0 with P in MW.
struct CostCoeffs {
  double a2 = 0.0;
  double a1 = 0.0;
  double a0 = 0.0;

  bool operator==(const CostCoeffs&) const = default;
};

/// All electrical quantities are per-unit on CaseData::base_mva.
struct Bus {
  int id = 0;  // original (file) id
  BusType type = BusType::pq;
  double pd = 0.0;
  double qd = 0.0;
  double vmin = 0.9;
  double vmax = 1.1;
  double gs = 0.0;
  double bs = 0.0;

  bool operator==(const Bus&) const = default;
};

/// `from`/`to` are dense 0-based bus indices.
struct Branch {
  int from = 0;
  int to = 0;
  double r = 0.0;
  double x = 0.0;
  double b_charge = 0.0;
  double tap = 1.0;
  double flow_limit = 0.0;
  bool in_service = true;

  bool operator==(const Branch&) const = default;
};

/// `bus` is a dense 0-based bus index.
struct Gen {
  int bus = 0;
  double pmin = 0.0;
  double pmax = 0.0;
  double qmin = 0.0;
  double qmax = 0.0;
  CostCoeffs cost;

  bool operator==(const Gen&) const = default;
};

/// Static grid description. Immutable after `parse_case`/`validate_case`.
struct CaseData {
  std::string name;
  double base_mva = 100.0;
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<Gen> gens;

  bool operator==(const CaseData&) const = default;

  std::size_t n_bus() const { return buses.size(); }
  std::size_t n_branch() const { return branches.size(); }
  std::size_t n_gen() const { return gens.size(); }
  int slack_bus() const;
  /// Dense index of an original bus id, or -1.
  int bus_index(int original_id) const;
};

/// Per-unit generator output -> cost units (Eq. of the objective, MW based).
double generation_cost(const CaseData& c, const std::vector<double>& pg_pu);
double generation_cost(const Gen& g, double pg_pu, double base_mva);
/// d cost / d pg_pu and d2 cost / d pg_pu^2.
double generation_cost_gradient(const Gen& g, double pg_pu, double base_mva);
double generation_cost_curvature(const Gen& g, double base_mva);

/// Checks every CaseData invariant; throws ValidationError naming the
/// violated invariant, IslandError when the in-service graph is disconnected.
void validate_case(const CaseData& c);

/// Parses MATPOWER-subset text or the JSON mirror (auto-detected by the
/// first non-blank character). Out-of-service branches and generators are
/// dropped after the connectivity check.
CaseData parse_case(std::string_view text);
CaseData load_case(const std::string& path);

/// MATPOWER-subset text. `parse_case(serialize_case(c)) == c`.
std::string serialize_case(const CaseData& c);
/// JSON mirror of the MATPOWER subset (same units and columns).
std::string serialize_case_json(const CaseData& c);

/// FNV-1a of the canonical serialization, hex encoded.
std::string case_hash(const CaseData& c);

}  // namespace selmopf
