#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "selmopf/acopf.hpp"
#include "selmopf/case_io.hpp"

namespace selmopf {

/// Target column groups in storage order.
enum class Quantity { PF, QF, V, THETA, PG, QG, F };
inline constexpr Quantity kAllQuantities[] = {Quantity::PF, Quantity::QF,    Quantity::V,
                                              Quantity::THETA, Quantity::PG, Quantity::QG,
                                              Quantity::F};
const char* quantity_name(Quantity q);

/// Column offsets of inputs [PD | QD] and targets [PF | QF | V | THETA | PG | QG | F].
struct ColumnLayout {
  Eigen::Index n_bus = 0, n_branch = 0, n_gen = 0;

  ColumnLayout() = default;
  explicit ColumnLayout(const CaseData& c)
      : n_bus(static_cast<Eigen::Index>(c.n_bus())),
        n_branch(static_cast<Eigen::Index>(c.n_branch())),
        n_gen(static_cast<Eigen::Index>(c.n_gen())) {}
  ColumnLayout(Eigen::Index nb, Eigen::Index nl, Eigen::Index ng) : n_bus(nb), n_branch(nl), n_gen(ng) {}

  Eigen::Index n_inputs() const { return 2 * n_bus; }
  Eigen::Index n_targets() const { return 2 * n_branch + 2 * n_bus + 2 * n_gen + 1; }
  Eigen::Index offset(Quantity q) const;
  Eigen::Index width(Quantity q) const;

  bool operator==(const ColumnLayout&) const = default;
};

struct ColumnLabel {
  std::string quantity;  // PD, QD, PF, QF, V, THETA, PG, QG, F
  int element = 0;       // original bus id, 1-based branch/generator number, 0 for F

  std::string to_string() const;
  static ColumnLabel parse(const std::string& s);
  bool operator==(const ColumnLabel&) const = default;
};

std::vector<ColumnLabel> input_labels(const CaseData& c);
std::vector<ColumnLabel> target_labels(const CaseData& c);

struct DatasetMeta {
  std::uint64_t seed = 0;
  std::string case_name;
  std::string case_hash;
  double feas_tol = 0.0, comp_tol = 0.0, stat_tol = 0.0, active_tol = 0.0;
  std::size_t n_requested = 0;
  std::size_t n_failed = 0;
  std::string generation_timestamp;  // excluded from reproducibility checks
  std::string uncertainty;  // JSON of the UncertaintyConfig used
};

/// Ns rows of (PD, QD) inputs and OPF targets, plus the per-row active-set
/// signature over the full inequality layout.
struct Dataset {
  Eigen::MatrixXd inputs;
  Eigen::MatrixXd targets;
  std::vector<ColumnLabel> input_spec;
  std::vector<ColumnLabel> target_spec;
  std::vector<ActiveSetSignature> signatures;
  ColumnLayout layout;
  DatasetMeta meta;

  Eigen::Index rows() const { return inputs.rows(); }
  /// Consistency of shapes, labels and finiteness. Throws FormatError.
  void check() const;
  Dataset select_rows(const std::vector<Eigen::Index>& rows) const;
};

/// Writes inputs.csv, targets.csv, active_sets.csv and meta.json into `dir`.
void save_dataset(const Dataset& d, const std::string& dir);
Dataset load_dataset(const std::string& dir);

/// 17-significant-digit CSV with a header row.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Eigen::MatrixXd& m);
Eigen::MatrixXd read_csv(const std::string& path, std::vector<std::string>* header = nullptr);

std::string format_g17(double v);
std::string utc_timestamp();

}  // namespace selmopf
