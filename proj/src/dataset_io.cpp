#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "selmopf/dataset.hpp"
#include "selmopf/errors.hpp"

namespace selmopf {

namespace fs = std::filesystem;
using Eigen::Index;

const char* quantity_name(Quantity q) {
  switch (q) {
    case Quantity::PF: return "PF";
    case Quantity::QF: return "QF";
    case Quantity::V: return "V";
    case Quantity::THETA: return "THETA";
    case Quantity::PG: return "PG";
    case Quantity::QG: return "QG";
    case Quantity::F: return "F";
  }
  return "?";
}

Index ColumnLayout::width(Quantity q) const {
  switch (q) {
    case Quantity::PF:
    case Quantity::QF: return n_branch;
    case Quantity::V:
    case Quantity::THETA: return n_bus;
    case Quantity::PG:
    case Quantity::QG: return n_gen;
    case Quantity::F: return 1;
  }
  return 0;
}

Index ColumnLayout::offset(Quantity q) const {
  Index off = 0;
  for (Quantity k : kAllQuantities) {
    if (k == q) return off;
    off += width(k);
  }
  return off;
}

std::string ColumnLabel::to_string() const {
  if (quantity == "F") return "F";
  return quantity + "_" + std::to_string(element);
}

ColumnLabel ColumnLabel::parse(const std::string& s) {
  if (s == "F") return {"F", 0};
  auto us = s.rfind('_');
  if (us == std::string::npos) throw FormatError("bad column label '" + s + "'");
  try {
    return {s.substr(0, us), std::stoi(s.substr(us + 1))};
  } catch (const std::exception&) {
    throw FormatError("bad column label '" + s + "'");
  }
}

std::vector<ColumnLabel> input_labels(const CaseData& c) {
  std::vector<ColumnLabel> out;
  for (const auto& b : c.buses) out.push_back({"PD", b.id});
  for (const auto& b : c.buses) out.push_back({"QD", b.id});
  return out;
}

std::vector<ColumnLabel> target_labels(const CaseData& c) {
  std::vector<ColumnLabel> out;
  for (const char* q : {"PF", "QF"}) {
    for (std::size_t k = 0; k < c.n_branch(); ++k) out.push_back({q, static_cast<int>(k + 1)});
  }
  for (const char* q : {"V", "THETA"}) {
    for (const auto& b : c.buses) out.push_back({q, b.id});
  }
  for (const char* q : {"PG", "QG"}) {
    for (std::size_t k = 0; k < c.n_gen(); ++k) out.push_back({q, static_cast<int>(k + 1)});
  }
  out.push_back({"F", 0});
  return out;
}

void Dataset::check() const {
  if (inputs.rows() != targets.rows()) throw FormatError("inputs and targets row counts differ");
  if (static_cast<Index>(input_spec.size()) != inputs.cols() ||
      static_cast<Index>(target_spec.size()) != targets.cols()) {
    throw FormatError("column_spec length does not match matrix widths");
  }
  if (layout.n_inputs() != inputs.cols() || layout.n_targets() != targets.cols()) {
    throw FormatError("column layout does not match matrix widths");
  }
  if (!signatures.empty() && static_cast<Index>(signatures.size()) != inputs.rows()) {
    throw FormatError("one active-set signature per row required");
  }
  if (!inputs.allFinite() || !targets.allFinite()) throw FormatError("dataset has non-finite entries");
}

Dataset Dataset::select_rows(const std::vector<Index>& rows) const {
  Dataset out;
  out.input_spec = input_spec;
  out.target_spec = target_spec;
  out.layout = layout;
  out.meta = meta;
  out.inputs.resize(static_cast<Index>(rows.size()), inputs.cols());
  out.targets.resize(static_cast<Index>(rows.size()), targets.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.inputs.row(static_cast<Index>(r)) = inputs.row(rows[r]);
    out.targets.row(static_cast<Index>(r)) = targets.row(rows[r]);
    if (!signatures.empty()) out.signatures.push_back(signatures[static_cast<std::size_t>(rows[r])]);
  }
  return out;
}

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Eigen::MatrixXd& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write '" + path + "'");
  for (std::size_t k = 0; k < header.size(); ++k) out << (k ? "," : "") << header[k];
  out << '\n';
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index k = 0; k < m.cols(); ++k) out << (k ? "," : "") << format_g17(m(r, k));
    out << '\n';
  }
}

Eigen::MatrixXd read_csv(const std::string& path, std::vector<std::string>* header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw FormatError("'" + path + "' is empty");
  std::vector<std::string> cols;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cols.push_back(cell);
  }
  std::vector<double> values;
  Index rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t count = 0;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) throw FormatError("'" + path + "': bad number '" + cell + "'");
      values.push_back(v);
      ++count;
    }
    if (count != cols.size()) {
      throw FormatError("'" + path + "' row " + std::to_string(rows + 1) + " has " +
                        std::to_string(count) + " cells, header has " + std::to_string(cols.size()));
    }
    ++rows;
  }
  if (header) *header = cols;
  const auto ncol = static_cast<Index>(cols.size());
  Eigen::MatrixXd m(rows, ncol);
  for (Index r = 0; r < rows; ++r) {
    for (Index k = 0; k < ncol; ++k) m(r, k) = values[static_cast<std::size_t>(r * ncol + k)];
  }
  return m;
}

namespace {

std::vector<std::string> label_strings(const std::vector<ColumnLabel>& labels) {
  std::vector<std::string> out;
  for (const auto& l : labels) out.push_back(l.to_string());
  return out;
}

}  // namespace

void save_dataset(const Dataset& d, const std::string& dir) {
  d.check();
  fs::create_directories(dir);
  write_csv((fs::path(dir) / "inputs.csv").string(), label_strings(d.input_spec), d.inputs);
  write_csv((fs::path(dir) / "targets.csv").string(), label_strings(d.target_spec), d.targets);
  {
    std::ofstream out(fs::path(dir) / "active_sets.csv", std::ios::binary);
    out << "signature\n";
    for (const auto& s : d.signatures) out << s.to_string() << '\n';
  }
  nlohmann::ordered_json j;
  j["format"] = "selmopf-dataset";
  j["version"] = 1;
  j["seed"] = d.meta.seed;
  j["case_name"] = d.meta.case_name;
  j["case_hash"] = d.meta.case_hash;
  j["layout"] = {{"n_bus", d.layout.n_bus}, {"n_branch", d.layout.n_branch}, {"n_gen", d.layout.n_gen}};
  j["solver"] = {{"feas_tol", d.meta.feas_tol},
                 {"comp_tol", d.meta.comp_tol},
                 {"stat_tol", d.meta.stat_tol},
                 {"active_tol", d.meta.active_tol}};
  j["n_requested"] = d.meta.n_requested;
  j["n_rows"] = d.rows();
  j["n_failed"] = d.meta.n_failed;
  j["uncertainty"] = d.meta.uncertainty.empty() ? nlohmann::ordered_json::object()
                                                : nlohmann::ordered_json::parse(d.meta.uncertainty);
  j["generation_timestamp"] = d.meta.generation_timestamp;
  std::ofstream out(fs::path(dir) / "meta.json", std::ios::binary);
  out << j.dump(2) << '\n';
}

Dataset load_dataset(const std::string& dir) {
  Dataset d;
  std::vector<std::string> in_header, tgt_header;
  d.inputs = read_csv((fs::path(dir) / "inputs.csv").string(), &in_header);
  d.targets = read_csv((fs::path(dir) / "targets.csv").string(), &tgt_header);
  for (const auto& h : in_header) d.input_spec.push_back(ColumnLabel::parse(h));
  for (const auto& h : tgt_header) d.target_spec.push_back(ColumnLabel::parse(h));

  std::ifstream meta_in(fs::path(dir) / "meta.json", std::ios::binary);
  if (!meta_in) throw FormatError("missing meta.json in '" + dir + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(meta_in);
    d.meta.seed = j.at("seed").get<std::uint64_t>();
    d.meta.case_name = j.at("case_name").get<std::string>();
    d.meta.case_hash = j.at("case_hash").get<std::string>();
    const auto& s = j.at("solver");
    d.meta.feas_tol = s.at("feas_tol").get<double>();
    d.meta.comp_tol = s.at("comp_tol").get<double>();
    d.meta.stat_tol = s.at("stat_tol").get<double>();
    d.meta.active_tol = s.at("active_tol").get<double>();
    d.meta.n_requested = j.at("n_requested").get<std::size_t>();
    d.meta.n_failed = j.at("n_failed").get<std::size_t>();
    d.meta.uncertainty = j.at("uncertainty").dump();
    d.meta.generation_timestamp = j.value("generation_timestamp", "");
    const auto& l = j.at("layout");
    d.layout = ColumnLayout(l.at("n_bus").get<Index>(), l.at("n_branch").get<Index>(),
                            l.at("n_gen").get<Index>());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad meta.json: ") + e.what());
  }

  std::ifstream sig_in(fs::path(dir) / "active_sets.csv", std::ios::binary);
  if (sig_in) {
    std::string line;
    std::getline(sig_in, line);
    while (std::getline(sig_in, line)) {
      if (!line.empty()) d.signatures.push_back(ActiveSetSignature::from_string(line));
    }
  }
  d.check();
  return d;
}

}  // namespace selmopf
