#include "selmopf/case_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "selmopf/errors.hpp"

namespace selmopf {

namespace {

// File values are held in extended precision so that MW <-> p.u. conversion
// round-trips exactly.
using Real = long double;
using Matrix = std::vector<std::vector<Real>>;
using ljson = nlohmann::basic_json<std::map, std::vector, std::string, bool, std::int64_t, std::uint64_t, Real>;

// MATPOWER column indices (0-based).
namespace bus_col {
constexpr int id = 0, type = 1, pd = 2, qd = 3, gs = 4, bs = 5, vmax = 11, vmin = 12;
constexpr int count = 13;
}  // namespace bus_col
namespace br_col {
constexpr int from = 0, to = 1, r = 2, x = 3, b = 4, rate_a = 5, ratio = 8, angle = 9,
              status = 10;
constexpr int count = 11;
}  // namespace br_col
namespace gen_col {
constexpr int bus = 0, qmax = 3, qmin = 4, status = 7, pmax = 8, pmin = 9;
constexpr int count = 10;
}  // namespace gen_col

struct RawCase {
  std::string name;
  std::optional<Real> base_mva;
  std::optional<Matrix> bus, branch, gen, gencost;
};

std::string format_double(double v) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string format_real(Real v) {
  if (static_cast<Real>(static_cast<double>(v)) == v) return format_double(static_cast<double>(v));
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.20Le", v);
  return buf;
}

// Up to 17 significant digits denote a double; longer tokens are extended.
int significant_digits(const std::string& t) {
  int n = 0;
  bool leading = true;
  for (char ch : t) {
    if (ch == 'e' || ch == 'E') break;
    if (ch < '0' || ch > '9') continue;
    if (leading && ch == '0') continue;
    leading = false;
    ++n;
  }
  return n;
}

double to_pu(Real v, Real base) { return static_cast<double>(v / base); }

// Shortest of the double and extended products that converts back to `pu`.
Real to_file_units(double pu, double base) {
  const double s = pu * base;
  if (to_pu(s, base) == pu) return s;
  return static_cast<Real>(pu) * static_cast<Real>(base);
}

Real parse_number(std::string_view tok) {
  std::string t(tok);
  if (t == "Inf" || t == "inf") return HUGE_VAL;
  if (t == "-Inf" || t == "-inf") return -HUGE_VAL;
  char* end = nullptr;
  const Real v = significant_digits(t) > 17 ? std::strtold(t.c_str(), &end) : std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || std::isnan(v)) {
    throw MalformedFile("unparseable token '" + t + "'");
  }
  return v;
}

std::string strip_comments(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool in_comment = false;
  for (char ch : text) {
    if (ch == '\n') in_comment = false;
    if (ch == '%') in_comment = true;
    if (!in_comment) out.push_back(ch);
  }
  return out;
}

Matrix parse_matrix_body(std::string_view body, const std::string& section) {
  Matrix rows;
  std::vector<Real> row;
  std::string tok;
  auto flush_tok = [&] {
    if (!tok.empty()) {
      try {
        row.push_back(parse_number(tok));
      } catch (const MalformedFile& e) {
        throw MalformedFile("section '" + section + "': " + e.what());
      }
      tok.clear();
    }
  };
  auto flush_row = [&] {
    flush_tok();
    if (!row.empty()) rows.push_back(std::move(row));
    row.clear();
  };
  for (char ch : body) {
    if (ch == ';' || ch == '\n') {
      flush_row();
    } else if (std::isspace(static_cast<unsigned char>(ch)) || ch == ',') {
      flush_tok();
    } else {
      tok.push_back(ch);
    }
  }
  flush_row();
  return rows;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

RawCase parse_matpower(std::string_view text) {
  RawCase raw;
  const std::string src = strip_comments(text);
  std::size_t pos = 0;
  while (pos < src.size()) {
    while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
    if (pos >= src.size()) break;

    if (src.compare(pos, 8, "function") == 0) {
      auto eol = src.find('\n', pos);
      std::string line = src.substr(pos, eol == std::string::npos ? std::string::npos : eol - pos);
      auto eq = line.find('=');
      if (eq == std::string::npos) throw MalformedFile("malformed function header");
      raw.name = trim(std::string_view(line).substr(eq + 1));
      pos = eol == std::string::npos ? src.size() : eol + 1;
      continue;
    }
    if (src.compare(pos, 4, "mpc.") != 0) {
      auto eol = src.find('\n', pos);
      throw MalformedFile("unexpected statement '" +
                          trim(std::string_view(src).substr(pos, eol - pos)) + "'");
    }
    auto eq = src.find('=', pos);
    if (eq == std::string::npos) throw MalformedFile("missing '=' in assignment");
    std::string field = trim(std::string_view(src).substr(pos + 4, eq - pos - 4));
    std::size_t vpos = eq + 1;
    while (vpos < src.size() && std::isspace(static_cast<unsigned char>(src[vpos]))) ++vpos;

    if (vpos < src.size() && src[vpos] == '[') {
      auto close = src.find(']', vpos);
      if (close == std::string::npos) throw MalformedFile("unterminated matrix '" + field + "'");
      Matrix m = parse_matrix_body(std::string_view(src).substr(vpos + 1, close - vpos - 1), field);
      pos = close + 1;
      while (pos < src.size() && (src[pos] == ';' || std::isspace(static_cast<unsigned char>(src[pos])))) ++pos;
      if (field == "bus") raw.bus = std::move(m);
      else if (field == "branch") raw.branch = std::move(m);
      else if (field == "gen") raw.gen = std::move(m);
      else if (field == "gencost") raw.gencost = std::move(m);
      // other matrices (areas, bus_name, ...) are ignored
      continue;
    }
    auto semi = src.find(';', vpos);
    auto eol = src.find('\n', vpos);
    auto end = std::min(semi, eol);
    std::string value = trim(std::string_view(src).substr(vpos, end == std::string::npos ? std::string::npos : end - vpos));
    pos = end == std::string::npos ? src.size() : end + 1;
    if (field == "baseMVA") {
      raw.base_mva = parse_number(value);
    } else if (field == "version") {
      if (value != "'2'" && value != "\"2\"") throw MalformedFile("unsupported case version " + value);
    }
  }
  return raw;
}

// DOM builder that reads numbers with the same precision rule as the text format.
struct ExactNumbers : nlohmann::detail::json_sax_dom_parser<ljson> {
  using json_sax_dom_parser::json_sax_dom_parser;
  bool number_float(Real, const std::string& raw) {
    return json_sax_dom_parser::number_float(parse_number(raw), raw);
  }
};

RawCase parse_json_mirror(std::string_view text) {
  ljson j;
  try {
    ExactNumbers sax(j);
    ljson::sax_parse(text, &sax);
  } catch (const nlohmann::json::exception& e) {
    throw MalformedFile(std::string("invalid JSON: ") + e.what());
  }
  RawCase raw;
  try {
    if (j.contains("name")) raw.name = j.at("name").get<std::string>();
    if (j.contains("baseMVA")) raw.base_mva = j.at("baseMVA").get<Real>();
    auto grab = [&](const char* key, std::optional<Matrix>& dst) {
      if (j.contains(key)) dst = j.at(key).get<Matrix>();
    };
    grab("bus", raw.bus);
    grab("branch", raw.branch);
    grab("gen", raw.gen);
    grab("gencost", raw.gencost);
  } catch (const nlohmann::json::exception& e) {
    throw MalformedFile(std::string("unexpected JSON layout: ") + e.what());
  }
  return raw;
}

void require_columns(const Matrix& m, int count, const char* section) {
  for (std::size_t r = 0; r < m.size(); ++r) {
    if (static_cast<int>(m[r].size()) < count) {
      throw MalformedFile(std::string("section '") + section + "' row " + std::to_string(r + 1) +
                          " has " + std::to_string(m[r].size()) + " columns, expected at least " +
                          std::to_string(count));
    }
  }
}

int as_int(Real v, const char* what) {
  if (v != std::floor(v) || std::abs(v) > 1e9) {
    throw MalformedFile(std::string(what) + " must be an integer, got " + format_real(v));
  }
  return static_cast<int>(v);
}

// Union-find connectivity over in-service branches.
bool is_connected(std::size_t n, const std::vector<Branch>& branches) {
  if (n == 0) return true;
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  std::size_t components = n;
  for (const auto& br : branches) {
    if (!br.in_service) continue;
    auto a = find(static_cast<std::size_t>(br.from));
    auto b = find(static_cast<std::size_t>(br.to));
    if (a != b) {
      parent[a] = b;
      --components;
    }
  }
  return components == 1;
}

CaseData build_case(const RawCase& raw) {
  if (!raw.base_mva) throw MalformedFile("missing section 'baseMVA'");
  if (!raw.bus) throw MalformedFile("missing section 'bus'");
  if (!raw.branch) throw MalformedFile("missing section 'branch'");
  if (!raw.gen) throw MalformedFile("missing section 'gen'");
  if (!raw.gencost) throw MalformedFile("missing section 'gencost'");
  require_columns(*raw.bus, bus_col::count, "bus");
  require_columns(*raw.branch, br_col::count, "branch");
  require_columns(*raw.gen, gen_col::count, "gen");
  require_columns(*raw.gencost, 4, "gencost");

  CaseData c;
  c.name = raw.name;
  c.base_mva = static_cast<double>(*raw.base_mva);
  if (!(c.base_mva > 0.0) || !std::isfinite(c.base_mva)) {
    throw ValidationError("base_mva > 0 violated");
  }
  const Real base = *raw.base_mva;

  std::map<int, int> index_of;
  for (const auto& row : *raw.bus) {
    Bus b;
    b.id = as_int(row[bus_col::id], "bus id");
    switch (as_int(row[bus_col::type], "bus type")) {
      case 1: b.type = BusType::pq; break;
      case 2: b.type = BusType::pv; break;
      case 3: b.type = BusType::slack; break;
      default:
        throw ValidationError("bus " + std::to_string(b.id) +
                              ": bus type must be 1 (PQ), 2 (PV) or 3 (slack)");
    }
    b.pd = to_pu(row[bus_col::pd], base);
    b.qd = to_pu(row[bus_col::qd], base);
    b.gs = to_pu(row[bus_col::gs], base);
    b.bs = to_pu(row[bus_col::bs], base);
    b.vmax = static_cast<double>(row[bus_col::vmax]);
    b.vmin = static_cast<double>(row[bus_col::vmin]);
    if (!index_of.emplace(b.id, static_cast<int>(c.buses.size())).second) {
      throw ValidationError("duplicate bus id " + std::to_string(b.id));
    }
    c.buses.push_back(b);
  }

  auto bus_ref = [&](Real v, const char* what) {
    int id = as_int(v, what);
    auto it = index_of.find(id);
    if (it == index_of.end()) {
      throw ValidationError(std::string(what) + " references missing bus " + std::to_string(id) +
                            " (every branch endpoint references an existing bus)");
    }
    return it->second;
  };

  for (const auto& row : *raw.branch) {
    Branch br;
    br.from = bus_ref(row[br_col::from], "branch from-bus");
    br.to = bus_ref(row[br_col::to], "branch to-bus");
    br.r = static_cast<double>(row[br_col::r]);
    br.x = static_cast<double>(row[br_col::x]);
    br.b_charge = static_cast<double>(row[br_col::b]);
    br.flow_limit = to_pu(row[br_col::rate_a], base);
    br.tap = row[br_col::ratio] == 0.0 ? 1.0 : static_cast<double>(row[br_col::ratio]);
    br.in_service = row[br_col::status] != 0.0;
    if (row[br_col::angle] != 0.0) {
      throw ValidationError("phase-shifting transformers are not supported (branch angle must be 0)");
    }
    c.branches.push_back(br);
  }

  if (raw.gencost->size() != raw.gen->size()) {
    throw ValidationError("gencost must have exactly one row per generator");
  }
  for (std::size_t k = 0; k < raw.gen->size(); ++k) {
    const auto& row = (*raw.gen)[k];
    const auto& cost = (*raw.gencost)[k];
    if (as_int(cost[0], "gencost model") != 2) {
      throw ValidationError("gencost model must be 2 (polynomial); piecewise-linear costs are not supported");
    }
    int n = as_int(cost[3], "gencost ncost");
    if (n < 1 || n > 3) throw ValidationError("gencost must be at most quadratic (ncost in 1..3)");
    if (static_cast<int>(cost.size()) < 4 + n) throw MalformedFile("gencost row has too few coefficients");
    if (row[gen_col::status] == 0.0) continue;
    Gen g;
    g.bus = bus_ref(row[gen_col::bus], "gen bus");
    g.pmax = to_pu(row[gen_col::pmax], base);
    g.pmin = to_pu(row[gen_col::pmin], base);
    g.qmax = to_pu(row[gen_col::qmax], base);
    g.qmin = to_pu(row[gen_col::qmin], base);
    double coeffs[3] = {0.0, 0.0, 0.0};  // a2, a1, a0
    for (int i = 0; i < n; ++i) coeffs[3 - n + i] = static_cast<double>(cost[4 + i]);
    g.cost = {coeffs[0], coeffs[1], coeffs[2]};
    c.gens.push_back(g);
  }

  validate_case(c);
  std::erase_if(c.branches, [](const Branch& b) { return !b.in_service; });
  return c;
}

}  // namespace

int CaseData::slack_bus() const {
  for (std::size_t i = 0; i < buses.size(); ++i) {
    if (buses[i].type == BusType::slack) return static_cast<int>(i);
  }
  return -1;
}

int CaseData::bus_index(int original_id) const {
  for (std::size_t i = 0; i < buses.size(); ++i) {
    if (buses[i].id == original_id) return static_cast<int>(i);
  }
  return -1;
}

double generation_cost(const Gen& g, double pg_pu, double base_mva) {
  const double p = pg_pu * base_mva;
  return (g.cost.a2 * p + g.cost.a1) * p + g.cost.a0;
}

double generation_cost(const CaseData& c, const std::vector<double>& pg_pu) {
  double total = 0.0;
  for (std::size_t k = 0; k < c.gens.size(); ++k) {
    total += generation_cost(c.gens[k], pg_pu[k], c.base_mva);
  }
  return total;
}

double generation_cost_gradient(const Gen& g, double pg_pu, double base_mva) {
  return (2.0 * g.cost.a2 * pg_pu * base_mva + g.cost.a1) * base_mva;
}

double generation_cost_curvature(const Gen& g, double base_mva) {
  return 2.0 * g.cost.a2 * base_mva * base_mva;
}

void validate_case(const CaseData& c) {
  if (c.buses.empty()) throw ValidationError("case has no buses");
  int slack_count = 0;
  for (const auto& b : c.buses) slack_count += b.type == BusType::slack;
  if (slack_count != 1) {
    throw ValidationError("exactly one slack bus required, found " + std::to_string(slack_count));
  }
  const int n = static_cast<int>(c.buses.size());
  auto finite = [](double v) { return std::isfinite(v); };
  for (const auto& b : c.buses) {
    const std::string tag = "bus " + std::to_string(b.id) + ": ";
    if (!(b.vmin < b.vmax)) throw ValidationError(tag + "vmin < vmax violated");
    if (!(b.vmin > 0.0)) throw ValidationError(tag + "vmin > 0 violated");
    if (!finite(b.pd) || !finite(b.qd) || !finite(b.gs) || !finite(b.bs) || !finite(b.vmax)) {
      throw ValidationError(tag + "non-finite value");
    }
  }
  for (std::size_t k = 0; k < c.branches.size(); ++k) {
    const auto& br = c.branches[k];
    const std::string tag = "branch " + std::to_string(k + 1) + ": ";
    if (br.from < 0 || br.from >= n || br.to < 0 || br.to >= n) {
      throw ValidationError(tag + "every branch endpoint references an existing bus violated");
    }
    if (br.from == br.to) throw ValidationError(tag + "self-loop branch");
    if (!(br.r >= 0.0)) throw ValidationError(tag + "r >= 0 violated");
    if (br.x == 0.0) throw ValidationError(tag + "x != 0 violated");
    if (!(br.tap > 0.0)) throw ValidationError(tag + "tap > 0 violated");
    if (!(br.flow_limit > 0.0)) throw ValidationError(tag + "flow_limit > 0 violated");
    if (!finite(br.x) || !finite(br.b_charge) || !finite(br.flow_limit) || !finite(br.tap)) {
      throw ValidationError(tag + "non-finite value");
    }
  }
  for (std::size_t k = 0; k < c.gens.size(); ++k) {
    const auto& g = c.gens[k];
    const std::string tag = "gen " + std::to_string(k + 1) + ": ";
    if (g.bus < 0 || g.bus >= n) throw ValidationError(tag + "generator references a missing bus");
    if (!(g.pmin <= g.pmax)) throw ValidationError(tag + "pmin <= pmax violated");
    if (!(g.qmin <= g.qmax)) throw ValidationError(tag + "qmin <= qmax violated");
    if (!finite(g.pmin) || !finite(g.pmax) || !finite(g.qmin) || !finite(g.qmax)) {
      throw ValidationError(tag + "non-finite limit");
    }
  }
  if (c.gens.empty()) throw ValidationError("case has no in-service generators");
  if (!is_connected(c.buses.size(), c.branches)) {
    throw IslandError("network restricted to in-service branches is not connected");
  }
}

CaseData parse_case(std::string_view text) {
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) continue;
    return build_case(ch == '{' ? parse_json_mirror(text) : parse_matpower(text));
  }
  throw MalformedFile("empty case file");
}

CaseData load_case(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MalformedFile("cannot open case file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_case(ss.str());
}

namespace {

struct FileRows {
  Matrix bus, branch, gen, gencost;
};

FileRows to_file_rows(const CaseData& c) {
  const double base = c.base_mva;
  FileRows f;
  for (const auto& b : c.buses) {
    int type = b.type == BusType::slack ? 3 : b.type == BusType::pv ? 2 : 1;
    f.bus.push_back({double(b.id), double(type), to_file_units(b.pd, base), to_file_units(b.qd, base),
                     to_file_units(b.gs, base), to_file_units(b.bs, base), 1, 1, 0, 0, 1, b.vmax,
                     b.vmin});
  }
  for (const auto& br : c.branches) {
    f.branch.push_back({double(c.buses[br.from].id), double(c.buses[br.to].id), br.r, br.x,
                        br.b_charge, to_file_units(br.flow_limit, base), 0, 0, br.tap, 0,
                        br.in_service ? 1.0 : 0.0, -360, 360});
  }
  for (const auto& g : c.gens) {
    f.gen.push_back({double(c.buses[g.bus].id), 0, 0, to_file_units(g.qmax, base),
                     to_file_units(g.qmin, base), 1, base, 1, to_file_units(g.pmax, base),
                     to_file_units(g.pmin, base)});
    f.gencost.push_back({2, 0, 0, 3, g.cost.a2, g.cost.a1, g.cost.a0});
  }
  return f;
}

void write_matrix(std::ostringstream& os, const char* name, const char* header, const Matrix& m) {
  os << "\n%% " << name << " data\n%\t" << header << "\nmpc." << name << " = [\n";
  for (const auto& row : m) {
    os << '\t';
    for (std::size_t i = 0; i < row.size(); ++i) {
      os << (i ? "\t" : "") << format_real(row[i]);
    }
    os << ";\n";
  }
  os << "];\n";
}

}  // namespace

std::string serialize_case(const CaseData& c) {
  const FileRows f = to_file_rows(c);
  std::ostringstream os;
  os << "function mpc = " << (c.name.empty() ? "case" : c.name) << "\n";
  os << "mpc.version = '2';\n\n";
  os << "%% system MVA base\nmpc.baseMVA = " << format_double(c.base_mva) << ";\n";
  write_matrix(os, "bus", "bus_i\ttype\tPd\tQd\tGs\tBs\tarea\tVm\tVa\tbaseKV\tzone\tVmax\tVmin", f.bus);
  write_matrix(os, "gen", "bus\tPg\tQg\tQmax\tQmin\tVg\tmBase\tstatus\tPmax\tPmin", f.gen);
  write_matrix(os, "branch",
               "fbus\ttbus\tr\tx\tb\trateA\trateB\trateC\tratio\tangle\tstatus\tangmin\tangmax",
               f.branch);
  write_matrix(os, "gencost", "2\tstartup\tshutdown\tn\tc(n-1)\t...\tc0", f.gencost);
  return os.str();
}

std::string serialize_case_json(const CaseData& c) {
  const FileRows f = to_file_rows(c);
  std::ostringstream os;
  os << "{\n \"format\": \"selmopf-case\",\n \"version\": 1,\n \"name\": " << nlohmann::json(c.name).dump()
     << ",\n \"baseMVA\": " << format_double(c.base_mva);
  auto matrix = [&](const char* key, const Matrix& m) {
    os << ",\n \"" << key << "\": [";
    for (std::size_t r = 0; r < m.size(); ++r) {
      os << (r ? ",\n  [" : "\n  [");
      for (std::size_t i = 0; i < m[r].size(); ++i) os << (i ? ", " : "") << format_real(m[r][i]);
      os << ']';
    }
    os << "\n ]";
  };
  matrix("bus", f.bus);
  matrix("gen", f.gen);
  matrix("branch", f.branch);
  matrix("gencost", f.gencost);
  os << "\n}\n";
  return os.str();
}

std::string case_hash(const CaseData& c) {
  const std::string s = serialize_case(c);
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace selmopf
