#include "qoc/io.hpp"

#include "qoc/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace qoc::io {

namespace {

[[noreturn]] void fail(const std::string& origin, const std::string& what) {
  throw Error(ErrorCode::Parse, origin + ": " + what);
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

const Json& member(const Json& j, const char* key, const std::string& origin) {
  if (!j.is_object()) fail(origin, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) fail(origin, std::string("missing key '") + key + "'");
  return *it;
}

double number(const Json& j, const std::string& origin, const std::string& key) {
  if (!j.is_number()) fail(origin, key + ": expected a number");
  return j.get<double>();
}

int integer(const Json& j, const std::string& origin, const std::string& key) {
  if (!j.is_number_integer()) fail(origin, key + ": expected an integer");
  return j.get<int>();
}

std::string text(const Json& j, const std::string& origin, const std::string& key) {
  if (!j.is_string()) fail(origin, key + ": expected a string");
  return j.get<std::string>();
}

// Bound or other value where "inf" stands for +infinity.
double extended(const Json& j, const std::string& origin, const std::string& key) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf" || s == "Infinity") return std::numeric_limits<double>::infinity();
    fail(origin, key + ": expected a number or \"inf\"");
  }
  return number(j, origin, key);
}

cdouble complex_value(const Json& j, const std::string& origin, const std::string& key) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) return {j[0].get<double>(), j[1].get<double>()};
  fail(origin, key + ": expected a number or [re, im]");
}

std::pair<int, int> edge_key(const std::string& key, const std::string& origin) {
  int a = 0, b = 0;
  char comma = 0;
  std::istringstream in(key);
  if (!(in >> a >> comma >> b) || comma != ',' || !in.eof()) fail(origin, "edge key '" + key + "' is not of the form \"j,k\"");
  return {a - 1, b - 1};
}

std::string key_of(const Edge& e) { return std::to_string(e.j + 1) + "," + std::to_string(e.k + 1); }

const char* flavor_code(ControlFlavor f) {
  switch (f) {
    case ControlFlavor::HermitianV: return "V";
    case ControlFlavor::SkewH: return "H";
    case ControlFlavor::RealU: return "U";
  }
  return "?";
}

// Entry (k, j) implied by entry (j, k) under the flavor symmetry.
cdouble mirrored(ControlFlavor f, cdouble x) {
  switch (f) {
    case ControlFlavor::HermitianV: return std::conj(x);
    case ControlFlavor::SkewH: return -std::conj(x);
    case ControlFlavor::RealU: return -x;
  }
  return x;
}

const char* symmetry_name(ControlFlavor f) {
  switch (f) {
    case ControlFlavor::HermitianV: return "hermitian-symmetry";
    case ControlFlavor::SkewH: return "skew-hermitian-symmetry";
    case ControlFlavor::RealU: return "real-antisymmetry";
  }
  return "?";
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

Table parse_csv(const std::string& content, const std::string& origin) {
  Table t;
  std::istringstream in(content);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size()) {
      fail(origin + ":" + std::to_string(lineno), "expected " + std::to_string(t.header.size()) + " columns, found " +
                                                     std::to_string(cells.size()));
    }
    std::vector<double> row;
    for (const auto& c : cells) {
      char* end = nullptr;
      const double v = std::strtod(c.c_str(), &end);
      if (c.empty() || *end != '\0') fail(origin + ":" + std::to_string(lineno), "bad number '" + c + "'");
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) fail(origin, "empty table");
  return t;
}

// Grid recovered from the node times t_0 = 0, ..., t_N = T.
TimeGrid grid_from_times(const Table& t, const std::string& origin) {
  if (t.rows.size() < 2) fail(origin, "need at least two rows");
  const int N = static_cast<int>(t.rows.size()) - 1;
  const TimeGrid g{t.rows.back()[0], N};
  for (int i = 0; i <= N; ++i) {
    if (std::abs(t.rows[i][0] - g.node(i)) > 1e-9 * std::max(1.0, g.T)) {
      fail(origin + ":" + std::to_string(i + 2), "times are not a uniform grid from 0");
    }
  }
  return g;
}

}  // namespace

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
  out << content;
  if (!out) throw Error(ErrorCode::Io, "write failed for '" + path + "'");
}

Json parse_json(const std::string& content, const std::string& origin) {
  try {
    return Json::parse(content);
  } catch (const Json::parse_error& e) {
    const std::size_t at = std::min(e.byte == 0 ? 0 : e.byte - 1, content.size());
    int line = 1, col = 1;
    for (std::size_t i = 0; i < at; ++i) {
      if (content[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string msg = e.what();
    if (const auto p = msg.find("syntax error"); p != std::string::npos) msg = msg.substr(p);
    fail(origin + ":" + std::to_string(line) + ":" + std::to_string(col), msg);
  }
}

Json read_json(const std::string& path) { return parse_json(read_text(path), path); }

void write_json(const std::string& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

Json json_argument(const std::string& arg) {
  const auto first = arg.find_first_not_of(" \t\n");
  if (first != std::string::npos && (arg[first] == '{' || arg[first] == '[')) return parse_json(arg, "<inline>");
  return read_json(arg);
}

// ---------------------------------------------------------------------------

Json to_json(const LevelSystem& sys) {
  Json j;
  j["n"] = sys.n;
  j["energies"] = std::vector<double>(sys.energies.data(), sys.energies.data() + sys.energies.size());
  Json edges = Json::array();
  for (const Edge& e : sys.edges) {
    Json x;
    x["j"] = e.j + 1;
    x["k"] = e.k + 1;
    x["mu"] = e.mu;
    if (std::isinf(e.bound)) {
      x["bound"] = "inf";
    } else {
      x["bound"] = e.bound;
    }
    edges.push_back(std::move(x));
  }
  j["edges"] = std::move(edges);
  return j;
}

LevelSystem system_from_json(const Json& j, const std::string& origin) {
  LevelSystem sys;
  sys.n = integer(member(j, "n", origin), origin, "n");
  const Json& en = member(j, "energies", origin);
  if (!en.is_array()) fail(origin, "energies: expected an array");
  sys.energies.resize(static_cast<Eigen::Index>(en.size()));
  for (std::size_t i = 0; i < en.size(); ++i) sys.energies[i] = number(en[i], origin, "energies[" + std::to_string(i) + "]");
  const Json& edges = member(j, "edges", origin);
  if (!edges.is_array()) fail(origin, "edges: expected an array");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const std::string where = origin + ": edges[" + std::to_string(i) + "]";
    Edge e;
    e.j = integer(member(edges[i], "j", where), where, "j") - 1;
    e.k = integer(member(edges[i], "k", where), where, "k") - 1;
    if (edges[i].contains("mu")) e.mu = number(edges[i]["mu"], where, "mu");
    if (edges[i].contains("bound")) e.bound = extended(edges[i]["bound"], where, "bound");
    sys.edges.push_back(e);
  }
  return sys;
}

Json to_json(const ControlGrid& c) {
  Json j;
  j["T"] = c.grid.T;
  j["N"] = c.grid.N;
  j["flavor"] = flavor_code(c.flavor);
  Json values = Json::object();
  for (int e = 0; e < c.edge_count(); ++e) {
    Json col = Json::array();
    for (int i = 0; i < c.grid.N; ++i) col.push_back({c.values(i, e).real(), c.values(i, e).imag()});
    values[key_of(c.edges[e])] = std::move(col);
  }
  j["values"] = std::move(values);
  return j;
}

ControlGrid control_from_json(const Json& j, const std::string& origin) {
  ControlGrid c;
  c.grid.T = number(member(j, "T", origin), origin, "T");
  c.grid.N = integer(member(j, "N", origin), origin, "N");
  if (!(c.grid.T > 0.0) || c.grid.N < 1) fail(origin, "grid needs T > 0 and N >= 1");
  const std::string fl = text(member(j, "flavor", origin), origin, "flavor");
  if (fl == "V") {
    c.flavor = ControlFlavor::HermitianV;
  } else if (fl == "H") {
    c.flavor = ControlFlavor::SkewH;
  } else if (fl == "U") {
    c.flavor = ControlFlavor::RealU;
  } else {
    fail(origin, "flavor: expected \"V\", \"H\" or \"U\"");
  }
  const Json& values = member(j, "values", origin);
  if (!values.is_object()) fail(origin, "values: expected an object keyed by \"j,k\"");
  struct Column {
    Edge edge;
    Eigen::VectorXcd upper;
    bool has_upper = false;
    Eigen::VectorXcd lower;
    bool has_lower = false;
  };
  std::vector<Column> cols;
  for (const auto& [key, arr] : values.items()) {
    const auto [a, b] = edge_key(key, origin);
    if (!arr.is_array() || static_cast<int>(arr.size()) != c.grid.N) {
      fail(origin, "values[\"" + key + "\"]: expected " + std::to_string(c.grid.N) + " entries");
    }
    Eigen::VectorXcd v(c.grid.N);
    for (int i = 0; i < c.grid.N; ++i) v[i] = complex_value(arr[i], origin, "values[\"" + key + "\"][" + std::to_string(i) + "]");
    if (a == b) {
      if (v.cwiseAbs().maxCoeff() != 0.0) {
        throw Error(ErrorCode::InvalidControl, origin + ": zero-diagonal: entry \"" + key + "\" is nonzero");
      }
      continue;
    }
    const Edge e = Edge{std::min(a, b), std::max(a, b)};
    auto it = std::find_if(cols.begin(), cols.end(), [&](const Column& x) { return x.edge.j == e.j && x.edge.k == e.k; });
    if (it == cols.end()) {
      cols.push_back(Column{e, {}, false, {}, false});
      it = cols.end() - 1;
    }
    if (a < b) {
      it->upper = v;
      it->has_upper = true;
    } else {
      it->lower = v;
      it->has_lower = true;
    }
  }
  c.values.resize(c.grid.N, static_cast<Eigen::Index>(cols.size()));
  for (int e = 0; e < static_cast<int>(cols.size()); ++e) {
    auto& col = cols[e];
    if (col.has_lower) {
      Eigen::VectorXcd from_lower(c.grid.N);
      for (int i = 0; i < c.grid.N; ++i) from_lower[i] = mirrored(c.flavor, col.lower[i]);
      if (col.has_upper && (from_lower - col.upper).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, col.upper.cwiseAbs().maxCoeff())) {
        throw Error(ErrorCode::InvalidControl, origin + ": " + symmetry_name(c.flavor) + ": entries \"" + key_of(col.edge) +
                                                   "\" and its mirror disagree");
      }
      if (!col.has_upper) col.upper = from_lower;
    }
    c.edges.push_back(col.edge);
    c.values.col(e) = col.upper;
  }
  if (c.flavor == ControlFlavor::RealU && c.values.size() && c.values.imag().cwiseAbs().maxCoeff() != 0.0) {
    throw Error(ErrorCode::InvalidControl, origin + ": real-antisymmetry: complex entry in a real-U control");
  }
  return c;
}

Json to_json(const CostSpec& spec) {
  Json j;
  j["kind"] = cost_name(spec.kind);
  Json w = Json::object();
  for (const auto& [key, mu] : spec.weights) w[std::to_string(key.first + 1) + "," + std::to_string(key.second + 1)] = mu;
  j["weights"] = std::move(w);
  j["final_time"] = spec.final_time == FinalTime::Fixed ? "fixed" : "free";
  return j;
}

CostSpec cost_from_json(const Json& j, const LevelSystem* sys, const std::string& origin) {
  CostSpec spec;
  try {
    spec.kind = parse_cost_kind(text(member(j, "kind", origin), origin, "kind"));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Parse) throw;
    fail(origin, std::string("kind: ") + e.what());
  }
  if (sys) spec = CostSpec::from_system(*sys, spec.kind);
  if (j.contains("weights")) {
    const Json& w = j["weights"];
    if (!w.is_object()) fail(origin, "weights: expected an object keyed by \"j,k\"");
    for (const auto& [key, mu] : w.items()) {
      const auto [a, b] = edge_key(key, origin);
      spec.weights[{std::min(a, b), std::max(a, b)}] = number(mu, origin, "weights[\"" + key + "\"]");
    }
  }
  if (j.contains("final_time")) {
    const std::string ft = text(j["final_time"], origin, "final_time");
    if (ft == "fixed") {
      spec.final_time = FinalTime::Fixed;
    } else if (ft == "free") {
      spec.final_time = FinalTime::Free;
    } else {
      fail(origin, "final_time: expected \"fixed\" or \"free\"");
    }
  }
  return spec;
}

Json to_json(const BoundarySpec& b) {
  Json j;
  switch (b.kind) {
    case BoundaryKind::Eigenstate:
      j["kind"] = "eigenstate";
      j["level"] = b.index + 1;
      break;
    case BoundaryKind::ModuliPoint:
      j["kind"] = "point";
      j["populations"] = std::vector<double>(b.moduli.data(), b.moduli.data() + b.moduli.size());
      break;
    case BoundaryKind::ModuliSet: {
      j["kind"] = "set";
      Json levels = Json::array();
      for (int l : b.levels) levels.push_back(l + 1);
      j["levels"] = std::move(levels);
      break;
    }
  }
  return j;
}

BoundarySpec boundary_from_json(const Json& j, const std::string& origin) {
  const std::string kind = text(member(j, "kind", origin), origin, "kind");
  if (kind == "eigenstate") return BoundarySpec::eigenstate(integer(member(j, "level", origin), origin, "level") - 1);
  if (kind == "point") {
    const Json& p = member(j, "populations", origin);
    if (!p.is_array()) fail(origin, "populations: expected an array");
    Eigen::VectorXd a(static_cast<Eigen::Index>(p.size()));
    for (std::size_t i = 0; i < p.size(); ++i) a[i] = number(p[i], origin, "populations[" + std::to_string(i) + "]");
    return BoundarySpec::point(a);
  }
  if (kind == "set") {
    const Json& l = member(j, "levels", origin);
    if (!l.is_array()) fail(origin, "levels: expected an array");
    std::vector<int> levels;
    for (std::size_t i = 0; i < l.size(); ++i) levels.push_back(integer(l[i], origin, "levels[" + std::to_string(i) + "]") - 1);
    return BoundarySpec::support(levels);
  }
  fail(origin, "kind: expected \"eigenstate\", \"point\" or \"set\"");
}

Json state_to_json(const Eigen::VectorXcd& psi) {
  Json j = Json::array();
  for (int i = 0; i < psi.size(); ++i) j.push_back({psi[i].real(), psi[i].imag()});
  return j;
}

Eigen::VectorXcd state_from_json(const Json& j, const std::string& origin) {
  if (!j.is_array() || j.empty()) fail(origin, "expected a non-empty array");
  Eigen::VectorXcd psi(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) psi[i] = complex_value(j[i], origin, "[" + std::to_string(i) + "]");
  return psi;
}

// ---------------------------------------------------------------------------

std::string trajectory_csv(const StateTrajectory& traj) {
  const int n = traj.levels();
  std::ostringstream out;
  out << "t";
  for (int j = 1; j <= n; ++j) out << ",re_psi" << j << ",im_psi" << j;
  for (int j = 1; j <= n; ++j) out << ",pop" << j;
  out << "\n";
  for (int i = 0; i <= traj.grid.N; ++i) {
    out << fmt(traj.grid.node(i));
    for (int j = 0; j < n; ++j) out << "," << fmt(traj.states(j, i).real()) << "," << fmt(traj.states(j, i).imag());
    for (int j = 0; j < n; ++j) out << "," << fmt(std::norm(traj.states(j, i)));
    out << "\n";
  }
  return out.str();
}

StateTrajectory trajectory_from_csv(const std::string& content, const std::string& origin) {
  const Table t = parse_csv(content, origin);
  if (t.header.size() < 4 || (t.header.size() - 1) % 3 != 0 || t.header[0] != "t") {
    fail(origin + ":1", "header is not t, re/im pairs, populations");
  }
  const int n = static_cast<int>((t.header.size() - 1) / 3);
  StateTrajectory traj;
  traj.grid = grid_from_times(t, origin);
  traj.states.resize(n, traj.grid.N + 1);
  bool real = true;
  for (int i = 0; i <= traj.grid.N; ++i) {
    for (int j = 0; j < n; ++j) {
      traj.states(j, i) = cdouble(t.rows[i][1 + 2 * j], t.rows[i][2 + 2 * j]);
      real = real && t.rows[i][2 + 2 * j] == 0.0;
    }
  }
  traj.real = real;
  return traj;
}

std::string populations_csv(const StateTrajectory& traj) {
  std::ostringstream out;
  out << "t";
  for (int j = 1; j <= traj.levels(); ++j) out << ",pop" << j;
  out << "\n";
  for (int i = 0; i <= traj.grid.N; ++i) {
    out << fmt(traj.grid.node(i));
    for (int j = 0; j < traj.levels(); ++j) out << "," << fmt(std::norm(traj.states(j, i)));
    out << "\n";
  }
  return out.str();
}

std::string lift_csv(const PMPLift& lift, const TimeGrid& grid) {
  const int n = static_cast<int>(lift.P.rows());
  std::ostringstream out;
  out << "t";
  for (int j = 1; j <= n; ++j) out << ",re_P" << j << ",im_P" << j;
  out << ",p0,H\n";
  for (int i = 0; i <= grid.N; ++i) {
    out << fmt(grid.node(i));
    for (int j = 0; j < n; ++j) out << "," << fmt(lift.P(j, i).real()) << "," << fmt(lift.P(j, i).imag());
    const int step = std::min(i, grid.N - 1);
    out << "," << fmt(lift.p0) << "," << fmt(step < lift.hamiltonian.size() ? lift.hamiltonian[step] : 0.0) << "\n";
  }
  return out.str();
}

PMPLift lift_from_csv(const std::string& content, const std::string& origin) {
  const Table t = parse_csv(content, origin);
  if (t.header.size() < 5 || (t.header.size() - 3) % 2 != 0 || t.header[0] != "t") {
    fail(origin + ":1", "header is not t, re/im pairs, p0, H");
  }
  const int n = static_cast<int>((t.header.size() - 3) / 2);
  const TimeGrid grid = grid_from_times(t, origin);
  PMPLift lift;
  lift.P.resize(n, grid.N + 1);
  lift.hamiltonian.resize(grid.N);
  lift.p0 = t.rows[0][1 + 2 * n];
  for (int i = 0; i <= grid.N; ++i) {
    for (int j = 0; j < n; ++j) lift.P(j, i) = cdouble(t.rows[i][1 + 2 * j], t.rows[i][2 + 2 * j]);
    if (i < grid.N) lift.hamiltonian[i] = t.rows[i][2 + 2 * n];
  }
  lift.normal_candidate = lift.p0 < 0.0;
  return lift;
}

// ---------------------------------------------------------------------------

Json to_json(const ResonanceVerdict& v) {
  Json j;
  j["status"] = status_name(v.status);
  Json edges = Json::array();
  for (const auto& e : v.edges) {
    Json x;
    x["edge"] = key_of(e.edge);
    x["intervals"] = e.interval_count;
    x["max_v"] = e.max_v;
    x["max_phase_drift"] = e.max_phase_drift;
    x["bad_phase_spread"] = e.bad_phase_spread;
    x["reference_phase"] = e.reference_phase;
    x["reference_free"] = e.reference_free;
    x["max_off_phase"] = e.max_off_phase;
    x["anchors"] = e.anchors;
    edges.push_back(std::move(x));
  }
  j["edges"] = std::move(edges);
  return j;
}

Json to_json(const PmpResidual& r) {
  Json j;
  j["state"] = r.state;
  j["costate"] = r.costate;
  j["maximality_gap"] = r.maximality_gap;
  j["hamiltonian_mean"] = r.hamiltonian_mean;
  j["hamiltonian_stdev"] = r.hamiltonian_stdev;
  j["hamiltonian_scale"] = r.hamiltonian_scale;
  j["hamiltonian_constancy"] = r.hamiltonian_constancy;
  j["transversality"] = r.transversality;
  j["worst"] = r.worst();
  return j;
}

Json to_json(const ExtremalReport& r) {
  Json j;
  j["epsilon"] = r.epsilon;
  j["all_not_strictly_abnormal"] = r.all_not_strictly_abnormal();
  Json ws = Json::array();
  for (const auto& w : r.windows) {
    Json x;
    const auto& p = w.partition;
    x["t1"] = p.window.t1;
    x["t2"] = p.window.t2;
    x["first_node"] = p.window.first;
    x["last_node"] = p.window.last;
    auto one_based = [](const std::vector<int>& v) {
      Json a = Json::array();
      for (int i : v) a.push_back(i + 1);
      return a;
    };
    x["I"] = one_based(p.I);
    x["J"] = one_based(p.J);
    Json classes = Json::array();
    for (const auto& cls : p.classes) classes.push_back(one_based(cls));
    x["classes"] = std::move(classes);
    x["radii"] = std::vector<double>(p.radii.data(), p.radii.data() + p.radii.size());
    x["class_norm_drift"] = p.class_norm_drift;
    x["rank"] = w.rank;
    x["dimension"] = w.dimension;
    x["vacuous"] = w.vacuous;
    x["bound_active"] = w.bound_active;
    x["verdict"] = verdict_name(w.verdict);
    x["lift_residual"] = to_json(w.lift_residual);
    x["note"] = w.note;
    ws.push_back(std::move(x));
  }
  j["windows"] = std::move(ws);
  return j;
}

}  // namespace qoc::io
