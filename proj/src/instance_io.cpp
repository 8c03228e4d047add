#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "ccp/error.hpp"
#include "ccp/model.hpp"

namespace ccp {
namespace {

using nlohmann::json;

[[noreturn]] void parse_fail(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::kParse, path + ": " + what);
}

// Numbers may also be written as "inf", "+inf", "-inf" or "infinity" so that
// unbounded data can be expressed and then rejected by validation.
double read_number(const json& j, const std::string& path) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    std::string s = j.get<std::string>();
    for (char& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    const double inf = std::numeric_limits<double>::infinity();
    if (s == "inf" || s == "+inf" || s == "infinity" || s == "+infinity") return inf;
    if (s == "-inf" || s == "-infinity") return -inf;
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  parse_fail(path, "expected a number");
}

json write_number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

VectorXd read_vector(const json& j, const std::string& path) {
  if (!j.is_array()) parse_fail(path, "expected an array");
  VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = read_number(j[i], path + "[" + std::to_string(i) + "]");
  }
  return v;
}

MatrixXd read_matrix(const json& j, const std::string& path, Eigen::Index cols) {
  if (!j.is_array()) parse_fail(path, "expected an array of rows");
  MatrixXd m(static_cast<Eigen::Index>(j.size()), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    const std::string rp = path + "[" + std::to_string(r) + "]";
    const VectorXd row = read_vector(j[r], rp);
    if (row.size() != cols) parse_fail(rp, "expected " + std::to_string(cols) + " entries");
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

json vector_json(const VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(write_number(v(i)));
  return a;
}

json matrix_json(const MatrixXd& m) {
  json a = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(vector_json(m.row(r).transpose()));
  return a;
}

const json& require(const json& j, const char* key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) parse_fail(path, std::string("missing key '") + key + "'");
  return j.at(key);
}

ProblemInstance from_json(const json& root) {
  if (!root.is_object()) parse_fail("$", "top level must be an object");
  ProblemInstance inst;
  inst.name = root.value("name", std::string("unnamed"));
  const json& dj = require(root, "d", "$");
  if (!dj.is_number_integer() || dj.get<long long>() < 1) parse_fail("d", "expected a positive integer");
  const auto d = static_cast<Eigen::Index>(dj.get<long long>());

  const json& obj = require(root, "objective", "$");
  inst.objective.c = read_vector(require(obj, "c", "objective"), "objective.c");
  inst.objective.Q = obj.contains("Q") ? read_matrix(obj.at("Q"), "objective.Q", d)
                                       : MatrixXd::Zero(d, d);
  if (inst.objective.c.size() != d) parse_fail("objective.c", "expected length d");

  const json& reg = require(root, "region", "$");
  inst.region.A = MatrixXd::Zero(0, d);
  inst.region.b = VectorXd::Zero(0);
  inst.region.E = MatrixXd::Zero(0, d);
  inst.region.e = VectorXd::Zero(0);
  if (reg.contains("ineq")) {
    const json& ineq = reg.at("ineq");
    inst.region.A = read_matrix(require(ineq, "A", "region.ineq"), "region.ineq.A", d);
    inst.region.b = read_vector(require(ineq, "b", "region.ineq"), "region.ineq.b");
  }
  if (reg.contains("eq")) {
    const json& eq = reg.at("eq");
    inst.region.E = read_matrix(require(eq, "E", "region.eq"), "region.eq.E", d);
    inst.region.e = read_vector(require(eq, "e", "region.eq"), "region.eq.e");
  }
  const json& bounds = require(reg, "bounds", "region");
  inst.region.lower = read_vector(require(bounds, "l", "region.bounds"), "region.bounds.l");
  inst.region.upper = read_vector(require(bounds, "u", "region.bounds"), "region.bounds.u");

  const json& sc = require(root, "scenarios", "$");
  const json& Sj = require(sc, "S", "scenarios");
  const json& Ij = require(sc, "I", "scenarios");
  if (!Sj.is_number_integer() || Sj.get<long long>() < 1) parse_fail("scenarios.S", "expected a positive integer");
  if (!Ij.is_number_integer() || Ij.get<long long>() < 1) parse_fail("scenarios.I", "expected a positive integer");
  inst.scenarios.S = static_cast<std::size_t>(Sj.get<long long>());
  inst.scenarios.I = static_cast<std::size_t>(Ij.get<long long>());
  const json& pieces = require(sc, "pieces", "scenarios");
  if (!pieces.is_array() || pieces.size() != inst.scenarios.S) {
    parse_fail("scenarios.pieces", "expected S rows");
  }
  for (std::size_t s = 0; s < pieces.size(); ++s) {
    const std::string sp = "scenarios.pieces[" + std::to_string(s) + "]";
    if (!pieces[s].is_array() || pieces[s].size() != inst.scenarios.I) {
      parse_fail(sp, "expected I pieces");
    }
    for (std::size_t i = 0; i < pieces[s].size(); ++i) {
      const std::string pp = sp + "[" + std::to_string(i) + "]";
      const json& pj = pieces[s][i];
      ConstraintPiece p;
      p.lin = read_vector(require(pj, "lin", pp), pp + ".lin");
      p.quad = pj.contains("quad") ? read_vector(pj.at("quad"), pp + ".quad")
                                   : VectorXd::Zero(p.lin.size());
      p.offset = pj.contains("offset") ? read_number(pj.at("offset"), pp + ".offset") : 0.0;
      inst.scenarios.pieces.push_back(std::move(p));
    }
  }

  const json& risk = require(root, "risk", "$");
  const double alpha = read_number(require(risk, "alpha", "risk"), "risk.alpha");
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::kValidation, "risk.alpha: must lie in (0, 1)");
  }
  inst.risk = RiskSpec(alpha, inst.scenarios.S);
  return inst;
}

json to_json(const ProblemInstance& inst) {
  json root = json::object();
  root["name"] = inst.name;
  root["d"] = inst.dim();
  json obj = json::object();
  if (inst.objective.Q.size() > 0 && !inst.objective.Q.isZero(0.0)) {
    obj["Q"] = matrix_json(inst.objective.Q);
  }
  obj["c"] = vector_json(inst.objective.c);
  root["objective"] = obj;
  json reg = json::object();
  if (inst.region.A.rows() > 0) {
    reg["ineq"] = {{"A", matrix_json(inst.region.A)}, {"b", vector_json(inst.region.b)}};
  }
  if (inst.region.E.rows() > 0) {
    reg["eq"] = {{"E", matrix_json(inst.region.E)}, {"e", vector_json(inst.region.e)}};
  }
  reg["bounds"] = {{"l", vector_json(inst.region.lower)}, {"u", vector_json(inst.region.upper)}};
  root["region"] = reg;
  json pieces = json::array();
  for (std::size_t s = 0; s < inst.scenarios.S; ++s) {
    json row = json::array();
    for (std::size_t i = 0; i < inst.scenarios.I; ++i) {
      const ConstraintPiece& p = inst.scenarios.piece(s, i);
      json pj = json::object();
      if (!p.is_affine()) pj["quad"] = vector_json(p.quad);
      pj["lin"] = vector_json(p.lin);
      pj["offset"] = write_number(p.offset);
      row.push_back(pj);
    }
    pieces.push_back(row);
  }
  root["scenarios"] = {{"S", inst.scenarios.S}, {"I", inst.scenarios.I}, {"pieces", pieces}};
  root["risk"] = {{"alpha", inst.risk.alpha()}};
  return root;
}

}  // namespace

ProblemInstance parse_instance(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, std::string("instance file: ") + e.what());
  }
  try {
    return from_json(root);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("instance file: ") + e.what());
  }
}

ProblemInstance load_instance(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open instance file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  ProblemInstance inst = parse_instance(buf.str());
  require_valid(inst);
  return inst;
}

std::string canonical_text(const ProblemInstance& instance) {
  // nlohmann::json objects keep keys sorted, so dump() is canonical.
  return to_json(instance).dump(2) + "\n";
}

void save_instance(const ProblemInstance& instance, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
    out << canonical_text(instance);
    if (!out) throw Error(ErrorCode::kIo, "write failed for '" + path + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw Error(ErrorCode::kIo, "cannot move '" + tmp + "' into place");
  }
}

std::string instance_hash(const ProblemInstance& instance) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : canonical_text(instance)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  return buf;
}

MatrixXd load_scenario_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open scenario file '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t,") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t", used) != std::string::npos) numeric = false;
      } catch (const std::exception&) {
        numeric = false;
      }
      if (!numeric) break;
    }
    if (!numeric) {
      if (rows.empty()) continue;  // header line
      throw Error(ErrorCode::kParse, path + ":" + std::to_string(line_no) + ": non-numeric cell");
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(ErrorCode::kParse, path + ":" + std::to_string(line_no) + ": ragged row");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorCode::kParse, path + ": no data rows");
  MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return m;
}

}  // namespace ccp
