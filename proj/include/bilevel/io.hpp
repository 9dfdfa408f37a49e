#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "problem.hpp"

namespace bilevel {

/// Schema violation located by a JSON pointer into the instance document.
class InputError : public std::runtime_error {
 public:
  InputError(std::string pointer, const std::string& message)
      : std::runtime_error(pointer.empty() ? message : pointer + ": " + message), pointer_(std::move(pointer)) {}
  const std::string& pointer() const { return pointer_; }

 private:
  std::string pointer_;
};

inline constexpr const char* kInstanceSchema = "bilevel-instance/1";

struct InstanceFile {
  BilevelInstance instance;
  CandidatePoint candidate;
  std::vector<std::string> variable_names;
};

namespace io_detail {

using json = nlohmann::json;

inline std::string at(const std::string& ptr, const std::string& key) { return ptr + "/" + key; }
inline std::string at(const std::string& ptr, std::size_t idx) { return ptr + "/" + std::to_string(idx); }

inline const json& field(const json& obj, const std::string& ptr, const std::string& key) {
  if (!obj.is_object()) throw InputError(ptr, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw InputError(at(ptr, key), "missing required field");
  return *it;
}

inline Scalar scalar(const json& v, const std::string& ptr) {
  try {
    if (v.is_number_integer()) return Scalar(v.get<long long>());
    if (v.is_string()) return Scalar::parse(v.get<std::string>());
  } catch (const std::exception& e) {
    throw InputError(ptr, e.what());
  }
  throw InputError(ptr, "expected a rational as an integer or a \"num/den\" string");
}

inline std::size_t count(const json& v, const std::string& ptr) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
    throw InputError(ptr, "expected a nonnegative integer");
  return v.get<std::size_t>();
}

inline Vector vector(const json& v, const std::string& ptr, std::optional<std::size_t> len = std::nullopt) {
  if (!v.is_array()) throw InputError(ptr, "expected an array");
  if (len && v.size() != *len)
    throw InputError(ptr, "expected " + std::to_string(*len) + " entries, found " + std::to_string(v.size()));
  Vector out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(scalar(v[i], at(ptr, i)));
  return out;
}

inline Matrix matrix(const json& v, const std::string& ptr, std::size_t rows, std::size_t cols) {
  if (!v.is_array()) throw InputError(ptr, "expected an array of rows");
  if (v.size() != rows)
    throw InputError(ptr, "expected " + std::to_string(rows) + " rows, found " + std::to_string(v.size()));
  Matrix M(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    Vector r = vector(v[i], at(ptr, i), cols);
    for (std::size_t j = 0; j < cols; ++j) M(i, j) = r[j];
  }
  return M;
}

/// Polynomials are lists of monomials [coefficient, [exponents...]].
inline Polynomial polynomial(const json& v, const std::string& ptr, std::size_t nvars) {
  if (!v.is_array()) throw InputError(ptr, "expected a list of monomials");
  Polynomial p(nvars);
  for (std::size_t k = 0; k < v.size(); ++k) {
    std::string mp = at(ptr, k);
    const json& mono = v[k];
    if (!mono.is_array() || mono.size() != 2) throw InputError(mp, "monomial must be [coefficient, exponents]");
    Scalar c = scalar(mono[0], at(mp, 0));
    const json& e = mono[1];
    if (!e.is_array() || e.size() != nvars)
      throw InputError(at(mp, 1), "exponent vector must have n+m = " + std::to_string(nvars) + " entries");
    Polynomial::Exponents ex;
    for (std::size_t j = 0; j < nvars; ++j) ex.push_back(static_cast<unsigned>(count(e[j], at(at(mp, 1), j))));
    p.add_term(c, ex);
  }
  return p;
}

inline std::vector<Polynomial> polynomials(const json& v, const std::string& ptr, std::size_t nvars,
                                           std::size_t expected) {
  if (!v.is_array()) throw InputError(ptr, "expected an array of polynomials");
  if (v.size() != expected)
    throw InputError(ptr, "expected " + std::to_string(expected) + " polynomials, found " + std::to_string(v.size()));
  std::vector<Polynomial> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(polynomial(v[i], at(ptr, i), nvars));
  return out;
}

inline PolyhedralCone cone(const json& v, const std::string& ptr, std::size_t dim) {
  PolyhedralCone C(dim);
  if (!v.is_object()) throw InputError(ptr, "expected {\"ineq\": [...], \"eq\": [...]}");
  if (v.contains("ineq")) {
    const json& rows = v["ineq"];
    if (!rows.is_array()) throw InputError(at(ptr, "ineq"), "expected an array of rows");
    for (std::size_t i = 0; i < rows.size(); ++i) C.add_ineq(vector(rows[i], at(at(ptr, "ineq"), i), dim));
  }
  if (v.contains("eq")) {
    const json& rows = v["eq"];
    if (!rows.is_array()) throw InputError(at(ptr, "eq"), "expected an array of rows");
    for (std::size_t i = 0; i < rows.size(); ++i) C.add_eq(vector(rows[i], at(at(ptr, "eq"), i), dim));
  }
  return C;
}

}  // namespace io_detail

inline InstanceFile parse_instance(const nlohmann::json& doc) {
  using namespace io_detail;
  InstanceFile out;
  BilevelInstance& inst = out.instance;
  if (!doc.is_object()) throw InputError("", "instance document must be a JSON object");
  if (doc.contains("schema") && doc["schema"] != kInstanceSchema)
    throw InputError("/schema", std::string("unsupported schema, expected ") + kInstanceSchema);
  if (doc.contains("name")) {
    if (!doc["name"].is_string()) throw InputError("/name", "expected a string");
    inst.name = doc["name"].get<std::string>();
  }
  const json& cls = field(doc, "", "class");
  if (!cls.is_string()) throw InputError("/class", "expected a string");
  auto parsed = parse_instance_class(cls.get<std::string>());
  if (!parsed)
    throw InputError("/class", "unknown class '" + cls.get<std::string>() +
                                   "' (fully-linear, linear-obj-param, unique-stable, vf-oracle)");
  inst.cls = *parsed;
  inst.n = count(field(doc, "", "n"), "/n");
  inst.m = count(field(doc, "", "m"), "/m");
  if (inst.n == 0 || inst.m == 0) throw InputError("/n", "n and m must be positive");
  std::size_t N = inst.n + inst.m;
  std::size_t p = doc.contains("p") ? count(doc["p"], "/p") : 0;
  inst.F = polynomial(field(doc, "", "F"), "/F", N);
  inst.G = doc.contains("G") ? polynomials(doc["G"], "/G", N, p) : std::vector<Polynomial>{};
  if (!doc.contains("G") && p != 0) throw InputError("/G", "missing although p > 0");

  const json& lower = field(doc, "", "lower");
  if (!lower.is_object()) throw InputError("/lower", "expected an object");
  std::size_t q = count(field(doc, "", "q"), "/q");
  if (inst.cls == InstanceClass::fully_linear || inst.cls == InstanceClass::linear_obj_param) {
    LinearLowerLevel L;
    bool fl = inst.cls == InstanceClass::fully_linear;
    L.A = matrix(field(lower, "/lower", "A"), "/lower/A", fl ? q : inst.m, inst.n);
    L.B = matrix(field(lower, "/lower", "B"), "/lower/B", q, inst.m);
    L.b = vector(field(lower, "/lower", "b"), "/lower/b", q);
    L.c = vector(field(lower, "/lower", "c"), "/lower/c", inst.m);
    inst.linear = L;
    inst.derive_lower_polynomials();
  } else {
    inst.f = polynomial(field(lower, "/lower", "f"), "/lower/f", N);
    inst.g = polynomials(field(lower, "/lower", "g"), "/lower/g", N, q);
    if (lower.contains("oracle")) {
      const json& o = lower["oracle"];
      OracleTable table;
      if (o.contains("phi")) table.phi_value = scalar(o["phi"], "/lower/oracle/phi");
      const json& pieces = field(o, "/lower/oracle", "pieces");
      if (!pieces.is_array()) throw InputError("/lower/oracle/pieces", "expected an array");
      for (std::size_t k = 0; k < pieces.size(); ++k) {
        std::string pp = at("/lower/oracle/pieces", k);
        OraclePiece pc;
        pc.cone = cone(field(pieces[k], pp, "cone"), at(pp, "cone"), inst.n);
        pc.phi1 = vector(field(pieces[k], pp, "phi1"), at(pp, "phi1"), inst.n);
        pc.phi2_lin = pieces[k].contains("phi2_lin") ? vector(pieces[k]["phi2_lin"], at(pp, "phi2_lin"), inst.n)
                                                     : zeros(inst.n);
        pc.phi2_quad = pieces[k].contains("phi2_quad")
                           ? matrix(pieces[k]["phi2_quad"], at(pp, "phi2_quad"), inst.n, inst.n)
                           : Matrix(inst.n, inst.n);
        table.pieces.push_back(pc);
      }
      inst.oracle = table;
    }
  }
  if (doc.contains("assertions")) {
    const json& a = doc["assertions"];
    if (!a.is_object()) throw InputError("/assertions", "expected an object of booleans");
    for (auto it = a.begin(); it != a.end(); ++it) {
      if (!it->is_boolean()) throw InputError(at("/assertions", it.key()), "expected a boolean");
      inst.assertions[it.key()] = it->get<bool>();
    }
  }
  const json& cand = field(doc, "", "candidate");
  out.candidate.x = vector(field(cand, "/candidate", "x"), "/candidate/x", inst.n);
  out.candidate.y = vector(field(cand, "/candidate", "y"), "/candidate/y", inst.m);
  if (doc.contains("variables")) {
    const json& v = doc["variables"];
    if (!v.is_array() || v.size() != N) throw InputError("/variables", "expected n+m names");
    for (std::size_t i = 0; i < N; ++i) {
      if (!v[i].is_string()) throw InputError(at("/variables", i), "expected a string");
      out.variable_names.push_back(v[i].get<std::string>());
    }
  } else {
    for (std::size_t i = 0; i < inst.n; ++i) out.variable_names.push_back("x" + std::to_string(i + 1));
    for (std::size_t i = 0; i < inst.m; ++i) out.variable_names.push_back("y" + std::to_string(i + 1));
  }
  try {
    inst.validate();
  } catch (const DimensionError& e) {
    throw InputError("", e.what());
  }
  return out;
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("", "cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError("", std::string("malformed JSON: ") + e.what());
  }
}

inline InstanceFile load_instance(const std::string& path) { return parse_instance(read_json_file(path)); }

/// 64-bit FNV-1a over the given bytes, rendered as 16 hex digits.
inline std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

inline nlohmann::ordered_json to_json(const Vector& v) {
  auto a = nlohmann::ordered_json::array();
  for (const auto& s : v) a.push_back(s.str());
  return a;
}

inline nlohmann::ordered_json to_json(const Matrix& M) {
  auto a = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < M.rows(); ++i) a.push_back(to_json(M.row(i)));
  return a;
}

inline nlohmann::ordered_json to_json(const PolyhedralCone& C) {
  return {{"ineq", to_json(C.A)}, {"eq", to_json(C.E)}};
}

inline nlohmann::ordered_json to_json(const Polyhedron& P) {
  return {{"A", to_json(P.A)}, {"b", to_json(P.b)}, {"E", to_json(P.E)}, {"e", to_json(P.e)}};
}

}  // namespace bilevel
