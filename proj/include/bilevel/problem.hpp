#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "polyhedral.hpp"
#include "polynomial.hpp"

namespace bilevel {

enum class InstanceClass { fully_linear, linear_obj_param, unique_stable, vf_oracle };

inline const char* to_string(InstanceClass c) {
  switch (c) {
    case InstanceClass::fully_linear: return "fully-linear";
    case InstanceClass::linear_obj_param: return "linear-obj-param";
    case InstanceClass::unique_stable: return "unique-stable";
    case InstanceClass::vf_oracle: return "vf-oracle";
  }
  return "?";
}

inline std::optional<InstanceClass> parse_instance_class(const std::string& s) {
  if (s == "fully-linear") return InstanceClass::fully_linear;
  if (s == "linear-obj-param") return InstanceClass::linear_obj_param;
  if (s == "unique-stable") return InstanceClass::unique_stable;
  if (s == "vf-oracle") return InstanceClass::vf_oracle;
  return std::nullopt;
}

/// fully-linear:      min_y { c^T y | A x + B y <= b },  A: q x n, B: q x m
/// linear-obj-param:  min_y { (A x + c)^T y | B y <= b }, A: m x n, B: q x m
struct LinearLowerLevel {
  Matrix A;
  Matrix B;
  Vector b;
  Vector c;
};

/// One row of a user-supplied value-function table: on the cone {dx | cone.A dx <= 0, cone.E dx = 0}
/// phi'(x; dx) = phi1^T dx and phi''(x; dx, wx) = phi2_lin^T wx + dx^T phi2_quad dx.
struct OraclePiece {
  PolyhedralCone cone;
  Vector phi1;
  Vector phi2_lin;
  Matrix phi2_quad;
};

struct OracleTable {
  std::optional<Scalar> phi_value;
  std::vector<OraclePiece> pieces;
};

/// Class-tagged optimistic bilevel instance. All smooth data are polynomials over (x, y).
struct BilevelInstance {
  std::string name;
  InstanceClass cls = InstanceClass::vf_oracle;
  std::size_t n = 0;
  std::size_t m = 0;
  Polynomial F;
  std::vector<Polynomial> G;
  Polynomial f;
  std::vector<Polynomial> g;
  std::optional<LinearLowerLevel> linear;
  std::optional<OracleTable> oracle;
  std::map<std::string, bool> assertions;

  std::size_t p() const { return G.size(); }
  std::size_t q() const { return g.size(); }
  std::size_t nvars() const { return n + m; }

  std::optional<bool> asserted(const std::string& key) const {
    auto it = assertions.find(key);
    if (it == assertions.end()) return std::nullopt;
    return it->second;
  }

  /// Rebuilds f and g from the linear data of the two linear classes.
  void derive_lower_polynomials() {
    if (!linear) return;
    const auto& L = *linear;
    std::size_t N = n + m;
    f = Polynomial(N);
    g.clear();
    if (cls == InstanceClass::fully_linear) {
      for (std::size_t k = 0; k < m; ++k) f.add_term(L.c[k], exps(N, n + k));
      for (std::size_t i = 0; i < L.B.rows(); ++i) {
        Polynomial gi = Polynomial::constant(N, -L.b[i]);
        for (std::size_t j = 0; j < n; ++j) gi.add_term(L.A(i, j), exps(N, j));
        for (std::size_t k = 0; k < m; ++k) gi.add_term(L.B(i, k), exps(N, n + k));
        g.push_back(gi);
      }
    } else if (cls == InstanceClass::linear_obj_param) {
      for (std::size_t k = 0; k < m; ++k) {
        f.add_term(L.c[k], exps(N, n + k));
        for (std::size_t j = 0; j < n; ++j) f.add_term(L.A(k, j), exps(N, j, n + k));
      }
      for (std::size_t i = 0; i < L.B.rows(); ++i) {
        Polynomial gi = Polynomial::constant(N, -L.b[i]);
        for (std::size_t k = 0; k < m; ++k) gi.add_term(L.B(i, k), exps(N, n + k));
        g.push_back(gi);
      }
    }
  }

  void validate() const {
    auto need = [&](const Polynomial& p, const std::string& what) {
      if (p.nvars() != n + m) throw DimensionError(what + " is not a polynomial over n+m variables");
    };
    need(F, "F");
    for (const auto& Gi : G) need(Gi, "G_i");
    need(f, "f");
    for (const auto& gi : g) need(gi, "g_i");
    if (linear) {
      const auto& L = *linear;
      if (cls == InstanceClass::fully_linear) {
        if (L.A.cols() != n || L.B.cols() != m || L.A.rows() != L.B.rows() || L.b.size() != L.B.rows() ||
            L.c.size() != m)
          throw DimensionError("fully-linear lower level: inconsistent A, B, b, c dimensions");
      } else {
        if (L.A.rows() != m || L.A.cols() != n || L.B.cols() != m || L.b.size() != L.B.rows() ||
            L.c.size() != m)
          throw DimensionError("linear-obj-param lower level: inconsistent A, B, b, c dimensions");
      }
    }
    if (oracle)
      for (const auto& pc : oracle->pieces)
        if (pc.cone.dim != n || pc.phi1.size() != n || pc.phi2_lin.size() != n || pc.phi2_quad.rows() != n)
          throw DimensionError("oracle piece has wrong dimension");
  }

  /// True when every g_i is affine in y and does not depend on x.
  bool lower_constraints_affine_x_free() const {
    for (const auto& gi : g) {
      if (gi.degree() > 1) return false;
      if (gi.degree_in(0, n) > 0) return false;
    }
    return true;
  }

 private:
  static Polynomial::Exponents exps(std::size_t N, std::size_t k) {
    Polynomial::Exponents e(N, 0);
    e[k] = 1;
    return e;
  }
  static Polynomial::Exponents exps(std::size_t N, std::size_t k1, std::size_t k2) {
    Polynomial::Exponents e(N, 0);
    e[k1] += 1;
    e[k2] += 1;
    return e;
  }
};

struct CandidatePoint {
  Vector x;
  Vector y;
  Vector z() const { return concat(x, y); }
};

/// Values, derivatives and active sets of all problem functions at the candidate.
struct PointEvaluation {
  std::size_t n = 0, m = 0;
  CandidatePoint point;
  Scalar F;
  Vector G;
  Scalar f;
  Vector g;
  Vector gradF;
  std::vector<Vector> gradG;
  Vector gradf;
  std::vector<Vector> gradg;
  Matrix hessF;
  std::vector<Matrix> hessG;
  Matrix hessf;
  std::vector<Matrix> hessg;
  std::vector<std::size_t> active_G;  ///< 0-based
  std::vector<std::size_t> active_g;  ///< 0-based

  std::size_t p() const { return G.size(); }
  std::size_t q() const { return g.size(); }
  std::size_t dim() const { return n + m; }

  Vector x_part(const Vector& v) const { return Vector(v.begin(), v.begin() + static_cast<long>(n)); }
  Vector y_part(const Vector& v) const { return Vector(v.begin() + static_cast<long>(n), v.end()); }
  bool is_active_g(std::size_t i) const {
    return std::find(active_g.begin(), active_g.end(), i) != active_g.end();
  }
  bool is_active_G(std::size_t i) const {
    return std::find(active_G.begin(), active_G.end(), i) != active_G.end();
  }
};

inline PointEvaluation evaluate(const BilevelInstance& inst, const CandidatePoint& pt) {
  if (pt.x.size() != inst.n || pt.y.size() != inst.m)
    throw DimensionError("candidate point dimensions do not match the instance");
  inst.validate();
  PointEvaluation ev;
  ev.n = inst.n;
  ev.m = inst.m;
  ev.point = pt;
  Vector z = pt.z();
  ev.F = inst.F(z);
  ev.gradF = inst.F.gradient(z);
  ev.hessF = inst.F.hessian(z);
  for (std::size_t i = 0; i < inst.p(); ++i) {
    ev.G.push_back(inst.G[i](z));
    ev.gradG.push_back(inst.G[i].gradient(z));
    ev.hessG.push_back(inst.G[i].hessian(z));
    if (ev.G.back().is_zero()) ev.active_G.push_back(i);
  }
  ev.f = inst.f(z);
  ev.gradf = inst.f.gradient(z);
  ev.hessf = inst.f.hessian(z);
  for (std::size_t i = 0; i < inst.q(); ++i) {
    ev.g.push_back(inst.g[i](z));
    ev.gradg.push_back(inst.g[i].gradient(z));
    ev.hessg.push_back(inst.g[i].hessian(z));
    if (ev.g.back().is_zero()) ev.active_g.push_back(i);
  }
  return ev;
}

/// The lower-level LP at parameter x for the two linear classes.
struct LinearLowerProgram {
  Vector objective;
  Polyhedron region;
};

inline LinearLowerProgram linear_lower_program(const BilevelInstance& inst, const Vector& x) {
  if (!inst.linear) throw std::logic_error("instance has no linear lower-level data");
  const auto& L = *inst.linear;
  LinearLowerProgram prog{Vector{}, Polyhedron(inst.m)};
  if (inst.cls == InstanceClass::fully_linear) {
    prog.objective = L.c;
    Vector rhs = L.b - L.A * x;
    for (std::size_t i = 0; i < L.B.rows(); ++i) prog.region.add_ineq(L.B.row(i), rhs[i]);
  } else {
    prog.objective = L.A * x + L.c;
    for (std::size_t i = 0; i < L.B.rows(); ++i) prog.region.add_ineq(L.B.row(i), L.b[i]);
  }
  return prog;
}

/// Lower-level KKT multiplier set {lambda >= 0 | grad_y f + grad_y g^T lambda = 0, lambda_i = 0 off the active set}.
inline Polyhedron lower_multiplier_region(const PointEvaluation& ev) {
  std::size_t q = ev.q();
  Polyhedron P(q);
  for (std::size_t k = 0; k < ev.m; ++k) {
    Vector row(q);
    for (std::size_t i = 0; i < q; ++i) row[i] = ev.gradg[i][ev.n + k];
    P.add_eq(row, -ev.gradf[ev.n + k]);
  }
  for (std::size_t i = 0; i < q; ++i) {
    if (ev.is_active_g(i)) P.add_ineq(unit(q, i, -1), 0);
    else P.add_eq(unit(q, i), 0);
  }
  return P;
}

struct FeasibilityVerdict {
  bool feasible = false;
  std::string reason;
  bool exact = true;  ///< false when lower-level optimality rests on an asserted hypothesis
};

inline FeasibilityVerdict check_feasible(const BilevelInstance& inst, const CandidatePoint& pt) {
  PointEvaluation ev = evaluate(inst, pt);
  for (std::size_t i = 0; i < ev.p(); ++i)
    if (ev.G[i].sign() > 0) return {false, "upper-level constraint G" + std::to_string(i + 1) + " violated", true};
  for (std::size_t i = 0; i < ev.q(); ++i)
    if (ev.g[i].sign() > 0) return {false, "lower-level constraint g" + std::to_string(i + 1) + " violated", true};
  switch (inst.cls) {
    case InstanceClass::fully_linear:
    case InstanceClass::linear_obj_param: {
      auto prog = linear_lower_program(inst, pt.x);
      auto r = lp_solve(prog.objective, prog.region, Sense::minimize);
      if (r.status != LpStatus::optimal) return {false, "lower-level problem is unbounded", true};
      Scalar val = dot(prog.objective, pt.y);
      if (val != r.value)
        return {false, "y is not lower-level optimal: objective " + val.str() + " > phi(x) = " + r.value.str(), true};
      return {true, "y solves the lower-level LP exactly (phi(x) = " + r.value.str() + ")", true};
    }
    case InstanceClass::unique_stable:
    case InstanceClass::vf_oracle: {
      if (inst.cls == InstanceClass::vf_oracle && inst.oracle && inst.oracle->phi_value) {
        if (ev.f != *inst.oracle->phi_value)
          return {false, "f(x,y) differs from the tabulated optimal value", true};
        return {true, "f(x,y) equals the tabulated optimal value", false};
      }
      if (!is_feasible(lower_multiplier_region(ev)))
        return {false, "lower-level KKT conditions fail at y", true};
      return {true, "lower-level KKT conditions hold at y; optimality follows from the asserted convexity in y",
              false};
    }
  }
  return {false, "unknown class", true};
}

}  // namespace bilevel
