#pragma once

#include <optional>
#include <string>
#include <vector>

#include "problem.hpp"
#include "quadratic.hpp"

namespace bilevel {

/// Lagrange multipliers of the lower level at the candidate, over lambda in R^q.
struct MultiplierPolytope {
  Polyhedron region;
  std::vector<Vector> vertices;
  std::vector<Vector> rays;  ///< extreme rays of the recession cone; empty when bounded
  bool empty() const { return vertices.empty(); }
  bool unique() const { return vertices.size() == 1 && rays.empty(); }
};

inline MultiplierPolytope multiplier_polytope(const PointEvaluation& ev) {
  MultiplierPolytope mp;
  mp.region = lower_multiplier_region(ev);
  mp.vertices = basic_feasible_points(mp.region);
  if (!mp.vertices.empty() && !is_bounded(mp.region)) mp.rays = extreme_rays(as_cone([&] {
    Polyhedron rec(mp.region.dim);
    for (std::size_t i = 0; i < mp.region.A.rows(); ++i) rec.add_ineq(mp.region.A.row(i), 0);
    for (std::size_t i = 0; i < mp.region.E.rows(); ++i) rec.add_eq(mp.region.E.row(i), 0);
    return rec;
  }()));
  return mp;
}

/// Index sets relative to a fixed lower-level multiplier (0-based).
struct IndexPartition {
  std::vector<std::size_t> zero_minus;  ///< g_i < 0, lambda_i = 0
  std::vector<std::size_t> plus_zero;   ///< g_i = 0, lambda_i > 0
  std::vector<std::size_t> zero_zero;   ///< g_i = 0, lambda_i = 0
};

inline IndexPartition index_partition(const PointEvaluation& ev, const Vector& lambda) {
  IndexPartition part;
  for (std::size_t i = 0; i < ev.q(); ++i) {
    if (!ev.is_active_g(i)) part.zero_minus.push_back(i);
    else if (lambda[i].sign() > 0) part.plus_zero.push_back(i);
    else part.zero_zero.push_back(i);
  }
  return part;
}

inline Vector y_gradient(const PointEvaluation& ev, const Vector& full) { return ev.y_part(full); }

/// Lower-level critical cone over dy: grad_y f^T dy = 0 and grad_y g_i^T dy <= 0 on the active set.
inline PolyhedralCone critical_cone(const PointEvaluation& ev) {
  PolyhedralCone C(ev.m);
  C.add_eq(ev.y_part(ev.gradf));
  for (auto i : ev.active_g) C.add_ineq(ev.y_part(ev.gradg[i]));
  return C;
}

/// The same cone written with a multiplier: equalities where lambda_i > 0.
inline PolyhedralCone critical_cone(const PointEvaluation& ev, const Vector& lambda) {
  PolyhedralCone C(ev.m);
  for (auto i : ev.active_g) {
    if (lambda[i].sign() > 0) C.add_eq(ev.y_part(ev.gradg[i]));
    else C.add_ineq(ev.y_part(ev.gradg[i]));
  }
  return C;
}

inline bool check_llicq(const PointEvaluation& ev) {
  if (ev.active_g.empty()) return true;
  Matrix M(0, ev.m);
  for (auto i : ev.active_g) M.append_row(ev.y_part(ev.gradg[i]));
  return rank(M) == ev.active_g.size();
}

inline bool check_smfc(const PointEvaluation& ev, const Vector& lambda) {
  std::size_t q = ev.q();
  PolyhedralCone C(q);
  for (std::size_t k = 0; k < ev.m; ++k) {
    Vector row(q);
    for (std::size_t i = 0; i < q; ++i) row[i] = ev.gradg[i][ev.n + k];
    C.add_eq(row);
  }
  auto part = index_partition(ev, lambda);
  for (auto i : part.zero_minus) C.add_eq(unit(q, i));
  for (auto i : part.zero_zero) C.add_ineq(unit(q, i, -1));
  return cone_is_trivial(C).trivial;
}

inline bool check_lsc(const Vector&, const IndexPartition& part) { return part.zero_zero.empty(); }

/// Hessian in y of the lower-level Lagrangian at multiplier lambda.
inline Matrix lagrangian_hessian_yy(const PointEvaluation& ev, const Vector& lambda) {
  std::vector<std::size_t> ys;
  for (std::size_t k = 0; k < ev.m; ++k) ys.push_back(ev.n + k);
  Matrix H = ev.hessf.select_rows(ys).select_cols(ys);
  for (std::size_t i = 0; i < ev.q(); ++i)
    if (!lambda[i].is_zero()) H = H + ev.hessg[i].select_rows(ys).select_cols(ys).scaled(lambda[i]);
  return H;
}

/// Full (x, y) Hessian of the lower-level Lagrangian.
inline Matrix lagrangian_hessian(const PointEvaluation& ev, const Vector& lambda) {
  Matrix H = ev.hessf;
  for (std::size_t i = 0; i < ev.q(); ++i)
    if (!lambda[i].is_zero()) H = H + ev.hessg[i].scaled(lambda[i]);
  return H;
}

inline Vector lagrangian_gradient(const PointEvaluation& ev, const Vector& lambda) {
  Vector g = ev.gradf;
  for (std::size_t i = 0; i < ev.q(); ++i)
    if (!lambda[i].is_zero()) g = g + lambda[i] * ev.gradg[i];
  return g;
}

struct LsoscVerdict {
  bool holds = false;
  bool exact = true;
  Vector witness;  ///< direction in the critical cone without positive curvature, when found
  std::string note;
};

/// LSOSC: every nonzero dy in the critical cone has positive curvature for some multiplier.
/// Exact when the Lagrangian Hessian is the same at every multiplier vertex; otherwise a
/// single vertex with strict copositivity proves it and a common nonpositive direction refutes it.
inline LsoscVerdict check_lsosc(const PointEvaluation& ev, const MultiplierPolytope& mp) {
  LsoscVerdict out;
  if (mp.empty()) {
    out.note = "multiplier set is empty";
    return out;
  }
  PolyhedralCone C = critical_cone(ev);
  if (cone_is_trivial(C)) {
    out.holds = true;
    out.note = "critical cone is trivial";
    return out;
  }
  std::vector<Matrix> hs;
  for (const auto& v : mp.vertices) hs.push_back(lagrangian_hessian_yy(ev, v));
  bool all_same = std::all_of(hs.begin(), hs.end(), [&](const Matrix& H) { return H == hs.front(); });
  std::vector<Matrix> ray_hs;
  for (const auto& r : mp.rays) {
    Matrix Hr(ev.m, ev.m);
    std::vector<std::size_t> ys;
    for (std::size_t k = 0; k < ev.m; ++k) ys.push_back(ev.n + k);
    for (std::size_t i = 0; i < ev.q(); ++i)
      if (!r[i].is_zero()) Hr = Hr + ev.hessg[i].select_rows(ys).select_cols(ys).scaled(r[i]);
    ray_hs.push_back(Hr);
  }
  auto rays_nonpositive_at = [&](const Vector& d) {
    return std::all_of(ray_hs.begin(), ray_hs.end(), [&](const Matrix& H) { return quad_form(H, d).sign() <= 0; });
  };
  bool rays_flat = std::all_of(ray_hs.begin(), ray_hs.end(), [&](const Matrix& H) { return H == Matrix(ev.m, ev.m); });
  std::vector<CopositivityVerdict> cops;
  for (const auto& H : hs) {
    cops.push_back(strictly_copositive(H, C));
    if (cops.back().strict) {
      out.holds = true;
      out.note = all_same ? "curvature positive on the critical cone" : "one multiplier vertex suffices";
      return out;
    }
    if (all_same) break;
  }
  if (all_same && rays_flat) {
    out.witness = cops.front().witness;
    out.note = "nonpositive curvature along a critical direction";
    return out;
  }
  for (const auto& c : cops) {
    bool common = !c.witness.empty();
    for (const auto& H : hs)
      if (common && quad_form(H, c.witness).sign() > 0) common = false;
    if (common && rays_nonpositive_at(c.witness)) {
      out.witness = c.witness;
      out.note = "no multiplier vertex gives positive curvature along the witness";
      return out;
    }
  }
  out.exact = false;
  out.note = "multiplier-dependent curvature; no single vertex certifies positivity";
  return out;
}

/// SOSCMS for affine x-free g: trivial multiplier cone, or trivial linearized lower feasible cone.
/// Returns nullopt when g is not of that form.
inline std::optional<bool> check_soscms_affine(const BilevelInstance& inst, const PointEvaluation& ev) {
  if (!inst.lower_constraints_affine_x_free()) return std::nullopt;
  std::size_t q = ev.q();
  PolyhedralCone lam(q);
  for (std::size_t k = 0; k < ev.m; ++k) {
    Vector row(q);
    for (std::size_t i = 0; i < q; ++i) row[i] = ev.gradg[i][ev.n + k];
    lam.add_eq(row);
  }
  for (std::size_t i = 0; i < q; ++i) {
    if (ev.is_active_g(i)) lam.add_ineq(unit(q, i, -1));
    else lam.add_eq(unit(q, i));
  }
  if (cone_is_trivial(lam)) return true;
  PolyhedralCone lin(ev.m);
  for (auto i : ev.active_g) lin.add_ineq(ev.y_part(ev.gradg[i]));
  return cone_is_trivial(lin).trivial;
}

/// Optimal value and optimal face of the lower level at x (linear classes).
struct LowerSolution {
  bool feasible = false;
  bool bounded = false;
  Scalar value;
  Polyhedron face;
  std::vector<Vector> face_vertices;
  bool face_bounded = true;
};

inline LowerSolution lower_solve(const BilevelInstance& inst, const Vector& x) {
  LowerSolution sol;
  auto prog = linear_lower_program(inst, x);
  auto r = lp_solve(prog.objective, prog.region, Sense::minimize);
  if (r.status == LpStatus::infeasible) return sol;
  sol.feasible = true;
  if (r.status == LpStatus::unbounded) return sol;
  sol.bounded = true;
  sol.value = r.value;
  sol.face = prog.region;
  sol.face.add_eq(prog.objective, r.value);
  sol.face_vertices = basic_feasible_points(sol.face);
  sol.face_bounded = is_bounded(sol.face);
  return sol;
}

/// The QP minimize d^T H d over dy for fixed dx, with d = (dx, dy), H the Lagrangian Hessian
/// and constraints grad g_i^T d = 0 (lambda_i > 0), <= 0 (active, lambda_i = 0).
inline QpOutcome stable_direction_qp(const PointEvaluation& ev, const Vector& lambda, const Vector& dx) {
  if (dx.size() != ev.n) throw DimensionError("direction has wrong dimension");
  Matrix H = lagrangian_hessian(ev, lambda);
  std::vector<std::size_t> xs, ys;
  for (std::size_t k = 0; k < ev.n; ++k) xs.push_back(k);
  for (std::size_t k = 0; k < ev.m; ++k) ys.push_back(ev.n + k);
  Matrix Hyy = H.select_rows(ys).select_cols(ys);
  Matrix Hyx = H.select_rows(ys).select_cols(xs);
  Matrix Hxx = H.select_rows(xs).select_cols(xs);
  Vector lin = Scalar(2) * (Hyx * dx);
  Polyhedron P(ev.m);
  for (auto i : ev.active_g) {
    Vector gy = ev.y_part(ev.gradg[i]);
    Scalar rhs = -dot(ev.x_part(ev.gradg[i]), dx);
    if (lambda[i].sign() > 0) P.add_eq(gy, rhs);
    else P.add_ineq(gy, rhs);
  }
  auto r = minimize_quadratic(Hyy, lin, P);
  if (r.status == QpStatus::optimal) r.value += quad_form(Hxx, dx);
  return r;
}

class UnboundedQpError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Directional derivative s'(x; dx) of the locally unique lower-level solution.
inline Vector solution_map_dirderiv(const PointEvaluation& ev, const Vector& lambda, const Vector& dx) {
  auto r = stable_direction_qp(ev, lambda, dx);
  if (r.status != QpStatus::optimal)
    throw UnboundedQpError(std::string("solution_map_dirderiv: QP is ") + to_string(r.status));
  return r.point;
}

}  // namespace bilevel
