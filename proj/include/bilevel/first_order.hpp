#pragma once

#include <string>
#include <vector>

#include "certificate.hpp"
#include "value_function.hpp"

namespace bilevel {

namespace fo_detail {

/// Embeds a (n+m)-vector into the first n+m coordinates of a row of length `width`.
inline Vector embed(const Vector& d_row, std::size_t width, std::size_t offset = 0) {
  Vector r = zeros(width);
  for (std::size_t k = 0; k < d_row.size(); ++k) r[offset + k] = d_row[k];
  return r;
}

inline std::vector<std::size_t> iota(std::size_t count, std::size_t from = 0) {
  std::vector<std::size_t> out(count);
  for (std::size_t k = 0; k < count; ++k) out[k] = from + k;
  return out;
}

/// Rows shared by the first-order systems: grad F^T d <= 0 and grad G_i^T d <= 0 on the active set.
inline Polyhedron upper_rows(const PointEvaluation& ev, std::size_t width) {
  Polyhedron P(width);
  P.add_ineq(embed(ev.gradF, width), 0);
  for (auto i : ev.active_G) P.add_ineq(embed(ev.gradG[i], width), 0);
  return P;
}

inline void add_lower_rows(Polyhedron& P, const PointEvaluation& ev) {
  for (auto i : ev.active_g) P.add_ineq(embed(ev.gradg[i], P.dim), 0);
}

/// grad f^T d - a^T dx as a row over d.
inline Vector vf_row(const PointEvaluation& ev, const Vector& a) {
  Vector r = ev.gradf;
  for (std::size_t k = 0; k < ev.n; ++k) r[k] -= a[k];
  return r;
}

/// MFCQ of the lower level at y for the active rows `grads` (y-blocks): some dy with all rows < 0.
inline bool mfcq(const std::vector<Vector>& grads, std::size_t m) {
  if (grads.empty()) return true;
  Polyhedron P(m);
  for (const auto& g : grads) P.add_ineq(g, -1);
  return is_feasible(P);
}

/// The phi'-row pieces of system (3.2) for the available model forms.
inline std::vector<std::pair<std::string, Polyhedron>> expand_vf_row(const Polyhedron& base,
                                                                     const PointEvaluation& ev,
                                                                     const ValueFunctionModel& model) {
  std::vector<std::pair<std::string, Polyhedron>> out;
  std::size_t w = base.dim;
  switch (model.form) {
    case VfForm::max_form:
      for (std::size_t k = 0; k < model.generators.size(); ++k) {
        Polyhedron P = base;
        P.add_ineq(embed(vf_row(ev, model.generators[k]), w), 0);
        out.emplace_back("generator " + std::to_string(k + 1), P);
      }
      break;
    case VfForm::min_form:
    case VfForm::smooth: {
      Polyhedron P = base;
      for (const auto& a : model.generators) P.add_ineq(embed(vf_row(ev, a), w), 0);
      out.emplace_back(model.form == VfForm::smooth ? "smooth" : "all generators", P);
      break;
    }
    case VfForm::oracle:
      for (std::size_t k = 0; k < model.pieces.size(); ++k) {
        const auto& pc = model.pieces[k];
        Polyhedron P = base;
        for (std::size_t i = 0; i < pc.cone.A.rows(); ++i) P.add_ineq(embed(pc.cone.A.row(i), w), 0);
        for (std::size_t i = 0; i < pc.cone.E.rows(); ++i) P.add_eq(embed(pc.cone.E.row(i), w), 0);
        P.add_ineq(embed(vf_row(ev, pc.phi1), w), 0);
        out.emplace_back("oracle piece " + std::to_string(k + 1), P);
      }
      break;
  }
  return out;
}

inline std::vector<std::size_t> y_indices(const PointEvaluation& ev) { return iota(ev.m, ev.n); }
inline std::vector<std::size_t> x_indices(const PointEvaluation& ev) { return iota(ev.n); }

/// Local boundedness of K at x and LMFCQ on S(x): decided where the class allows.
inline void record_value_function_hypotheses(Certificate& cert, const BilevelInstance& inst,
                                             const PointEvaluation& ev) {
  std::optional<bool> bounded, lmfcq;
  std::string bnote, lnote;
  switch (inst.cls) {
    case InstanceClass::linear_obj_param:
      bounded = true;
      bnote = "K is independent of x and compact";
      break;
    case InstanceClass::fully_linear: {
      PolyhedralCone rec(inst.m);
      for (std::size_t i = 0; i < inst.linear->B.rows(); ++i) rec.add_ineq(inst.linear->B.row(i));
      if (cone_is_trivial(rec)) {
        bounded = true;
        bnote = "{y | B y <= 0} = {0}, so K(x) is bounded for every x";
      }
      break;
    }
    default: break;
  }
  record_assumption(cert, inst, "K locally bounded at x", bounded, "K_locally_bounded", bnote);

  if (inst.linear) {
    auto sol = lower_solve(inst, ev.point.x);
    if (sol.bounded && sol.face_bounded) {
      auto prog = linear_lower_program(inst, ev.point.x);
      bool all = true;
      for (const auto& y : sol.face_vertices) {
        std::vector<Vector> act;
        Vector By = prog.region.A * y;
        for (std::size_t i = 0; i < By.size(); ++i)
          if (By[i] == prog.region.b[i]) act.push_back(prog.region.A.row(i));
        all = all && mfcq(act, inst.m);
      }
      lmfcq = all;
      lnote = "checked at the " + std::to_string(sol.face_vertices.size()) + " vertices of the optimal face";
    }
  } else {
    std::vector<Vector> act;
    for (auto i : ev.active_g) act.push_back(ev.y_part(ev.gradg[i]));
    bool here = mfcq(act, inst.m);
    if (inst.cls == InstanceClass::unique_stable) {
      lmfcq = here;
      lnote = "S(x) is the single point y";
    } else if (!here) {
      lmfcq = false;
      lnote = "MFCQ fails at the candidate y, which lies in S(x)";
    }
  }
  record_assumption(cert, inst, "LMFCQ on S(x)", lmfcq, "lmfcq_on_solution_set", lnote);
}

}  // namespace fo_detail

/// System (3.2) with phi' in place of the upper Dini derivative.
inline Certificate certify_vf_primal(const BilevelInstance& inst, const PointEvaluation& ev,
                                     const ValueFunctionModel& model) {
  using namespace fo_detail;
  if (!model.available) return inapplicable("fo-vf", "value-function model unavailable: " + model.reason);
  Certificate cert;
  cert.condition = "fo-vf";
  cert.route = "value-function primal system";
  cert.variables = direction_names(ev.n, ev.m);
  record_value_function_hypotheses(cert, inst, ev);
  cert.assumptions.push_back({"upper Dini derivative of phi equals phi'", AssumptionStatus::verified,
                              std::string("phi is directionally differentiable (") + to_string(model.form) + ")"});
  if (!hypotheses_usable(cert)) return cert;
  Polyhedron base = upper_rows(ev, ev.dim());
  add_lower_rows(base, ev);
  decide_by_triviality(cert, expand_vf_row(base, ev, model), iota(ev.dim()));
  cert.details["phi_form"] = to_string(model.form);
  return cert;
}

/// The corollary estimates of phi' for y-convex and jointly convex lower levels.
inline Certificate certify_vf_corollaries(const BilevelInstance& inst, const PointEvaluation& ev) {
  using namespace fo_detail;
  Certificate cert;
  cert.condition = "fo-vf-corollary";
  cert.variables = direction_names(ev.n, ev.m);
  std::size_t w = ev.dim();
  Polyhedron base = upper_rows(ev, w);
  add_lower_rows(base, ev);
  std::vector<std::pair<std::string, Polyhedron>> pieces;
  Vector gy_f = embed(ev.y_part(ev.gradf), w, ev.n);
  switch (inst.cls) {
    case InstanceClass::linear_obj_param: {
      cert.route = "y-convex lower level: min over the optimal face";
      auto sol = lower_solve(inst, ev.point.x);
      if (!sol.bounded || !sol.face_bounded) return inapplicable(cert.condition, "optimal face not enumerable");
      Matrix At = inst.linear->A.transpose();
      Polyhedron P = base;
      for (const auto& y : sol.face_vertices) {
        Vector shift = At * (y - ev.point.y);
        Vector row = gy_f;
        for (std::size_t k = 0; k < ev.n; ++k) row[k] -= shift[k];
        P.add_ineq(row, 0);
      }
      pieces.emplace_back("face vertices", P);
      cert.details["face_vertices"] = nlohmann::ordered_json::array();
      for (const auto& y : sol.face_vertices) {
        auto a = nlohmann::ordered_json::array();
        for (const auto& s : y) a.push_back(s.str());
        cert.details["face_vertices"].push_back(a);
      }
      break;
    }
    case InstanceClass::fully_linear:
    case InstanceClass::unique_stable: {
      cert.route = inst.cls == InstanceClass::fully_linear ? "jointly convex lower level: max over multipliers"
                                                           : "y-convex lower level with S(x) = {y}";
      auto mp = multiplier_polytope(ev);
      if (mp.empty()) return inapplicable(cert.condition, "lower-level multiplier set is empty");
      if (!mp.rays.empty()) return inapplicable(cert.condition, "lower-level multiplier set is unbounded");
      for (std::size_t v = 0; v < mp.vertices.size(); ++v) {
        Vector shift = zeros(ev.n);
        for (std::size_t i = 0; i < ev.q(); ++i) shift = shift + mp.vertices[v][i] * ev.x_part(ev.gradg[i]);
        Vector row = gy_f;
        for (std::size_t k = 0; k < ev.n; ++k) row[k] -= shift[k];
        Polyhedron P = base;
        P.add_ineq(row, 0);
        pieces.emplace_back("multiplier vertex " + std::to_string(v + 1), P);
      }
      break;
    }
    case InstanceClass::vf_oracle:
      return inapplicable(cert.condition, "optimal face of S(x) is not enumerable for this class");
  }
  record_value_function_hypotheses(cert, inst, ev);
  if (!hypotheses_usable(cert)) return cert;
  decide_by_triviality(cert, std::move(pieces), iota(w));
  return cert;
}

/// Q-polar route; needs -phi Clarke-regular.
inline Certificate certify_vf_dual(const BilevelInstance& inst, const PointEvaluation& ev,
                                   const ValueFunctionModel& model) {
  using namespace fo_detail;
  if (!model.available) return inapplicable("fo-vf-dual", "value-function model unavailable: " + model.reason);
  Certificate cert;
  cert.condition = "fo-vf-dual";
  cert.route = "polar of Q";
  cert.variables = direction_names(ev.n, ev.m);
  auto& reg = model.minus_phi_clarke_regular;
  std::optional<bool> computed;
  if (!reg.asserted && reg.holds) computed = true;
  record_assumption(cert, inst, "-phi Clarke-regular at x", computed, "minus_phi_clarke_regular");
  if (!hypotheses_usable(cert)) return cert;
  std::vector<Vector> Q{ev.gradF};
  for (auto i : ev.active_G) Q.push_back(ev.gradG[i]);
  for (const auto& xi : subdifferential_polytope(model)) Q.push_back(vf_row(ev, xi));
  for (auto i : ev.active_g) Q.push_back(ev.gradg[i]);
  PolyhedralCone polar(ev.dim());
  for (const auto& q : Q) polar.add_ineq(q);
  decide_by_triviality(cert, {{"Q polar", polar.polyhedron()}}, iota(ev.dim()));
  bool interior = contains_zero_in_interior_of_hull(Q);
  auto qs = nlohmann::ordered_json::array();
  for (const auto& q : Q) {
    auto a = nlohmann::ordered_json::array();
    for (const auto& s : q) a.push_back(s.str());
    qs.push_back(a);
  }
  cert.details["Q_generators"] = qs;
  cert.details["zero_in_interior_of_hull"] = interior;
  cert.details["polar_trivial"] = cert.verdict == Verdict::holds;
  return cert;
}

/// Implicit route for a locally unique, stable lower-level solution: the graph of s'(x; .)
/// enters through the KKT conditions of its defining QP, branched over the I00 complementarity.
inline Certificate certify_implicit(const BilevelInstance& inst, const PointEvaluation& ev) {
  using namespace fo_detail;
  if (inst.cls != InstanceClass::unique_stable)
    return inapplicable("fo-implicit", "requires the unique-stable class");
  Certificate cert;
  cert.condition = "fo-implicit";
  cert.route = "solution-map derivative";
  auto mp = multiplier_polytope(ev);
  record_assumption(cert, inst, "lower-level KKT at y", !mp.empty(), "");
  if (!hypotheses_usable(cert)) return cert;
  record_assumption(cert, inst, "LLICQ", check_llicq(ev), "");
  auto ls = check_lsosc(ev, mp);
  record_assumption(cert, inst, "LSOSC", ls.exact || ls.holds ? std::optional<bool>(ls.holds) : std::nullopt,
                    "lsosc", ls.note);
  record_assumption(cert, inst, "lower level convex in y", std::nullopt, "lower_convex_in_y",
                    "with LLICQ and LSOSC this makes S locally single-valued and Lipschitz");
  if (!hypotheses_usable(cert)) return cert;
  const Vector& lambda = mp.vertices.front();
  auto part = index_partition(ev, lambda);
  std::size_t n = ev.n, m = ev.m, a = ev.active_g.size();
  std::size_t w = n + m + a;
  cert.variables = direction_names(n, m);
  for (auto i : ev.active_g) cert.variables.push_back("mu" + std::to_string(i + 1));
  Polyhedron base = upper_rows(ev, w);
  Matrix H = lagrangian_hessian(ev, lambda);
  for (std::size_t k = 0; k < m; ++k) {
    Vector row = embed(H.row(n + k), w);
    for (std::size_t j = 0; j < a; ++j) row[n + m + j] = ev.gradg[ev.active_g[j]][n + k];
    base.add_eq(row, 0);
  }
  std::vector<ComplementarityPair> pairs;
  for (std::size_t j = 0; j < a; ++j) {
    std::size_t i = ev.active_g[j];
    Vector grad = embed(ev.gradg[i], w);
    if (lambda[i].sign() > 0) base.add_eq(grad, 0);
    else pairs.push_back({unit(w, n + m + j), grad});
  }
  std::vector<std::pair<std::string, Polyhedron>> pieces;
  auto branches = decompose_complementarity(base, pairs);
  for (std::size_t b = 0; b < branches.size(); ++b)
    pieces.emplace_back("active-set branch " + std::to_string(b), branches[b]);
  decide_by_triviality(cert, std::move(pieces), iota(n));
  cert.details["lambda"] = nlohmann::ordered_json::array();
  for (const auto& s : lambda) cert.details["lambda"].push_back(s.str());
  cert.details["lsc"] = check_lsc(lambda, part);
  return cert;
}

namespace fo_detail {

inline std::optional<bool> convex_in_y(const BilevelInstance& inst) {
  unsigned dy = inst.f.degree_in(inst.n, inst.n + inst.m);
  if (dy <= 1) return true;
  if (dy == 2 && inst.f.degree() == 2) {
    // quadratic f: the y-block of the Hessian is constant
    Matrix H = inst.f.hessian(zeros(inst.nvars()));
    std::vector<std::size_t> ys = iota(inst.m, inst.n);
    return is_psd(H.select_rows(ys).select_cols(ys)) ? std::optional<bool>(true) : std::nullopt;
  }
  return std::nullopt;
}

inline std::vector<std::string> vector_labels(const std::vector<std::size_t>& idx) {
  std::vector<std::string> out;
  for (auto i : idx) out.push_back(std::to_string(i + 1));
  return out;
}

}  // namespace fo_detail

/// Variational-analysis route for affine, x-independent lower-level constraints.
inline Certificate certify_va(const BilevelInstance& inst, const PointEvaluation& ev) {
  using namespace fo_detail;
  if (!inst.lower_constraints_affine_x_free())
    return inapplicable("fo-va", "lower-level constraints are not affine and independent of x");
  Certificate cert;
  cert.condition = "fo-va";
  cert.route = "variational analysis";
  record_assumption(cert, inst, "lower-level objective convex in y", convex_in_y(inst), "lower_convex_in_y");
  record_assumption(cert, inst, "SOSCMS (affine constraints)", check_soscms_affine(inst, ev), "");
  record_assumption(cert, inst, "lower-level multiplier set nonempty", !multiplier_polytope(ev).empty(), "");
  if (!hypotheses_usable(cert)) return cert;
  std::size_t n = ev.n, m = ev.m, a = ev.active_g.size();
  std::size_t w = n + m + 1 + a;
  cert.variables = direction_names(n, m);
  cert.variables.push_back("kappa");
  for (auto i : ev.active_g) cert.variables.push_back("mu" + std::to_string(i + 1));
  Polyhedron base = upper_rows(ev, w);
  for (std::size_t k = 0; k < m; ++k) {
    Vector row = embed(ev.hessf.row(n + k), w);
    row[n + m] = ev.gradf[n + k];
    for (std::size_t j = 0; j < a; ++j) row[n + m + 1 + j] = ev.gradg[ev.active_g[j]][n + k];
    base.add_eq(row, 0);
  }
  base.add_eq(embed(ev.y_part(ev.gradf), w, n), 0);
  std::vector<ComplementarityPair> pairs;
  for (std::size_t j = 0; j < a; ++j)
    pairs.push_back({unit(w, n + m + 1 + j), embed(ev.y_part(ev.gradg[ev.active_g[j]]), w, n)});
  std::vector<std::pair<std::string, Polyhedron>> pieces;
  auto branches = decompose_complementarity(base, pairs);
  for (std::size_t b = 0; b < branches.size(); ++b) pieces.emplace_back("mu-branch " + std::to_string(b), branches[b]);
  decide_by_triviality(cert, std::move(pieces), iota(n + m));
  return cert;
}

/// KKT-reformulation route under SMFC.
inline Certificate certify_kkt(const BilevelInstance& inst, const PointEvaluation& ev) {
  using namespace fo_detail;
  Certificate cert;
  cert.condition = "fo-kkt";
  cert.route = "KKT reformulation";
  auto mp = multiplier_polytope(ev);
  record_assumption(cert, inst, "lower-level multiplier set nonempty", !mp.empty(), "");
  if (!hypotheses_usable(cert)) return cert;
  record_assumption(cert, inst, "lower-level objective convex in y", convex_in_y(inst), "lower_convex_in_y");
  std::optional<bool> cq;
  std::string cq_note;
  if (check_llicq(ev)) {
    cq = true;
    cq_note = "LLICQ holds";
  } else {
    std::vector<Vector> act;
    for (auto i : ev.active_g) act.push_back(ev.y_part(ev.gradg[i]));
    if (mfcq(act, ev.m)) {
      cq = true;
      cq_note = "MFCQ holds";
    }
  }
  record_assumption(cert, inst, "lower-level constraint qualification", cq, "lower_cq", cq_note);
  const Vector& lambda = mp.vertices.front();
  bool smfc = check_smfc(ev, lambda);
  record_assumption(cert, inst, "SMFC at lambda", smfc, "",
                    smfc ? "the multiplier is unique" : "multipliers are not unique");
  if (!hypotheses_usable(cert)) return cert;
  auto part = index_partition(ev, lambda);
  std::size_t n = ev.n, m = ev.m, q = ev.q();
  std::size_t w = n + m + q;
  cert.variables = direction_names(n, m);
  for (std::size_t i = 0; i < q; ++i) cert.variables.push_back("dlambda" + std::to_string(i + 1));
  Polyhedron base = upper_rows(ev, w);
  Matrix H = lagrangian_hessian(ev, lambda);
  for (std::size_t k = 0; k < m; ++k) {
    Vector row = embed(H.row(n + k), w);
    for (std::size_t i = 0; i < q; ++i) row[n + m + i] = ev.gradg[i][n + k];
    base.add_eq(row, 0);
  }
  for (auto i : part.zero_minus) base.add_eq(unit(w, n + m + i), 0);
  for (auto i : part.plus_zero) base.add_eq(embed(ev.gradg[i], w), 0);
  std::vector<ComplementarityPair> pairs;
  for (auto i : part.zero_zero) pairs.push_back({unit(w, n + m + i), embed(ev.gradg[i], w)});
  std::vector<std::pair<std::string, Polyhedron>> pieces;
  auto branches = decompose_complementarity(base, pairs);
  for (std::size_t b = 0; b < branches.size(); ++b)
    pieces.emplace_back("I00-branch " + std::to_string(b), branches[b]);
  decide_by_triviality(cert, std::move(pieces), iota(n + m));
  cert.details["lambda"] = nlohmann::ordered_json::array();
  for (const auto& s : lambda) cert.details["lambda"].push_back(s.str());
  cert.details["I0-"] = vector_labels(part.zero_minus);
  cert.details["I+0"] = vector_labels(part.plus_zero);
  cert.details["I00"] = vector_labels(part.zero_zero);
  cert.details["smfc"] = smfc;
  return cert;
}

}  // namespace bilevel
