#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lower_level.hpp"

namespace bilevel {

enum class VfForm { max_form, min_form, smooth, oracle };

inline const char* to_string(VfForm f) {
  switch (f) {
    case VfForm::max_form: return "max-form";
    case VfForm::min_form: return "min-form";
    case VfForm::smooth: return "smooth";
    case VfForm::oracle: return "oracle";
  }
  return "?";
}

/// A structural property of the value function: known to hold, and whether that
/// knowledge is computed or only asserted by the instance file.
struct RegularityFlag {
  bool holds = false;
  bool asserted = false;
};

struct ValueFunctionModel {
  InstanceClass cls = InstanceClass::vf_oracle;
  VfForm form = VfForm::oracle;
  bool available = false;
  std::string reason;

  std::optional<Scalar> phi_value;
  std::vector<Vector> generators;  ///< a_k of the max/min form; the gradient for smooth models
  Vector gradient;

  // smooth models: curvature through the lower-level QP
  std::optional<PointEvaluation> lower_eval;
  Vector lambda;

  std::vector<OraclePiece> pieces;
  std::vector<Vector> subdifferential;  ///< generators of the Clarke subdifferential of phi

  std::vector<Vector> lower_vertices;  ///< dual vertices (fully-linear) or vertices of K (linear-obj-param)
  std::vector<std::size_t> active_vertices;

  RegularityFlag phi_epi_regular, minus_phi_epi_regular;
  RegularityFlag phi_clarke_regular, minus_phi_clarke_regular;
  std::vector<std::string> notes;

  std::size_t n() const {
    if (!gradient.empty()) return gradient.size();
    if (!generators.empty()) return generators.front().size();
    if (!pieces.empty()) return pieces.front().cone.dim;
    return 0;
  }
};

namespace detail {

inline RegularityFlag asserted_flag(const BilevelInstance& inst, const std::string& key) {
  auto a = inst.asserted(key);
  return {a.value_or(false), a.has_value()};
}

inline void dedupe(std::vector<Vector>& v) { sort_unique(v); }

}  // namespace detail

inline ValueFunctionModel build_vf_model(const BilevelInstance& inst, const PointEvaluation& ev) {
  ValueFunctionModel model;
  model.cls = inst.cls;
  const Vector& x = ev.point.x;
  switch (inst.cls) {
    case InstanceClass::fully_linear: {
      model.form = VfForm::max_form;
      const auto& L = *inst.linear;
      std::size_t q = L.B.rows();
      Polyhedron dual(q);
      Matrix Bt = L.B.transpose();
      for (std::size_t k = 0; k < inst.m; ++k) dual.add_eq(Bt.row(k), -L.c[k]);
      for (std::size_t i = 0; i < q; ++i) dual.add_ineq(unit(q, i, -1), 0);
      Vector obj = L.A * x - L.b;
      auto r = lp_solve(obj, dual, Sense::maximize);
      if (r.status != LpStatus::optimal) {
        model.reason = std::string("lower-level dual is ") + to_string(r.status);
        return model;
      }
      Polyhedron face = dual;
      face.add_eq(obj, r.value);
      if (!is_bounded(face)) {
        model.reason = "dual solution set is unbounded (x is not interior to dom phi)";
        return model;
      }
      model.phi_value = r.value;
      model.lower_vertices = vertices(face);
      Matrix At = L.A.transpose();
      for (const auto& lam : model.lower_vertices) model.generators.push_back(At * lam);
      detail::dedupe(model.generators);
      model.subdifferential = model.generators;
      model.phi_epi_regular = {true, false};
      model.minus_phi_epi_regular = {true, false};
      model.phi_clarke_regular = {true, false};
      model.minus_phi_clarke_regular = {model.generators.size() == 1, false};
      model.notes.push_back("x in int dom phi asserted; dual solution set is nonempty and bounded");
      break;
    }
    case InstanceClass::linear_obj_param: {
      model.form = VfForm::min_form;
      const auto& L = *inst.linear;
      Polyhedron K(inst.m);
      for (std::size_t i = 0; i < L.B.rows(); ++i) K.add_ineq(L.B.row(i), L.b[i]);
      if (!is_bounded(K)) {
        model.reason = "lower-level feasible set K is unbounded";
        return model;
      }
      model.lower_vertices = vertices(K);
      if (model.lower_vertices.empty()) {
        model.reason = "lower-level feasible set K is empty";
        return model;
      }
      Vector cost = L.A * x + L.c;
      Scalar best = dot(cost, model.lower_vertices.front());
      for (const auto& y : model.lower_vertices) best = std::min(best, dot(cost, y));
      model.phi_value = best;
      Matrix At = L.A.transpose();
      for (std::size_t l = 0; l < model.lower_vertices.size(); ++l)
        if (dot(cost, model.lower_vertices[l]) == best) {
          model.active_vertices.push_back(l);
          model.generators.push_back(At * model.lower_vertices[l]);
        }
      detail::dedupe(model.generators);
      model.subdifferential = model.generators;
      model.minus_phi_epi_regular = {true, false};
      model.phi_epi_regular = {model.generators.size() == 1, false};
      model.minus_phi_clarke_regular = {true, false};
      model.phi_clarke_regular = {model.generators.size() == 1, false};
      break;
    }
    case InstanceClass::unique_stable: {
      model.form = VfForm::smooth;
      auto mp = multiplier_polytope(ev);
      if (mp.empty()) {
        model.reason = "lower-level KKT conditions fail at the candidate";
        return model;
      }
      if (!check_llicq(ev)) {
        model.reason = "LLICQ fails at the candidate";
        return model;
      }
      auto ls = check_lsosc(ev, mp);
      if (!ls.holds) {
        model.reason = "LSOSC not verified: " + ls.note;
        return model;
      }
      model.lambda = mp.vertices.front();
      model.lower_eval = ev;
      model.phi_value = ev.f;
      model.gradient = ev.x_part(lagrangian_gradient(ev, model.lambda));
      model.generators = {model.gradient};
      model.subdifferential = model.generators;
      model.phi_epi_regular = {true, false};
      model.minus_phi_epi_regular = {true, false};
      model.phi_clarke_regular = {true, false};
      model.minus_phi_clarke_regular = {true, false};
      model.notes.push_back("LLICQ and LSOSC verified; convexity of the lower level in y asserted");
      break;
    }
    case InstanceClass::vf_oracle: {
      model.form = VfForm::oracle;
      if (!inst.oracle || inst.oracle->pieces.empty()) {
        model.reason = "no value-function table supplied";
        return model;
      }
      model.phi_value = inst.oracle->phi_value;
      model.pieces = inst.oracle->pieces;
      for (const auto& pc : model.pieces) model.generators.push_back(pc.phi1);
      detail::dedupe(model.generators);
      model.subdifferential = model.generators;
      model.phi_epi_regular = detail::asserted_flag(inst, "phi_epi_regular");
      model.minus_phi_epi_regular = detail::asserted_flag(inst, "minus_phi_epi_regular");
      model.phi_clarke_regular = detail::asserted_flag(inst, "phi_clarke_regular");
      model.minus_phi_clarke_regular = detail::asserted_flag(inst, "minus_phi_clarke_regular");
      break;
    }
  }
  model.available = true;
  return model;
}

/// Indices of the oracle pieces whose validity cone contains dx.
inline std::vector<std::size_t> oracle_pieces_at(const ValueFunctionModel& model, const Vector& dx) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < model.pieces.size(); ++k)
    if (model.pieces[k].cone.contains(dx)) out.push_back(k);
  return out;
}

inline Scalar phi_dirderiv(const ValueFunctionModel& model, const Vector& dx) {
  if (!model.available) throw std::logic_error("value-function model unavailable: " + model.reason);
  switch (model.form) {
    case VfForm::max_form:
    case VfForm::min_form: {
      Scalar best = dot(model.generators.front(), dx);
      for (const auto& a : model.generators) {
        Scalar v = dot(a, dx);
        best = model.form == VfForm::max_form ? std::max(best, v) : std::min(best, v);
      }
      return best;
    }
    case VfForm::smooth: return dot(model.gradient, dx);
    case VfForm::oracle: {
      auto at = oracle_pieces_at(model, dx);
      if (at.empty()) throw std::domain_error("direction lies outside every oracle piece");
      return dot(model.pieces[at.front()].phi1, dx);
    }
  }
  return 0;
}

/// phi''(x; dx, wx) as an affine function of wx: the max (max-form) or min (min-form) of the
/// listed forms c^T wx + k. A single form for smooth and oracle models.
struct SecondOrderForms {
  bool is_max = true;
  bool minus_infinity = false;
  std::vector<std::pair<Vector, Scalar>> forms;
};

inline SecondOrderForms phi_second_forms(const ValueFunctionModel& model, const Vector& dx) {
  SecondOrderForms out;
  switch (model.form) {
    case VfForm::max_form:
    case VfForm::min_form: {
      Scalar target = phi_dirderiv(model, dx);
      out.is_max = model.form == VfForm::max_form;
      for (const auto& a : model.generators)
        if (dot(a, dx) == target) out.forms.emplace_back(a, Scalar(0));
      break;
    }
    case VfForm::smooth: {
      auto qp = stable_direction_qp(*model.lower_eval, model.lambda, dx);
      if (qp.status != QpStatus::optimal) {
        out.minus_infinity = true;
        break;
      }
      out.forms.emplace_back(model.gradient, qp.value);
      break;
    }
    case VfForm::oracle: {
      auto at = oracle_pieces_at(model, dx);
      if (at.empty()) throw std::domain_error("direction lies outside every oracle piece");
      const auto& pc = model.pieces[at.front()];
      out.forms.emplace_back(pc.phi2_lin, quad_form(pc.phi2_quad, dx));
      break;
    }
  }
  return out;
}

/// nullopt encodes minus infinity.
inline std::optional<Scalar> phi_second_dirderiv(const ValueFunctionModel& model, const Vector& dx,
                                                 const Vector& wx) {
  if (!model.available) throw std::logic_error("value-function model unavailable: " + model.reason);
  auto sf = phi_second_forms(model, dx);
  if (sf.minus_infinity) return std::nullopt;
  std::optional<Scalar> best;
  for (const auto& [c, k] : sf.forms) {
    Scalar v = dot(c, wx) + k;
    if (!best || (sf.is_max ? v > *best : v < *best)) best = v;
  }
  return best;
}

inline std::vector<Vector> subdifferential_polytope(const ValueFunctionModel& model) {
  return model.subdifferential;
}

}  // namespace bilevel
