#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "first_order.hpp"
#include "io.hpp"

namespace bilevel {

/// One polyhedral piece of a possibly nonconvex cone; `generators` lists the phi' generators
/// (or oracle pieces) whose formula is in force on it.
struct ConePiece {
  std::string label;
  PolyhedralCone cone;
  std::vector<std::size_t> generators;
};

/// Union semantics: a direction belongs to the cone iff it lies in some piece.
using ConePieces = std::vector<ConePiece>;

inline bool contains(const ConePieces& pieces, const Vector& d) {
  for (const auto& pc : pieces)
    if (pc.cone.contains(d)) return true;
  return false;
}

inline ConePieces build_linearization_cone(const PointEvaluation& ev, const ValueFunctionModel& model) {
  if (!model.available) throw std::logic_error("value-function model unavailable: " + model.reason);
  std::size_t N = ev.dim();
  Polyhedron base(N);
  for (auto i : ev.active_G) base.add_ineq(ev.gradG[i], 0);
  fo_detail::add_lower_rows(base, ev);
  auto expanded = fo_detail::expand_vf_row(base, ev, model);
  ConePieces out;
  for (std::size_t k = 0; k < expanded.size(); ++k) {
    ConePiece pc{expanded[k].first, as_cone(expanded[k].second), {}};
    if (model.form == VfForm::max_form || model.form == VfForm::oracle) pc.generators = {k};
    else pc.generators = fo_detail::iota(model.generators.size());
    out.push_back(std::move(pc));
  }
  return out;
}

inline ConePieces build_critical_cone(const PointEvaluation& ev, const ValueFunctionModel& model) {
  ConePieces out = build_linearization_cone(ev, model);
  for (auto& pc : out) pc.cone.add_ineq(ev.gradF);
  return out;
}

struct DescentCheck {
  bool holds = true;
  std::optional<Vector> witness;  ///< d in the linearization cone with grad F^T d < 0
  Scalar min_value;               ///< minimum of grad F^T d over the cone within the unit box
};

inline DescentCheck check_no_descent(const PointEvaluation& ev, const ConePieces& lin) {
  DescentCheck out;
  for (const auto& pc : lin) {
    Polyhedron P = pc.cone.polyhedron();
    P.add_box(-1, 1);
    auto r = lp_solve(ev.gradF, P, Sense::minimize);
    if (r.status != LpStatus::optimal) continue;
    if (r.value < out.min_value) out.min_value = r.value;
    if (r.value.sign() < 0 && out.holds) {
      out.holds = false;
      out.witness = r.point;
    }
  }
  return out;
}

namespace so_detail {

/// Minimum of grad f^T d - phi'(x; dx) over P, and a minimizer.
inline std::pair<Scalar, Vector> minimize_vf_gap(const PointEvaluation& ev, const ValueFunctionModel& model,
                                                 Polyhedron P) {
  std::size_t N = ev.dim();
  P.add_box(-1, 1);
  std::optional<std::pair<Scalar, Vector>> best;
  auto consider = [&](const LpOutcome& r, std::size_t len) {
    if (r.status != LpStatus::optimal) return;
    if (!best || r.value < best->first) best = {r.value, Vector(r.point.begin(), r.point.begin() + long(len))};
  };
  switch (model.form) {
    case VfForm::max_form:
    case VfForm::smooth:
      for (const auto& a : model.generators) consider(lp_solve(fo_detail::vf_row(ev, a), P, Sense::minimize), N);
      break;
    case VfForm::min_form: {
      Polyhedron Q(N + 1);
      for (std::size_t i = 0; i < P.A.rows(); ++i) Q.add_ineq(fo_detail::embed(P.A.row(i), N + 1), P.b[i]);
      for (std::size_t i = 0; i < P.E.rows(); ++i) Q.add_eq(fo_detail::embed(P.E.row(i), N + 1), P.e[i]);
      for (const auto& a : model.generators) {
        Vector row = fo_detail::embed(fo_detail::vf_row(ev, a), N + 1);
        row[N] = -1;
        Q.add_ineq(row, 0);
      }
      consider(lp_solve(unit(N + 1, N), Q, Sense::minimize), N);
      break;
    }
    case VfForm::oracle:
      for (const auto& pc : model.pieces) {
        Polyhedron R = P;
        for (std::size_t i = 0; i < pc.cone.A.rows(); ++i) R.add_ineq(fo_detail::embed(pc.cone.A.row(i), N), 0);
        for (std::size_t i = 0; i < pc.cone.E.rows(); ++i) R.add_eq(fo_detail::embed(pc.cone.E.row(i), N), 0);
        consider(lp_solve(fo_detail::vf_row(ev, pc.phi1), R, Sense::minimize), N);
      }
      break;
  }
  if (!best) return {Scalar(0), zeros(N)};
  return *best;
}

}  // namespace so_detail

/// ACQ for {g <= 0} at the candidate: verified for affine g or under MFCQ; refuted when the
/// optimal-value constraint decreases along a direction of the linearized lower-level system.
struct AcqDecision {
  std::optional<bool> holds;
  std::string note;
  std::optional<Vector> witness;
};

inline AcqDecision decide_acq(const BilevelInstance& inst, const PointEvaluation& ev,
                              const ValueFunctionModel& model) {
  bool affine = std::all_of(inst.g.begin(), inst.g.end(), [](const Polynomial& p) { return p.degree() <= 1; });
  if (affine) return {true, "lower-level constraints are affine", {}};
  std::size_t N = ev.dim();
  Polyhedron strict(N);
  for (auto i : ev.active_g) strict.add_ineq(ev.gradg[i], -1);
  if (is_feasible(strict)) return {true, "MFCQ holds for the lower-level constraint system", {}};
  if (model.available) {
    Polyhedron lin(N);
    fo_detail::add_lower_rows(lin, ev);
    auto [value, d] = so_detail::minimize_vf_gap(ev, model, lin);
    if (value.sign() < 0)
      return {false, "a direction of the linearized lower-level system decreases f - phi to first order", d};
  }
  return {std::nullopt, "neither affine constraints nor MFCQ", {}};
}

struct SubproblemOutcome {
  ExtendedValue value;
  Vector w;              ///< minimizing (wx, wy) of the best branch when finite
  std::size_t branch = 0;
};

/// LP value min { alpha | ... } for a critical direction d; min over branches when phi'' is a max of forms.
inline SubproblemOutcome subproblem_value(const PointEvaluation& ev, const ValueFunctionModel& model,
                                          const Vector& d, const ConePieces* critical = nullptr) {
  if (!model.available) throw std::logic_error("value-function model unavailable: " + model.reason);
  std::size_t N = ev.dim();
  if (d.size() != N) throw DimensionError("subproblem_value: direction has wrong length");
  if (critical && !contains(*critical, d)) throw std::domain_error("direction is outside the critical cone");
  SubproblemOutcome out;
  Vector dx = ev.x_part(d);
  auto sf = phi_second_forms(model, dx);
  if (sf.minus_infinity) {
    out.value = ExtendedValue::minus_infinity();
    return out;
  }
  Polyhedron base(N + 1);
  auto row = [&](const Vector& grad, const Scalar& quad) {
    Vector r = fo_detail::embed(grad, N + 1);
    r[N] = -1;
    base.add_ineq(r, -quad);
  };
  row(ev.gradF, quad_form(ev.hessF, d));
  for (auto i : ev.active_G)
    if (dot(ev.gradG[i], d).is_zero()) row(ev.gradG[i], quad_form(ev.hessG[i], d));
  for (auto i : ev.active_g)
    if (dot(ev.gradg[i], d).is_zero()) row(ev.gradg[i], quad_form(ev.hessg[i], d));
  Scalar qf = quad_form(ev.hessf, d);
  auto vf_row = [&](Polyhedron& P, const Vector& c, const Scalar& k) {
    Vector r = fo_detail::embed(fo_detail::vf_row(ev, c), N + 1);
    r[N] = -1;
    P.add_ineq(r, k - qf);
  };
  std::vector<Polyhedron> branches;
  if (sf.is_max && sf.forms.size() > 1) {
    for (const auto& [c, k] : sf.forms) {
      Polyhedron P = base;
      vf_row(P, c, k);
      branches.push_back(std::move(P));
    }
  } else {
    Polyhedron P = base;
    for (const auto& [c, k] : sf.forms) vf_row(P, c, k);
    branches.push_back(std::move(P));
  }
  bool have = false;
  for (std::size_t b = 0; b < branches.size(); ++b) {
    auto r = lp_solve(unit(N + 1, N), branches[b], Sense::minimize);
    if (r.status == LpStatus::unbounded) {
      out.value = ExtendedValue::minus_infinity();
      out.branch = b;
      out.w.clear();
      return out;
    }
    if (r.status != LpStatus::optimal) continue;
    if (!have || r.value < out.value.value) {
      have = true;
      out.value = {0, r.value};
      out.w = Vector(r.point.begin(), r.point.begin() + long(N));
      out.branch = b;
    }
  }
  return out;
}

struct ScanOptions {
  std::size_t density = 10000;
  double margin = 1e-6;
};

namespace so_detail {

inline unsigned nth_prime(std::size_t k) {
  static std::vector<unsigned> primes{2};
  for (unsigned c = primes.back() + 1; primes.size() <= k; ++c) {
    bool prime = true;
    for (auto p : primes) {
      if (p * p > c) break;
      if (c % p == 0) {
        prime = false;
        break;
      }
    }
    if (prime) primes.push_back(c);
  }
  return primes[k];
}

/// Exact radical inverse of i in the given base (one Halton coordinate).
inline Scalar radical_inverse(std::uint64_t i, unsigned base) {
  Scalar r = 0;
  Scalar scale(1, static_cast<long>(base));
  while (i > 0) {
    r += Scalar(static_cast<long>(i % base)) * scale;
    scale = scale / Scalar(static_cast<long>(base));
    i /= base;
  }
  return r;
}

inline std::vector<Scalar> halton(std::uint64_t index, std::size_t dims) {
  std::vector<Scalar> t(dims);
  for (std::size_t j = 0; j < dims; ++j) t[j] = radical_inverse(index, nth_prime(j));
  return t;
}

inline Scalar norm2_squared(const Vector& d) { return dot(d, d); }

}  // namespace so_detail

using DirectionalValue = std::function<ExtendedValue(const Vector&)>;

/// Exact values at the extreme rays of every piece plus a Halton scan of pieces of dimension >= 2.
/// Sets verdict, witness and reason of `cert`.
inline void scan_cone(Certificate& cert, const ConePieces& pieces, const DirectionalValue& value,
                      const ScanOptions& opt) {
  cert.verdict = Verdict::holds;
  bool undetermined = false;
  auto fail = [&](const Vector& d, const std::string& why) {
    if (cert.verdict == Verdict::fails) return;
    cert.verdict = Verdict::fails;
    cert.witness = d;
    cert.reason = why;
  };
  for (const auto& pc : pieces) {
    FaceScan fs;
    fs.label = pc.label;
    fs.cone = pc.cone;
    auto gens = cone_generators(pc.cone);
    std::vector<Vector> spanning = gens.rays;
    for (const auto& l : gens.lines) {
      spanning.push_back(l);
      spanning.push_back(Scalar(-1) * l);
    }
    fs.rays = spanning;
    double face_min = std::numeric_limits<double>::infinity();
    for (const auto& r : spanning) {
      auto v = value(r);
      fs.ray_values.push_back(v);
      if (!v.positive()) fail(r, "nonpositive value " + v.str() + " on an extreme ray of '" + pc.label + "'");
      if (v.finite()) face_min = std::min(face_min, (v.value / so_detail::norm2_squared(r)).to_double());
    }
    std::size_t dim = 0;
    if (!spanning.empty()) {
      Matrix S(0, pc.cone.dim);
      for (const auto& r : spanning) S.append_row(r);
      dim = rank(S);
    }
    if (dim >= 2 && opt.density > 0) {
      fs.sampled = true;
      for (std::uint64_t k = 1; k <= opt.density && cert.verdict != Verdict::fails; ++k) {
        auto t = so_detail::halton(k, spanning.size());
        Vector d = zeros(pc.cone.dim);
        for (std::size_t j = 0; j < spanning.size(); ++j) d = d + t[j] * spanning[j];
        if (is_zero(d)) continue;
        ++fs.samples;
        auto v = value(d);
        if (!v.positive()) {
          fail(d, "nonpositive value " + v.str() + " at a sampled direction of '" + pc.label + "'");
          continue;
        }
        if (v.finite()) face_min = std::min(face_min, (v.value / so_detail::norm2_squared(d)).to_double());
      }
    }
    fs.sampled_min = face_min;
    if (std::isfinite(face_min) && face_min < opt.margin) undetermined = true;
    cert.faces.push_back(std::move(fs));
  }
  if (cert.verdict == Verdict::fails) return;
  if (undetermined) {
    cert.verdict = Verdict::undetermined;
    cert.reason = "all exact values are positive but the normalized minimum is below the margin";
    return;
  }
  cert.reason = "positive on every extreme ray and above the margin on every scanned piece";
}

/// Scan of the critical cone with the subproblem LP as directional value.
inline Certificate positivity_scan(const PointEvaluation& ev, const ValueFunctionModel& model,
                                   const ConePieces& critical, const ScanOptions& opt = {}) {
  Certificate cert;
  cert.condition = "so";
  cert.route = "subproblem LP over the critical cone";
  cert.variables = direction_names(ev.n, ev.m);
  scan_cone(cert, critical, [&](const Vector& d) { return subproblem_value(ev, model, d).value; }, opt);
  cert.details["density"] = opt.density;
  cert.details["margin"] = opt.margin;
  return cert;
}

inline void record_second_order_hypotheses(Certificate& cert, const BilevelInstance& inst,
                                           const PointEvaluation& ev, const ValueFunctionModel& model,
                                           const ConePieces& lin) {
  std::optional<bool> epi;
  if (inst.cls != InstanceClass::vf_oracle) epi = model.minus_phi_epi_regular.holds;
  record_assumption(cert, inst, "-phi second-order epi-regular at x", epi, "minus_phi_epi_regular");
  auto acq = decide_acq(inst, ev, model);
  record_assumption(cert, inst, "ACQ for the lower-level constraint set", acq.holds, "acq", acq.note);
  if (acq.witness) cert.details["acq_witness"] = to_json(*acq.witness);
  auto nd = check_no_descent(ev, lin);
  record_assumption(cert, inst, "no descent on the linearization cone", nd.holds, "",
                    nd.holds ? "grad F^T d >= 0 on every piece" : "a linearized feasible direction decreases F");
  if (nd.witness) cert.details["descent_witness"] = to_json(*nd.witness);
}

/// The second-order condition: hypotheses, cones, and the positivity scan.
inline Certificate certify_second_order(const BilevelInstance& inst, const PointEvaluation& ev,
                                        const ValueFunctionModel& model, const ScanOptions& opt = {}) {
  if (!model.available) return inapplicable("so", "value-function model unavailable: " + model.reason);
  ConePieces lin = build_linearization_cone(ev, model);
  ConePieces crit = build_critical_cone(ev, model);
  Certificate pre;
  record_second_order_hypotheses(pre, inst, ev, model, lin);
  if (!hypotheses_usable(pre)) {
    pre.condition = "so";
    pre.route = "subproblem LP over the critical cone";
    return pre;
  }
  Certificate cert = positivity_scan(ev, model, crit, opt);
  cert.assumptions = pre.assumptions;
  for (auto& [k, v] : pre.details.items()) cert.details[k] = v;
  return cert;
}

/// Multiplier data of the value-function reformulation for a model with a single phi'' form.
/// nu is ordered (nu^G, nu^vf, nu^g) with all p + 1 + q components.
struct VfLagrangianData {
  bool available = false;
  std::string reason;
  const PointEvaluation* ev = nullptr;
  ValueFunctionModel model;
  Vector phi_gradient;
  Polyhedron region{0};
  std::vector<Vector> vertices;
  std::vector<Vector> rays;
  std::optional<Matrix> phi_hessian;  ///< n x n matrix of the phi'' curvature when it is a quadratic form

  std::size_t width() const { return ev->p() + 1 + ev->q(); }

  Scalar phi_curvature(const Vector& dx) const {
    auto sf = phi_second_forms(model, dx);
    if (sf.minus_infinity || sf.forms.empty()) throw std::domain_error("phi'' is not finite along this direction");
    return sf.forms.front().second;
  }

  /// d^T grad^2 L^vf(sigma, nu) d with phi'' in place of the second derivative of phi.
  Scalar curvature(const Scalar& sigma, const Vector& nu, const Vector& d) const {
    Scalar v = sigma * quad_form(ev->hessF, d);
    std::size_t p = ev->p();
    for (std::size_t i = 0; i < p; ++i) v += nu[i] * quad_form(ev->hessG[i], d);
    v += nu[p] * (quad_form(ev->hessf, d) - phi_curvature(ev->x_part(d)));
    for (std::size_t i = 0; i < ev->q(); ++i) v += nu[p + 1 + i] * quad_form(ev->hessg[i], d);
    return v;
  }

  std::optional<Matrix> hessian_at(const Vector& nu, const Scalar& sigma = 1) const {
    if (!phi_hessian) return std::nullopt;
    std::size_t p = ev->p(), N = ev->dim();
    Matrix H = ev->hessF.scaled(sigma);
    for (std::size_t i = 0; i < p; ++i) H = H + ev->hessG[i].scaled(nu[i]);
    Matrix phi(N, N);
    for (std::size_t i = 0; i < ev->n; ++i)
      for (std::size_t j = 0; j < ev->n; ++j) phi(i, j) = (*phi_hessian)(i, j);
    H = H + (ev->hessf + phi.scaled(-1)).scaled(nu[p]);
    for (std::size_t i = 0; i < ev->q(); ++i) H = H + ev->hessg[i].scaled(nu[p + 1 + i]);
    return H;
  }
};

namespace so_detail {

/// Stationarity rows of L^vf over (sigma, nu); sigma is the first variable when `with_sigma`.
inline Polyhedron vf_stationarity(const PointEvaluation& ev, const Vector& c, bool with_sigma) {
  std::size_t p = ev.p(), q = ev.q(), N = ev.dim();
  std::size_t off = with_sigma ? 1 : 0;
  std::size_t w = off + p + 1 + q;
  Polyhedron P(w);
  Vector fvf = fo_detail::vf_row(ev, c);
  for (std::size_t k = 0; k < N; ++k) {
    Vector row = zeros(w);
    for (std::size_t i = 0; i < p; ++i) row[off + i] = ev.gradG[i][k];
    row[off + p] = fvf[k];
    for (std::size_t i = 0; i < q; ++i) row[off + p + 1 + i] = ev.gradg[i][k];
    if (with_sigma) {
      row[0] = ev.gradF[k];
      P.add_eq(row, 0);
    } else {
      P.add_eq(row, -ev.gradF[k]);
    }
  }
  for (std::size_t j = 0; j < w; ++j) P.add_ineq(unit(w, j, -1), 0);
  return P;
}

}  // namespace so_detail

inline VfLagrangianData vf_lagrangian_data(const PointEvaluation& ev, const ValueFunctionModel& model) {
  VfLagrangianData data;
  data.ev = &ev;
  data.model = model;
  if (!model.available) {
    data.reason = "value-function model unavailable: " + model.reason;
    return data;
  }
  if (model.generators.size() != 1) {
    data.reason = "phi is not differentiable at x (" + std::to_string(model.generators.size()) + " generators)";
    return data;
  }
  if (model.form == VfForm::oracle) {
    const auto& first = model.pieces.front();
    for (const auto& pc : model.pieces)
      if (pc.phi2_lin != first.phi2_lin || !(pc.phi2_quad == first.phi2_quad)) {
        data.reason = "oracle phi'' differs between pieces";
        return data;
      }
  }
  std::size_t n = ev.n;
  data.phi_gradient = model.form == VfForm::smooth ? model.gradient : model.generators.front();
  if (model.form == VfForm::oracle) data.phi_gradient = model.pieces.front().phi2_lin;
  // polarization of the phi'' curvature; kept only when it reproduces a quadratic form
  Matrix Phi(n, n);
  for (std::size_t i = 0; i < n; ++i) Phi(i, i) = data.phi_curvature(unit(n, i));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      Scalar both = data.phi_curvature(unit(n, i) + unit(n, j));
      Phi(i, j) = Phi(j, i) = (both - Phi(i, i) - Phi(j, j)) / Scalar(2);
    }
  bool quadratic = true;
  for (std::size_t i = 0; i < n && quadratic; ++i) {
    Vector neg = unit(n, i, -1);
    quadratic = data.phi_curvature(neg) == quad_form(Phi, neg);
    for (std::size_t j = i + 1; j < n && quadratic; ++j) {
      Vector mixed = unit(n, i) - unit(n, j);
      quadratic = data.phi_curvature(mixed) == quad_form(Phi, mixed);
    }
  }
  if (quadratic) data.phi_hessian = Phi;
  data.region = so_detail::vf_stationarity(ev, data.phi_gradient, false);
  std::size_t p = ev.p();
  for (std::size_t i = 0; i < p; ++i)
    if (!ev.is_active_G(i)) data.region.add_eq(unit(data.width(), i), 0);
  for (std::size_t i = 0; i < ev.q(); ++i)
    if (!ev.is_active_g(i)) data.region.add_eq(unit(data.width(), p + 1 + i), 0);
  data.vertices = basic_feasible_points(data.region);
  if (!data.vertices.empty() && !is_bounded(data.region)) {
    Polyhedron rec(data.region.dim);
    for (std::size_t i = 0; i < data.region.A.rows(); ++i) rec.add_ineq(data.region.A.row(i), 0);
    for (std::size_t i = 0; i < data.region.E.rows(); ++i) rec.add_eq(data.region.E.row(i), 0);
    data.rays = extreme_rays(as_cone(rec));
  }
  data.available = true;
  return data;
}

/// Dual of the subproblem LP at d: max of the Fritz-John curvature over Lambda0(d).
inline ExtendedValue fritz_john_value(const VfLagrangianData& data, const Vector& d) {
  const auto& ev = *data.ev;
  std::size_t p = ev.p(), q = ev.q();
  Polyhedron P = so_detail::vf_stationarity(ev, data.phi_gradient, true);
  std::size_t w = P.dim;
  P.add_eq(Vector(w, Scalar(1)), 1);
  for (std::size_t i = 0; i < p; ++i)
    if (!ev.is_active_G(i) || !dot(ev.gradG[i], d).is_zero()) P.add_eq(unit(w, 1 + i), 0);
  for (std::size_t i = 0; i < q; ++i)
    if (!ev.is_active_g(i) || !dot(ev.gradg[i], d).is_zero()) P.add_eq(unit(w, 2 + p + i), 0);
  Vector obj(w);
  obj[0] = quad_form(ev.hessF, d);
  for (std::size_t i = 0; i < p; ++i) obj[1 + i] = quad_form(ev.hessG[i], d);
  obj[1 + p] = quad_form(ev.hessf, d) - data.phi_curvature(ev.x_part(d));
  for (std::size_t i = 0; i < q; ++i) obj[2 + p + i] = quad_form(ev.hessg[i], d);
  auto r = lp_solve(obj, P, Sense::maximize);
  if (r.status == LpStatus::infeasible) return ExtendedValue::minus_infinity();
  if (r.status == LpStatus::unbounded) return ExtendedValue::plus_infinity();
  return {0, r.value};
}

/// sup over the KKT multipliers of d^T grad^2 L^vf(1, nu) d.
inline ExtendedValue sosc_value(const VfLagrangianData& data, const Vector& d) {
  if (data.vertices.empty()) return ExtendedValue::minus_infinity();
  for (const auto& r : data.rays)
    if (data.curvature(0, r, d).sign() > 0) return ExtendedValue::plus_infinity();
  Scalar best = data.curvature(1, data.vertices.front(), d);
  for (const auto& v : data.vertices) best = std::max(best, data.curvature(1, v, d));
  return {0, best};
}

/// Dual route: the Fritz-John condition over the critical cone, with the classical SOSC reported.
inline Certificate dual_sosc(const PointEvaluation& ev, const ValueFunctionModel& model, const ConePieces& critical,
                             const ScanOptions& opt = {}) {
  auto data = vf_lagrangian_data(ev, model);
  if (!data.available) return inapplicable("so-dual", data.reason);
  Certificate cert;
  cert.condition = "so-dual";
  cert.route = "Fritz-John multipliers of the value-function reformulation";
  cert.variables = direction_names(ev.n, ev.m);
  scan_cone(cert, critical, [&](const Vector& d) { return fritz_john_value(data, d); }, opt);
  auto& det = cert.details;
  det["multipliers_nonempty"] = !data.vertices.empty();
  det["multiplier_vertices"] = nlohmann::ordered_json::array();
  for (const auto& v : data.vertices) {
    nlohmann::ordered_json entry;
    entry["nu"] = to_json(v);
    if (auto H = data.hessian_at(v)) entry["hessian"] = to_json(*H);
    det["multiplier_vertices"].push_back(entry);
  }
  det["multiplier_rays"] = nlohmann::ordered_json::array();
  for (const auto& r : data.rays) det["multiplier_rays"].push_back(to_json(r));
  Certificate sosc;
  if (data.vertices.empty()) {
    det["sosc"] = "inapplicable";
    det["sosc_reason"] = "no multiplier with sigma = 1";
  } else {
    scan_cone(sosc, critical, [&](const Vector& d) { return sosc_value(data, d); }, opt);
    det["sosc"] = to_string(sosc.verdict);
    det["sosc_reason"] = sosc.reason;
  }
  det["density"] = opt.density;
  det["margin"] = opt.margin;
  return cert;
}

inline Certificate certify_second_order_dual(const BilevelInstance& inst, const PointEvaluation& ev,
                                             const ValueFunctionModel& model, const ScanOptions& opt = {}) {
  if (!model.available) return inapplicable("so-dual", "value-function model unavailable: " + model.reason);
  ConePieces lin = build_linearization_cone(ev, model);
  Certificate pre;
  record_second_order_hypotheses(pre, inst, ev, model, lin);
  if (!hypotheses_usable(pre)) {
    pre.condition = "so-dual";
    return pre;
  }
  Certificate cert = dual_sosc(ev, model, build_critical_cone(ev, model), opt);
  if (cert.verdict == Verdict::inapplicable) return cert;
  cert.assumptions = pre.assumptions;
  for (auto& [k, v] : pre.details.items()) cert.details[k] = v;
  return cert;
}

/// Nonsmooth KKT system of the value-function reformulation.
struct KktPointResult {
  bool is_kkt = false;
  Vector nu_G;
  Scalar nu_vf;
  Vector nu_g;
  Vector theta;                    ///< weights on the subdifferential generators, summing to nu_vf
  std::optional<Vector> separating;  ///< d with the linearized constraints and grad F^T d < 0
};

inline KktPointResult kkt_point_check(const PointEvaluation& ev, const ValueFunctionModel& model) {
  if (!model.available) throw std::logic_error("value-function model unavailable: " + model.reason);
  auto gens = subdifferential_polytope(model);
  std::size_t p = ev.p(), q = ev.q(), n = ev.n, N = ev.dim(), K = gens.size();
  std::size_t w = p + 1 + q + K;
  Polyhedron P(w);
  for (std::size_t k = 0; k < N; ++k) {
    Vector row = zeros(w);
    for (std::size_t i = 0; i < p; ++i) row[i] = ev.gradG[i][k];
    row[p] = ev.gradf[k];
    for (std::size_t i = 0; i < q; ++i) row[p + 1 + i] = ev.gradg[i][k];
    if (k < n)
      for (std::size_t j = 0; j < K; ++j) row[p + 1 + q + j] = -gens[j][k];
    P.add_eq(row, -ev.gradF[k]);
  }
  Vector sum = zeros(w);
  sum[p] = 1;
  for (std::size_t j = 0; j < K; ++j) sum[p + 1 + q + j] = -1;
  P.add_eq(sum, 0);
  for (std::size_t j = 0; j < w; ++j) P.add_ineq(unit(w, j, -1), 0);
  for (std::size_t i = 0; i < p; ++i)
    if (!ev.is_active_G(i)) P.add_eq(unit(w, i), 0);
  for (std::size_t i = 0; i < q; ++i)
    if (!ev.is_active_g(i)) P.add_eq(unit(w, p + 1 + i), 0);
  KktPointResult out;
  if (auto z = feasible_point(P)) {
    out.is_kkt = true;
    out.nu_G = Vector(z->begin(), z->begin() + long(p));
    out.nu_vf = (*z)[p];
    out.nu_g = Vector(z->begin() + long(p + 1), z->begin() + long(p + 1 + q));
    out.theta = Vector(z->begin() + long(p + 1 + q), z->end());
    return out;
  }
  // Farkas alternative over (d, s): linearized constraints, grad f^T d + s <= 0, -a_k^T dx - s <= 0
  Polyhedron D(N + 1);
  for (auto i : ev.active_G) D.add_ineq(fo_detail::embed(ev.gradG[i], N + 1), 0);
  for (auto i : ev.active_g) D.add_ineq(fo_detail::embed(ev.gradg[i], N + 1), 0);
  Vector frow = fo_detail::embed(ev.gradf, N + 1);
  frow[N] = 1;
  D.add_ineq(frow, 0);
  for (const auto& a : gens) {
    Vector r = zeros(N + 1);
    for (std::size_t k = 0; k < n; ++k) r[k] = -a[k];
    r[N] = -1;
    D.add_ineq(r, 0);
  }
  for (std::size_t j = 0; j < N; ++j) {
    D.add_ineq(unit(N + 1, j), 1);
    D.add_ineq(unit(N + 1, j, -1), 1);
  }
  auto r = lp_solve(fo_detail::embed(ev.gradF, N + 1), D, Sense::minimize);
  if (r.status == LpStatus::optimal && r.value.sign() < 0)
    out.separating = Vector(r.point.begin(), r.point.begin() + long(N));
  return out;
}

}  // namespace bilevel
