#pragma once

#include <optional>
#include <vector>

#include "polyhedral.hpp"

namespace bilevel {

/// Exact positive-semidefiniteness test for a symmetric rational matrix (symmetric elimination).
inline bool is_psd(Matrix M) {
  std::size_t n = M.rows();
  std::vector<bool> alive(n, true);
  for (std::size_t step = 0; step < n; ++step) {
    std::optional<std::size_t> piv;
    for (std::size_t i = 0; i < n; ++i) {
      if (!alive[i]) continue;
      if (M(i, i).sign() < 0) return false;
      if (M(i, i).sign() > 0 && !piv) piv = i;
    }
    if (!piv) {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          if (alive[i] && alive[j] && !M(i, j).is_zero()) return false;
      return true;
    }
    std::size_t p = *piv;
    alive[p] = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (!alive[i] || M(i, p).is_zero()) continue;
      Scalar f = M(i, p) / M(p, p);
      for (std::size_t j = 0; j < n; ++j)
        if (alive[j]) M(i, j) -= f * M(p, j);
    }
  }
  return true;
}

inline Matrix symmetrize(const Matrix& H) {
  return (H + H.transpose()).scaled(Scalar(1, 2));
}

enum class QpStatus { optimal, unbounded, infeasible, undetermined };

inline const char* to_string(QpStatus s) {
  switch (s) {
    case QpStatus::optimal: return "optimal";
    case QpStatus::unbounded: return "unbounded";
    case QpStatus::infeasible: return "infeasible";
    case QpStatus::undetermined: return "undetermined";
  }
  return "?";
}

/// Global minimum of x^T H x + g^T x over P. `ray` is a feasible direction of
/// unbounded decrease when status is unbounded.
struct QpOutcome {
  QpStatus status = QpStatus::infeasible;
  Scalar value;
  Vector point;
  Vector ray;
};

struct CopositivityVerdict {
  bool strict = false;
  Scalar min_value;  ///< minimum of r^T H r over the pieces {r in C, r_j = +-1, |r| <= 1}
  Vector witness;    ///< minimizing direction when not strict
};

inline QpOutcome minimize_quadratic(const Matrix& H, const Vector& g, const Polyhedron& P);

/// Decides r^T H r > 0 for all nonzero r in C exactly.
inline CopositivityVerdict strictly_copositive(const Matrix& H, const PolyhedralCone& C) {
  CopositivityVerdict out;
  Matrix Hs = symmetrize(H);
  bool first = true;
  for (std::size_t j = 0; j < C.dim; ++j) {
    for (int s : {1, -1}) {
      Polyhedron piece = C.polyhedron();
      piece.add_box(-1, 1);
      piece.add_eq(unit(C.dim, j), s);
      auto r = minimize_quadratic(Hs, zeros(C.dim), piece);
      if (r.status != QpStatus::optimal) continue;
      if (first || r.value < out.min_value) {
        out.min_value = r.value;
        out.witness = r.point;
        first = false;
      }
    }
  }
  out.strict = first || out.min_value.sign() > 0;
  if (first) out.witness.clear();
  return out;
}

namespace detail {

inline QpOutcome minimize_bounded_quadratic(const Matrix& H, const Vector& g, const Polyhedron& P) {
  const std::size_t d = P.dim;
  QpOutcome best;
  best.status = QpStatus::infeasible;
  std::size_t rE = rank(P.E);
  if (rE > d) return best;
  for (std::size_t k = 0; k + rE <= d; ++k) {
    for_each_subset(P.A.rows(), k, [&](const std::vector<std::size_t>& S) {
      Matrix M = P.A.select_rows(S).vstack(P.E);
      if (M.rows() == 0) M = Matrix(0, d);
      if (rank(M) != S.size() + rE) return;
      auto Zcols = kernel_basis(M);
      Polyhedron stat = P;
      for (auto i : S) stat.add_eq(P.A.row(i), P.b[i]);
      if (!Zcols.empty()) {
        Matrix Z(d, Zcols.size());
        for (std::size_t c = 0; c < Zcols.size(); ++c)
          for (std::size_t r = 0; r < d; ++r) Z(r, c) = Zcols[c][r];
        Matrix Zt = Z.transpose();
        if (!is_psd(Zt * H * Z)) return;
        Matrix G = Zt * H.scaled(2);
        Vector rhs = Zt * g;
        for (std::size_t r = 0; r < G.rows(); ++r) stat.add_eq(G.row(r), -rhs[r]);
      }
      auto x = feasible_point(stat);
      if (!x) return;
      Scalar v = quad_form(H, *x) + dot(g, *x);
      if (best.status == QpStatus::infeasible || v < best.value) {
        best.status = QpStatus::optimal;
        best.value = v;
        best.point = *x;
      }
    });
  }
  return best;
}

}  // namespace detail

/// Exact global minimization by enumerating faces and their stationary sets.
///
/// Boundedness on an unbounded P is decided exactly when H is positive semidefinite;
/// otherwise strict copositivity on the recession cone proves boundedness, a
/// negative-curvature recession direction proves unboundedness, and the remaining
/// borderline case is reported as undetermined.
inline QpOutcome minimize_quadratic(const Matrix& Hin, const Vector& g, const Polyhedron& P) {
  P.check();
  if (Hin.rows() != P.dim || Hin.cols() != P.dim || g.size() != P.dim)
    throw DimensionError("minimize_quadratic: size mismatch");
  Matrix H = symmetrize(Hin);
  QpOutcome out;
  auto start = feasible_point(P);
  if (!start) return out;
  if (!is_bounded(P)) {
    PolyhedralCone rec(P.dim);
    for (std::size_t i = 0; i < P.A.rows(); ++i) rec.add_ineq(P.A.row(i));
    for (std::size_t i = 0; i < P.E.rows(); ++i) rec.add_eq(P.E.row(i));
    if (is_psd(H)) {
      Polyhedron flat = rec.polyhedron();
      for (std::size_t r = 0; r < H.rows(); ++r) flat.add_eq(H.row(r), 0);
      flat.add_box(-1, 1);
      auto lin = lp_solve(g, flat, Sense::minimize);
      if (lin.value.sign() < 0) {
        out.status = QpStatus::unbounded;
        out.point = *start;
        out.ray = lin.point;
        return out;
      }
    } else {
      auto cop = strictly_copositive(H, rec);
      if (!cop.strict) {
        out.point = *start;
        out.ray = cop.witness;
        out.status = cop.min_value.sign() < 0 ? QpStatus::unbounded : QpStatus::undetermined;
        return out;
      }
    }
  }
  return detail::minimize_bounded_quadratic(H, g, P);
}

}  // namespace bilevel
