#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "numeric.hpp"

namespace bilevel {

class UnboundedPolytopeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// {x in R^dim | A x <= b, E x = e}.
struct Polyhedron {
  Matrix A;
  Vector b;
  Matrix E;
  Vector e;
  std::size_t dim = 0;

  Polyhedron() = default;
  explicit Polyhedron(std::size_t d) : A(0, d), E(0, d), dim(d) {}

  Polyhedron& add_ineq(const Vector& row, const Scalar& rhs) {
    if (row.size() != dim) throw DimensionError("inequality row has wrong length");
    A.append_row(row);
    b.push_back(rhs);
    return *this;
  }
  Polyhedron& add_eq(const Vector& row, const Scalar& rhs) {
    if (row.size() != dim) throw DimensionError("equality row has wrong length");
    E.append_row(row);
    e.push_back(rhs);
    return *this;
  }
  /// Adds lo <= x_j <= hi for every coordinate.
  Polyhedron& add_box(const Scalar& lo, const Scalar& hi) {
    for (std::size_t j = 0; j < dim; ++j) {
      add_ineq(unit(dim, j), hi);
      add_ineq(unit(dim, j, -1), -lo);
    }
    return *this;
  }
  Polyhedron intersect(const Polyhedron& o) const {
    if (o.dim != dim) throw DimensionError("intersecting polyhedra of different dimension");
    Polyhedron r = *this;
    for (std::size_t i = 0; i < o.A.rows(); ++i) r.add_ineq(o.A.row(i), o.b[i]);
    for (std::size_t i = 0; i < o.E.rows(); ++i) r.add_eq(o.E.row(i), o.e[i]);
    return r;
  }
  bool contains(const Vector& x) const {
    if (x.size() != dim) throw DimensionError("point has wrong dimension");
    auto ax = A * x;
    for (std::size_t i = 0; i < ax.size(); ++i)
      if (ax[i] > b[i]) return false;
    auto ex = E * x;
    for (std::size_t i = 0; i < ex.size(); ++i)
      if (ex[i] != e[i]) return false;
    return true;
  }
  void check() const {
    if (A.cols() != dim || E.cols() != dim || A.rows() != b.size() || E.rows() != e.size())
      throw DimensionError("inconsistent polyhedron data");
  }
};

/// {d | A d <= 0, E d = 0}.
struct PolyhedralCone {
  Matrix A;
  Matrix E;
  std::size_t dim = 0;

  PolyhedralCone() = default;
  explicit PolyhedralCone(std::size_t d) : A(0, d), E(0, d), dim(d) {}

  PolyhedralCone& add_ineq(const Vector& row) {
    if (row.size() != dim) throw DimensionError("cone row has wrong length");
    A.append_row(row);
    return *this;
  }
  PolyhedralCone& add_eq(const Vector& row) {
    if (row.size() != dim) throw DimensionError("cone row has wrong length");
    E.append_row(row);
    return *this;
  }
  Polyhedron polyhedron() const {
    Polyhedron p(dim);
    for (std::size_t i = 0; i < A.rows(); ++i) p.add_ineq(A.row(i), 0);
    for (std::size_t i = 0; i < E.rows(); ++i) p.add_eq(E.row(i), 0);
    return p;
  }
  bool contains(const Vector& d) const { return polyhedron().contains(d); }
};

enum class LpStatus { optimal, unbounded, infeasible };
enum class Sense { minimize, maximize };

inline const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::unbounded: return "unbounded";
    case LpStatus::infeasible: return "infeasible";
  }
  return "?";
}

/// Result of lp_solve with its certificate.
///
/// Optimal: `point` attains `value`; `dual` = (y_ineq, y_eq) with y_ineq >= 0,
/// A^T y_ineq + E^T y_eq = s c and b^T y_ineq + e^T y_eq = s value, where s = +1
/// for maximization and -1 for minimization.
/// Unbounded: `point` is feasible and `ray` is a recession direction that strictly
/// improves the objective.
/// Infeasible: `farkas` = (z_ineq, z_eq) with z_ineq >= 0, A^T z_ineq + E^T z_eq = 0
/// and b^T z_ineq + e^T z_eq = -1.
struct LpOutcome {
  LpStatus status = LpStatus::infeasible;
  Scalar value;
  Vector point;
  Vector ray;
  Vector farkas;
  Vector dual;
};

namespace detail {

class Tableau {
 public:
  Tableau(const Polyhedron& P) : d_(P.dim), mA_(P.A.rows()), mE_(P.E.rows()) {
    rows_ = mA_ + mE_;
    nstruct_ = 2 * d_ + mA_;
    cols_ = nstruct_ + rows_;
    T_ = Matrix(rows_, cols_);
    rhs_.assign(rows_, Scalar(0));
    flip_.assign(rows_, Scalar(1));
    for (std::size_t i = 0; i < rows_; ++i) {
      bool ineq = i < mA_;
      const Matrix& M = ineq ? P.A : P.E;
      std::size_t r = ineq ? i : i - mA_;
      Scalar rhs = ineq ? P.b[r] : P.e[r];
      if (rhs.sign() < 0) flip_[i] = -1;
      for (std::size_t j = 0; j < d_; ++j) {
        T_(i, j) = flip_[i] * M(r, j);
        T_(i, d_ + j) = -flip_[i] * M(r, j);
      }
      if (ineq) T_(i, 2 * d_ + i) = flip_[i];
      T_(i, nstruct_ + i) = 1;
      rhs_[i] = flip_[i] * rhs;
    }
    basis_.resize(rows_);
    for (std::size_t i = 0; i < rows_; ++i) basis_[i] = nstruct_ + i;
  }

  /// Runs Bland's rule on the given column costs. Returns the entering column on unboundedness.
  std::optional<std::size_t> optimize(const Vector& cost, bool allow_artificial) {
    for (;;) {
      auto rc = reduced_costs(cost);
      std::optional<std::size_t> enter;
      std::size_t limit = allow_artificial ? cols_ : nstruct_;
      for (std::size_t j = 0; j < limit; ++j) {
        if (rc[j].sign() < 0) { enter = j; break; }
      }
      if (!enter) return std::nullopt;
      std::size_t q = *enter;
      std::optional<std::size_t> leave;
      Scalar best;
      for (std::size_t i = 0; i < rows_; ++i) {
        if (T_(i, q).sign() <= 0) continue;
        Scalar ratio = rhs_[i] / T_(i, q);
        if (!leave || ratio < best || (ratio == best && basis_[i] < basis_[*leave])) {
          leave = i;
          best = ratio;
        }
      }
      if (!leave) return q;
      pivot(*leave, q);
    }
  }

  Vector reduced_costs(const Vector& cost) const {
    Vector rc(cols_);
    for (std::size_t j = 0; j < cols_; ++j) {
      Scalar acc = cost[j];
      for (std::size_t i = 0; i < rows_; ++i) {
        const Scalar& cb = cost[basis_[i]];
        if (!cb.is_zero() && !T_(i, j).is_zero()) acc -= cb * T_(i, j);
      }
      rc[j] = acc;
    }
    return rc;
  }

  void pivot(std::size_t r, std::size_t q) {
    Scalar inv = Scalar(1) / T_(r, q);
    for (std::size_t j = 0; j < cols_; ++j)
      if (!T_(r, j).is_zero()) T_(r, j) *= inv;
    rhs_[r] *= inv;
    for (std::size_t i = 0; i < rows_; ++i) {
      if (i == r || T_(i, q).is_zero()) continue;
      Scalar f = T_(i, q);
      for (std::size_t j = 0; j < cols_; ++j)
        if (!T_(r, j).is_zero()) T_(i, j) -= f * T_(r, j);
      rhs_[i] -= f * rhs_[r];
    }
    basis_[r] = q;
  }

  /// Pivots zero-valued artificial variables out of the basis where a structural column allows it.
  void drive_out_artificials() {
    for (std::size_t i = 0; i < rows_; ++i) {
      if (basis_[i] < nstruct_) continue;
      for (std::size_t j = 0; j < nstruct_; ++j) {
        if (!T_(i, j).is_zero()) { pivot(i, j); break; }
      }
    }
  }

  Vector primal_u() const {
    Vector u = zeros(cols_);
    for (std::size_t i = 0; i < rows_; ++i) u[basis_[i]] = rhs_[i];
    return u;
  }
  Vector x_of(const Vector& u) const {
    Vector x(d_);
    for (std::size_t j = 0; j < d_; ++j) x[j] = u[j] - u[d_ + j];
    return x;
  }
  Vector ray_u(std::size_t q) const {
    Vector u = zeros(cols_);
    u[q] = 1;
    for (std::size_t i = 0; i < rows_; ++i) u[basis_[i]] = -T_(i, q);
    return u;
  }
  /// Row multipliers y of the (unflipped) system read off the artificial reduced costs.
  Vector row_duals(const Vector& rc, bool phase_one) const {
    Vector y(rows_);
    for (std::size_t i = 0; i < rows_; ++i) {
      Scalar yi = phase_one ? Scalar(1) - rc[nstruct_ + i] : -rc[nstruct_ + i];
      y[i] = flip_[i] * yi;
    }
    return y;
  }

  std::size_t dim() const { return d_; }
  std::size_t cols() const { return cols_; }
  std::size_t nstruct() const { return nstruct_; }
  std::size_t rows() const { return rows_; }
  std::size_t ineq_rows() const { return mA_; }

 private:
  std::size_t d_, mA_, mE_, rows_ = 0, nstruct_ = 0, cols_ = 0;
  Matrix T_;
  Vector rhs_;
  Vector flip_;
  std::vector<std::size_t> basis_;
};

}  // namespace detail

/// Exact LP over a polyhedron with free variables (Bland's rule, two phases).
inline LpOutcome lp_solve(const Vector& objective, const Polyhedron& region, Sense sense) {
  region.check();
  if (objective.size() != region.dim)
    throw DimensionError("lp_solve: objective has " + std::to_string(objective.size()) +
                         " entries, region dimension is " + std::to_string(region.dim));
  detail::Tableau tab(region);
  const std::size_t d = region.dim;
  LpOutcome out;

  Vector phase1 = zeros(tab.cols());
  for (std::size_t j = tab.nstruct(); j < tab.cols(); ++j) phase1[j] = 1;
  tab.optimize(phase1, true);
  Vector u = tab.primal_u();
  Scalar infeas = 0;
  for (std::size_t j = tab.nstruct(); j < tab.cols(); ++j) infeas += u[j];
  if (infeas.sign() > 0) {
    Vector y = tab.row_duals(tab.reduced_costs(phase1), true);
    // y certifies A'^T y <= 0 on structural columns with b^T y = infeas > 0; negate and scale.
    Scalar scale = Scalar(1) / infeas;
    out.status = LpStatus::infeasible;
    out.farkas.resize(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) out.farkas[i] = -y[i] * scale;
    return out;
  }
  tab.drive_out_artificials();

  Scalar s = sense == Sense::maximize ? Scalar(1) : Scalar(-1);
  Vector cost = zeros(tab.cols());
  for (std::size_t j = 0; j < d; ++j) {
    cost[j] = -s * objective[j];
    cost[d + j] = s * objective[j];
  }
  auto unbounded = tab.optimize(cost, false);
  u = tab.primal_u();
  out.point = tab.x_of(u);
  if (unbounded) {
    out.status = LpStatus::unbounded;
    out.ray = tab.x_of(tab.ray_u(*unbounded));
    return out;
  }
  out.status = LpStatus::optimal;
  out.value = dot(objective, out.point);
  Vector y = tab.row_duals(tab.reduced_costs(cost), false);
  out.dual.resize(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out.dual[i] = -y[i];
  return out;
}

inline std::optional<Vector> feasible_point(const Polyhedron& P) {
  auto r = lp_solve(zeros(P.dim), P, Sense::minimize);
  if (r.status == LpStatus::infeasible) return std::nullopt;
  return r.point;
}

inline bool is_feasible(const Polyhedron& P) { return feasible_point(P).has_value(); }

/// Answer of a triviality test: `trivial`, or a witness member.
struct TrivialityVerdict {
  bool trivial = true;
  Vector witness;
  explicit operator bool() const { return trivial; }
};

/// Trivial iff every member vanishes on `coords` (all coordinates when `coords` is empty).
inline TrivialityVerdict cone_trivial_in_projection(const PolyhedralCone& C,
                                                    const std::vector<std::size_t>& coords) {
  Polyhedron boxed = C.polyhedron();
  boxed.add_box(-1, 1);
  for (auto j : coords) {
    if (j >= C.dim) throw DimensionError("projection coordinate out of range");
    for (Sense sense : {Sense::maximize, Sense::minimize}) {
      auto r = lp_solve(unit(C.dim, j), boxed, sense);
      if (r.status == LpStatus::optimal && !r.value.is_zero()) {
        Scalar n = max_norm(r.point);
        return {false, (Scalar(1) / n) * r.point};
      }
    }
  }
  return {true, {}};
}

inline TrivialityVerdict cone_is_trivial(const PolyhedralCone& C) {
  std::vector<std::size_t> all(C.dim);
  for (std::size_t j = 0; j < C.dim; ++j) all[j] = j;
  return cone_trivial_in_projection(C, all);
}

/// Conic generators: the cone {R^T mu + L^T nu | mu >= 0} spanned by the rows of `rays` and `lines`.
struct ConeGenerators {
  std::vector<Vector> rays;
  std::vector<Vector> lines;
  std::size_t dim = 0;

  bool contains(const Vector& v) const {
    std::size_t k = rays.size() + lines.size();
    Polyhedron P(k);
    for (std::size_t j = 0; j < dim; ++j) {
      Vector row(k);
      for (std::size_t i = 0; i < rays.size(); ++i) row[i] = rays[i][j];
      for (std::size_t i = 0; i < lines.size(); ++i) row[rays.size() + i] = lines[i][j];
      P.add_eq(row, v[j]);
    }
    for (std::size_t i = 0; i < rays.size(); ++i) P.add_ineq(unit(k, i, -1), 0);
    return is_feasible(P);
  }
  /// The polar of the generated cone, {d | r^T d <= 0, l^T d = 0}.
  PolyhedralCone polar() const {
    PolyhedralCone C(dim);
    for (const auto& r : rays) C.add_ineq(r);
    for (const auto& l : lines) C.add_eq(l);
    return C;
  }
};

/// Polar of {d | A d <= 0, E d = 0}: generated by the rows of A (rays) and E (lines).
inline ConeGenerators polar_cone(const PolyhedralCone& C) {
  ConeGenerators g;
  g.dim = C.dim;
  for (std::size_t i = 0; i < C.A.rows(); ++i) g.rays.push_back(C.A.row(i));
  for (std::size_t i = 0; i < C.E.rows(); ++i) g.lines.push_back(C.E.row(i));
  return g;
}

namespace detail {

inline void for_each_subset(std::size_t n, std::size_t k,
                            const std::function<void(const std::vector<std::size_t>&)>& fn) {
  if (k > n) return;
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  for (;;) {
    fn(idx);
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

inline void sort_unique(std::vector<Vector>& pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
}

}  // namespace detail

/// All basic feasible points (vertices) of P without any boundedness requirement.
inline std::vector<Vector> basic_feasible_points(const Polyhedron& P) {
  P.check();
  std::size_t rE = rank(P.E);
  std::vector<Vector> out;
  if (rE > P.dim) return out;
  std::size_t need = P.dim - rE;
  detail::for_each_subset(P.A.rows(), need, [&](const std::vector<std::size_t>& S) {
    Matrix M = P.A.select_rows(S).vstack(P.E);
    if (M.rows() == 0 && P.dim > 0) return;
    if (rank(M) != P.dim) return;
    Vector rhs;
    for (auto i : S) rhs.push_back(P.b[i]);
    rhs.insert(rhs.end(), P.e.begin(), P.e.end());
    auto x = solve_linear(M, rhs);
    if (x && P.contains(*x)) out.push_back(*x);
  });
  if (P.dim == 0 && P.contains({})) out.push_back({});
  detail::sort_unique(out);
  return out;
}

inline bool is_bounded(const Polyhedron& P) {
  for (std::size_t j = 0; j < P.dim; ++j)
    for (Sense s : {Sense::maximize, Sense::minimize})
      if (lp_solve(unit(P.dim, j), P, s).status == LpStatus::unbounded) return false;
  return true;
}

/// Vertices of a bounded polyhedron, lexicographically sorted.
inline std::vector<Vector> vertices(const Polyhedron& P) {
  if (!is_bounded(P)) throw UnboundedPolytopeError("vertices: polyhedron is unbounded");
  return basic_feasible_points(P);
}

/// Extreme-ray representatives with max-norm 1. A cone whose lineality space is a line
/// reports both directions of that line.
inline std::vector<Vector> extreme_rays(const PolyhedralCone& C) {
  std::size_t d = C.dim;
  std::vector<Vector> out;
  if (d == 0) return out;
  std::size_t rE = rank(C.E);
  if (rE >= d) return out;
  std::size_t need = d - 1 - rE;
  detail::for_each_subset(C.A.rows(), need, [&](const std::vector<std::size_t>& S) {
    Matrix M = C.A.select_rows(S).vstack(C.E);
    if (M.rows() == 0) {
      if (d != 1) return;
      for (int s : {1, -1}) {
        Vector r{Scalar(s)};
        if (C.contains(r)) out.push_back(r);
      }
      return;
    }
    if (rank(M) != d - 1) return;
    auto ker = kernel_basis(M);
    Vector r = ker.front();
    r = (Scalar(1) / max_norm(r)) * r;
    for (int s : {1, -1}) {
      Vector cand = Scalar(s) * r;
      if (C.contains(cand)) out.push_back(cand);
    }
  });
  detail::sort_unique(out);
  return out;
}

/// Generators of a general polyhedral cone: lineality basis as lines plus the extreme rays
/// of the pointed part C intersected with the orthogonal complement of the lineality space.
inline ConeGenerators cone_generators(const PolyhedralCone& C) {
  ConeGenerators g;
  g.dim = C.dim;
  Matrix AE = C.A.vstack(C.E);
  if (AE.rows() == 0) AE = Matrix(0, C.dim);
  auto lin = kernel_basis(AE);
  PolyhedralCone pointed = C;
  for (const auto& l : lin) {
    g.lines.push_back(l);
    pointed.add_eq(l);
  }
  g.rays = extreme_rays(pointed);
  return g;
}

/// True iff 0 lies in the interior of the convex hull of `points`.
inline bool contains_zero_in_interior_of_hull(const std::vector<Vector>& points) {
  if (points.empty()) throw DimensionError("contains_zero_in_interior_of_hull: empty point list");
  std::size_t d = points.front().size();
  std::size_t k = points.size();
  for (std::size_t j = 0; j < d; ++j) {
    for (int s : {1, -1}) {
      // variables (theta_1..theta_k, t): sum theta_i p_i = t s e_j, sum theta = 1, theta >= 0
      Polyhedron P(k + 1);
      for (std::size_t c = 0; c < d; ++c) {
        Vector row(k + 1);
        for (std::size_t i = 0; i < k; ++i) {
          if (points[i].size() != d) throw DimensionError("points of mixed dimension");
          row[i] = points[i][c];
        }
        row[k] = c == j ? Scalar(-s) : Scalar(0);
        P.add_eq(row, 0);
      }
      Vector ones(k + 1, Scalar(1));
      ones[k] = 0;
      P.add_eq(ones, 1);
      for (std::size_t i = 0; i < k; ++i) P.add_ineq(unit(k + 1, i, -1), 0);
      auto r = lp_solve(unit(k + 1, k), P, Sense::maximize);
      if (r.status != LpStatus::optimal || r.value.sign() <= 0) return false;
    }
  }
  return true;
}

/// One complementarity pair u^T z >= 0, v^T z <= 0, (u^T z)(v^T z) = 0.
struct ComplementarityPair {
  Vector u;
  Vector v;
};

/// Branch k has bit i clear for {u_i = 0, v_i <= 0} and set for {u_i >= 0, v_i = 0}.
inline std::vector<Polyhedron> decompose_complementarity(const Polyhedron& base,
                                                         const std::vector<ComplementarityPair>& pairs) {
  if (pairs.size() > 20) throw DimensionError("too many complementarity pairs");
  std::vector<Polyhedron> out;
  std::size_t k = pairs.size();
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << k); ++mask) {
    Polyhedron P = base;
    for (std::size_t i = 0; i < k; ++i) {
      const auto& pr = pairs[i];
      if (pr.u.size() != base.dim || pr.v.size() != base.dim)
        throw DimensionError("complementarity form has wrong length");
      if (mask & (std::uint64_t{1} << i)) {
        P.add_ineq(Scalar(-1) * pr.u, 0);
        P.add_eq(pr.v, 0);
      } else {
        P.add_eq(pr.u, 0);
        P.add_ineq(pr.v, 0);
      }
    }
    out.push_back(std::move(P));
  }
  return out;
}

inline PolyhedralCone as_cone(const Polyhedron& P) {
  PolyhedralCone C(P.dim);
  for (std::size_t i = 0; i < P.A.rows(); ++i) {
    if (!P.b[i].is_zero()) throw DimensionError("as_cone: nonzero right-hand side");
    C.add_ineq(P.A.row(i));
  }
  for (std::size_t i = 0; i < P.E.rows(); ++i) {
    if (!P.e[i].is_zero()) throw DimensionError("as_cone: nonzero right-hand side");
    C.add_eq(P.E.row(i));
  }
  return C;
}

}  // namespace bilevel
