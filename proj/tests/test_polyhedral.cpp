#include <gtest/gtest.h>

#include <random>

#include "bilevel/polyhedral.hpp"
#include "bilevel/quadratic.hpp"

using namespace bilevel;

namespace {

Polyhedron interval(const Scalar& lo, const Scalar& hi) {
  Polyhedron P(1);
  P.add_ineq({1}, hi).add_ineq({-1}, -lo);
  return P;
}

/// Checks the certificate carried by an LP outcome exactly.
void expect_certified(const LpOutcome& r, const Vector& c, const Polyhedron& P, Sense sense) {
  switch (r.status) {
    case LpStatus::optimal: {
      ASSERT_TRUE(P.contains(r.point));
      EXPECT_EQ(dot(c, r.point), r.value);
      Scalar s = sense == Sense::maximize ? Scalar(1) : Scalar(-1);
      std::size_t mA = P.A.rows();
      Vector yA(r.dual.begin(), r.dual.begin() + static_cast<long>(mA));
      Vector yE(r.dual.begin() + static_cast<long>(mA), r.dual.end());
      for (const auto& y : yA) EXPECT_GE(y, Scalar(0));
      Vector lhs = P.A.transpose() * yA + P.E.transpose() * yE;
      EXPECT_EQ(lhs, s * c);
      EXPECT_EQ(dot(P.b, yA) + dot(P.e, yE), s * r.value);
      break;
    }
    case LpStatus::unbounded: {
      ASSERT_TRUE(P.contains(r.point));
      EXPECT_TRUE(is_zero(P.E * r.ray));
      for (const auto& v : P.A * r.ray) EXPECT_LE(v, Scalar(0));
      Scalar gain = dot(c, r.ray);
      if (sense == Sense::maximize) EXPECT_GT(gain, Scalar(0));
      else EXPECT_LT(gain, Scalar(0));
      break;
    }
    case LpStatus::infeasible: {
      std::size_t mA = P.A.rows();
      Vector zA(r.farkas.begin(), r.farkas.begin() + static_cast<long>(mA));
      Vector zE(r.farkas.begin() + static_cast<long>(mA), r.farkas.end());
      for (const auto& z : zA) EXPECT_GE(z, Scalar(0));
      EXPECT_TRUE(is_zero(P.A.transpose() * zA + P.E.transpose() * zE));
      EXPECT_EQ(dot(P.b, zA) + dot(P.e, zE), Scalar(-1));
      break;
    }
  }
}

}  // namespace

TEST(LpSolve, MinOverUnitInterval) {
  auto r = lp_solve({1}, interval(0, 1), Sense::minimize);
  ASSERT_EQ(r.status, LpStatus::optimal);
  EXPECT_EQ(r.value, Scalar(0));
  EXPECT_EQ(r.point, Vector{0});
}

TEST(LpSolve, UnboundedRay) {
  Polyhedron P(1);
  P.add_ineq({-1}, 0);
  auto r = lp_solve({-1}, P, Sense::minimize);
  ASSERT_EQ(r.status, LpStatus::unbounded);
  EXPECT_EQ(r.ray, Vector{1});
}

TEST(LpSolve, InfeasibleWithFarkas) {
  Polyhedron P = interval(2, 1);
  auto r = lp_solve({1}, P, Sense::minimize);
  ASSERT_EQ(r.status, LpStatus::infeasible);
  expect_certified(r, {1}, P, Sense::minimize);
}

TEST(LpSolve, LowerLevelDualOfExample58) {
  // max (A xbar - b)^T lambda s.t. B^T lambda = -c, lambda >= 0 with the lower level
  // min xy over [0,1] written as y-rows -y <= 0, y <= 1 and parameter xbar = 0:
  // phi(0) = max{-b^T lambda | B^T lambda = -(A xbar + c)} with A xbar + c = 0.
  Polyhedron D(2);
  D.add_eq({-1, 1}, 0);
  D.add_ineq({-1, 0}, 0).add_ineq({0, -1}, 0);
  auto r = lp_solve({0, -1}, D, Sense::maximize);
  ASSERT_EQ(r.status, LpStatus::optimal);
  EXPECT_EQ(r.value, Scalar(0));
  Scalar best;
  bool first = true;
  for (const auto& v : basic_feasible_points(D)) {
    Scalar val = dot(Vector{0, -1}, v);
    if (first || val > best) best = val;
    first = false;
  }
  EXPECT_EQ(best, r.value);
}

TEST(LpSolve, DimensionMismatch) {
  EXPECT_THROW(lp_solve({1, 2}, interval(0, 1), Sense::minimize), DimensionError);
}

TEST(LpSolve, DeterministicAcrossCalls) {
  Polyhedron P(2);
  P.add_ineq({1, 1}, 1).add_ineq({-1, 0}, 0).add_ineq({0, -1}, 0);
  auto a = lp_solve({1, 1}, P, Sense::maximize);
  auto b = lp_solve({1, 1}, P, Sense::maximize);
  EXPECT_EQ(a.point, b.point);
  EXPECT_EQ(a.dual, b.dual);
}

TEST(LpSolve, PropertyStrongDualityCertificates) {
  std::mt19937 rng(2024);
  std::uniform_int_distribution<int> coef(-3, 3), dim(1, 4), rows(1, 6), eqs(0, 1);
  int counts[3] = {0, 0, 0};
  for (int trial = 0; trial < 250; ++trial) {
    std::size_t d = static_cast<std::size_t>(dim(rng));
    Polyhedron P(d);
    int m = rows(rng);
    for (int i = 0; i < m; ++i) {
      Vector row(d);
      for (auto& x : row) x = coef(rng);
      P.add_ineq(row, coef(rng));
    }
    if (eqs(rng)) {
      Vector row(d);
      for (auto& x : row) x = coef(rng);
      P.add_eq(row, coef(rng));
    }
    Vector c(d);
    for (auto& x : c) x = coef(rng);
    Sense s = trial % 2 ? Sense::maximize : Sense::minimize;
    auto r = lp_solve(c, P, s);
    counts[static_cast<int>(r.status)]++;
    expect_certified(r, c, P, s);
  }
  EXPECT_GT(counts[0], 20);
  EXPECT_GT(counts[1], 10);
  EXPECT_GT(counts[2], 10);
}

TEST(ConeTrivial, NonnegativeAndNonpositive) {
  PolyhedralCone C(2);
  C.add_ineq({1, 0}).add_ineq({0, 1}).add_ineq({-1, 0}).add_ineq({0, -1});
  EXPECT_TRUE(cone_is_trivial(C).trivial);
}

TEST(ConeTrivial, Example33SystemBranches) {
  // 3dx + dy <= 0, -dy <= 0, and -min{dx,0} <= 0 split into dx >= 0 / dx <= 0 branches.
  for (int branch = 0; branch < 2; ++branch) {
    PolyhedralCone C(2);
    C.add_ineq({3, 1}).add_ineq({0, -1});
    if (branch == 0) C.add_ineq({-1, 0});
    else C.add_ineq({1, 0}).add_ineq({-1, 0});
    EXPECT_TRUE(cone_is_trivial(C).trivial) << "branch " << branch;
  }
}

TEST(ConeTrivial, HalfLineWitness) {
  PolyhedralCone C(1);
  C.add_ineq({1});
  auto v = cone_is_trivial(C);
  ASSERT_FALSE(v.trivial);
  EXPECT_EQ(v.witness, Vector{-1});
  EXPECT_TRUE(C.contains(v.witness));
}

TEST(ConeTrivialProjection, Coordinates) {
  PolyhedralCone C(2);
  C.add_eq({1, 0});
  EXPECT_TRUE(cone_trivial_in_projection(C, {0}).trivial);
  auto v = cone_trivial_in_projection(C, {1});
  ASSERT_FALSE(v.trivial);
  EXPECT_EQ(abs(v.witness[1]), Scalar(1));
  EXPECT_EQ(v.witness[0], Scalar(0));
}

TEST(PolarCone, NonpositiveOrthant) {
  PolyhedralCone C(2);
  C.add_ineq({1, 0}).add_ineq({0, 1});
  auto P = polar_cone(C);
  EXPECT_TRUE(P.contains({1, 0}));
  EXPECT_TRUE(P.contains({0, 1}));
  EXPECT_TRUE(P.contains({2, 3}));
  EXPECT_FALSE(P.contains({-1, 0}));
}

TEST(PolarCone, OriginHasFullPolar) {
  PolyhedralCone C(2);
  C.add_ineq({1, 0}).add_ineq({0, 1}).add_ineq({-1, 0}).add_ineq({0, -1});
  auto P = polar_cone(C);
  for (Vector v : {Vector{1, -7}, Vector{-3, 2}, Vector{0, 0}}) EXPECT_TRUE(P.contains(v));
}

TEST(PolarCone, HalfPlaneRaySampling) {
  PolyhedralCone C(2);
  C.add_ineq({1, 1});
  auto P = polar_cone(C);
  EXPECT_TRUE(P.contains({1, 1}));
  EXPECT_FALSE(P.contains({1, 0}));
  auto gens = cone_generators(C);
  std::vector<Vector> members = gens.rays;
  for (const auto& l : gens.lines) {
    members.push_back(l);
    members.push_back(Scalar(-1) * l);
  }
  for (const auto& d : members) EXPECT_LE(dot(Vector{1, 1}, d), Scalar(0));
}

TEST(Vertices, UnitSquare) {
  Polyhedron P(2);
  P.add_box(0, 1);
  auto V = vertices(P);
  std::vector<Vector> expect{{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  EXPECT_EQ(V, expect);
}

TEST(Vertices, LowerLevelOfExample58) {
  auto V = vertices(interval(0, 1));
  EXPECT_EQ(V, (std::vector<Vector>{{0}, {1}}));
}

TEST(Vertices, UnboundedThrows) {
  Polyhedron P(1);
  P.add_ineq({-1}, 0);
  EXPECT_THROW(vertices(P), UnboundedPolytopeError);
}

TEST(Vertices, PropertyHullOfSamples) {
  // 2-D polytopes from 5 random inequalities plus a bounding box; the vertex set must
  // coincide with the hull extremes of a dense exact boundary sample.
  std::mt19937 rng(99);
  std::uniform_int_distribution<int> coef(-4, 4), rhs(1, 6);
  int checked = 0;
  for (int trial = 0; trial < 220; ++trial) {
    Polyhedron P(2);
    for (int i = 0; i < 5; ++i) P.add_ineq({coef(rng), coef(rng)}, rhs(rng));
    P.add_box(-5, 5);
    auto V = vertices(P);
    ASSERT_FALSE(V.empty());
    for (const auto& v : V) {
      ASSERT_TRUE(P.contains(v));
      std::vector<std::size_t> tight;
      auto ax = P.A * v;
      for (std::size_t i = 0; i < ax.size(); ++i)
        if (ax[i] == P.b[i]) tight.push_back(i);
      EXPECT_EQ(rank(P.A.select_rows(tight)), 2u);
    }
    // Sample: points maximizing many directions exactly are vertices (LP attains at extremes).
    for (int k = 0; k < 16; ++k) {
      Vector c{Scalar(k % 4 - 2) + Scalar(1, 3), Scalar(k / 4 - 2) + Scalar(1, 7)};
      auto r = lp_solve(c, P, Sense::maximize);
      ASSERT_EQ(r.status, LpStatus::optimal);
      Scalar best = dot(c, V.front());
      for (const auto& v : V) best = std::max(best, dot(c, v));
      EXPECT_EQ(best, r.value);
    }
    // Every vertex is an extreme point of the sample hull: some direction isolates it.
    for (const auto& v : V) {
      Polyhedron others(3);
      // find c with c^T v >= c^T u + 1 for every other vertex u (exists iff v is extreme)
      for (const auto& u : V) {
        if (u == v) continue;
        Vector diff = u - v;
        others.add_ineq({diff[0], diff[1], 0}, -1);
      }
      others.add_box(-1000, 1000);
      EXPECT_TRUE(is_feasible(others));
    }
    ++checked;
  }
  EXPECT_GE(checked, 200);
}

TEST(ExtremeRays, Orthant) {
  PolyhedralCone C(2);
  C.add_ineq({-1, 0}).add_ineq({0, -1});
  EXPECT_EQ(extreme_rays(C), (std::vector<Vector>{{0, 1}, {1, 0}}));
}

TEST(ExtremeRays, OriginHasNone) {
  PolyhedralCone C(2);
  C.add_eq({1, 0}).add_eq({0, 1});
  EXPECT_TRUE(extreme_rays(C).empty());
}

TEST(ExtremeRays, CriticalConeOfExample510) {
  PolyhedralCone C(2);
  C.add_eq({-1, 6});
  auto R = extreme_rays(C);
  std::vector<Vector> expect{{-1, Scalar(-1, 6)}, {1, Scalar(1, 6)}};
  EXPECT_EQ(R, expect);
}

TEST(ExtremeRays, PropertyTrivialIffNoRays) {
  std::mt19937 rng(5);
  std::uniform_int_distribution<int> coef(-2, 2), rows(1, 5);
  int pointed = 0;
  for (int trial = 0; trial < 400 && pointed < 220; ++trial) {
    PolyhedralCone C(3);
    int m = rows(rng);
    for (int i = 0; i < m; ++i) C.add_ineq({coef(rng), coef(rng), coef(rng)});
    // make it pointed by adding a half-space pair unless the lineality space is trivial
    Matrix AE = C.A;
    if (!kernel_basis(AE).empty()) continue;
    ++pointed;
    bool trivial = cone_is_trivial(C).trivial;
    EXPECT_EQ(trivial, extreme_rays(C).empty());
  }
  EXPECT_GE(pointed, 200);
}

TEST(ZeroInInterior, Example38Q) {
  // As printed: (3,2), the segment {(xi,0) | -1 <= xi <= 0} via its endpoints, and (0,-1).
  EXPECT_TRUE(contains_zero_in_interior_of_hull({{3, 2}, {-1, 0}, {0, 0}, {0, -1}}));
  // As recomputed from the data at (0,0): grad F = (3,1).
  EXPECT_TRUE(contains_zero_in_interior_of_hull({{3, 1}, {-1, 0}, {0, 0}, {0, -1}}));
}

TEST(ZeroInInterior, TwoUnitVectors) {
  EXPECT_FALSE(contains_zero_in_interior_of_hull({{1, 0}, {0, 1}}));
}

TEST(ZeroInInterior, RandomSimplexBarycentric) {
  std::mt19937 rng(3);
  std::uniform_int_distribution<int> coef(-5, 5), w(1, 5);
  for (int trial = 0; trial < 40; ++trial) {
    Vector p1{coef(rng), coef(rng)}, p2{coef(rng), coef(rng)};
    Scalar a = w(rng), b = w(rng), c = w(rng);
    Vector p3 = (Scalar(-1) / c) * (a * p1 + b * p2);
    Matrix M{{p1[0], p2[0]}, {p1[1], p2[1]}};
    bool full = rank(M) == 2;
    bool got = contains_zero_in_interior_of_hull({p1, p2, p3});
    EXPECT_EQ(got, full);
    // barycentric oracle: 0 = sum theta_i p_i, theta > 0, sum = 1
    Scalar s = a + b + c;
    Vector combo = (a / s) * p1 + (b / s) * p2 + (c / s) * p3;
    EXPECT_TRUE(is_zero(combo));
  }
}

TEST(Complementarity, OnePairTwoBranches) {
  Polyhedron base(2);
  auto br = decompose_complementarity(base, {{{1, 0}, {0, 1}}});
  EXPECT_EQ(br.size(), 2u);
}

TEST(Complementarity, UnionPropertyThreePairs) {
  Polyhedron base(3);
  std::vector<ComplementarityPair> pairs{{{1, 0, 0}, {0, 1, 0}},
                                         {{0, 1, 1}, {0, 0, 1}},
                                         {{1, -1, 0}, {1, 1, 1}}};
  auto br = decompose_complementarity(base, pairs);
  ASSERT_EQ(br.size(), 8u);
  std::mt19937 rng(17);
  std::uniform_int_distribution<int> coef(-2, 2);
  int inside = 0;
  for (int trial = 0; trial < 300; ++trial) {
    Vector z{coef(rng), coef(rng), coef(rng)};
    bool comp = true;
    for (const auto& p : pairs) {
      Scalar u = dot(p.u, z), v = dot(p.v, z);
      comp = comp && u >= Scalar(0) && v <= Scalar(0) && (u * v).is_zero();
    }
    bool member = false;
    for (const auto& P : br) member = member || P.contains(z);
    EXPECT_EQ(comp, member);
    inside += comp;
  }
  for (auto P : br) {
    P.add_box(-3, 3);
    for (int k = 0; k < 3; ++k) {
      auto r = lp_solve({coef(rng), coef(rng), coef(rng)}, P, Sense::maximize);
      if (r.status != LpStatus::optimal) continue;
      const Vector& z = r.point;
      bool comp = true;
      for (const auto& p : pairs) {
        Scalar u = dot(p.u, z), v = dot(p.v, z);
        comp = comp && u >= Scalar(0) && v <= Scalar(0) && (u * v).is_zero();
      }
      EXPECT_TRUE(comp);
      ++inside;
    }
  }
  EXPECT_GT(inside, 5);
}

TEST(Quadratic, PsdTest) {
  EXPECT_TRUE(is_psd(Matrix{{2, 1}, {1, 2}}));
  EXPECT_TRUE(is_psd(Matrix{{1, 1}, {1, 1}}));
  EXPECT_FALSE(is_psd(Matrix{{1, 2}, {2, 1}}));
  EXPECT_FALSE(is_psd(Matrix{{0, 1}, {1, 0}}));
  EXPECT_TRUE(is_psd(Matrix{{0, 0}, {0, 3}}));
}

TEST(Quadratic, NonconvexMinimumOnBox) {
  // min -x^2 - y^2 + x over [0,1]^2: attained at (0,1) or (1,1); values -1 and -1.
  Polyhedron P(2);
  P.add_box(0, 1);
  auto r = minimize_quadratic(Matrix{{-1, 0}, {0, -1}}, {1, 0}, P);
  ASSERT_EQ(r.status, QpStatus::optimal);
  EXPECT_EQ(r.value, Scalar(-1));
}

TEST(Quadratic, ConvexInteriorMinimum) {
  Polyhedron P(1);
  P.add_box(-1, 1);
  auto r = minimize_quadratic(Matrix{{1}}, {Scalar(-1)}, P);  // x^2 - x, min at 1/2
  ASSERT_EQ(r.status, QpStatus::optimal);
  EXPECT_EQ(r.value, Scalar(-1, 4));
  EXPECT_EQ(r.point, Vector{Scalar(1, 2)});
}

TEST(Quadratic, UnboundedDetection) {
  Polyhedron P(1);
  P.add_ineq({-1}, 0);
  EXPECT_EQ(minimize_quadratic(Matrix{{-1}}, {0}, P).status, QpStatus::unbounded);
  EXPECT_EQ(minimize_quadratic(Matrix{{0}}, {1}, P).status, QpStatus::optimal);
  EXPECT_EQ(minimize_quadratic(Matrix{{0}}, {-1}, P).status, QpStatus::unbounded);
}

TEST(Quadratic, StrictCopositivity) {
  PolyhedralCone orth(2);
  orth.add_ineq({-1, 0}).add_ineq({0, -1});
  EXPECT_TRUE(strictly_copositive(Matrix{{1, -1}, {-1, 1}}.scaled(1) + Matrix{{0, 2}, {2, 0}}, orth).strict);
  EXPECT_FALSE(strictly_copositive(Matrix{{1, -1}, {-1, 1}}, orth).strict);
  EXPECT_FALSE(strictly_copositive(Matrix{{1, -2}, {-2, 1}}, orth).strict);
}
