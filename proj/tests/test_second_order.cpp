#include <gtest/gtest.h>

#include "bilevel/second_order.hpp"
#include "corpus_support.hpp"

using namespace bilevel;

namespace {

struct Loaded {
  BilevelInstance inst;
  PointEvaluation ev;
  ValueFunctionModel model;
};

Loaded load(const std::string& name) {
  auto file = corpus(name);
  auto ev = evaluate(file.instance, file.candidate);
  auto model = build_vf_model(file.instance, ev);
  return {file.instance, ev, model};
}

Loaded with_objective(const std::string& name, const Polynomial& F) {
  auto file = corpus(name);
  file.instance.F = F;
  auto ev = evaluate(file.instance, file.candidate);
  auto model = build_vf_model(file.instance, ev);
  return {file.instance, ev, model};
}

ScanOptions small_scan() { return {200, 1e-6}; }

}  // namespace

TEST(Cones, Example58LinearizationIsOrthant) {
  auto L = load("ex58");
  auto lin = build_linearization_cone(L.ev, L.model);
  for (auto d : {V({1, 0}), V({0, 1}), V({2, 3})}) EXPECT_TRUE(contains(lin, d));
  for (auto d : {V({-1, 0}), V({0, -1}), V({-1, 1})}) EXPECT_FALSE(contains(lin, d));
  auto crit = build_critical_cone(L.ev, L.model);
  EXPECT_TRUE(contains(crit, V({0, 1})));
  EXPECT_FALSE(contains(crit, V({1, 0})));
  EXPECT_FALSE(contains(crit, V({1, 1})));
}

TEST(Cones, Example510CriticalLine) {
  auto L = load("ex510");
  auto lin = build_linearization_cone(L.ev, L.model);
  EXPECT_TRUE(contains(lin, V({6, 0})));
  EXPECT_FALSE(contains(lin, V({0, 1})));
  auto crit = build_critical_cone(L.ev, L.model);
  EXPECT_TRUE(contains(crit, V({6, 1})));
  EXPECT_TRUE(contains(crit, V({-6, -1})));
  EXPECT_FALSE(contains(crit, V({6, 0})));
  EXPECT_FALSE(contains(crit, V({0, 1})));
}

TEST(Cones, ConstantLowerLevelGivesFullSpace) {
  auto file = corpus("ex33");
  auto& lin = *file.instance.linear;
  lin.A = Matrix(1, 1);
  file.instance.derive_lower_polynomials();
  auto ev = evaluate(file.instance, file.candidate);
  auto model = build_vf_model(file.instance, ev);
  auto cone = build_linearization_cone(ev, model);
  // only y >= 0 restricts directions (y = 0 is active)
  EXPECT_TRUE(contains(cone, V({-5, 1})));
  EXPECT_TRUE(contains(cone, V({5, 0})));
}

TEST(NoDescent, Corpus) {
  for (std::string name : {"ex58", "ex510", "ex52"}) {
    auto L = load(name);
    EXPECT_TRUE(check_no_descent(L.ev, build_linearization_cone(L.ev, L.model)).holds) << name;
  }
}

TEST(NoDescent, NegativeGradientFails) {
  auto L = load("ex58");
  auto M = with_objective("ex58", L.inst.F.scaled(-1));
  auto nd = check_no_descent(M.ev, build_linearization_cone(M.ev, M.model));
  EXPECT_FALSE(nd.holds);
  ASSERT_TRUE(nd.witness.has_value());
  EXPECT_LT(dot(M.ev.gradF, *nd.witness), Scalar(0));
}

TEST(Subproblem, Example58QuarterExactly) {
  auto L = load("ex58");
  auto crit = build_critical_cone(L.ev, L.model);
  auto r = subproblem_value(L.ev, L.model, V({0, 1}), &crit);
  ASSERT_TRUE(r.value.finite());
  EXPECT_EQ(r.value.value, Scalar(1, 4));
  EXPECT_EQ(r.w[0], Scalar(-1, 4));
}

TEST(Subproblem, ZeroDirectionHasValueZero) {
  for (std::string name : {"ex58", "ex510", "ex52"}) {
    auto L = load(name);
    auto r = subproblem_value(L.ev, L.model, zeros(L.ev.dim()));
    ASSERT_TRUE(r.value.finite());
    EXPECT_EQ(r.value.value, Scalar(0)) << name;
  }
}

TEST(Subproblem, Example510RayValues) {
  auto L = load("ex510");
  auto crit = build_critical_cone(L.ev, L.model);
  for (int s : {1, -1}) {
    Vector d = V({6 * s, s});
    auto r = subproblem_value(L.ev, L.model, d, &crit);
    ASSERT_TRUE(r.value.finite());
    Scalar dx2 = d[0] * d[0];
    EXPECT_GE(r.value.value, dx2 / Scalar(18));
    if (s < 0) {
      EXPECT_GE(r.value.value, Scalar(13) * dx2 / Scalar(18));
    }
    EXPECT_EQ(r.value.value, Scalar(26));
  }
}

TEST(Subproblem, OutsideCriticalConeThrows) {
  auto L = load("ex58");
  auto crit = build_critical_cone(L.ev, L.model);
  EXPECT_THROW(subproblem_value(L.ev, L.model, V({1, 0}), &crit), std::domain_error);
}

TEST(Subproblem, DegreeTwoHomogeneity) {
  auto L = load("ex510");
  Vector d = V({6, 1});
  auto base = subproblem_value(L.ev, L.model, d).value.value;
  for (Scalar t : {Scalar(1, 2), Scalar(2), Scalar(3)}) {
    auto v = subproblem_value(L.ev, L.model, t * d).value;
    ASSERT_TRUE(v.finite());
    EXPECT_EQ(v.value, t * t * base);
  }
}

TEST(Positivity, Example58Holds) {
  auto L = load("ex58");
  auto c = positivity_scan(L.ev, L.model, build_critical_cone(L.ev, L.model), {100, 1.0 / 8});
  EXPECT_EQ(c.verdict, Verdict::holds) << c.reason;
  ASSERT_EQ(c.faces.size(), 1u);
  ASSERT_EQ(c.faces[0].rays.size(), 1u);
  EXPECT_EQ(c.faces[0].ray_values[0].value, Scalar(1, 4));
}

TEST(Positivity, Example510Holds) {
  auto L = load("ex510");
  auto c = certify_second_order(L.inst, L.ev, L.model, small_scan());
  EXPECT_EQ(c.verdict, Verdict::holds) << c.reason;
  std::size_t rays = 0;
  for (const auto& f : c.faces)
    for (std::size_t k = 0; k < f.rays.size(); ++k) {
      ++rays;
      EXPECT_GE(f.ray_values[k].value, f.rays[k][0] * f.rays[k][0] / Scalar(18));
    }
  EXPECT_EQ(rays, 2u);
}

TEST(Positivity, FlatObjectiveFailsWithWitness) {
  auto L = load("ex58");
  auto M = with_objective("ex58", Polynomial(2));
  auto crit = build_critical_cone(M.ev, M.model);
  auto c = positivity_scan(M.ev, M.model, crit, small_scan());
  ASSERT_EQ(c.verdict, Verdict::fails);
  ASSERT_TRUE(c.witness.has_value());
  auto v = subproblem_value(M.ev, M.model, *c.witness).value;
  EXPECT_FALSE(v.positive());
  EXPECT_TRUE(contains(crit, *c.witness));
}

TEST(Positivity, SamplesTwoDimensionalFaces) {
  // F = x^2 + y^2 with phi = min{x, 0}: the critical cone contains the 2-D orthant piece
  auto M = with_objective("ex58", Polynomial::variable(2, 0) * Polynomial::variable(2, 0) +
                                      Polynomial::variable(2, 1) * Polynomial::variable(2, 1));
  auto c = positivity_scan(M.ev, M.model, build_critical_cone(M.ev, M.model), small_scan());
  bool sampled = false;
  for (const auto& f : c.faces) sampled = sampled || (f.sampled && f.samples > 0);
  EXPECT_TRUE(sampled);
  EXPECT_NE(c.verdict, Verdict::inapplicable);
}

TEST(Positivity, ScanIsDeterministic) {
  auto M = with_objective("ex58", Polynomial::variable(2, 0) * Polynomial::variable(2, 0) +
                                      Polynomial::variable(2, 1) * Polynomial::variable(2, 1));
  auto crit = build_critical_cone(M.ev, M.model);
  auto a = positivity_scan(M.ev, M.model, crit, small_scan());
  auto b = positivity_scan(M.ev, M.model, crit, small_scan());
  ASSERT_EQ(a.faces.size(), b.faces.size());
  for (std::size_t k = 0; k < a.faces.size(); ++k) EXPECT_EQ(a.faces[k].sampled_min, b.faces[k].sampled_min);
}

TEST(SecondOrder, Example58Holds) {
  auto L = load("ex58");
  auto c = certify_second_order(L.inst, L.ev, L.model, small_scan());
  EXPECT_EQ(c.verdict, Verdict::holds) << c.reason;
  for (const auto& a : c.assumptions) EXPECT_EQ(a.status, AssumptionStatus::verified) << a.name;
}

TEST(SecondOrder, AcqCounterexampleFlagsAcq) {
  auto L = load("acq");
  auto acq = decide_acq(L.inst, L.ev, L.model);
  ASSERT_TRUE(acq.holds.has_value());
  EXPECT_FALSE(*acq.holds);
  ASSERT_TRUE(acq.witness.has_value());
  // the witness satisfies the linearized lower-level constraints
  for (auto i : L.ev.active_g) EXPECT_LE(dot(L.ev.gradg[i], *acq.witness), Scalar(0));
  auto c = certify_second_order(L.inst, L.ev, L.model, small_scan());
  EXPECT_EQ(c.verdict, Verdict::inapplicable);
  bool flagged = false;
  for (const auto& a : c.assumptions)
    if (a.name.find("ACQ") != std::string::npos)
      flagged = a.status == AssumptionStatus::violated || a.status == AssumptionStatus::asserted_false;
  EXPECT_TRUE(flagged);
}

TEST(SecondOrder, AcqOracleDerivative) {
  auto L = load("acq");
  const double a = 1.0 / std::sqrt(3.0);
  for (int k = -10; k <= 10; ++k) {
    Scalar dx(k, 7);
    double expect = -a * std::abs(dx.to_double());
    EXPECT_NEAR(phi_dirderiv(L.model, V({dx})).to_double(), expect, 1e-9);
  }
}

TEST(DualSosc, Example52) {
  auto L = load("ex52");
  auto data = vf_lagrangian_data(L.ev, L.model);
  ASSERT_TRUE(data.available) << data.reason;
  ASSERT_EQ(data.vertices.size(), 1u);
  EXPECT_EQ(data.vertices[0], V({Scalar(2, 3), 0, 0}));
  ASSERT_EQ(data.rays.size(), 1u);
  Vector nu = V({1, 0, 1});
  EXPECT_TRUE(data.region.contains(nu));
  auto H = data.hessian_at(nu);
  ASSERT_TRUE(H.has_value());
  EXPECT_EQ(*H, Matrix({{1, 1}, {1, 1}}));
  auto crit = build_critical_cone(L.ev, L.model);
  EXPECT_TRUE(contains(crit, V({1, 0})));
  EXPECT_TRUE(contains(crit, V({-1, 0})));
  EXPECT_FALSE(contains(crit, V({0, 1})));
  EXPECT_FALSE(contains(crit, V({0, -1})));
  auto c = certify_second_order_dual(L.inst, L.ev, L.model, small_scan());
  EXPECT_EQ(c.verdict, Verdict::holds) << c.reason;
  EXPECT_TRUE(c.details["multipliers_nonempty"].get<bool>());
  EXPECT_EQ(c.details["sosc"], "holds");
}

TEST(DualSosc, Example510AgreesWithPrimal) {
  auto L = load("ex510");
  auto crit = build_critical_cone(L.ev, L.model);
  auto primal = positivity_scan(L.ev, L.model, crit, small_scan());
  auto dual = dual_sosc(L.ev, L.model, crit, small_scan());
  EXPECT_EQ(primal.verdict, dual.verdict) << dual.reason;
}

TEST(DualSosc, StrongDualityOnCriticalRays) {
  for (std::string name : {"ex52", "ex510"}) {
    auto L = load(name);
    auto data = vf_lagrangian_data(L.ev, L.model);
    ASSERT_TRUE(data.available);
    for (const auto& pc : build_critical_cone(L.ev, L.model)) {
      auto gens = cone_generators(pc.cone);
      auto dirs = gens.rays;
      for (const auto& l : gens.lines) {
        dirs.push_back(l);
        dirs.push_back(Scalar(-1) * l);
      }
      for (const auto& d : dirs) {
        auto p = subproblem_value(L.ev, L.model, d).value;
        auto q = fritz_john_value(data, d);
        ASSERT_TRUE(p.finite() && q.finite()) << name;
        EXPECT_EQ(p.value, q.value) << name;
      }
    }
  }
}

TEST(DualSosc, NonsmoothPhiInapplicable) {
  auto L = load("ex58");
  auto c = dual_sosc(L.ev, L.model, build_critical_cone(L.ev, L.model));
  EXPECT_EQ(c.verdict, Verdict::inapplicable);
}

TEST(DualSosc, EmptyKktSetLeavesFritzJohnRoute) {
  // with F = -x the x-row of the KKT system reads -1 = 0
  auto M = with_objective("ex52", Polynomial::variable(2, 0).scaled(-1));
  auto data = vf_lagrangian_data(M.ev, M.model);
  ASSERT_TRUE(data.available);
  EXPECT_TRUE(data.vertices.empty());
  auto c = dual_sosc(M.ev, M.model, build_critical_cone(M.ev, M.model), small_scan());
  EXPECT_EQ(c.details["sosc"], "inapplicable");
  EXPECT_NE(c.verdict, Verdict::inapplicable);
}

TEST(KktPoint, Example52) {
  auto L = load("ex52");
  auto r = kkt_point_check(L.ev, L.model);
  ASSERT_TRUE(r.is_kkt);
  // the multiplier (nu^vf, nu^g) = (1, (0, 1)) solves the system as well
  Vector gx = L.ev.gradF + Scalar(1) * L.ev.gradf + L.ev.gradg[1] - Vector{L.model.generators[0][0], 0};
  EXPECT_TRUE(is_zero(gx));
}

TEST(KktPoint, OutwardGradientGivesSeparatingDirection) {
  auto L = load("ex58");
  auto M = with_objective("ex58", L.inst.F.scaled(-1));
  auto r = kkt_point_check(M.ev, M.model);
  EXPECT_FALSE(r.is_kkt);
  ASSERT_TRUE(r.separating.has_value());
  EXPECT_LT(dot(M.ev.gradF, *r.separating), Scalar(0));
}

TEST(KktPoint, PropositionConsistencyOnCorpus) {
  for (std::string name : {"ex33", "ex38", "ex52", "ex58", "ex510"}) {
    auto L = load(name);
    if (!L.model.available) continue;
    bool nd = check_no_descent(L.ev, build_linearization_cone(L.ev, L.model)).holds;
    bool kkt = kkt_point_check(L.ev, L.model).is_kkt;
    if (L.model.phi_clarke_regular.holds && nd) {
      EXPECT_TRUE(kkt) << name;
    }
    if (L.model.minus_phi_clarke_regular.holds && kkt) {
      EXPECT_TRUE(nd) << name;
    }
  }
}
