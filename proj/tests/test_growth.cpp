#include <gtest/gtest.h>

#include "bilevel/growth_oracle.hpp"
#include "corpus_support.hpp"

using namespace bilevel;

namespace {

GrowthOptions opts(const char* radius, const char* step, unsigned order) {
  GrowthOptions o;
  o.radius = Scalar::parse(radius);
  o.step = Scalar::parse(step);
  o.order = order;
  return o;
}

}  // namespace

TEST(GrowthOracle, Example33FirstOrderConfirmed) {
  auto f = corpus("ex33");
  auto r = growth_oracle(f.instance, f.candidate, opts("0.1", "0.01", 1));
  EXPECT_EQ(r.status, OracleStatus::confirmed) << r.reason;
  EXPECT_GT(r.constant, 0);
  EXPECT_TRUE(r.exact);
}

TEST(GrowthOracle, Example58SecondOrderConfirmed) {
  auto f = corpus("ex58");
  auto r = growth_oracle(f.instance, f.candidate, opts("0.1", "0.01", 2));
  EXPECT_EQ(r.status, OracleStatus::confirmed) << r.reason;
  EXPECT_GT(r.constant, 0);
}

TEST(GrowthOracle, Example58IsNotFirstOrder) {
  // along (0, t) the objective grows like t^2 only
  auto f = corpus("ex58");
  auto r = growth_oracle(f.instance, f.candidate, opts("0.1", "0.01", 1));
  if (r.status == OracleStatus::confirmed) EXPECT_LT(r.constant, 0.11);
}

TEST(GrowthOracle, Example510SecondOrderConfirmed) {
  auto f = corpus("ex510");
  auto r = growth_oracle(f.instance, f.candidate, opts("0.1", "0.01", 2));
  EXPECT_EQ(r.status, OracleStatus::confirmed) << r.reason;
  EXPECT_FALSE(r.exact);
}

TEST(GrowthOracle, Example45FlippedObjectiveRefuted) {
  auto f = corpus("ex45");
  f.instance.F = f.instance.F.scaled(-1);
  auto r = growth_oracle(f.instance, f.candidate, opts("0.1", "0.01", 1));
  ASSERT_EQ(r.status, OracleStatus::refuted) << r.reason;
  ASSERT_TRUE(r.witness.has_value());
  EXPECT_LT(f.instance.F(r.witness->z()), f.instance.F(f.candidate.z()));
  EXPECT_TRUE(check_feasible(f.instance, *r.witness).feasible);
}

TEST(GrowthOracle, Example45Confirmed) {
  auto f = corpus("ex45");
  auto r = growth_oracle(f.instance, f.candidate, opts("0.1", "0.01", 1));
  EXPECT_EQ(r.status, OracleStatus::confirmed) << r.reason;
}

TEST(GrowthOracle, ZeroRadiusInconclusive) {
  auto f = corpus("ex33");
  auto r = growth_oracle(f.instance, f.candidate, opts("0", "0.01", 1));
  EXPECT_EQ(r.status, OracleStatus::inconclusive);
  EXPECT_FALSE(r.reason.empty());
}

TEST(GrowthOracle, NonOptimalCandidateRefuted) {
  // (-3, 1) is a local minimizer of Example 5.2; at (0, 1) the lower level also admits y = 0
  auto f = corpus("ex52");
  auto r = growth_oracle(f.instance, {V({0}), V({1})}, opts("0.1", "0.01", 2));
  EXPECT_EQ(r.status, OracleStatus::refuted);
  auto ok = growth_oracle(f.instance, f.candidate, opts("0.1", "0.01", 2));
  EXPECT_EQ(ok.status, OracleStatus::confirmed) << ok.reason;
}

TEST(GrowthOracle, RejectsBadOrder) {
  auto f = corpus("ex33");
  EXPECT_THROW(growth_oracle(f.instance, f.candidate, opts("0.1", "0.01", 3)), std::invalid_argument);
}
