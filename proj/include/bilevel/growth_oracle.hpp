#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "lower_level.hpp"
#include "quadratic.hpp"
#include "univariate.hpp"

namespace bilevel {

enum class OracleStatus { confirmed, refuted, inconclusive };

inline const char* to_string(OracleStatus s) {
  switch (s) {
    case OracleStatus::confirmed: return "confirmed";
    case OracleStatus::refuted: return "refuted";
    case OracleStatus::inconclusive: return "inconclusive";
  }
  return "?";
}

struct GrowthOptions {
  Scalar radius{1, 10};
  Scalar step{1, 100};
  unsigned order = 1;
  std::size_t max_grid = 200000;
};

struct GrowthResult {
  OracleStatus status = OracleStatus::inconclusive;
  double constant = 0;  ///< best C with F - F(x,y) >= C dist^order over the sampled feasible points
  std::optional<CandidatePoint> witness;
  std::size_t points = 0;
  bool exact = true;  ///< false when some lower-level solution was an irrational root
  std::string reason;
};

namespace growth_detail {

struct LowerCandidate {
  Vector y;
  bool exact = true;
};

constexpr double kRootTolerance = 1e-12;

/// Global minimizers of a univariate polynomial lower level within the window [lo, hi], or nullopt
/// when the lower level has no solution at this x.
inline std::optional<std::vector<LowerCandidate>> solve_univariate(const Polynomial& f,
                                                                   const std::vector<Polynomial>& g,
                                                                   const Scalar& lo, const Scalar& hi) {
  using namespace univariate;
  Poly fp = from_polynomial(f);
  std::vector<Poly> gp;
  for (const auto& gi : g) gp.push_back(from_polynomial(gi));
  auto feasible = [&](const Scalar& y, bool exact) {
    for (const auto& p : gp) {
      Scalar v = eval(p, y);
      if (exact ? v.sign() > 0 : v.to_double() > kRootTolerance) return false;
    }
    return true;
  };
  std::vector<std::pair<Scalar, bool>> breaks;
  for (const auto& p : gp) {
    if (p.size() <= 1) continue;
    for (const auto& r : real_roots(p)) breaks.emplace_back(r, eval(p, r).is_zero());
  }
  std::sort(breaks.begin(), breaks.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  // feasible set: union of closed intervals between breakpoints; probe the gaps and both tails
  Scalar B = 1;
  for (const auto& [r, e] : breaks) B = std::max(B, abs(r) + 1);
  std::vector<Scalar> probes;
  probes.push_back(-B);
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) probes.push_back((breaks[k].first + breaks[k + 1].first) / 2);
  probes.push_back(B);
  bool left_open = feasible(-B, true), right_open = feasible(B, true);
  bool any = left_open || right_open;
  for (const auto& p : probes) any = any || feasible(p, true);
  for (const auto& [r, e] : breaks) any = any || feasible(r, e);
  if (!any) return std::nullopt;

  std::size_t deg = fp.empty() ? 0 : fp.size() - 1;
  Scalar lead = fp.empty() ? Scalar(0) : fp.back();
  if (deg >= 1 && (left_open || right_open)) {
    bool down_left = (deg % 2 == 1) ? lead.sign() > 0 : lead.sign() < 0;
    bool down_right = lead.sign() < 0;
    if ((left_open && down_left) || (right_open && down_right)) return std::nullopt;
  }

  std::vector<LowerCandidate> cands;
  for (const auto& [r, e] : breaks)
    if (feasible(r, e)) cands.push_back({Vector{r}, e});
  if (deg == 0) {
    // every feasible point is optimal: sample the window
    for (const auto& p : probes)
      if (feasible(p, true)) cands.push_back({Vector{p}, true});
    for (std::size_t k = 0; k <= 16; ++k) {
      Scalar y = lo + (hi - lo) * Scalar(static_cast<long>(k), 16);
      if (feasible(y, true)) cands.push_back({Vector{y}, true});
    }
    std::vector<LowerCandidate> out;
    for (auto& c : cands)
      if (c.y[0] >= lo && c.y[0] <= hi) out.push_back(std::move(c));
    return out;
  }
  Poly df = derivative(fp);
  if (df.size() > 1)
    for (const auto& r : real_roots(df)) {
      bool e = eval(df, r).is_zero();
      if (feasible(r, true)) cands.push_back({Vector{r}, e});
    }
  if (cands.empty()) return std::nullopt;
  Scalar best = eval(fp, cands.front().y[0]);
  for (const auto& c : cands) best = std::min(best, eval(fp, c.y[0]));
  std::vector<LowerCandidate> out;
  for (auto& c : cands) {
    Scalar v = eval(fp, c.y[0]);
    bool optimal = c.exact ? v == best : (v - best).to_double() <= kRootTolerance;
    if (optimal && c.y[0] >= lo && c.y[0] <= hi) out.push_back(std::move(c));
  }
  return out;
}

/// Solutions of a linear lower level within the box |y - yc| <= r: vertices of the clipped optimal
/// face, pairwise midpoints, the centroid, and the minimizer of a quadratic upper objective.
inline std::optional<std::vector<LowerCandidate>> solve_linear(const BilevelInstance& inst, const Vector& x,
                                                               const Vector& yc, const Scalar& r) {
  auto sol = lower_solve(inst, x);
  if (!sol.feasible || !sol.bounded) return std::nullopt;
  Polyhedron local = sol.face;
  for (std::size_t k = 0; k < inst.m; ++k) {
    local.add_ineq(unit(inst.m, k), yc[k] + r);
    local.add_ineq(unit(inst.m, k, -1), r - yc[k]);
  }
  std::vector<LowerCandidate> out;
  auto verts = vertices(local);
  for (const auto& v : verts) out.push_back({v, true});
  for (std::size_t a = 0; a < verts.size(); ++a)
    for (std::size_t b = a + 1; b < verts.size(); ++b) out.push_back({Scalar(1, 2) * (verts[a] + verts[b]), true});
  if (verts.size() > 2) {
    Vector c = zeros(inst.m);
    for (const auto& v : verts) c = c + v;
    out.push_back({Scalar(1, static_cast<long>(verts.size())) * c, true});
  }
  Polynomial Fy = inst.F.substitute_prefix(x);
  if (!verts.empty() && Fy.degree() <= 2) {
    Matrix H = Fy.hessian(zeros(inst.m)).scaled(Scalar(1, 2));
    auto qp = minimize_quadratic(H, Fy.gradient(zeros(inst.m)), local);
    if (qp.status == QpStatus::optimal) out.push_back({qp.point, true});
  }
  return out;
}

}  // namespace growth_detail

/// Brute-force check of F(x, y) >= F(xc, yc) + C |(x, y) - (xc, yc)|^order on a grid of x values
/// with the lower level solved at every node.
inline GrowthResult growth_oracle(const BilevelInstance& inst, const CandidatePoint& pt, const GrowthOptions& opt) {
  GrowthResult res;
  bool linear = inst.linear.has_value();
  if (!linear && inst.m != 1) {
    res.reason = "lower level is neither linear nor one-dimensional";
    return res;
  }
  if (opt.order != 1 && opt.order != 2) throw std::invalid_argument("growth order must be 1 or 2");
  if (opt.radius.sign() <= 0 || opt.step.sign() <= 0) {
    res.reason = "empty neighborhood";
    return res;
  }
  long K = static_cast<long>(univariate::floor_of(opt.radius / opt.step).to_double());
  double nodes = std::pow(2.0 * K + 1, static_cast<double>(inst.n));
  if (K == 0 || nodes > static_cast<double>(opt.max_grid)) {
    res.reason = K == 0 ? "step exceeds the radius" : "grid too large";
    return res;
  }
  Scalar F0 = inst.F(pt.z());
  double best = std::numeric_limits<double>::infinity();
  bool zero_gap = false;
  std::vector<long> idx(inst.n, -K);
  for (;;) {
    Vector x = pt.x;
    for (std::size_t j = 0; j < inst.n; ++j) x[j] += Scalar(idx[j]) * opt.step;
    std::optional<std::vector<growth_detail::LowerCandidate>> ys;
    if (linear) {
      ys = growth_detail::solve_linear(inst, x, pt.y, opt.radius);
    } else {
      std::vector<Polynomial> gy;
      for (const auto& gi : inst.g) gy.push_back(gi.substitute_prefix(x));
      ys = growth_detail::solve_univariate(inst.f.substitute_prefix(x), gy, pt.y[0] - opt.radius,
                                           pt.y[0] + opt.radius);
    }
    if (ys)
      for (const auto& c : *ys) {
        CandidatePoint q{x, c.y};
        Vector z = q.z();
        bool upper_ok = true;
        for (const auto& G : inst.G) {
          Scalar v = G(z);
          if (c.exact ? v.sign() > 0 : v.to_double() > growth_detail::kRootTolerance) upper_ok = false;
        }
        if (!upper_ok) continue;
        Vector diff = z - pt.z();
        if (is_zero(diff)) continue;
        ++res.points;
        res.exact = res.exact && c.exact;
        Scalar gap = inst.F(z) - F0;
        bool below = c.exact ? gap.sign() < 0 : gap.to_double() < -growth_detail::kRootTolerance;
        if (below && res.status != OracleStatus::refuted) {
          res.status = OracleStatus::refuted;
          res.witness = q;
        }
        Scalar n2 = dot(diff, diff);
        double ratio = opt.order == 2 ? (gap / n2).to_double() : gap.to_double() / std::sqrt(n2.to_double());
        if (gap.is_zero()) zero_gap = true;
        best = std::min(best, ratio);
      }
    std::size_t j = 0;
    while (j < inst.n && idx[j] == K) idx[j++] = -K;
    if (j == inst.n) break;
    ++idx[j];
  }
  if (res.status == OracleStatus::refuted) {
    res.reason = "a feasible grid point has a smaller upper-level objective";
    return res;
  }
  if (res.points == 0) {
    res.reason = "no feasible grid point besides the candidate";
    return res;
  }
  res.constant = best;
  if (zero_gap || !(best > 0)) {
    res.reason = "some feasible grid point attains the candidate's objective value";
    return res;
  }
  res.status = OracleStatus::confirmed;
  res.reason = "growth constant " + std::to_string(best) + " over " + std::to_string(res.points) + " points";
  return res;
}

}  // namespace bilevel
