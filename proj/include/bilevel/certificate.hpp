#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "problem.hpp"

namespace bilevel {

enum class Verdict { holds, fails, inapplicable, undetermined };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::holds: return "holds";
    case Verdict::fails: return "fails";
    case Verdict::inapplicable: return "inapplicable";
    case Verdict::undetermined: return "undetermined";
  }
  return "?";
}

enum class AssumptionStatus { verified, asserted, violated, asserted_false, unverified };

inline const char* to_string(AssumptionStatus s) {
  switch (s) {
    case AssumptionStatus::verified: return "verified";
    case AssumptionStatus::asserted: return "asserted";
    case AssumptionStatus::violated: return "violated";
    case AssumptionStatus::asserted_false: return "asserted-false";
    case AssumptionStatus::unverified: return "unverified";
  }
  return "?";
}

struct Assumption {
  std::string name;
  AssumptionStatus status = AssumptionStatus::unverified;
  std::string note;
  bool usable() const { return status == AssumptionStatus::verified || status == AssumptionStatus::asserted; }
};

/// One polyhedral piece of a certificate's system together with its triviality outcome.
struct BranchRecord {
  std::string label;
  Polyhedron system;
  bool trivial = true;
  Vector witness;
};

/// A rational value or one of the two infinities.
struct ExtendedValue {
  int infinity = 0;  ///< -1 for minus infinity, +1 for plus infinity
  Scalar value;

  static ExtendedValue minus_infinity() { return {-1, 0}; }
  static ExtendedValue plus_infinity() { return {1, 0}; }
  bool finite() const { return infinity == 0; }
  bool positive() const { return infinity > 0 || (infinity == 0 && value.sign() > 0); }
  std::string str() const { return infinity < 0 ? "-inf" : infinity > 0 ? "inf" : value.str(); }
};

/// Per-face record of the second-order positivity scan.
struct FaceScan {
  std::string label;
  PolyhedralCone cone;
  std::vector<Vector> rays;
  std::vector<ExtendedValue> ray_values;
  std::size_t samples = 0;
  double sampled_min = 0;  ///< minimum of value(d) / |d|^2 over the samples
  bool sampled = false;
};

struct Certificate {
  std::string condition;
  std::string route;
  Verdict verdict = Verdict::inapplicable;
  std::string reason;
  std::vector<std::string> variables;
  std::vector<std::size_t> projection;
  std::optional<Vector> witness;
  std::vector<Assumption> assumptions;
  std::vector<BranchRecord> branches;
  std::vector<FaceScan> faces;
  nlohmann::ordered_json details = nlohmann::ordered_json::object();

  bool holds() const { return verdict == Verdict::holds; }
};

/// Records a hypothesis: a computed answer when available, else the instance assertion `key`.
inline const Assumption& record_assumption(Certificate& cert, const BilevelInstance& inst, std::string name,
                                           std::optional<bool> computed, const std::string& key,
                                           std::string note = {}) {
  Assumption a{std::move(name), AssumptionStatus::unverified, std::move(note)};
  if (computed) {
    a.status = *computed ? AssumptionStatus::verified : AssumptionStatus::violated;
  } else if (auto as = inst.asserted(key)) {
    a.status = *as ? AssumptionStatus::asserted : AssumptionStatus::asserted_false;
  }
  cert.assumptions.push_back(std::move(a));
  return cert.assumptions.back();
}

/// Marks the certificate inapplicable when any recorded hypothesis is not usable.
inline bool hypotheses_usable(Certificate& cert) {
  for (const auto& a : cert.assumptions)
    if (!a.usable()) {
      cert.verdict = Verdict::inapplicable;
      cert.reason = "hypothesis '" + a.name + "' is " + to_string(a.status);
      return false;
    }
  return true;
}

inline Certificate inapplicable(std::string condition, std::string reason) {
  Certificate c;
  c.condition = std::move(condition);
  c.verdict = Verdict::inapplicable;
  c.reason = std::move(reason);
  return c;
}

inline std::vector<std::string> direction_names(std::size_t n, std::size_t m) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("dx" + std::to_string(i + 1));
  for (std::size_t i = 0; i < m; ++i) out.push_back("dy" + std::to_string(i + 1));
  return out;
}

/// Checks every branch for triviality on `coords` and sets the verdict: holds iff all are trivial.
inline void decide_by_triviality(Certificate& cert, std::vector<std::pair<std::string, Polyhedron>> pieces,
                                 const std::vector<std::size_t>& coords) {
  cert.projection = coords;
  cert.verdict = Verdict::holds;
  for (auto& [label, P] : pieces) {
    BranchRecord rec{label, P, true, {}};
    auto tv = cone_trivial_in_projection(as_cone(P), coords);
    rec.trivial = tv.trivial;
    rec.witness = tv.witness;
    if (!tv.trivial && cert.verdict == Verdict::holds) {
      cert.verdict = Verdict::fails;
      cert.witness = tv.witness;
      cert.reason = "branch '" + label + "' has a nontrivial solution";
    }
    cert.branches.push_back(std::move(rec));
  }
  if (cert.verdict == Verdict::holds)
    cert.reason = "every branch (" + std::to_string(cert.branches.size()) + ") has only the trivial solution";
}

}  // namespace bilevel
