#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "growth_oracle.hpp"
#include "io.hpp"
#include "second_order.hpp"

namespace bilevel {

inline constexpr const char* kReportSchema = "bilevel-report/1";

inline const std::vector<std::string>& all_conditions() {
  static const std::vector<std::string> ids{"fo-vf",  "fo-vf-corollary", "fo-vf-dual", "fo-implicit",
                                            "fo-va",  "fo-kkt",          "so",         "so-dual"};
  return ids;
}

/// Comma-separated condition ids, validated and put in dependency order.
inline std::vector<std::string> parse_conditions(const std::string& list) {
  std::vector<std::string> requested;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    if (std::find(all_conditions().begin(), all_conditions().end(), item) == all_conditions().end())
      throw InputError("/conditions", "unknown condition '" + item + "'");
    requested.push_back(item);
  }
  if (requested.empty()) throw InputError("/conditions", "no condition requested");
  std::vector<std::string> out;
  for (const auto& id : all_conditions())
    if (std::find(requested.begin(), requested.end(), id) != requested.end()) out.push_back(id);
  return out;
}

struct RunOptions {
  std::vector<std::string> conditions = all_conditions();
  ScanOptions scan;
  std::optional<GrowthOptions> oracle;
  bool timings = false;
};

/// "radius=R,step=S" with rational or decimal values.
inline GrowthOptions parse_oracle_spec(const std::string& spec) {
  GrowthOptions g;
  std::stringstream ss(spec);
  std::string item;
  bool have_radius = false, have_step = false;
  while (std::getline(ss, item, ',')) {
    auto eq = item.find('=');
    if (eq == std::string::npos) throw InputError("/oracle", "expected key=value, got '" + item + "'");
    std::string key = item.substr(0, eq), value = item.substr(eq + 1);
    Scalar v;
    try {
      v = Scalar::parse(value);
    } catch (const std::exception& e) {
      throw InputError("/oracle/" + key, e.what());
    }
    if (key == "radius") {
      g.radius = v;
      have_radius = true;
    } else if (key == "step") {
      g.step = v;
      have_step = true;
    } else {
      throw InputError("/oracle/" + key, "unknown oracle parameter");
    }
  }
  if (!have_radius || !have_step) throw InputError("/oracle", "both radius and step are required");
  return g;
}

inline nlohmann::ordered_json to_json(const Certificate& c) {
  using oj = nlohmann::ordered_json;
  oj j;
  j["condition"] = c.condition;
  j["route"] = c.route;
  j["verdict"] = to_string(c.verdict);
  j["reason"] = c.reason;
  j["variables"] = c.variables;
  j["projection"] = c.projection;
  j["witness"] = c.witness ? to_json(*c.witness) : oj(nullptr);
  j["assumptions"] = oj::array();
  for (const auto& a : c.assumptions)
    j["assumptions"].push_back({{"name", a.name}, {"status", to_string(a.status)}, {"note", a.note}});
  j["branches"] = oj::array();
  for (const auto& b : c.branches) {
    oj e{{"label", b.label}, {"trivial", b.trivial}, {"system", to_json(b.system)}};
    e["witness"] = b.trivial ? oj(nullptr) : to_json(b.witness);
    j["branches"].push_back(e);
  }
  j["faces"] = oj::array();
  for (const auto& f : c.faces) {
    oj e{{"label", f.label}, {"cone", to_json(f.cone)}};
    e["rays"] = oj::array();
    for (std::size_t k = 0; k < f.rays.size(); ++k)
      e["rays"].push_back({{"direction", to_json(f.rays[k])}, {"value", f.ray_values[k].str()}});
    e["sampled"] = f.sampled;
    e["samples"] = f.samples;
    e["normalized_min"] = std::isfinite(f.sampled_min) ? oj(f.sampled_min) : oj(nullptr);
    j["faces"].push_back(e);
  }
  j["details"] = c.details;
  return j;
}

struct RunResult {
  int exit_code = 3;
  nlohmann::ordered_json report;
  std::vector<Certificate> certificates;
};

namespace orch_detail {

inline nlohmann::ordered_json to_json(const GrowthResult& g, unsigned order) {
  nlohmann::ordered_json j;
  j["order"] = order;
  j["status"] = to_string(g.status);
  j["constant"] = g.constant;
  j["points"] = g.points;
  j["exact"] = g.exact;
  j["reason"] = g.reason;
  if (g.witness) j["witness"] = {{"x", bilevel::to_json(g.witness->x)}, {"y", bilevel::to_json(g.witness->y)}};
  return j;
}

/// phi on a small grid around x (linear classes and one-dimensional lower levels).
inline nlohmann::ordered_json phi_probe(const BilevelInstance& inst, const Vector& x0) {
  auto out = nlohmann::ordered_json::array();
  for (std::size_t j = 0; j < inst.n; ++j)
    for (long k = -4; k <= 4; ++k) {
      Vector x = x0;
      x[j] += Scalar(k, 4);
      nlohmann::ordered_json e{{"x", to_json(x)}};
      if (inst.linear) {
        auto sol = lower_solve(inst, x);
        e["phi"] = sol.bounded ? nlohmann::ordered_json(sol.value.str()) : nlohmann::ordered_json(nullptr);
      } else if (inst.m == 1) {
        std::vector<Polynomial> gy;
        for (const auto& gi : inst.g) gy.push_back(gi.substitute_prefix(x));
        Polynomial fy = inst.f.substitute_prefix(x);
        auto ys = growth_detail::solve_univariate(fy, gy, Scalar(-1000000), Scalar(1000000));
        if (ys && !ys->empty()) {
          Scalar v = fy(ys->front().y);
          e["phi"] = ys->front().exact ? nlohmann::ordered_json(v.str()) : nlohmann::ordered_json(v.to_double());
        } else {
          e["phi"] = nullptr;
        }
      } else {
        continue;
      }
      out.push_back(e);
    }
  return out;
}

inline nlohmann::ordered_json model_json(const ValueFunctionModel& m) {
  nlohmann::ordered_json j;
  j["available"] = m.available;
  if (!m.available) {
    j["reason"] = m.reason;
    return j;
  }
  j["form"] = to_string(m.form);
  j["phi"] = m.phi_value ? nlohmann::ordered_json(m.phi_value->str()) : nlohmann::ordered_json(nullptr);
  j["generators"] = nlohmann::ordered_json::array();
  for (const auto& a : m.generators) j["generators"].push_back(to_json(a));
  auto flag = [](const RegularityFlag& f) {
    return nlohmann::ordered_json{{"holds", f.holds}, {"source", f.asserted ? "asserted" : "derived"}};
  };
  j["phi_epi_regular"] = flag(m.phi_epi_regular);
  j["minus_phi_epi_regular"] = flag(m.minus_phi_epi_regular);
  j["phi_clarke_regular"] = flag(m.phi_clarke_regular);
  j["minus_phi_clarke_regular"] = flag(m.minus_phi_clarke_regular);
  j["notes"] = m.notes;
  return j;
}

}  // namespace orch_detail

inline Certificate run_condition(const std::string& id, const BilevelInstance& inst, const PointEvaluation& ev,
                                 const ValueFunctionModel& model, const ScanOptions& scan) {
  if (id == "fo-vf") return certify_vf_primal(inst, ev, model);
  if (id == "fo-vf-corollary") return certify_vf_corollaries(inst, ev);
  if (id == "fo-vf-dual") return certify_vf_dual(inst, ev, model);
  if (id == "fo-implicit") return certify_implicit(inst, ev);
  if (id == "fo-va") return certify_va(inst, ev);
  if (id == "fo-kkt") return certify_kkt(inst, ev);
  if (id == "so") return certify_second_order(inst, ev, model, scan);
  if (id == "so-dual") return certify_second_order_dual(inst, ev, model, scan);
  throw InputError("/conditions", "unknown condition '" + id + "'");
}

/// Runs the requested certifiers on a parsed instance; `raw` is the input document (for the digest).
inline RunResult run(const InstanceFile& file, const nlohmann::json& raw, const RunOptions& opt) {
  using clock = std::chrono::steady_clock;
  using oj = nlohmann::ordered_json;
  const auto& inst = file.instance;
  RunResult res;
  oj timings = oj::object();
  auto stage = [&](const std::string& name, auto&& fn) {
    auto t0 = clock::now();
    fn();
    timings[name] = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
  };
  oj& rep = res.report;
  rep["schema"] = kReportSchema;
  rep["instance"] = {{"name", inst.name}, {"class", to_string(inst.cls)}, {"digest", fnv1a_hex(raw.dump())}};
  rep["candidate"] = {{"x", to_json(file.candidate.x)}, {"y", to_json(file.candidate.y)}};
  rep["conditions"] = opt.conditions;

  FeasibilityVerdict feas;
  stage("feasibility", [&] { feas = check_feasible(inst, file.candidate); });
  rep["feasibility"] = {{"feasible", feas.feasible}, {"exact", feas.exact}, {"reason", feas.reason}};

  PointEvaluation ev;
  ValueFunctionModel model;
  stage("value_function", [&] {
    ev = evaluate(inst, file.candidate);
    model = build_vf_model(inst, ev);
  });
  rep["value_function"] = orch_detail::model_json(model);
  rep["value_function"]["probe"] = orch_detail::phi_probe(inst, file.candidate.x);

  for (const auto& id : opt.conditions) {
    Certificate c;
    if (!feas.feasible) c = inapplicable(id, "candidate is not feasible: " + feas.reason);
    else stage(id, [&] { c = run_condition(id, inst, ev, model, opt.scan); });
    res.certificates.push_back(std::move(c));
  }

  std::map<unsigned, GrowthResult> oracle;
  if (opt.oracle) {
    for (unsigned order : {1u, 2u}) {
      GrowthOptions g = *opt.oracle;
      g.order = order;
      stage("oracle_order_" + std::to_string(order), [&] { oracle[order] = growth_oracle(inst, file.candidate, g); });
    }
  }

  rep["certificates"] = oj::array();
  oj ledger = oj::array();
  bool any_holds = false, any_fails = false;
  for (const auto& c : res.certificates) {
    oj cj = to_json(c);
    if (opt.oracle && c.holds()) {
      unsigned order = c.condition.rfind("so", 0) == 0 ? 2 : 1;
      const auto& g = oracle[order];
      cj["oracle"] = {{"order", order}, {"status", to_string(g.status)}, {"constant", g.constant}};
    }
    rep["certificates"].push_back(cj);
    for (const auto& a : c.assumptions)
      ledger.push_back({{"condition", c.condition}, {"name", a.name}, {"status", to_string(a.status)}});
    any_holds = any_holds || c.verdict == Verdict::holds;
    any_fails = any_fails || c.verdict == Verdict::fails;
  }
  rep["assumption_ledger"] = ledger;
  if (opt.oracle) {
    rep["oracle"] = oj::array();
    for (const auto& [order, g] : oracle) rep["oracle"].push_back(orch_detail::to_json(g, order));
  }
  res.exit_code = any_holds ? 0 : any_fails ? 2 : 3;
  oj summary = oj::object();
  for (const auto& c : res.certificates) summary[c.condition] = to_string(c.verdict);
  rep["summary"] = {{"verdicts", summary}, {"exit_code", res.exit_code}};
  if (opt.timings) rep["timings_ms"] = timings;
  return res;
}

inline RunResult run_file(const std::string& path, const RunOptions& opt) {
  auto raw = read_json_file(path);
  return run(parse_instance(raw), raw, opt);
}

// ---- regression corpus ------------------------------------------------------

struct CorpusEntry {
  std::string name;
  int exit_code = 0;
  std::map<std::string, std::string> verdicts;
  std::vector<std::string> mismatches;
  bool ok() const { return mismatches.empty(); }
};

struct CorpusSummary {
  std::vector<CorpusEntry> entries;

  bool ok() const {
    return std::all_of(entries.begin(), entries.end(), [](const CorpusEntry& e) { return e.ok(); });
  }
  std::size_t passed() const {
    return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(), [](const auto& e) { return e.ok(); }));
  }

  std::string table() const {
    std::ostringstream os;
    for (const auto& e : entries) {
      os << (e.ok() ? "ok   " : "FAIL ") << e.name << "  exit " << e.exit_code;
      for (const auto& [cond, v] : e.verdicts) os << "  " << cond << "=" << v;
      os << "\n";
      for (const auto& m : e.mismatches) os << "       " << m << "\n";
    }
    os << passed() << "/" << entries.size() << " corpus instances match their expectations\n";
    return os.str();
  }
};

/// Compares one report with its expectation document:
/// {"conditions": [...], "verdicts": {id: verdict}, "exit_code": n, "quantities": {pointer: value}}.
inline std::vector<std::string> compare_with_expectation(const nlohmann::ordered_json& report,
                                                         const nlohmann::json& expect, int exit_code) {
  std::vector<std::string> out;
  if (expect.contains("exit_code") && expect["exit_code"].get<int>() != exit_code)
    out.push_back("exit code " + std::to_string(exit_code) + ", expected " + expect["exit_code"].dump());
  if (expect.contains("verdicts"))
    for (auto it = expect["verdicts"].begin(); it != expect["verdicts"].end(); ++it) {
      const auto& verdicts = report["summary"]["verdicts"];
      std::string got = verdicts.contains(it.key()) ? verdicts[it.key()].get<std::string>() : "missing";
      if (got != it.value().get<std::string>())
        out.push_back(it.key() + " is " + got + ", expected " + it.value().get<std::string>());
    }
  if (expect.contains("quantities"))
    for (auto it = expect["quantities"].begin(); it != expect["quantities"].end(); ++it) {
      nlohmann::ordered_json::json_pointer ptr(it.key());
      if (!report.contains(ptr)) {
        out.push_back(it.key() + " is missing from the report");
        continue;
      }
      auto got = nlohmann::json::parse(report.at(ptr).dump());
      if (got != it.value()) out.push_back(it.key() + " is " + got.dump() + ", expected " + it.value().dump());
    }
  return out;
}

/// Runs every instance in `dir` that has a sibling NAME.expect.json.
inline CorpusSummary run_corpus(const std::string& dir, const RunOptions& base) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw InputError("", "corpus directory not found: " + dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    auto p = e.path();
    if (p.extension() != ".json" || p.stem().extension() == ".expect") continue;
    fs::path expect = p;
    expect.replace_extension(".expect.json");
    if (fs::exists(expect)) files.push_back(p);
  }
  if (files.empty()) throw InputError("", "no corpus instances with expectations in " + dir);
  std::sort(files.begin(), files.end());
  CorpusSummary summary;
  for (const auto& p : files) {
    CorpusEntry entry;
    entry.name = p.stem().string();
    fs::path expect_path = p;
    expect_path.replace_extension(".expect.json");
    auto expect = read_json_file(expect_path.string());
    RunOptions opt = base;
    if (expect.contains("conditions")) opt.conditions = expect["conditions"].get<std::vector<std::string>>();
    try {
      auto res = run_file(p.string(), opt);
      entry.exit_code = res.exit_code;
      for (const auto& c : res.certificates) entry.verdicts[c.condition] = to_string(c.verdict);
      entry.mismatches = compare_with_expectation(res.report, expect, res.exit_code);
      if (opt.oracle)
        for (const auto& c : res.report["certificates"])
          if (c.contains("oracle") && c["oracle"]["status"] == "refuted")
            entry.mismatches.push_back(c["condition"].get<std::string>() + " holds but the growth oracle refutes");
    } catch (const std::exception& e) {
      entry.exit_code = 1;
      entry.mismatches.push_back(std::string("error: ") + e.what());
    }
    summary.entries.push_back(std::move(entry));
  }
  return summary;
}

}  // namespace bilevel
