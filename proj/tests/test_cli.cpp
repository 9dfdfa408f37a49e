#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "bilevel/orchestrate.hpp"
#include "corpus_support.hpp"

namespace fs = std::filesystem;
using namespace bilevel;

namespace {

fs::path scratch(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("bilevel_cli_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int certify(const std::string& args) {
  std::string cmd = std::string(BILEVEL_CERTIFY_BIN) + " " + args + " > /dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunOptions only(const std::string& list) {
  RunOptions opt;
  opt.conditions = parse_conditions(list);
  return opt;
}

}  // namespace

TEST(Run, Ex33FirstOrderHolds) {
  auto res = run_file(corpus_path("ex33"), only("fo-vf"));
  EXPECT_EQ(res.exit_code, 0);
  ASSERT_EQ(res.certificates.size(), 1u);
  EXPECT_TRUE(res.certificates[0].holds());
  EXPECT_EQ(res.report["schema"], kReportSchema);
  EXPECT_EQ(res.report["summary"]["verdicts"]["fo-vf"], "holds");
}

TEST(Run, Ex58FirstOrderFailsSecondOrderHolds) {
  auto res = run_file(corpus_path("ex58"), only("so,fo-vf"));
  EXPECT_EQ(res.exit_code, 0);
  ASSERT_EQ(res.certificates.size(), 2u);
  EXPECT_EQ(res.certificates[0].condition, "fo-vf");
  EXPECT_EQ(res.certificates[0].verdict, Verdict::fails);
  EXPECT_EQ(res.certificates[1].verdict, Verdict::holds);
}

TEST(Run, ExitCodeTwoWhenNothingHoldsAndSomethingFails) {
  auto res = run_file(corpus_path("ex52"), only("fo-vf,fo-kkt"));
  EXPECT_EQ(res.exit_code, 2);
}

TEST(Run, ExitCodeThreeWhenOnlyInapplicable) {
  auto res = run_file(corpus_path("acq"), only("so"));
  EXPECT_EQ(res.exit_code, 3);
  EXPECT_EQ(res.certificates[0].verdict, Verdict::inapplicable);
}

TEST(Run, InfeasibleCandidateMakesEverythingInapplicable) {
  auto raw = read_json_file(corpus_path("ex33"));
  raw["candidate"]["y"] = nlohmann::json::array({"2"});
  auto res = run(parse_instance(raw), raw, RunOptions{});
  EXPECT_FALSE(res.report["feasibility"]["feasible"].get<bool>());
  for (const auto& c : res.certificates) EXPECT_EQ(c.verdict, Verdict::inapplicable) << c.condition;
  EXPECT_EQ(res.exit_code, 3);
}

TEST(Run, OracleAccompaniesEveryHoldingCertificate) {
  RunOptions opt;
  opt.oracle = GrowthOptions{};
  auto res = run_file(corpus_path("ex58"), opt);
  for (const auto& c : res.report["certificates"]) {
    if (c["verdict"] == "holds") {
      ASSERT_TRUE(c.contains("oracle")) << c["condition"];
      EXPECT_EQ(c["oracle"]["status"], "confirmed");
    } else {
      EXPECT_FALSE(c.contains("oracle"));
    }
  }
}

TEST(Run, TimingsOnlyOnRequest) {
  auto plain = run_file(corpus_path("ex33"), only("fo-vf"));
  EXPECT_FALSE(plain.report.contains("timings_ms"));
  auto opt = only("fo-vf");
  opt.timings = true;
  auto timed = run_file(corpus_path("ex33"), opt);
  EXPECT_TRUE(timed.report["timings_ms"].contains("fo-vf"));
}

TEST(Conditions, UnknownIdIsAnInputError) {
  EXPECT_THROW(parse_conditions("fo-vf,bogus"), InputError);
  EXPECT_THROW(parse_conditions(""), InputError);
  EXPECT_EQ(parse_conditions("so,fo-vf"), (std::vector<std::string>{"fo-vf", "so"}));
}

TEST(Conditions, OracleSpec) {
  auto g = parse_oracle_spec("radius=0.2,step=1/50");
  EXPECT_EQ(g.radius, Scalar(1, 5));
  EXPECT_EQ(g.step, Scalar(1, 50));
  EXPECT_THROW(parse_oracle_spec("radius=0.2"), InputError);
  EXPECT_THROW(parse_oracle_spec("radius=0.2,step=x"), InputError);
  EXPECT_THROW(parse_oracle_spec("radius=0.2,step=0.1,depth=3"), InputError);
}

TEST(Cli, ExitCodes) {
  auto dir = scratch("exit");
  std::ofstream(dir / "malformed.json") << "{ \"schema\": ";
  EXPECT_EQ(certify("--input " + (dir / "malformed.json").string()), 1);
  EXPECT_EQ(certify("--input " + (dir / "missing.json").string()), 1);
  EXPECT_EQ(certify("--input " + corpus_path("ex33") + " --conditions nonsense"), 1);
  EXPECT_EQ(certify("--input " + corpus_path("ex33") + " --conditions fo-vf --report " + (dir / "out.json").string()),
            0);
  auto report = nlohmann::json::parse(slurp(dir / "out.json"));
  EXPECT_EQ(report["summary"]["verdicts"]["fo-vf"], "holds");
  EXPECT_EQ(certify("--input " + corpus_path("ex58") + " --conditions fo-vf,so"), 0);
  EXPECT_EQ(certify("--input " + corpus_path("ex58") + " --conditions fo-vf"), 2);
  fs::remove_all(dir);
}

TEST(Cli, SchemaViolationNamesThePointer) {
  auto raw = read_json_file(corpus_path("ex33"));
  raw["candidate"].erase("x");
  try {
    parse_instance(raw);
    FAIL() << "expected an input error";
  } catch (const InputError& e) {
    EXPECT_EQ(e.pointer(), "/candidate/x");
  }
}

TEST(Cli, ReportsAreByteIdentical) {
  auto dir = scratch("determinism");
  for (const std::string name : {"ex52", "ex510", "acq"}) {
    std::string base = "--input " + corpus_path(name) + " --oracle radius=1/10,step=1/50 --report ";
    certify(base + (dir / "a.json").string());
    certify(base + (dir / "b.json").string());
    auto a = slurp(dir / "a.json");
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, slurp(dir / "b.json")) << name;
  }
  fs::remove_all(dir);
}

TEST(Corpus, FullCorpusMatches) {
  RunOptions opt;
  opt.oracle = GrowthOptions{};
  auto summary = run_corpus(BILEVEL_CORPUS_DIR, opt);
  EXPECT_EQ(summary.entries.size(), 8u);
  EXPECT_TRUE(summary.ok()) << summary.table();
  EXPECT_NE(summary.table().find("8/8"), std::string::npos);
  EXPECT_EQ(certify(std::string("--corpus ") + BILEVEL_CORPUS_DIR), 0);
}

TEST(Corpus, PerturbedObjectiveIsFlagged) {
  auto dir = scratch("perturbed");
  for (const auto& e : fs::directory_iterator(BILEVEL_CORPUS_DIR)) fs::copy(e.path(), dir / e.path().filename());
  auto raw = read_json_file((dir / "ex33.json").string());
  for (auto& mono : raw["F"]) {
    auto c = Scalar::parse(mono[0].is_string() ? mono[0].get<std::string>() : mono[0].dump());
    mono[0] = (-c).str();
  }
  std::ofstream(dir / "ex33.json") << raw.dump(2);
  auto summary = run_corpus(dir.string(), RunOptions{});
  EXPECT_FALSE(summary.ok());
  for (const auto& e : summary.entries) EXPECT_EQ(e.ok(), e.name != "ex33") << e.name;
  EXPECT_NE(certify("--corpus " + dir.string()), 0);
  fs::remove_all(dir);
}

TEST(Corpus, EmptyDirectoryIsAnError) {
  auto dir = scratch("empty");
  EXPECT_THROW(run_corpus(dir.string(), RunOptions{}), InputError);
  EXPECT_THROW(run_corpus((dir / "absent").string(), RunOptions{}), InputError);
  EXPECT_EQ(certify("--corpus " + dir.string()), 1);
  fs::remove_all(dir);
}
