#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "bilevel/bilevel.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Certify sufficient optimality conditions for a candidate of an optimistic bilevel program"};
  std::string input, report_path, conditions, oracle_spec, corpus_dir;
  std::size_t density = 10000;
  double margin = 1e-6;
  bool timings = false;
  auto* in_opt = app.add_option("--input", input, "instance file (JSON)");
  app.add_option("--conditions", conditions, "comma-separated condition ids (default: all)");
  app.add_option("--report", report_path, "write the report here instead of standard output");
  app.add_option("--oracle", oracle_spec, "enable the growth oracle, e.g. radius=1/10,step=1/100");
  app.add_option("--scan-density", density, "samples per cone piece in the positivity scan");
  app.add_option("--margin", margin, "minimum accepted normalized value in the positivity scan");
  app.add_flag("--timings", timings, "add per-stage wall-clock times to the report");
  auto* corpus_opt = app.add_option("--corpus", corpus_dir, "run a regression corpus directory");
  in_opt->excludes(corpus_opt);
  CLI11_PARSE(app, argc, argv);

  try {
    bilevel::RunOptions opt;
    if (!conditions.empty()) opt.conditions = bilevel::parse_conditions(conditions);
    if (!oracle_spec.empty()) opt.oracle = bilevel::parse_oracle_spec(oracle_spec);
    opt.scan.density = density;
    opt.scan.margin = margin;
    opt.timings = timings;

    if (!corpus_dir.empty()) {
      if (!opt.oracle) opt.oracle = bilevel::GrowthOptions{};
      auto summary = bilevel::run_corpus(corpus_dir, opt);
      std::cout << summary.table();
      return summary.ok() ? 0 : 4;
    }
    if (input.empty()) throw bilevel::InputError("", "--input or --corpus is required");

    auto result = bilevel::run_file(input, opt);
    std::string text = result.report.dump(2) + "\n";
    if (report_path.empty()) {
      std::cout << text;
    } else {
      std::ofstream out(report_path, std::ios::binary);
      if (!out) throw bilevel::InputError("", "cannot write report to " + report_path);
      out << text;
    }
    return result.exit_code;
  } catch (const bilevel::InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
