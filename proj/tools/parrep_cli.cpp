// Command-line front end for the experiment runner.  Every subcommand goes
// through the same ExperimentConfig path as the test suites, so anything it
// prints can be reproduced from the echoed config alone.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "parrep/harness.hpp"

namespace {

using namespace parrep;

std::string with_suite_suffix(const std::string& path, const std::string& suite) {
  const std::size_t dot = path.rfind('.');
  if (dot == std::string::npos || dot == 0) return path + "." + suite;
  return path.substr(0, dot) + "." + suite + path.substr(dot);
}

void print_result(const std::string& label, const ExperimentResult& res, bool verbose) {
  std::cout << label << "  checks=" << res.trials << "  estimate=" << res.estimate;
  if (res.target_valid) std::cout << "  target=" << res.target;
  std::cout << "  " << (res.pass ? "pass" : "FAIL") << "  (" << res.wall_seconds << "s)\n";
  if (!res.config.output_path.empty()) std::cout << "  wrote " << res.config.output_path << "\n";
  if (verbose) std::cout << "  " << res.summary << "\n";
}

long default_trials(const std::string& suite) {
  if (suite == "raz") return 1;          // exhaustive, sampling effort unused
  if (suite == "flooding") return 2500;  // per memory-map size, 4 sizes
  if (suite == "hppw") return 500;
  return 5;  // forgetfulness: random instances on top of the shipped one
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desk-scale checks for post-quantum parallel repetition"};
  app.require_subcommand(1);

  std::uint64_t seed = 20260814;
  long trials = -1;
  std::string out;
  bool verbose = false;
  app.add_option("--seed", seed, "root seed; every result is a pure function of it");
  app.add_option("--trials", trials, "sampling effort where the experiment uses it");
  app.add_option("--out", out, "write line-delimited records and the summary here");
  app.add_flag("-v,--verbose", verbose, "print the summary record of each experiment");

  std::string suite = "all";
  CLI::App* lemmas = app.add_subcommand("lemmas", "run the classical lemma checkers");
  lemmas->add_option("--suite", suite, "raz | flooding | hppw | forgetfulness | all")
      ->check(CLI::IsMember({"raz", "flooding", "hppw", "forgetfulness", "all"}));

  std::string config_path;
  CLI::App* reduce = app.add_subcommand("reduce", "run reduction experiments from a config file");
  reduce->add_option("--config", config_path, "flat key=value experiment file")->required();

  std::string variant = "public";
  CLI::App* bounds = app.add_subcommand("bounds", "tabulate the soundness bounds");
  bounds->add_option("--variant", variant, "public | three | informal")
      ->check(CLI::IsMember({"public", "three", "informal"}));

  CLI::App* props = app.add_subcommand("props", "quick self-contained property checks");
  for (CLI::App* sub : {lemmas, reduce, bounds, props}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    bool all_pass = true;

    if (lemmas->parsed()) {
      std::vector<std::string> suites;
      if (suite == "all")
        suites = {"raz", "flooding", "hppw", "forgetfulness"};
      else
        suites = {suite};
      for (const std::string& s : suites) {
        ExperimentConfig cfg;
        cfg.kind = "lemma-check";
        cfg.suite = s;
        cfg.trials = trials >= 0 ? trials : default_trials(s);
        cfg.seed = seed;
        cfg.has_seed = true;
        if (!out.empty()) cfg.output_path = suites.size() > 1 ? with_suite_suffix(out, s) : out;
        const ExperimentResult res = run_config(cfg);
        print_result("lemma-check/" + s, res, verbose);
        all_pass = all_pass && res.pass;
      }
    }

    if (reduce->parsed()) {
      ExperimentConfig cfg = ExperimentConfig::load(config_path);
      if (app.count("--seed") > 0) {
        cfg.seed = seed;
        cfg.has_seed = true;
      }
      if (trials >= 0) cfg.trials = trials;
      if (!out.empty()) cfg.output_path = out;
      const ExperimentResult res = run_config(cfg);
      print_result(cfg.kind + "/" + (cfg.kind == "reduction-run" ? cfg.protocol : cfg.suite), res,
                   verbose);
      all_pass = all_pass && res.pass;
    }

    if (bounds->parsed()) {
      ExperimentConfig cfg;
      cfg.kind = "bound-table";
      cfg.variant = variant;
      cfg.seed = seed;
      cfg.has_seed = true;
      if (!out.empty()) cfg.output_path = out;
      const ExperimentResult res = run_config(cfg);
      print_result("bound-table/" + variant, res, verbose);
      all_pass = all_pass && res.pass;
    }

    if (props->parsed()) {
      long passed = 0;
      const auto checks = run_property_suite(seed);
      for (const auto& [name, ok] : checks) {
        passed += ok;
        std::cout << (ok ? "  ok   " : "  FAIL ") << name << "\n";
        all_pass = all_pass && ok;
      }
      std::cout << "props  " << passed << "/" << checks.size() << " passed\n";
    }

    return all_pass ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
