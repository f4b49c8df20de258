#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "parrep/harness.hpp"
#include "test_util.hpp"

using namespace parrep;
using nlohmann::json;

TEST_CASE("wilson intervals contain the estimate and shrink with more trials") {
  for (long n : {30L, 100L, 1000L})
    for (long s : {0L, 1L, n / 3, n - 1, n}) {
      const WilsonInterval iv = wilson_interval(s, n);
      const double ph = static_cast<double>(s) / n;
      CHECK(iv.lower >= 0.0);
      CHECK(iv.upper <= 1.0);
      CHECK(iv.lower <= ph + 1e-12);
      CHECK(iv.upper >= ph - 1e-12);
    }
  // doubling the evidence at the same rate never widens the interval
  for (long n : {50L, 200L, 800L})
    for (long s : {n / 4, n / 2, (3 * n) / 4}) {
      const double before = wilson_interval(s, n).halfwidth();
      const double after = wilson_interval(2 * s, 2 * n).halfwidth();
      CHECK(after < before);
    }
  CHECK_THROWS_AS((void)wilson_interval(5, 0), HarnessError);
  CHECK_THROWS_AS((void)wilson_interval(11, 10), HarnessError);
  CHECK_THROWS_AS((void)wilson_interval(-1, 10), HarnessError);
}

TEST_CASE("estimate_success reproduces known acceptance rates deterministically") {
  const RepeatedProtocol always = repeat(subset_game(4, 4), 1, 1);
  const ProverStrategy zero =
      deterministic_prover(always, [](int, const std::vector<int>&, int) { return 0; });
  const SuccessEstimate sure = estimate_success(zero, always, 64, 7);
  CHECK(sure.successes == 64);
  CHECK(sure.estimate == 1.0);
  CHECK(sure.interval.upper == 1.0);

  const RepeatedProtocol quarter = repeat(subset_game(4, 1), 1, 1);
  const ProverStrategy zq =
      deterministic_prover(quarter, [](int, const std::vector<int>&, int) { return 0; });
  const SuccessEstimate a = estimate_success(zq, quarter, 2000, 20260814);
  CHECK(a.interval.lower <= 0.25);
  CHECK(a.interval.upper >= 0.25);
  CHECK(std::abs(a.estimate - 0.25) < 0.05);

  // same seed, same split streams, regardless of the thread count
  const SuccessEstimate b = estimate_success(zq, quarter, 2000, 20260814, 1);
  const SuccessEstimate c = estimate_success(zq, quarter, 2000, 20260814, 4);
  CHECK(a.successes == b.successes);
  CHECK(a.successes == c.successes);

  CHECK_THROWS_AS((void)estimate_success(zq, quarter, 29, 1), HarnessError);
}

TEST_CASE("raz check: conditioning fair bits on an OR moves each by exactly 1/6") {
  const std::vector<std::vector<double>> fair(2, {0.5, 0.5});
  const RazCheck c =
      raz_check(2, fair, [](const std::vector<int>& x) { return x[0] == 1 || x[1] == 1; });
  // X_i | W is Bernoulli(2/3) against Bernoulli(1/2): TV = 1/6
  CHECK(c.pr_w == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(c.lhs == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  CHECK(c.joint_lhs == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  CHECK(c.bound == doctest::Approx(std::sqrt(-std::log2(0.75) / 2.0)).epsilon(1e-12));
  CHECK(c.bound == doctest::Approx(0.4555422).epsilon(1e-5));
  CHECK(c.pass);

  const RazCheck full = raz_check(2, fair, [](const std::vector<int>&) { return true; });
  CHECK(full.lhs == 0.0);
  CHECK(full.bound <= 1e-12);
  CHECK(full.pass);
}

TEST_CASE("raz check: the joint route charges impossible coordinate values as bottom mass") {
  const std::vector<std::vector<double>> fair(2, {0.5, 0.5});
  // conditioning on X_0 = 0 pins the first bit: TV_0 = 1/2, TV_1 = 0
  const RazCheck c = raz_check(2, fair, [](const std::vector<int>& x) { return x[0] == 0; });
  CHECK(c.coordinate_tv[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(c.coordinate_tv[1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(c.lhs == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(std::abs(c.lhs - c.joint_lhs) <= 1e-15);
  CHECK(c.bound == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
  CHECK(c.pass);

  // skewed ternary marginals keep both routes in exact agreement
  const std::vector<std::vector<double>> skew{{0.5, 0.3, 0.2}, {0.1, 0.6, 0.3}, {0.25, 0.25, 0.5}};
  const RazCheck s = raz_check(3, skew, [](const std::vector<int>& x) {
    return (x[0] + 2 * x[1] + x[2]) % 3 != 1;
  });
  CHECK(std::abs(s.lhs - s.joint_lhs) <= 1e-14);
  CHECK(s.pass);
}

TEST_CASE("raz check rejects degenerate inputs") {
  const std::vector<std::vector<double>> fair(2, {0.5, 0.5});
  CHECK_THROWS_AS((void)raz_check(2, fair, [](const std::vector<int>&) { return false; }),
                  HarnessError);
  CHECK_THROWS_AS((void)raz_check(3, fair, [](const std::vector<int>&) { return true; }),
                  HarnessError);
  const std::vector<std::vector<double>> off(2, {0.5, 0.6});
  CHECK_THROWS_AS((void)raz_check(2, off, [](const std::vector<int>&) { return true; }),
                  HarnessError);
  const std::vector<std::vector<double>> big(17, {0.5, 0.5});
  CHECK_THROWS_AS((void)raz_check(17, big, [](const std::vector<int>&) { return true; }),
                  HarnessError);
}

TEST_CASE("flooding check reproduces hand-computed leak values") {
  const std::vector<double> fair{0.5, 0.5};
  // copying the only symbol: (y, s=y) vs (y', s) has TV exactly 1/2
  const FloodingCheck copy =
      flooding_check(1, 1, fair, [](const std::vector<int>& y) { return y[0]; });
  CHECK(copy.lhs == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(copy.bound == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
  CHECK(copy.pass);

  // XOR of two fair bits: position 1 leaks nothing, position 2 everything
  const FloodingCheck parity =
      flooding_check(1, 2, fair, [](const std::vector<int>& y) { return y[0] ^ y[1]; });
  CHECK(parity.lhs == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(parity.bound == doctest::Approx(0.5).epsilon(1e-12));

  // remembering only the first symbol leaks only at position 1
  const FloodingCheck head =
      flooding_check(1, 2, fair, [](const std::vector<int>& y) { return y[0]; });
  CHECK(head.lhs == doctest::Approx(0.25).epsilon(1e-12));

  const FloodingCheck constant =
      flooding_check(2, 5, fair, [](const std::vector<int>&) { return 3; });
  CHECK(constant.lhs == 0.0);
  CHECK(constant.bound == doctest::Approx(std::sqrt(2.0 / 10.0)).epsilon(1e-12));
  CHECK(constant.pass);

  CHECK_THROWS_AS(
      (void)flooding_check(1, 2, fair, [](const std::vector<int>&) { return 2; }),
      HarnessError);  // summary label needs ell bits
  CHECK_THROWS_AS((void)flooding_check(0, 2, fair, [](const std::vector<int>&) { return 0; }),
                  HarnessError);
}

TEST_CASE("flooding sweeps stay under the bound") {
  const std::vector<double> fair{0.5, 0.5};
  for (int t = 1; t <= 3; ++t) {
    const long inputs = 1L << t;
    for (std::uint64_t table = 0; table < (1ull << inputs); ++table) {
      const auto f = [&](const std::vector<int>& y) {
        long idx = 0;
        for (int b : y) idx = idx * 2 + b;
        return static_cast<int>((table >> idx) & 1ull);
      };
      CHECK(flooding_check(1, t, fair, f).pass);
    }
  }
  SplitRng rng(314159);
  for (int s = 0; s < 200; ++s) {
    const std::uint64_t table = rng.next_u64();
    const auto f = [&](const std::vector<int>& y) {
      long idx = 0;
      for (int b : y) idx = idx * 2 + b;
      return static_cast<int>((table >> idx) & 1ull);
    };
    CHECK(flooding_check(1, 6, fair, f).pass);
  }
  // biased symbols obey the bound too
  const std::vector<double> biased{0.9, 0.1};
  const FloodingCheck b =
      flooding_check(1, 3, biased, [](const std::vector<int>& y) { return y[1]; });
  CHECK(b.pass);
  CHECK(b.lhs == doctest::Approx(2.0 * 0.9 * 0.1 / 3.0).epsilon(1e-12));
}

TEST_CASE("hppw check matches the hand computation on the bad-correlations law") {
  // k=2, delta=0.9: all-ones mass 0.81, each all-but-one 0.095
  std::vector<double> law{0.0, 0.095, 0.095, 0.81};
  const HppwCheck c = hppw_check(law, 2.0, 2);
  const double pr_w = 0.81 + 2 * 0.095 * 0.25;  // w(L=1) = 2^{2(1-2)} = 1/4
  CHECK(c.epsilon == doctest::Approx(0.81).epsilon(1e-12));
  CHECK(c.pr_w == doctest::Approx(pr_w).epsilon(1e-12));
  CHECK(c.lhs == doctest::Approx(0.095 * 0.25 / pr_w).epsilon(1e-12));
  CHECK(c.rhs ==
        doctest::Approx((std::log2(2.0) - std::log2(0.81)) / 4.0 + 0.25).epsilon(1e-12));
  CHECK(c.pass);

  std::vector<double> all_ones(8, 0.0);
  all_ones[7] = 1.0;
  const HppwCheck top = hppw_check(all_ones, 1.0, 3);
  CHECK(top.lhs == 0.0);
  CHECK(top.epsilon == 1.0);
  CHECK(top.pass);

  std::vector<double> hopeless{1.0, 0.0, 0.0, 0.0};
  CHECK_THROWS_AS((void)hppw_check(hopeless, 1.0, 2), HarnessError);
  CHECK_THROWS_AS((void)hppw_check(law, 0.0, 2), HarnessError);
  CHECK_THROWS_AS((void)hppw_check(std::vector<double>{0.5, 0.5, 0.0}, 1.0, 1), HarnessError);
}

TEST_CASE("the checker's event weight and the reduction's soft decision differ by one accept") {
  // The correlation check weights W by 2^{nu(L-t)}; the in-protocol gate fires
  // with 2^{nu(L+1-t)} because the embedded coordinate's own verdict is
  // assumed accepting, not counted.  Keep the two exponents distinct.
  CHECK(softdecision_probability(1.0, 2, 1) == 1.0);  // 2^{1+1-2} = 1
  std::vector<double> point(8, 0.0);
  point[6] = 1.0;  // L = 2 exactly (bits 110)
  const HppwCheck c = hppw_check(point, 1.0, 2);
  CHECK(c.pr_w == 1.0);                                    // w(L=2) = 2^0 = 1
  CHECK(c.lhs == doctest::Approx(1.0 / 3.0).epsilon(1e-12));  // one failing bit of three
  // at L = t-1 the checker halves while the protocol gate still fires
  CHECK(softdecision_probability(1.0, 2, 1) != std::exp2(1.0 * (1 - 2)));
}

TEST_CASE("hppw holds across dense random laws") {
  SplitRng root(99);
  for (int i = 0; i < 200; ++i) {
    SplitRng rng = root.split(i);
    const int k = 2 + static_cast<int>(rng.uniform_below(4));
    const int t = 1 + static_cast<int>(rng.uniform_below(k));
    const double nu = std::vector<double>{0.5, 1.0, 2.0}[rng.uniform_below(3)];
    std::vector<double> law(1u << k);
    double sum = 0.0;
    for (auto& p : law) {
      p = -std::log(1.0 - rng.uniform());
      sum += p;
    }
    for (auto& p : law) p /= sum;
    CHECK(hppw_check(law, nu, t).pass);
  }
}

TEST_CASE("bound calculators match the hand-checked corollary values") {
  // raw carries the corollary's literal value even when it exceeds 1
  const BoundValue hand = bound_public(0.5, 2, 100, 100);
  CHECK(std::abs(hand.raw - 24.0 * std::exp(-1.5625)) <= 1e-9);
  CHECK(hand.raw > 1.0);
  CHECK(hand.vacuous);
  CHECK(hand.effective() == 1.0);

  // boundary t/k = eps: the exponential dies, 6m^2 remains, flagged vacuous
  const BoundValue boundary = bound_public(0.5, 3, 10, 5);
  CHECK(boundary.raw == doctest::Approx(54.0).epsilon(1e-12));
  CHECK(boundary.vacuous);
  CHECK(boundary.effective() == 1.0);

  // a conclusion above 1 is reported raw but marked vacuous
  const BoundValue weak = bound_public(0.0, 1, 1, 1);
  CHECK(weak.raw == doctest::Approx(6.0 * std::exp(-0.25)).epsilon(1e-12));
  CHECK(weak.vacuous);

  // three-message precondition: eps < t/k - 2 log2(k)/sqrt(k).  At k = 4096
  // the cutoff sits at 0.625; small k makes it negative, always vacuous.
  const double cutoff = 1.0 - 2.0 * std::log2(4096.0) / std::sqrt(4096.0);
  CHECK(cutoff == doctest::Approx(0.625).epsilon(1e-12));
  CHECK_FALSE(bound_three(0.5, 4096, 4096).vacuous);
  CHECK(bound_three(cutoff + 0.01, 4096, 4096).vacuous);
  CHECK(bound_three(0.1, 16, 16).vacuous);
  const BoundValue strong = bound_three(0.5, 10000, 10000);
  const double shift = 1.0 - 2.0 * std::sqrt(10000.0) * std::log2(10000.0) / 10000.0;
  CHECK(strong.raw ==
        doctest::Approx(2.0 * std::exp(-(10000.0 / 9.0) * (shift - 0.5) * (shift - 0.5)))
            .epsilon(1e-12));
  CHECK_FALSE(strong.vacuous);

  // monotone decreasing in k at fixed t/k > eps
  for (double eps : {0.1, 0.25}) {
    double prev = 1e300;
    for (int k : {100, 400, 1600, 6400}) {
      const double raw = bound_public(eps, 1, k, k).raw;
      CHECK(raw < prev);
      prev = raw;
    }
  }
  CHECK_THROWS_AS((void)bound_public(1.5, 1, 4, 2), HarnessError);
  CHECK_THROWS_AS((void)bound_three(0.5, 4, 5), HarnessError);
}

TEST_CASE("the informal calculator fixes its constant to 1 and says so") {
  const InformalBound half = bound_informal(0.0, 4, 2, 4, InformalVariant::standard);
  CHECK(half.value == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(half.label == "unit-constant informal bound");

  const InformalBound thr = bound_informal(0.5, 100, 1, 75, InformalVariant::threshold);
  CHECK(thr.value == doctest::Approx(std::exp2(-0.0625 * 100.0)).epsilon(1e-12));

  // s at the target rate: no amplification claimed
  CHECK(bound_informal(1.0, 64, 1, 64, InformalVariant::standard).value == 1.0);
  CHECK(bound_informal(0.75, 64, 1, 48, InformalVariant::threshold).value == 1.0);
  CHECK_THROWS_AS((void)bound_informal(-0.1, 4, 1, 4, InformalVariant::standard), HarnessError);
}

TEST_CASE("experiment configs parse, render and validate") {
  const std::string text =
      "# reduction smoke run\n"
      "kind = reduction-run\n"
      "protocol = subset(n=4,s=3)\n"
      "prover = zero\n"
      "trials = 30\n"
      "seed = 11\n"
      "params.mode = desk-public\n"
      "params.xi = 0.5625\n"
      "params.k = 2\n"
      "params.t = 2\n"
      "params.m = 1\n"
      "params.iter = 6\n"
      "params.eps0 = 0.15\n"
      "params.eps = 0.005\n"
      "params.delta = 0.05\n"
      "params.eta = 0.5\n"
      "params.flood_t = 2\n"
      "params.enumerate_limit = 8\n";
  const ExperimentConfig cfg = ExperimentConfig::parse(text);
  cfg.validate();
  CHECK(cfg.kind == "reduction-run");
  CHECK(cfg.has_params);
  CHECK(cfg.params.k == 2);
  CHECK(cfg.params.eps == 0.005);
  CHECK(cfg.params.flood_t_override == 2);
  CHECK(cfg.params.family_enumerate_limit == 8);
  CHECK_FALSE(cfg.params.conformant);

  // canonical render is a fixpoint of parse
  const std::string rendered = cfg.render();
  CHECK(ExperimentConfig::parse(rendered).render() == rendered);

  // paper-grade params round-trip through the factories too
  ExperimentConfig paper;
  paper.kind = "reduction-run";
  paper.protocol = "subset(n=4,s=3)";
  paper.prover = "zero";
  paper.trials = 1;
  paper.seed = 3;
  paper.has_seed = true;
  paper.params = ReductionParams::paper_public(0.5, 8, 3, 2, 2);
  paper.has_params = true;
  const ExperimentConfig back = ExperimentConfig::parse(paper.render());
  CHECK(back.params.conformant);
  CHECK(back.params.iter == paper.params.iter);
  CHECK(back.params.eps == paper.params.eps);
  CHECK(back.render() == paper.render());

  CHECK_THROWS_AS((void)ExperimentConfig::parse("kind = lemma-check\nkind = raz\n"),
                  HarnessError);
  CHECK_THROWS_AS((void)ExperimentConfig::parse("mystery = 1\n"), HarnessError);
  CHECK_THROWS_AS((void)ExperimentConfig::parse("kind\n"), HarnessError);

  ExperimentConfig bad;
  bad.kind = "lemma-check";
  bad.suite = "raz";
  CHECK_THROWS_AS(bad.validate(), HarnessError);  // no seed
  bad.has_seed = true;
  bad.suite = "unknown";
  CHECK_THROWS_AS(bad.validate(), HarnessError);
  bad.suite = "raz";
  bad.validate();
  bad.kind = "reduction-run";
  CHECK_THROWS_AS(bad.validate(), HarnessError);  // missing protocol/prover/params
}

TEST_CASE("lemma suites pass and rerun byte-identically") {
  ExperimentConfig cfg;
  cfg.kind = "lemma-check";
  cfg.suite = "raz";
  cfg.trials = 1;
  cfg.seed = 5;
  cfg.has_seed = true;
  const ExperimentResult first = run_config(cfg);
  CHECK(first.pass);
  CHECK(first.trials == 15 + 255);  // nonempty events over 2 and 3 fair bits
  CHECK(first.estimate == 1.0);
  CHECK(first.records.size() == 270);
  const ExperimentResult second = run_config(cfg);
  CHECK(first.file_payload() == second.file_payload());
  CHECK(first.wall_seconds >= 0.0);
  CHECK(first.file_payload().find("wall") == std::string::npos);

  cfg.suite = "flooding";
  cfg.trials = 50;  // sampled maps per round count; exhaustive part is fixed
  const ExperimentResult fl = run_config(cfg);
  CHECK(fl.pass);
  CHECK(fl.records.size() == 8);  // t = 1..4 exhaustive, 5..8 sampled

  cfg.suite = "hppw";
  cfg.trials = 60;
  const ExperimentResult hp = run_config(cfg);
  CHECK(hp.pass);
  CHECK(hp.trials == 45 + 1);  // 5x3x3 bad-correlations grid + pooled random record
}

TEST_CASE("the forgetfulness suite ships a genuinely leaking instance") {
  ExperimentConfig cfg;
  cfg.kind = "lemma-check";
  cfg.suite = "forgetfulness";
  cfg.trials = 1;  // random instances on top of the shipped one
  cfg.seed = 17;
  cfg.has_seed = true;
  const ExperimentResult res = run_config(cfg);
  CHECK(res.pass);
  CHECK(res.records.size() == 2);
  const json shipped = json::parse(res.records[0]);
  CHECK(shipped["instance"] == "shipped-adversarial");
  CHECK(shipped["exact"].get<bool>());
  CHECK(shipped["distance"].get<double>() > 1e-3);  // the memory really leaks
  CHECK(shipped["distance"].get<double>() <= shipped["bound"].get<double>() + 1e-6);
  CHECK(shipped["bound"].get<double>() == 1.0);  // N = 2 outcomes, eta = 0.5
}

TEST_CASE("reduction-run configs aggregate run records with a threshold target") {
  ExperimentConfig cfg;
  cfg.kind = "reduction-run";
  cfg.protocol = "subset(n=4,s=3)";
  cfg.prover = "zero";
  cfg.trials = 40;
  cfg.seed = 20260814;
  cfg.has_seed = true;
  cfg.params = ReductionParams::desk_public(0.5625, 2, 2, 1, 6, 0.15, 0.005, 0.05, 0.5, 2);
  cfg.has_params = true;
  const ExperimentResult res = run_config(cfg);
  CHECK(res.trials == 40);
  CHECK(res.records.size() == 40);
  CHECK(res.target_valid);
  CHECK(res.pass);

  long completed = 0, accepted = 0;
  for (const std::string& line : res.records) {
    const json rec = json::parse(line);
    CHECK(rec.contains("seed"));
    CHECK(rec.contains("i"));
    const bool done = !rec.contains("abort_cause");
    completed += done;
    if (done) CHECK(rec["external_verdict"].get<bool>());
    accepted += rec["external_verdict"].is_boolean() && rec["external_verdict"].get<bool>();
  }
  CHECK(res.estimate == doctest::Approx(static_cast<double>(accepted) / 40).epsilon(1e-12));
  CHECK(res.target ==
        doctest::Approx(1.0 * completed / 40).epsilon(1e-12));  // t/k = 1 here
  const json summary = json::parse(res.summary);
  CHECK(summary["completed"].get<long>() == completed);
  CHECK(summary["config"].get<std::string>() == cfg.render());

  // byte determinism across reruns, the acceptance gate for every experiment
  CHECK(run_config(cfg).file_payload() == res.file_payload());

  ExperimentConfig wrong = cfg;
  wrong.protocol = "preimage(n=4,w=2)";
  CHECK_THROWS_AS((void)run_config(wrong), HarnessError);
  wrong = cfg;
  wrong.prover = "mystery";
  CHECK_THROWS_AS((void)run_config(wrong), HarnessError);
}

TEST_CASE("run_config writes its payload to the requested file") {
  ExperimentConfig cfg;
  cfg.kind = "bound-table";
  cfg.variant = "public";
  cfg.trials = 1;
  cfg.seed = 1;
  cfg.has_seed = true;
  cfg.output_path = "harness_test_bounds.jsonl";
  const ExperimentResult res = run_config(cfg);
  CHECK(res.pass);
  std::ifstream in(cfg.output_path);
  REQUIRE(static_cast<bool>(in));
  std::ostringstream buf;
  buf << in.rdbuf();
  CHECK(buf.str() == res.file_payload());
  in.close();
  std::remove(cfg.output_path.c_str());
}

TEST_CASE("bound tables gate on monotonicity and label informal numbers") {
  ExperimentConfig cfg;
  cfg.kind = "bound-table";
  cfg.variant = "three";
  cfg.trials = 1;
  cfg.seed = 1;
  cfg.has_seed = true;
  const ExperimentResult three = run_config(cfg);
  CHECK(three.pass);
  bool saw_vacuous = false, saw_sharp = false;
  for (const std::string& line : three.records) {
    const json rec = json::parse(line);
    if (!rec.contains("raw")) continue;
    saw_vacuous = saw_vacuous || rec["vacuous"].get<bool>();
    saw_sharp = saw_sharp || (!rec["vacuous"].get<bool>() && rec["raw"].get<double>() < 1e-6);
  }
  CHECK(saw_vacuous);  // small k violates the precondition and is flagged
  CHECK(saw_sharp);    // large k drives the bound to negligible

  cfg.variant = "informal";
  const ExperimentResult inf = run_config(cfg);
  CHECK(inf.pass);
  CHECK_FALSE(inf.target_valid);
  for (const std::string& line : inf.records)
    CHECK(json::parse(line)["label"] == "unit-constant informal bound");
}

TEST_CASE("the quick property suite is all green") {
  for (const auto& [name, ok] : run_property_suite(7)) {
    INFO(name);
    CHECK(ok);
  }
}
