// Acceptance gate: one self-contained check per shipped guarantee, each
// printing a single PASS/FAIL line.  Tolerances are pinned here and nowhere
// else; the process exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "parrep/harness.hpp"
#include "test_util.hpp"

using namespace parrep;

namespace {

std::string fmt(double x, int digits = 4) {
  std::ostringstream os;
  os.precision(digits);
  os << x;
  return os.str();
}

// --------------------------------------------------------------------------
// 1. value estimation: exact expectation and projective repeats

GameSpec random_small_game(int work_dim, int coins, SplitRng& rng) {
  GameSpec g;
  g.layout = RegisterLayout{{"w", work_dim}, {"z", 2}};
  g.response_registers = {"z"};
  g.randomness_count = coins;
  auto table = std::make_shared<std::vector<std::vector<bool>>>(coins);
  for (auto& row : *table) {
    row.resize(2);
    for (std::size_t z = 0; z < 2; ++z) row[z] = rng.uniform() < 0.5;
  }
  g.verdict = [table](int r, int z) { return (*table)[r][z]; };
  auto us = std::make_shared<std::vector<Unitary>>();
  for (int r = 0; r < coins; ++r) us->push_back(testutil::random_unitary(g.layout, rng));
  g.adversary = [us](int r) { return (*us)[r]; };
  return g;
}

bool criterion_valest(std::string& detail) {
  double worst_gap = 0.0;
  long repeats_ok = 0, repeats = 0;
  SplitRng root(101);
  for (int i = 0; i < 10; ++i) {
    SplitRng rng = root.split(i);
    const int work = 1 << (1 + i % 2);        // at most 3 prover qubits with z
    const int coins = 1 << (1 + (i * 3) % 3); // at most 3 coin bits
    const GameSpec game = random_small_game(work, coins, rng);
    const ValueMeasurementFamily fam = ValueMeasurementFamily::from_game(game);
    const ValueMeasurement vm = fam.at(0.15, 0.01);
    const QuantumState psi = testutil::random_pure(game.layout, rng);

    const double exact = valest_exact(fam, psi);
    double prebinned = 0.0;
    for (const auto& bw : vm.outcome_distribution(psi))
      prebinned += bw.probability * bw.mean_eigenvalue;
    worst_gap = std::max(worst_gap, std::abs(prebinned - exact));

    const ValestOutcome first = valest(vm, psi, rng);
    QuantumState held = first.post;
    for (int rep = 0; rep < 100; ++rep) {
      const ValestOutcome again = valest(vm, held, rng);
      ++repeats;
      repeats_ok += again.bin == first.bin;
      held = again.post;
    }
  }
  detail = "expectation gap " + fmt(worst_gap, 2) + " (tol 1e-9), identical repeats " +
           std::to_string(repeats_ok) + "/" + std::to_string(repeats);
  return worst_gap <= 1e-9 && repeats_ok == repeats;
}

// --------------------------------------------------------------------------
// 2. repair after a binary disturbance

bool criterion_repair(std::string& detail) {
  const double eps = 0.05, delta = 0.01, eta = 0.1;
  const RegisterLayout layout{{"x", 8}};
  SplitRng setup(202);
  const ValueMeasurementFamily fam =
      ValueMeasurementFamily::from_operator(layout, testutil::random_success_operator(8, setup));
  const ValueMeasurement vm = fam.at(eps, delta);
  const Pvm probe =
      Pvm::binary(Projector::onto_vector(layout, testutil::random_unit_vector(8, setup)));
  const QuantumState rho = testutil::random_density(layout, setup);

  const long trials = 2000;
  long far = 0;
  SplitRng root(203);
  for (long trial = 0; trial < trials; ++trial) {
    SplitRng rng = root.split(trial);
    const ValestOutcome first = valest(vm, rho, rng);
    const MeasureResult d = measure_projective(first.post, probe, rng);
    const RepairResult rr = repair(vm, probe, d.outcome_index, d.post, first.value, eta, rng);
    if (std::abs(first.value - rr.final_value) >= 2.0 * eps) ++far;
  }
  const double upper = wilson_interval(far, trials).upper;
  const double bound = vm.n_outcomes() * (eta + delta) + 4.0 * std::sqrt(delta);
  detail = std::to_string(far) + "/" + std::to_string(trials) + " moved >= 2eps, CI upper " +
           fmt(upper) + " <= N(eta+delta)+4sqrt(delta) = " + fmt(bound);
  return upper <= bound + 1e-12;
}

// --------------------------------------------------------------------------
// 3. memoryless prepare / repair' at a conformant flooding schedule

bool criterion_prepare_repair(std::string& detail) {
  const double eps = 0.1, delta = 0.05, eta = 0.5;
  const RegisterLayout layout{{"x", 4}};
  SplitRng setup(303);
  const ValueMeasurementFamily fam =
      ValueMeasurementFamily::from_operator(layout, testutil::random_success_operator(4, setup));
  const ProjectionFamily projections = ProjectionFamily::enumerated(
      layout,
      {Pvm::binary(Projector::onto_vector(layout, testutil::random_unit_vector(4, setup))),
       Pvm::binary(Projector::onto_vector(layout, testutil::random_unit_vector(4, setup)))});
  const FloodingParams fp = FloodingParams::make(eps, delta, eta, 2);
  if (fp.T != 64 || !fp.conformant) {
    detail = "schedule not the pinned conformant T = 64";
    return false;
  }
  const ValueMeasurement outer = fam.at(eps, delta);

  const long trials = 500;
  long far_prepare = 0, far_final = 0, budget_bad = 0;
  SplitRng root(304);
  for (long trial = 0; trial < trials; ++trial) {
    SplitRng rng = root.split(trial);
    const QuantumState psi = testutil::random_pure(layout, rng);
    const ValestOutcome first = valest(outer, psi, rng);
    const PrepareResult prep = prepare(fam, projections, first.post, fp, rng);
    const auto [idx, planted] = projections.sample(rng);
    const MeasureResult d = measure_projective(prep.state, planted, rng);
    const RepairPrimeResult rp =
        repair_prime(fam, projections, planted, d.outcome_index, d.post, prep.value, fp, rng);
    budget_bad += !prep.call_budget_ok || !rp.call_budget_ok;
    far_prepare += std::abs(first.value - prep.value) >= 4.0 * eps;
    far_final += std::abs(first.value - rp.final_value) >= 4.0 * eps;
  }
  const double bound = outer.n_outcomes() * (eta + 4.0 * delta);
  const double up_prepare = wilson_interval(far_prepare, trials).upper;
  const double up_final = wilson_interval(far_final, trials).upper;
  detail = "prepare moved " + std::to_string(far_prepare) + ", final moved " +
           std::to_string(far_final) + " of " + std::to_string(trials) + "; CI uppers " +
           fmt(up_prepare) + ", " + fmt(up_final) + " <= N(eta+4delta) = " + fmt(bound);
  return budget_bad == 0 && up_prepare <= bound + 1e-12 && up_final <= bound + 1e-12;
}

// --------------------------------------------------------------------------
// 4-7. lemma suites through the experiment runner

bool lemma_suite(const std::string& suite, long trials, std::uint64_t seed, std::string& detail) {
  ExperimentConfig cfg;
  cfg.kind = "lemma-check";
  cfg.suite = suite;
  cfg.trials = trials;
  cfg.seed = seed;
  cfg.has_seed = true;
  const ExperimentResult res = run_config(cfg);
  detail = std::to_string(res.trials) + " checks, " +
           std::to_string(static_cast<long>(res.estimate * res.trials + 0.5)) + " passed";
  return res.pass;
}

// --------------------------------------------------------------------------
// 8. public-coin reduction mechanics

bool criterion_public_reduction(std::string& detail) {
  const PublicCoinProtocol base = subset_game(10, 9);  // per-copy success 0.9
  const RepeatedProtocol rp = repeat(base, 3, 3);
  const ProverStrategy prover =
      deterministic_prover(rp, [](int, const std::vector<int>&, int) { return 0; });
  if (std::abs(exact_success(prover, rp) - 0.729) > 1e-12) {
    detail = "product prover does not hit 0.9 per copy";
    return false;
  }
  ReductionParams params = ReductionParams::desk_public(0.729, 3, 3, 1, 6, 0.2, 0.005, 0.05,
                                                        0.5, /*flood_t_override=*/2);
  params.family_enumerate_limit = 1;  // 1000 query tuples: sample lazily

  const long runs = 300;
  long completed = 0, accepted = 0, embed_bad = 0, accept_bad = 0;
  SplitRng root(808);
  for (long run = 0; run < runs; ++run) {
    SplitRng rng = root.split(run);
    PublicCoinVerifierSession session(base);
    const ReductionRunRecord rec = run_public_coin_reduction(rp, prover, params, session, rng);
    for (const RoundLog& rl : rec.rounds)
      for (const AttemptLog& at : rl.attempts)
        embed_bad += at.qbar.at(rec.embedded_coordinate) != rl.external_query;
    if (!rec.completed()) continue;
    ++completed;
    accepted += rec.external_verdict == 1;
    // Accept(tau) = 1: the threshold verdict of the full transcript
    accept_bad += !rec.transcript.complete(rp) || !threshold_verdict(rec.verdicts, rp.t) ||
                  rec.external_verdict != 1;
  }
  const double completion = static_cast<double>(completed) / runs;
  const double estimate = static_cast<double>(accepted) / runs;
  const double hw = wilson_interval(accepted, runs).halfwidth();
  const double target = (3.0 / 3.0) * completion;
  detail = std::to_string(completed) + "/" + std::to_string(runs) + " completed, " +
           std::to_string(accept_bad) + " acceptance exceptions, " + std::to_string(embed_bad) +
           " embedding violations; embedded rate " + fmt(estimate) + " >= " + fmt(target) +
           " - " + fmt(hw);
  return embed_bad == 0 && accept_bad == 0 && completed >= 150 &&
         estimate >= target - hw - 1e-12;
}

// --------------------------------------------------------------------------
// 9. three-message reduction mechanics

struct ThreeSetup {
  std::string name;
  ThreeMessageProtocol base;
  ProverStrategy prover;
  RepeatedProtocol rp;
  ReductionParams params;
};

bool criterion_three_reduction(std::string& detail) {
  std::vector<ThreeSetup> setups;
  for (int t : {3, 5}) {
    {
      const ThreeMessageProtocol base = preimage_game(2, 1);
      const RepeatedProtocol rp = repeat(base, 5, t);
      ProverStrategy prover = preimage_guess_prover(rp);
      const double xi = t == 3 ? 0.5 : 0.03125;  // Binom(5, 1/2) tail
      if (std::abs(exact_success(prover, rp) - xi) > 1e-12) {
        detail = "preimage guess prover value drifted";
        return false;
      }
      setups.push_back({"preimage t=" + std::to_string(t), base, std::move(prover), rp,
                        ReductionParams::desk_three(xi, 5, t, 6, 0.01, 0.001, 0.05, 0.5, 1.0, 2)});
    }
    {
      const ThreeMessageProtocol base = token_game();
      const RepeatedProtocol rp = repeat(base, 5, t);
      ProverStrategy prover = bad_correlations_prover(5, 0.8);
      const double xi = t == 3 ? 1.0 : 0.32768;  // all-but-one common, all-ones rare
      if (std::abs(exact_success(prover, rp) - xi) > 1e-12) {
        detail = "bad-correlations prover value drifted";
        return false;
      }
      setups.push_back({"token t=" + std::to_string(t), base, std::move(prover), rp,
                        ReductionParams::desk_three(xi, 5, t, 6, 0.01, 0.001, 0.05, 0.5, 1.0, 2)});
    }
  }

  long reached_step6 = 0, violations = 0, runs_total = 0;
  for (const ThreeSetup& s : setups) {
    SplitRng root(909 + s.params.t);
    for (long run = 0; run < 75; ++run) {
      ++runs_total;
      SplitRng rng = root.split(run);
      ThreeMessageVerifierSession session(s.base);
      const ReductionRunRecord rec =
          run_three_message_reduction(s.rp, s.prover, s.params, session, rng);
      if (!rec.completed()) continue;  // reaching step 6 and completing coincide
      ++reached_step6;
      const RoundLog& rl = rec.rounds.at(0);
      bool ok = !rl.attempts.empty();
      for (std::size_t a = 0; ok && a + 1 < rl.attempts.size(); ++a)
        ok = !rl.attempts[a].passed;  // only the final attempt may fire
      const AttemptLog& last = rl.attempts.back();
      ok = ok && last.passed && last.check_value == 1.0;  // b = 1 at step 6
      // consistent (j, rbar): the embedded slot is blank, every other
      // coordinate's query matches its logged hidden randomness
      ok = ok && last.r_others.at(rec.embedded_coordinate) == -1;
      ok = ok && last.qbar.at(rec.embedded_coordinate) == rl.external_query;
      const std::vector<int>& z2 = rec.transcript.responses.at(1);
      for (int c = 0; c < 5; ++c) {
        if (c == rec.embedded_coordinate) continue;
        const int r = last.r_others.at(c);
        ok = ok && r >= 0 && r < s.base.randomness_dim;
        const int q = s.base.query_of(r, rec.z1bar.at(c));
        ok = ok && last.qbar.at(c) == q;
        ok = ok && rec.verdicts.at(c) == (s.base.accept(r, rec.z1bar.at(c), q, z2.at(c)) ? 1 : 0);
      }
      // the embedded verdict is the external verifier's, on its hidden coin
      const int r_ext = session.randomness();
      const int i = rec.embedded_coordinate;
      const int q_ext = s.base.query_of(r_ext, rec.z1bar.at(i));
      ok = ok && rec.external_verdict ==
                     (s.base.accept(r_ext, rec.z1bar.at(i), q_ext, z2.at(i)) ? 1 : 0);
      ok = ok && rec.verdicts.at(i) == rec.external_verdict;
      violations += !ok;
    }
  }

  // soft-decision acceptance frequencies on a (nu, t, load) grid
  long grid_bad = 0;
  SplitRng omega_root(910);
  for (double nu : {0.5, 1.0, 2.0})
    for (int t : {3, 5})
      for (long load = 0; load <= 5; ++load) {
        const double p = softdecision_probability(nu, t, load);
        const long n = 4000;
        SplitRng rng = omega_root.split(static_cast<std::uint64_t>(
            std::llround(nu * 4) * 64 + t * 8 + load));
        long fired = 0;
        for (long d = 0; d < n; ++d) fired += softdecision(nu, t, load, rng.uniform());
        const double freq = static_cast<double>(fired) / n;
        if (p == 0.0 || p == 1.0) {
          grid_bad += freq != p;
        } else {
          const double sigma = std::sqrt(p * (1.0 - p) / n);
          grid_bad += std::abs(freq - p) > 3.0 * sigma;
        }
      }

  detail = std::to_string(reached_step6) + "/" + std::to_string(runs_total) +
           " reached step 6, " + std::to_string(violations) +
           " consistency violations, soft-decision grid cells off: " + std::to_string(grid_bad);
  return violations == 0 && grid_bad == 0 && reached_step6 >= 150;
}

// --------------------------------------------------------------------------
// 10. deferred measurement orderings

bool criterion_deferred(std::string& detail) {
  PublicCoinProtocol base;
  base.m = 1;
  base.query_dims = {2};
  base.response_dims = {2};
  base.accept = [](const std::vector<int>& qs, const std::vector<int>& zs) {
    return zs[0] == qs[0];
  };
  const RepeatedProtocol rp = repeat(base, 2, 1);
  const RegisterLayout layout = prover_layout(rp);

  double worst = 0.0;
  auto root = std::make_shared<SplitRng>(1010);
  for (int inst = 0; inst < 10; ++inst) {
    SplitRng rng = root->split(inst);
    const ProverStrategy prover{
        inst % 2 == 0 ? testutil::random_pure(layout, rng) : testutil::random_density(layout, rng),
        {{"z1_0", "z1_1"}},
        [root, inst, layout](int, const std::vector<int>& qbar) {
          SplitRng r = root->split(
              static_cast<std::uint64_t>(1000 + inst * 16 + compose_digits(qbar, {2, 2})));
          return testutil::random_unitary(layout, r);
        },
        2};

    Transcript prefix;
    prefix.k = 2;
    const std::vector<int> qbar{inst % 2, (inst / 2) % 2};
    const DeferredMeasurementCheck dmc =
        deferred_measurement_check(rp, prover, prefix, qbar, 0.3, 0.1, prover.initial_state);
    worst = std::max(worst, dmc.tv_distance);
  }
  detail = "worst TV over 10 instances: " + fmt(worst, 2) + " (tol 1e-9)";
  return worst <= 1e-9;
}

// --------------------------------------------------------------------------
// 11. bound calculators

bool criterion_bounds(std::string& detail) {
  const BoundValue hand = bound_public(0.5, 2, 100, 100);
  const bool hand_ok = std::abs(hand.raw - 24.0 * std::exp(-1.5625)) <= 1e-9;
  const BoundValue boundary = bound_public(0.5, 3, 10, 5);  // t/k = eps
  const bool boundary_ok = std::abs(boundary.raw - 54.0) <= 1e-12 && boundary.vacuous;
  // precondition: eps < t/k - 2 log2(k)/sqrt(k), cutoff 0.625 at k = 4096
  const bool flag_ok = !bound_three(0.5, 4096, 4096).vacuous &&
                       bound_three(0.64, 4096, 4096).vacuous && bound_three(0.1, 16, 16).vacuous;
  detail = "hand value gap " + fmt(std::abs(hand.raw - 24.0 * std::exp(-1.5625)), 2) +
           ", boundary raw " + fmt(boundary.raw) + ", precondition flags " +
           (flag_ok ? "match" : "WRONG");
  return hand_ok && boundary_ok && flag_ok;
}

// --------------------------------------------------------------------------
// 12. byte-identical reruns

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

bool criterion_determinism(std::string& detail) {
  ExperimentConfig lemma;
  lemma.kind = "lemma-check";
  lemma.suite = "hppw";
  lemma.trials = 40;
  lemma.seed = 1212;
  lemma.has_seed = true;
  lemma.output_path = "acceptance_lemma.jsonl";

  ExperimentConfig reduce;
  reduce.kind = "reduction-run";
  reduce.protocol = "subset(n=4,s=3)";
  reduce.prover = "zero";
  reduce.trials = 10;
  reduce.seed = 1213;
  reduce.has_seed = true;
  reduce.params = ReductionParams::desk_public(0.5625, 2, 2, 1, 6, 0.15, 0.005, 0.05, 0.5, 2);
  reduce.has_params = true;
  reduce.output_path = "acceptance_reduce.jsonl";

  bool ok = true;
  for (const ExperimentConfig& cfg : {lemma, reduce}) {
    (void)run_config(cfg);
    const std::string first = read_file(cfg.output_path);
    (void)run_config(cfg);
    const std::string second = read_file(cfg.output_path);
    ok = ok && !first.empty() && first == second;
    std::remove(cfg.output_path.c_str());
  }
  detail = ok ? "lemma and reduction payloads byte-identical across reruns"
              : "payloads differ between reruns";
  return ok;
}

struct Criterion {
  int id;
  std::string name;
  std::function<bool(std::string&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<Criterion> criteria{
      {1, "value estimation: exact expectation, projective repeats", criterion_valest},
      {2, "repair tail bound after a binary disturbance", criterion_repair},
      {3, "memoryless prepare/repair' at conformant T=64", criterion_prepare_repair},
      {4, "forgetfulness of the disturbing projection",
       [](std::string& d) { return lemma_suite("forgetfulness", 5, 404, d); }},
      {5, "product-conditioning distance lemma, exhaustive events",
       [](std::string& d) { return lemma_suite("raz", 1, 505, d); }},
      {6, "classical flooding lemma, exhaustive and sampled maps",
       [](std::string& d) { return lemma_suite("flooding", 2500, 606, d); }},
      {7, "soft-decision correlation lemma on engineered and random laws",
       [](std::string& d) { return lemma_suite("hppw", 500, 707, d); }},
      {8, "public-coin reduction mechanics, 300 desk runs", criterion_public_reduction},
      {9, "three-message reduction mechanics, 300 desk runs", criterion_three_reduction},
      {10, "deferred-measurement ordering agreement", criterion_deferred},
      {11, "soundness bound calculators, hand values and flags", criterion_bounds},
      {12, "byte-identical experiment reruns", criterion_determinism},
  };

  std::vector<int> only;
  for (int a = 1; a < argc; ++a) only.push_back(std::atoi(argv[a]));

  int failures = 0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    std::string detail;
    bool pass = false;
    try {
      pass = c.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !pass;
    std::printf("criterion %2d %s  %s (%.1fs)\n    %s\n", c.id, pass ? "PASS" : "FAIL",
                c.name.c_str(), secs, detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%s\n", failures == 0 ? "all criteria passed" : "ACCEPTANCE FAILURES PRESENT");
  return failures == 0 ? 0 : 1;
}
