#pragma once

// Flooding-based Prepare / Repair' on top of the value-estimation machinery,
// plus a direct tester for the forgetfulness guarantee: the output ensemble
// of the disturb-then-repair chain is nearly independent of which projection
// from the family did the disturbing.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "parrep/measure.hpp"

namespace parrep {

// A family of projective measurements on a shared layout, all with the same
// outcome label set {0, ..., n_outcomes-1}. The bound constant N in every
// flooding statement is n_outcomes, not the member count.
class ProjectionFamily {
 public:
  static ProjectionFamily enumerated(RegisterLayout layout, std::vector<Pvm> members);
  // Family too large to index (e.g. one member per verifier query vector and
  // coin string). Only uniform sampling is available; member() throws.
  static ProjectionFamily sampled(RegisterLayout layout, int n_outcomes,
                                  std::function<Pvm(SplitRng&)> sampler,
                                  std::uint64_t nominal_count);

  const RegisterLayout& layout() const { return layout_; }
  int n_outcomes() const { return n_outcomes_; }
  std::uint64_t member_count() const { return member_count_; }
  bool enumerable() const { return !members_.empty(); }

  const Pvm& member(std::uint64_t index) const;
  // Uniform draw; returns the member index (or 0 for sampled families).
  std::pair<std::uint64_t, Pvm> sample(SplitRng& rng) const;

 private:
  ProjectionFamily() = default;
  RegisterLayout layout_;
  int n_outcomes_ = 0;
  std::uint64_t member_count_ = 0;
  std::vector<Pvm> members_;
  std::function<Pvm(SplitRng&)> sampler_;
};

// Derived flooding schedule. T = ceil(4*ell / eta^3) rounds unless overridden
// for exploratory runs; overriding clears `conformant` and nothing gated on
// the formal guarantees should use such params.
struct FloodingParams {
  double epsilon = 0;
  double delta = 0;
  double eta = 0;
  int ell = 0;  // qubit count of the state being flooded
  long T = 0;
  double inner_epsilon = 0;  // epsilon / 2T
  double inner_delta = 0;    // delta^2 / 64T^2
  double inner_eta = 0;      // eta / 2T
  bool conformant = true;

  static FloodingParams make(double epsilon, double delta, double eta, int ell);
  static FloodingParams with_override(double epsilon, double delta, double eta, int ell,
                                      long t_override);
};

struct FloodingRound {
  long index = 0;
  std::uint64_t member = 0;   // which projection was sampled
  double m_value = 0;         // fine-grid value measured at the start of the round
  int pi_outcome = 0;
  long repair_m_calls = 0;
  long repair_p_calls = 0;
  bool repair_exhausted = false;
};

struct FloodingTrace {
  long planned_rounds = 0;
  long initial_repair_m_calls = 0;  // repair_prime only
  long initial_repair_p_calls = 0;
  std::vector<FloodingRound> rounds;

  long total_m_calls() const;  // fine-grid measurements, incl. those inside repair
  long total_p_calls() const;  // projection-family measurements
  std::string to_jsonl() const;
};

struct PrepareResult {
  QuantumState state;
  double value = 0;  // fine-grid outcome of the closing measurement
  long sampled_t = 0;
  FloodingTrace trace;
  bool call_budget_ok = true;  // total calls <= 8 (T + T^2/eta)
};

struct RepairPrimeResult {
  QuantumState state;
  double final_value = 0;
  FloodingTrace trace;
  bool call_budget_ok = true;
};

// Sample t <- [T]; run t-1 flooding rounds (fine measurement, random family
// member, repair back to the just-measured value); close with one fine
// measurement whose value is returned alongside the state.
PrepareResult prepare(const ValueMeasurementFamily& family, const ProjectionFamily& projections,
                      QuantumState state, const FloodingParams& fp, SplitRng& rng);

// One repair against the disturbing measurement's observed outcome, then
// exactly T flooding rounds, then a closing fine measurement.
RepairPrimeResult repair_prime(const ValueMeasurementFamily& family,
                               const ProjectionFamily& projections, const Pvm& disturbing,
                               int outcome, QuantumState sigma, double p_prime,
                               const FloodingParams& fp, SplitRng& rng);

struct ForgetfulnessResult {
  double distance = 0;
  bool exact = true;
  double pruned_mass = 0;      // exact mode: probability mass dropped by pruning
  double ci_halfwidth = 0;     // sampling mode: bootstrap 95% halfwidth
  long samples = 0;            // sampling mode: runs per planted member
  std::uint64_t branch_count = 0;
};

struct ForgetfulnessOptions {
  std::uint64_t max_members = 8;
  std::uint64_t max_branches = 1000000;
  long max_rounds = 256;       // refuse exact mode beyond this T
  int max_dim = 64;
  long fallback_samples = 240; // per planted member
  std::uint64_t fallback_seed = 0x9e3779b9;
};

// Trace distance between (planted member identity, output state) and (fresh
// member identity, output state) for the chain: coarse measurement, prepare,
// measure the planted member, repair_prime. Exact when the family and the
// channel step count are small; otherwise Monte Carlo with a bootstrap CI.
ForgetfulnessResult forgetfulness_distance(const ValueMeasurementFamily& family,
                                           const ProjectionFamily& projections,
                                           const QuantumState& state, const FloodingParams& fp,
                                           const ForgetfulnessOptions& opts = {});

}  // namespace parrep
