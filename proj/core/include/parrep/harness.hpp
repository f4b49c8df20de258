#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "parrep/reductions.hpp"

namespace parrep {

struct HarnessError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// 95% two-sided normal quantile used by every interval in the harness.
inline constexpr double kWilsonZ = 1.959963984540054;

struct WilsonInterval {
  double lower = 0.0;
  double upper = 0.0;
  double halfwidth() const { return 0.5 * (upper - lower); }
};

WilsonInterval wilson_interval(long successes, long trials);

struct SuccessEstimate {
  long trials = 0;
  long successes = 0;
  double estimate = 0.0;
  WilsonInterval interval;
};

// Monte Carlo acceptance frequency of the strategy, Wilson 95% interval.
// Trials run in parallel on per-trial derived streams and fold in trial
// order, so the result depends only on (strategy, protocol, trials, seed).
// Strategy callbacks must be safe to call concurrently.
SuccessEstimate estimate_success(const ProverStrategy& prover, const RepeatedProtocol& rp,
                                 long trials, std::uint64_t seed, int threads = 0);

// Conditioning a product law on an event moves the average coordinate by at
// most sqrt(-log2 Pr[W] / k).  lhs is computed twice: from the per-coordinate
// marginals directly, and from the joint laws of the resample-one-coordinate
// experiment (undefined conditionals park their mass on a bottom outcome).
// The two routes agree identically; both are reported.
struct RazCheck {
  int k = 0;
  double pr_w = 0.0;
  std::vector<double> coordinate_tv;
  double lhs = 0.0;        // mean of coordinate_tv
  double joint_lhs = 0.0;  // resampled-joint route
  double bound = 0.0;
  bool pass = false;
};

RazCheck raz_check(int k, const std::vector<std::vector<double>>& marginals,
                   const std::function<bool(const std::vector<int>&)>& event_predicate);

// Classical flooding statement: t i.i.d. draws, an adversary that keeps only
// an ell-bit summary s = f(y_1..y_t) cannot tell the j-th draw from a fresh
// one (j uniform), up to sqrt(ell / 2t) in trace distance.
struct FloodingCheck {
  int ell = 0;
  int t_rounds = 0;
  double lhs = 0.0;
  double bound = 0.0;
  bool pass = false;
};

FloodingCheck flooding_check(int ell, int t_rounds, const std::vector<double>& marginal_law,
                             const std::function<int(const std::vector<int>&)>& memory_map);

// Soft-decision correlation bound: condition on the event W that fires with
// probability min(1, 2^{nu(L - t)}) given L = sum D_i; the average failure
// probability of a coordinate under W stays close to 1 - t/k.
struct HppwCheck {
  int k = 0;
  double nu = 0.0;
  int t = 0;
  double epsilon = 0.0;  // Pr[sum D >= t]
  double pr_w = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
};

HppwCheck hppw_check(const std::vector<double>& joint_law, double nu, int t);

// Soundness bounds of the two amplification corollaries, negligible terms
// dropped.  raw is never clamped; vacuous marks values >= 1 or violated
// preconditions (public: epsilon < t/k; three-message:
// epsilon < t/k - 2 log2(k)/sqrt(k)).
struct BoundValue {
  double raw = 0.0;
  bool vacuous = false;
  double effective() const { return raw < 1.0 ? raw : 1.0; }
};

BoundValue bound_public(double epsilon, int m, int k, int t);
BoundValue bound_three(double epsilon, int k, int t);

// Headline-rate calculator with the O(.) constant fixed to 1: 2^{-(1-s)^2}
// (standard) or 2^{-(t/k-s)^2} (threshold), raised to k/m^2.  Not a certified
// value; the label travels with the number.
enum class InformalVariant { standard, threshold };

struct InformalBound {
  double value = 0.0;
  std::string label;  // always "unit-constant informal bound"
};

InformalBound bound_informal(double s, int k, int m, int t, InformalVariant variant);

// ---------------------------------------------------------------------------
// experiment plumbing

// Flat key-value experiment description (diff-able, language-neutral).
// Recognized keys: kind, suite, protocol, prover, variant, trials, seed, out,
// and params.* for reduction parameters.
struct ExperimentConfig {
  std::string kind;      // lemma-check | reduction-run | bound-table
  std::string suite;     // lemma-check: raz | flooding | hppw | forgetfulness
  std::string protocol;  // reduction-run: catalog name
  std::string prover;    // reduction-run: zero | guess | bad:<delta>
  std::string variant;   // bound-table: public | three | informal
  ReductionParams params;
  bool has_params = false;
  long trials = 1;
  std::uint64_t seed = 0;
  bool has_seed = false;
  std::string output_path;

  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig load(const std::string& path);
  std::string render() const;  // canonical key order, round-trips through parse
  void validate() const;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<std::string> records;  // line-delimited structured records
  std::string summary;               // one summary record
  long trials = 0;
  double estimate = 0.0;
  WilsonInterval interval;
  double target = 0.0;  // comparison value (bound or promised rate)
  bool target_valid = false;
  bool pass = true;
  double wall_seconds = 0.0;  // measured, deliberately absent from files

  // what gets persisted: records, then the summary, newline-delimited
  std::string file_payload() const;
};

// Dispatches the experiment, writes the payload when an output path is set,
// returns the aggregate.  Bitwise reproducible from (config, seed).
ExperimentResult run_config(const ExperimentConfig& config);

// Small self-contained property checks backing the CLI `props` subcommand;
// returns (name, pass) pairs.
std::vector<std::pair<std::string, bool>> run_property_suite(std::uint64_t seed);

}  // namespace parrep
