#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "parrep/memoryless.hpp"
#include "parrep/protocols.hpp"

namespace parrep {

struct ReductionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Parameter schedule for the single-copy extraction reductions.  The paper_*
// factories derive every knob from (xi, lambda, k, t, m) exactly as the
// analysis prescribes; desk_* take every knob verbatim and are flagged
// non-conformant so logs cannot pass desk runs off as analysis-faithful.
struct ReductionParams {
  double xi = 0.0;    // promised success probability of the k-fold prover
  int lambda_sec = 0; // security parameter (zero in desk mode)
  int k = 1;
  int t = 1;
  int m = 1;  // base-protocol rounds (1 for three-message)
  bool three_message = false;
  bool conformant = false;

  long iter = 1;       // attempt budget per round, and size of the copy pool
  double eps0 = 0.0;   // per-round slack
  double eps = 0.0;    // grid pitch of the value measurements
  double delta = 0.0;  // synthesis error of the value measurements
  double eta = 0.0;    // repair pitch
  double nu = 0.0;     // soft-decision rate (three-message only)
  long grid_points = 0;        // points of the (eps, delta) grid
  long flood_t_override = 0;   // 0 = conformant flooding round count
  // Query-tuple families larger than this are sampled lazily instead of
  // being enumerated up front (the measured statistics are identical).
  std::uint64_t family_enumerate_limit = 1024;

  static ReductionParams paper_public(double xi, int lambda_sec, int k, int t, int m);
  static ReductionParams paper_three(double xi, int lambda_sec, int k, int t);
  static ReductionParams desk_public(double xi, int k, int t, int m, long iter, double eps0,
                                     double eps, double delta, double eta,
                                     long flood_t_override = 0);
  static ReductionParams desk_three(double xi, int k, int t, long iter, double eps0, double eps,
                                    double delta, double eta, double nu,
                                    long flood_t_override = 0);

  // Flooding schedule for Prepare / Repair' at the given side-information
  // size; honors flood_t_override (which makes the schedule non-conformant).
  FloodingParams flooding(int ell_qubits) const;
};

// Two-way stream to the outside verifier: queries come out, responses go in,
// one verdict at the end.  The reduction never sees the verifier's private
// state (for three-message protocols, its hidden randomness).
class VerifierSession {
 public:
  virtual ~VerifierSession() = default;
  // Public-coin rounds are 1..m.  Three-message sessions expect respond(1,
  // z1) before query(1) and respond(2, z2) after it.
  virtual int query(int round, SplitRng& rng) = 0;
  virtual void respond(int round, int z) = 0;
  virtual bool verdict() const = 0;
};

class PublicCoinVerifierSession final : public VerifierSession {
 public:
  explicit PublicCoinVerifierSession(PublicCoinProtocol base);
  int query(int round, SplitRng& rng) override;
  void respond(int round, int z) override;
  bool verdict() const override;
  const std::vector<int>& queries() const { return qs_; }
  const std::vector<int>& responses() const { return zs_; }

 private:
  PublicCoinProtocol base_;
  std::vector<int> qs_, zs_;
};

class ThreeMessageVerifierSession final : public VerifierSession {
 public:
  explicit ThreeMessageVerifierSession(ThreeMessageProtocol base);
  int query(int round, SplitRng& rng) override;
  void respond(int round, int z) override;
  bool verdict() const override;
  int randomness() const { return r_; }  // -1 until query(1) sampled it
  int first_response() const { return z1_; }
  int second_response() const { return z2_; }

 private:
  ThreeMessageProtocol base_;
  int r_ = -1, z1_ = -1, q_ = -1, z2_ = -1;
};

// Replays a fixed query script and a fixed verdict; records what the
// reduction sends back.  For plumbing tests.
class ScriptedVerifierSession final : public VerifierSession {
 public:
  ScriptedVerifierSession(std::vector<int> queries, bool verdict);
  int query(int round, SplitRng& rng) override;
  void respond(int round, int z) override;
  bool verdict() const override { return verdict_; }
  const std::vector<int>& responses() const { return zs_; }

 private:
  std::vector<int> script_;
  std::vector<int> zs_;
  bool verdict_ = false;
};

// One CheckCoins measurement: the grid cell of the conjugated residual
// operator U(qbar)^dag M_{prefix||qbar} U(qbar), i.e. "would this state win
// under qbar", asked without running the round for real.
struct CheckCoinsOutcome {
  double value = 0.0;
  int grid_index = 0;
  double probability = 0.0;
  QuantumState state;
  Pvm cells;  // the full-grid PVM that was measured (Repair' needs it back)
};

CheckCoinsOutcome checkcoins(const RepeatedProtocol& rp, const ProverStrategy& prover,
                             const Transcript& prefix, const std::vector<int>& qbar, double eps,
                             double delta, const QuantumState& state, SplitRng& rng);

// The same measurements bundled over every query tuple of the next round,
// grid points as the shared outcome labels.  This is the projection family
// the flooding steps average over in the public-coin reduction.  Enumerated
// up to enumerate_limit tuples, sampled beyond that.
ProjectionFamily checkcoins_family(const RepeatedProtocol& rp, const ProverStrategy& prover,
                                   const Transcript& prefix, double eps, double delta,
                                   std::uint64_t enumerate_limit = 1024);

// Soft decision: fires with probability min{1, 2^{nu(accepted+1-t)}}, all
// branches driven by one uniform omega.
double softdecision_probability(double nu, int t, long accepted);
bool softdecision(double nu, int t, long accepted, double omega);

struct SoftDecisionOutcome {
  int bit = 0;
  double probability = 0.0;
  QuantumState state;
  Pvm pvm;                // the binary PVM that was measured
  std::vector<int> qbar;  // query tuple the projector was built from
};

// Binary projective measurement {I - Pi, Pi}: Pi keeps exactly the
// second-response assignments whose soft decision fires for this omega, with
// coordinate j's query forced to q and the others induced by r_minus_j
// (entry j of r_minus_j is ignored).  Counts accepted coordinates over
// j' != j only, as the verdict of coordinate j is not the prover's to read.
SoftDecisionOutcome softdecision_proj(const RepeatedProtocol& rp, const ProverStrategy& prover,
                                      const std::vector<int>& z1bar, int j,
                                      const std::vector<int>& r_minus_j, int q, double omega,
                                      double nu, int t, const QuantumState& state, SplitRng& rng);

// Sampled-only family of soft-decision projectors (fresh coordinate, hidden
// randomness and omega per draw); the flooding measurements of the
// three-message reduction.  Outcome labels {0, 1}.
ProjectionFamily softdecision_family(const RepeatedProtocol& rp, const ProverStrategy& prover,
                                     const std::vector<int>& z1bar, double nu, int t);

// Per-attempt log inside one reduction round.
struct AttemptLog {
  long attempt = 0;            // 1-based
  std::vector<int> qbar;       // queries this attempt used (public-coin; step-6 tuple for 3-msg)
  std::vector<int> r_others;   // three-message hidden randomness, -1 at the embedded coordinate
  double omega = -1.0;         // three-message soft-decision draw
  double m_value = 0.0;        // step (ii) estimate
  double prepare_value = 0.0;  // Prepare's closing estimate p'
  double prepare_threshold = 0.0;
  double check_value = 0.0;    // CheckCoins estimate / soft-decision bit
  int check_grid_index = -1;   // grid cell of the CheckCoins outcome (public-coin)
  bool passed = false;
  long repair_m_calls = 0;  // fine-measurement calls Repair' spent after a failure
};

struct RoundLog {
  int round = 0;
  int external_query = -1;
  std::vector<AttemptLog> attempts;
  std::vector<int> responses;    // measured zbar after the passing attempt
  double residual_value = -1.0;  // logged estimate of the next residual, unused
};

// Full log of one reduction run.  abort_cause, when set, is one of
// "step2-exhausted", "prepare-low", "checkcoins-exhausted",
// "softdecision-exhausted"; completed runs carry a complete transcript.
struct ReductionRunRecord {
  std::uint64_t seed = 0;
  int embedded_coordinate = -1;  // 0-based
  std::optional<std::string> abort_cause;
  std::vector<double> step2_values;  // one per consumed copy
  long step2_copy = -1;              // accepted copy (0-based), -1 if exhausted
  std::vector<int> z1bar;            // three-message first message
  std::vector<RoundLog> rounds;
  Transcript transcript;
  std::vector<int> verdicts;  // per coordinate; -1 where the run cannot know
  int external_verdict = -1;  // -1 while unknown (aborted runs)

  bool completed() const { return !abort_cause.has_value(); }
  std::string to_json() const;
  std::string to_jsonl() const;  // to_json() plus a trailing newline
};

// Runs the public-coin reduction fed by an outside verifier session.  copies
// is the pool of fresh prover states tried in step 2; when empty it is
// filled with iter copies of the strategy's initial state.
ReductionRunRecord run_public_coin_reduction(const RepeatedProtocol& rp,
                                             const ProverStrategy& prover,
                                             const ReductionParams& params,
                                             VerifierSession& session, SplitRng& rng,
                                             std::vector<QuantumState> copies = {});

ReductionRunRecord run_three_message_reduction(const RepeatedProtocol& rp,
                                               const ProverStrategy& prover,
                                               const ReductionParams& params,
                                               VerifierSession& session, SplitRng& rng,
                                               std::vector<QuantumState> copies = {});

// Exact branch enumeration of the two measurement orderings of one
// public-coin round: grid cell of the response-dephased residual first, the
// round's responses second, and the reverse.  The joint laws must agree (the
// cell projectors commute with every response projector); tv_distance is the
// numerical gap.  Laws are indexed [cell * n_responses + response_index]
// with cells enumerated over occupied bins (cell_grid_indices maps back to
// grid points).
struct DeferredMeasurementCheck {
  std::vector<double> value_first;
  std::vector<double> response_first;
  std::vector<int> cell_grid_indices;
  long n_cells = 0;
  long n_responses = 0;
  double tv_distance = 0.0;
};

DeferredMeasurementCheck deferred_measurement_check(const RepeatedProtocol& rp,
                                                    const ProverStrategy& prover,
                                                    const Transcript& prefix,
                                                    const std::vector<int>& qbar, double eps,
                                                    double delta, const QuantumState& state);

}  // namespace parrep
