#pragma once

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "parrep/measure.hpp"

namespace parrep {

struct ProtocolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Public-coin interactive argument: m rounds, each an enumerable uniform
// query answered from an enumerable response set, verdict a total function of
// the full transcript.
struct PublicCoinProtocol {
  int m = 1;
  std::vector<int> query_dims;     // |Q_l|, one per round
  std::vector<int> response_dims;  // |Z_l|, one per round
  // accept(queries, responses): single-fold transcript, one value per round
  std::function<bool(const std::vector<int>&, const std::vector<int>&)> accept;

  void validate() const;
};

// Three-message private-coin argument: prover speaks z1, verifier draws
// hidden randomness r and sends q = query_of(r, z1), prover answers z2.  The
// verdict may use r.  q is a function of (r, z1); protocols whose query needs
// extra randomness are outside the modeled class.
struct ThreeMessageProtocol {
  int randomness_dim = 1;  // |R|
  int z1_dim = 1;
  int query_dim = 1;  // |Q|
  int z2_dim = 1;
  std::function<int(int r, int z1)> query_of;
  std::function<bool(int r, int z1, int q, int z2)> accept;

  void validate() const;
};

// t-out-of-k threshold parallel repetition of a base protocol.
struct RepeatedProtocol {
  std::variant<PublicCoinProtocol, ThreeMessageProtocol> base;
  int k = 1;
  int t = 1;

  bool is_public_coin() const { return std::holds_alternative<PublicCoinProtocol>(base); }
  const PublicCoinProtocol& public_coin() const;
  const ThreeMessageProtocol& three_message() const;
  // interactive rounds carrying a prover response: m for public-coin, 2 for
  // three-message (z1 first, z2 after the query)
  int response_rounds() const;
  int response_dim(int round) const;  // 1-based round
  int query_dim_of_round(int ell) const;
};

bool threshold_verdict(const std::vector<int>& verdicts, int t);

RepeatedProtocol repeat(PublicCoinProtocol base, int k, int t);
RepeatedProtocol repeat(ThreeMessageProtocol base, int k, int t);

// Transcript of one k-fold execution.  For public-coin, queries and
// responses pair up per round; for three-message, queries = {qbar} and
// responses = {z1bar, z2bar}.  Aborted transcripts never carry verdicts.
struct Transcript {
  int k = 1;
  std::vector<std::vector<int>> queries;
  std::vector<std::vector<int>> responses;
  bool aborted = false;
  std::vector<int> verdict_bits;  // per coordinate, empty unless complete

  bool complete(const RepeatedProtocol& rp) const;
};

// Per-coordinate verdicts of a complete transcript.  Three-message verdicts
// need the hidden randomness rbar.
std::vector<int> coordinate_verdicts(const RepeatedProtocol& rp, const Transcript& tau,
                                     const std::vector<int>& rbar = {});

// Quantum prover: an initial state over named response registers (plus
// optional work space) and one unitary per round indexed by the joint query.
// Responses are read from the declared registers in the computational basis.
struct ProverStrategy {
  QuantumState initial_state;
  std::vector<std::vector<std::string>> response_registers;  // [round-1][coordinate]
  std::function<Unitary(int ell, const std::vector<int>& qbar)> round_unitary;
  int lambda_qubits = 1;  // declared memory size, >= layout qubit count, >= 1
};

// Register layout housing the response registers of rp's prover side:
// z<round>_<coordinate> with the base response dims, plus a work register
// "w" when work_dim > 1.
RegisterLayout prover_layout(const RepeatedProtocol& rp, int work_dim = 1);

// Memoryless deterministic classical strategy: coordinate c of round ell
// responds respond(ell, qbar, c).  Realized with basis initial state and
// in-place cyclic-shift permutation unitaries.
ProverStrategy deterministic_prover(
    const RepeatedProtocol& rp,
    std::function<int(int ell, const std::vector<int>& qbar, int coord)> respond,
    int work_dim = 1);

// Best-guess strategy for the lossy-preimage game: answers the smallest
// preimage of the received query (exact inversion when w = n).
ProverStrategy preimage_guess_prover(const RepeatedProtocol& rp);

// k-fold strategy for the verdict-programmable token game whose verdict
// vector is all-ones with probability delta^k and all-ones-except-j with
// probability (1 - delta^k)/k each.
ProverStrategy bad_correlations_prover(int k, double delta);

// Classical law of a diagonal strategy on the token game: probability of
// each joint verdict vector, indexed like the response basis.
std::vector<double> token_verdict_law(const ProverStrategy& prover);

struct InteractionResult {
  Transcript transcript;
  bool verdict = false;
  std::vector<int> randomness;  // three-message: the sampled rbar, else empty
};

InteractionResult run_interaction(const ProverStrategy& prover, const RepeatedProtocol& rp,
                                  SplitRng& rng);

// Exact acceptance probability of the strategy (Born rule, no sampling).
double exact_success(const ProverStrategy& prover, const RepeatedProtocol& rp);

// Residual success operator after a public-coin transcript prefix: averages
// over the remaining rounds' queries, dephasing each round's responses.  For
// an empty prefix this is the full game's success operator on the prover
// space.
Mat residual_operator(const RepeatedProtocol& rp, const ProverStrategy& prover,
                      const Transcript& prefix);

// Same with the next round's query fixed (the operator measured after the
// prover's round-ell unitary, block-diagonal over that round's responses).
Mat query_block_operator(const RepeatedProtocol& rp, const ProverStrategy& prover,
                         const Transcript& prefix, const std::vector<int>& qbar);

// Three-message residual after the first message is fixed: average over
// hidden randomness of the conjugated, response-dephased verdict projector.
Mat residual_operator(const RepeatedProtocol& rp, const ProverStrategy& prover,
                      const std::vector<int>& z1bar);

// The same game in sampleable form: randomness = joint rbar index, adversary
// = the query unitary, verdict = threshold over coordinates.
GameSpec three_message_game(const RepeatedProtocol& rp, const ProverStrategy& prover,
                            const std::vector<int>& z1bar);

// Exact optimum over classical deterministic strategies by backward
// induction (public-coin) or grouped maximization (three-message).  Strategy
// spaces beyond max_branches raise ProtocolError.
double optimal_success(const RepeatedProtocol& rp, std::uint64_t max_branches = 10000000);

// Optimum over an explicitly declared family of quantum strategies.
double optimal_success(const RepeatedProtocol& rp, const std::vector<ProverStrategy>& family);

// ---------------------------------------------------------------------------
// Protocol catalog

PublicCoinProtocol subset_game(int n, int s);           // accept iff q < s
PublicCoinProtocol chain_game(int m, int n, int s);     // m rounds of subset
ThreeMessageProtocol preimage_game(int n, int w);       // q = r mod w, accept iff z2 = r
ThreeMessageProtocol token_game();                      // accept iff z2 = 1

struct CatalogEntry {
  std::string name;  // canonical form, e.g. subset(n=8,s=2)
  std::variant<PublicCoinProtocol, ThreeMessageProtocol> protocol;
  double soundness = 1.0;  // closed-form single-fold optimum
};

// Parses "subset(n=8,s=2)" / "chain(m=2,n=4,s=2)" / "preimage(n=8,w=4)" /
// "token()" into a catalog entry.
CatalogEntry parse_catalog(const std::string& spec);

}  // namespace parrep
