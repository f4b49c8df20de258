#include "parrep/reductions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

namespace parrep {
namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw ReductionError(msg);
}

long ceil_count(double x, const char* what) {
  const double c = std::ceil(x - 1e-12);
  require(c < 9.0e18, std::string(what) + " overflows a 64-bit count");
  return std::max<long>(static_cast<long>(c), 1);
}

int draw_below(SplitRng& rng, int n) {
  return static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(n)));
}

// Collapses the named response registers of one prover round, most
// significant coordinate first (the same order interactions use).
std::vector<int> measure_round_responses(const ProverStrategy& prover, int round,
                                         QuantumState& state, SplitRng& rng) {
  const auto& regs = prover.response_registers.at(static_cast<std::size_t>(round - 1));
  std::vector<int> z(regs.size());
  for (std::size_t c = 0; c < regs.size(); ++c) {
    MeasureResult mr = measure_register(state, regs[c], rng);
    z[c] = mr.label;
    state = std::move(mr.post);
  }
  return z;
}

// Conjugated grid cells for one query tuple: the measurement "which value
// cell would this state land in under qbar", taken before the round unitary
// is applied for real.
ValueMeasurement checkcoins_measurement(const RepeatedProtocol& rp, const ProverStrategy& prover,
                                        const Transcript& prefix, const std::vector<int>& qbar,
                                        double eps, double delta) {
  const RegisterLayout& layout = prover.initial_state.layout();
  const int ell = static_cast<int>(prefix.queries.size()) + 1;
  const Unitary u = prover.round_unitary(ell, qbar);
  Mat cc = u.matrix().adjoint() * query_block_operator(rp, prover, prefix, qbar) * u.matrix();
  return ValueMeasurementFamily::from_operator(layout, std::move(cc)).at(eps, delta);
}

// Shared builder for the soft-decision projector; also reports the query
// tuple it was built from.
Pvm softdecision_pvm(const RepeatedProtocol& rp, const ProverStrategy& prover,
                     const std::vector<int>& z1bar, int j, const std::vector<int>& r_minus_j,
                     int q, double omega, double nu, int t, std::vector<int>* qbar_out) {
  require(!rp.is_public_coin(), "soft decisions belong to the three-message reduction");
  const ThreeMessageProtocol& base = rp.three_message();
  const int k = rp.k;
  require(static_cast<int>(z1bar.size()) == k, "z1 tuple has the wrong width");
  require(static_cast<int>(r_minus_j.size()) == k, "hidden randomness tuple has the wrong width");
  require(j >= 0 && j < k, "coordinate out of range");
  require(q >= 0 && q < base.query_dim, "query out of range");
  require(omega >= 0.0 && omega < 1.0, "omega out of [0,1)");

  std::vector<int> qbar(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    if (c == j) {
      qbar[static_cast<std::size_t>(c)] = q;
      continue;
    }
    const int r = r_minus_j[static_cast<std::size_t>(c)];
    require(r >= 0 && r < base.randomness_dim, "hidden randomness out of range");
    qbar[static_cast<std::size_t>(c)] = base.query_of(r, z1bar[static_cast<std::size_t>(c)]);
  }

  const RegisterLayout& layout = prover.initial_state.layout();
  const auto& regs = prover.response_registers.at(1);
  std::vector<int> reg_idx(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    reg_idx[static_cast<std::size_t>(c)] = layout.index_of(regs[static_cast<std::size_t>(c)]);
  }
  // Coordinate j's verdict is the verifier's secret; the projector counts
  // acceptances over the other coordinates only.
  std::vector<bool> mask(static_cast<std::size_t>(layout.total_dim()));
  for (int b = 0; b < layout.total_dim(); ++b) {
    long accepted = 0;
    for (int c = 0; c < k; ++c) {
      if (c == j) continue;
      const int z2 = layout.digit(b, reg_idx[static_cast<std::size_t>(c)]);
      if (base.accept(r_minus_j[static_cast<std::size_t>(c)], z1bar[static_cast<std::size_t>(c)],
                      qbar[static_cast<std::size_t>(c)], z2)) {
        ++accepted;
      }
    }
    mask[static_cast<std::size_t>(b)] = softdecision(nu, t, accepted, omega);
  }
  const Unitary u = prover.round_unitary(1, qbar);
  Mat pi = u.matrix().adjoint() * Projector::diagonal(layout, mask).matrix() * u.matrix();
  if (qbar_out != nullptr) *qbar_out = std::move(qbar);
  return Pvm::binary(Projector(layout, std::move(pi)));
}

}  // namespace

// ---------------------------------------------------------------------------
// parameters

ReductionParams ReductionParams::paper_public(double xi, int lambda_sec, int k, int t, int m) {
  require(xi > 0.0 && xi <= 1.0, "xi out of (0,1]");
  require(lambda_sec >= 1, "security parameter must be positive");
  require(k >= 1 && t >= 1 && t <= k, "threshold out of range");
  require(m >= 1, "round count must be positive");
  ReductionParams p;
  p.xi = xi;
  p.lambda_sec = lambda_sec;
  p.k = k;
  p.t = t;
  p.m = m;
  p.three_message = false;
  p.conformant = true;
  const double mm = static_cast<double>(m) * static_cast<double>(m);
  p.iter = ceil_count(static_cast<double>(lambda_sec) * mm / xi, "attempt budget");
  p.eps0 = xi / mm;
  p.eps = p.eps0 / (16.0 * static_cast<double>(p.iter));
  p.delta = std::min(std::exp2(-static_cast<double>(lambda_sec)), std::exp2(-static_cast<double>(k)));
  p.grid_points = ValueGrid::make(p.eps).n_points;
  p.eta = 1.0 / (2.0 * static_cast<double>(k) * static_cast<double>(m) *
                 static_cast<double>(p.iter) * static_cast<double>(p.grid_points));
  p.nu = 0.0;
  return p;
}

ReductionParams ReductionParams::paper_three(double xi, int lambda_sec, int k, int t) {
  require(xi > 0.0 && xi <= 1.0, "xi out of (0,1]");
  require(lambda_sec >= 1, "security parameter must be positive");
  require(k >= 1 && t >= 1 && t <= k, "threshold out of range");
  ReductionParams p;
  p.xi = xi;
  p.lambda_sec = lambda_sec;
  p.k = k;
  p.t = t;
  p.m = 1;
  p.three_message = true;
  p.conformant = true;
  p.iter = ceil_count(4.0 * static_cast<double>(lambda_sec) / xi, "attempt budget");
  p.eps0 = xi / 4.0;
  p.eps = p.eps0 / (16.0 * static_cast<double>(p.iter));
  p.delta = std::min(std::exp2(-static_cast<double>(lambda_sec)), std::exp2(-static_cast<double>(k)));
  p.grid_points = ValueGrid::make(p.eps).n_points;
  p.eta = 1.0 / (4.0 * static_cast<double>(k) * static_cast<double>(p.iter) *
                 static_cast<double>(p.grid_points));
  p.nu = std::sqrt(-std::log2(xi) / static_cast<double>(k));
  return p;
}

ReductionParams ReductionParams::desk_public(double xi, int k, int t, int m, long iter,
                                             double eps0, double eps, double delta, double eta,
                                             long flood_t_override) {
  require(xi > 0.0 && xi <= 1.0, "xi out of (0,1]");
  require(k >= 1 && t >= 1 && t <= k, "threshold out of range");
  require(m >= 1, "round count must be positive");
  require(iter >= 1, "attempt budget must be positive");
  require(eps0 > 0.0 && eps0 <= 1.0, "eps0 out of (0,1]");
  require(eps > 0.0 && eps <= eps0, "eps out of (0,eps0]");
  require(delta >= 0.0 && delta < 1.0, "delta out of [0,1)");
  require(eta > 0.0 && eta <= 1.0, "eta out of (0,1]");
  require(flood_t_override >= 0, "flooding override must be nonnegative");
  ReductionParams p;
  p.xi = xi;
  p.k = k;
  p.t = t;
  p.m = m;
  p.three_message = false;
  p.conformant = false;
  p.iter = iter;
  p.eps0 = eps0;
  p.eps = eps;
  p.delta = delta;
  p.eta = eta;
  p.grid_points = ValueGrid::make(eps).n_points;
  p.flood_t_override = flood_t_override;
  return p;
}

ReductionParams ReductionParams::desk_three(double xi, int k, int t, long iter, double eps0,
                                            double eps, double delta, double eta, double nu,
                                            long flood_t_override) {
  ReductionParams p = desk_public(xi, k, t, 1, iter, eps0, eps, delta, eta, flood_t_override);
  require(nu >= 0.0, "nu must be nonnegative");
  p.three_message = true;
  p.nu = nu;
  return p;
}

FloodingParams ReductionParams::flooding(int ell_qubits) const {
  const int ell = std::max(ell_qubits, 1);
  if (flood_t_override > 0) {
    return FloodingParams::with_override(eps, delta, eta, ell, flood_t_override);
  }
  return FloodingParams::make(eps, delta, eta, ell);
}

// ---------------------------------------------------------------------------
// verifier sessions

PublicCoinVerifierSession::PublicCoinVerifierSession(PublicCoinProtocol base)
    : base_(std::move(base)) {
  base_.validate();
}

int PublicCoinVerifierSession::query(int round, SplitRng& rng) {
  require(round == static_cast<int>(qs_.size()) + 1 && round <= base_.m, "query out of order");
  require(qs_.size() == zs_.size(), "previous round still awaits its response");
  qs_.push_back(draw_below(rng, base_.query_dims[static_cast<std::size_t>(round - 1)]));
  return qs_.back();
}

void PublicCoinVerifierSession::respond(int round, int z) {
  require(round == static_cast<int>(zs_.size()) + 1 && zs_.size() + 1 == qs_.size(),
          "response out of order");
  require(z >= 0 && z < base_.response_dims[static_cast<std::size_t>(round - 1)],
          "response out of range");
  zs_.push_back(z);
}

bool PublicCoinVerifierSession::verdict() const {
  require(static_cast<int>(zs_.size()) == base_.m, "verdict before the last response");
  return base_.accept(qs_, zs_);
}

ThreeMessageVerifierSession::ThreeMessageVerifierSession(ThreeMessageProtocol base)
    : base_(std::move(base)) {
  base_.validate();
}

int ThreeMessageVerifierSession::query(int round, SplitRng& rng) {
  require(round == 1 && q_ < 0, "three-message sessions issue a single query");
  require(z1_ >= 0, "the query follows the first response");
  r_ = draw_below(rng, base_.randomness_dim);
  q_ = base_.query_of(r_, z1_);
  require(q_ >= 0 && q_ < base_.query_dim, "query map out of range");
  return q_;
}

void ThreeMessageVerifierSession::respond(int round, int z) {
  if (round == 1) {
    require(z1_ < 0, "first response already sent");
    require(z >= 0 && z < base_.z1_dim, "z1 out of range");
    z1_ = z;
  } else if (round == 2) {
    require(q_ >= 0, "second response before the query");
    require(z2_ < 0, "second response already sent");
    require(z >= 0 && z < base_.z2_dim, "z2 out of range");
    z2_ = z;
  } else {
    throw ReductionError("three-message sessions have rounds 1 and 2 only");
  }
}

bool ThreeMessageVerifierSession::verdict() const {
  require(z2_ >= 0, "verdict before the last response");
  return base_.accept(r_, z1_, q_, z2_);
}

ScriptedVerifierSession::ScriptedVerifierSession(std::vector<int> queries, bool verdict)
    : script_(std::move(queries)), verdict_(verdict) {}

int ScriptedVerifierSession::query(int round, SplitRng& rng) {
  (void)rng;
  require(round >= 1 && static_cast<std::size_t>(round) <= script_.size(),
          "scripted session ran out of queries");
  return script_[static_cast<std::size_t>(round - 1)];
}

void ScriptedVerifierSession::respond(int round, int z) {
  (void)round;
  zs_.push_back(z);
}

// ---------------------------------------------------------------------------
// CheckCoins

CheckCoinsOutcome checkcoins(const RepeatedProtocol& rp, const ProverStrategy& prover,
                             const Transcript& prefix, const std::vector<int>& qbar, double eps,
                             double delta, const QuantumState& state, SplitRng& rng) {
  require(rp.is_public_coin(), "CheckCoins is the public-coin round test");
  ValueMeasurement vm = checkcoins_measurement(rp, prover, prefix, qbar, eps, delta);
  ValestOutcome o = vm.sample(state, rng);
  return CheckCoinsOutcome{o.value, o.bin, o.probability, std::move(o.post), grid_pvm(vm)};
}

ProjectionFamily checkcoins_family(const RepeatedProtocol& rp, const ProverStrategy& prover,
                                   const Transcript& prefix, double eps, double delta,
                                   std::uint64_t enumerate_limit) {
  require(rp.is_public_coin(), "CheckCoins is the public-coin round test");
  const RegisterLayout& layout = prover.initial_state.layout();
  const int ell = static_cast<int>(prefix.queries.size()) + 1;
  const int qdim = rp.query_dim_of_round(ell);
  const int k = rp.k;
  const double tuples = std::pow(static_cast<double>(qdim), static_cast<double>(k));
  if (tuples <= static_cast<double>(enumerate_limit)) {
    const int count = static_cast<int>(tuples + 0.5);
    const std::vector<int> dims(static_cast<std::size_t>(k), qdim);
    std::vector<Pvm> members;
    members.reserve(static_cast<std::size_t>(count));
    for (int idx = 0; idx < count; ++idx) {
      members.push_back(
          grid_pvm(checkcoins_measurement(rp, prover, prefix, decompose_index(idx, dims), eps, delta)));
    }
    return ProjectionFamily::enumerated(layout, std::move(members));
  }
  const int n_outcomes = ValueGrid::make(eps).n_points;
  auto sampler = [rp, prover, prefix, eps, delta, qdim, k](SplitRng& rng) {
    std::vector<int> qbar(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) qbar[static_cast<std::size_t>(c)] = draw_below(rng, qdim);
    return grid_pvm(checkcoins_measurement(rp, prover, prefix, qbar, eps, delta));
  };
  const std::uint64_t nominal = tuples < 1.8e19 ? static_cast<std::uint64_t>(tuples)
                                                : std::numeric_limits<std::uint64_t>::max();
  return ProjectionFamily::sampled(layout, n_outcomes, std::move(sampler), nominal);
}

// ---------------------------------------------------------------------------
// soft decisions

double softdecision_probability(double nu, int t, long accepted) {
  require(nu >= 0.0, "nu must be nonnegative");
  return std::min(1.0, std::exp2(nu * (static_cast<double>(accepted) + 1.0 - static_cast<double>(t))));
}

bool softdecision(double nu, int t, long accepted, double omega) {
  require(omega >= 0.0 && omega < 1.0, "omega out of [0,1)");
  return omega < softdecision_probability(nu, t, accepted);
}

SoftDecisionOutcome softdecision_proj(const RepeatedProtocol& rp, const ProverStrategy& prover,
                                      const std::vector<int>& z1bar, int j,
                                      const std::vector<int>& r_minus_j, int q, double omega,
                                      double nu, int t, const QuantumState& state, SplitRng& rng) {
  std::vector<int> qbar;
  Pvm pvm = softdecision_pvm(rp, prover, z1bar, j, r_minus_j, q, omega, nu, t, &qbar);
  MeasureResult mr = measure_projective(state, pvm, rng);
  return SoftDecisionOutcome{mr.label, mr.probability, std::move(mr.post), std::move(pvm),
                             std::move(qbar)};
}

ProjectionFamily softdecision_family(const RepeatedProtocol& rp, const ProverStrategy& prover,
                                     const std::vector<int>& z1bar, double nu, int t) {
  require(!rp.is_public_coin(), "soft decisions belong to the three-message reduction");
  const ThreeMessageProtocol& base = rp.three_message();
  const int k = rp.k;
  require(static_cast<int>(z1bar.size()) == k, "z1 tuple has the wrong width");
  const RegisterLayout& layout = prover.initial_state.layout();
  // One member per (coordinate, hidden randomness tuple, omega); the query at
  // the distinguished coordinate is induced by that coordinate's own fresh
  // randomness, mirroring what an outside verifier would send.
  auto sampler = [rp, prover, z1bar, nu, t, k, base](SplitRng& rng) {
    const int j = draw_below(rng, k);
    std::vector<int> rbar(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) rbar[static_cast<std::size_t>(c)] = draw_below(rng, base.randomness_dim);
    const int q = base.query_of(rbar[static_cast<std::size_t>(j)], z1bar[static_cast<std::size_t>(j)]);
    return softdecision_pvm(rp, prover, z1bar, j, rbar, q, rng.uniform(), nu, t, nullptr);
  };
  const double tuples = static_cast<double>(k) *
                        std::pow(static_cast<double>(base.randomness_dim), static_cast<double>(k));
  const std::uint64_t nominal = tuples < 1.8e19 ? static_cast<std::uint64_t>(tuples)
                                                : std::numeric_limits<std::uint64_t>::max();
  return ProjectionFamily::sampled(layout, 2, std::move(sampler), nominal);
}

// ---------------------------------------------------------------------------
// run records

std::string ReductionRunRecord::to_json() const {
  nlohmann::json j;
  j["seed"] = seed;
  j["i"] = embedded_coordinate;
  if (abort_cause.has_value()) j["abort_cause"] = *abort_cause;
  j["step2"] = {{"values", step2_values}, {"accepted_copy", step2_copy}};
  if (!z1bar.empty()) j["z1"] = z1bar;
  nlohmann::json rs = nlohmann::json::array();
  for (const RoundLog& r : rounds) {
    nlohmann::json attempts = nlohmann::json::array();
    for (const AttemptLog& a : r.attempts) {
      nlohmann::json aj;
      aj["s"] = a.attempt;
      aj["m"] = a.m_value;
      aj["prepare"] = a.prepare_value;
      aj["threshold"] = a.prepare_threshold;
      aj["check"] = a.check_value;
      if (a.check_grid_index >= 0) aj["cell"] = a.check_grid_index;
      aj["passed"] = a.passed;
      if (!a.qbar.empty()) aj["qbar"] = a.qbar;
      if (!a.r_others.empty()) aj["r"] = a.r_others;
      if (a.omega >= 0.0) aj["omega"] = a.omega;
      if (a.repair_m_calls > 0) aj["repair_m"] = a.repair_m_calls;
      attempts.push_back(std::move(aj));
    }
    nlohmann::json rj;
    rj["round"] = r.round;
    rj["query"] = r.external_query;
    rj["attempts"] = static_cast<long>(r.attempts.size());
    rj["p_values"] = std::move(attempts);
    if (!r.responses.empty()) rj["responses"] = r.responses;
    if (r.residual_value >= 0.0) rj["residual"] = r.residual_value;
    rs.push_back(std::move(rj));
  }
  j["rounds"] = std::move(rs);
  j["verdicts"] = verdicts;
  if (external_verdict < 0) {
    j["external_verdict"] = nullptr;
  } else {
    j["external_verdict"] = external_verdict != 0;
  }
  if (completed()) {
    j["transcript"] = {{"queries", transcript.queries}, {"responses", transcript.responses}};
  }
  return j.dump();
}

std::string ReductionRunRecord::to_jsonl() const { return to_json() + "\n"; }

// ---------------------------------------------------------------------------
// the public-coin reduction

ReductionRunRecord run_public_coin_reduction(const RepeatedProtocol& rp,
                                             const ProverStrategy& prover,
                                             const ReductionParams& params,
                                             VerifierSession& session, SplitRng& rng,
                                             std::vector<QuantumState> copies) {
  require(rp.is_public_coin(), "run_public_coin_reduction needs a public-coin protocol");
  require(!params.three_message, "parameters were derived for the three-message reduction");
  const PublicCoinProtocol& base = rp.public_coin();
  require(params.k == rp.k && params.t == rp.t, "parameters do not match the repetition");
  require(params.m == base.m, "parameter round count does not match the protocol");
  const RegisterLayout& layout = prover.initial_state.layout();
  const int k = rp.k;

  ReductionRunRecord rec;
  rec.seed = rng.key();
  rec.transcript = Transcript{k, {}, {}, false, {}};
  if (copies.empty()) copies.assign(static_cast<std::size_t>(params.iter), prover.initial_state);
  require(static_cast<long>(copies.size()) >= params.iter,
          "copy pool smaller than the attempt budget");

  const int i = draw_below(rng, k);
  rec.embedded_coordinate = i;
  const FloodingParams fp = params.flooding(prover.lambda_qubits);

  Transcript tau{k, {}, {}, false, {}};
  // Step 2: spend copies until one's estimated value clears xi - eps0.
  {
    ValueMeasurement vm0 =
        ValueMeasurementFamily::from_operator(layout, residual_operator(rp, prover, tau))
            .at(params.eps, params.delta);
    bool found = false;
    for (long s = 0; s < params.iter; ++s) {
      ValestOutcome o = vm0.sample(copies[static_cast<std::size_t>(s)], rng);
      rec.step2_values.push_back(o.value);
      if (o.value >= params.xi - params.eps0) {
        copies[0] = std::move(o.post);
        rec.step2_copy = s;
        found = true;
        break;
      }
    }
    if (!found) {
      rec.abort_cause = "step2-exhausted";
      rec.transcript.aborted = true;
      return rec;
    }
  }
  QuantumState state = std::move(copies[0]);

  for (int ell = 1; ell <= base.m; ++ell) {
    RoundLog rl;
    rl.round = ell;
    rl.external_query = session.query(ell, rng);
    const int qdim = base.query_dims[static_cast<std::size_t>(ell - 1)];

    ProjectionFamily pf =
        checkcoins_family(rp, prover, tau, params.eps, params.delta, params.family_enumerate_limit);
    ValueMeasurementFamily fam =
        ValueMeasurementFamily::from_operator(layout, residual_operator(rp, prover, tau));
    ValueMeasurement vm = fam.at(params.eps, params.delta);

    std::vector<int> qbar_pass;
    for (long s = 1; s <= params.iter; ++s) {
      AttemptLog al;
      al.attempt = s;
      std::vector<int> qbar(static_cast<std::size_t>(k));
      for (int c = 0; c < k; ++c) {
        qbar[static_cast<std::size_t>(c)] = (c == i) ? rl.external_query : draw_below(rng, qdim);
      }
      al.qbar = qbar;

      ValestOutcome est = vm.sample(state, rng);
      al.m_value = est.value;
      state = std::move(est.post);

      PrepareResult prep = prepare(fam, pf, std::move(state), fp, rng);
      state = std::move(prep.state);
      al.prepare_value = prep.value;
      al.prepare_threshold = params.xi - static_cast<double>(ell) * params.eps0 -
                             static_cast<double>(4 * s + 1) * params.eps;
      if (prep.value < al.prepare_threshold) {
        rl.attempts.push_back(std::move(al));
        rec.rounds.push_back(std::move(rl));
        rec.abort_cause = "prepare-low";
        rec.transcript = tau;
        rec.transcript.aborted = true;
        return rec;
      }

      CheckCoinsOutcome cc = checkcoins(rp, prover, tau, qbar, params.eps, params.delta, state, rng);
      al.check_value = cc.value;
      al.check_grid_index = cc.grid_index;
      if (cc.value >= params.xi - static_cast<double>(ell + 1) * params.eps0) {
        al.passed = true;
        state = std::move(cc.state);
        qbar_pass = std::move(qbar);
        rl.attempts.push_back(std::move(al));
        break;
      }
      if (s == params.iter) {
        rl.attempts.push_back(std::move(al));
        rec.rounds.push_back(std::move(rl));
        rec.abort_cause = "checkcoins-exhausted";
        rec.transcript = tau;
        rec.transcript.aborted = true;
        return rec;
      }
      RepairPrimeResult rpr = repair_prime(fam, pf, cc.cells, cc.grid_index, std::move(cc.state),
                                           prep.value, fp, rng);
      state = std::move(rpr.state);
      al.repair_m_calls = rpr.trace.total_m_calls();
      rl.attempts.push_back(std::move(al));
    }

    // The round happens for real: unitary, responses, then the next
    // residual's estimate (logged, otherwise unused).
    state = apply_unitary(state, prover.round_unitary(ell, qbar_pass));
    std::vector<int> zbar = measure_round_responses(prover, ell, state, rng);
    tau.queries.push_back(qbar_pass);
    tau.responses.push_back(zbar);
    ValestOutcome re =
        ValueMeasurementFamily::from_operator(layout, residual_operator(rp, prover, tau))
            .at(params.eps, params.delta)
            .sample(state, rng);
    rl.residual_value = re.value;
    state = std::move(re.post);
    session.respond(ell, zbar[static_cast<std::size_t>(i)]);
    rl.responses = std::move(zbar);
    rec.rounds.push_back(std::move(rl));
  }

  rec.transcript = tau;
  rec.verdicts = coordinate_verdicts(rp, rec.transcript);
  rec.external_verdict = session.verdict() ? 1 : 0;
  return rec;
}

// ---------------------------------------------------------------------------
// the three-message reduction

ReductionRunRecord run_three_message_reduction(const RepeatedProtocol& rp,
                                               const ProverStrategy& prover,
                                               const ReductionParams& params,
                                               VerifierSession& session, SplitRng& rng,
                                               std::vector<QuantumState> copies) {
  require(!rp.is_public_coin(), "run_three_message_reduction needs a three-message protocol");
  require(params.three_message, "parameters were derived for the public-coin reduction");
  const ThreeMessageProtocol& base = rp.three_message();
  require(params.k == rp.k && params.t == rp.t, "parameters do not match the repetition");
  const RegisterLayout& layout = prover.initial_state.layout();
  const int k = rp.k;

  ReductionRunRecord rec;
  rec.seed = rng.key();
  rec.transcript = Transcript{k, {}, {}, false, {}};
  if (copies.empty()) copies.assign(static_cast<std::size_t>(params.iter), prover.initial_state);
  require(static_cast<long>(copies.size()) >= params.iter,
          "copy pool smaller than the attempt budget");

  const int i = draw_below(rng, k);
  rec.embedded_coordinate = i;
  const FloodingParams fp = params.flooding(prover.lambda_qubits);

  // Step 2: measure the first message, gate on the residual estimate.
  std::map<std::vector<int>, ValueMeasurementFamily> fam_cache;
  std::vector<int> z1bar;
  bool found = false;
  QuantumState state = prover.initial_state;
  for (long s = 0; s < params.iter; ++s) {
    QuantumState st = copies[static_cast<std::size_t>(s)];
    std::vector<int> z1 = measure_round_responses(prover, 1, st, rng);
    auto it = fam_cache.find(z1);
    if (it == fam_cache.end()) {
      it = fam_cache
               .emplace(z1, ValueMeasurementFamily::from_operator(
                                layout, residual_operator(rp, prover, z1)))
               .first;
    }
    ValestOutcome o = it->second.at(params.eps, params.delta).sample(st, rng);
    rec.step2_values.push_back(o.value);
    if (o.value >= params.xi - params.eps0) {
      state = std::move(o.post);
      z1bar = std::move(z1);
      rec.step2_copy = s;
      found = true;
      break;
    }
  }
  if (!found) {
    rec.abort_cause = "step2-exhausted";
    rec.transcript.aborted = true;
    return rec;
  }
  rec.z1bar = z1bar;
  session.respond(1, z1bar[static_cast<std::size_t>(i)]);

  RoundLog rl;
  rl.round = 1;
  rl.external_query = session.query(1, rng);

  const ValueMeasurementFamily& fam = fam_cache.at(z1bar);
  ValueMeasurement vm = fam.at(params.eps, params.delta);
  ProjectionFamily pf = softdecision_family(rp, prover, z1bar, params.nu, params.t);

  std::vector<int> qbar_star;
  std::vector<int> r_last;
  for (long s = 1; s <= params.iter; ++s) {
    AttemptLog al;
    al.attempt = s;
    std::vector<int> r_others(static_cast<std::size_t>(k), -1);
    for (int c = 0; c < k; ++c) {
      if (c != i) r_others[static_cast<std::size_t>(c)] = draw_below(rng, base.randomness_dim);
    }
    const double omega = rng.uniform();
    al.r_others = r_others;
    al.omega = omega;

    ValestOutcome est = vm.sample(state, rng);
    al.m_value = est.value;
    state = std::move(est.post);

    PrepareResult prep = prepare(fam, pf, std::move(state), fp, rng);
    state = std::move(prep.state);
    al.prepare_value = prep.value;
    al.prepare_threshold = params.xi - params.eps0 - static_cast<double>(4 * s + 1) * params.eps;
    if (prep.value < al.prepare_threshold) {
      rl.attempts.push_back(std::move(al));
      rec.rounds.push_back(std::move(rl));
      rec.abort_cause = "prepare-low";
      rec.transcript.aborted = true;
      return rec;
    }

    SoftDecisionOutcome sd = softdecision_proj(rp, prover, z1bar, i, r_others, rl.external_query,
                                               omega, params.nu, params.t, state, rng);
    al.check_value = static_cast<double>(sd.bit);
    al.qbar = sd.qbar;
    if (sd.bit == 1) {
      al.passed = true;
      state = std::move(sd.state);
      qbar_star = std::move(sd.qbar);
      r_last = std::move(r_others);
      rl.attempts.push_back(std::move(al));
      break;
    }
    if (s == params.iter) {
      rl.attempts.push_back(std::move(al));
      rec.rounds.push_back(std::move(rl));
      rec.abort_cause = "softdecision-exhausted";
      rec.transcript.aborted = true;
      return rec;
    }
    RepairPrimeResult rpr =
        repair_prime(fam, pf, sd.pvm, sd.bit, std::move(sd.state), prep.value, fp, rng);
    state = std::move(rpr.state);
    al.repair_m_calls = rpr.trace.total_m_calls();
    rl.attempts.push_back(std::move(al));
  }

  // Step 6: answer for real under the tuple whose soft decision fired.
  state = apply_unitary(state, prover.round_unitary(1, qbar_star));
  std::vector<int> z2bar = measure_round_responses(prover, 2, state, rng);
  session.respond(2, z2bar[static_cast<std::size_t>(i)]);
  rl.responses = z2bar;
  rec.rounds.push_back(std::move(rl));

  rec.transcript = Transcript{k, {qbar_star}, {z1bar, z2bar}, false, {}};
  rec.external_verdict = session.verdict() ? 1 : 0;
  rec.verdicts.assign(static_cast<std::size_t>(k), -1);
  for (int c = 0; c < k; ++c) {
    if (c == i) continue;
    rec.verdicts[static_cast<std::size_t>(c)] =
        base.accept(r_last[static_cast<std::size_t>(c)], z1bar[static_cast<std::size_t>(c)],
                    qbar_star[static_cast<std::size_t>(c)], z2bar[static_cast<std::size_t>(c)])
            ? 1
            : 0;
  }
  rec.verdicts[static_cast<std::size_t>(i)] = rec.external_verdict;
  return rec;
}

// ---------------------------------------------------------------------------
// deferred measurement check

DeferredMeasurementCheck deferred_measurement_check(const RepeatedProtocol& rp,
                                                    const ProverStrategy& prover,
                                                    const Transcript& prefix,
                                                    const std::vector<int>& qbar, double eps,
                                                    double delta, const QuantumState& state) {
  require(rp.is_public_coin(), "the deferred-measurement identity is a public-coin round fact");
  const RegisterLayout& layout = prover.initial_state.layout();
  require(state.layout() == layout, "state layout mismatch");
  const int ell = static_cast<int>(prefix.queries.size()) + 1;
  const int k = rp.k;

  const Unitary u = prover.round_unitary(ell, qbar);
  ValueMeasurement vm =
      ValueMeasurementFamily::from_operator(layout, query_block_operator(rp, prover, prefix, qbar))
          .at(eps, delta);
  const Pvm cells = grid_pvm(vm);
  const Mat rho = u.matrix() * state.density() * u.matrix().adjoint();

  // Response classes of the round: basis indices grouped by the joint digit.
  const auto& regs = prover.response_registers.at(static_cast<std::size_t>(ell - 1));
  std::vector<int> reg_idx(static_cast<std::size_t>(k));
  std::vector<int> reg_dims(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    reg_idx[static_cast<std::size_t>(c)] = layout.index_of(regs[static_cast<std::size_t>(c)]);
    reg_dims[static_cast<std::size_t>(c)] = layout.at(reg_idx[static_cast<std::size_t>(c)]).dim;
  }
  long n_resp = 1;
  for (int c = 0; c < k; ++c) n_resp *= reg_dims[static_cast<std::size_t>(c)];
  std::vector<std::vector<int>> classes(static_cast<std::size_t>(n_resp));
  for (int b = 0; b < layout.total_dim(); ++b) {
    std::vector<int> digits(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) {
      digits[static_cast<std::size_t>(c)] = layout.digit(b, reg_idx[static_cast<std::size_t>(c)]);
    }
    classes[static_cast<std::size_t>(compose_digits(digits, reg_dims))].push_back(b);
  }

  const auto& bins = vm.occupied_bins();
  const long n_cells = static_cast<long>(bins.size());
  DeferredMeasurementCheck out;
  out.n_cells = n_cells;
  out.n_responses = n_resp;
  out.cell_grid_indices.reserve(bins.size());
  for (const auto& bin : bins) out.cell_grid_indices.push_back(bin.grid_index);
  out.value_first.assign(static_cast<std::size_t>(n_cells * n_resp), 0.0);
  out.response_first.assign(static_cast<std::size_t>(n_cells * n_resp), 0.0);

  for (long g = 0; g < n_cells; ++g) {
    const Mat& p = cells.projector(bins[static_cast<std::size_t>(g)].grid_index).matrix();
    // cell first: diagonal of P rho P summed per response class
    const Mat prp = p * rho * p;
    // responses first: Tr(P D rho D) over each class block
    for (long z = 0; z < n_resp; ++z) {
      const auto& cls = classes[static_cast<std::size_t>(z)];
      double w1 = 0.0;
      double w2 = 0.0;
      for (int b : cls) {
        w1 += prp(b, b).real();
        for (int b2 : cls) w2 += (p(b, b2) * rho(b2, b)).real();
      }
      out.value_first[static_cast<std::size_t>(g * n_resp + z)] = w1;
      out.response_first[static_cast<std::size_t>(g * n_resp + z)] = w2;
    }
  }
  double tv = 0.0;
  for (std::size_t idx = 0; idx < out.value_first.size(); ++idx) {
    tv += std::abs(out.value_first[idx] - out.response_first[idx]);
  }
  out.tv_distance = 0.5 * tv;
  return out;
}

}  // namespace parrep
