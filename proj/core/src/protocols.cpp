#include "parrep/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <regex>
#include <sstream>

namespace parrep {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw ProtocolError(msg);
}

std::vector<int> repeated_dims(int dim, int k) {
  return std::vector<int>(static_cast<std::size_t>(k), dim);
}

// all joint digit vectors over k copies of [dim], coordinate 0 most significant
long joint_count(int dim, int k) {
  long n = 1;
  for (int i = 0; i < k; ++i) {
    n *= dim;
    require(n <= (1L << 40), "joint space too large");
  }
  return n;
}

}  // namespace

void PublicCoinProtocol::validate() const {
  require(m >= 1, "public-coin protocol needs at least one round");
  require(static_cast<int>(query_dims.size()) == m, "query_dims size must equal round count");
  require(static_cast<int>(response_dims.size()) == m, "response_dims size must equal round count");
  for (int d : query_dims) require(d >= 1, "every query space needs at least one element");
  for (int d : response_dims) require(d >= 1, "every response space needs at least one element");
  require(static_cast<bool>(accept), "accept predicate missing");
}

void ThreeMessageProtocol::validate() const {
  require(randomness_dim >= 1 && z1_dim >= 1 && query_dim >= 1 && z2_dim >= 1,
          "three-message spaces need at least one element");
  require(static_cast<bool>(query_of), "query map missing");
  require(static_cast<bool>(accept), "accept predicate missing");
}

const PublicCoinProtocol& RepeatedProtocol::public_coin() const {
  require(is_public_coin(), "not a public-coin protocol");
  return std::get<PublicCoinProtocol>(base);
}

const ThreeMessageProtocol& RepeatedProtocol::three_message() const {
  require(!is_public_coin(), "not a three-message protocol");
  return std::get<ThreeMessageProtocol>(base);
}

int RepeatedProtocol::response_rounds() const { return is_public_coin() ? public_coin().m : 2; }

int RepeatedProtocol::response_dim(int round) const {
  if (is_public_coin()) {
    require(round >= 1 && round <= public_coin().m, "round out of range");
    return public_coin().response_dims[static_cast<std::size_t>(round - 1)];
  }
  require(round == 1 || round == 2, "round out of range");
  return round == 1 ? three_message().z1_dim : three_message().z2_dim;
}

int RepeatedProtocol::query_dim_of_round(int ell) const {
  if (is_public_coin()) {
    require(ell >= 1 && ell <= public_coin().m, "round out of range");
    return public_coin().query_dims[static_cast<std::size_t>(ell - 1)];
  }
  require(ell == 1, "three-message protocols have one query round");
  return three_message().query_dim;
}

bool threshold_verdict(const std::vector<int>& verdicts, int t) {
  const int k = static_cast<int>(verdicts.size());
  require(t >= 1 && t <= k, "threshold out of range");
  int count = 0;
  for (int v : verdicts) count += (v != 0);
  return count >= t;
}

RepeatedProtocol repeat(PublicCoinProtocol base, int k, int t) {
  base.validate();
  require(k >= 1 && t >= 1 && t <= k, "need 1 <= t <= k");
  return RepeatedProtocol{std::move(base), k, t};
}

RepeatedProtocol repeat(ThreeMessageProtocol base, int k, int t) {
  base.validate();
  require(k >= 1 && t >= 1 && t <= k, "need 1 <= t <= k");
  return RepeatedProtocol{std::move(base), k, t};
}

bool Transcript::complete(const RepeatedProtocol& rp) const {
  if (aborted) return false;
  const std::size_t want_q = rp.is_public_coin() ? static_cast<std::size_t>(rp.public_coin().m) : 1;
  const std::size_t want_z = rp.is_public_coin() ? want_q : 2;
  if (queries.size() != want_q || responses.size() != want_z) return false;
  for (const auto& q : queries)
    if (static_cast<int>(q.size()) != k) return false;
  for (const auto& z : responses)
    if (static_cast<int>(z.size()) != k) return false;
  return true;
}

std::vector<int> coordinate_verdicts(const RepeatedProtocol& rp, const Transcript& tau,
                                     const std::vector<int>& rbar) {
  require(tau.complete(rp), "verdicts need a complete transcript");
  std::vector<int> out(static_cast<std::size_t>(rp.k));
  if (rp.is_public_coin()) {
    const PublicCoinProtocol& base = rp.public_coin();
    for (int j = 0; j < rp.k; ++j) {
      std::vector<int> qs(static_cast<std::size_t>(base.m)), zs(static_cast<std::size_t>(base.m));
      for (int ell = 0; ell < base.m; ++ell) {
        qs[static_cast<std::size_t>(ell)] = tau.queries[static_cast<std::size_t>(ell)][static_cast<std::size_t>(j)];
        zs[static_cast<std::size_t>(ell)] = tau.responses[static_cast<std::size_t>(ell)][static_cast<std::size_t>(j)];
      }
      out[static_cast<std::size_t>(j)] = base.accept(qs, zs) ? 1 : 0;
    }
    return out;
  }
  const ThreeMessageProtocol& base = rp.three_message();
  require(static_cast<int>(rbar.size()) == rp.k,
          "three-message verdicts need the hidden randomness");
  for (int j = 0; j < rp.k; ++j) {
    const std::size_t js = static_cast<std::size_t>(j);
    out[js] = base.accept(rbar[js], tau.responses[0][js], tau.queries[0][js],
                          tau.responses[1][js])
                  ? 1
                  : 0;
  }
  return out;
}

RegisterLayout prover_layout(const RepeatedProtocol& rp, int work_dim) {
  require(work_dim >= 1, "work dimension must be positive");
  std::vector<Register> regs;
  for (int round = 1; round <= rp.response_rounds(); ++round)
    for (int c = 0; c < rp.k; ++c)
      regs.push_back({"z" + std::to_string(round) + "_" + std::to_string(c),
                      rp.response_dim(round)});
  if (work_dim > 1) regs.push_back({"w", work_dim});
  return RegisterLayout(std::move(regs));
}

namespace {

std::vector<std::vector<std::string>> response_register_names(const RepeatedProtocol& rp) {
  std::vector<std::vector<std::string>> names;
  for (int round = 1; round <= rp.response_rounds(); ++round) {
    std::vector<std::string> row;
    for (int c = 0; c < rp.k; ++c)
      row.push_back("z" + std::to_string(round) + "_" + std::to_string(c));
    names.push_back(std::move(row));
  }
  return names;
}

// which response registers the round-ell unitary writes (z2 for three-message)
int unitary_target_round(const RepeatedProtocol& rp, int ell) {
  return rp.is_public_coin() ? ell : 2;
}

}  // namespace

ProverStrategy deterministic_prover(
    const RepeatedProtocol& rp,
    std::function<int(int ell, const std::vector<int>& qbar, int coord)> respond, int work_dim) {
  require(static_cast<bool>(respond), "response map missing");
  const RegisterLayout layout = prover_layout(rp, work_dim);
  ProverStrategy p{QuantumState::basis(layout, 0), response_register_names(rp), {}, 1};
  p.lambda_qubits = std::max(1, layout.qubit_count());
  const int k = rp.k;
  p.round_unitary = [rp, respond, layout, k](int ell, const std::vector<int>& qbar) {
    require(static_cast<int>(qbar.size()) == k, "query width mismatch");
    const int target = unitary_target_round(rp, ell);
    const int dim = rp.response_dim(target);
    std::vector<int> reg_index(static_cast<std::size_t>(k));
    std::vector<int> shift(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) {
      reg_index[static_cast<std::size_t>(c)] =
          layout.index_of("z" + std::to_string(target) + "_" + std::to_string(c));
      const int z = respond(ell, qbar, c);
      require(z >= 0 && z < dim, "response outside its space");
      shift[static_cast<std::size_t>(c)] = z;
    }
    std::vector<int> perm(static_cast<std::size_t>(layout.total_dim()));
    for (int idx = 0; idx < layout.total_dim(); ++idx) {
      std::vector<int> digits = layout.decompose(idx);
      for (int c = 0; c < k; ++c) {
        int& d = digits[static_cast<std::size_t>(reg_index[static_cast<std::size_t>(c)])];
        d = (d + shift[static_cast<std::size_t>(c)]) % dim;
      }
      perm[static_cast<std::size_t>(idx)] = layout.compose(digits);
    }
    return Unitary::permutation(layout, perm);
  };
  return p;
}

ProverStrategy preimage_guess_prover(const RepeatedProtocol& rp) {
  require(!rp.is_public_coin(), "preimage strategy needs a three-message protocol");
  // smallest preimage of q under r mod w is q itself
  return deterministic_prover(
      rp, [](int, const std::vector<int>& qbar, int c) { return qbar[static_cast<std::size_t>(c)]; });
}

ProverStrategy bad_correlations_prover(int k, double delta) {
  require(k >= 1, "need at least one copy");
  require(delta > 0.0 && delta < 1.0, "delta must lie in (0,1)");
  const RepeatedProtocol rp = repeat(token_game(), k, 1);
  const RegisterLayout layout = prover_layout(rp);
  const int dim = layout.total_dim();

  auto token_index = [&](int failing_coord) {
    std::vector<int> digits(static_cast<std::size_t>(layout.size()), 0);
    for (int c = 0; c < k; ++c)
      digits[static_cast<std::size_t>(layout.index_of("z2_" + std::to_string(c)))] =
          (c == failing_coord) ? 0 : 1;
    return layout.compose(digits);
  };

  const double all_ones = std::pow(delta, k);
  Mat rho = Mat::Zero(dim, dim);
  rho(token_index(-1), token_index(-1)) = all_ones;
  for (int j = 0; j < k; ++j) rho(token_index(j), token_index(j)) += (1.0 - all_ones) / k;

  ProverStrategy p{QuantumState::mixed(layout, std::move(rho)), response_register_names(rp), {}, 1};
  p.lambda_qubits = std::max(1, layout.qubit_count());
  p.round_unitary = [layout](int, const std::vector<int>&) { return Unitary::identity(layout); };
  return p;
}

std::vector<double> token_verdict_law(const ProverStrategy& prover) {
  const Mat rho = prover.initial_state.density();
  std::vector<double> law(static_cast<std::size_t>(rho.rows()));
  for (Eigen::Index i = 0; i < rho.rows(); ++i) law[static_cast<std::size_t>(i)] = rho(i, i).real();
  return law;
}

namespace {

std::vector<int> sample_joint(int dim, int k, SplitRng& rng) {
  std::vector<int> v(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c)
    v[static_cast<std::size_t>(c)] = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(dim)));
  return v;
}

std::pair<std::vector<int>, QuantumState> measure_round(const ProverStrategy& prover, int round,
                                                        QuantumState state, SplitRng& rng) {
  std::vector<int> digits;
  for (const std::string& name : prover.response_registers[static_cast<std::size_t>(round - 1)]) {
    MeasureResult mr = measure_register(state, name, rng);
    digits.push_back(mr.label);
    state = std::move(mr.post);
  }
  return {std::move(digits), std::move(state)};
}

}  // namespace

InteractionResult run_interaction(const ProverStrategy& prover, const RepeatedProtocol& rp,
                                  SplitRng& rng) {
  require(static_cast<int>(prover.response_registers.size()) == rp.response_rounds(),
          "strategy round count mismatch");
  InteractionResult res;
  res.transcript.k = rp.k;
  QuantumState state = prover.initial_state;

  if (rp.is_public_coin()) {
    const PublicCoinProtocol& base = rp.public_coin();
    for (int ell = 1; ell <= base.m; ++ell) {
      const std::vector<int> qbar =
          sample_joint(base.query_dims[static_cast<std::size_t>(ell - 1)], rp.k, rng);
      state = apply_unitary(state, prover.round_unitary(ell, qbar));
      auto [zbar, post] = measure_round(prover, ell, std::move(state), rng);
      state = std::move(post);
      res.transcript.queries.push_back(qbar);
      res.transcript.responses.push_back(std::move(zbar));
    }
    res.transcript.verdict_bits = coordinate_verdicts(rp, res.transcript);
  } else {
    const ThreeMessageProtocol& base = rp.three_message();
    auto [z1bar, after_z1] = measure_round(prover, 1, std::move(state), rng);
    state = std::move(after_z1);
    res.randomness = sample_joint(base.randomness_dim, rp.k, rng);
    std::vector<int> qbar(static_cast<std::size_t>(rp.k));
    for (int j = 0; j < rp.k; ++j)
      qbar[static_cast<std::size_t>(j)] =
          base.query_of(res.randomness[static_cast<std::size_t>(j)], z1bar[static_cast<std::size_t>(j)]);
    state = apply_unitary(state, prover.round_unitary(1, qbar));
    auto [z2bar, after_z2] = measure_round(prover, 2, std::move(state), rng);
    res.transcript.responses.push_back(std::move(z1bar));
    res.transcript.queries.push_back(std::move(qbar));
    res.transcript.responses.push_back(std::move(z2bar));
    res.transcript.verdict_bits = coordinate_verdicts(rp, res.transcript, res.randomness);
  }
  res.verdict = threshold_verdict(res.transcript.verdict_bits, rp.t);
  return res;
}

// ---------------------------------------------------------------------------
// residual operators

namespace {

struct JointIter {
  std::vector<int> digits;
  int dim;
  bool done = false;

  explicit JointIter(int dim_, int k) : digits(static_cast<std::size_t>(k), 0), dim(dim_) {
    done = (k == 0);
  }
  void advance() {
    for (int c = static_cast<int>(digits.size()) - 1; c >= 0; --c) {
      if (++digits[static_cast<std::size_t>(c)] < dim) return;
      digits[static_cast<std::size_t>(c)] = 0;
    }
    done = true;
  }
};

// projector mask for "round's registers read zbar" on the prover layout
std::vector<bool> response_mask(const RegisterLayout& layout,
                                const std::vector<std::string>& regs,
                                const std::vector<int>& zbar) {
  std::vector<int> reg_index;
  for (const std::string& name : regs) reg_index.push_back(layout.index_of(name));
  std::vector<bool> mask(static_cast<std::size_t>(layout.total_dim()));
  for (int idx = 0; idx < layout.total_dim(); ++idx) {
    bool hit = true;
    for (std::size_t c = 0; c < reg_index.size(); ++c)
      if (layout.digit(idx, reg_index[c]) != zbar[c]) {
        hit = false;
        break;
      }
    mask[static_cast<std::size_t>(idx)] = hit;
  }
  return mask;
}

long remaining_branches(const RepeatedProtocol& rp, int next_round) {
  const PublicCoinProtocol& base = rp.public_coin();
  long total = 1;
  for (int ell = next_round; ell <= base.m; ++ell) {
    total *= joint_count(base.query_dims[static_cast<std::size_t>(ell - 1)], rp.k);
    total *= joint_count(base.response_dims[static_cast<std::size_t>(ell - 1)], rp.k);
    require(total <= 100000000L, "residual enumeration too large");
  }
  return total;
}

Mat public_residual(const RepeatedProtocol& rp, const ProverStrategy& prover,
                    std::vector<std::vector<int>>& qs, std::vector<std::vector<int>>& zs) {
  const PublicCoinProtocol& base = rp.public_coin();
  const RegisterLayout& layout = prover.initial_state.layout();
  const int dim = layout.total_dim();
  const int done = static_cast<int>(qs.size());

  if (done == base.m) {
    Transcript tau;
    tau.k = rp.k;
    tau.queries = qs;
    tau.responses = zs;
    const bool ok = threshold_verdict(coordinate_verdicts(rp, tau), rp.t);
    return ok ? Mat(Mat::Identity(dim, dim)) : Mat(Mat::Zero(dim, dim));
  }

  const int ell = done + 1;
  Mat avg = Mat::Zero(dim, dim);
  long n_queries = 0;
  for (JointIter q(base.query_dims[static_cast<std::size_t>(ell - 1)], rp.k); !q.done;
       q.advance(), ++n_queries) {
    qs.push_back(q.digits);
    Mat block = Mat::Zero(dim, dim);
    for (JointIter z(base.response_dims[static_cast<std::size_t>(ell - 1)], rp.k); !z.done;
         z.advance()) {
      zs.push_back(z.digits);
      const Mat inner = public_residual(rp, prover, qs, zs);
      zs.pop_back();
      const std::vector<bool> mask = response_mask(
          layout, prover.response_registers[static_cast<std::size_t>(ell - 1)], z.digits);
      for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b)
          if (mask[static_cast<std::size_t>(a)] && mask[static_cast<std::size_t>(b)])
            block(a, b) += inner(a, b);
    }
    qs.pop_back();
    const Unitary u = prover.round_unitary(ell, q.digits);
    avg += u.matrix().adjoint() * block * u.matrix();
  }
  return avg / static_cast<double>(n_queries);
}

}  // namespace

Mat residual_operator(const RepeatedProtocol& rp, const ProverStrategy& prover,
                      const Transcript& prefix) {
  require(rp.is_public_coin(), "transcript-prefix residuals are public-coin");
  require(prefix.queries.size() == prefix.responses.size(), "ragged transcript prefix");
  require(static_cast<int>(prefix.queries.size()) <= rp.public_coin().m, "prefix too long");
  remaining_branches(rp, static_cast<int>(prefix.queries.size()) + 1);
  std::vector<std::vector<int>> qs = prefix.queries;
  std::vector<std::vector<int>> zs = prefix.responses;
  return public_residual(rp, prover, qs, zs);
}

Mat query_block_operator(const RepeatedProtocol& rp, const ProverStrategy& prover,
                         const Transcript& prefix, const std::vector<int>& qbar) {
  require(rp.is_public_coin(), "query blocks are public-coin");
  const PublicCoinProtocol& base = rp.public_coin();
  const int ell = static_cast<int>(prefix.queries.size()) + 1;
  require(ell <= base.m, "prefix already complete");
  require(static_cast<int>(qbar.size()) == rp.k, "query width mismatch");
  const RegisterLayout& layout = prover.initial_state.layout();
  const int dim = layout.total_dim();

  std::vector<std::vector<int>> qs = prefix.queries;
  std::vector<std::vector<int>> zs = prefix.responses;
  qs.push_back(qbar);
  Mat block = Mat::Zero(dim, dim);
  for (JointIter z(base.response_dims[static_cast<std::size_t>(ell - 1)], rp.k); !z.done;
       z.advance()) {
    zs.push_back(z.digits);
    const Mat inner = public_residual(rp, prover, qs, zs);
    zs.pop_back();
    const std::vector<bool> mask = response_mask(
        layout, prover.response_registers[static_cast<std::size_t>(ell - 1)], z.digits);
    for (int a = 0; a < dim; ++a)
      for (int b = 0; b < dim; ++b)
        if (mask[static_cast<std::size_t>(a)] && mask[static_cast<std::size_t>(b)])
          block(a, b) += inner(a, b);
  }
  return block;
}

Mat residual_operator(const RepeatedProtocol& rp, const ProverStrategy& prover,
                      const std::vector<int>& z1bar) {
  require(!rp.is_public_coin(), "first-message residuals are three-message");
  const ThreeMessageProtocol& base = rp.three_message();
  require(static_cast<int>(z1bar.size()) == rp.k, "first-message width mismatch");
  const RegisterLayout& layout = prover.initial_state.layout();
  const int dim = layout.total_dim();

  std::vector<int> z2_reg;
  for (const std::string& name : prover.response_registers[1])
    z2_reg.push_back(layout.index_of(name));

  Mat avg = Mat::Zero(dim, dim);
  long n = 0;
  for (JointIter r(base.randomness_dim, rp.k); !r.done; r.advance(), ++n) {
    std::vector<int> qbar(static_cast<std::size_t>(rp.k));
    for (int j = 0; j < rp.k; ++j)
      qbar[static_cast<std::size_t>(j)] =
          base.query_of(r.digits[static_cast<std::size_t>(j)], z1bar[static_cast<std::size_t>(j)]);
    Eigen::VectorXd diag(dim);
    for (int idx = 0; idx < dim; ++idx) {
      std::vector<int> verdicts(static_cast<std::size_t>(rp.k));
      for (int j = 0; j < rp.k; ++j) {
        const std::size_t js = static_cast<std::size_t>(j);
        verdicts[js] = base.accept(r.digits[js], z1bar[js], qbar[js],
                                   layout.digit(idx, z2_reg[js]))
                           ? 1
                           : 0;
      }
      diag(idx) = threshold_verdict(verdicts, rp.t) ? 1.0 : 0.0;
    }
    const Unitary u = prover.round_unitary(1, qbar);
    avg += u.matrix().adjoint() * diag.cast<cdouble>().asDiagonal() * u.matrix();
  }
  return avg / static_cast<double>(n);
}

GameSpec three_message_game(const RepeatedProtocol& rp, const ProverStrategy& prover,
                            const std::vector<int>& z1bar) {
  require(!rp.is_public_coin(), "need a three-message protocol");
  const ThreeMessageProtocol& base = rp.three_message();
  require(static_cast<int>(z1bar.size()) == rp.k, "first-message width mismatch");

  GameSpec game;
  game.layout = prover.initial_state.layout();
  game.response_registers = prover.response_registers[1];
  const std::vector<int> rdims = repeated_dims(base.randomness_dim, rp.k);
  const std::vector<int> zdims = repeated_dims(base.z2_dim, rp.k);
  game.randomness_count = static_cast<int>(joint_count(base.randomness_dim, rp.k));
  const int k = rp.k;
  const int t = rp.t;
  game.verdict = [base, z1bar, rdims, zdims, k, t](int r, int z) {
    const std::vector<int> rbar = decompose_index(r, rdims);
    const std::vector<int> z2bar = decompose_index(z, zdims);
    std::vector<int> verdicts(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) {
      const std::size_t js = static_cast<std::size_t>(j);
      verdicts[js] = base.accept(rbar[js], z1bar[js], base.query_of(rbar[js], z1bar[js]),
                                 z2bar[js])
                         ? 1
                         : 0;
    }
    return threshold_verdict(verdicts, t);
  };
  game.adversary = [base, z1bar, rdims, k, prover](int r) {
    const std::vector<int> rbar = decompose_index(r, rdims);
    std::vector<int> qbar(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j)
      qbar[static_cast<std::size_t>(j)] =
          base.query_of(rbar[static_cast<std::size_t>(j)], z1bar[static_cast<std::size_t>(j)]);
    return prover.round_unitary(1, qbar);
  };
  return game;
}

double exact_success(const ProverStrategy& prover, const RepeatedProtocol& rp) {
  const RegisterLayout& layout = prover.initial_state.layout();
  const Mat rho = prover.initial_state.density();
  if (rp.is_public_coin()) {
    const Mat m = residual_operator(rp, prover, Transcript{rp.k, {}, {}, false, {}});
    return (m * rho).trace().real();
  }
  const ThreeMessageProtocol& base = rp.three_message();
  double total = 0.0;
  for (JointIter z1(base.z1_dim, rp.k); !z1.done; z1.advance()) {
    const std::vector<bool> mask = response_mask(layout, prover.response_registers[0], z1.digits);
    Mat blocked = Mat::Zero(rho.rows(), rho.cols());
    for (int a = 0; a < rho.rows(); ++a)
      for (int b = 0; b < rho.cols(); ++b)
        if (mask[static_cast<std::size_t>(a)] && mask[static_cast<std::size_t>(b)])
          blocked(a, b) = rho(a, b);
    if (blocked.trace().real() < 1e-15) continue;
    total += (residual_operator(rp, prover, z1.digits) * blocked).trace().real();
  }
  return total;
}

// ---------------------------------------------------------------------------
// classical optimum

namespace {

double public_optimum(const RepeatedProtocol& rp, std::vector<std::vector<int>>& qs,
                      std::vector<std::vector<int>>& zs) {
  const PublicCoinProtocol& base = rp.public_coin();
  const int done = static_cast<int>(qs.size());
  if (done == base.m) {
    Transcript tau;
    tau.k = rp.k;
    tau.queries = qs;
    tau.responses = zs;
    return threshold_verdict(coordinate_verdicts(rp, tau), rp.t) ? 1.0 : 0.0;
  }
  const int ell = done + 1;
  double sum = 0.0;
  long n = 0;
  for (JointIter q(base.query_dims[static_cast<std::size_t>(ell - 1)], rp.k); !q.done;
       q.advance(), ++n) {
    qs.push_back(q.digits);
    double best = 0.0;
    for (JointIter z(base.response_dims[static_cast<std::size_t>(ell - 1)], rp.k); !z.done;
         z.advance()) {
      zs.push_back(z.digits);
      best = std::max(best, public_optimum(rp, qs, zs));
      zs.pop_back();
    }
    qs.pop_back();
    sum += best;
  }
  return sum / static_cast<double>(n);
}

}  // namespace

double optimal_success(const RepeatedProtocol& rp, std::uint64_t max_branches) {
  if (rp.is_public_coin()) {
    const PublicCoinProtocol& base = rp.public_coin();
    std::uint64_t total = 1;
    for (int ell = 1; ell <= base.m; ++ell) {
      total *= static_cast<std::uint64_t>(joint_count(base.query_dims[static_cast<std::size_t>(ell - 1)], rp.k));
      total *= static_cast<std::uint64_t>(joint_count(base.response_dims[static_cast<std::size_t>(ell - 1)], rp.k));
      require(total <= max_branches, "strategy space too large");
    }
    std::vector<std::vector<int>> qs, zs;
    return public_optimum(rp, qs, zs);
  }

  const ThreeMessageProtocol& base = rp.three_message();
  const std::uint64_t total = static_cast<std::uint64_t>(joint_count(base.z1_dim, rp.k)) *
                              static_cast<std::uint64_t>(joint_count(base.randomness_dim, rp.k)) *
                              static_cast<std::uint64_t>(joint_count(base.z2_dim, rp.k));
  require(total <= max_branches, "strategy space too large");

  const long z2_total = joint_count(base.z2_dim, rp.k);
  const std::vector<int> z2dims = repeated_dims(base.z2_dim, rp.k);
  double best_overall = 0.0;
  for (JointIter z1(base.z1_dim, rp.k); !z1.done; z1.advance()) {
    // group hidden randomness by the query it yields; the prover answers the
    // query, not the randomness
    std::map<std::vector<int>, std::vector<double>> buckets;
    long n_r = 0;
    for (JointIter r(base.randomness_dim, rp.k); !r.done; r.advance(), ++n_r) {
      std::vector<int> qbar(static_cast<std::size_t>(rp.k));
      for (int j = 0; j < rp.k; ++j)
        qbar[static_cast<std::size_t>(j)] = base.query_of(
            r.digits[static_cast<std::size_t>(j)], z1.digits[static_cast<std::size_t>(j)]);
      auto& wins = buckets.try_emplace(qbar, static_cast<std::size_t>(z2_total), 0.0).first->second;
      for (long z2 = 0; z2 < z2_total; ++z2) {
        const std::vector<int> z2bar = decompose_index(static_cast<int>(z2), z2dims);
        std::vector<int> verdicts(static_cast<std::size_t>(rp.k));
        for (int j = 0; j < rp.k; ++j) {
          const std::size_t js = static_cast<std::size_t>(j);
          verdicts[js] =
              base.accept(r.digits[js], z1.digits[js], qbar[js], z2bar[js]) ? 1 : 0;
        }
        if (threshold_verdict(verdicts, rp.t)) wins[static_cast<std::size_t>(z2)] += 1.0;
      }
    }
    double value = 0.0;
    for (const auto& [qbar, wins] : buckets)
      value += *std::max_element(wins.begin(), wins.end());
    best_overall = std::max(best_overall, value / static_cast<double>(n_r));
  }
  return best_overall;
}

double optimal_success(const RepeatedProtocol& rp, const std::vector<ProverStrategy>& family) {
  require(!family.empty(), "empty strategy family");
  double best = 0.0;
  for (const ProverStrategy& p : family) best = std::max(best, exact_success(p, rp));
  return best;
}

// ---------------------------------------------------------------------------
// catalog

PublicCoinProtocol subset_game(int n, int s) {
  require(n >= 1 && s >= 0 && s <= n, "subset game needs 0 <= s <= n");
  PublicCoinProtocol p;
  p.m = 1;
  p.query_dims = {n};
  p.response_dims = {1};
  p.accept = [s](const std::vector<int>& qs, const std::vector<int>&) { return qs[0] < s; };
  return p;
}

PublicCoinProtocol chain_game(int m, int n, int s) {
  require(m >= 1, "chain game needs at least one round");
  require(n >= 1 && s >= 0 && s <= n, "chain game needs 0 <= s <= n");
  PublicCoinProtocol p;
  p.m = m;
  p.query_dims.assign(static_cast<std::size_t>(m), n);
  p.response_dims.assign(static_cast<std::size_t>(m), 1);
  p.accept = [s](const std::vector<int>& qs, const std::vector<int>&) {
    for (int q : qs)
      if (q >= s) return false;
    return true;
  };
  return p;
}

ThreeMessageProtocol preimage_game(int n, int w) {
  require(n >= 1 && w >= 1 && w <= n, "preimage game needs 1 <= w <= n");
  require(n % w == 0, "preimage game needs w | n");
  ThreeMessageProtocol p;
  p.randomness_dim = n;
  p.z1_dim = 1;
  p.query_dim = w;
  p.z2_dim = n;
  p.query_of = [w](int r, int) { return r % w; };
  p.accept = [](int r, int, int, int z2) { return z2 == r; };
  return p;
}

ThreeMessageProtocol token_game() {
  ThreeMessageProtocol p;
  p.randomness_dim = 1;
  p.z1_dim = 1;
  p.query_dim = 1;
  p.z2_dim = 2;
  p.query_of = [](int, int) { return 0; };
  p.accept = [](int, int, int, int z2) { return z2 == 1; };
  return p;
}

CatalogEntry parse_catalog(const std::string& spec) {
  static const std::regex shape(R"(^\s*([a-z]+)\s*\(\s*(.*?)\s*\)\s*$)");
  std::smatch m;
  require(std::regex_match(spec, m, shape), "catalog spec must look like name(k=v,...)");
  const std::string name = m[1];
  std::map<std::string, int> args;
  const std::string body = m[2];
  if (!body.empty()) {
    static const std::regex pair(R"(^\s*([a-z]+)\s*=\s*(-?\d+)\s*$)");
    std::stringstream ss(body);
    for (std::string item; std::getline(ss, item, ',');) {
      std::smatch am;
      require(std::regex_match(item, am, pair), "catalog argument must be key=int");
      require(!args.count(am[1]), "duplicate catalog argument");
      args[am[1]] = std::stoi(am[2]);
    }
  }
  auto take = [&](const char* key) {
    auto it = args.find(key);
    require(it != args.end(), "missing catalog argument");
    const int v = it->second;
    args.erase(it);
    return v;
  };

  CatalogEntry entry;
  std::ostringstream canon;
  if (name == "subset") {
    const int n = take("n"), s = take("s");
    entry.protocol = subset_game(n, s);
    entry.soundness = static_cast<double>(s) / n;
    canon << "subset(n=" << n << ",s=" << s << ")";
  } else if (name == "chain") {
    const int mm = take("m"), n = take("n"), s = take("s");
    entry.protocol = chain_game(mm, n, s);
    entry.soundness = std::pow(static_cast<double>(s) / n, mm);
    canon << "chain(m=" << mm << ",n=" << n << ",s=" << s << ")";
  } else if (name == "preimage") {
    const int n = take("n"), w = take("w");
    entry.protocol = preimage_game(n, w);
    entry.soundness = static_cast<double>(w) / n;
    canon << "preimage(n=" << n << ",w=" << w << ")";
  } else if (name == "token") {
    entry.protocol = token_game();
    entry.soundness = 1.0;
    canon << "token()";
  } else {
    throw ProtocolError("unknown catalog name: " + name);
  }
  require(args.empty(), "unexpected catalog argument");
  entry.name = canon.str();
  return entry;
}

}  // namespace parrep
