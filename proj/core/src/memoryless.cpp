#include "parrep/memoryless.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

namespace parrep {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw MeasureError(msg);
}

}  // namespace

// ---------------------------------------------------------------------------
// ProjectionFamily

ProjectionFamily ProjectionFamily::enumerated(RegisterLayout layout, std::vector<Pvm> members) {
  require(!members.empty(), "projection family needs at least one member");
  ProjectionFamily f;
  f.n_outcomes_ = members.front().n_outcomes();
  for (const Pvm& m : members) {
    require(m.layout() == layout, "projection family member on a different layout");
    require(m.n_outcomes() == f.n_outcomes_, "projection family members disagree on outcome count");
    for (int y = 0; y < m.n_outcomes(); ++y)
      require(m.label(y) == y, "projection family outcome labels must be 0..N-1");
  }
  f.layout_ = std::move(layout);
  f.member_count_ = members.size();
  f.members_ = std::move(members);
  return f;
}

ProjectionFamily ProjectionFamily::sampled(RegisterLayout layout, int n_outcomes,
                                           std::function<Pvm(SplitRng&)> sampler,
                                           std::uint64_t nominal_count) {
  require(n_outcomes >= 1, "projection family needs at least one outcome");
  require(static_cast<bool>(sampler), "sampled projection family needs a sampler");
  ProjectionFamily f;
  f.layout_ = std::move(layout);
  f.n_outcomes_ = n_outcomes;
  f.member_count_ = nominal_count;
  f.sampler_ = std::move(sampler);
  return f;
}

const Pvm& ProjectionFamily::member(std::uint64_t index) const {
  require(enumerable(), "projection family is sample-only");
  require(index < members_.size(), "projection family member index out of range");
  return members_[static_cast<std::size_t>(index)];
}

std::pair<std::uint64_t, Pvm> ProjectionFamily::sample(SplitRng& rng) const {
  if (enumerable()) {
    const std::uint64_t idx = rng.uniform_below(members_.size());
    return {idx, members_[static_cast<std::size_t>(idx)]};
  }
  return {0, sampler_(rng)};
}

// ---------------------------------------------------------------------------
// FloodingParams

FloodingParams FloodingParams::make(double epsilon, double delta, double eta, int ell) {
  require(epsilon > 0.0 && epsilon <= 1.0, "flooding epsilon out of (0,1]");
  require(delta >= 0.0 && delta < 1.0, "flooding delta out of [0,1)");
  require(eta > 0.0 && eta <= 1.0, "flooding eta out of (0,1]");
  require(ell >= 1, "flooding ell must be a positive qubit count");
  FloodingParams fp;
  fp.epsilon = epsilon;
  fp.delta = delta;
  fp.eta = eta;
  fp.ell = ell;
  const double rounds = std::ceil(4.0 * ell / (eta * eta * eta) - 1e-12);
  require(rounds < 9.0e18, "flooding round count overflows; use a round-count override");
  fp.T = std::max<long>(static_cast<long>(rounds), 1);
  const double t = static_cast<double>(fp.T);
  fp.inner_epsilon = epsilon / (2.0 * t);
  fp.inner_delta = delta * delta / (64.0 * t * t);
  fp.inner_eta = eta / (2.0 * t);
  fp.conformant = true;
  return fp;
}

FloodingParams FloodingParams::with_override(double epsilon, double delta, double eta, int ell,
                                             long t_override) {
  require(t_override >= 1, "flooding round override must be >= 1");
  FloodingParams fp = make(epsilon, delta, eta, ell);
  if (t_override == fp.T) return fp;
  fp.T = t_override;
  const double t = static_cast<double>(fp.T);
  fp.inner_epsilon = epsilon / (2.0 * t);
  fp.inner_delta = delta * delta / (64.0 * t * t);
  fp.inner_eta = eta / (2.0 * t);
  fp.conformant = false;
  return fp;
}

// ---------------------------------------------------------------------------
// trace

long FloodingTrace::total_m_calls() const {
  long n = initial_repair_m_calls + 1;  // closing measurement
  for (const FloodingRound& r : rounds) n += 1 + r.repair_m_calls;
  return n;
}

long FloodingTrace::total_p_calls() const {
  long n = initial_repair_p_calls;
  for (const FloodingRound& r : rounds) n += 1 + r.repair_p_calls;
  return n;
}

std::string FloodingTrace::to_jsonl() const {
  std::ostringstream out;
  nlohmann::json head;
  head["planned_rounds"] = planned_rounds;
  head["initial_repair_m_calls"] = initial_repair_m_calls;
  head["initial_repair_p_calls"] = initial_repair_p_calls;
  out << head.dump() << '\n';
  for (const FloodingRound& r : rounds) {
    nlohmann::json j;
    j["index"] = r.index;
    j["member"] = r.member;
    j["m_value"] = r.m_value;
    j["pi_outcome"] = r.pi_outcome;
    j["repair_m_calls"] = r.repair_m_calls;
    j["repair_p_calls"] = r.repair_p_calls;
    j["repair_exhausted"] = r.repair_exhausted;
    out << j.dump() << '\n';
  }
  return out.str();
}

namespace {

bool within_call_budget(const FloodingTrace& trace, const FloodingParams& fp) {
  const double t = static_cast<double>(fp.T);
  const double cap = 8.0 * (t + t * t / fp.eta);
  return static_cast<double>(trace.total_m_calls() + trace.total_p_calls()) <= cap;
}

// One flooding round: fine measurement, uniform family member, repair back.
FloodingRound flood_once(const ValueMeasurement& fine, const ProjectionFamily& projections,
                         QuantumState& state, double inner_eta, long index, SplitRng& rng) {
  FloodingRound round;
  round.index = index;
  ValestOutcome est = valest(fine, state, rng);
  round.m_value = est.value;
  auto [member_idx, pvm] = projections.sample(rng);
  round.member = member_idx;
  MeasureResult mr = measure_projective(est.post, pvm, rng);
  round.pi_outcome = mr.label;
  RepairResult rep = repair(fine, pvm, mr.outcome_index, mr.post, est.value, inner_eta, rng);
  round.repair_m_calls = rep.m_calls;
  round.repair_p_calls = rep.p_calls;
  round.repair_exhausted = rep.exhausted;
  state = std::move(rep.state);
  return round;
}

}  // namespace

// ---------------------------------------------------------------------------
// prepare / repair_prime

PrepareResult prepare(const ValueMeasurementFamily& family, const ProjectionFamily& projections,
                      QuantumState state, const FloodingParams& fp, SplitRng& rng) {
  require(projections.layout() == state.layout(), "prepare: family layout mismatch");
  const ValueMeasurement fine = family.at(fp.inner_epsilon, fp.inner_delta);

  PrepareResult res{std::move(state), 0.0, 0, {}, true};
  res.sampled_t = 1 + static_cast<long>(rng.uniform_below(static_cast<std::uint64_t>(fp.T)));
  res.trace.planned_rounds = res.sampled_t - 1;
  for (long i = 1; i <= res.sampled_t - 1; ++i)
    res.trace.rounds.push_back(flood_once(fine, projections, res.state, fp.inner_eta, i, rng));

  ValestOutcome closing = valest(fine, res.state, rng);
  res.value = closing.value;
  res.state = std::move(closing.post);
  res.call_budget_ok = within_call_budget(res.trace, fp);
  return res;
}

RepairPrimeResult repair_prime(const ValueMeasurementFamily& family,
                               const ProjectionFamily& projections, const Pvm& disturbing,
                               int outcome, QuantumState sigma, double p_prime,
                               const FloodingParams& fp, SplitRng& rng) {
  require(projections.layout() == sigma.layout(), "repair_prime: family layout mismatch");
  const ValueMeasurement fine = family.at(fp.inner_epsilon, fp.inner_delta);

  RepairPrimeResult res{std::move(sigma), 0.0, {}, true};
  res.trace.planned_rounds = fp.T;

  RepairResult first = repair(fine, disturbing, outcome, res.state, p_prime, fp.inner_eta, rng);
  res.trace.initial_repair_m_calls = first.m_calls;
  res.trace.initial_repair_p_calls = first.p_calls;
  res.state = std::move(first.state);

  for (long i = 1; i <= fp.T; ++i)
    res.trace.rounds.push_back(flood_once(fine, projections, res.state, fp.inner_eta, i, rng));

  ValestOutcome closing = valest(fine, res.state, rng);
  res.final_value = closing.value;
  res.state = std::move(closing.post);
  res.call_budget_ok = within_call_budget(res.trace, fp);
  return res;
}

// ---------------------------------------------------------------------------
// forgetfulness
//
// The quantity is an ensemble trace distance between (planted member, output
// state) and (fresh member, output state). Because only the member-averaged
// output states enter, every measurement in the chain acts as a linear
// channel on density matrices and the full outcome tree collapses to channel
// algebra: a prefix pass gathers the fine-grid-resolved state at each
// possible stopping round of prepare, and one suffix per (planted member)
// pushes it through disturb, repair, the fixed flooding tail, and the closing
// dephase. This sums exactly the same Born-weighted branches a depth-first
// walk over (t, member sequence, outcomes) would, without the blowup.

namespace {

constexpr double kPrune = 1e-14;

struct BinBasis {
  int grid_index;
  double value;
  Mat basis;  // dim x bin_size, orthonormal columns
};

std::vector<BinBasis> bin_bases(const ValueMeasurement& vm) {
  const Mat& vecs = vm.family().eigenvectors();
  std::vector<BinBasis> out;
  for (const SpectralBin& b : vm.occupied_bins()) {
    BinBasis bb;
    bb.grid_index = b.grid_index;
    bb.value = vm.grid().value(b.grid_index);
    bb.basis.resize(vecs.rows(), static_cast<Eigen::Index>(b.eigen_indices.size()));
    for (std::size_t c = 0; c < b.eigen_indices.size(); ++c)
      bb.basis.col(static_cast<Eigen::Index>(c)) = vecs.col(b.eigen_indices[c]);
    out.push_back(std::move(bb));
  }
  return out;
}

struct WeightedPart {
  const BinBasis* bin;
  Mat density;  // unnormalised
};

// Dephase into spectral bins, pruning negligible mass.
std::vector<WeightedPart> split_bins(const Mat& rho, const std::vector<BinBasis>& bins,
                                     double* pruned) {
  std::vector<WeightedPart> parts;
  for (const BinBasis& bb : bins) {
    Mat inner = bb.basis.adjoint() * rho * bb.basis;
    const double mass = inner.real().trace();
    if (mass < kPrune) {
      *pruned += std::max(mass, 0.0);
      continue;
    }
    parts.push_back({&bb, bb.basis * inner * bb.basis.adjoint()});
  }
  return parts;
}

Mat dephase(const Mat& rho, const std::vector<BinBasis>& bins, double* pruned) {
  Mat out = Mat::Zero(rho.rows(), rho.cols());
  for (const WeightedPart& p : split_bins(rho, bins, pruned)) out += p.density;
  return out;
}

// Channel form of repair(): alternate bin dephase (absorbing mass whose value
// re-entered the tolerance around `target`) with the binary dephase
// {q1, 1-q1}, for the same ceil(4/eta) budget the sampled procedure uses.
Mat repair_channel(Mat rho, double target, const Mat& q1, const std::vector<BinBasis>& bins,
                   double inner_epsilon, double inner_eta, double* pruned) {
  const long budget = repair_budget(inner_eta);
  const Mat q0 = Mat::Identity(q1.rows(), q1.cols()) - q1;
  Mat out = Mat::Zero(rho.rows(), rho.cols());
  Mat active = std::move(rho);
  for (long round = 1; round <= budget; ++round) {
    Mat far = Mat::Zero(active.rows(), active.cols());
    for (WeightedPart& p : split_bins(active, bins, pruned)) {
      if (repair_within_tolerance(p.bin->value, target, inner_epsilon))
        out += p.density;
      else
        far += p.density;
    }
    if (far.real().trace() < kPrune) {
      *pruned += std::max(far.real().trace(), 0.0);
      return out;
    }
    active = q1 * far * q1 + q0 * far * q0;
  }
  return out + active;  // budget exhausted: the sampled procedure returns as-is
}

// Measure one family member on a bin-resolved part and repair each branch
// back toward the part's grid value.
Mat disturb_and_repair(const WeightedPart& part, const Pvm& member,
                       const std::vector<BinBasis>& bins, double inner_epsilon, double inner_eta,
                       double* pruned) {
  Mat out = Mat::Zero(part.density.rows(), part.density.cols());
  for (int y = 0; y < member.n_outcomes(); ++y) {
    const Mat& q = member.projector(y).matrix();
    Mat branch = q * part.density * q;
    const double mass = branch.real().trace();
    if (mass < kPrune) {
      *pruned += std::max(mass, 0.0);
      continue;
    }
    out += repair_channel(std::move(branch), part.bin->value, q, bins, inner_epsilon, inner_eta,
                          pruned);
  }
  return out;
}

}  // namespace

ForgetfulnessResult forgetfulness_distance(const ValueMeasurementFamily& family,
                                           const ProjectionFamily& projections,
                                           const QuantumState& state, const FloodingParams& fp,
                                           const ForgetfulnessOptions& opts) {
  const int dim = state.layout().total_dim();
  const std::uint64_t members = projections.member_count();

  ForgetfulnessResult res;
  const ValueMeasurement fine = family.at(fp.inner_epsilon, fp.inner_delta);
  const ValueMeasurement coarse = family.at(fp.epsilon, fp.delta);
  const std::uint64_t occupied = fine.occupied_bins().size();
  res.branch_count = members * static_cast<std::uint64_t>(projections.n_outcomes()) * occupied *
                     static_cast<std::uint64_t>(2 * fp.T + 2);

  const bool exact_ok = projections.enumerable() && members <= opts.max_members &&
                        res.branch_count <= opts.max_branches && fp.T <= opts.max_rounds &&
                        dim <= opts.max_dim;

  if (!exact_ok) {
    // Sampling fallback: estimate the member-averaged output states by
    // running the literal chain, equal allocation per planted member.
    res.exact = false;
    res.samples = opts.fallback_samples;
    require(projections.enumerable(), "forgetfulness sampling needs an enumerable family");
    SplitRng root(opts.fallback_seed);
    std::vector<std::vector<Mat>> runs(members);
    for (std::uint64_t p = 0; p < members; ++p) {
      const Pvm& planted = projections.member(p);
      for (long s = 0; s < opts.fallback_samples; ++s) {
        SplitRng rng = root.split(p * static_cast<std::uint64_t>(opts.fallback_samples) +
                                  static_cast<std::uint64_t>(s));
        ValestOutcome coarse_out = valest(coarse, state, rng);
        PrepareResult prep = prepare(family, projections, coarse_out.post, fp, rng);
        MeasureResult dist = measure_projective(prep.state, planted, rng);
        RepairPrimeResult rp = repair_prime(family, projections, planted, dist.outcome_index,
                                            dist.post, prep.value, fp, rng);
        runs[p].push_back(rp.state.density());
      }
    }
    auto ensemble_td = [&](const std::vector<std::vector<const Mat*>>& picks) {
      Mat avg = Mat::Zero(dim, dim);
      std::vector<Mat> means(members, Mat::Zero(dim, dim));
      for (std::uint64_t p = 0; p < members; ++p) {
        for (const Mat* m : picks[p]) means[p] += *m;
        means[p] /= static_cast<double>(picks[p].size());
        avg += means[p];
      }
      avg /= static_cast<double>(members);
      double td = 0.0;
      for (std::uint64_t p = 0; p < members; ++p)
        td += trace_distance(means[p], avg) / static_cast<double>(members);
      return td;
    };
    std::vector<std::vector<const Mat*>> point(members);
    for (std::uint64_t p = 0; p < members; ++p)
      for (const Mat& m : runs[p]) point[p].push_back(&m);
    res.distance = ensemble_td(point);

    SplitRng boot(opts.fallback_seed ^ 0x5eedb007ULL);
    const int b_reps = 200;
    std::vector<double> boots;
    for (int b = 0; b < b_reps; ++b) {
      SplitRng br = boot.split(static_cast<std::uint64_t>(b));
      std::vector<std::vector<const Mat*>> picks(members);
      for (std::uint64_t p = 0; p < members; ++p)
        for (long s = 0; s < opts.fallback_samples; ++s)
          picks[p].push_back(
              &runs[p][static_cast<std::size_t>(br.uniform_below(runs[p].size()))]);
      boots.push_back(ensemble_td(picks));
    }
    double mean = 0.0;
    for (double v : boots) mean += v;
    mean /= boots.size();
    double var = 0.0;
    for (double v : boots) var += (v - mean) * (v - mean);
    var /= std::max<std::size_t>(boots.size() - 1, 1);
    res.ci_halfwidth = 1.959963984540054 * std::sqrt(var);
    return res;
  }

  const std::vector<BinBasis> fine_bins = bin_bases(fine);
  const std::vector<BinBasis> coarse_bins = bin_bases(coarse);
  double pruned = 0.0;

  auto flood_round = [&](const Mat& rho) {
    Mat next = Mat::Zero(dim, dim);
    const double w = 1.0 / static_cast<double>(members);
    for (const WeightedPart& part : split_bins(rho, fine_bins, &pruned))
      for (std::uint64_t p = 0; p < members; ++p)
        next += w * disturb_and_repair(part, projections.member(p), fine_bins, fp.inner_epsilon,
                                       fp.inner_eta, &pruned);
    return next;
  };

  // Prefix: coarse measurement, then for each stopping round t <- [T] record
  // the fine-resolved state after t-1 flooding rounds, weight 1/T.
  Mat cur = dephase(state.density(), coarse_bins, &pruned);
  std::map<int, WeightedPart> snapshots;  // grid index -> accumulated part
  const double wt = 1.0 / static_cast<double>(fp.T);
  for (long t = 1; t <= fp.T; ++t) {
    const auto parts = split_bins(cur, fine_bins, &pruned);
    for (const WeightedPart& p : parts) {
      auto it = snapshots.find(p.bin->grid_index);
      if (it == snapshots.end())
        snapshots.emplace(p.bin->grid_index, WeightedPart{p.bin, wt * p.density});
      else
        it->second.density += wt * p.density;
    }
    if (t < fp.T) {
      Mat next = Mat::Zero(dim, dim);
      const double w = 1.0 / static_cast<double>(members);
      for (const WeightedPart& p : parts)
        for (std::uint64_t m = 0; m < members; ++m)
          next += w * disturb_and_repair(p, projections.member(m), fine_bins, fp.inner_epsilon,
                                         fp.inner_eta, &pruned);
      cur = std::move(next);
    }
  }

  // Suffix: disturb with the planted member and repair per snapshot bin; the
  // T-round flooding tail and closing dephase are bin-independent.
  std::vector<Mat> averaged(members, Mat::Zero(dim, dim));
  for (std::uint64_t p = 0; p < members; ++p) {
    Mat acc = Mat::Zero(dim, dim);
    for (const auto& [grid_index, part] : snapshots)
      acc += disturb_and_repair(part, projections.member(p), fine_bins, fp.inner_epsilon,
                                fp.inner_eta, &pruned);
    for (long i = 1; i <= fp.T; ++i) acc = flood_round(acc);
    averaged[p] = dephase(acc, fine_bins, &pruned);
  }

  Mat avg = Mat::Zero(dim, dim);
  for (const Mat& m : averaged) avg += m;
  avg /= static_cast<double>(members);
  // Both ensembles are classical-quantum with the member index diagonal, so
  // the trace norm splits blockwise into (1/P) sum_p TD(rho_p, rho_avg).
  double td = 0.0;
  for (const Mat& m : averaged) td += trace_distance(m, avg) / static_cast<double>(members);
  res.distance = td;
  res.pruned_mass = pruned;
  res.exact = true;
  return res;
}

}  // namespace parrep
