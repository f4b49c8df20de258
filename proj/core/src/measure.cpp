#include "parrep/measure.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace parrep {
namespace {

void require(bool cond, const std::string& what) {
  if (!cond) throw MeasureError(what);
}

constexpr double kSpectrumTol = 1e-8;

}  // namespace

// ---------------------------------------------------------------------------
// GameSpec

int GameSpec::response_dim() const {
  int d = 1;
  for (const auto& name : response_registers) d *= layout.dim_of(name);
  return d;
}

int GameSpec::response_of(int basis_index) const {
  int z = 0;
  for (const auto& name : response_registers) {
    const int reg = layout.index_of(name);
    z = z * layout.at(reg).dim + layout.digit(basis_index, reg);
  }
  return z;
}

bool GameSpec::deterministic() const { return randomness_count == 1 && response_dim() == 1; }

Mat success_operator(const GameSpec& game) {
  require(game.randomness_count >= 1 && game.randomness_count <= 4096,
          "randomness space must be enumerable (1..4096 coin strings)");
  require(static_cast<bool>(game.verdict), "game verdict is not set");
  const int d = game.layout.total_dim();
  const int rd = game.response_dim();

  Mat acc = Mat::Zero(d, d);
  Eigen::VectorXd acc_diag = Eigen::VectorXd::Zero(d);

  std::vector<int> response_of(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) response_of[static_cast<std::size_t>(i)] = game.response_of(i);

  for (int r = 0; r < game.randomness_count; ++r) {
    std::vector<bool> ok(static_cast<std::size_t>(rd));
    for (int z = 0; z < rd; ++z) ok[static_cast<std::size_t>(z)] = game.verdict(r, z);
    if (!game.adversary) {
      for (int i = 0; i < d; ++i)
        if (ok[static_cast<std::size_t>(response_of[static_cast<std::size_t>(i)])])
          acc_diag(i) += 1.0;
      continue;
    }
    const Unitary a = game.adversary(r);
    require(a.layout() == game.layout, "adversary unitary layout mismatch");
    if (a.is_permutation()) {
      // (A^dag P A) is diagonal: entry i picks up P at A|i> = perm(i).
      const auto& perm = a.perm();
      for (int i = 0; i < d; ++i) {
        const int img = perm[static_cast<std::size_t>(i)];
        if (ok[static_cast<std::size_t>(response_of[static_cast<std::size_t>(img)])])
          acc_diag(i) += 1.0;
      }
      continue;
    }
    Mat scaled = a.matrix();
    for (int i = 0; i < d; ++i) {
      if (!ok[static_cast<std::size_t>(response_of[static_cast<std::size_t>(i)])]) scaled.row(i).setZero();
    }
    acc += a.matrix().adjoint() * scaled;
  }

  Mat m = std::move(acc);
  for (int i = 0; i < d; ++i) m(i, i) += acc_diag(i);
  m /= static_cast<double>(game.randomness_count);
  // Symmetrise away accumulation noise, then check the spectrum contract.
  m = 0.5 * (m + Mat(m.adjoint()));
  Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
  require(es.eigenvalues().minCoeff() >= -kSpectrumTol &&
              es.eigenvalues().maxCoeff() <= 1.0 + kSpectrumTol,
          "success operator spectrum escapes [0,1]");
  return m;
}

// ---------------------------------------------------------------------------
// ValueGrid

ValueGrid ValueGrid::make(double epsilon) {
  require(epsilon > 0.0 && epsilon <= 1.0, "grid epsilon must lie in (0,1]");
  require(1.0 / epsilon < 2.0e9, "grid epsilon too fine for an indexable grid");
  ValueGrid g;
  g.requested_epsilon = epsilon;
  g.n_points = static_cast<int>(std::ceil(1.0 / epsilon - 1e-12)) + 1;
  g.spacing = 1.0 / static_cast<double>(g.n_points - 1);
  return g;
}

int ValueGrid::bin_of(double x) const {
  require(x >= -kSpectrumTol && x <= 1.0 + kSpectrumTol, "value outside [0,1]");
  x = std::clamp(x, 0.0, 1.0);
  const int j = static_cast<int>(std::lround(x / spacing));
  return std::clamp(j, 0, n_points - 1);
}

// ---------------------------------------------------------------------------
// ValueMeasurementFamily

struct ValueMeasurementFamily::Impl {
  RegisterLayout layout;
  Mat op;
  Eigen::VectorXd eigenvalues;  // clamped to [0,1]
  Mat eigenvectors;
  std::optional<GameSpec> game;
};

ValueMeasurementFamily ValueMeasurementFamily::from_game(GameSpec game) {
  Mat m = success_operator(game);
  ValueMeasurementFamily f = from_operator(game.layout, std::move(m));
  const_cast<Impl*>(f.impl_.get())->game = std::move(game);
  return f;
}

ValueMeasurementFamily ValueMeasurementFamily::from_operator(RegisterLayout layout, Mat op) {
  require(op.rows() == layout.total_dim() && op.cols() == layout.total_dim(),
          "success operator dimension mismatch");
  require((op - op.adjoint()).cwiseAbs().maxCoeff() <= kSpectrumTol,
          "success operator is not Hermitian");
  auto impl = std::make_shared<Impl>();
  impl->layout = std::move(layout);
  impl->op = std::move(op);
  Eigen::SelfAdjointEigenSolver<Mat> es(impl->op);
  require(es.info() == Eigen::Success, "eigendecomposition failed");
  Eigen::VectorXd vals = es.eigenvalues();
  require(vals.minCoeff() >= -kSpectrumTol && vals.maxCoeff() <= 1.0 + kSpectrumTol,
          "success operator spectrum escapes [0,1]");
  for (int i = 0; i < vals.size(); ++i) vals(i) = std::clamp(vals(i), 0.0, 1.0);
  impl->eigenvalues = std::move(vals);
  impl->eigenvectors = es.eigenvectors();
  ValueMeasurementFamily f;
  f.impl_ = std::move(impl);
  return f;
}

const RegisterLayout& ValueMeasurementFamily::layout() const { return impl_->layout; }
const Mat& ValueMeasurementFamily::op() const { return impl_->op; }
const Eigen::VectorXd& ValueMeasurementFamily::eigenvalues() const { return impl_->eigenvalues; }
const Mat& ValueMeasurementFamily::eigenvectors() const { return impl_->eigenvectors; }
const std::optional<GameSpec>& ValueMeasurementFamily::game() const { return impl_->game; }
bool ValueMeasurementFamily::deterministic() const { return impl_->game && impl_->game->deterministic(); }

double ValueMeasurementFamily::exact_value(const QuantumState& state) const {
  require(state.layout() == impl_->layout, "exact_value: layout mismatch");
  if (state.is_pure()) {
    const Vec& psi = state.amplitudes();
    return (psi.adjoint() * impl_->op * psi).real()(0, 0);
  }
  return (impl_->op * state.density_ref()).trace().real();
}

ValueMeasurement ValueMeasurementFamily::at(double epsilon, double delta) const {
  require(impl_ != nullptr, "empty family");
  require(delta >= 0.0 && delta < 1.0, "delta must lie in [0,1)");
  return ValueMeasurement(*this, ValueGrid::make(epsilon), delta);
}

// ---------------------------------------------------------------------------
// ValueMeasurement

ValueMeasurement::ValueMeasurement(ValueMeasurementFamily family, ValueGrid grid, double delta)
    : family_(std::move(family)), grid_(grid), delta_(delta) {
  std::map<int, std::vector<int>> by_bin;
  const Eigen::VectorXd& vals = family_.eigenvalues();
  for (int i = 0; i < vals.size(); ++i) by_bin[grid_.bin_of(vals(i))].push_back(i);
  bins_.reserve(by_bin.size());
  for (auto& [bin, idxs] : by_bin) bins_.push_back(SpectralBin{bin, std::move(idxs)});
}

std::vector<ValueMeasurement::BinWeight> ValueMeasurement::outcome_distribution(
    const QuantumState& state) const {
  require(state.layout() == family_.layout(), "outcome_distribution: layout mismatch");
  const Mat& v = family_.eigenvectors();
  const Eigen::VectorXd& vals = family_.eigenvalues();
  std::vector<double> eig_weights(static_cast<std::size_t>(vals.size()), 0.0);
  if (state.is_pure()) {
    const Vec coeff = v.adjoint() * state.amplitudes();
    for (int i = 0; i < coeff.size(); ++i) eig_weights[static_cast<std::size_t>(i)] = std::norm(coeff(i));
  } else {
    const Mat rot = v.adjoint() * state.density_ref() * v;
    for (int i = 0; i < rot.rows(); ++i)
      eig_weights[static_cast<std::size_t>(i)] = std::max(rot(i, i).real(), 0.0);
  }
  std::vector<BinWeight> out;
  out.reserve(bins_.size());
  for (const auto& bin : bins_) {
    double p = 0.0, mean = 0.0;
    for (int i : bin.eigen_indices) {
      p += eig_weights[static_cast<std::size_t>(i)];
      mean += eig_weights[static_cast<std::size_t>(i)] * vals(i);
    }
    out.push_back(BinWeight{bin.grid_index, grid_.value(bin.grid_index), p, p > 0.0 ? mean / p : 0.0});
  }
  return out;
}

QuantumState ValueMeasurement::project_onto_bin(const QuantumState& state, int occupied_index,
                                                double* probability_out) const {
  const auto& bin = bins_.at(static_cast<std::size_t>(occupied_index));
  const Mat& v = family_.eigenvectors();
  if (state.is_pure()) {
    const Vec coeff = v.adjoint() * state.amplitudes();
    Vec kept = Vec::Zero(coeff.size());
    for (int i : bin.eigen_indices) kept(i) = coeff(i);
    const double p = kept.squaredNorm();
    if (probability_out) *probability_out = p;
    require(p > 1e-300, "bin projection annihilates the state");
    kept /= std::sqrt(p);
    return QuantumState::trusted_pure(state.layout(), v * kept);
  }
  const Mat rot = v.adjoint() * state.density_ref() * v;
  Mat kept = Mat::Zero(rot.rows(), rot.cols());
  for (int i : bin.eigen_indices)
    for (int j : bin.eigen_indices) kept(i, j) = rot(i, j);
  const double p = kept.trace().real();
  if (probability_out) *probability_out = p;
  require(p > 1e-300, "bin projection annihilates the state");
  kept /= p;
  return QuantumState::trusted_mixed(state.layout(), v * kept * v.adjoint());
}

ValestOutcome ValueMeasurement::sample(const QuantumState& state, SplitRng& rng) const {
  const auto dist = outcome_distribution(state);
  std::vector<double> probs(dist.size());
  for (std::size_t i = 0; i < dist.size(); ++i) probs[i] = dist[i].probability;
  const std::size_t pick = rng.sample_discrete(probs);
  double p = 0.0;
  QuantumState post = project_onto_bin(state, static_cast<int>(pick), &p);
  return ValestOutcome{dist[pick].value, dist[pick].grid_index, dist[pick].probability, std::move(post)};
}

ValestOutcome valest(const ValueMeasurement& m, const QuantumState& state, SplitRng& rng) {
  return m.sample(state, rng);
}

double valest_exact(const ValueMeasurementFamily& family, const QuantumState& state) {
  return family.exact_value(state);
}

Pvm grid_pvm(const ValueMeasurement& m) {
  const RegisterLayout& layout = m.family().layout();
  const Mat& v = m.family().eigenvectors();
  const int n = m.n_outcomes();
  std::vector<Projector> els;
  els.reserve(static_cast<std::size_t>(n));
  std::vector<int> labels(static_cast<std::size_t>(n));
  std::size_t next_occupied = 0;
  const auto& bins = m.occupied_bins();
  for (int g = 0; g < n; ++g) {
    labels[static_cast<std::size_t>(g)] = g;
    if (next_occupied < bins.size() && bins[next_occupied].grid_index == g) {
      Mat p = Mat::Zero(v.rows(), v.rows());
      for (int idx : bins[next_occupied].eigen_indices) {
        p += v.col(idx) * v.col(idx).adjoint();
      }
      els.push_back(Projector(layout, std::move(p)));
      ++next_occupied;
    } else {
      els.push_back(Projector::zero(layout));
    }
  }
  return Pvm::trusted(layout, std::move(els), std::move(labels));
}

// ---------------------------------------------------------------------------
// repair

bool repair_within_tolerance(double value, double target, double epsilon) {
  return std::abs(value - target) < 2.0 * epsilon - 1e-12;
}

long repair_budget(double eta) {
  if (eta <= 0.0) throw MeasureError("repair eta must be positive");
  return static_cast<long>(std::ceil(4.0 / eta - 1e-12));
}

RepairResult repair(const ValueMeasurement& m, const Projector& pi_y, const QuantumState& sigma,
                    double target, double eta, SplitRng& rng) {
  require(eta > 0.0, "repair eta must be positive");
  require(pi_y.layout() == sigma.layout(), "repair: projector layout mismatch");
  const long budget = repair_budget(eta);
  const Pvm binary = Pvm::binary(pi_y);

  RepairResult res{sigma, 0.0, 0, true, 0, 0};
  QuantumState current = sigma;
  for (long round = 1; round <= budget; ++round) {
    ValestOutcome est = m.sample(current, rng);
    ++res.m_calls;
    res.final_value = est.value;
    res.alternations = static_cast<int>(round);
    if (repair_within_tolerance(est.value, target, m.epsilon())) {
      res.state = std::move(est.post);
      res.exhausted = false;
      return res;
    }
    current = std::move(est.post);
    MeasureResult b = measure_projective(current, binary, rng);
    ++res.p_calls;
    current = std::move(b.post);
  }
  res.state = std::move(current);
  res.exhausted = true;
  return res;
}

RepairResult repair(const ValueMeasurement& m, const Pvm& pi, int outcome_index,
                    const QuantumState& sigma, double target, double eta, SplitRng& rng) {
  return repair(m, pi.projector(outcome_index), sigma, target, eta, rng);
}

}  // namespace parrep
