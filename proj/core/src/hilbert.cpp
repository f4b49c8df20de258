#include "parrep/hilbert.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <utility>

namespace parrep {
namespace {

void require(bool cond, const std::string& what) {
  if (!cond) throw HilbertError(what);
}

bool approx_hermitian(const Mat& m, double tol) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace

// ---------------------------------------------------------------------------
// RegisterLayout

RegisterLayout::RegisterLayout(std::initializer_list<Register> regs) : regs_(regs) { init(); }
RegisterLayout::RegisterLayout(std::vector<Register> regs) : regs_(std::move(regs)) { init(); }

void RegisterLayout::init() {
  std::set<std::string> names;
  long long total = 1;
  for (const auto& r : regs_) {
    require(r.dim >= 1, "register dimension must be >= 1: " + r.name);
    require(names.insert(r.name).second, "duplicate register name: " + r.name);
    total *= r.dim;
    require(total <= (1LL << 20), "layout dimension overflow");
  }
  total_ = static_cast<int>(total);
  strides_.assign(regs_.size(), 1);
  for (int i = static_cast<int>(regs_.size()) - 2; i >= 0; --i) {
    strides_[static_cast<std::size_t>(i)] =
        strides_[static_cast<std::size_t>(i + 1)] * regs_[static_cast<std::size_t>(i + 1)].dim;
  }
}

bool RegisterLayout::has(const std::string& name) const {
  for (const auto& r : regs_)
    if (r.name == name) return true;
  return false;
}

int RegisterLayout::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < regs_.size(); ++i)
    if (regs_[i].name == name) return static_cast<int>(i);
  throw HilbertError("no register named " + name);
}

int RegisterLayout::dim_of(const std::string& name) const {
  return regs_[static_cast<std::size_t>(index_of(name))].dim;
}

int RegisterLayout::qubit_count() const {
  int q = 0;
  while ((1 << q) < total_) ++q;
  return q;
}

std::vector<int> RegisterLayout::decompose(int basis_index) const {
  std::vector<int> digits(regs_.size());
  for (std::size_t i = 0; i < regs_.size(); ++i) {
    digits[i] = (basis_index / strides_[i]) % regs_[i].dim;
  }
  return digits;
}

int RegisterLayout::compose(const std::vector<int>& digits) const {
  require(digits.size() == regs_.size(), "compose: digit count mismatch");
  int idx = 0;
  for (std::size_t i = 0; i < regs_.size(); ++i) {
    require(digits[i] >= 0 && digits[i] < regs_[i].dim, "compose: digit out of range");
    idx += digits[i] * strides_[i];
  }
  return idx;
}

int RegisterLayout::digit(int basis_index, int reg_index) const {
  const auto i = static_cast<std::size_t>(reg_index);
  return (basis_index / strides_[i]) % regs_[i].dim;
}

bool RegisterLayout::operator==(const RegisterLayout& other) const {
  if (regs_.size() != other.regs_.size()) return false;
  for (std::size_t i = 0; i < regs_.size(); ++i) {
    if (regs_[i].name != other.regs_[i].name || regs_[i].dim != other.regs_[i].dim) return false;
  }
  return true;
}

RegisterLayout concat(const RegisterLayout& a, const RegisterLayout& b) {
  std::vector<Register> regs = a.registers();
  regs.insert(regs.end(), b.registers().begin(), b.registers().end());
  return RegisterLayout(std::move(regs));
}

// ---------------------------------------------------------------------------
// QuantumState

QuantumState QuantumState::pure(RegisterLayout layout, Vec amplitudes) {
  require(amplitudes.size() == layout.total_dim(), "pure state dimension mismatch");
  QuantumState s(std::move(layout), std::move(amplitudes), Mat(), true);
  s.validate();
  return s;
}

QuantumState QuantumState::mixed(RegisterLayout layout, Mat density) {
  require(density.rows() == layout.total_dim() && density.cols() == layout.total_dim(),
          "density dimension mismatch");
  QuantumState s(std::move(layout), Vec(), std::move(density), false);
  s.validate();
  return s;
}

QuantumState QuantumState::trusted_pure(RegisterLayout layout, Vec amplitudes) {
  return QuantumState(std::move(layout), std::move(amplitudes), Mat(), true);
}

QuantumState QuantumState::trusted_mixed(RegisterLayout layout, Mat density) {
  return QuantumState(std::move(layout), Vec(), std::move(density), false);
}

QuantumState QuantumState::basis(RegisterLayout layout, int basis_index) {
  require(basis_index >= 0 && basis_index < layout.total_dim(), "basis index out of range");
  Vec v = Vec::Zero(layout.total_dim());
  v(basis_index) = 1.0;
  return trusted_pure(std::move(layout), std::move(v));
}

QuantumState QuantumState::basis(RegisterLayout layout, const std::vector<int>& digits) {
  const int idx = layout.compose(digits);
  return basis(std::move(layout), idx);
}

const Vec& QuantumState::amplitudes() const {
  require(pure_, "amplitudes() on a mixed state");
  return amp_;
}

Mat QuantumState::density() const {
  if (pure_) return amp_ * amp_.adjoint();
  return rho_;
}

const Mat& QuantumState::density_ref() const {
  require(!pure_, "density_ref() on a pure state");
  return rho_;
}

double QuantumState::fidelity_overlap(const QuantumState& other) const {
  require(pure_ && other.pure_, "fidelity_overlap needs two pure states");
  require(layout_ == other.layout_, "fidelity_overlap: layout mismatch");
  return std::norm(amp_.dot(other.amp_));
}

void QuantumState::validate() const {
  if (pure_) {
    require(std::abs(amp_.norm() - 1.0) <= kAtol, "pure state is not normalised");
    return;
  }
  require(approx_hermitian(rho_, kAtol), "density operator is not Hermitian");
  require(std::abs(rho_.trace().real() - 1.0) <= kAtol && std::abs(rho_.trace().imag()) <= kAtol,
          "density operator trace is not 1");
  Eigen::SelfAdjointEigenSolver<Mat> es(rho_, Eigen::EigenvaluesOnly);
  require(es.eigenvalues().minCoeff() >= -1e-10, "density operator has a negative eigenvalue");
}

// ---------------------------------------------------------------------------
// Unitary

Unitary::Unitary(RegisterLayout layout, Mat matrix) : layout_(std::move(layout)), mat_(std::move(matrix)) {
  require(mat_.rows() == layout_.total_dim() && mat_.cols() == layout_.total_dim(),
          "unitary dimension mismatch");
  const Mat gram = mat_.adjoint() * mat_;
  require((gram - Mat::Identity(mat_.rows(), mat_.cols())).cwiseAbs().maxCoeff() <= kAtol,
          "matrix is not unitary");
  detect_permutation();
}

Unitary Unitary::identity(RegisterLayout layout) {
  const int d = layout.total_dim();
  Unitary u;
  u.layout_ = std::move(layout);
  u.mat_ = Mat::Identity(d, d);
  std::vector<int> perm(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) perm[static_cast<std::size_t>(i)] = i;
  u.perm_ = std::move(perm);
  u.phases_.assign(static_cast<std::size_t>(d), cdouble(1.0, 0.0));
  return u;
}

Unitary Unitary::permutation(RegisterLayout layout, const std::vector<int>& perm,
                             const std::vector<cdouble>& phases) {
  const int d = layout.total_dim();
  require(static_cast<int>(perm.size()) == d, "permutation size mismatch");
  std::vector<bool> hit(static_cast<std::size_t>(d), false);
  for (int v : perm) {
    require(v >= 0 && v < d && !hit[static_cast<std::size_t>(v)], "not a permutation");
    hit[static_cast<std::size_t>(v)] = true;
  }
  std::vector<cdouble> ph = phases;
  if (ph.empty()) ph.assign(static_cast<std::size_t>(d), cdouble(1.0, 0.0));
  require(static_cast<int>(ph.size()) == d, "phase vector size mismatch");
  for (const cdouble& p : ph) require(std::abs(std::abs(p) - 1.0) <= kAtol, "phase not unimodular");
  Mat m = Mat::Zero(d, d);
  for (int j = 0; j < d; ++j) m(perm[static_cast<std::size_t>(j)], j) = ph[static_cast<std::size_t>(j)];
  Unitary u;
  u.layout_ = std::move(layout);
  u.mat_ = std::move(m);
  u.perm_ = perm;
  u.phases_ = std::move(ph);
  return u;
}

void Unitary::detect_permutation() {
  const int d = static_cast<int>(mat_.rows());
  std::vector<int> perm(static_cast<std::size_t>(d), -1);
  std::vector<cdouble> phases(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) {
    int row = -1;
    for (int i = 0; i < d; ++i) {
      const double a = std::abs(mat_(i, j));
      if (a > kAtol) {
        if (row >= 0 || std::abs(a - 1.0) > kAtol) return;  // not a permutation column
        row = i;
      }
    }
    if (row < 0) return;
    perm[static_cast<std::size_t>(j)] = row;
    phases[static_cast<std::size_t>(j)] = mat_(row, j);
  }
  perm_ = std::move(perm);
  phases_ = std::move(phases);
}

Unitary Unitary::adjoint() const {
  Unitary u;
  u.layout_ = layout_;
  u.mat_ = mat_.adjoint();
  if (perm_) {
    const int d = static_cast<int>(mat_.rows());
    std::vector<int> inv(static_cast<std::size_t>(d));
    std::vector<cdouble> ph(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) {
      const int i = (*perm_)[static_cast<std::size_t>(j)];
      inv[static_cast<std::size_t>(i)] = j;
      ph[static_cast<std::size_t>(i)] = std::conj(phases_[static_cast<std::size_t>(j)]);
    }
    u.perm_ = std::move(inv);
    u.phases_ = std::move(ph);
  }
  return u;
}

// ---------------------------------------------------------------------------
// Projector

Projector::Projector(RegisterLayout layout, Mat matrix)
    : layout_(std::move(layout)), mat_(std::move(matrix)) {
  require(mat_.rows() == layout_.total_dim() && mat_.cols() == layout_.total_dim(),
          "projector dimension mismatch");
  require(approx_hermitian(mat_, kAtol), "projector is not Hermitian");
  require((mat_ * mat_ - mat_).cwiseAbs().maxCoeff() <= kAtol, "projector is not idempotent");
  // Detect diagonal 0/1 structure.
  const int d = static_cast<int>(mat_.rows());
  bool diag = true;
  std::vector<bool> mask(static_cast<std::size_t>(d), false);
  for (int i = 0; i < d && diag; ++i) {
    for (int j = 0; j < d; ++j) {
      const double a = std::abs(mat_(i, j));
      if (i == j) {
        if (a <= kAtol) continue;
        if (std::abs(a - 1.0) <= kAtol) {
          mask[static_cast<std::size_t>(i)] = true;
        } else {
          diag = false;
          break;
        }
      } else if (a > kAtol) {
        diag = false;
        break;
      }
    }
  }
  if (diag) diag_mask_ = std::move(mask);
}

Projector Projector::zero(RegisterLayout layout) {
  const int d = layout.total_dim();
  Projector p;
  p.layout_ = std::move(layout);
  p.mat_ = Mat::Zero(d, d);
  p.diag_mask_ = std::vector<bool>(static_cast<std::size_t>(d), false);
  return p;
}

Projector Projector::identity(RegisterLayout layout) {
  const int d = layout.total_dim();
  Projector p;
  p.layout_ = std::move(layout);
  p.mat_ = Mat::Identity(d, d);
  p.diag_mask_ = std::vector<bool>(static_cast<std::size_t>(d), true);
  return p;
}

Projector Projector::onto_vector(RegisterLayout layout, const Vec& v) {
  require(v.size() == layout.total_dim(), "projector vector dimension mismatch");
  const double n = v.norm();
  require(n > kAtol, "cannot project onto the zero vector");
  const Vec u = v / n;
  Projector p;
  p.layout_ = std::move(layout);
  p.mat_ = u * u.adjoint();
  return p;
}

Projector Projector::diagonal(RegisterLayout layout, const std::vector<bool>& mask) {
  const int d = layout.total_dim();
  require(static_cast<int>(mask.size()) == d, "diagonal mask size mismatch");
  Mat m = Mat::Zero(d, d);
  for (int i = 0; i < d; ++i)
    if (mask[static_cast<std::size_t>(i)]) m(i, i) = 1.0;
  Projector p;
  p.layout_ = std::move(layout);
  p.mat_ = std::move(m);
  p.diag_mask_ = mask;
  return p;
}

Projector Projector::complement() const {
  Projector p;
  p.layout_ = layout_;
  p.mat_ = Mat::Identity(mat_.rows(), mat_.cols()) - mat_;
  if (diag_mask_) {
    std::vector<bool> mask = *diag_mask_;
    mask.flip();
    p.diag_mask_ = std::move(mask);
  }
  return p;
}

int Projector::rank() const { return static_cast<int>(std::lround(mat_.trace().real())); }

// ---------------------------------------------------------------------------
// Pvm

Pvm::Pvm(RegisterLayout layout, std::vector<Projector> elements, std::vector<int> labels)
    : layout_(std::move(layout)), elements_(std::move(elements)), labels_(std::move(labels)) {
  require(!elements_.empty(), "empty PVM");
  const int d = layout_.total_dim();
  Mat sum = Mat::Zero(d, d);
  for (const auto& p : elements_) {
    require(p.layout() == layout_, "PVM element layout mismatch");
    sum += p.matrix();
  }
  require((sum - Mat::Identity(d, d)).cwiseAbs().maxCoeff() <= kAtol, "PVM does not sum to identity");
  for (std::size_t a = 0; a < elements_.size(); ++a) {
    for (std::size_t b = a + 1; b < elements_.size(); ++b) {
      require((elements_[a].matrix() * elements_[b].matrix()).cwiseAbs().maxCoeff() <= kAtol,
              "PVM elements are not orthogonal");
    }
  }
  if (labels_.empty()) {
    labels_.resize(elements_.size());
    for (std::size_t i = 0; i < elements_.size(); ++i) labels_[i] = static_cast<int>(i);
  }
  require(labels_.size() == elements_.size(), "PVM label count mismatch");
}

Pvm Pvm::trusted(RegisterLayout layout, std::vector<Projector> elements, std::vector<int> labels) {
  Pvm p;
  p.layout_ = std::move(layout);
  p.elements_ = std::move(elements);
  p.labels_ = std::move(labels);
  if (p.labels_.empty()) {
    p.labels_.resize(p.elements_.size());
    for (std::size_t i = 0; i < p.elements_.size(); ++i) p.labels_[i] = static_cast<int>(i);
  }
  return p;
}

Pvm Pvm::binary(const Projector& p1) {
  std::vector<Projector> els;
  els.push_back(p1.complement());
  els.push_back(p1);
  return Pvm::trusted(p1.layout(), std::move(els), {0, 1});
}

Pvm Pvm::computational(const RegisterLayout& layout, const std::string& reg_name) {
  const int reg = layout.index_of(reg_name);
  const int rd = layout.at(reg).dim;
  std::vector<Projector> els;
  els.reserve(static_cast<std::size_t>(rd));
  for (int v = 0; v < rd; ++v) {
    els.push_back(Projector::from_predicate(
        layout, [&](int idx) { return layout.digit(idx, reg) == v; }));
  }
  std::vector<int> labels(static_cast<std::size_t>(rd));
  for (int v = 0; v < rd; ++v) labels[static_cast<std::size_t>(v)] = v;
  return Pvm::trusted(layout, std::move(els), std::move(labels));
}

// ---------------------------------------------------------------------------
// tensor / apply / measure / trace

QuantumState tensor(const QuantumState& a, const QuantumState& b) {
  RegisterLayout layout = concat(a.layout(), b.layout());
  if (a.is_pure() && b.is_pure()) {
    const Vec& va = a.amplitudes();
    const Vec& vb = b.amplitudes();
    Vec out(va.size() * vb.size());
    for (int i = 0; i < va.size(); ++i)
      out.segment(i * vb.size(), vb.size()) = va(i) * vb;
    return QuantumState::trusted_pure(std::move(layout), std::move(out));
  }
  const Mat ra = a.density();
  const Mat rb = b.density();
  Mat out(ra.rows() * rb.rows(), ra.cols() * rb.cols());
  for (int i = 0; i < ra.rows(); ++i)
    for (int j = 0; j < ra.cols(); ++j)
      out.block(i * rb.rows(), j * rb.cols(), rb.rows(), rb.cols()) = ra(i, j) * rb;
  return QuantumState::trusted_mixed(std::move(layout), std::move(out));
}

Unitary tensor(const Unitary& a, const Unitary& b) {
  RegisterLayout layout = concat(a.layout(), b.layout());
  const Mat& ma = a.matrix();
  const Mat& mb = b.matrix();
  Mat out(ma.rows() * mb.rows(), ma.cols() * mb.cols());
  for (int i = 0; i < ma.rows(); ++i)
    for (int j = 0; j < ma.cols(); ++j)
      out.block(i * mb.rows(), j * mb.cols(), mb.rows(), mb.cols()) = ma(i, j) * mb;
  return Unitary(std::move(layout), std::move(out));
}

namespace {

// Gather/scatter plan for applying an operator on a subset of registers.
struct LiftPlan {
  int block_dim = 1;                 // product of target dims
  std::vector<int> offsets;          // basis offset of each target digit tuple
  std::vector<int> rest_bases;       // base index of each non-target configuration
};

LiftPlan make_plan(const RegisterLayout& layout, const std::vector<int>& target_regs) {
  LiftPlan plan;
  std::vector<int> tdims, tstrides;
  std::vector<bool> is_target(static_cast<std::size_t>(layout.size()), false);
  for (int r : target_regs) {
    is_target[static_cast<std::size_t>(r)] = true;
    tdims.push_back(layout.at(r).dim);
    tstrides.push_back(layout.stride(r));
    plan.block_dim *= layout.at(r).dim;
  }
  plan.offsets.resize(static_cast<std::size_t>(plan.block_dim));
  for (int t = 0; t < plan.block_dim; ++t) {
    int rem = t, off = 0;
    for (int a = static_cast<int>(tdims.size()) - 1; a >= 0; --a) {
      off += (rem % tdims[static_cast<std::size_t>(a)]) * tstrides[static_cast<std::size_t>(a)];
      rem /= tdims[static_cast<std::size_t>(a)];
    }
    plan.offsets[static_cast<std::size_t>(t)] = off;
  }
  const int total = layout.total_dim();
  plan.rest_bases.reserve(static_cast<std::size_t>(total / plan.block_dim));
  for (int idx = 0; idx < total; ++idx) {
    bool base = true;
    for (std::size_t r = 0; r < is_target.size() && base; ++r) {
      if (is_target[r] && layout.digit(idx, static_cast<int>(r)) != 0) base = false;
    }
    if (base) plan.rest_bases.push_back(idx);
  }
  return plan;
}

void apply_on_vector(Vec& v, const Mat& u, const LiftPlan& plan) {
  Vec scratch(plan.block_dim);
  for (int base : plan.rest_bases) {
    for (int t = 0; t < plan.block_dim; ++t)
      scratch(t) = v(base + plan.offsets[static_cast<std::size_t>(t)]);
    const Vec out = u * scratch;
    for (int t = 0; t < plan.block_dim; ++t)
      v(base + plan.offsets[static_cast<std::size_t>(t)]) = out(t);
  }
}

}  // namespace

QuantumState apply_unitary(const QuantumState& state, const Unitary& u,
                           const std::vector<std::string>& targets) {
  const RegisterLayout& layout = state.layout();
  std::vector<int> target_regs;
  target_regs.reserve(targets.size());
  for (const auto& name : targets) target_regs.push_back(layout.index_of(name));
  {
    std::set<int> uniq(target_regs.begin(), target_regs.end());
    require(uniq.size() == target_regs.size(), "apply_unitary: duplicate target register");
  }
  int expect = 1;
  for (int r : target_regs) expect *= layout.at(r).dim;
  require(expect == u.dim(), "apply_unitary: unitary does not match target dims");

  const LiftPlan plan = make_plan(layout, target_regs);
  if (state.is_pure()) {
    Vec v = state.amplitudes();
    apply_on_vector(v, u.matrix(), plan);
    return QuantumState::trusted_pure(layout, std::move(v));
  }
  Mat rho = state.density_ref();
  // rows: rho <- (U x I) rho
  for (int c = 0; c < rho.cols(); ++c) {
    Vec col = rho.col(c);
    apply_on_vector(col, u.matrix(), plan);
    rho.col(c) = col;
  }
  // columns: rho <- rho (U x I)^dag
  const Mat uc = u.matrix().conjugate();
  for (int r = 0; r < rho.rows(); ++r) {
    Vec row = rho.row(r).transpose();
    apply_on_vector(row, uc, plan);
    rho.row(r) = row.transpose();
  }
  return QuantumState::trusted_mixed(layout, std::move(rho));
}

QuantumState apply_unitary(const QuantumState& state, const Unitary& u) {
  require(u.layout() == state.layout(), "apply_unitary: layout mismatch");
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(state.layout().size()));
  for (const auto& r : state.layout().registers()) names.push_back(r.name);
  return apply_unitary(state, u, names);
}

MeasureResult measure_projective(const QuantumState& state, const Pvm& pvm, SplitRng& rng) {
  require(pvm.layout() == state.layout(), "measure_projective: layout mismatch");
  const int n = pvm.n_outcomes();
  std::vector<double> probs(static_cast<std::size_t>(n), 0.0);
  if (state.is_pure()) {
    const Vec& psi = state.amplitudes();
    for (int o = 0; o < n; ++o) {
      const Vec proj = pvm.projector(o).matrix() * psi;
      probs[static_cast<std::size_t>(o)] = proj.squaredNorm();
    }
  } else {
    const Mat& rho = state.density_ref();
    for (int o = 0; o < n; ++o) {
      probs[static_cast<std::size_t>(o)] = (pvm.projector(o).matrix() * rho).trace().real();
    }
  }
  double total = 0.0;
  for (double p : probs) total += std::max(p, 0.0);
  require(total >= 1e-12, "measure_projective: state is annihilated by every outcome");
  for (double& p : probs) p = std::max(p, 0.0);
  const std::size_t o = rng.sample_discrete(probs);
  MeasureResult res{static_cast<int>(o), pvm.label(static_cast<int>(o)),
                    probs[o] / total, QuantumState::basis(state.layout(), 0)};
  const Mat& pm = pvm.projector(static_cast<int>(o)).matrix();
  if (state.is_pure()) {
    Vec post = pm * state.amplitudes();
    post /= post.norm();
    res.post = QuantumState::trusted_pure(state.layout(), std::move(post));
  } else {
    Mat post = pm * state.density_ref() * pm;
    post /= post.trace().real();
    res.post = QuantumState::trusted_mixed(state.layout(), std::move(post));
  }
  return res;
}

MeasureResult measure_register(const QuantumState& state, const std::string& reg_name, SplitRng& rng) {
  const Pvm pvm = Pvm::computational(state.layout(), reg_name);
  return measure_projective(state, pvm, rng);
}

QuantumState partial_trace(const QuantumState& state, const std::vector<std::string>& traced_out) {
  const RegisterLayout& layout = state.layout();
  std::vector<bool> drop(static_cast<std::size_t>(layout.size()), false);
  for (const auto& name : traced_out) drop[static_cast<std::size_t>(layout.index_of(name))] = true;
  std::vector<Register> kept;
  for (int i = 0; i < layout.size(); ++i)
    if (!drop[static_cast<std::size_t>(i)]) kept.push_back(layout.at(i));
  require(!kept.empty(), "partial_trace would remove every register");
  RegisterLayout out_layout(kept);

  const Mat rho = state.density();
  Mat out = Mat::Zero(out_layout.total_dim(), out_layout.total_dim());
  const int total = layout.total_dim();
  // Map each full index to (kept index, dropped index).
  std::vector<int> kept_of(static_cast<std::size_t>(total)), drop_of(static_cast<std::size_t>(total));
  {
    std::vector<int> kept_digits;
    for (int idx = 0; idx < total; ++idx) {
      kept_digits.clear();
      int d_idx = 0;
      for (int i = 0; i < layout.size(); ++i) {
        const int dig = layout.digit(idx, i);
        if (drop[static_cast<std::size_t>(i)]) {
          d_idx = d_idx * layout.at(i).dim + dig;
        } else {
          kept_digits.push_back(dig);
        }
      }
      kept_of[static_cast<std::size_t>(idx)] = out_layout.compose(kept_digits);
      drop_of[static_cast<std::size_t>(idx)] = d_idx;
    }
  }
  for (int a = 0; a < total; ++a) {
    for (int b = 0; b < total; ++b) {
      if (drop_of[static_cast<std::size_t>(a)] != drop_of[static_cast<std::size_t>(b)]) continue;
      out(kept_of[static_cast<std::size_t>(a)], kept_of[static_cast<std::size_t>(b)]) += rho(a, b);
    }
  }
  return QuantumState::trusted_mixed(std::move(out_layout), std::move(out));
}

double trace_distance(const Mat& a, const Mat& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "trace_distance: dimension mismatch");
  Eigen::SelfAdjointEigenSolver<Mat> es(a - b, Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

double trace_distance(const QuantumState& a, const QuantumState& b) {
  require(a.layout() == b.layout(), "trace_distance: layout mismatch");
  return trace_distance(a.density(), b.density());
}

// ---------------------------------------------------------------------------
// Classical ensembles

ClassicalEnsemble::ClassicalEnsemble(std::vector<EnsembleEntry> entries) : entries_(std::move(entries)) {
  require(!entries_.empty(), "empty ensemble");
  const RegisterLayout& layout = entries_.front().state.layout();
  double total = 0.0;
  for (const auto& e : entries_) {
    require(e.probability >= -1e-12, "ensemble probability is negative");
    require(e.state.layout() == layout, "ensemble states live on different layouts");
    total += e.probability;
  }
  require(std::abs(total - 1.0) <= kAtol, "ensemble probabilities do not sum to 1");
}

double ClassicalEnsemble::total_probability() const {
  double total = 0.0;
  for (const auto& e : entries_) total += e.probability;
  return total;
}

ClassicalEnsemble classical_ensemble_state(std::vector<EnsembleEntry> entries) {
  return ClassicalEnsemble(std::move(entries));
}

double ensemble_trace_distance(const ClassicalEnsemble& a, const ClassicalEnsemble& b) {
  require(!a.entries().empty() && !b.entries().empty(), "empty ensemble");
  require(a.entries().front().state.layout() == b.entries().front().state.layout(),
          "ensemble layouts differ");
  const int d = a.entries().front().state.dim();
  std::map<std::int64_t, Mat> blocks;
  for (const auto& e : a.entries()) {
    auto [it, fresh] = blocks.try_emplace(e.label, Mat::Zero(d, d));
    it->second += e.probability * e.state.density();
  }
  for (const auto& e : b.entries()) {
    auto [it, fresh] = blocks.try_emplace(e.label, Mat::Zero(d, d));
    it->second -= e.probability * e.state.density();
  }
  double td = 0.0;
  for (const auto& [label, diff] : blocks) {
    Eigen::SelfAdjointEigenSolver<Mat> es(diff, Eigen::EigenvaluesOnly);
    td += 0.5 * es.eigenvalues().cwiseAbs().sum();
  }
  return td;
}

int compose_digits(const std::vector<int>& digits, const std::vector<int>& dims) {
  require(digits.size() == dims.size(), "compose_digits: size mismatch");
  int idx = 0;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    require(digits[i] >= 0 && digits[i] < dims[i], "compose_digits: digit out of range");
    idx = idx * dims[i] + digits[i];
  }
  return idx;
}

std::vector<int> decompose_index(int index, const std::vector<int>& dims) {
  std::vector<int> digits(dims.size());
  for (int i = static_cast<int>(dims.size()) - 1; i >= 0; --i) {
    digits[static_cast<std::size_t>(i)] = index % dims[static_cast<std::size_t>(i)];
    index /= dims[static_cast<std::size_t>(i)];
  }
  return digits;
}

}  // namespace parrep
