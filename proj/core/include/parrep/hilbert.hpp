#pragma once

#include <complex>
#include <initializer_list>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "parrep/rng.hpp"

namespace parrep {

using cdouble = std::complex<double>;
using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;

// Shared numeric tolerance for structural checks (normalisation, unitarity,
// completeness).
inline constexpr double kAtol = 1e-8;

struct HilbertError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Register {
  std::string name;
  int dim = 1;
};

// Ordered list of named finite-dimensional registers.  Register 0 is the most
// significant digit of a basis index (mixed radix, row-major).
class RegisterLayout {
 public:
  RegisterLayout() = default;
  RegisterLayout(std::initializer_list<Register> regs);
  explicit RegisterLayout(std::vector<Register> regs);

  int total_dim() const { return total_; }
  int size() const { return static_cast<int>(regs_.size()); }
  const Register& at(int i) const { return regs_.at(static_cast<std::size_t>(i)); }
  const std::vector<Register>& registers() const { return regs_; }

  bool has(const std::string& name) const;
  int index_of(const std::string& name) const;  // throws HilbertError if absent
  int dim_of(const std::string& name) const;

  // Smallest qubit count whose Hilbert space holds this layout.
  int qubit_count() const;

  int stride(int reg_index) const { return strides_.at(static_cast<std::size_t>(reg_index)); }
  std::vector<int> decompose(int basis_index) const;
  int compose(const std::vector<int>& digits) const;
  int digit(int basis_index, int reg_index) const;

  bool operator==(const RegisterLayout& other) const;
  bool operator!=(const RegisterLayout& other) const { return !(*this == other); }

 private:
  void init();

  std::vector<Register> regs_;
  std::vector<int> strides_;
  int total_ = 1;
};

RegisterLayout concat(const RegisterLayout& a, const RegisterLayout& b);

// Pure state (unit vector) or density operator over a layout.  Operations
// keep pure states pure whenever the result is pure.
class QuantumState {
 public:
  static QuantumState pure(RegisterLayout layout, Vec amplitudes);
  static QuantumState mixed(RegisterLayout layout, Mat density);
  static QuantumState basis(RegisterLayout layout, int basis_index);
  static QuantumState basis(RegisterLayout layout, const std::vector<int>& digits);

  bool is_pure() const { return pure_; }
  int dim() const { return layout_.total_dim(); }
  const RegisterLayout& layout() const { return layout_; }

  const Vec& amplitudes() const;  // throws if mixed
  Mat density() const;            // always available (outer product for pure)
  const Mat& density_ref() const; // throws if pure

  double fidelity_overlap(const QuantumState& other) const;  // |<a|b>|^2 for pure pair

  // Structural validation: unit norm / Hermitian, unit trace, spectrum
  // >= -1e-10.  Factories call this; hot paths construct via trusted().
  void validate() const;

  static QuantumState trusted_pure(RegisterLayout layout, Vec amplitudes);
  static QuantumState trusted_mixed(RegisterLayout layout, Mat density);

 private:
  QuantumState(RegisterLayout layout, Vec amp, Mat rho, bool pure)
      : layout_(std::move(layout)), amp_(std::move(amp)), rho_(std::move(rho)), pure_(pure) {}

  RegisterLayout layout_;
  Vec amp_;
  Mat rho_;
  bool pure_ = true;
};

// Unitary on a layout.  Construction checks U U^dag = I within kAtol and
// detects (phased) permutation structure for fast conjugation paths.
class Unitary {
 public:
  Unitary(RegisterLayout layout, Mat matrix);
  static Unitary identity(RegisterLayout layout);
  // column j maps to row perm[j] with the given phase (default 1).
  static Unitary permutation(RegisterLayout layout, const std::vector<int>& perm,
                             const std::vector<cdouble>& phases = {});

  const RegisterLayout& layout() const { return layout_; }
  const Mat& matrix() const { return mat_; }
  int dim() const { return layout_.total_dim(); }
  bool is_permutation() const { return perm_.has_value(); }
  const std::vector<int>& perm() const { return *perm_; }
  const std::vector<cdouble>& perm_phases() const { return phases_; }
  Unitary adjoint() const;

 private:
  Unitary() = default;
  void detect_permutation();

  RegisterLayout layout_;
  Mat mat_;
  std::optional<std::vector<int>> perm_;
  std::vector<cdouble> phases_;
};

// Orthogonal projector on a layout (P = P^dag = P^2 within kAtol).
class Projector {
 public:
  Projector(RegisterLayout layout, Mat matrix);
  static Projector zero(RegisterLayout layout);
  static Projector identity(RegisterLayout layout);
  static Projector onto_vector(RegisterLayout layout, const Vec& v);
  static Projector diagonal(RegisterLayout layout, const std::vector<bool>& mask);
  template <typename Pred>
  static Projector from_predicate(const RegisterLayout& layout, Pred&& pred) {
    std::vector<bool> mask(static_cast<std::size_t>(layout.total_dim()));
    for (int i = 0; i < layout.total_dim(); ++i) mask[static_cast<std::size_t>(i)] = pred(i);
    return diagonal(layout, mask);
  }

  const RegisterLayout& layout() const { return layout_; }
  const Mat& matrix() const { return mat_; }
  bool is_diagonal() const { return diag_mask_.has_value(); }
  const std::vector<bool>& diagonal_mask() const { return *diag_mask_; }
  Projector complement() const;
  int rank() const;

 private:
  Projector() = default;

  RegisterLayout layout_;
  Mat mat_;
  std::optional<std::vector<bool>> diag_mask_;
};

// Complete projective measurement: mutually orthogonal projectors summing to
// the identity within kAtol.  Labels are small integers (meaning assigned by
// the caller: grid bin, accept bit, basis outcome, ...).
class Pvm {
 public:
  Pvm(RegisterLayout layout, std::vector<Projector> elements, std::vector<int> labels = {});
  static Pvm binary(const Projector& p1);  // labels {0: complement, 1: p1}
  static Pvm computational(const RegisterLayout& layout, const std::string& reg_name);

  const RegisterLayout& layout() const { return layout_; }
  int n_outcomes() const { return static_cast<int>(elements_.size()); }
  const Projector& projector(int idx) const { return elements_.at(static_cast<std::size_t>(idx)); }
  int label(int idx) const { return labels_.at(static_cast<std::size_t>(idx)); }

  static Pvm trusted(RegisterLayout layout, std::vector<Projector> elements, std::vector<int> labels);

 private:
  Pvm() = default;

  RegisterLayout layout_;
  std::vector<Projector> elements_;
  std::vector<int> labels_;
};

struct MeasureResult {
  int outcome_index = 0;  // position in the PVM
  int label = 0;
  double probability = 0.0;
  QuantumState post;
};

QuantumState tensor(const QuantumState& a, const QuantumState& b);
Unitary tensor(const Unitary& a, const Unitary& b);

// Applies `u` on the named target registers (in the order given; u's layout
// dims must match them).  Remaining registers are untouched.
QuantumState apply_unitary(const QuantumState& state, const Unitary& u,
                           const std::vector<std::string>& targets);
QuantumState apply_unitary(const QuantumState& state, const Unitary& u);  // whole layout

// Born-rule sampling.  Throws if every outcome probability is below 1e-12.
MeasureResult measure_projective(const QuantumState& state, const Pvm& pvm, SplitRng& rng);

// Computational-basis measurement of one register; the register is kept
// (collapsed).  Outcome is the register digit.
MeasureResult measure_register(const QuantumState& state, const std::string& reg_name, SplitRng& rng);

// Traces out the named registers; result lives on the remaining ones and is
// reported mixed (callers may re-purify if they know better).
QuantumState partial_trace(const QuantumState& state, const std::vector<std::string>& traced_out);

// (1/2)||rho - sigma||_1 via the spectrum of the difference.
double trace_distance(const QuantumState& a, const QuantumState& b);
double trace_distance(const Mat& a, const Mat& b);

// Hybrid classical/quantum value: probability-weighted labelled states.
struct EnsembleEntry {
  double probability = 0.0;
  std::int64_t label = 0;
  QuantumState state;
};

class ClassicalEnsemble {
 public:
  ClassicalEnsemble() = default;
  explicit ClassicalEnsemble(std::vector<EnsembleEntry> entries);

  const std::vector<EnsembleEntry>& entries() const { return entries_; }
  double total_probability() const;

 private:
  std::vector<EnsembleEntry> entries_;
};

ClassicalEnsemble classical_ensemble_state(std::vector<EnsembleEntry> entries);

// Trace distance of the block-diagonal (label-indexed) ensemble states.
double ensemble_trace_distance(const ClassicalEnsemble& a, const ClassicalEnsemble& b);

// Mixed-radix helpers shared across modules (coordinate 0 most significant).
int compose_digits(const std::vector<int>& digits, const std::vector<int>& dims);
std::vector<int> decompose_index(int index, const std::vector<int>& dims);

}  // namespace parrep
