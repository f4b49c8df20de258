#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "parrep/hilbert.hpp"

namespace parrep {

struct MeasureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One-shot game against a fixed strategy circuit: sample a coin string r,
// apply the per-coin unitary, read the response registers in the
// computational basis, apply the verdict predicate.
struct GameSpec {
  RegisterLayout layout;
  std::vector<std::string> response_registers;  // joint response index, register order
  int randomness_count = 1;                     // enumerable coin strings, <= 4096
  std::function<bool(int r, int z)> verdict;    // total on [randomness_count] x [response_dim]
  std::function<Unitary(int r)> adversary;      // unitary on `layout` for coin r

  int response_dim() const;
  // joint response index of a basis index
  int response_of(int basis_index) const;
  // no coins and no response freedom: the verdict is a constant
  bool deterministic() const;
};

// Mean success operator of the game: average over coins of
// A_r^dag P_accept(r) A_r.  Hermitian with spectrum in [0,1] (checked).
Mat success_operator(const GameSpec& game);

// Uniform value grid over [0,1].  n_points = ceil(1/epsilon)+1 grid values
// j*spacing with spacing = 1/(n_points-1) <= epsilon, so 0 and 1 are always
// exact grid values and binning moves a value by at most epsilon/2.
struct ValueGrid {
  double requested_epsilon = 1.0;
  int n_points = 2;
  double spacing = 1.0;

  static ValueGrid make(double epsilon);
  double value(int j) const { return static_cast<double>(j) * spacing; }
  int bin_of(double x) const;
};

struct ValestOutcome {
  double value = 0.0;        // grid value
  int bin = 0;               // grid index
  double probability = 0.0;  // Born probability of this outcome
  QuantumState post;
};

// A bin of the spectral decomposition: grid index plus the eigenvalue mass
// that falls into it.
struct SpectralBin {
  int grid_index = 0;
  std::vector<int> eigen_indices;
};

class ValueMeasurement;

// Shared spectral data for one success operator; hands out grid-binned
// measurements at any (epsilon, delta) without re-diagonalising.
class ValueMeasurementFamily {
 public:
  static ValueMeasurementFamily from_game(GameSpec game);
  static ValueMeasurementFamily from_operator(RegisterLayout layout, Mat op);

  ValueMeasurement at(double epsilon, double delta) const;

  const RegisterLayout& layout() const;
  const Mat& op() const;
  const Eigen::VectorXd& eigenvalues() const;   // ascending, clamped to [0,1]
  const Mat& eigenvectors() const;
  const std::optional<GameSpec>& game() const;
  bool deterministic() const;

  // Tr(M rho): the exact acceptance probability of the game on `state`.
  double exact_value(const QuantumState& state) const;

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
};

// Grid-binned spectral measurement of a success operator.  Outcomes are grid
// values; the post-state is the renormalised projection onto the matching
// eigenspace bin, so repeating the measurement reproduces the value with
// probability 1.
class ValueMeasurement {
 public:
  double epsilon() const { return grid_.requested_epsilon; }
  double delta() const { return delta_; }
  const ValueGrid& grid() const { return grid_; }
  int n_outcomes() const { return grid_.n_points; }  // N_{eps,delta}
  const std::vector<SpectralBin>& occupied_bins() const { return bins_; }
  const ValueMeasurementFamily& family() const { return family_; }

  ValestOutcome sample(const QuantumState& state, SplitRng& rng) const;

  // Exact outcome law on `state`: per occupied bin, (grid value, probability,
  // conditional mean of the unbinned eigenvalue).
  struct BinWeight {
    int grid_index;
    double value;
    double probability;
    double mean_eigenvalue;
  };
  std::vector<BinWeight> outcome_distribution(const QuantumState& state) const;

  // Projection of `state` onto one occupied bin (unnormalised density form is
  // handled by the caller via density matrices; here states are normalised).
  QuantumState project_onto_bin(const QuantumState& state, int occupied_index,
                                double* probability_out = nullptr) const;

  double exact_value(const QuantumState& state) const { return family_.exact_value(state); }

 private:
  friend class ValueMeasurementFamily;
  ValueMeasurement(ValueMeasurementFamily family, ValueGrid grid, double delta);

  ValueMeasurementFamily family_;
  ValueGrid grid_;
  double delta_ = 0.0;
  std::vector<SpectralBin> bins_;
};

// valest: spectral value-estimation measurement (sampled).
ValestOutcome valest(const ValueMeasurement& m, const QuantumState& state, SplitRng& rng);

// valest_exact: Tr(M rho), no state change.
double valest_exact(const ValueMeasurementFamily& family, const QuantumState& state);

struct RepairResult {
  QuantumState state;
  double final_value = 0.0;      // last valest value observed
  int alternations = 0;          // valest/binary rounds consumed (first valest counts as 1)
  bool exhausted = false;        // budget ran out before re-entering tolerance
  long m_calls = 0;              // valest applications
  long p_calls = 0;              // binary measurement applications
};

// Alternates (valest; stop once the value is back within 2*epsilon of
// `target`) with the binary measurement {pi_y, 1 - pi_y}, for at most
// ceil(4/eta) rounds.  Exhaustion returns the current state with a flag.
RepairResult repair(const ValueMeasurement& m, const Projector& pi_y, const QuantumState& sigma,
                    double target, double eta, SplitRng& rng);

// Convenience: binary element y of a PVM member.
RepairResult repair(const ValueMeasurement& m, const Pvm& pi, int outcome_index,
                    const QuantumState& sigma, double target, double eta, SplitRng& rng);

// True when the value is inside the repair stopping tolerance around target
// (strictly inside 2*epsilon).
bool repair_within_tolerance(double value, double target, double epsilon);

// The measurement as a complete PVM over every grid point (zero projectors on
// unoccupied bins), labels = grid indices.  Lets families built from different
// operators share one outcome set.
Pvm grid_pvm(const ValueMeasurement& m);

// Alternation budget ceil(4/eta) shared by repair() and its channel form.
long repair_budget(double eta);

}  // namespace parrep
