#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "parrep/measure.hpp"
#include "test_util.hpp"

using namespace parrep;
using testutil::random_pure;
using testutil::random_success_operator;
using testutil::random_unitary;

namespace {

// Subset game: coins r in [n], accept iff r < s, trivial response.
GameSpec subset_game_spec(int n, int s) {
  GameSpec g;
  g.layout = RegisterLayout{{"z", 1}};
  g.response_registers = {"z"};
  g.randomness_count = n;
  g.verdict = [s](int r, int) { return r < s; };
  return g;
}

// Random game on a work register (<= 3 qubits) with a small coin space and a
// random verdict table; the adversary applies a Haar-ish unitary per coin.
GameSpec random_game(int work_dim, int resp_dim, int coins, SplitRng& rng) {
  GameSpec g;
  g.layout = RegisterLayout{{"w", work_dim}, {"z", resp_dim}};
  g.response_registers = {"z"};
  g.randomness_count = coins;
  auto table = std::make_shared<std::vector<std::vector<bool>>>();
  table->resize(static_cast<std::size_t>(coins));
  for (auto& row : *table) {
    row.resize(static_cast<std::size_t>(resp_dim));
    for (std::size_t z = 0; z < row.size(); ++z) row[z] = rng.uniform() < 0.5;
  }
  g.verdict = [table](int r, int z) {
    return (*table)[static_cast<std::size_t>(r)][static_cast<std::size_t>(z)];
  };
  auto us = std::make_shared<std::vector<Unitary>>();
  for (int r = 0; r < coins; ++r) us->push_back(random_unitary(g.layout, rng));
  g.adversary = [us](int r) { return (*us)[static_cast<std::size_t>(r)]; };
  return g;
}

}  // namespace

TEST_CASE("value grid: sizes, spacing, binning accuracy") {
  ValueGrid g1 = ValueGrid::make(1.0);
  CHECK(g1.n_points == 2);
  CHECK(g1.spacing == 1.0);

  ValueGrid g = ValueGrid::make(0.05);
  CHECK(g.n_points == 21);  // ceil(1/eps)+1
  CHECK(g.spacing == doctest::Approx(0.05));

  ValueGrid gc = ValueGrid::make(0.3);
  CHECK(gc.n_points == 5);
  CHECK(gc.spacing == doctest::Approx(0.25));  // refined so 0 and 1 are exact

  // grid values strictly increasing, inside [0,1]
  for (int j = 0; j + 1 < gc.n_points; ++j) CHECK(gc.value(j) < gc.value(j + 1));
  CHECK(gc.value(0) == 0.0);
  CHECK(gc.value(gc.n_points - 1) == doctest::Approx(1.0));

  // binning never moves a value by more than eps/2
  SplitRng rng(5);
  for (int i = 0; i < 200; ++i) {
    const double x = rng.uniform();
    const double v = gc.value(gc.bin_of(x));
    CHECK(std::abs(v - x) <= 0.3 / 2 + 1e-12);
  }
  CHECK_THROWS_AS(ValueGrid::make(0.0), MeasureError);
  CHECK_THROWS_AS(ValueGrid::make(1.5), MeasureError);
  CHECK_THROWS_AS(gc.bin_of(1.2), MeasureError);
}

TEST_CASE("subset game success operator equals the Monte Carlo acceptance rate") {
  GameSpec g = subset_game_spec(8, 2);
  ValueMeasurementFamily fam = ValueMeasurementFamily::from_game(g);
  QuantumState s = QuantumState::basis(g.layout, 0);
  const double exact = valest_exact(fam, s);
  CHECK(exact == doctest::Approx(0.25).epsilon(1e-12));

  // Oracle: play the literal game 1e5 times.
  SplitRng rng(21);
  int wins = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const int r = static_cast<int>(rng.uniform_below(8));
    if (g.verdict(r, 0)) ++wins;
  }
  CHECK(testutil::within_3_sigma(wins, n, exact));
}

TEST_CASE("success operator spectrum stays in [0,1] for random games") {
  SplitRng rng(22);
  for (int t = 0; t < 4; ++t) {
    SplitRng tr = rng.split(static_cast<std::uint64_t>(t));
    GameSpec g = random_game(2 + t % 3, 2, 4, tr);
    ValueMeasurementFamily fam = ValueMeasurementFamily::from_game(g);
    CHECK(fam.eigenvalues().minCoeff() >= 0.0);
    CHECK(fam.eigenvalues().maxCoeff() <= 1.0);
  }
  GameSpec bad = subset_game_spec(8, 2);
  bad.randomness_count = 100000;
  CHECK_THROWS_AS(success_operator(bad), MeasureError);
}

TEST_CASE("valest outcome law matches an independent eigendecomposition oracle") {
  SplitRng rng(23);
  RegisterLayout layout{{"x", 4}};
  const Mat m = random_success_operator(4, rng);
  ValueMeasurementFamily fam = ValueMeasurementFamily::from_operator(layout, m);
  ValueMeasurement vm = fam.at(0.1, 0.01);
  QuantumState psi = random_pure(layout, rng);

  // Oracle: diagonalise m here, bin eigenvalues on the same uniform grid.
  Eigen::SelfAdjointEigenSolver<Mat> es(m);
  const int npts = 11;
  const double spacing = 1.0 / (npts - 1);
  std::map<int, double> expect;
  for (int i = 0; i < 4; ++i) {
    const double w = std::norm((es.eigenvectors().col(i).adjoint() * psi.amplitudes())(0, 0));
    const int bin = static_cast<int>(std::lround(es.eigenvalues()(i) / spacing));
    expect[bin] += w;
  }
  const auto dist = vm.outcome_distribution(psi);
  double total = 0.0;
  for (const auto& bw : dist) {
    CHECK(bw.probability == doctest::Approx(expect[bw.grid_index]).epsilon(1e-9));
    total += bw.probability;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));

  // Sampled frequencies agree with the law (1e4 draws, 3 sigma).
  std::map<int, int> counts;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    SplitRng t = rng.split(static_cast<std::uint64_t>(i));
    counts[valest(vm, psi, t).bin]++;
  }
  for (const auto& bw : dist) {
    CHECK(testutil::within_3_sigma(counts[bw.grid_index], n, bw.probability));
  }
}

TEST_CASE("pre-binned valest expectation equals Tr(M rho) exactly; binned within eps/2") {
  SplitRng rng(24);
  for (int t = 0; t < 10; ++t) {
    SplitRng tr = rng.split(static_cast<std::uint64_t>(t));
    GameSpec g = random_game(2 << (t % 2), 2, 1 << (t % 4), tr);
    ValueMeasurementFamily fam = ValueMeasurementFamily::from_game(g);
    ValueMeasurement vm = fam.at(0.15, 0.01);
    QuantumState psi = random_pure(g.layout, tr);
    const double exact = valest_exact(fam, psi);
    double prebinned = 0.0, binned = 0.0;
    for (const auto& bw : vm.outcome_distribution(psi)) {
      prebinned += bw.probability * bw.mean_eigenvalue;
      binned += bw.probability * bw.value;
    }
    CHECK(std::abs(prebinned - exact) <= 1e-9);
    CHECK(std::abs(binned - exact) <= 0.15 / 2 + 1e-9);
  }
}

TEST_CASE("valest is exactly projective: the value repeats with probability 1") {
  SplitRng rng(25);
  RegisterLayout layout{{"x", 8}};
  ValueMeasurementFamily fam =
      ValueMeasurementFamily::from_operator(layout, random_success_operator(8, rng));
  ValueMeasurement vm = fam.at(0.07, 0.01);
  QuantumState psi = random_pure(layout, rng);
  ValestOutcome first = valest(vm, psi, rng);
  QuantumState held = first.post;
  for (int i = 0; i < 20; ++i) {
    ValestOutcome again = valest(vm, held, rng);
    CHECK(again.bin == first.bin);
    CHECK(again.probability == doctest::Approx(1.0).epsilon(1e-10));
    held = again.post;
  }
}

TEST_CASE("deterministic game: valest returns the constant verdict and fixes the state") {
  for (int b = 0; b <= 1; ++b) {
    GameSpec g;
    g.layout = RegisterLayout{{"z", 1}};
    g.response_registers = {"z"};
    g.randomness_count = 1;
    g.verdict = [b](int, int) { return b == 1; };
    REQUIRE(g.deterministic());
    ValueMeasurementFamily fam = ValueMeasurementFamily::from_game(g);
    ValueMeasurement vm = fam.at(0.3, 0.1);
    QuantumState s = QuantumState::basis(g.layout, 0);
    SplitRng rng(26);
    for (int i = 0; i < 5; ++i) {
      ValestOutcome o = valest(vm, s, rng);
      CHECK(o.value == static_cast<double>(b));  // exactly 0 or 1, no binning error
      CHECK(o.probability == doctest::Approx(1.0));
      s = o.post;
    }
  }
}

TEST_CASE("repair returns immediately when the binary measurement commutes with M") {
  // M diagonal, projector diagonal: the post-valest state is M-invariant.
  RegisterLayout layout{{"x", 4}};
  Mat m = Mat::Zero(4, 4);
  m.diagonal() << 0.1, 0.4, 0.7, 0.9;
  ValueMeasurementFamily fam = ValueMeasurementFamily::from_operator(layout, m);
  ValueMeasurement vm = fam.at(0.1, 0.01);
  SplitRng rng(27);
  QuantumState psi = random_pure(layout, rng);
  ValestOutcome o = valest(vm, psi, rng);
  Projector pi = Projector::diagonal(layout, {true, false, true, false});
  MeasureResult mr = measure_projective(o.post, Pvm::binary(pi), rng);
  RepairResult rr = repair(vm, mr.label == 1 ? pi : pi.complement(), mr.post, o.value, 0.25, rng);
  CHECK_FALSE(rr.exhausted);
  CHECK(rr.alternations == 1);
  CHECK(rr.p_calls == 0);
  CHECK(rr.final_value == doctest::Approx(o.value));
}

TEST_CASE("repair flags exhaustion when the target is unreachable") {
  RegisterLayout layout{{"x", 2}};
  Mat m = Mat::Zero(2, 2);
  m(0, 0) = 1.0;  // projector onto |0>
  ValueMeasurementFamily fam = ValueMeasurementFamily::from_operator(layout, m);
  ValueMeasurement vm = fam.at(0.1, 0.01);
  QuantumState one = QuantumState::basis(layout, 1);
  Projector pi = Projector::diagonal(layout, {false, true});
  SplitRng rng(28);
  // target 1.0 but the state is orthogonal to the eigenvalue-1 space and both
  // measurements are diagonal, so the value stays at 0 until the budget ends.
  RepairResult rr = repair(vm, pi, one, 1.0, 4.0, rng);
  CHECK(rr.exhausted);
  CHECK(rr.alternations == 1);  // ceil(4/eta) = 1 round
}

TEST_CASE("repair property: closeness frequency obeys the stated tail bound") {
  // 2-qubit instance, 300 trials (the acceptance suite runs the larger one).
  SplitRng rng(29);
  RegisterLayout layout{{"x", 4}};
  ValueMeasurementFamily fam =
      ValueMeasurementFamily::from_operator(layout, random_success_operator(4, rng));
  const double eps = 0.1, delta = 0.0, eta = 0.2;
  ValueMeasurement vm = fam.at(eps, delta);
  const double bound =
      vm.n_outcomes() * (eta + delta) + 4.0 * std::sqrt(delta);  // may exceed 1 (vacuous)
  int far = 0;
  const int trials = 300;
  for (int t = 0; t < trials; ++t) {
    SplitRng tr = rng.split(static_cast<std::uint64_t>(t));
    QuantumState psi = random_pure(layout, tr);
    ValestOutcome first = valest(vm, psi, tr);
    Projector pi = Projector::onto_vector(layout, testutil::random_unit_vector(4, tr));
    MeasureResult mr = measure_projective(first.post, Pvm::binary(pi), tr);
    const Projector& observed = mr.label == 1 ? pi : pi.complement();
    RepairResult rr = repair(vm, observed, mr.post, first.value, eta, tr);
    ValestOutcome again = valest(vm, rr.state, tr);
    if (std::abs(again.value - first.value) >= 2.0 * eps - 1e-12) ++far;
  }
  CHECK(static_cast<double>(far) / trials <= std::min(1.0, bound) + 3.0 * std::sqrt(0.25 / trials));
}

TEST_CASE("valest grids at different resolutions agree within one coarse step") {
  SplitRng rng(30);
  RegisterLayout layout{{"x", 4}};
  ValueMeasurementFamily fam =
      ValueMeasurementFamily::from_operator(layout, random_success_operator(4, rng));
  ValueMeasurement coarse = fam.at(0.2, 0.0);
  ValueMeasurement fine = fam.at(0.01, 0.0);
  for (int t = 0; t < 20; ++t) {
    SplitRng tr = rng.split(static_cast<std::uint64_t>(t));
    QuantumState psi = random_pure(layout, tr);
    ValestOutcome c = valest(coarse, psi, tr);
    ValestOutcome f = valest(fine, c.post, tr);
    // same family, so the fine value refines the coarse bin
    CHECK(std::abs(f.value - c.value) <= coarse.grid().spacing / 2 + fine.grid().spacing / 2 + 1e-12);
  }
}
