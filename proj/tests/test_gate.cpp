#include "cnotsim/gate.hpp"
#include "test_support.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <random>

using namespace cnotsim;

namespace {

const std::vector<ModeId> kDetectedModes = {{Path::A, Pol::H},  {Path::A, Pol::V},  {Path::B, Pol::H},
                                            {Path::B, Pol::V},  {Path::P1, Pol::H}, {Path::P1, Pol::V},
                                            {Path::P4, Pol::H}, {Path::P4, Pol::V}};

FockState input_state(const PolarizationQubit& c, const PolarizationQubit& t) {
  const std::array<FockState, 4> photons = {
      make_single_photon(Path::C, c), make_single_photon(Path::A1, PolarizationQubit::plus()),
      make_single_photon(Path::A2, PolarizationQubit::H()), make_single_photon(Path::T, t)};
  return tensor(photons);
}

/// Probability of trigger `p` together with one photon on each of paths 1 and 4,
/// summed over their polarizations, straight from the propagated Fock state.
double brute_force_pattern(const PolarizationQubit& c, const PolarizationQubit& t, TriggerPattern p) {
  FockState s = input_state(c, t);
  for (const auto& e : build_gate_circuit().elements) s = apply_linear(e.transform, s);
  double total = 0.0;
  for (Pol x : {Pol::H, Pol::V}) {
    for (Pol y : {Pol::H, Pol::V}) {
      const OccupationVector pattern{{ModeId{Path::A, p.a}, 1}, {ModeId{Path::B, p.b}, 1},
                                     {ModeId{Path::P1, x}, 1}, {ModeId{Path::P4, y}, 1}};
      total += project(s, kDetectedModes, pattern, true).probability;
    }
  }
  return total;
}

double cnot_probability(const std::string& in, const std::string& out) {
  return std::norm(label_state(out).dot(cnot() * label_state(in)));
}

}  // namespace

TEST_CASE("circuit description") {
  const CircuitDescription d = build_gate_circuit();
  REQUIRE(d.elements.size() == 3);
  CHECK(d.elements[0].basis == PbsBasis::HV);
  CHECK(d.elements[1].basis == PbsBasis::PM);
  CHECK(d.elements[2].basis == PbsBasis::RL);
  CHECK(d.elements[0].in.first == Path::C);
  CHECK(d.elements[0].out.second == Path::P2);
  CHECK(d.elements[1].in.first == Path::A2);
  CHECK(d.elements[1].out.second == Path::P4);
  CHECK(d.elements[2].in.first == Path::P2);
  CHECK(d.elements[2].out.second == Path::B);
  for (const auto& e : d.elements) CHECK(e.transform.is_isometry());
  const std::vector<Path> expected = {Path::C,  Path::A1, Path::A2, Path::T,  Path::P1,
                                      Path::P2, Path::P3, Path::P4, Path::A,  Path::B};
  CHECK(d.paths == expected);
  CHECK(d.detectors.size() == 4);

  const nlohmann::json j = d.to_json();
  CHECK(j["elements"].size() == 3);
  CHECK(j["elements"][2]["basis"] == "RL");
}

TEST_CASE("run_gate examples") {
  const GateRunResult phi = run_gate(PolarizationQubit::plus(), PolarizationQubit::H());
  CHECK(phi.success_probability == doctest::Approx(0.125).epsilon(1e-9));
  const TwoQubitState bell = (label_state("HH") + label_state("VV")) / std::sqrt(2.0);
  for (const auto& b : phi.branches) CHECK(state_fidelity(bell, b.state) == doctest::Approx(1.0).epsilon(1e-9));

  for (const auto& [c, expect] : {std::pair{'H', "HH"}, std::pair{'V', "VV"}}) {
    const GateRunResult r = run_gate(PolarizationQubit::from_label(c), PolarizationQubit::H());
    REQUIRE_FALSE(r.branches.empty());
    for (const auto& b : r.branches) {
      CHECK(state_fidelity(label_state(expect), b.state) == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("200 random product inputs give CNOT with probability 1/8") {
  std::mt19937_64 rng(1234);
  for (int i = 0; i < 200; ++i) {
    const auto c = testing::random_qubit(rng);
    const auto t = testing::random_qubit(rng);
    const GateRunResult r = run_gate(c, t);
    const TwoQubitState expected = cnot() * product_state(c, t);
    CHECK(r.success_probability == doctest::Approx(0.125).epsilon(1e-9));
    double breakdown = 0.0;
    for (const auto& [p, prob] : r.outcome_breakdown) breakdown += prob;
    CHECK(std::abs(breakdown - 0.125) < 1e-9);
    double branch_total = 0.0;
    for (const auto& b : r.branches) {
      CHECK(state_fidelity(expected, b.state) > 1.0 - 1e-9);
      CHECK(b.state.norm() == doctest::Approx(1.0).epsilon(1e-12));
      branch_total += b.probability;
    }
    CHECK(std::abs(branch_total - r.success_probability) < 1e-12);
  }
}

TEST_CASE("pattern probabilities match a brute-force projection") {
  std::mt19937_64 rng(4321);
  for (int i = 0; i < 10; ++i) {
    const auto c = testing::random_qubit(rng);
    const auto t = testing::random_qubit(rng);
    GateConfig only_hh;
    only_hh.trigger_set = {TriggerPattern{Pol::H, Pol::H}};
    const GateRunResult r = run_gate(c, t, only_hh);
    CHECK(r.success_probability == doctest::Approx(brute_force_pattern(c, t, {Pol::H, Pol::H})).epsilon(1e-12));
    const GateRunResult all = run_gate(c, t);
    for (const auto& p : all_trigger_patterns()) {
      CHECK(all.outcome_breakdown.at(p) == doctest::Approx(brute_force_pattern(c, t, p)).epsilon(1e-12));
    }
  }
  GateConfig empty;
  empty.trigger_set.clear();
  CHECK_THROWS_AS(run_gate(PolarizationQubit::H(), PolarizationQubit::H(), empty), std::invalid_argument);
}

TEST_CASE("without feed-forward the branches carry the Pauli byproduct") {
  std::mt19937_64 rng(55);
  GateConfig raw;
  raw.apply_feed_forward = false;
  const TwoQubitOp z1 = kron(pauli_z(), Eigen::Matrix2cd::Identity());
  const TwoQubitOp x4 = kron(Eigen::Matrix2cd::Identity(), pauli_x());
  for (int i = 0; i < 20; ++i) {
    const auto c = testing::random_qubit(rng);
    const auto t = testing::random_qubit(rng);
    const TwoQubitState ideal = cnot() * product_state(c, t);
    for (const auto& b : run_gate(c, t, raw).branches) {
      const TwoQubitOp& byproduct = classify(b.pattern) == BellOutcome::PhiMinus ? z1 : x4;
      CHECK(state_fidelity(byproduct * ideal, b.state) == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
  // A control in |+> makes the Phi- byproduct visible.
  const TwoQubitState bell = (label_state("HH") + label_state("VV")) / std::sqrt(2.0);
  for (const auto& b : run_gate(PolarizationQubit::plus(), PolarizationQubit::H(), raw).branches) {
    if (classify(b.pattern) == BellOutcome::PhiMinus) CHECK(state_fidelity(bell, b.state) < 1e-9);
  }
}

TEST_CASE("Bell-state analyzer map") {
  CHECK(classify({Pol::H, Pol::H}) == BellOutcome::PhiMinus);
  CHECK(classify({Pol::V, Pol::V}) == BellOutcome::PhiMinus);
  CHECK(classify({Pol::H, Pol::V}) == BellOutcome::PsiPlus);
  CHECK(classify({Pol::V, Pol::H}) == BellOutcome::PsiPlus);

  const auto phi_minus = bell_analyzer_response(BellState::PhiMinus);
  CHECK(phi_minus.at({Pol::H, Pol::H}) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(phi_minus.at({Pol::V, Pol::V}) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(phi_minus.at({Pol::H, Pol::V}) < 1e-12);
  const auto psi_plus = bell_analyzer_response(BellState::PsiPlus);
  CHECK(psi_plus.at({Pol::H, Pol::V}) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(psi_plus.at({Pol::V, Pol::H}) == doctest::Approx(0.5).epsilon(1e-12));
  for (BellState b : {BellState::PhiPlus, BellState::PsiMinus}) {
    for (const auto& [p, prob] : bell_analyzer_response(b)) CHECK(prob < 1e-12);
  }

  CHECK(to_string(parse_trigger("HV")) == "HV");
  CHECK_THROWS_AS(parse_trigger("HX"), std::invalid_argument);
}

TEST_CASE("ideal truth tables equal the CNOT matrix elements") {
  for (auto basis : {TruthTableBasis::Computational, TruthTableBasis::Complementary, TruthTableBasis::MixedRL}) {
    const TruthTable t = truth_table(basis);
    CHECK(parse_basis(to_string(basis)) == basis);
    for (int i = 0; i < 4; ++i) {
      CHECK(t.probabilities.row(i).sum() == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(t.success[static_cast<std::size_t>(i)] == doctest::Approx(0.125).epsilon(1e-9));
      for (int o = 0; o < 4; ++o) {
        const std::string& in = basis_inputs(basis)[static_cast<std::size_t>(i)];
        const std::string& out = basis_outputs(basis)[static_cast<std::size_t>(o)];
        CHECK(std::abs(t.probabilities(i, o) - cnot_probability(in, out)) < 1e-9);
      }
    }
  }
  const TruthTable comp = truth_table(TruthTableBasis::Computational);
  CHECK(comp.at("VH", "VV") == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(comp.at("VV", "VH") == doctest::Approx(1.0).epsilon(1e-9));
  const TruthTable pm = truth_table(TruthTableBasis::Complementary);
  CHECK(pm.at("+-", "--") == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(pm.at("++", "++") == doctest::Approx(1.0).epsilon(1e-9));
  const TruthTable rl = truth_table(TruthTableBasis::MixedRL);
  CHECK(rl.at("+H", "RL") == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(rl.at("+H", "LR") == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(rl.at("+H", "RR") < 1e-9);
  CHECK(rl.at("+H", "LL") < 1e-9);
  CHECK_THROWS_AS(parse_basis("diagonal"), std::invalid_argument);
}

TEST_CASE("one photon per path after PBS-1 and PBS-2") {
  std::mt19937_64 rng(202);
  const auto circuit = build_gate_circuit();
  const std::vector<ModeId> paths = {{Path::P1, Pol::H}, {Path::P1, Pol::V}, {Path::P2, Pol::H},
                                     {Path::P2, Pol::V}, {Path::P3, Pol::H}, {Path::P3, Pol::V},
                                     {Path::P4, Pol::H}, {Path::P4, Pol::V}};
  for (int i = 0; i < 20; ++i) {
    const auto c = testing::random_qubit(rng);
    const auto t = testing::random_qubit(rng);
    FockState s = input_state(c, t);
    s = apply_linear(circuit.elements[0].transform, s);
    s = apply_linear(circuit.elements[1].transform, s);

    // (alpha |HH> + beta |VV>)_{12} (t+ |++> + t- |-->)_{34}, t+- = <+-|t>.
    const cplx tp = PolarizationQubit::plus().vector().dot(t.vector());
    const cplx tm = PolarizationQubit::minus().vector().dot(t.vector());
    const auto pair = [](Path p, Path q, const Eigen::Vector2cd& v) {
      const std::array<PhotonSpec, 2> ph = {PhotonSpec{p, v}, PhotonSpec{q, v}};
      return create_photons(ph);
    };
    const Eigen::Vector2cd h(1.0, 0.0), v(0.0, 1.0);
    const FockState a = pair(Path::P1, Path::P2, h) * c.alpha() + pair(Path::P1, Path::P2, v) * c.beta();
    const FockState b = pair(Path::P3, Path::P4, PolarizationQubit::plus().vector()) * tp +
                        pair(Path::P3, Path::P4, PolarizationQubit::minus().vector()) * tm;
    const std::array<FockState, 2> parts = {a, b};
    const FockState expected = tensor(parts);

    double p_one_each = 0.0;
    FockState component;
    for (const auto& [pattern, prob] : outcome_distribution(s, paths, false)) {
      const bool one_each = pattern.path_count(Path::P1) == 1 && pattern.path_count(Path::P2) == 1 &&
                            pattern.path_count(Path::P3) == 1 && pattern.path_count(Path::P4) == 1;
      if (!one_each) continue;
      p_one_each += prob;
    }
    for (const auto& [occ, amp] : s.terms()) {
      if (occ.path_count(Path::P1) == 1 && occ.path_count(Path::P2) == 1 && occ.path_count(Path::P3) == 1 &&
          occ.path_count(Path::P4) == 1) {
        component.add(occ, amp);
      }
    }
    CHECK(p_one_each == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(component.norm_sq() == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(std::abs(inner(expected, component.normalized())) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("bunching audit") {
  std::mt19937_64 rng(909);
  GateConfig threshold;
  threshold.detector = DetectorModel::Threshold;
  for (int i = 0; i < 10; ++i) {
    const auto c = testing::random_qubit(rng);
    const auto t = testing::random_qubit(rng);
    const BunchingReport r = bunching_audit(c, t);
    REQUIRE(r.cases.size() == 9);
    CHECK(r.total_probability == doctest::Approx(1.0).epsilon(1e-9));
    double sum = 0.0;
    for (const auto& bc : r.cases) {
      sum += bc.probability;
      const unsigned n2n3 = bc.distribution[1] + bc.distribution[2];
      if (bc.group == 1) {
        CHECK(bc.probability == doctest::Approx(0.25).epsilon(1e-9));
        CHECK(bc.pnr_trigger_probability == doctest::Approx(0.125).epsilon(1e-9));
      } else if (bc.group == 2) {
        CHECK(n2n3 != 2);
        CHECK(bc.rejected_by_pnr);
        CHECK(bc.pnr_trigger_probability < 1e-12);
      } else {
        CHECK(bc.group == 3);
        CHECK(std::abs(bc.pnr_trigger_probability) <= 1e-12);
        CHECK(std::abs(bc.threshold_trigger_probability) <= 1e-12);
      }
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    const BunchingReport thr = bunching_audit(c, t, threshold);
    double leak = 0.0;
    for (const auto& bc : thr.cases) {
      if (bc.group == 2) leak += bc.trigger_probability;
    }
    CHECK(leak > 1e-6);
  }
  GateConfig noisy;
  noisy.noise.zeta = 0.9;
  CHECK_THROWS_AS(bunching_audit(PolarizationQubit::H(), PolarizationQubit::H(), noisy), std::invalid_argument);
}

TEST_CASE("visibility and its threshold") {
  const Visibility v = entangling_visibility();
  CHECK(v.hv == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(v.pm == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(v.bell_criterion);

  GateConfig cfg;
  cfg.noise.zeta = 0.9;
  const Visibility n = entangling_visibility(cfg);
  CHECK(n.hv < 1.0);
  CHECK(n.pm < 1.0);
  CHECK(n.bell_criterion == (std::min(n.hv, n.pm) > kBellVisibilityThreshold));

  // Visibility of a maximally mixed state is zero.
  CHECK(std::abs(correlation_visibility(TwoQubitOp::Identity() / 4.0, PbsBasis::HV)) < 1e-15);
}
