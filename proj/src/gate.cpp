#include "cnotsim/gate.hpp"

#include "cnotsim/errors.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace cnotsim {

namespace {

constexpr PathPair kPbs1In{Path::C, Path::A1};
constexpr PathPair kPbs1Out{Path::P1, Path::P2};
constexpr PathPair kPbs2In{Path::A2, Path::T};
constexpr PathPair kPbs2Out{Path::P3, Path::P4};
constexpr PathPair kPbs3In{Path::P2, Path::P3};
constexpr PathPair kPbs3Out{Path::A, Path::B};

const std::array<ModeId, 4>& detector_modes() {
  static const std::array<ModeId, 4> m = {ModeId{Path::A, Pol::H}, ModeId{Path::A, Pol::V},
                                          ModeId{Path::B, Pol::H}, ModeId{Path::B, Pol::V}};
  return m;
}

OccupationVector trigger_occupation(TriggerPattern p) {
  return OccupationVector{{ModeId{Path::A, p.a}, 1}, {ModeId{Path::B, p.b}, 1}};
}

// Photons behind each detector, summed over internal modes.
struct Clicks {
  std::array<unsigned, 2> a{};
  std::array<unsigned, 2> b{};
};

Clicks clicks_of(const OccupationVector& occ) {
  Clicks c;
  for (const auto& [m, n] : occ.entries()) {
    if (m.path == Path::A) c.a[static_cast<int>(m.pol)] += n;
    if (m.path == Path::B) c.b[static_cast<int>(m.pol)] += n;
  }
  return c;
}

bool pnr_trigger(const Clicks& c, const std::set<TriggerPattern>& set) {
  if (c.a[0] + c.a[1] != 1 || c.b[0] + c.b[1] != 1) return false;
  const TriggerPattern p{c.a[0] == 1 ? Pol::H : Pol::V, c.b[0] == 1 ? Pol::H : Pol::V};
  return set.contains(p);
}

bool threshold_trigger(const Clicks& c, const std::set<TriggerPattern>& set) {
  for (const auto& p : set) {
    if (c.a[static_cast<int>(p.a)] > 0 && c.b[static_cast<int>(p.b)] > 0) return true;
  }
  return false;
}

FockState after_first_stage(const PolarizationQubit& control, const PolarizationQubit& target,
                            const GateConfig& cfg) {
  const GateInputs in{control, cfg.ancilla1, cfg.ancilla2, target};
  FockState s = prepare_with_distinguishability(cfg.noise.zeta, in);
  s = apply_linear(imperfect_pbs(PbsBasis::HV, cfg.noise.pbs1, kPbs1In, kPbs1Out), s);
  s = apply_linear(imperfect_pbs(PbsBasis::PM, cfg.noise.pbs2, kPbs2In, kPbs2Out), s);
  return s;
}

FockState through_analyzer(const FockState& s, const PbsImperfection& pbs3) {
  return apply_linear(imperfect_pbs(PbsBasis::RL, pbs3, kPbs3In, kPbs3Out), s);
}

// Splits a conditional state on paths 1, 4 (and leftovers) into pure
// two-qubit pieces, one per configuration of everything that is traced out:
// internal modes of photons 1 and 4 and any photons in loss modes.
std::vector<std::pair<double, TwoQubitState>> two_qubit_pieces(const FockState& cond) {
  std::map<OccupationVector, TwoQubitState> pieces;
  for (const auto& [occ, amp] : cond.terms()) {
    if (occ.path_count(Path::P1) != 1 || occ.path_count(Path::P4) != 1) continue;
    OccupationVector env;
    int index = 0;
    for (const auto& [m, n] : occ.entries()) {
      if (m.path == Path::P1) {
        index += 2 * static_cast<int>(m.pol);
        env.add(ModeId{Path::P1, Pol::H, m.internal});
      } else if (m.path == Path::P4) {
        index += static_cast<int>(m.pol);
        env.add(ModeId{Path::P4, Pol::H, m.internal});
      } else {
        env.add(m, n);
      }
    }
    auto [it, inserted] = pieces.try_emplace(env, TwoQubitState::Zero());
    it->second[index] += amp;
  }
  std::vector<std::pair<double, TwoQubitState>> out;
  for (const auto& [env, v] : pieces) {
    const double w = v.squaredNorm();
    if (w < kAmplitudeEpsilon * kAmplitudeEpsilon) continue;
    out.emplace_back(w, v / std::sqrt(w));
  }
  return out;
}

nlohmann::json matrix_json(const Eigen::MatrixXcd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(row);
  }
  return rows;
}

nlohmann::json modes_json(const std::vector<OpticalMode>& modes) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& m : modes) a.push_back(std::string(path_label(m.path)) + ":" + pol_label(m.pol));
  return a;
}

}  // namespace

std::string to_string(TriggerPattern p) { return {pol_label(p.a), pol_label(p.b)}; }

TriggerPattern parse_trigger(std::string_view label) {
  const auto pol = [](char c) {
    if (c == 'H') return Pol::H;
    if (c == 'V') return Pol::V;
    throw std::invalid_argument(std::string("trigger polarization must be H or V, got '") + c + "'");
  };
  if (label.size() != 2) throw std::invalid_argument("trigger label must have two characters");
  return {pol(label[0]), pol(label[1])};
}

const std::array<TriggerPattern, 4>& all_trigger_patterns() {
  static const std::array<TriggerPattern, 4> p = {TriggerPattern{Pol::H, Pol::H}, TriggerPattern{Pol::H, Pol::V},
                                                  TriggerPattern{Pol::V, Pol::H}, TriggerPattern{Pol::V, Pol::V}};
  return p;
}

std::string_view to_string(BellState b) {
  switch (b) {
    case BellState::PhiPlus: return "Phi+";
    case BellState::PhiMinus: return "Phi-";
    case BellState::PsiPlus: return "Psi+";
    case BellState::PsiMinus: return "Psi-";
  }
  return "?";
}

BellOutcome classify(TriggerPattern p) {
  return p.a == p.b ? BellOutcome::PhiMinus : BellOutcome::PsiPlus;
}

void GateConfig::validate() const {
  if (trigger_set.empty()) throw std::invalid_argument("trigger set must not be empty");
  noise.validate();
}

nlohmann::json CircuitDescription::to_json() const {
  nlohmann::json j;
  j["paths"] = nlohmann::json::array();
  for (Path p : paths) j["paths"].push_back(path_label(p));
  j["elements"] = nlohmann::json::array();
  for (const auto& e : elements) {
    j["elements"].push_back({
        {"name", e.name},
        {"kind", "pbs"},
        {"basis", basis_name(e.basis)},
        {"inputs", {path_label(e.in.first), path_label(e.in.second)}},
        {"outputs", {path_label(e.out.first), path_label(e.out.second)}},
        {"input_modes", modes_json(e.transform.inputs)},
        {"output_modes", modes_json(e.transform.outputs)},
        {"matrix", matrix_json(e.transform.matrix)},
    });
  }
  j["detectors"] = detectors;
  return j;
}

CircuitDescription build_gate_circuit(const NoiseParams& noise) {
  CircuitDescription c;
  c.paths.assign(physical_paths().begin(), physical_paths().end());
  c.elements = {
      {"PBS-1", PbsBasis::HV, kPbs1In, kPbs1Out, imperfect_pbs(PbsBasis::HV, noise.pbs1, kPbs1In, kPbs1Out)},
      {"PBS-2", PbsBasis::PM, kPbs2In, kPbs2Out, imperfect_pbs(PbsBasis::PM, noise.pbs2, kPbs2In, kPbs2Out)},
      {"PBS-3", PbsBasis::RL, kPbs3In, kPbs3Out, imperfect_pbs(PbsBasis::RL, noise.pbs3, kPbs3In, kPbs3Out)},
  };
  c.detectors = {"D_A^H", "D_A^V", "D_B^H", "D_B^V"};
  return c;
}

FockState evolve_gate(const PolarizationQubit& control, const PolarizationQubit& target,
                      const GateConfig& cfg) {
  cfg.validate();
  return through_analyzer(after_first_stage(control, target, cfg), cfg.noise.pbs3);
}

TwoQubitOp GateRunResult::density() const {
  if (success_probability <= 0.0) throw DataError("no heralded events: density matrix undefined");
  TwoQubitOp rho = TwoQubitOp::Zero();
  for (const auto& b : branches) rho += b.probability * b.state * b.state.adjoint();
  return rho / success_probability;
}

GateRunResult run_gate(const PolarizationQubit& control, const PolarizationQubit& target,
                       const GateConfig& cfg) {
  const FockState out = evolve_gate(control, target, cfg);
  const TwoQubitOp phi_minus_fix = kron(pauli_z(), Eigen::Matrix2cd::Identity());
  const TwoQubitOp psi_plus_fix = kron(Eigen::Matrix2cd::Identity(), pauli_x());

  GateRunResult result;
  for (const auto& pattern : cfg.trigger_set) {
    const ProjectionResult proj = project(out, detector_modes(), trigger_occupation(pattern), true);
    double pattern_total = 0.0;
    for (const auto& branch : proj.branches) {
      for (auto [w, state] : two_qubit_pieces(branch.state)) {
        if (cfg.apply_feed_forward) {
          state = (classify(pattern) == BellOutcome::PhiMinus ? phi_minus_fix : psi_plus_fix) * state;
        }
        if (cfg.output_unitary) state = *cfg.output_unitary * state;
        const double p = branch.probability * w;
        pattern_total += p;
        result.branches.push_back({p, pattern, state});
      }
    }
    result.outcome_breakdown[pattern] = pattern_total;
    result.success_probability += pattern_total;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Truth tables and visibility

std::string_view to_string(TruthTableBasis b) {
  switch (b) {
    case TruthTableBasis::Computational: return "computational";
    case TruthTableBasis::Complementary: return "complementary";
    case TruthTableBasis::MixedRL: return "mixed-rl";
  }
  return "?";
}

TruthTableBasis parse_basis(std::string_view s) {
  if (s == "computational") return TruthTableBasis::Computational;
  if (s == "complementary") return TruthTableBasis::Complementary;
  if (s == "mixed-rl" || s == "mixed_rl") return TruthTableBasis::MixedRL;
  throw std::invalid_argument("unknown basis '" + std::string(s) + "'");
}

const std::array<std::string, 4>& basis_inputs(TruthTableBasis b) {
  static const std::array<std::string, 4> comp = {"HH", "HV", "VH", "VV"};
  static const std::array<std::string, 4> pm = {"++", "+-", "-+", "--"};
  static const std::array<std::string, 4> mixed = {"+H", "+V", "-H", "-V"};
  switch (b) {
    case TruthTableBasis::Computational: return comp;
    case TruthTableBasis::Complementary: return pm;
    case TruthTableBasis::MixedRL: return mixed;
  }
  throw std::invalid_argument("unknown basis");
}

const std::array<std::string, 4>& basis_outputs(TruthTableBasis b) {
  static const std::array<std::string, 4> rl = {"RR", "RL", "LR", "LL"};
  return b == TruthTableBasis::MixedRL ? rl : basis_inputs(b);
}

double TruthTable::at(std::string_view input, std::string_view outcome) const {
  const auto& ins = basis_inputs(basis);
  const auto& outs = basis_outputs(basis);
  const auto i = std::find(ins.begin(), ins.end(), input);
  const auto o = std::find(outs.begin(), outs.end(), outcome);
  if (i == ins.end() || o == outs.end()) {
    throw std::invalid_argument("label not in " + std::string(to_string(basis)) + " table: " +
                                std::string(input) + "/" + std::string(outcome));
  }
  return probabilities(i - ins.begin(), o - outs.begin());
}

TruthTable truth_table(TruthTableBasis basis, const GateConfig& cfg) {
  TruthTable t{basis, Eigen::Matrix4d::Zero(), {}};
  const auto& ins = basis_inputs(basis);
  const auto& outs = basis_outputs(basis);
  for (int i = 0; i < 4; ++i) {
    const auto& in = ins[static_cast<std::size_t>(i)];
    const GateRunResult r = run_gate(PolarizationQubit::from_label(in[0]),
                                     PolarizationQubit::from_label(in[1]), cfg);
    t.success[static_cast<std::size_t>(i)] = r.success_probability;
    const TwoQubitOp rho = r.density();
    for (int o = 0; o < 4; ++o) {
      t.probabilities(i, o) = state_fidelity(label_state(outs[static_cast<std::size_t>(o)]), rho);
    }
  }
  return t;
}

double correlation_visibility(const TwoQubitOp& rho, PbsBasis basis) {
  const auto [e1, e2] = basis_vectors(basis);
  const auto p = [&rho](const Eigen::Vector2cd& x, const Eigen::Vector2cd& y) {
    TwoQubitState s;
    s << x[0] * y[0], x[0] * y[1], x[1] * y[0], x[1] * y[1];
    return state_fidelity(s, rho);
  };
  const double same = p(e1, e1) + p(e2, e2);
  const double diff = p(e1, e2) + p(e2, e1);
  return (same - diff) / (same + diff);
}

Visibility entangling_visibility(const GateConfig& cfg) {
  const TwoQubitOp rho = run_gate(PolarizationQubit::plus(), PolarizationQubit::H(), cfg).density();
  Visibility v{correlation_visibility(rho, PbsBasis::HV), correlation_visibility(rho, PbsBasis::PM), false};
  v.bell_criterion = std::min(v.hv, v.pm) > kBellVisibilityThreshold;
  return v;
}

// ---------------------------------------------------------------------------
// Bunching audit

nlohmann::json BunchingReport::to_json() const {
  nlohmann::json j;
  j["cases"] = nlohmann::json::array();
  for (const auto& c : cases) {
    j["cases"].push_back({
        {"case", std::to_string(c.distribution[0]) + ":" + std::to_string(c.distribution[1]) + ":" +
                     std::to_string(c.distribution[2]) + ":" + std::to_string(c.distribution[3])},
        {"group", c.group},
        {"probability", c.probability},
        {"trigger_probability", c.trigger_probability},
        {"pnr_trigger_probability", c.pnr_trigger_probability},
        {"threshold_trigger_probability", c.threshold_trigger_probability},
        {"rejected_by_pnr", c.rejected_by_pnr},
    });
  }
  j["total_probability"] = total_probability;
  return j;
}

BunchingReport bunching_audit(const PolarizationQubit& control, const PolarizationQubit& target,
                              const GateConfig& cfg) {
  if (!cfg.noise.is_ideal()) throw std::invalid_argument("bunching audit requires ideal optics");
  cfg.validate();
  const FockState mid = after_first_stage(control, target, cfg);

  // (n1, n4) fixes the case because PBS-1 and PBS-2 each conserve two photons.
  static constexpr std::array<std::array<unsigned, 4>, 9> kOrder = {{
      {1, 1, 1, 1},
      {1, 1, 2, 0}, {1, 1, 0, 2}, {2, 0, 1, 1}, {0, 2, 1, 1}, {2, 0, 0, 2}, {0, 2, 2, 0},
      {2, 0, 2, 0}, {0, 2, 0, 2},
  }};

  BunchingReport report{{}, 0.0};
  for (const auto& dist : kOrder) {
    FockState component;
    for (const auto& [occ, amp] : mid.terms()) {
      if (occ.path_count(Path::P1) == dist[0] && occ.path_count(Path::P2) == dist[1] &&
          occ.path_count(Path::P3) == dist[2] && occ.path_count(Path::P4) == dist[3]) {
        component.add(occ, amp);
      }
    }
    component.prune();

    BunchingCase c{};
    c.distribution = dist;
    const bool all_one = dist == std::array<unsigned, 4>{1, 1, 1, 1};
    c.group = all_one ? 1 : (dist[1] + dist[2] == 2 ? 3 : 2);
    c.rejected_by_pnr = dist[1] + dist[2] != 2;
    c.probability = component.norm_sq();

    const FockState out = through_analyzer(component, cfg.noise.pbs3);
    for (const auto& [occ, amp] : out.terms()) {
      const Clicks k = clicks_of(occ);
      if (pnr_trigger(k, cfg.trigger_set)) c.pnr_trigger_probability += std::norm(amp);
      if (threshold_trigger(k, cfg.trigger_set)) c.threshold_trigger_probability += std::norm(amp);
    }
    c.trigger_probability = cfg.detector == DetectorModel::PhotonNumberResolving
                                ? c.pnr_trigger_probability
                                : c.threshold_trigger_probability;
    report.total_probability += c.probability;
    report.cases.push_back(c);
  }
  return report;
}

std::map<TriggerPattern, double> bell_analyzer_response(BellState b) {
  const Eigen::Vector2cd h = PolarizationQubit::H().vector();
  const Eigen::Vector2cd v = PolarizationQubit::V().vector();
  const auto pair = [](const Eigen::Vector2cd& x, const Eigen::Vector2cd& y) {
    const std::array<PhotonSpec, 2> p = {PhotonSpec{Path::P2, x}, PhotonSpec{Path::P3, y}};
    return create_photons(p);
  };
  FockState s;
  switch (b) {
    case BellState::PhiPlus: s = pair(h, h) + pair(v, v); break;
    case BellState::PhiMinus: s = pair(h, h) - pair(v, v); break;
    case BellState::PsiPlus: s = pair(h, v) + pair(v, h); break;
    case BellState::PsiMinus: s = pair(h, v) - pair(v, h); break;
  }
  s = through_analyzer(s.normalized(), PbsImperfection{});

  std::map<TriggerPattern, double> response;
  for (const auto& p : all_trigger_patterns()) {
    response[p] = project(s, detector_modes(), trigger_occupation(p), true).probability;
  }
  return response;
}

}  // namespace cnotsim
