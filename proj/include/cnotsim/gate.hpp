#pragma once

// The nondestructive CNOT: four single photons on paths c, a1, a2, t pass
// PBS-1 (H/V, c a1 -> 1 2), PBS-2 (+/-, a2 t -> 3 4) and PBS-3 (R/L, 2 3 -> A B).
// A coincidence between detectors behind A and B heralds success; photons 1
// and 4 then carry the CNOT output after a one-bit Pauli correction.

#include "cnotsim/fock.hpp"
#include "cnotsim/noise.hpp"
#include "cnotsim/optics.hpp"
#include "cnotsim/two_qubit.hpp"

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace cnotsim {

/// Coincidence (D_A^a, D_B^b).
struct TriggerPattern {
  Pol a;
  Pol b;
  auto operator<=>(const TriggerPattern&) const = default;
};

std::string to_string(TriggerPattern p);
TriggerPattern parse_trigger(std::string_view label);
const std::array<TriggerPattern, 4>& all_trigger_patterns();

enum class BellState { PhiPlus, PhiMinus, PsiPlus, PsiMinus };
/// Only these two are heralded by the analyzer.
enum class BellOutcome { PhiMinus, PsiPlus };

std::string_view to_string(BellState b);
/// PhiMinus for same-letter coincidences, PsiPlus for crossed ones.
BellOutcome classify(TriggerPattern p);

enum class DetectorModel { PhotonNumberResolving, Threshold };

struct GateConfig {
  std::set<TriggerPattern> trigger_set{all_trigger_patterns().begin(), all_trigger_patterns().end()};
  bool apply_feed_forward = true;
  NoiseParams noise;
  DetectorModel detector = DetectorModel::PhotonNumberResolving;
  PolarizationQubit ancilla1 = PolarizationQubit::plus();
  PolarizationQubit ancilla2 = PolarizationQubit::H();
  /// Applied to every heralded output after feed-forward.
  std::optional<TwoQubitOp> output_unitary;

  void validate() const;
};

struct CircuitElement {
  std::string name;
  PbsBasis basis;
  PathPair in;
  PathPair out;
  LinearTransform transform;
};

struct CircuitDescription {
  std::vector<Path> paths;
  std::vector<CircuitElement> elements;
  std::vector<std::string> detectors;

  nlohmann::json to_json() const;
};

CircuitDescription build_gate_circuit(const NoiseParams& noise = {});

/// Full output state (all paths, loss and internal modes) for one input pair.
FockState evolve_gate(const PolarizationQubit& control, const PolarizationQubit& target,
                      const GateConfig& cfg);

struct GateBranch {
  double probability;  // joint probability of this heralded branch
  TriggerPattern pattern;
  TwoQubitState state;  // normalized, after feed-forward
};

struct GateRunResult {
  double success_probability = 0.0;
  std::vector<GateBranch> branches;
  std::map<TriggerPattern, double> outcome_breakdown;

  /// Heralded two-qubit density matrix (branch mixture, trace 1). Throws
  /// DataError when nothing was heralded.
  TwoQubitOp density() const;
};

/// Heralded events are four-fold: a trigger pattern on A/B plus exactly one
/// photon on each of paths 1 and 4. Detectors do not resolve internal modes.
GateRunResult run_gate(const PolarizationQubit& control, const PolarizationQubit& target,
                       const GateConfig& cfg = {});

enum class TruthTableBasis { Computational, Complementary, MixedRL };

std::string_view to_string(TruthTableBasis b);
TruthTableBasis parse_basis(std::string_view s);
const std::array<std::string, 4>& basis_inputs(TruthTableBasis b);
const std::array<std::string, 4>& basis_outputs(TruthTableBasis b);

struct TruthTable {
  TruthTableBasis basis;
  Eigen::Matrix4d probabilities;  // row: input, column: outcome
  std::array<double, 4> success;  // heralding probability per input

  double at(std::string_view input, std::string_view outcome) const;
};

TruthTable truth_table(TruthTableBasis basis, const GateConfig& cfg = {});

inline constexpr double kBellVisibilityThreshold = 0.71;

struct Visibility {
  double hv;
  double pm;
  bool bell_criterion;  // min(hv, pm) > 0.71
};

/// Correlation visibility (P_same - P_diff) / (P_same + P_diff) of photons 1
/// and 4 for the input |+>|H>, analyzed in H/V and in +/-.
Visibility entangling_visibility(const GateConfig& cfg = {});
double correlation_visibility(const TwoQubitOp& rho, PbsBasis basis);

struct BunchingCase {
  std::array<unsigned, 4> distribution;  // n1:n2:n3:n4 after PBS-1 and PBS-2
  int group;
  double probability;
  double pnr_trigger_probability;  // joint with this case
  double threshold_trigger_probability;
  double trigger_probability;  // under cfg.detector
  bool rejected_by_pnr;  // group 2: n2 + n3 != 2
};

struct BunchingReport {
  std::vector<BunchingCase> cases;  // group 1, then 2, then 3
  double total_probability;

  nlohmann::json to_json() const;
};

/// Requires ideal optics. Throws std::invalid_argument otherwise.
BunchingReport bunching_audit(const PolarizationQubit& control, const PolarizationQubit& target,
                              const GateConfig& cfg = {});

/// Pattern probabilities when photons 2 and 3 enter PBS-3 directly in a Bell state.
std::map<TriggerPattern, double> bell_analyzer_response(BellState b);

}  // namespace cnotsim
