#pragma once

// Imperfection models: partial temporal overlap between the two photon pairs
// and leaky/crosstalking polarizing beam splitters.

#include "cnotsim/fock.hpp"
#include "cnotsim/optics.hpp"

#include <nlohmann/json_fwd.hpp>

namespace cnotsim {

/// Where one eigen-polarization of a PBS goes. For the transmit-basis state
/// `through` is the intended port; for the reflect-basis state `cross` is.
/// Whatever remains, sqrt(1 - |through|^2 - |cross|^2), goes to a loss mode.
struct PortAmplitudes {
  cplx through{1.0};
  cplx cross{0.0};

  double leak() const;
};

struct PbsImperfection {
  PortAmplitudes transmit_state{1.0, 0.0};
  PortAmplitudes reflect_state{0.0, 1.0};

  /// Each eigen-polarization sends amplitude `w` to the wrong port with an i
  /// phase (the only phase that keeps the two inputs orthogonal).
  static PbsImperfection crosstalk(double w);
  /// Each eigen-polarization loses amplitude `leak` to the loss mode.
  static PbsImperfection lossy(double transmit_leak, double reflect_leak);

  bool is_ideal() const;
  /// Throws std::invalid_argument if the amplitudes cannot form an isometry.
  void validate() const;
};

/// Amplitude -> intensity fraction, |a|^2.
inline double intensity_fraction(cplx amplitude) { return std::norm(amplitude); }

struct NoiseParams {
  /// Temporal-mode overlap between pair A {c, a1} and pair B {a2, t}.
  double zeta = 1.0;
  PbsImperfection pbs1;
  PbsImperfection pbs2;
  PbsImperfection pbs3;

  bool is_ideal() const;
  void validate() const;

  /// Parses a JSON config block; missing fields keep their ideal values.
  /// Throws std::invalid_argument on out-of-range or non-isometric values.
  static NoiseParams from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// Generalized PBS with polarization-dependent crosstalk and leakage. Leaked
/// amplitude from input path p goes to loss_path(p), keeping its polarization.
LinearTransform imperfect_pbs(PbsBasis basis, const PbsImperfection& amplitudes, PathPair in,
                              PathPair out);

/// Internal-mode amplitudes of pair-B photons: zeta on mode 0, sqrt(1-zeta^2) on mode 1.
std::array<cplx, kInternalModes> pair_b_internal(double zeta);

struct GateInputs {
  PolarizationQubit control = PolarizationQubit::H();
  PolarizationQubit ancilla1 = PolarizationQubit::plus();
  PolarizationQubit ancilla2 = PolarizationQubit::H();
  PolarizationQubit target = PolarizationQubit::H();
};

/// Four-photon product input on c, a1, a2, t with pair A in internal mode 0
/// and pair B in the zeta superposition.
FockState prepare_with_distinguishability(double zeta, const GateInputs& in);

}  // namespace cnotsim
