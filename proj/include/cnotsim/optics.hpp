#pragma once

// Concrete optical elements expressed as LinearTransforms.
//
// Conventions (printed by `cnotsim --explain`):
//  * A PBS routes the transmit-basis component of input p to output r and of
//    input q to output s; reflect-basis components cross over. Transmission
//    and reflection amplitudes are both +1 (kReflectionPhase), no i phase.
//  * A retarder with fast axis theta and retardance G has Jones matrix
//    R(-theta) diag(e^{-iG/2}, e^{iG/2}) R(theta). Global phases are never
//    physically meaningful; equivalence checks quotient them out.

#include "cnotsim/fock.hpp"

#include <span>
#include <utility>

namespace cnotsim {

using Jones = Eigen::Matrix2cd;

/// Reflection amplitude of every ideal PBS. Kept as one constant so the
/// i-phase convention can be exercised by passing cplx(0, 1) explicitly.
inline constexpr cplx kReflectionPhase{1.0, 0.0};

enum class PbsBasis { HV, PM, RL };

std::string_view basis_name(PbsBasis b);

/// (transmitted, reflected) basis vectors in H/V coordinates.
std::pair<Eigen::Vector2cd, Eigen::Vector2cd> basis_vectors(PbsBasis b);

struct PathPair {
  Path first;
  Path second;
};

LinearTransform pbs(PbsBasis basis, PathPair in, PathPair out, cplx reflection_phase = kReflectionPhase);

enum class PlateKind { Half, Quarter };

struct WavePlate {
  PlateKind kind;
  double angle;  // fast-axis orientation, radians

  Jones jones() const;
};

Jones retarder(double angle, double retardance);

/// Arbitrary 2x2 polarization map applied in place on one path.
LinearTransform jones_element(const Jones& j, Path path);
LinearTransform waveplate(const WavePlate& w, Path path);

/// Keeps the `axis` component on `path` and sends the orthogonal component,
/// with its polarization, to loss_path(path).
LinearTransform polarizer(Path path, const PolarizationQubit& axis);

/// e^{i phi} on both polarizations of `path`.
LinearTransform phase_delay(Path path, double phi);

/// Single-photon composition: elements apply in sequence order. Inputs are
/// every mode consumed before it is produced; outputs are the sorted union of
/// modes reached with non-zero amplitude.
LinearTransform compose(std::span<const LinearTransform> sequence);

/// Largest elementwise deviation between two transforms after removing the
/// best global phase. Missing rows/columns count as zeros.
double deviation_up_to_phase(const LinearTransform& a, const LinearTransform& b);

/// (direct generalized PBS, HV PBS wrapped in wave plates). PM uses HWPs at
/// 22.5 degrees on all four ports; RL uses QWPs at +45 degrees on the inputs
/// and -45 degrees on the outputs. HV returns the bare PBS twice.
std::pair<LinearTransform, LinearTransform> pbs_sandwich_equivalence(PbsBasis basis, PathPair in,
                                                                     PathPair out);

}  // namespace cnotsim
