#pragma once

// Two-qubit polarization states of photons 1 (control) and 4 (target).
// Basis order |HH>, |HV>, |VH>, |VV> with photon 1 as the left factor.

#include "cnotsim/fock.hpp"

#include <Eigen/Dense>

#include <string_view>

namespace cnotsim {

using TwoQubitState = Eigen::Vector4cd;
using TwoQubitOp = Eigen::Matrix4cd;

const Eigen::Matrix2cd& pauli_x();
const Eigen::Matrix2cd& pauli_z();
TwoQubitOp kron(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b);
const TwoQubitOp& cnot();

TwoQubitState product_state(const PolarizationQubit& a, const PolarizationQubit& b);
/// Two-character label such as "+H" or "RL".
TwoQubitState label_state(std::string_view label);

/// |<a|b>|^2 for normalized states; global phase is irrelevant.
double state_fidelity(const TwoQubitState& a, const TwoQubitState& b);
/// <psi|rho|psi>
double state_fidelity(const TwoQubitState& psi, const TwoQubitOp& rho);

}  // namespace cnotsim
