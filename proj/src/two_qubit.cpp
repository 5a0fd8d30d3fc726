#include "cnotsim/two_qubit.hpp"

#include <stdexcept>
#include <string>

namespace cnotsim {

const Eigen::Matrix2cd& pauli_x() {
  static const Eigen::Matrix2cd m = (Eigen::Matrix2cd() << 0, 1, 1, 0).finished();
  return m;
}

const Eigen::Matrix2cd& pauli_z() {
  static const Eigen::Matrix2cd m = (Eigen::Matrix2cd() << 1, 0, 0, -1).finished();
  return m;
}

TwoQubitOp kron(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) {
  TwoQubitOp k;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) k.block(2 * i, 2 * j, 2, 2) = a(i, j) * b;
  }
  return k;
}

const TwoQubitOp& cnot() {
  static const TwoQubitOp m =
      (TwoQubitOp() << 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 1, 0, 0, 1, 0).finished();
  return m;
}

TwoQubitState product_state(const PolarizationQubit& a, const PolarizationQubit& b) {
  TwoQubitState s;
  s << a.alpha() * b.alpha(), a.alpha() * b.beta(), a.beta() * b.alpha(), a.beta() * b.beta();
  return s;
}

TwoQubitState label_state(std::string_view label) {
  if (label.size() != 2) throw std::invalid_argument("two-qubit label must have two characters: " + std::string(label));
  return product_state(PolarizationQubit::from_label(label[0]), PolarizationQubit::from_label(label[1]));
}

double state_fidelity(const TwoQubitState& a, const TwoQubitState& b) { return std::norm(a.dot(b)); }

double state_fidelity(const TwoQubitState& psi, const TwoQubitOp& rho) {
  return (psi.adjoint() * rho * psi)(0, 0).real();
}

}  // namespace cnotsim
