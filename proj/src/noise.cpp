#include "cnotsim/noise.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace cnotsim {

namespace {

constexpr double kTol = 1e-12;

void check_ports(const PortAmplitudes& a, const char* which) {
  const double used = std::norm(a.through) + std::norm(a.cross);
  if (!std::isfinite(used) || used > 1.0 + kTol) {
    throw std::invalid_argument(std::string(which) + ": |through|^2 + |cross|^2 exceeds 1");
  }
  // Inputs p and q share the same amplitudes with ports swapped, so their
  // images overlap by 2 Re(conj(through) * cross).
  if (std::abs((std::conj(a.through) * a.cross).real()) > kTol) {
    throw std::invalid_argument(std::string(which) +
                                ": through and cross amplitudes must be in quadrature");
  }
}

cplx parse_amplitude(const nlohmann::json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2) return {j[0].get<double>(), j[1].get<double>()};
  throw std::invalid_argument("amplitude must be a number or [re, im]");
}

nlohmann::json amplitude_json(cplx a) {
  if (a.imag() == 0.0) return a.real();
  return nlohmann::json::array({a.real(), a.imag()});
}

PortAmplitudes parse_ports(const nlohmann::json& j, PortAmplitudes fallback) {
  if (j.contains("through")) fallback.through = parse_amplitude(j.at("through"));
  if (j.contains("cross")) fallback.cross = parse_amplitude(j.at("cross"));
  return fallback;
}

PbsImperfection parse_pbs(const nlohmann::json& j) {
  PbsImperfection p;
  if (j.contains("crosstalk")) p = PbsImperfection::crosstalk(j.at("crosstalk").get<double>());
  if (j.contains("transmit_state")) p.transmit_state = parse_ports(j.at("transmit_state"), p.transmit_state);
  if (j.contains("reflect_state")) p.reflect_state = parse_ports(j.at("reflect_state"), p.reflect_state);
  p.validate();
  return p;
}

nlohmann::json pbs_json(const PbsImperfection& p) {
  return {{"transmit_state",
           {{"through", amplitude_json(p.transmit_state.through)},
            {"cross", amplitude_json(p.transmit_state.cross)}}},
          {"reflect_state",
           {{"through", amplitude_json(p.reflect_state.through)},
            {"cross", amplitude_json(p.reflect_state.cross)}}}};
}

}  // namespace

double PortAmplitudes::leak() const {
  return std::sqrt(std::max(0.0, 1.0 - std::norm(through) - std::norm(cross)));
}

PbsImperfection PbsImperfection::crosstalk(double w) {
  if (!(w >= 0.0 && w <= 1.0)) throw std::invalid_argument("crosstalk amplitude must be in [0, 1]");
  const double keep = std::sqrt(1.0 - w * w);
  return {{keep, cplx(0.0, w)}, {cplx(0.0, w), keep}};
}

PbsImperfection PbsImperfection::lossy(double transmit_leak, double reflect_leak) {
  if (!(transmit_leak >= 0.0 && transmit_leak <= 1.0 && reflect_leak >= 0.0 && reflect_leak <= 1.0)) {
    throw std::invalid_argument("leak amplitudes must be in [0, 1]");
  }
  return {{std::sqrt(1.0 - transmit_leak * transmit_leak), 0.0},
          {0.0, std::sqrt(1.0 - reflect_leak * reflect_leak)}};
}

bool PbsImperfection::is_ideal() const {
  return transmit_state.through == cplx(1.0) && transmit_state.cross == cplx(0.0) &&
         reflect_state.through == cplx(0.0) && reflect_state.cross == cplx(1.0);
}

void PbsImperfection::validate() const {
  check_ports(transmit_state, "transmit_state");
  check_ports(reflect_state, "reflect_state");
}

bool NoiseParams::is_ideal() const {
  return zeta == 1.0 && pbs1.is_ideal() && pbs2.is_ideal() && pbs3.is_ideal();
}

void NoiseParams::validate() const {
  if (!(zeta >= 0.0 && zeta <= 1.0)) throw std::invalid_argument("zeta must be in [0, 1]");
  pbs1.validate();
  pbs2.validate();
  pbs3.validate();
}

NoiseParams NoiseParams::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("noise config must be a JSON object");
  NoiseParams n;
  try {
    if (j.contains("zeta")) n.zeta = j.at("zeta").get<double>();
    if (j.contains("pbs1")) n.pbs1 = parse_pbs(j.at("pbs1"));
    if (j.contains("pbs2")) n.pbs2 = parse_pbs(j.at("pbs2"));
    if (j.contains("pbs3")) n.pbs3 = parse_pbs(j.at("pbs3"));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("noise config: ") + e.what());
  }
  n.validate();
  return n;
}

nlohmann::json NoiseParams::to_json() const {
  return {{"zeta", zeta}, {"pbs1", pbs_json(pbs1)}, {"pbs2", pbs_json(pbs2)}, {"pbs3", pbs_json(pbs3)}};
}

LinearTransform imperfect_pbs(PbsBasis basis, const PbsImperfection& amplitudes, PathPair in,
                              PathPair out) {
  amplitudes.validate();
  if (amplitudes.is_ideal()) return pbs(basis, in, out);

  const auto [e1, e2] = basis_vectors(basis);
  const Eigen::Matrix2cd p1 = e1 * e1.adjoint();
  const Eigen::Matrix2cd p2 = e2 * e2.adjoint();
  const auto& t = amplitudes.transmit_state;
  const auto& r = amplitudes.reflect_state;
  const Eigen::Matrix2cd through = t.through * p1 + r.through * p2;
  const Eigen::Matrix2cd cross = t.cross * p1 + r.cross * p2;
  const Eigen::Matrix2cd leak = t.leak() * p1 + r.leak() * p2;

  const Path loss_p = loss_path(in.first);
  const Path loss_q = loss_path(in.second);
  LinearTransform x = pbs(basis, in, out);  // validates ports
  x.outputs.insert(x.outputs.end(),
                   {{loss_p, Pol::H}, {loss_p, Pol::V}, {loss_q, Pol::H}, {loss_q, Pol::V}});
  x.matrix = Eigen::MatrixXcd::Zero(8, 4);
  x.matrix.block(0, 0, 2, 2) = through;
  x.matrix.block(2, 0, 2, 2) = cross;
  x.matrix.block(4, 0, 2, 2) = leak;
  x.matrix.block(2, 2, 2, 2) = through;
  x.matrix.block(0, 2, 2, 2) = cross;
  x.matrix.block(6, 2, 2, 2) = leak;
  return x;
}

std::array<cplx, kInternalModes> pair_b_internal(double zeta) {
  if (!(zeta >= 0.0 && zeta <= 1.0)) throw std::invalid_argument("zeta must be in [0, 1]");
  return {cplx(zeta), cplx(std::sqrt(1.0 - zeta * zeta))};
}

FockState prepare_with_distinguishability(double zeta, const GateInputs& in) {
  const auto b = pair_b_internal(zeta);
  const std::array<cplx, kInternalModes> a{cplx(1.0), cplx(0.0)};
  const std::array<PhotonSpec, 4> photons = {
      PhotonSpec{Path::C, in.control.vector(), a},
      PhotonSpec{Path::A1, in.ancilla1.vector(), a},
      PhotonSpec{Path::A2, in.ancilla2.vector(), b},
      PhotonSpec{Path::T, in.target.vector(), b},
  };
  return create_photons(photons);
}

}  // namespace cnotsim
