#include "cnotsim/optics.hpp"

#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

namespace cnotsim {

namespace {

constexpr cplx kI{0.0, 1.0};

void require_distinct(PathPair in, PathPair out) {
  const std::set<Path> s{in.first, in.second, out.first, out.second};
  if (s.size() != 4) throw std::invalid_argument("PBS ports must be four distinct paths");
}

Eigen::Matrix2d rotation(double theta) {
  Eigen::Matrix2d r;
  r << std::cos(theta), std::sin(theta), -std::sin(theta), std::cos(theta);
  return r;
}

}  // namespace

std::string_view basis_name(PbsBasis b) {
  switch (b) {
    case PbsBasis::HV: return "HV";
    case PbsBasis::PM: return "PM";
    case PbsBasis::RL: return "RL";
  }
  return "?";
}

std::pair<Eigen::Vector2cd, Eigen::Vector2cd> basis_vectors(PbsBasis b) {
  switch (b) {
    case PbsBasis::HV: return {PolarizationQubit::H().vector(), PolarizationQubit::V().vector()};
    case PbsBasis::PM: return {PolarizationQubit::plus().vector(), PolarizationQubit::minus().vector()};
    case PbsBasis::RL: return {PolarizationQubit::right().vector(), PolarizationQubit::left().vector()};
  }
  throw std::invalid_argument("unknown PBS basis");
}

LinearTransform pbs(PbsBasis basis, PathPair in, PathPair out, cplx reflection_phase) {
  require_distinct(in, out);
  const auto [e1, e2] = basis_vectors(basis);
  const Eigen::Matrix2cd keep = e1 * e1.adjoint();
  const Eigen::Matrix2cd swap = reflection_phase * (e2 * e2.adjoint());

  LinearTransform t;
  t.inputs = {{in.first, Pol::H}, {in.first, Pol::V}, {in.second, Pol::H}, {in.second, Pol::V}};
  t.outputs = {{out.first, Pol::H}, {out.first, Pol::V}, {out.second, Pol::H}, {out.second, Pol::V}};
  t.matrix = Eigen::MatrixXcd::Zero(4, 4);
  // p: transmit -> r, reflect -> s.  q: transmit -> s, reflect -> r.
  t.matrix.block(0, 0, 2, 2) = keep;
  t.matrix.block(2, 0, 2, 2) = swap;
  t.matrix.block(2, 2, 2, 2) = keep;
  t.matrix.block(0, 2, 2, 2) = swap;
  return t;
}

Jones retarder(double angle, double retardance) {
  Eigen::Matrix2cd d = Eigen::Matrix2cd::Zero();
  d(0, 0) = std::exp(-kI * retardance / 2.0);
  d(1, 1) = std::exp(kI * retardance / 2.0);
  const Eigen::Matrix2cd r = rotation(angle).cast<cplx>();
  return r.transpose() * d * r;
}

Jones WavePlate::jones() const {
  if (!std::isfinite(angle)) throw std::invalid_argument("wave plate angle must be finite");
  return retarder(angle, kind == PlateKind::Half ? M_PI : M_PI / 2.0);
}

LinearTransform jones_element(const Jones& j, Path path) {
  LinearTransform t;
  t.inputs = {{path, Pol::H}, {path, Pol::V}};
  t.outputs = t.inputs;
  t.matrix = j;
  return t;
}

LinearTransform waveplate(const WavePlate& w, Path path) { return jones_element(w.jones(), path); }

LinearTransform polarizer(Path path, const PolarizationQubit& axis) {
  const Eigen::Vector2cd a = axis.vector();
  const Eigen::Vector2cd b = axis.orthogonal().vector();
  const Path loss = loss_path(path);
  LinearTransform t;
  t.inputs = {{path, Pol::H}, {path, Pol::V}};
  t.outputs = {{path, Pol::H}, {path, Pol::V}, {loss, Pol::H}, {loss, Pol::V}};
  t.matrix = Eigen::MatrixXcd::Zero(4, 2);
  t.matrix.block(0, 0, 2, 2) = a * a.adjoint();
  t.matrix.block(2, 0, 2, 2) = b * b.adjoint();
  return t;
}

LinearTransform phase_delay(Path path, double phi) {
  return jones_element(std::exp(kI * phi) * Jones::Identity(), path);
}

LinearTransform compose(std::span<const LinearTransform> sequence) {
  // External inputs in order of first appearance.
  std::vector<OpticalMode> inputs;
  std::set<OpticalMode> produced;
  std::set<OpticalMode> seen_inputs;
  for (const auto& t : sequence) {
    for (const auto& m : t.inputs) {
      if (!produced.contains(m) && seen_inputs.insert(m).second) inputs.push_back(m);
    }
    produced.insert(t.outputs.begin(), t.outputs.end());
  }

  std::vector<std::map<OpticalMode, cplx>> columns;
  std::set<OpticalMode> support;
  for (const auto& start : inputs) {
    std::map<OpticalMode, cplx> amp{{start, 1.0}};
    for (const auto& t : sequence) {
      std::map<OpticalMode, cplx> next;
      for (const auto& [m, a] : amp) {
        const auto it = std::find(t.inputs.begin(), t.inputs.end(), m);
        if (it == t.inputs.end()) {
          next[m] += a;
          continue;
        }
        const auto j = static_cast<Eigen::Index>(it - t.inputs.begin());
        for (Eigen::Index i = 0; i < t.matrix.rows(); ++i) {
          next[t.outputs[static_cast<std::size_t>(i)]] += a * t.matrix(i, j);
        }
      }
      amp = std::move(next);
    }
    for (const auto& [m, a] : amp) {
      if (std::abs(a) >= kAmplitudeEpsilon) support.insert(m);
    }
    columns.push_back(std::move(amp));
  }

  LinearTransform out;
  out.inputs = inputs;
  out.outputs.assign(support.begin(), support.end());
  out.matrix = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(out.outputs.size()),
                                      static_cast<Eigen::Index>(inputs.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) {
    for (std::size_t i = 0; i < out.outputs.size(); ++i) {
      const auto it = columns[j].find(out.outputs[i]);
      if (it != columns[j].end()) {
        out.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = it->second;
      }
    }
  }
  return out;
}

double deviation_up_to_phase(const LinearTransform& a, const LinearTransform& b) {
  std::map<std::pair<OpticalMode, OpticalMode>, std::pair<cplx, cplx>> cells;
  const auto collect = [&cells](const LinearTransform& t, bool first) {
    for (std::size_t j = 0; j < t.inputs.size(); ++j) {
      for (std::size_t i = 0; i < t.outputs.size(); ++i) {
        auto& c = cells[{t.outputs[i], t.inputs[j]}];
        (first ? c.first : c.second) =
            t.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      }
    }
  };
  collect(a, true);
  collect(b, false);

  // Phase from the largest entry of `a`.
  cplx ref_a{};
  cplx ref_b{};
  for (const auto& [k, v] : cells) {
    if (std::abs(v.first) > std::abs(ref_a)) {
      ref_a = v.first;
      ref_b = v.second;
    }
  }
  cplx phase{1.0};
  if (std::abs(ref_a) > 0.0 && std::abs(ref_b) > 0.0) {
    phase = (ref_a / ref_b) / std::abs(ref_a / ref_b);
  }
  double dev = 0.0;
  for (const auto& [k, v] : cells) dev = std::max(dev, std::abs(v.first - phase * v.second));
  return dev;
}

std::pair<LinearTransform, LinearTransform> pbs_sandwich_equivalence(PbsBasis basis, PathPair in,
                                                                     PathPair out) {
  LinearTransform direct = pbs(basis, in, out);
  if (basis == PbsBasis::HV) return {direct, direct};

  WavePlate before{};
  WavePlate after{};
  if (basis == PbsBasis::PM) {
    before = after = {PlateKind::Half, M_PI / 8.0};
  } else {
    before = {PlateKind::Quarter, M_PI / 4.0};
    after = {PlateKind::Quarter, -M_PI / 4.0};
  }
  const std::vector<LinearTransform> seq = {
      waveplate(before, in.first),   waveplate(before, in.second), pbs(PbsBasis::HV, in, out),
      waveplate(after, out.first),   waveplate(after, out.second),
  };
  return {direct, compose(seq)};
}

}  // namespace cnotsim
