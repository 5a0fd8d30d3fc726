#include "cnotsim/fock.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace cnotsim {

namespace {

constexpr std::array<std::string_view, kPathCount> kPathLabels = {
    "c",      "a1",      "a2",      "t",      "1",      "2",      "3",
    "4",      "A",       "B",       "loss_c", "loss_a1", "loss_a2", "loss_t",
    "loss_1", "loss_2",  "loss_3",  "loss_4", "loss_A",  "loss_B",
};

double sqrt_factorial(unsigned n) {
  double f = 1.0;
  for (unsigned k = 2; k <= n; ++k) f *= static_cast<double>(k);
  return std::sqrt(f);
}

void check_mode(const ModeId& m) {
  if (static_cast<std::size_t>(m.path) >= kPathCount) {
    throw std::invalid_argument("mode on unregistered path");
  }
  if (m.internal >= kInternalModes) {
    throw std::invalid_argument("internal mode index out of range");
  }
}

// prod sqrt(n!) over all modes of an occupation.
double occupation_norm(const OccupationVector& occ) {
  double f = 1.0;
  for (const auto& [m, n] : occ.entries()) f *= sqrt_factorial(n);
  return f;
}

using Polynomial = std::map<OccupationVector, cplx>;

// Multiplies a polynomial in creation operators by one more linear form.
Polynomial multiply(const Polynomial& poly, std::span<const std::pair<ModeId, cplx>> form) {
  Polynomial out;
  for (const auto& [mono, c] : poly) {
    for (const auto& [mode, coeff] : form) {
      OccupationVector next = mono;
      next.add(mode);
      out[next] += c * coeff;
    }
  }
  return out;
}

}  // namespace

std::string_view path_label(Path p) {
  const auto i = static_cast<std::size_t>(p);
  if (i >= kPathCount) throw std::invalid_argument("unregistered path");
  return kPathLabels[i];
}

Path parse_path(std::string_view label) {
  const auto it = std::find(kPathLabels.begin(), kPathLabels.end(), label);
  if (it == kPathLabels.end()) {
    throw std::invalid_argument("unknown path label '" + std::string(label) + "'");
  }
  return static_cast<Path>(it - kPathLabels.begin());
}

bool is_loss_path(Path p) { return static_cast<std::size_t>(p) >= 10; }

Path loss_path(Path p) {
  if (is_loss_path(p)) throw std::invalid_argument("loss paths have no loss path");
  return static_cast<Path>(static_cast<std::size_t>(p) + 10);
}

const std::array<Path, 10>& physical_paths() {
  static const std::array<Path, 10> paths = {Path::C,  Path::A1, Path::A2, Path::T, Path::P1,
                                             Path::P2, Path::P3, Path::P4, Path::A, Path::B};
  return paths;
}

char pol_label(Pol p) { return p == Pol::H ? 'H' : 'V'; }

std::string to_string(const ModeId& m) {
  std::ostringstream os;
  os << path_label(m.path) << ':' << pol_label(m.pol);
  if (m.internal != 0) os << '#' << static_cast<int>(m.internal);
  return os.str();
}

// ---------------------------------------------------------------------------
// OccupationVector

OccupationVector::OccupationVector(std::initializer_list<std::pair<ModeId, unsigned>> init) {
  for (const auto& [m, n] : init) add(m, n);
}

unsigned OccupationVector::count(const ModeId& m) const {
  const auto it = std::lower_bound(entries_.begin(), entries_.end(), m,
                                   [](const auto& e, const ModeId& key) { return e.first < key; });
  return (it != entries_.end() && it->first == m) ? it->second : 0;
}

unsigned OccupationVector::path_count(Path p) const {
  unsigned n = 0;
  for (const auto& [m, c] : entries_) {
    if (m.path == p) n += c;
  }
  return n;
}

unsigned OccupationVector::optical_count(const OpticalMode& om) const {
  unsigned n = 0;
  for (const auto& [m, c] : entries_) {
    if (m.optical() == om) n += c;
  }
  return n;
}

void OccupationVector::add(const ModeId& m, unsigned n) {
  check_mode(m);
  if (n == 0) return;
  const auto it = std::lower_bound(entries_.begin(), entries_.end(), m,
                                   [](const auto& e, const ModeId& key) { return e.first < key; });
  if (it != entries_.end() && it->first == m) {
    it->second += n;
  } else {
    entries_.insert(it, {m, n});
  }
  total_ += n;
}

void OccupationVector::set(const ModeId& m, unsigned n) {
  check_mode(m);
  const auto it = std::lower_bound(entries_.begin(), entries_.end(), m,
                                   [](const auto& e, const ModeId& key) { return e.first < key; });
  if (it != entries_.end() && it->first == m) {
    total_ -= it->second;
    if (n == 0) {
      entries_.erase(it);
    } else {
      it->second = n;
      total_ += n;
    }
  } else if (n != 0) {
    entries_.insert(it, {m, n});
    total_ += n;
  }
}

std::string to_string(const OccupationVector& occ) {
  if (occ.empty()) return "|0>";
  std::ostringstream os;
  os << '|';
  bool first = true;
  for (const auto& [m, n] : occ.entries()) {
    if (!first) os << ',';
    first = false;
    os << to_string(m);
    if (n > 1) os << '^' << n;
  }
  os << '>';
  return os.str();
}

// ---------------------------------------------------------------------------
// PolarizationQubit

PolarizationQubit PolarizationQubit::make(cplx alpha, cplx beta) {
  const double n = std::norm(alpha) + std::norm(beta);
  if (!std::isfinite(n) || std::abs(n - 1.0) > 1e-12) {
    throw std::invalid_argument("polarization qubit is not normalized");
  }
  return {alpha, beta};
}

PolarizationQubit PolarizationQubit::plus() { return {M_SQRT1_2, M_SQRT1_2}; }
PolarizationQubit PolarizationQubit::minus() { return {M_SQRT1_2, -M_SQRT1_2}; }
PolarizationQubit PolarizationQubit::right() { return {M_SQRT1_2, cplx(0.0, M_SQRT1_2)}; }
PolarizationQubit PolarizationQubit::left() { return {M_SQRT1_2, cplx(0.0, -M_SQRT1_2)}; }

PolarizationQubit PolarizationQubit::from_label(char c) {
  switch (c) {
    case 'H': return H();
    case 'V': return V();
    case '+': return plus();
    case '-': return minus();
    case 'R': return right();
    case 'L': return left();
    default: throw std::invalid_argument(std::string("unknown polarization label '") + c + "'");
  }
}

// ---------------------------------------------------------------------------
// FockState

FockState FockState::vacuum() { return basis(OccupationVector{}); }

FockState FockState::basis(const OccupationVector& occ, cplx amplitude) {
  FockState s;
  s.add(occ, amplitude);
  s.prune();
  return s;
}

void FockState::add(const OccupationVector& occ, cplx amplitude) { terms_[occ] += amplitude; }

void FockState::prune(double eps) {
  std::erase_if(terms_, [eps](const auto& kv) { return std::abs(kv.second) < eps; });
}

cplx FockState::amplitude(const OccupationVector& occ) const {
  const auto it = terms_.find(occ);
  return it == terms_.end() ? cplx{} : it->second;
}

double FockState::norm_sq() const {
  double n = 0.0;
  for (const auto& [occ, a] : terms_) n += std::norm(a);
  return n;
}

FockState FockState::normalized() const {
  const double n = norm_sq();
  if (n <= 0.0) throw std::invalid_argument("cannot normalize a zero state");
  return *this * cplx(1.0 / std::sqrt(n));
}

FockState FockState::operator*(cplx s) const {
  FockState out;
  for (const auto& [occ, a] : terms_) out.terms_.emplace(occ, a * s);
  out.prune();
  return out;
}

FockState FockState::operator+(const FockState& o) const {
  FockState out = *this;
  for (const auto& [occ, a] : o.terms_) out.terms_[occ] += a;
  out.prune();
  return out;
}

FockState FockState::operator-(const FockState& o) const { return *this + o * cplx(-1.0); }

nlohmann::json FockState::to_json() const {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& [occ, a] : terms_) {
    nlohmann::json modes = nlohmann::json::array();
    for (const auto& [m, n] : occ.entries()) {
      modes.push_back({{"path", path_label(m.path)},
                       {"pol", std::string(1, pol_label(m.pol))},
                       {"internal", m.internal},
                       {"count", n}});
    }
    terms.push_back({{"occupation", modes}, {"re", a.real()}, {"im", a.imag()}});
  }
  return terms;
}

cplx inner(const FockState& a, const FockState& b) {
  cplx acc{};
  const auto& small = a.size() <= b.size() ? a : b;
  const auto& large = a.size() <= b.size() ? b : a;
  for (const auto& [occ, amp] : small.terms()) {
    const auto it = large.terms().find(occ);
    if (it == large.terms().end()) continue;
    acc += (&small == &a) ? std::conj(amp) * it->second : std::conj(it->second) * amp;
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Preparation

FockState create_photons(std::span<const PhotonSpec> photons) {
  Polynomial poly{{OccupationVector{}, cplx{1.0}}};
  std::vector<std::pair<ModeId, cplx>> form;
  for (const auto& ph : photons) {
    form.clear();
    for (unsigned p = 0; p < 2; ++p) {
      for (unsigned k = 0; k < kInternalModes; ++k) {
        const cplx c = ph.polarization[p] * ph.internal[k];
        if (std::abs(c) < kAmplitudeEpsilon) continue;
        form.emplace_back(ModeId{ph.path, static_cast<Pol>(p), static_cast<std::uint8_t>(k)}, c);
      }
    }
    poly = multiply(poly, form);
  }
  FockState s;
  for (const auto& [mono, c] : poly) s.add(mono, c * occupation_norm(mono));
  s.prune();
  return s;
}

FockState make_single_photon(std::string_view path, const PolarizationQubit& q, unsigned internal) {
  return make_single_photon(parse_path(path), q, internal);
}

FockState make_single_photon(Path path, const PolarizationQubit& q, unsigned internal) {
  if (internal >= kInternalModes) throw std::invalid_argument("internal mode index out of range");
  PhotonSpec spec{path, q.vector(), {}};
  spec.internal[internal] = 1.0;
  return create_photons(std::span(&spec, 1));
}

FockState tensor(std::span<const FockState> states) {
  std::set<Path> used;
  for (const auto& s : states) {
    std::set<Path> mine;
    for (const auto& [occ, a] : s.terms()) {
      for (const auto& [m, n] : occ.entries()) mine.insert(m.path);
    }
    for (Path p : mine) {
      if (!used.insert(p).second) {
        throw std::invalid_argument("tensor factors overlap on path " + std::string(path_label(p)));
      }
    }
  }

  FockState acc = FockState::vacuum();
  for (const auto& s : states) {
    FockState next;
    for (const auto& [oa, aa] : acc.terms()) {
      for (const auto& [ob, ab] : s.terms()) {
        OccupationVector merged = oa;
        for (const auto& [m, n] : ob.entries()) merged.add(m, n);
        next.add(merged, aa * ab);
      }
    }
    next.prune();
    acc = std::move(next);
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Linear evolution

double LinearTransform::isometry_defect() const {
  if (matrix.cols() == 0) return 0.0;
  const Eigen::MatrixXcd g = matrix.adjoint() * matrix;
  return (g - Eigen::MatrixXcd::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
}

LinearTransform LinearTransform::identity(std::span<const OpticalMode> modes) {
  LinearTransform t;
  t.inputs.assign(modes.begin(), modes.end());
  t.outputs = t.inputs;
  t.matrix = Eigen::MatrixXcd::Identity(static_cast<Eigen::Index>(modes.size()),
                                        static_cast<Eigen::Index>(modes.size()));
  return t;
}

FockState apply_linear(const LinearTransform& t, const FockState& s) {
  if (t.matrix.rows() != static_cast<Eigen::Index>(t.outputs.size()) ||
      t.matrix.cols() != static_cast<Eigen::Index>(t.inputs.size())) {
    throw std::invalid_argument("transform matrix shape does not match its mode lists");
  }
  for (const auto& m : t.inputs) check_mode({m.path, m.pol, 0});
  for (const auto& m : t.outputs) check_mode({m.path, m.pol, 0});

  std::map<OpticalMode, Eigen::Index> column_of;
  for (std::size_t j = 0; j < t.inputs.size(); ++j) {
    if (!column_of.emplace(t.inputs[j], static_cast<Eigen::Index>(j)).second) {
      throw std::invalid_argument("transform lists an input mode twice");
    }
  }
  std::set<OpticalMode> output_only;
  for (const auto& m : t.outputs) {
    if (!column_of.contains(m)) output_only.insert(m);
  }

  FockState out;
  std::vector<std::pair<ModeId, cplx>> form;
  for (const auto& [occ, amp] : s.terms()) {
    Polynomial poly{{OccupationVector{}, cplx{1.0}}};
    for (const auto& [m, n] : occ.entries()) {
      if (output_only.contains(m.optical())) {
        throw std::invalid_argument("transform output mode " + to_string(m) + " is already occupied");
      }
      form.clear();
      const auto it = column_of.find(m.optical());
      if (it == column_of.end()) {
        form.emplace_back(m, 1.0);
      } else {
        for (Eigen::Index i = 0; i < t.matrix.rows(); ++i) {
          const cplx c = t.matrix(i, it->second);
          if (std::abs(c) < kAmplitudeEpsilon) continue;
          const auto& om = t.outputs[static_cast<std::size_t>(i)];
          form.emplace_back(ModeId{om.path, om.pol, m.internal}, c);
        }
      }
      for (unsigned k = 0; k < n; ++k) poly = multiply(poly, form);
    }
    const double in_norm = occupation_norm(occ);
    for (const auto& [mono, c] : poly) out.add(mono, amp * c * occupation_norm(mono) / in_norm);
  }
  out.prune();
  return out;
}

// ---------------------------------------------------------------------------
// Post-selection

namespace {

struct MeasuredSet {
  std::set<ModeId> exact;
  std::set<OpticalMode> optical;
  bool blind;

  bool contains(const ModeId& m) const {
    return blind ? optical.contains(m.optical()) : exact.contains(m);
  }
  ModeId key(const ModeId& m) const { return blind ? ModeId{m.path, m.pol, 0} : m; }
};

MeasuredSet make_measured(std::span<const ModeId> measured, bool blind) {
  MeasuredSet ms{{}, {}, blind};
  for (const auto& m : measured) {
    check_mode(m);
    ms.exact.insert(m);
    ms.optical.insert(m.optical());
  }
  return ms;
}

// Splits an occupation into (measured part, remainder).
std::pair<OccupationVector, OccupationVector> split(const OccupationVector& occ, const MeasuredSet& ms) {
  OccupationVector meas;
  OccupationVector rest;
  for (const auto& [m, n] : occ.entries()) {
    (ms.contains(m) ? meas : rest).add(m, n);
  }
  return {meas, rest};
}

OccupationVector keyed(const OccupationVector& occ, const MeasuredSet& ms) {
  if (!ms.blind) return occ;
  OccupationVector k;
  for (const auto& [m, n] : occ.entries()) k.add(ms.key(m), n);
  return k;
}

}  // namespace

ProjectionResult project(const FockState& s, std::span<const ModeId> measured,
                         const OccupationVector& pattern, bool internal_blind) {
  const MeasuredSet ms = make_measured(measured, internal_blind);
  for (const auto& [m, n] : pattern.entries()) {
    if (!ms.contains(m)) {
      throw std::invalid_argument("pattern mode " + to_string(m) + " is not in the measured set");
    }
  }
  const OccupationVector want = keyed(pattern, ms);

  std::map<OccupationVector, FockState> groups;
  for (const auto& [occ, amp] : s.terms()) {
    auto [meas, rest] = split(occ, ms);
    if (keyed(meas, ms) != want) continue;
    groups[meas].add(rest, amp);
  }

  ProjectionResult result;
  for (auto& [detected, state] : groups) {
    state.prune();
    const double p = state.norm_sq();
    if (p <= 0.0) continue;
    result.probability += p;
    result.branches.push_back({p, detected, state.normalized()});
  }
  return result;
}

std::map<OccupationVector, double> outcome_distribution(const FockState& s,
                                                        std::span<const ModeId> measured,
                                                        bool internal_blind) {
  const MeasuredSet ms = make_measured(measured, internal_blind);
  std::map<OccupationVector, double> dist;
  for (const auto& [occ, amp] : s.terms()) {
    dist[keyed(split(occ, ms).first, ms)] += std::norm(amp);
  }
  return dist;
}

}  // namespace cnotsim
