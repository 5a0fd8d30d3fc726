#pragma once

// Sparse few-photon Fock states over (path, polarization, internal) modes and
// their evolution under passive linear optics.
//
// Storage is always in the H/V polarization basis. A mode's internal index
// labels a temporal/spectral mode (0 or 1); optical elements act identically
// on every internal index.

#include <Eigen/Dense>

#include <array>
#include <compare>
#include <complex>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace cnotsim {

using cplx = std::complex<double>;

/// Amplitudes smaller than this in magnitude are dropped from sparse states.
inline constexpr double kAmplitudeEpsilon = 1e-12;

/// Number of distinct internal (temporal) modes per optical mode.
inline constexpr unsigned kInternalModes = 2;

// Registered paths. Each physical path has one loss path that absorbs
// photons discarded by polarizers or leaky beam splitters acting on it.
enum class Path : std::uint8_t {
  C, A1, A2, T, P1, P2, P3, P4, A, B,
  LossC, LossA1, LossA2, LossT, Loss1, Loss2, Loss3, Loss4, LossA, LossB,
};

inline constexpr std::size_t kPathCount = 20;

std::string_view path_label(Path p);
/// Throws std::invalid_argument for labels outside the registry.
Path parse_path(std::string_view label);
bool is_loss_path(Path p);
/// Loss path associated with a physical path.
Path loss_path(Path p);
const std::array<Path, 10>& physical_paths();

enum class Pol : std::uint8_t { H, V };

char pol_label(Pol p);

/// A path/polarization pair, the unit optical elements act on.
struct OpticalMode {
  Path path;
  Pol pol;
  auto operator<=>(const OpticalMode&) const = default;
};

struct ModeId {
  Path path;
  Pol pol;
  std::uint8_t internal = 0;

  OpticalMode optical() const { return {path, pol}; }
  auto operator<=>(const ModeId&) const = default;
};

std::string to_string(const ModeId& m);

/// Canonical sparse photon-count assignment. Zero counts are never stored and
/// entries are kept sorted by ModeId.
class OccupationVector {
 public:
  OccupationVector() = default;
  OccupationVector(std::initializer_list<std::pair<ModeId, unsigned>> init);

  unsigned count(const ModeId& m) const;
  unsigned total() const { return total_; }
  /// Photons on a path summed over polarization and internal index.
  unsigned path_count(Path p) const;
  unsigned optical_count(const OpticalMode& m) const;
  bool empty() const { return entries_.empty(); }

  void add(const ModeId& m, unsigned n = 1);
  void set(const ModeId& m, unsigned n);

  const std::vector<std::pair<ModeId, unsigned>>& entries() const { return entries_; }

  auto operator<=>(const OccupationVector& o) const { return entries_ <=> o.entries_; }
  bool operator==(const OccupationVector& o) const { return entries_ == o.entries_; }

 private:
  std::vector<std::pair<ModeId, unsigned>> entries_;
  unsigned total_ = 0;
};

std::string to_string(const OccupationVector& occ);

/// A normalized single-photon polarization state alpha|H> + beta|V>.
class PolarizationQubit {
 public:
  /// Throws std::invalid_argument unless |alpha|^2 + |beta|^2 = 1 within 1e-12.
  static PolarizationQubit make(cplx alpha, cplx beta);

  static PolarizationQubit H() { return {1.0, 0.0}; }
  static PolarizationQubit V() { return {0.0, 1.0}; }
  static PolarizationQubit plus();
  static PolarizationQubit minus();
  static PolarizationQubit right();
  static PolarizationQubit left();
  /// Looks up one of 'H', 'V', '+', '-', 'R', 'L'.
  static PolarizationQubit from_label(char c);

  cplx alpha() const { return alpha_; }
  cplx beta() const { return beta_; }
  Eigen::Vector2cd vector() const { return {alpha_, beta_}; }
  /// The orthogonal state (-conj(beta), conj(alpha)).
  PolarizationQubit orthogonal() const { return {-std::conj(beta_), std::conj(alpha_)}; }

 private:
  PolarizationQubit(cplx a, cplx b) : alpha_(a), beta_(b) {}
  cplx alpha_;
  cplx beta_;
};

class FockState {
 public:
  using TermMap = std::map<OccupationVector, cplx>;

  FockState() = default;
  static FockState vacuum();
  static FockState basis(const OccupationVector& occ, cplx amplitude = 1.0);

  /// Accumulates into the term for `occ`; call prune() once building is done.
  void add(const OccupationVector& occ, cplx amplitude);
  void prune(double eps = kAmplitudeEpsilon);

  const TermMap& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  cplx amplitude(const OccupationVector& occ) const;

  double norm_sq() const;
  FockState normalized() const;

  FockState operator*(cplx s) const;
  FockState operator+(const FockState& o) const;
  FockState operator-(const FockState& o) const;

  nlohmann::json to_json() const;

 private:
  TermMap terms_;
};

cplx inner(const FockState& a, const FockState& b);
inline double norm_sq(const FockState& s) { return s.norm_sq(); }

/// One photon: creation operator on `path` with the given polarization and
/// internal-mode amplitudes (need not be normalized jointly with others).
struct PhotonSpec {
  Path path;
  Eigen::Vector2cd polarization;
  std::array<cplx, kInternalModes> internal{cplx{1.0}, cplx{0.0}};
};

/// Applies the product of the listed creation operators to the vacuum with
/// exact bosonic normalization. The result need not have unit norm when
/// photons share a mode non-orthogonally.
FockState create_photons(std::span<const PhotonSpec> photons);

FockState make_single_photon(std::string_view path, const PolarizationQubit& q, unsigned internal = 0);
FockState make_single_photon(Path path, const PolarizationQubit& q, unsigned internal = 0);

/// Product of states on pairwise disjoint path sets. Empty input yields the vacuum.
FockState tensor(std::span<const FockState> states);

/// Linear map on creation operators: column j of `matrix` gives the image of
/// a^dagger(inputs[j]) as a combination of a^dagger(outputs[i]). Acts
/// identically on every internal index.
struct LinearTransform {
  std::vector<OpticalMode> inputs;
  std::vector<OpticalMode> outputs;
  Eigen::MatrixXcd matrix;

  /// max |M^dagger M - I| entry.
  double isometry_defect() const;
  bool is_isometry(double tol = 1e-12) const { return isometry_defect() <= tol; }
  static LinearTransform identity(std::span<const OpticalMode> modes);
};

/// Substitutes each creation operator acting on an input mode by its image
/// and expands. Modes outside `t.inputs` pass through. Throws
/// std::invalid_argument if an output-only mode of `t` is already occupied,
/// because the map would then not act isometrically.
FockState apply_linear(const LinearTransform& t, const FockState& s);

struct ProjectionBranch {
  double probability;  // weight of this branch (sums to ProjectionResult::probability)
  OccupationVector detected;  // exact occupation found on the measured modes
  FockState state;  // normalized state of the unmeasured modes
};

struct ProjectionResult {
  double probability = 0.0;
  std::vector<ProjectionBranch> branches;
};

/// Post-selects `pattern` on the `measured` modes (all other counts on those
/// modes must be zero). With internal_blind the measured set and pattern are
/// read at the optical level: every internal copy of each measured optical
/// mode is measured and counts are summed over internal index. Distinct
/// internal assignments then form separate branches of a classical mixture.
ProjectionResult project(const FockState& s, std::span<const ModeId> measured,
                         const OccupationVector& pattern, bool internal_blind);

/// Probability of every pattern that occurs on the measured modes. In
/// internal-blind mode the keys carry internal index 0.
std::map<OccupationVector, double> outcome_distribution(const FockState& s,
                                                        std::span<const ModeId> measured,
                                                        bool internal_blind);

}  // namespace cnotsim
