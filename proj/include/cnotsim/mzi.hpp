#pragma once

// Two-photon Mach-Zehnder interference used to locate temporal overlap on
// PBS-3: pairs |1R,1L> on path 3 and on path 2 interfere with relative phase
// phi, and the (D_A^H, D_B^H) coincidence rate oscillates as (1 + cos phi)/4.
// Away from zero delay the fringe washes out under a Gaussian envelope.

#include "cnotsim/errors.hpp"
#include "cnotsim/fock.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace cnotsim {

FockState mzi_input_state(double phi);

/// (D_A^H, D_B^H) coincidence probability from the full Fock simulation.
double mzi_probability(double phi);
double mzi_probability_closed_form(double phi);

struct ScanModel {
  double x0 = 0.0;
  double sigma = 1.0;  // envelope width, same units as positions
  double k = 1.0;      // phase per unit position

  /// (1/4)(1 + exp(-(x-x0)^2 / (2 sigma^2)) cos(k (x-x0)))
  double probability(double x) const;
};

struct MziScan {
  std::vector<double> positions;
  std::vector<double> values;  // probabilities, or counts when shots is set
  std::optional<std::uint64_t> shots;
  double k = 1.0;

  /// Values as coincidence fractions.
  std::vector<double> fractions() const;
  void write_csv(std::ostream& out) const;
};

std::vector<double> linspace(double lo, double hi, std::size_t n);

/// Exact probabilities when `shots` is empty, otherwise binomial counts drawn
/// with a generator seeded by `seed`. Throws std::invalid_argument for
/// sigma <= 0 or non-increasing positions.
MziScan simulate_scan(const ScanModel& model, const std::vector<double>& positions,
                      std::optional<std::uint64_t> shots, std::uint64_t seed = 0);

struct EnvelopeFit {
  double x0;
  double sigma;
  double visibility;
  double baseline;
  double residual;  // sum of squared residuals on fractions
  double x0_stderr;
  int iterations;
};

/// Thrown when the data carry no significant fringe, so no center exists.
class UnidentifiableFit : public DataError {
 public:
  UnidentifiableFit(const std::string& what, double visibility)
      : DataError(what), visibility_(visibility) {}
  double visibility() const { return visibility_; }

 private:
  double visibility_;
};

inline constexpr int kFitMaxIterations = 100;
inline constexpr double kFitStepTolerance = 1e-10;

/// Least squares of baseline * (1 + V exp(-(x-x0)^2/(2 s^2)) cos(k (x-x0)))
/// with k taken from the scan: a coarse grid over envelope center and width
/// (linear in the rest), then Gauss-Newton on all four parameters.
/// Throws DataError for too few points, a scan shorter than one fringe, or
/// constant data; UnidentifiableFit for no fringe; ConvergenceError at the
/// iteration cap.
EnvelopeFit fit_envelope(const MziScan& scan);

}  // namespace cnotsim
