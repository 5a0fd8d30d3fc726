#pragma once

// Truth-table fidelities F1, F2, F3, the fidelity bounds derived from F1 and
// F2, the quantum-parallelism check, Poisson error bars by resampling, and a
// full process reconstruction used as a cross-check of the bounds.

#include "cnotsim/gate.hpp"

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cnotsim {

struct CountsRow {
  std::string input;
  std::string outcome;
  std::uint64_t count;
};

struct CountsTable {
  TruthTableBasis basis;
  std::vector<CountsRow> rows;

  /// Reads `input,outcome,count` CSV. The basis is inferred from the labels.
  /// Throws DataError on malformed rows, unknown labels or duplicates.
  static CountsTable parse_csv(std::istream& in);
  static CountsTable read_csv(const std::string& path);
  void write_csv(std::ostream& out) const;

  /// 4x4 counts, row = input, column = outcome (missing rows count as zero).
  Eigen::Matrix4d matrix() const;
  static CountsTable from_matrix(TruthTableBasis basis, const Eigen::Matrix4d& counts);
};

class ProbabilityTable {
 public:
  ProbabilityTable(TruthTableBasis basis, const Eigen::Matrix4d& p) : basis_(basis), p_(p) {}

  TruthTableBasis basis() const { return basis_; }
  const Eigen::Matrix4d& matrix() const { return p_; }
  /// P(outcome | input).
  double at(std::string_view input, std::string_view outcome) const;

 private:
  TruthTableBasis basis_;
  Eigen::Matrix4d p_;
};

/// P(outcome | input) = count / total counts for that input. Throws DataError
/// if an input has no counts.
ProbabilityTable normalize_counts(const CountsTable& t);
ProbabilityTable to_probability_table(const TruthTable& t);

/// (input, outcome) pairs each fidelity averages over.
using FidelityTerm = std::pair<std::string_view, std::string_view>;
const std::array<FidelityTerm, 4>& f1_terms();
const std::array<FidelityTerm, 4>& f2_terms();
const std::array<FidelityTerm, 8>& f3_terms();

/// Lookup of P(outcome | input); lets callers observe which cells are read.
using ProbabilityLookup = std::function<double(std::string_view input, std::string_view outcome)>;

double f1(const ProbabilityLookup& p);
double f2(const ProbabilityLookup& p);
double f3(const ProbabilityLookup& p);
/// These check the table's basis tag and throw std::invalid_argument on mismatch.
double f1(const ProbabilityTable& t);
double f2(const ProbabilityTable& t);
double f3(const ProbabilityTable& t);

struct FidelityBounds {
  double lower;
  double upper;
};

/// (f1 + f2 - 1, min(f1, f2)). Throws std::invalid_argument outside [0, 1]
/// (with 1e-9 rounding slack).
FidelityBounds hofmann_bounds(double f1, double f2);

struct Parallelism {
  double average;
  bool pass;  // strictly above 2/3
};

Parallelism parallelism_check(double f1, double f2, double f3);

/// Counts tables for a full evaluation. The mixed R/L table is optional.
struct CountsSet {
  std::optional<CountsTable> computational;
  std::optional<CountsTable> complementary;
  std::optional<CountsTable> mixed_rl;
};

enum class Quantity { F1, F2, F3, Lower, Upper, Average };

struct ResampleOptions {
  std::size_t resamples = 10000;
  std::uint64_t seed = 20061;
  unsigned threads = 0;  // 0: hardware concurrency
};

struct FidelityReport {
  double f1 = 0.0;
  double f2 = 0.0;
  std::optional<double> f3;
  double lower = 0.0;
  double upper = 0.0;
  std::optional<double> average;
  std::optional<bool> pass;

  struct Sigmas {
    double f1 = 0.0;
    double f2 = 0.0;
    std::optional<double> f3;
    double lower = 0.0;
    double upper = 0.0;
    std::optional<double> average;
  } sigma;

  nlohmann::json to_json() const;
};

/// Point values only (sigmas zero). f3 is evaluated when `mixed` is given.
FidelityReport fidelity_report(const ProbabilityTable& computational, const ProbabilityTable& complementary,
                               const std::optional<ProbabilityTable>& mixed);

/// Point values from normalized counts plus one-sigma errors from Poisson
/// resampling of every count. Requires computational and complementary tables.
FidelityReport evaluate_counts(const CountsSet& counts, const ResampleOptions& opts = {});

/// One-sigma uncertainty of a single quantity by Poisson resampling.
double poisson_error(const CountsSet& counts, Quantity q, const ResampleOptions& opts = {});

/// Multinomial counts drawn from a probability table with `shots` per input.
CountsTable sample_counts(const ProbabilityTable& p, std::uint64_t shots, std::uint64_t seed);

/// Choi state of the heralded two-qubit channel, input (x) output ordering,
/// normalized to unit trace.
struct ProcessMatrix {
  Eigen::Matrix<cplx, 16, 16> choi;
  double trigger_rate;  // heralding probability averaged over inputs

  double min_eigenvalue() const;
};

/// Linear-inversion tomography from the 16 product inputs {H,V,+,R}^2.
/// Throws DataError if no input is ever heralded.
ProcessMatrix reconstruct_process(const GateConfig& cfg = {});

/// <Phi_U| choi |Phi_U> with |Phi_U> the maximally entangled Choi state of `target`.
double process_fidelity(const ProcessMatrix& p, const TwoQubitOp& target = cnot());

}  // namespace cnotsim
