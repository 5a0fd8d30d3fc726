#include "cnotsim/analysis.hpp"

#include "cnotsim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

namespace cnotsim {

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) fields.push_back(trim(f));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

int index_of(const std::array<std::string, 4>& labels, std::string_view l) {
  const auto it = std::find(labels.begin(), labels.end(), l);
  return it == labels.end() ? -1 : static_cast<int>(it - labels.begin());
}

const char* basis_label(TruthTableBasis b) {
  switch (b) {
    case TruthTableBasis::Computational: return "computational";
    case TruthTableBasis::Complementary: return "complementary";
    case TruthTableBasis::MixedRL: return "mixed-rl";
  }
  return "?";
}

void require_basis(const ProbabilityTable& t, TruthTableBasis want, const char* what) {
  if (t.basis() != want) {
    throw std::invalid_argument(std::string(what) + " needs a " + basis_label(want) + " table, got " +
                                basis_label(t.basis()));
  }
}

template <std::size_t N>
double quarter_sum(const std::array<FidelityTerm, N>& terms, const ProbabilityLookup& p) {
  double s = 0.0;
  for (const auto& [in, out] : terms) s += p(in, out);
  return s / 4.0;
}

ProbabilityLookup lookup(const ProbabilityTable& t) {
  return [&t](std::string_view in, std::string_view out) { return t.at(in, out); };
}

// Draws each cell of `counts` from Poisson(count).
Eigen::Matrix4d poisson_redraw(const Eigen::Matrix4d& counts, std::mt19937_64& rng) {
  Eigen::Matrix4d out;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      const double mean = counts(i, j);
      if (mean <= 0.0) {
        out(i, j) = 0.0;
      } else {
        std::poisson_distribution<std::uint64_t> d(mean);
        out(i, j) = static_cast<double>(d(rng));
      }
    }
  }
  return out;
}

std::optional<ProbabilityTable> try_normalize(TruthTableBasis basis, const Eigen::Matrix4d& counts) {
  Eigen::Matrix4d p = counts;
  for (int i = 0; i < 4; ++i) {
    const double total = counts.row(i).sum();
    if (total <= 0.0) return std::nullopt;
    p.row(i) /= total;
  }
  return ProbabilityTable(basis, p);
}

struct Values {
  std::array<double, 6> v{};  // indexed by Quantity
  bool has_f3 = false;
};

Values compute_values(const ProbabilityTable& comp, const ProbabilityTable& pm,
                      const std::optional<ProbabilityTable>& mixed) {
  Values out;
  const double a = f1(comp);
  const double b = f2(pm);
  const FidelityBounds bounds = hofmann_bounds(a, b);
  out.v[static_cast<int>(Quantity::F1)] = a;
  out.v[static_cast<int>(Quantity::F2)] = b;
  out.v[static_cast<int>(Quantity::Lower)] = bounds.lower;
  out.v[static_cast<int>(Quantity::Upper)] = bounds.upper;
  if (mixed) {
    const double c = f3(*mixed);
    out.v[static_cast<int>(Quantity::F3)] = c;
    out.v[static_cast<int>(Quantity::Average)] = parallelism_check(a, b, c).average;
    out.has_f3 = true;
  }
  return out;
}

void require_pair(const CountsSet& counts) {
  if (!counts.computational || !counts.complementary) {
    throw DataError("fidelity evaluation needs computational and complementary counts");
  }
  if (counts.computational->basis != TruthTableBasis::Computational ||
      counts.complementary->basis != TruthTableBasis::Complementary ||
      (counts.mixed_rl && counts.mixed_rl->basis != TruthTableBasis::MixedRL)) {
    throw DataError("counts table basis does not match its slot");
  }
}

// Sample standard deviation of every quantity over Poisson resamples. Each
// resample owns a seed derived from (seed, index), so the result does not
// depend on the thread count.
std::array<double, 6> resample_sigmas(const CountsSet& counts, const ResampleOptions& opts) {
  require_pair(counts);
  if (opts.resamples < 2) throw std::invalid_argument("need at least two resamples");
  const Eigen::Matrix4d c1 = counts.computational->matrix();
  const Eigen::Matrix4d c2 = counts.complementary->matrix();
  const std::optional<Eigen::Matrix4d> c3 =
      counts.mixed_rl ? std::optional(counts.mixed_rl->matrix()) : std::nullopt;

  std::vector<std::optional<Values>> samples(opts.resamples);
  const auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      std::seed_seq seq{static_cast<std::uint32_t>(opts.seed), static_cast<std::uint32_t>(opts.seed >> 32),
                        static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(r >> 32)};
      std::mt19937_64 rng(seq);
      const auto p1 = try_normalize(TruthTableBasis::Computational, poisson_redraw(c1, rng));
      const auto p2 = try_normalize(TruthTableBasis::Complementary, poisson_redraw(c2, rng));
      std::optional<ProbabilityTable> p3;
      if (c3) {
        p3 = try_normalize(TruthTableBasis::MixedRL, poisson_redraw(*c3, rng));
        if (!p3) continue;
      }
      if (!p1 || !p2) continue;
      samples[r] = compute_values(*p1, *p2, p3);
    }
  };

  unsigned threads = opts.threads != 0 ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, opts.resamples));
  {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (opts.resamples + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t begin = t * chunk;
      const std::size_t end = std::min(opts.resamples, begin + chunk);
      if (begin < end) pool.emplace_back(work, begin, end);
    }
  }

  std::array<double, 6> mean{};
  std::array<double, 6> m2{};
  std::size_t n = 0;
  for (const auto& s : samples) {
    if (!s) continue;
    ++n;
    for (std::size_t q = 0; q < 6; ++q) {
      const double d = s->v[q] - mean[q];
      mean[q] += d / static_cast<double>(n);
      m2[q] += d * (s->v[q] - mean[q]);
    }
  }
  if (n < 2) throw DataError("too few valid resamples: counts are almost all zero");
  std::array<double, 6> sigma{};
  for (std::size_t q = 0; q < 6; ++q) sigma[q] = std::sqrt(m2[q] / static_cast<double>(n - 1));
  return sigma;
}

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

// ---------------------------------------------------------------------------
// Counts tables

CountsTable CountsTable::parse_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::vector<CountsRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    if (!header_seen) {
      if (fields != std::vector<std::string>{"input", "outcome", "count"}) {
        throw DataError("counts CSV must start with header 'input,outcome,count'");
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != 3) {
      throw DataError("line " + std::to_string(line_no) + ": expected 3 fields");
    }
    const std::string& c = fields[2];
    if (c.empty() || !std::all_of(c.begin(), c.end(), [](unsigned char ch) { return std::isdigit(ch); })) {
      throw DataError("line " + std::to_string(line_no) + ": count must be a non-negative integer");
    }
    std::uint64_t count = 0;
    try {
      count = std::stoull(c);
    } catch (const std::exception&) {
      throw DataError("line " + std::to_string(line_no) + ": count out of range");
    }
    rows.push_back({fields[0], fields[1], count});
  }
  if (!header_seen) throw DataError("counts CSV is empty");
  if (rows.empty()) throw DataError("counts CSV has no data rows");

  for (auto basis : {TruthTableBasis::Computational, TruthTableBasis::Complementary, TruthTableBasis::MixedRL}) {
    const bool fits = std::all_of(rows.begin(), rows.end(), [basis](const CountsRow& r) {
      return index_of(basis_inputs(basis), r.input) >= 0 && index_of(basis_outputs(basis), r.outcome) >= 0;
    });
    if (!fits) continue;
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& r : rows) {
      if (!seen.insert({r.input, r.outcome}).second) {
        throw DataError("duplicate row for " + r.input + "," + r.outcome);
      }
    }
    return {basis, std::move(rows)};
  }
  throw DataError("labels do not belong to a single truth-table basis");
}

CountsTable CountsTable::read_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open counts file " + path);
  return parse_csv(f);
}

void CountsTable::write_csv(std::ostream& out) const {
  out << "input,outcome,count\n";
  for (const auto& r : rows) out << r.input << ',' << r.outcome << ',' << r.count << '\n';
}

Eigen::Matrix4d CountsTable::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  for (const auto& r : rows) {
    const int i = index_of(basis_inputs(basis), r.input);
    const int o = index_of(basis_outputs(basis), r.outcome);
    if (i < 0 || o < 0) throw DataError("label not in table basis: " + r.input + "," + r.outcome);
    m(i, o) += static_cast<double>(r.count);
  }
  return m;
}

CountsTable CountsTable::from_matrix(TruthTableBasis basis, const Eigen::Matrix4d& counts) {
  CountsTable t{basis, {}};
  for (int i = 0; i < 4; ++i) {
    for (int o = 0; o < 4; ++o) {
      if (counts(i, o) < 0.0) throw std::invalid_argument("counts must be non-negative");
      t.rows.push_back({basis_inputs(basis)[static_cast<std::size_t>(i)],
                        basis_outputs(basis)[static_cast<std::size_t>(o)],
                        static_cast<std::uint64_t>(std::llround(counts(i, o)))});
    }
  }
  return t;
}

double ProbabilityTable::at(std::string_view input, std::string_view outcome) const {
  const int i = index_of(basis_inputs(basis_), input);
  const int o = index_of(basis_outputs(basis_), outcome);
  if (i < 0 || o < 0) {
    throw std::invalid_argument("label not in table: " + std::string(input) + "/" + std::string(outcome));
  }
  return p_(i, o);
}

ProbabilityTable normalize_counts(const CountsTable& t) {
  auto p = try_normalize(t.basis, t.matrix());
  if (!p) throw DataError("an input state has zero total counts");
  return *p;
}

ProbabilityTable to_probability_table(const TruthTable& t) { return {t.basis, t.probabilities}; }

// ---------------------------------------------------------------------------
// Fidelities

const std::array<FidelityTerm, 4>& f1_terms() {
  static const std::array<FidelityTerm, 4> t = {{{"HH", "HH"}, {"HV", "HV"}, {"VH", "VV"}, {"VV", "VH"}}};
  return t;
}

const std::array<FidelityTerm, 4>& f2_terms() {
  static const std::array<FidelityTerm, 4> t = {{{"++", "++"}, {"+-", "--"}, {"-+", "-+"}, {"--", "+-"}}};
  return t;
}

const std::array<FidelityTerm, 8>& f3_terms() {
  static const std::array<FidelityTerm, 8> t = {{{"+H", "RL"},
                                                 {"+H", "LR"},
                                                 {"+V", "RR"},
                                                 {"+V", "LL"},
                                                 {"-H", "RR"},
                                                 {"-H", "LL"},
                                                 {"-V", "RL"},
                                                 {"-V", "LR"}}};
  return t;
}

double f1(const ProbabilityLookup& p) { return quarter_sum(f1_terms(), p); }
double f2(const ProbabilityLookup& p) { return quarter_sum(f2_terms(), p); }
double f3(const ProbabilityLookup& p) { return quarter_sum(f3_terms(), p); }

double f1(const ProbabilityTable& t) {
  require_basis(t, TruthTableBasis::Computational, "F1");
  return f1(lookup(t));
}

double f2(const ProbabilityTable& t) {
  require_basis(t, TruthTableBasis::Complementary, "F2");
  return f2(lookup(t));
}

double f3(const ProbabilityTable& t) {
  require_basis(t, TruthTableBasis::MixedRL, "F3");
  return f3(lookup(t));
}

FidelityBounds hofmann_bounds(double f1, double f2) {
  // Normalized simulation output can overshoot 1 by a few ulps.
  const auto in_range = [](double x) { return x >= -1e-9 && x <= 1.0 + 1e-9; };
  if (!in_range(f1) || !in_range(f2)) throw std::invalid_argument("fidelities must lie in [0, 1]");
  return {f1 + f2 - 1.0, std::min(f1, f2)};
}

Parallelism parallelism_check(double f1, double f2, double f3) {
  const double avg = (f1 + f2 + f3) / 3.0;
  return {avg, avg > 2.0 / 3.0};
}

// ---------------------------------------------------------------------------
// Reports

nlohmann::json FidelityReport::to_json() const {
  nlohmann::json j;
  j["f1"] = f1;
  j["f2"] = f2;
  j["f3"] = optional_json(f3);
  j["lower"] = lower;
  j["upper"] = upper;
  j["average"] = optional_json(average);
  j["pass"] = pass ? nlohmann::json(*pass) : nlohmann::json(nullptr);
  j["parallelism"] = pass ? (*pass ? "pass" : "fail") : "unavailable";
  j["sigma"] = {{"f1", sigma.f1},
                {"f2", sigma.f2},
                {"f3", optional_json(sigma.f3)},
                {"lower", sigma.lower},
                {"upper", sigma.upper},
                {"average", optional_json(sigma.average)}};
  return j;
}

FidelityReport fidelity_report(const ProbabilityTable& computational, const ProbabilityTable& complementary,
                               const std::optional<ProbabilityTable>& mixed) {
  const Values v = compute_values(computational, complementary, mixed);
  FidelityReport r;
  r.f1 = v.v[static_cast<int>(Quantity::F1)];
  r.f2 = v.v[static_cast<int>(Quantity::F2)];
  r.lower = v.v[static_cast<int>(Quantity::Lower)];
  r.upper = v.v[static_cast<int>(Quantity::Upper)];
  if (v.has_f3) {
    r.f3 = v.v[static_cast<int>(Quantity::F3)];
    const Parallelism par = parallelism_check(r.f1, r.f2, *r.f3);
    r.average = par.average;
    r.pass = par.pass;
    r.sigma.f3 = 0.0;
    r.sigma.average = 0.0;
  }
  return r;
}

FidelityReport evaluate_counts(const CountsSet& counts, const ResampleOptions& opts) {
  require_pair(counts);
  std::optional<ProbabilityTable> mixed;
  if (counts.mixed_rl) mixed = normalize_counts(*counts.mixed_rl);
  FidelityReport r =
      fidelity_report(normalize_counts(*counts.computational), normalize_counts(*counts.complementary), mixed);
  const auto s = resample_sigmas(counts, opts);
  r.sigma.f1 = s[static_cast<int>(Quantity::F1)];
  r.sigma.f2 = s[static_cast<int>(Quantity::F2)];
  r.sigma.lower = s[static_cast<int>(Quantity::Lower)];
  r.sigma.upper = s[static_cast<int>(Quantity::Upper)];
  if (mixed) {
    r.sigma.f3 = s[static_cast<int>(Quantity::F3)];
    r.sigma.average = s[static_cast<int>(Quantity::Average)];
  }
  return r;
}

double poisson_error(const CountsSet& counts, Quantity q, const ResampleOptions& opts) {
  if ((q == Quantity::F3 || q == Quantity::Average) && !counts.mixed_rl) {
    throw DataError("F3 and the average need a mixed-rl counts table");
  }
  return resample_sigmas(counts, opts)[static_cast<int>(q)];
}

CountsTable sample_counts(const ProbabilityTable& p, std::uint64_t shots, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Eigen::Matrix4d counts = Eigen::Matrix4d::Zero();
  for (int i = 0; i < 4; ++i) {
    std::uint64_t remaining = shots;
    double mass = 1.0;
    for (int o = 0; o < 4 && remaining > 0; ++o) {
      const double prob = std::clamp(p.matrix()(i, o), 0.0, 1.0);
      std::uint64_t k = remaining;
      if (o < 3 && mass > 0.0) {
        std::binomial_distribution<std::uint64_t> d(remaining, std::clamp(prob / mass, 0.0, 1.0));
        k = d(rng);
      }
      counts(i, o) = static_cast<double>(k);
      remaining -= k;
      mass -= prob;
    }
  }
  return CountsTable::from_matrix(p.basis(), counts);
}

// ---------------------------------------------------------------------------
// Process reconstruction

double ProcessMatrix::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<cplx, 16, 16>> es(choi, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

ProcessMatrix reconstruct_process(const GateConfig& cfg) {
  static constexpr std::array<char, 4> kProbe = {'H', 'V', '+', 'R'};

  // Column k holds vec(rho_k) of input k; outputs keep the heralding weight so
  // the map stays linear.
  Eigen::Matrix<cplx, 16, 16> inputs;
  std::array<TwoQubitOp, 16> outputs;
  int k = 0;
  for (char c : kProbe) {
    for (char t : kProbe) {
      const auto qc = PolarizationQubit::from_label(c);
      const auto qt = PolarizationQubit::from_label(t);
      const TwoQubitState psi = product_state(qc, qt);
      const TwoQubitOp rho = psi * psi.adjoint();
      inputs.col(k) = Eigen::Map<const Eigen::Matrix<cplx, 16, 1>>(rho.data());
      const GateRunResult r = run_gate(qc, qt, cfg);
      TwoQubitOp sigma = TwoQubitOp::Zero();
      for (const auto& b : r.branches) sigma += b.probability * b.state * b.state.adjoint();
      outputs[static_cast<std::size_t>(k)] = sigma;
      ++k;
    }
  }

  const Eigen::FullPivLU<Eigen::Matrix<cplx, 16, 16>> lu(inputs);
  if (!lu.isInvertible()) throw DataError("tomography inputs are not informationally complete");

  Eigen::Matrix<cplx, 16, 16> choi = Eigen::Matrix<cplx, 16, 16>::Zero();
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      TwoQubitOp unit = TwoQubitOp::Zero();
      unit(i, j) = 1.0;
      const Eigen::Matrix<cplx, 16, 1> coeff =
          lu.solve(Eigen::Map<const Eigen::Matrix<cplx, 16, 1>>(unit.data()));
      TwoQubitOp image = TwoQubitOp::Zero();
      for (int m = 0; m < 16; ++m) image += coeff[m] * outputs[static_cast<std::size_t>(m)];
      choi.block(4 * i, 4 * j, 4, 4) = image;
    }
  }
  const double trace = choi.trace().real();
  if (trace <= 1e-15) throw DataError("no heralded events: process undefined");
  ProcessMatrix p;
  p.choi = choi / trace;
  p.trigger_rate = trace / 4.0;
  return p;
}

double process_fidelity(const ProcessMatrix& p, const TwoQubitOp& target) {
  Eigen::Matrix<cplx, 16, 1> phi = Eigen::Matrix<cplx, 16, 1>::Zero();
  for (int i = 0; i < 4; ++i) phi.segment(4 * i, 4) = target.col(i) / 2.0;
  return (phi.adjoint() * p.choi * phi)(0, 0).real();
}

}  // namespace cnotsim
