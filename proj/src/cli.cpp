#include "cnotsim/cli.hpp"

#include "cnotsim/analysis.hpp"
#include "cnotsim/errors.hpp"
#include "cnotsim/gate.hpp"
#include "cnotsim/mzi.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>

namespace cnotsim::cli {

namespace {

using nlohmann::json;

std::uint64_t parse_seed(const std::string& s) {
  std::size_t used = 0;
  const unsigned long long v = std::stoull(s, &used);
  if (used != s.size()) throw std::invalid_argument("seed must be an unsigned integer: " + s);
  return v;
}

std::uint64_t default_seed() {
  const char* env = std::getenv(kSeedEnv);
  if (env == nullptr || *env == '\0') return kDefaultSeed;
  try {
    return parse_seed(env);
  } catch (const std::exception&) {
    throw std::invalid_argument(std::string(kSeedEnv) + " must be an unsigned integer");
  }
}

NoiseParams load_noise(const std::string& path) {
  if (path.empty()) return {};
  std::ifstream in(path);
  if (!in) throw DataError("cannot open noise config: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("noise config " + path + ": " + e.what());
  }
  try {
    return NoiseParams::from_json(j);
  } catch (const json::exception& e) {
    throw DataError("noise config " + path + ": " + e.what());
  }
}

json matrix_json(const Eigen::Matrix4d& m) {
  json rows = json::array();
  for (int i = 0; i < 4; ++i) {
    rows.push_back({m(i, 0), m(i, 1), m(i, 2), m(i, 3)});
  }
  return rows;
}

json truth_table_json(const TruthTable& t) {
  return {{"basis", to_string(t.basis)},
          {"inputs", basis_inputs(t.basis)},
          {"outputs", basis_outputs(t.basis)},
          {"probabilities", matrix_json(t.probabilities)},
          {"success_probability", t.success}};
}

void write_truth_table_csv(const TruthTable& t, std::ostream& out) {
  out << "input,outcome,probability,success_probability\n" << std::setprecision(17);
  for (int i = 0; i < 4; ++i) {
    for (int o = 0; o < 4; ++o) {
      out << basis_inputs(t.basis)[i] << ',' << basis_outputs(t.basis)[o] << ',' << t.probabilities(i, o)
          << ',' << t.success[i] << '\n';
    }
  }
}

json fit_json(const EnvelopeFit& f) {
  return {{"x0", f.x0},           {"sigma", f.sigma},       {"visibility", f.visibility},
          {"baseline", f.baseline}, {"residual", f.residual}, {"x0_stderr", f.x0_stderr},
          {"iterations", f.iterations}};
}

std::string case_label(const BunchingCase& c) {
  return std::to_string(c.distribution[0]) + ":" + std::to_string(c.distribution[1]) + ":" +
         std::to_string(c.distribution[2]) + ":" + std::to_string(c.distribution[3]);
}

json parameters_json(const CLI::App& app) {
  json p = json::object();
  for (const CLI::Option* opt : app.get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "version") continue;
    if (opt->count() > 0) {
      const auto& r = opt->results();
      p[name] = r.size() == 1 ? json(r.front()) : json(r);
    } else if (!opt->get_default_str().empty()) {
      p[name] = opt->get_default_str();
    } else {
      p[name] = nullptr;
    }
  }
  return p;
}

struct TruthTableArgs {
  std::string basis = "computational";
  std::string format = "json";
};

struct FidelityArgs {
  std::string computational;
  std::string complementary;
  std::string mixed_rl;
  bool simulate = false;
  std::uint64_t shots = 0;
  std::size_t resamples = 10000;
  unsigned threads = 0;
};

struct BunchingArgs {
  std::string control = "+";
  std::string target = "H";
  std::string detector = "pnr";
  std::string format = "json";
};

struct MziArgs {
  double x0 = 10.0;
  double sigma = 25.0;
  double k = 8.0;
  std::pair<double, double> range{-65.0, 85.0};
  std::size_t points = 2001;
  std::uint64_t shots = 10000;
  bool exact = false;
  bool fit = false;
};

PolarizationQubit parse_qubit(const std::string& s) {
  if (s.size() != 1) throw std::invalid_argument("polarization label must be one of H V + - R L: " + s);
  return PolarizationQubit::from_label(s.front());
}

void cmd_truth_table(const TruthTableArgs& a, const NoiseParams& noise, std::ostream& out) {
  GateConfig cfg;
  cfg.noise = noise;
  const TruthTable t = truth_table(parse_basis(a.basis), cfg);
  if (a.format == "csv") {
    write_truth_table_csv(t, out);
  } else {
    out << truth_table_json(t).dump(2) << '\n';
  }
}

void cmd_fidelity(const FidelityArgs& a, const NoiseParams& noise, std::uint64_t seed, std::ostream& out) {
  FidelityReport report;
  if (a.simulate) {
    GateConfig cfg;
    cfg.noise = noise;
    const ProbabilityTable comp = to_probability_table(truth_table(TruthTableBasis::Computational, cfg));
    const ProbabilityTable pm = to_probability_table(truth_table(TruthTableBasis::Complementary, cfg));
    const ProbabilityTable rl = to_probability_table(truth_table(TruthTableBasis::MixedRL, cfg));
    if (a.shots == 0) {
      report = fidelity_report(comp, pm, rl);
    } else {
      // Independent streams per table, derived from the one seed.
      CountsSet counts{sample_counts(comp, a.shots, seed), sample_counts(pm, a.shots, seed + 1),
                       sample_counts(rl, a.shots, seed + 2)};
      report = evaluate_counts(counts, {a.resamples, seed, a.threads});
    }
  } else {
    if (a.computational.empty() || a.complementary.empty()) {
      throw std::invalid_argument("fidelity needs --computational and --complementary counts, or --simulate");
    }
    CountsSet counts;
    counts.computational = CountsTable::read_csv(a.computational);
    counts.complementary = CountsTable::read_csv(a.complementary);
    if (!a.mixed_rl.empty()) counts.mixed_rl = CountsTable::read_csv(a.mixed_rl);
    if (counts.computational->basis != TruthTableBasis::Computational ||
        counts.complementary->basis != TruthTableBasis::Complementary ||
        (counts.mixed_rl && counts.mixed_rl->basis != TruthTableBasis::MixedRL)) {
      throw DataError("counts file labels do not match the basis of the flag they were given to");
    }
    report = evaluate_counts(counts, {a.resamples, seed, a.threads});
  }
  out << report.to_json().dump(2) << '\n';
}

void cmd_bunching(const BunchingArgs& a, std::ostream& out) {
  GateConfig cfg;
  cfg.detector = a.detector == "threshold" ? DetectorModel::Threshold : DetectorModel::PhotonNumberResolving;
  const BunchingReport r = bunching_audit(parse_qubit(a.control), parse_qubit(a.target), cfg);
  if (a.format == "csv") {
    out << "case,group,probability,trigger_probability,pnr_trigger_probability,threshold_trigger_probability\n"
        << std::setprecision(17);
    for (const auto& c : r.cases) {
      out << case_label(c) << ',' << c.group << ',' << c.probability << ',' << c.trigger_probability << ','
          << c.pnr_trigger_probability << ',' << c.threshold_trigger_probability << '\n';
    }
  } else {
    out << r.to_json().dump(2) << '\n';
  }
}

void cmd_mzi(const MziArgs& a, std::uint64_t seed, std::ostream& out) {
  if (!(a.range.second > a.range.first)) throw std::invalid_argument("--range needs LO < HI");
  const ScanModel model{a.x0, a.sigma, a.k};
  const std::optional<std::uint64_t> shots = a.exact ? std::nullopt : std::optional(a.shots);
  const MziScan scan = simulate_scan(model, linspace(a.range.first, a.range.second, a.points), shots, seed);
  scan.write_csv(out);
  if (a.fit) {
    const EnvelopeFit f = fit_envelope(scan);
    out << "# fit " << fit_json(f).dump() << '\n';
  }
}

const char* kExplain = R"(Conventions
  Modes: paths c a1 a2 t (inputs), 1 2 3 4 (after PBS-1/PBS-2), A B (after
    PBS-3), loss_<path> for light removed by an imperfect element.
    Each path carries H/V polarization and two internal (temporal) modes.
  Polarization states: |+> = (|H> + |V>)/sqrt2, |-> = (|H> - |V>)/sqrt2,
    |R> = (|H> + i|V>)/sqrt2, |L> = (|H> - i|V>)/sqrt2.
  PBS: the transmit-basis component of input p leaves on output r and of
    input q on output s; the reflect-basis component crosses over.
    Transmission and reflection amplitudes are both +1 (no i phase).
    PBS-1: H/V basis, c a1 -> 1 2.  PBS-2: +/- basis, a2 t -> 3 4.
    PBS-3: R/L basis, 2 3 -> A B.
  Wave plates: fast axis theta, retardance G:
    J = R(-theta) diag(e^{-iG/2}, e^{iG/2}) R(theta).
    A +/- PBS equals an H/V PBS between HWPs at 22.5 deg on all ports; an R/L
    PBS equals an H/V PBS between QWPs at +45 deg (inputs) and -45 deg
    (outputs). Equivalence is checked up to a global phase.
  Heralding: a coincidence (D_A^a, D_B^b) in the trigger set with exactly one
    photon on each of paths 1 and 4. Detectors do not resolve internal modes.
  Feed-forward: sigma_z on photon 1 after a same-letter trigger (Phi-),
    sigma_x on photon 4 after a crossed trigger (Psi+).
  Two-qubit order: photon 1 (control) (x) photon 4 (target), basis HH HV VH VV.
  Distinguishability zeta: pair {c, a1} in internal mode 0, pair {a2, t} in
    zeta|0> + sqrt(1 - zeta^2)|1>.
  Crosstalk w: each PBS eigen-polarization sends amplitude i*w to the wrong
    port, keeping sqrt(1 - w^2) on the right one.
  Visibility: (P_same - P_diff) / (P_same + P_diff); Bell threshold 0.71.
  Process fidelity: <Phi_U| chi |Phi_U> with chi the unit-trace Choi state
    (input (x) output) reconstructed from the 16 inputs {H,V,+,R}^2.
  MZI scan: P(x) = (1/4)(1 + exp(-(x-x0)^2 / (2 sigma^2)) cos(k (x-x0))).
  Exit codes: 0 ok, 2 usage, 3 data, 4 non-convergence.
)";

}  // namespace

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  std::ostringstream hex;
  hex << std::hex << std::setfill('0');
  for (unsigned int i = 0; i < len; ++i) hex << std::setw(2) << static_cast<int>(md[i]);
  return hex.str();
}

std::string explain_text() { return kExplain; }

json repro_bundle(std::uint64_t seed) {
  json j;
  j["version"] = kVersion;
  j["seed"] = seed;

  {
    const char labels[] = {'H', 'V', '+', '-', 'R', 'L'};
    double min_success = 1.0;
    double max_success = 0.0;
    double min_fidelity = 1.0;
    for (char c : labels) {
      for (char t : labels) {
        const auto qc = PolarizationQubit::from_label(c);
        const auto qt = PolarizationQubit::from_label(t);
        const GateRunResult r = run_gate(qc, qt);
        const TwoQubitState expected = cnot() * product_state(qc, qt);
        min_success = std::min(min_success, r.success_probability);
        max_success = std::max(max_success, r.success_probability);
        min_fidelity = std::min(min_fidelity, state_fidelity(expected, r.density()));
      }
    }
    j["ideal_gate"] = {{"inputs", 36},
                       {"success_probability_min", min_success},
                       {"success_probability_max", max_success},
                       {"claimed_success_probability", 0.125},
                       {"min_fidelity_vs_cnot", min_fidelity}};
  }

  {
    const BunchingReport b = bunching_audit(PolarizationQubit::plus(), PolarizationQubit::H());
    j["one_photon_per_path_probability"] = b.cases.front().probability;
    GateConfig thr;
    thr.detector = DetectorModel::Threshold;
    json audit = b.to_json();
    audit["threshold_leakage"] =
        bunching_audit(PolarizationQubit::plus(), PolarizationQubit::H(), thr).to_json()["cases"];
    j["bunching_audit"] = audit;
  }

  json tables = json::object();
  for (auto basis : {TruthTableBasis::Computational, TruthTableBasis::Complementary, TruthTableBasis::MixedRL}) {
    tables[std::string(to_string(basis))] = truth_table_json(truth_table(basis));
  }
  j["truth_tables"] = tables;

  {
    const FidelityBounds b = hofmann_bounds(0.88, 0.90);
    const Parallelism p = parallelism_check(0.88, 0.90, 0.90);
    j["reported_fidelities"] = {{"f1", 0.88},          {"f2", 0.90},       {"f3", 0.90},
                                {"lower", b.lower},    {"upper", b.upper}, {"average", p.average},
                                {"parallelism", p.pass ? "pass" : "fail"}};
  }

  {
    const GateConfig ideal;
    j["ideal_fidelities"] = fidelity_report(to_probability_table(truth_table(TruthTableBasis::Computational)),
                                            to_probability_table(truth_table(TruthTableBasis::Complementary)),
                                            to_probability_table(truth_table(TruthTableBasis::MixedRL)))
                                .to_json();
    j["ideal_process_fidelity"] = process_fidelity(reconstruct_process(ideal));
  }

  {
    json grid = json::array();
    for (double zeta : {1.0, 0.9, 0.8, 0.6}) {
      for (double w : {0.0, 0.1, 0.2}) {
        GateConfig cfg;
        cfg.noise.zeta = zeta;
        cfg.noise.pbs1 = cfg.noise.pbs2 = cfg.noise.pbs3 = PbsImperfection::crosstalk(w);
        const double a = f1(to_probability_table(truth_table(TruthTableBasis::Computational, cfg)));
        const double b = f2(to_probability_table(truth_table(TruthTableBasis::Complementary, cfg)));
        const FidelityBounds bounds = hofmann_bounds(a, b);
        const double fp = process_fidelity(reconstruct_process(cfg));
        grid.push_back({{"zeta", zeta},
                        {"crosstalk", w},
                        {"f1", a},
                        {"f2", b},
                        {"lower", bounds.lower},
                        {"upper", bounds.upper},
                        {"process_fidelity", fp},
                        {"bracketed", bounds.lower <= fp + 1e-12 && fp <= bounds.upper + 1e-6}});
      }
    }
    j["bound_sandwich"] = grid;
  }

  {
    const Visibility v = entangling_visibility();
    json zgrid = json::array();
    for (double zeta : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      GateConfig cfg;
      cfg.noise.zeta = zeta;
      const Visibility vz = entangling_visibility(cfg);
      zgrid.push_back({{"zeta", zeta}, {"hv", vz.hv}, {"pm", vz.pm}, {"bell_criterion", vz.bell_criterion}});
    }
    j["visibility"] = {{"hv", v.hv},
                       {"pm", v.pm},
                       {"threshold", kBellVisibilityThreshold},
                       {"bell_criterion", v.bell_criterion},
                       {"zeta_grid", zgrid}};
  }

  {
    const ScanModel model{10.0, 25.0, 8.0};
    const MziScan exact = simulate_scan(model, linspace(-65.0, 85.0, 2001), std::nullopt);
    j["mzi"] = {{"probability_phi_0", mzi_probability(0.0)},
                {"probability_phi_half_pi", mzi_probability(M_PI / 2)},
                {"probability_phi_pi", mzi_probability(M_PI)},
                {"noiseless_fit", fit_json(fit_envelope(exact))},
                {"true_x0", model.x0}};
  }

  {
    std::set<std::pair<std::string, std::string>> cells;
    const auto count = [&](const auto& terms) {
      for (const auto& [in, outc] : terms) cells.emplace(in, outc);
      return terms.size();
    };
    const std::size_t n1 = count(f1_terms());
    const std::size_t n2 = count(f2_terms());
    const std::size_t n3 = count(f3_terms());
    j["measurement_economy"] = {{"f1_conditional_probabilities", n1},
                                {"f2_conditional_probabilities", n2},
                                {"f3_conditional_probabilities", n3},
                                {"distinct_conditional_probabilities", cells.size()},
                                {"bound_count_cells", 32},
                                {"claimed_measurements", 32},
                                {"tomography_settings", 256}};
  }
  return j;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Linear-optics nondestructive CNOT simulator", "cnotsim"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(0, 1);

  bool explain = false;
  bool dump_circuit = false;
  std::string noise_path;
  std::string seed_text;
  std::string output_path;
  std::string manifest_path;
  app.add_flag("--explain", explain, "Print the physical conventions");
  app.add_flag("--dump-circuit", dump_circuit, "Print the gate circuit (with --noise applied) as JSON");
  app.add_option("--noise", noise_path, "Noise config JSON")->check(CLI::ExistingFile);
  app.add_option("--seed", seed_text, std::string("RNG seed (default: $") + kSeedEnv + " or " +
                                          std::to_string(kDefaultSeed) + ")");
  app.add_option("-o,--output", output_path, "Write the command output to this file");
  app.add_option("--manifest", manifest_path, "Write a run manifest JSON to this file");

  TruthTableArgs tt;
  auto* tt_cmd = app.add_subcommand("truth-table", "Ideal or noisy truth table in one basis")->fallthrough();
  tt_cmd->add_option("--basis", tt.basis)
      ->check(CLI::IsMember({"computational", "complementary", "mixed-rl"}))
      ->capture_default_str();
  tt_cmd->add_option("--format", tt.format)->check(CLI::IsMember({"json", "csv"}))->capture_default_str();

  FidelityArgs fa;
  auto* fid_cmd = app.add_subcommand("fidelity", "F1, F2, F3, fidelity bounds and parallelism")->fallthrough();
  fid_cmd->add_option("--computational", fa.computational, "Counts CSV, H/V inputs and outcomes")
      ->check(CLI::ExistingFile);
  fid_cmd->add_option("--complementary", fa.complementary, "Counts CSV, +/- inputs and outcomes")
      ->check(CLI::ExistingFile);
  fid_cmd->add_option("--mixed-rl", fa.mixed_rl, "Counts CSV, +/- x H/V inputs, R/L outcomes")
      ->check(CLI::ExistingFile);
  auto* sim_flag = fid_cmd->add_flag("--simulate", fa.simulate, "Use simulated tables instead of counts");
  fid_cmd->add_option("--shots", fa.shots, "With --simulate: sample this many counts per input")
      ->capture_default_str()
      ->needs(sim_flag);
  fid_cmd->add_option("--resamples", fa.resamples)->capture_default_str()->check(CLI::PositiveNumber);
  fid_cmd->add_option("--threads", fa.threads, "0: hardware concurrency")->capture_default_str();

  BunchingArgs ba;
  auto* bun_cmd = app.add_subcommand("bunching-audit", "The nine photon-number cases after PBS-1/PBS-2")
                      ->fallthrough();
  bun_cmd->add_option("--control", ba.control)->capture_default_str();
  bun_cmd->add_option("--target", ba.target)->capture_default_str();
  bun_cmd->add_option("--detector", ba.detector)
      ->check(CLI::IsMember({"pnr", "threshold"}))
      ->capture_default_str();
  bun_cmd->add_option("--format", ba.format)->check(CLI::IsMember({"json", "csv"}))->capture_default_str();

  MziArgs ma;
  auto* mzi_cmd = app.add_subcommand("mzi-scan", "Two-photon interference fringe scan")->fallthrough();
  mzi_cmd->add_option("--x0", ma.x0)->capture_default_str();
  mzi_cmd->add_option("--sigma", ma.sigma)->capture_default_str();
  mzi_cmd->add_option("--k", ma.k)->capture_default_str();
  mzi_cmd->add_option("--range", ma.range, "LO HI")->capture_default_str();
  mzi_cmd->add_option("--points", ma.points)->capture_default_str()->check(CLI::Range(2, 10'000'000));
  auto* shots_opt = mzi_cmd->add_option("--shots", ma.shots)->capture_default_str()->check(CLI::PositiveNumber);
  mzi_cmd->add_flag("--exact", ma.exact, "Exact probabilities instead of sampled counts")->excludes(shots_opt);
  mzi_cmd->add_flag("--fit", ma.fit, "Append the envelope fit as a '# fit {json}' line");

  auto* repro_cmd = app.add_subcommand("repro", "Run every check with defaults and emit one JSON")->fallthrough();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    const std::uint64_t seed = seed_text.empty() ? default_seed() : parse_seed(seed_text);
    const NoiseParams noise = load_noise(noise_path);

    std::ostringstream buf;
    if (explain) buf << explain_text();
    if (dump_circuit) buf << build_gate_circuit(noise).to_json().dump(2) << '\n';

    CLI::App* used = nullptr;
    if (tt_cmd->parsed()) {
      used = tt_cmd;
      cmd_truth_table(tt, noise, buf);
    } else if (fid_cmd->parsed()) {
      used = fid_cmd;
      cmd_fidelity(fa, noise, seed, buf);
    } else if (bun_cmd->parsed()) {
      used = bun_cmd;
      if (!noise.is_ideal()) throw std::invalid_argument("bunching-audit is defined for ideal optics only");
      cmd_bunching(ba, buf);
    } else if (mzi_cmd->parsed()) {
      used = mzi_cmd;
      cmd_mzi(ma, seed, buf);
    } else if (repro_cmd->parsed()) {
      used = repro_cmd;
      buf << repro_bundle(seed).dump(2) << '\n';
    } else if (!explain && !dump_circuit) {
      err << app.help();
      return kExitUsage;
    }

    const std::string text = buf.str();
    if (output_path.empty()) {
      out << text;
    } else {
      std::ofstream f(output_path, std::ios::binary);
      if (!f || !(f << text)) throw DataError("cannot write " + output_path);
    }

    if (!manifest_path.empty()) {
      json m;
      m["command"] = used ? used->get_name() : "";
      m["parameters"] = parameters_json(app);
      if (used) m["parameters"].update(parameters_json(*used));
      m["seed"] = seed;
      m["version"] = kVersion;
      m["noise"] = noise.to_json();
      m["outputs"] = {{output_path.empty() ? "stdout" : output_path, {{"sha256", sha256_hex(text)},
                                                                     {"bytes", text.size()}}}};
      std::ofstream f(manifest_path, std::ios::binary);
      if (!f || !(f << m.dump(2) << '\n')) throw DataError("cannot write " + manifest_path);
    }
    return kExitOk;
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConvergence;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::out_of_range& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace cnotsim::cli
