#include "cnotsim/cli.hpp"
#include "cnotsim/noise.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using namespace cnotsim;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch() {
  const fs::path dir = fs::temp_directory_path() / ("cnotsim_cli_test_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

}  // namespace

TEST_CASE("sha256 known answers") {
  CHECK(cli::sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(cli::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("same seed, same bytes") {
  const std::vector<std::string> mzi = {"--seed", "17", "mzi-scan", "--points", "201", "--shots", "500"};
  const Result a = invoke(mzi);
  const Result b = invoke(mzi);
  REQUIRE(a.code == cli::kExitOk);
  CHECK(a.out == b.out);
  auto other = mzi;
  other[1] = "18";
  CHECK(invoke(other).out != a.out);

  // Ideal tables are deterministic, so the Poisson errors vanish.
  const std::vector<std::string> fid = {"--seed", "3", "fidelity", "--simulate", "--shots", "2000", "--resamples", "200"};
  const Result f = invoke(fid);
  REQUIRE(f.code == cli::kExitOk);
  CHECK(f.out == invoke(fid).out);
  const auto j = nlohmann::json::parse(f.out);
  CHECK(j["f1"].get<double>() > 0.97);
  CHECK(j["sigma"]["f1"].get<double>() == 0.0);

  ::setenv(cli::kSeedEnv, "17", 1);
  CHECK(invoke({"mzi-scan", "--points", "201", "--shots", "500"}).out == a.out);
  ::unsetenv(cli::kSeedEnv);
}

TEST_CASE("exit codes") {
  CHECK(invoke({"--version"}).code == cli::kExitOk);
  CHECK(invoke({"--help"}).code == cli::kExitOk);
  CHECK(invoke({"--bogus"}).code == cli::kExitUsage);
  CHECK(invoke({"truth-table", "--basis", "diagonal"}).code == cli::kExitUsage);
  CHECK(invoke({"mzi-scan", "--sigma", "0", "--exact"}).code == cli::kExitUsage);
  CHECK(invoke({"mzi-scan", "--exact", "--shots", "10"}).code == cli::kExitUsage);
  CHECK(invoke({"--seed", "notanumber", "repro"}).code == cli::kExitUsage);
  CHECK(invoke({"mzi-scan", "--exact", "--points", "5", "--fit"}).code == cli::kExitData);
  CHECK(invoke({"fidelity", "--computational", "/nonexistent.csv", "--complementary", "/nonexistent.csv"}).code ==
        cli::kExitUsage);

  const fs::path dir = scratch();
  spit(dir / "bad.csv", "input,outcome,count\nHH,HH,x\n");
  spit(dir / "pm.csv", "input,outcome,count\n++,++,1\n+-,--,1\n-+,-+,1\n--,+-,1\n");
  const Result bad = invoke({"fidelity", "--computational", (dir / "bad.csv").string(), "--complementary",
                             (dir / "pm.csv").string()});
  CHECK(bad.code == cli::kExitData);
  CHECK_FALSE(bad.err.empty());
  // Complementary data passed as computational.
  CHECK(invoke({"fidelity", "--computational", (dir / "pm.csv").string(), "--complementary",
                (dir / "pm.csv").string()})
            .code == cli::kExitData);

  spit(dir / "noise.json", "{not json");
  CHECK(invoke({"--noise", (dir / "noise.json").string(), "truth-table"}).code == cli::kExitData);
  fs::remove_all(dir);
}

TEST_CASE("fidelity from counts files") {
  const fs::path dir = scratch();
  spit(dir / "hv.csv", "input,outcome,count\nHH,HH,220\nHH,HV,10\nHH,VH,10\nHH,VV,10\n"
                       "HV,HV,220\nHV,HH,30\nVH,VV,220\nVH,VH,30\nVV,VH,220\nVV,VV,30\n");
  spit(dir / "pm.csv", "input,outcome,count\n++,++,225\n++,+-,25\n+-,--,225\n+-,-+,25\n"
                       "-+,-+,225\n-+,++,25\n--,+-,225\n--,--,25\n");
  const Result r = invoke({"fidelity", "--computational", (dir / "hv.csv").string(), "--complementary",
                           (dir / "pm.csv").string(), "--resamples", "500"});
  REQUIRE(r.code == cli::kExitOk);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["f1"].get<double>() == doctest::Approx(0.88));
  CHECK(j["f2"].get<double>() == doctest::Approx(0.90));
  CHECK(j["lower"].get<double>() == doctest::Approx(0.78));
  CHECK(j["upper"].get<double>() == doctest::Approx(0.88));
  CHECK(j["f3"].is_null());
  CHECK(j["parallelism"] == "unavailable");
  fs::remove_all(dir);
}

TEST_CASE("output file and manifest") {
  const fs::path dir = scratch();
  const fs::path out = dir / "tt.csv";
  const fs::path manifest = dir / "run.json";
  const Result r = invoke({"--seed", "5", "-o", out.string(), "--manifest", manifest.string(), "truth-table",
                           "--basis", "mixed-rl", "--format", "csv"});
  REQUIRE(r.code == cli::kExitOk);
  CHECK(r.out.empty());
  const std::string body = slurp(out);
  CHECK(body.rfind("input,outcome,probability,success_probability\n", 0) == 0);

  const auto m = nlohmann::json::parse(slurp(manifest));
  CHECK(m["command"] == "truth-table");
  CHECK(m["seed"] == 5);
  CHECK(m["version"] == cli::kVersion);
  CHECK(m["parameters"]["basis"] == "mixed-rl");
  REQUIRE(m["outputs"].size() == 1);
  const auto& entry = m["outputs"].begin().value();
  CHECK(entry["sha256"] == cli::sha256_hex(body));
  CHECK(entry["bytes"] == body.size());
  fs::remove_all(dir);
}

TEST_CASE("ideal noise file changes nothing") {
  const fs::path dir = scratch();
  spit(dir / "ideal.json", NoiseParams{}.to_json().dump());
  for (const char* basis : {"computational", "complementary", "mixed-rl"}) {
    const Result plain = invoke({"truth-table", "--basis", basis});
    const Result with = invoke({"--noise", (dir / "ideal.json").string(), "truth-table", "--basis", basis});
    REQUIRE(with.code == cli::kExitOk);
    CHECK(plain.out == with.out);
  }
  spit(dir / "noisy.json", R"({"zeta": 0.5})");
  CHECK(invoke({"--noise", (dir / "noisy.json").string(), "bunching-audit"}).code == cli::kExitUsage);
  CHECK(invoke({"--noise", (dir / "noisy.json").string(), "truth-table"}).out != invoke({"truth-table"}).out);
  fs::remove_all(dir);
}

TEST_CASE("explain, dump-circuit and bunching audit") {
  const Result e = invoke({"--explain"});
  CHECK(e.code == cli::kExitOk);
  CHECK(e.out == cli::explain_text());
  CHECK(e.out.find("|+>") != std::string::npos);

  const auto circuit = nlohmann::json::parse(invoke({"--dump-circuit"}).out);
  CHECK(circuit["elements"].size() >= 3);

  const Result pnr = invoke({"bunching-audit", "--format", "json"});
  REQUIRE(pnr.code == cli::kExitOk);
  CHECK_FALSE(nlohmann::json::parse(pnr.out).empty());
  CHECK(invoke({"bunching-audit", "--detector", "threshold"}).code == cli::kExitOk);
}
