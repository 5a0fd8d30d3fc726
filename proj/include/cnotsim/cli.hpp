#pragma once

// Command-line front end. `run` is the whole program minus process startup so
// tests can drive it in-process.

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace cnotsim::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitConvergence = 4;

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kSeedEnv = "CNOTSIM_SEED";
inline constexpr std::uint64_t kDefaultSeed = 20061;

/// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::string sha256_hex(std::string_view data);

/// Text printed by --explain.
std::string explain_text();

/// Everything `repro` prints: one JSON object per checked claim.
nlohmann::json repro_bundle(std::uint64_t seed);

}  // namespace cnotsim::cli
