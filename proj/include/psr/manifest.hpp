#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "psr/experiments.hpp"

namespace psr {

inline constexpr const char* kToolVersion = "1.0.0";

// FNV-1a 64-bit hash of a byte string.
std::uint64_t fnv1a64(const std::string& bytes);

// Hash of the canonical (sorted-key, compact) JSON dump of a config, as 16
// lowercase hex digits. Two configs hash alike iff they normalize alike.
std::string config_hash_hex(const nlohmann::json& config);

// Current UTC time, ISO 8601 with seconds ("2025-01-31T12:34:56Z").
std::string utc_timestamp();

// Writes one experiment run under
//   <out_root>/<experiment>/<hash16>/
//     config.json   normalized config used for the run
//     records.csv   per-trial records (deterministic; byte-identical on rerun)
//     summary.json  aggregate curves/statistics
//     manifest.json run metadata (version, hash, seed, timestamps, durations)
//     <extra>.csv   optional secondary table (experiment-specific)
// Returns the run directory. Existing files are overwritten.
std::filesystem::path write_run(const std::filesystem::path& out_root,
                                const ExperimentConfig& cfg, const ExperimentResult& result,
                                const std::string& started_utc, double wall_seconds,
                                int workers);

}  // namespace psr
