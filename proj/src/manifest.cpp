#include "psr/manifest.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>

#include "psr/errors.hpp"

namespace psr {

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= static_cast<std::uint64_t>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string config_hash_hex(const nlohmann::json& config) {
  // nlohmann's default object is key-sorted, so dump() is already canonical.
  const std::uint64_t h = fnv1a64(config.dump());
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string utc_timestamp() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace

std::filesystem::path write_run(const std::filesystem::path& out_root,
                                const ExperimentConfig& cfg, const ExperimentResult& result,
                                const std::string& started_utc, double wall_seconds,
                                int workers) {
  const nlohmann::json config_json = cfg.to_json();
  const std::string hash = config_hash_hex(config_json);
  const std::filesystem::path dir = out_root / cfg.name / hash;
  std::filesystem::create_directories(dir);

  write_text(dir / "config.json", config_json.dump(2) + "\n");
  write_text(dir / "records.csv", result.records_csv);
  write_text(dir / "summary.json", result.summary.dump(2) + "\n");
  if (result.extra_csv) write_text(dir / result.extra_csv_name, *result.extra_csv);

  nlohmann::json manifest;
  manifest["tool_version"] = kToolVersion;
  manifest["experiment"] = cfg.name;
  manifest["config_hash"] = hash;
  manifest["seed"] = cfg.seed;
  manifest["started_utc"] = started_utc;
  manifest["finished_utc"] = utc_timestamp();
  manifest["wall_seconds"] = wall_seconds;
  manifest["solve_seconds"] = result.total_solve_seconds;
  manifest["workers"] = workers;
  manifest["files"] = nlohmann::json::array({"config.json", "records.csv", "summary.json"});
  if (result.extra_csv) manifest["files"].push_back(result.extra_csv_name);
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  return dir;
}

}  // namespace psr
