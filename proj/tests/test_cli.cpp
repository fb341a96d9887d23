#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

struct CmdResult {
  int code = -1;
  std::string out;
  std::string err;
};

CmdResult run_cli(const std::string& args) {
  static int counter = 0;
  const fs::path base = fs::temp_directory_path() / ("psr_cli_" + std::to_string(++counter));
  const fs::path so = base.string() + ".out";
  const fs::path se = base.string() + ".err";
  const std::string cmd =
      std::string(PSR_CLI_PATH) + " " + args + " >" + so.string() + " 2>" + se.string();
  const int raw = std::system(cmd.c_str());
  CmdResult r;
  r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = slurp(so);
  r.err = slurp(se);
  fs::remove(so);
  fs::remove(se);
  return r;
}

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "psr_cli_scratch";
  fs::create_directories(dir);
  return dir;
}

std::string data(const char* name) { return std::string(PSR_DATA_DIR) + "/" + name; }

std::string tiny_fit_args() {
  return "fit --A " + data("tiny_A.csv") + " --y " + data("tiny_y.csv") + " --lambda0 " +
         data("tiny_lambda0.csv");
}

}  // namespace

TEST_CASE("fit writes a feasible converged solution") {
  const fs::path out = scratch_dir() / "fit_ml.json";
  const CmdResult r = run_cli(tiny_fit_args() + " --budget 1.0 --out " + out.string());
  REQUIRE(r.code == 0);
  CHECK(r.out.find("wrote") != std::string::npos);

  const json j = json::parse(slurp(out));
  CHECK(j["estimator"] == "ml");
  CHECK(j["converged"] == true);
  REQUIRE(j["w_hat"].size() == 3);
  double sum = 0.0;
  for (const auto& v : j["w_hat"]) {
    CHECK(v.get<double>() >= 0.0);
    sum += v.get<double>();
  }
  CHECK(sum <= 1.0 + 1e-9);
  CHECK(j["support"].size() == j["w_thresholded"].size() -
                                   static_cast<std::size_t>(std::count_if(
                                       j["w_thresholded"].begin(), j["w_thresholded"].end(),
                                       [](const json& v) { return v.get<double>() == 0.0; })));
  CHECK(j["manifest"]["tool_version"] == "1.0.0");
  CHECK(j["manifest"]["config_hash"].get<std::string>().size() == 16);
}

TEST_CASE("fit accepts a scalar background rate and the quadratic estimator") {
  const fs::path out = scratch_dir() / "fit_lasso.json";
  const CmdResult r = run_cli("fit --A " + data("tiny_A.csv") + " --y " + data("tiny_y.csv") +
                              " --lambda0 2.0 --estimator lasso --budget 1.0 --out " +
                              out.string());
  REQUIRE(r.code == 0);
  const json j = json::parse(slurp(out));
  CHECK(j["estimator"] == "lasso");
  CHECK(j["converged"] == true);
}

TEST_CASE("fit enforces exactly one of budget and eta") {
  const fs::path out = scratch_dir() / "fit_conflict.json";
  CHECK(run_cli(tiny_fit_args() + " --budget 1 --eta 0.1 --out " + out.string()).code == 2);
  CHECK(run_cli(tiny_fit_args() + " --out " + out.string()).code == 2);
}

TEST_CASE("fit rejects bad flag values with exit 2") {
  const fs::path out = scratch_dir() / "fit_bad.json";
  CHECK(run_cli(tiny_fit_args() + " --budget 1 --estimator blah --out " + out.string()).code ==
        2);
  CHECK(run_cli(tiny_fit_args() + " --budget 1 --threshold 0 --out " + out.string()).code == 2);
  CHECK(run_cli(tiny_fit_args() + " --budget -2 --out " + out.string()).code == 2);
  CHECK(run_cli("fit --A " + data("tiny_A.csv") + " --out x.json").code == 2);  // --y missing
}

TEST_CASE("fit reports unreadable or inconsistent data with exit 1") {
  const fs::path out = scratch_dir() / "fit_io.json";
  const CmdResult missing = run_cli("fit --A /nonexistent/A.csv --y " + data("tiny_y.csv") +
                                    " --budget 1 --out " + out.string());
  CHECK(missing.code == 1);
  CHECK(missing.err.find("/nonexistent/A.csv") != std::string::npos);

  const fs::path frac = scratch_dir() / "frac_y.csv";
  std::ofstream(frac) << "1\n2.5\n0\n1\n2\n0\n1\n3\n";
  const CmdResult bad = run_cli("fit --A " + data("tiny_A.csv") + " --y " + frac.string() +
                                " --lambda0 1 --budget 1 --out " + out.string());
  CHECK(bad.code == 1);
  CHECK(bad.err.find("integer") != std::string::npos);
}

TEST_CASE("fit exits 3 when the iteration cap stops the solve") {
  const fs::path out = scratch_dir() / "fit_capped.json";
  const CmdResult r =
      run_cli(tiny_fit_args() + " --budget 1.0 --max-iters 1 --out " + out.string());
  CHECK(r.code == 3);
  const json j = json::parse(slurp(out));  // result is still written
  CHECK(j["converged"] == false);
  CHECK(j["iterations"] == 1);
}

TEST_CASE("experiment runs a preset and reruns byte-identically") {
  const fs::path root = scratch_dir() / "runs";
  fs::remove_all(root);
  const std::string preset = std::string(PSR_PRESET_DIR) + "/desk/tr_small.json";

  const CmdResult first = run_cli("experiment --config " + preset + " --out " + root.string() +
                                  " --workers 2");
  REQUIRE(first.code == 0);
  REQUIRE(first.out.rfind("wrote ", 0) == 0);
  const fs::path dir = first.out.substr(6, first.out.size() - 7);  // trim trailing newline
  REQUIRE(fs::exists(dir / "records.csv"));
  REQUIRE(fs::exists(dir / "summary.json"));
  REQUIRE(fs::exists(dir / "manifest.json"));
  REQUIRE(fs::exists(dir / "config.json"));

  const std::string records = slurp(dir / "records.csv");
  const json summary = json::parse(slurp(dir / "summary.json"));
  const auto& pts = summary["curves"]["ml"];
  REQUIRE(pts.size() == 5);
  // Recovery improves with rows on this preset: final point beats the first.
  CHECK(pts[4]["success_mean"].get<double>() > pts[0]["success_mean"].get<double>());

  const json manifest = json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["workers"] == 2);
  CHECK(manifest["experiment"] == "transition_vs_n");
  CHECK(manifest["config_hash"] == dir.filename().string());

  // Rerun with a different worker count: records must not move by a byte.
  const CmdResult second = run_cli("experiment --config " + preset + " --out " +
                                   root.string() + " --workers 1");
  REQUIRE(second.code == 0);
  CHECK(slurp(dir / "records.csv") == records);
}

TEST_CASE("experiment rejects broken configs with exit 1") {
  const fs::path root = scratch_dir() / "runs_bad";
  CHECK(run_cli("experiment --config /nonexistent/cfg.json --out " + root.string()).code == 1);

  const fs::path syntax = scratch_dir() / "syntax.json";
  std::ofstream(syntax) << "{ not json";
  const CmdResult parse = run_cli("experiment --config " + syntax.string() + " --out " +
                                  root.string());
  CHECK(parse.code == 1);
  CHECK(parse.err.find("syntax.json") != std::string::npos);

  const fs::path unknown = scratch_dir() / "unknown_key.json";
  std::ofstream(unknown)
      << R"({"name":"roc","p":10,"k":2,"n":20,"m":2,"bogus":1})";
  const CmdResult uk = run_cli("experiment --config " + unknown.string() + " --out " +
                               root.string());
  CHECK(uk.code == 1);
  CHECK(uk.err.find("bogus") != std::string::npos);

  const fs::path noname = scratch_dir() / "noname.json";
  std::ofstream(noname) << R"({"p":10,"k":2})";
  CHECK(run_cli("experiment --config " + noname.string() + " --out " + root.string()).code ==
        1);
}

TEST_CASE("conditions reports unit curvature for a scaled identity design") {
  const fs::path id_csv = scratch_dir() / "identity_design.csv";
  {
    std::ofstream out(id_csv);
    out.precision(17);
    const double r = std::sqrt(8.0);
    for (int i = 0; i < 8; ++i) {
      for (int j = 0; j < 8; ++j) out << (j ? "," : "") << (i == j ? r : 0.0);
      out << "\n";
    }
  }
  const CmdResult r =
      run_cli("conditions --A " + id_csv.string() + " --k 2 --samples 200 --seed 3");
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(std::abs(j["gamma_k"].get<double>() - 1.0) < 1e-9);
  CHECK(j["num_samples"] == 200);
  CHECK(j["truth_support"].size() == 2);
  CHECK(j["beta_sk"].is_number());
  CHECK(j["beta_sk"].get<double>() > 0.0);
  CHECK(j["accepted_samples"].get<long>() > 0);
}

TEST_CASE("conditions validates its flags") {
  const std::string A = data("tiny_A.csv");
  CHECK(run_cli("conditions --A " + A + " --k 2 --samples 0").code == 2);
  CHECK(run_cli("conditions --A " + A + " --k 0").code == 2);
  CHECK(run_cli("conditions --A " + A + " --k 7").code == 2);  // k > columns
  CHECK(run_cli("conditions --A " + A + " --k 2 --s -1").code == 2);
  CHECK(run_cli("conditions --A /nonexistent/A.csv --k 2").code == 1);
  CHECK(run_cli("conditions --k 2").code == 2);  // --A missing
}

TEST_CASE("bounds evaluates the error-decay form") {
  const CmdResult r = run_cli(
      "bounds --which cor2 --s 2.7182818284590452 --gamma 1 --n 1 --lambda-min 1");
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(std::abs(j["error_bound"].get<double>() - 2.1170000166126747) < 1e-12);
  CHECK(std::abs(j["n_floor"].get<double>() - 12.182493960703473) < 1e-12);
  CHECK(std::abs(j["confidence"].get<double>() - 0.63212055882855768) < 1e-12);
  CHECK(j["below_floor"] == true);
  CHECK(j["degenerate_scale"] == false);

  // A doubled leading constant doubles the bound.
  const CmdResult scaled = run_cli(
      "bounds --which cor2 --s 2.7182818284590452 --gamma 1 --n 1 --lambda-min 1 "
      "--C-prime 2");
  const json js = json::parse(scaled.out);
  CHECK(std::abs(js["error_bound"].get<double>() - 2.0 * 2.1170000166126747) < 1e-12);
}

TEST_CASE("bounds reports degenerate scales as data, not failure") {
  const CmdResult r =
      run_cli("bounds --which thm1 --s 0.5 --beta 0.3 --lambda-min 1 --epsilon 0.2");
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["degenerate_scale"] == true);
  CHECK(j["reason"].get<std::string>().find("s > 1") != std::string::npos);
}

TEST_CASE("bounds evaluates the poisson tail form and its domain") {
  const CmdResult r = run_cli("bounds --which bernstein --lambda 5 --n 100 --t 1");
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(std::abs(j["deviation_threshold"].get<double>() - 0.44721359549995794) < 1e-13);
  CHECK(std::abs(j["probability_bound"].get<double>() - 0.73575888234288464) < 1e-13);
  CHECK(j["t_max"].get<double>() == 5.0);

  CHECK(run_cli("bounds --which bernstein --lambda 5 --n 100 --t 6").code == 2);
  CHECK(run_cli("bounds --which bernstein --t 1").code == 2);  // no rates given
  CHECK(run_cli("bounds --which bogus --s 2").code == 2);
}

TEST_CASE("bounds insists on the flags each form needs") {
  const CmdResult r = run_cli("bounds --which thm1 --s 4 --lambda-min 1 --epsilon 0.2");
  CHECK(r.code == 2);
  CHECK(r.err.find("--beta") != std::string::npos);
  CHECK(run_cli("bounds --which cor2 --s 4 --gamma 1 --n 100").code == 2);
  CHECK(run_cli("bounds --which thm4 --s 4 --k 2 --lambda-min 1 --epsilon 0.1").code == 2);
}

TEST_CASE("sample-complexity forms match their closed-form values through the cli") {
  const CmdResult r1 = run_cli(
      "bounds --which thm1 --s 4 --beta 0.3 --lambda-min 0.5 --epsilon 0.2 --e-prob 0.05");
  REQUIRE(r1.code == 0);
  const json j1 = json::parse(r1.out);
  CHECK(std::abs(j1["n_min"].get<double>() - 196925.91685666337) / 196925.9 < 1e-12);
  CHECK(j1["epsilon_ok"] == true);

  const CmdResult r4 = run_cli(
      "bounds --which thm4 --p 100 --k 3 --s 4 --lambda-min 0.5 --epsilon 0.2 --e-prob 0.05");
  REQUIRE(r4.code == 0);
  const json j4 = json::parse(r4.out);
  CHECK(std::abs(j4["n_min"].get<double>() - 3031715.3813264157) / 3031715.0 < 1e-12);
}
