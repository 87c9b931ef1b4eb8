#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qgnls/error.hpp"
#include "qgnls/experiment.hpp"
#include "qgnls/verify.hpp"

using namespace qgnls;
namespace fs = std::filesystem;

namespace {

const std::string kData = QGNLS_DATA_DIR;

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::Internal;
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("qgnls_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("config loads with relative graph path") {
  const auto cfg = load_experiment_config(kData + "/configs/tripod.json");
  CHECK(cfg.peaks == std::vector<std::string>{"c"});
  CHECK(cfg.lambda_schedule.size() == 5);
  const auto prep = prepare_experiment(cfg);
  CHECK(prep.graph->vertex_count() == 4);
  CHECK(prep.peak_weight == 1.5);
  CHECK(prep.warnings.empty());
}

TEST_CASE("every shipped config validates") {
  for (const auto& entry : fs::directory_iterator(kData + "/configs")) {
    CAPTURE(entry.path().string());
    CHECK_NOTHROW(prepare_experiment(load_experiment_config(entry.path().string())));
  }
}

TEST_CASE("strict config parsing") {
  CHECK(code_of([] { parse_experiment_config(R"({"graph":"x.json","peaks":["c"],"speed":3})"); }) == ErrorCode::Parse);
  CHECK(code_of([] { parse_experiment_config(R"({"graph":"x.json","solver":{"tol":1}})"); }) == ErrorCode::Parse);
  CHECK(code_of([] { parse_experiment_config("{not json"); }) == ErrorCode::Parse);
}

TEST_CASE("validation failures surface before any solve") {
  auto cfg = default_tripod_config();
  cfg.peaks = {"nowhere"};
  CHECK(code_of([&] { prepare_experiment(cfg); }) == ErrorCode::UnknownVertex);

  cfg = default_tripod_config();
  cfg.lambda_schedule = {50, 25};
  CHECK(code_of([&] { prepare_experiment(cfg); }) == ErrorCode::InvalidArgument);

  cfg = default_tripod_config();
  cfg.lambda_schedule = {};
  CHECK(code_of([&] { prepare_experiment(cfg); }) == ErrorCode::InvalidArgument);

  cfg = default_tripod_config();
  cfg.b["c"] = {1.0};
  CHECK(code_of([&] { prepare_experiment(cfg); }) == ErrorCode::DimensionMismatch);

  cfg = default_tripod_config();
  cfg.b["a"] = {};
  CHECK(code_of([&] { prepare_experiment(cfg); }) == ErrorCode::InvalidArgument);

  cfg = default_tripod_config();
  cfg.shift["c"] = 0.3;
  CHECK(code_of([&] { prepare_experiment(cfg); }) == ErrorCode::OddNWithShift);

  cfg = default_tripod_config();
  cfg.mu = 0.25;
  CHECK(code_of([&] { prepare_experiment(cfg); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("overlapping peaks name both vertices") {
  auto cfg = default_tripod_config();
  cfg.peaks = {"c", "a"};
  cfg.radius = {{"c", 0.4}, {"a", 0.4}};
  try {
    prepare_experiment(cfg);
    FAIL("overlap accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OverlappingPeaks);
    const std::string msg = e.what();
    CHECK(msg.find("'c'") != std::string::npos);
    CHECK(msg.find("'a'") != std::string::npos);
  }
}

TEST_CASE("even-degree peaks run with an exploratory warning") {
  const auto prep = prepare_experiment(load_experiment_config(kData + "/configs/star4_exploratory.json"));
  REQUIRE_FALSE(prep.warnings.empty());
  CHECK(prep.warnings[0].find("exploratory") != std::string::npos);
  CHECK_FALSE(within_hypotheses(prep));
}

TEST_CASE("default truncation") {
  CHECK(default_truncation({25, 50}) == 10.0);
  CHECK(default_truncation({1, 4}) == 30.0);
  CHECK(default_truncation({4}) == 15.0);
}

TEST_CASE("tripod run, artifacts and determinism") {
  auto cfg = default_tripod_config();
  const auto prep = prepare_experiment(cfg);
  const auto run1 = run_experiment(prep);
  REQUIRE(run1.rows.size() == 5);
  for (const auto& row : run1.rows) {
    CHECK(row.converged);
    CHECK(row.max_peak_offset <= row.max_peak_cell);
  }

  // log(mass) against log(lambda) over the last three points
  std::vector<double> l, m;
  for (size_t k = 2; k < run1.rows.size(); ++k) {
    l.push_back(run1.rows[k].lambda);
    m.push_back(run1.rows[k].mass);
  }
  CHECK(log_log_slope(l, m) == doctest::Approx(0.5).epsilon(0.05 / 0.5));

  const auto d1 = scratch("run1"), d2 = scratch("run2");
  write_artifacts(run1, d1.string());
  write_artifacts(run_experiment(prepare_experiment(cfg)), d2.string());
  const auto csv = slurp(d1 / "diagnostics.csv");
  CHECK(csv == slurp(d2 / "diagnostics.csv"));
  CHECK(csv.rfind("# config_hash=" + config_hash(prep), 0) == 0);
  int lines = 0;
  for (char c : csv) lines += c == '\n';
  CHECK(lines == 2 + 5);
  for (double lam : cfg.lambda_schedule) {
    char name[64];
    std::snprintf(name, sizeof name, "solution_lambda_%g.txt", lam);
    const auto dump = slurp(d1 / name);
    CHECK(dump.find("# edge e1 from c to a length 1") != std::string::npos);
  }
}

TEST_CASE("manifest echoes every resolved parameter") {
  const auto prep = prepare_experiment(default_tripod_config());
  const auto m = nlohmann::json::parse(manifest_json(prep));
  for (const char* key : {"graph", "mu", "peaks", "alpha", "cutoff", "lambda_schedule", "mesh", "truncation",
                          "solver", "output_dir", "peak_mode", "peak_weight"}) {
    CAPTURE(key);
    CHECK(m.contains(key));
  }
  for (const char* key : {"nodes_per_width", "coarse_factor", "min_intervals", "growth_reference", "refinement"}) {
    CAPTURE(key);
    CHECK(m["mesh"].contains(key));
  }
  for (const char* key : {"newton_tol", "max_iters", "damping", "armijo", "pin_kernel"}) {
    CAPTURE(key);
    CHECK(m["solver"].contains(key));
  }
  // defaulted per-peak values are written out
  REQUIRE(m["peaks"].size() == 1);
  for (const char* key : {"vertex", "b", "shift", "radius", "degree"}) {
    CAPTURE(key);
    CHECK(m["peaks"][0].contains(key));
  }
  CHECK(m["peaks"][0]["b"].size() == 2);
  CHECK(m["truncation"].get<double>() == 10.0);
  CHECK(config_hash(prep).size() == 16);
}

TEST_CASE("output directory override from the environment") {
  auto cfg = default_tripod_config();
  cfg.output_dir = "from_config";
  ::unsetenv("QGNLS_OUTPUT_DIR");
  CHECK(resolve_output_dir(cfg) == "from_config");
  ::setenv("QGNLS_OUTPUT_DIR", "/tmp/elsewhere", 1);
  CHECK(resolve_output_dir(cfg) == "/tmp/elsewhere");
  ::setenv("QGNLS_OUTPUT_DIR", "", 1);
  CHECK(resolve_output_dir(cfg) == "from_config");
  ::unsetenv("QGNLS_OUTPUT_DIR");
}

TEST_CASE("reduced-energy report text") {
  const auto odd = format_reduced_energy(reduced_energy_report(3));
  CHECK(odd.find("degree: -2") != std::string::npos);
  const auto five = format_reduced_energy(reduced_energy_report(5));
  CHECK(five.find("degree: 6") != std::string::npos);
  const auto even = format_reduced_energy(reduced_energy_report(4));
  CHECK(even.find("critical directions: 6") != std::string::npos);
  CHECK(even.find("degree undefined (degenerate lines)") != std::string::npos);
}

TEST_CASE("verification on an even-degree suite skips the odd-degree criteria") {
  VerifyOptions opt;
  opt.suite = load_experiment_config(kData + "/configs/star4_exploratory.json");
  opt.criteria = {4, 5, 6, 8};
  const auto results = run_verification(opt);
  REQUIRE(results.size() == 4);
  for (const auto& r : results) {
    CHECK(r.status == CriterionStatus::Skip);
    CHECK(r.detail.find("outside existence hypotheses") != std::string::npos);
  }
}

TEST_CASE("a deliberately coarse mesh fails the order check") {
  VerifyOptions opt;
  opt.suite = load_experiment_config(kData + "/configs/coarse_tripod.json");
  opt.criteria = {9};
  const auto results = run_verification(opt);
  REQUIRE(results.size() == 1);
  CHECK(results[0].status == CriterionStatus::Fail);
  CHECK(format_criterion(results[0]).rfind("FAIL  9 ", 0) == 0);
}
