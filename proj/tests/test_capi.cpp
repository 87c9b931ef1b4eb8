// Exercises the shared library through its C header only.
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <string>
#include <thread>

#include "qgnls/qgnls.h"

namespace {

const std::string kData = QGNLS_DATA_DIR;

struct Config {
  qgnls_config* p = nullptr;
  ~Config() { qgnls_config_free(p); }
};

}  // namespace

TEST_CASE("status names and version") {
  CHECK(std::strlen(qgnls_version()) > 0);
  CHECK(std::string(qgnls_status_name(QGNLS_OK)) == "Ok");
  CHECK(std::string(qgnls_status_name(QGNLS_ERR_UNKNOWN_VERTEX)) == "UnknownVertex");
  CHECK(std::string(qgnls_status_name(QGNLS_ERR_OVERLAPPING_PEAKS)) == "OverlappingPeaks");
}

TEST_CASE("graph handles") {
  qgnls_graph* g = nullptr;
  REQUIRE(qgnls_graph_load((kData + "/graphs/figure1.json").c_str(), &g) == QGNLS_OK);
  CHECK(qgnls_graph_vertex_count(g) == 7);
  CHECK(qgnls_graph_edge_count(g) == 18);
  int deg = 0;
  CHECK(qgnls_graph_degree(g, "v3", &deg) == QGNLS_OK);
  CHECK(deg == 5);
  CHECK(qgnls_graph_degree(g, "nope", &deg) == QGNLS_ERR_UNKNOWN_VERTEX);
  CHECK(std::string(qgnls_last_error()).find("nope") != std::string::npos);
  CHECK(qgnls_graph_odd_vertex_count(g, 3) == 5);
  CHECK(qgnls_graph_odd_vertex(g, 3, 99) == nullptr);
  qgnls_graph_free(g);

  g = nullptr;
  CHECK(qgnls_graph_parse(R"({"vertices":["a","b"],"edges":[{"id":"e","from":"a","to":"b","length":0}]})", &g) ==
        QGNLS_ERR_NONPOSITIVE_EDGE_LENGTH);
  CHECK(g == nullptr);
  CHECK(qgnls_graph_parse("{", &g) == QGNLS_ERR_PARSE);
  CHECK(qgnls_graph_load("/nonexistent.json", &g) == QGNLS_ERR_IO);
  CHECK(qgnls_graph_load(nullptr, &g) == QGNLS_ERR_INVALID_ARGUMENT);
  qgnls_graph_free(nullptr);
}

TEST_CASE("config validation through the C interface") {
  Config c;
  REQUIRE(qgnls_config_default_tripod(&c.p) == QGNLS_OK);
  CHECK(qgnls_config_validate(c.p) == QGNLS_OK);

  const char* bad[] = {"c", "zz"};
  CHECK(qgnls_config_set_peaks(c.p, bad, 2) == QGNLS_OK);
  CHECK(qgnls_config_validate(c.p) == QGNLS_ERR_UNKNOWN_VERTEX);
  const char* good[] = {"c"};
  CHECK(qgnls_config_set_peaks(c.p, good, 1) == QGNLS_OK);

  const double b[] = {1.0, 2.0, 3.0};
  CHECK(qgnls_config_set_kernel_coefficients(c.p, "c", b, 3) == QGNLS_OK);
  CHECK(qgnls_config_validate(c.p) == QGNLS_ERR_DIMENSION_MISMATCH);
  CHECK(qgnls_config_set_kernel_coefficients(c.p, "c", b, 2) == QGNLS_OK);
  CHECK(qgnls_config_validate(c.p) == QGNLS_OK);

  const double decreasing[] = {50, 25};
  CHECK(qgnls_config_set_lambda_schedule(c.p, decreasing, 2) == QGNLS_OK);
  CHECK(qgnls_config_validate(c.p) == QGNLS_ERR_INVALID_ARGUMENT);
  CHECK(qgnls_config_set_mu(nullptr, 1.0) == QGNLS_ERR_INVALID_ARGUMENT);

  char* json = nullptr;
  const double ok[] = {25, 50};
  CHECK(qgnls_config_set_lambda_schedule(c.p, ok, 2) == QGNLS_OK);
  REQUIRE(qgnls_config_manifest(c.p, &json) == QGNLS_OK);
  CHECK(std::string(json).find("\"lambda_schedule\"") != std::string::npos);
  qgnls_string_free(json);

  Config loaded;
  CHECK(qgnls_config_load((kData + "/configs/double_tripod.json").c_str(), &loaded.p) == QGNLS_OK);
  CHECK(qgnls_config_validate(loaded.p) == QGNLS_OK);
  Config parsed;
  CHECK(qgnls_config_parse(R"({"graph":"tripod.json","peaks":["c"],"bogus":1})", (kData + "/graphs").c_str(),
                           &parsed.p) == QGNLS_ERR_PARSE);
}

TEST_CASE("solve, rows and artifacts") {
  Config c;
  REQUIRE(qgnls_config_default_tripod(&c.p) == QGNLS_OK);
  const double sched[] = {25, 50, 100};
  REQUIRE(qgnls_config_set_lambda_schedule(c.p, sched, 3) == QGNLS_OK);
  const auto dir = std::filesystem::temp_directory_path() / "qgnls_capi_out";
  std::filesystem::remove_all(dir);
  REQUIRE(qgnls_config_set_output_dir(c.p, dir.c_str()) == QGNLS_OK);

  qgnls_run* run = nullptr;
  REQUIRE(qgnls_run_solve(c.p, &run) == QGNLS_OK);
  REQUIRE(qgnls_run_row_count(run) == 3);
  for (size_t i = 0; i < 3; ++i) {
    qgnls_diagnostics d;
    REQUIRE(qgnls_run_row(run, i, &d) == QGNLS_OK);
    CHECK(d.lambda == sched[i]);
    CHECK(d.converged == 1);
    CHECK(d.min_value > 0.0);
    CHECK(d.mass_ratio == doctest::Approx(1.0).epsilon(0.05));
  }
  qgnls_diagnostics d;
  CHECK(qgnls_run_row(run, 7, &d) == QGNLS_ERR_INDEX_OUT_OF_RANGE);
  CHECK(std::strlen(qgnls_run_config_hash(run)) == 16);
  CHECK(qgnls_run_warning_count(run) == 0);

  ::unsetenv("QGNLS_OUTPUT_DIR");
  CHECK(std::string(qgnls_run_output_dir(run)) == dir.string());
  REQUIRE(qgnls_run_write(run, nullptr) == QGNLS_OK);
  CHECK(std::filesystem::exists(dir / "diagnostics.csv"));
  CHECK(std::filesystem::exists(dir / "manifest.json"));
  CHECK(std::filesystem::exists(dir / "solution_lambda_100.txt"));
  qgnls_run_free(run);
}

TEST_CASE("reduced-energy reports") {
  qgnls_report* r = nullptr;
  REQUIRE(qgnls_reduced_energy(5, 0.2, &r) == QGNLS_OK);
  long long degree = 0;
  CHECK(qgnls_report_degree(r, &degree) == 1);
  CHECK(degree == 6);
  CHECK(qgnls_report_critical_point_count(r) == 6);
  qgnls_report_free(r);

  REQUIRE(qgnls_reduced_energy(4, 0.1, &r) == QGNLS_OK);
  CHECK(qgnls_report_degree(r, &degree) == 0);
  CHECK(qgnls_report_line_count(r) == 6);
  CHECK(std::string(qgnls_report_text(r)).find("degree undefined") != std::string::npos);
  qgnls_report_free(r);

  CHECK(qgnls_reduced_energy(1, 0.1, &r) == QGNLS_ERR_INVALID_ARGUMENT);
}

TEST_CASE("verification subset") {
  const int criteria[] = {2, 3};
  qgnls_verify* v = nullptr;
  REQUIRE(qgnls_verify_run(nullptr, criteria, 2, &v) == QGNLS_OK);
  REQUIRE(qgnls_verify_count(v) == 2);
  qgnls_criterion item;
  REQUIRE(qgnls_verify_item(v, 0, &item) == QGNLS_OK);
  CHECK(item.id == 2);
  CHECK(item.status == QGNLS_CRITERION_PASS);
  CHECK(std::string(qgnls_verify_line(v, 1)).rfind("PASS  3 ", 0) == 0);
  CHECK(qgnls_verify_passed(v) == 1);
  qgnls_verify_free(v);

  const int out_of_range[] = {10};
  CHECK(qgnls_verify_run(nullptr, out_of_range, 1, &v) == QGNLS_ERR_INVALID_ARGUMENT);
}

TEST_CASE("last error is per thread") {
  qgnls_graph* g = nullptr;
  CHECK(qgnls_graph_load("/nonexistent.json", &g) == QGNLS_ERR_IO);
  std::string other;
  std::thread t([&] { other = qgnls_last_error(); });
  t.join();
  CHECK(other.empty());
  CHECK(std::string(qgnls_last_error()).find("nonexistent") != std::string::npos);
}
