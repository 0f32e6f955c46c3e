#include <doctest.h>

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <string>

#include "socl/socl.h"

namespace {

const char kLog[] =
    "comment_id,author_id,parent_id,week,step,timestamp,likes\n"
    "c1,s1,,1,1,2020-01-01T00:00:00Z,0\n"
    "c2,s2,c1,1,1,2020-01-01T01:00:00Z,2\n"
    "c3,s3,,1,2,2020-01-01T02:00:00Z,0\n";

const char kSpec[] =
    "n_students = 120\n"
    "seed = 3\n"
    "persona.A.proportion = 0.5\n"
    "persona.A.n_ice = constant(2)\n"
    "persona.A.n_resp = negbin(4, 0.5)\n"
    "persona.A.n_solo = constant(1)\n"
    "persona.B.proportion = 0.5\n"
    "persona.B.n_ice = constant(0)\n"
    "persona.B.n_resp = constant(1)\n"
    "persona.B.n_solo = negbin(3, 0.5)\n";

std::string take(char* s) {
  REQUIRE(s != nullptr);
  std::string out(s);
  socl_string_free(s);
  return out;
}

}  // namespace

TEST_CASE("capi: version and status names") {
  CHECK(std::strlen(socl_version()) > 0);
  CHECK(std::string(socl_status_name(SOCL_OK)) == "ok");
  CHECK(std::string(socl_status_name(SOCL_ERR_PARSE)) == "parse error");
  socl_string_free(nullptr);
}

TEST_CASE("capi: null arguments are rejected") {
  socl_log* log = nullptr;
  CHECK(socl_log_read_file(nullptr, 0, &log) == SOCL_ERR_INVALID_ARGUMENT);
  CHECK(std::strlen(socl_last_error()) > 0);
  CHECK(socl_log_read_buffer(kLog, sizeof kLog - 1, 0, nullptr) == SOCL_ERR_INVALID_ARGUMENT);
  char* out = nullptr;
  CHECK(socl_log_summary(nullptr, SOCL_FORMAT_JSON, &out) == SOCL_ERR_INVALID_ARGUMENT);
  CHECK(out == nullptr);
  CHECK(socl_run_protocol(nullptr, nullptr, nullptr) == SOCL_ERR_INVALID_ARGUMENT);
  CHECK(socl_log_comment_count(nullptr) == 0);
  socl_log_free(nullptr);
  socl_features_free(nullptr);
  socl_report_free(nullptr);
  socl_cohort_spec_free(nullptr);
}

TEST_CASE("capi: error codes and last error") {
  socl_log* log = nullptr;
  CHECK(socl_log_read_file("/nonexistent/socl/log.csv", 0, &log) == SOCL_ERR_IO);
  CHECK(log == nullptr);
  CHECK(std::string(socl_last_error()).find("nonexistent") != std::string::npos);

  const char bad[] = "comment_id,author_id\nc1,s1\n";
  CHECK(socl_log_read_buffer(bad, sizeof bad - 1, 0, &log) == SOCL_ERR_PARSE);

  const char self_reply[] =
      "comment_id,author_id,parent_id,week,step,timestamp,likes\nc1,s1,c1,1,1,2020-01-01T00:00:00Z,0\n";
  CHECK(socl_log_read_buffer(self_reply, sizeof self_reply - 1, 0, &log) == SOCL_ERR_DATA_INTEGRITY);

  const char dangling[] =
      "comment_id,author_id,parent_id,week,step,timestamp,likes\nc1,s1,zz,1,1,2020-01-01T00:00:00Z,0\n";
  CHECK(socl_log_read_buffer(dangling, sizeof dangling - 1, 1, &log) == SOCL_ERR_DATA_INTEGRITY);
  REQUIRE(socl_log_read_buffer(dangling, sizeof dangling - 1, 0, &log) == SOCL_OK);
  CHECK(std::string(socl_last_error()).empty());
  CHECK(socl_log_warning_count(log) == 1);
  CHECK(socl_log_warning(log, 0) != nullptr);
  CHECK(socl_log_warning(log, 1) == nullptr);
  socl_log_free(log);

  socl_cohort_spec* spec = nullptr;
  const char bad_spec[] = "n_students = 0\n";
  CHECK(socl_cohort_spec_read_buffer(bad_spec, sizeof bad_spec - 1, &spec) != SOCL_OK);
  CHECK(spec == nullptr);
}

TEST_CASE("capi: log to summary and features") {
  socl_log* log = nullptr;
  REQUIRE(socl_log_read_buffer(kLog, sizeof kLog - 1, 0, &log) == SOCL_OK);
  CHECK(socl_log_comment_count(log) == 3);
  char* summary = nullptr;
  REQUIRE(socl_log_summary(log, SOCL_FORMAT_JSON, &summary) == SOCL_OK);
  CHECK(take(summary).find("\"total\": 3") != std::string::npos);

  socl_features* features = nullptr;
  REQUIRE(socl_features_from_log(log, &features) == SOCL_OK);
  CHECK(socl_features_row_count(features) == 3);
  char* csv = nullptr;
  REQUIRE(socl_features_to_csv(features, &csv) == SOCL_OK);
  CHECK(take(csv) == "student_id,n_ice,n_resp,n_solo\ns1,1,0,0\ns2,0,1,0\ns3,0,0,1\n");
  char* stats = nullptr;
  REQUIRE(socl_features_stats(features, SOCL_DENOMINATOR_ALL, SOCL_FORMAT_TEXT, &stats) == SOCL_OK);
  CHECK_FALSE(take(stats).empty());
  socl_features_free(features);
  socl_log_free(log);
}

TEST_CASE("capi: synthesize, cluster and render") {
  socl_cohort_spec* spec = nullptr;
  REQUIRE(socl_cohort_spec_read_buffer(kSpec, sizeof kSpec - 1, &spec) == SOCL_OK);
  CHECK(socl_cohort_spec_emits_log(spec) == 1);
  socl_log* log = nullptr;
  char* truth = nullptr;
  char* rebalancing = nullptr;
  REQUIRE(socl_synth_log(spec, &log, &truth, &rebalancing) == SOCL_OK);
  const auto truth_text = take(truth);
  CHECK(truth_text.rfind("# student_id\tpersona\n", 0) == 0);
  CHECK(std::count(truth_text.begin(), truth_text.end(), '\n') == 121);
  CHECK(take(rebalancing).front() == '[');

  socl_features* features = nullptr;
  REQUIRE(socl_features_from_log(log, &features) == SOCL_OK);
  CHECK(socl_features_row_count(features) == 120);

  socl_protocol_config config;
  socl_protocol_config_init(&config);
  CHECK(config.k_min == 2);
  CHECK(config.alpha == 0.05);
  config.seed = 11;
  config.k_max = 4;
  socl_report* report = nullptr;
  REQUIRE(socl_run_protocol(features, &config, &report) == SOCL_OK);
  CHECK(socl_report_chosen_k(report) >= 2);
  char* a = nullptr;
  char* b = nullptr;
  REQUIRE(socl_report_render(report, SOCL_FORMAT_JSON, &a) == SOCL_OK);
  config.threads = 3;
  socl_report* again = nullptr;
  REQUIRE(socl_run_protocol(features, &config, &again) == SOCL_OK);
  REQUIRE(socl_report_render(again, SOCL_FORMAT_JSON, &b) == SOCL_OK);
  CHECK(take(a) == take(b));

  const auto dir = std::filesystem::temp_directory_path() / "socl_capi_test";
  std::filesystem::remove_all(dir);
  REQUIRE(socl_report_write_files(report, dir.string().c_str()) == SOCL_OK);
  CHECK(std::filesystem::exists(dir / "report.json"));
  std::filesystem::remove_all(dir);

  char* elbow = nullptr;
  char* plot = nullptr;
  REQUIRE(socl_elbow(features, 1, 5, 3, 1, 1, SOCL_FORMAT_JSON, &elbow, &plot) == SOCL_OK);
  CHECK(take(elbow).find("points") != std::string::npos);
  CHECK(take(plot).rfind("# k\twcss\n", 0) == 0);
  CHECK(socl_elbow(features, 3, 2, 3, 1, 1, SOCL_FORMAT_JSON, &elbow, nullptr) == SOCL_ERR_INVALID_ARGUMENT);

  config.k_min = 0;
  socl_report* rejected = nullptr;
  CHECK(socl_run_protocol(features, &config, &rejected) == SOCL_ERR_INVALID_ARGUMENT);
  CHECK(rejected == nullptr);

  socl_report_free(again);
  socl_report_free(report);
  socl_features_free(features);
  socl_log_free(log);

  socl_features* direct = nullptr;
  socl_cohort_spec_set_seed(spec, 4);
  REQUIRE(socl_synth_features(spec, &direct, nullptr) == SOCL_OK);
  CHECK(socl_features_row_count(direct) == 120);
  socl_features_free(direct);
  socl_cohort_spec_free(spec);
}
