#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "socl/errors.hpp"
#include "socl/report.hpp"

using namespace socl;
using namespace socl::report;

namespace {

features::StudentFeatureTable sample_table() {
  std::mt19937_64 rng(4);
  features::StudentFeatureTable t;
  for (std::size_t i = 0; i < 300; ++i) {
    const std::int64_t scale = i < 15 ? 30 : (i < 60 ? 8 : 1);
    char id[16];
    std::snprintf(id, sizeof id, "s%03zu", i);
    t.rows.push_back({id, scale * static_cast<std::int64_t>(rng() % 4), scale * static_cast<std::int64_t>(rng() % 5),
                      1 + static_cast<std::int64_t>(rng() % 6)});
  }
  return t;
}

const protocol::KSelectionReport& sample_report() {
  static const auto report = [] {
    protocol::ProtocolConfig config;
    config.seed = 2;
    return protocol::run_protocol(sample_table(), config);
  }();
  return report;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("format names") {
  CHECK(parse_format("json") == Format::Json);
  CHECK(parse_format("text") == Format::Text);
  CHECK_THROWS_AS(parse_format("xml"), Error);
}

TEST_CASE("report rendering is byte-stable") {
  const auto& report = sample_report();
  CHECK(render_report(report, Format::Json) == render_report(report, Format::Json));
  CHECK(render_report(report, Format::Text) == render_report(report, Format::Text));
}

TEST_CASE("report JSON parses back to the same structure") {
  const auto& report = sample_report();
  const auto text = render_report(report, Format::Json);
  const auto parsed = nlohmann::json::parse(text);
  CHECK(parsed == to_json(report));
  CHECK(dump(parsed) == text);
  CHECK(parsed["schema"] == "socl.report/1");
  CHECK(parsed["candidates"].size() == 7);
  CHECK(parsed["decision_trace"].size() == report.decision_trace.size());
  CHECK(parsed["student_count"] == 300);
  if (report.chosen_k) {
    CHECK(parsed["chosen_k"] == *report.chosen_k);
    CHECK(parsed["assignments"]["clusters"].size() == 300);
  } else {
    CHECK(parsed["chosen_k"].is_null());
  }
}

TEST_CASE("text report lists the decision trace in order") {
  const auto& report = sample_report();
  const auto text = render_report(report, Format::Text);
  std::size_t pos = 0;
  for (const auto& line : report.decision_trace) {
    const auto found = text.find(line, pos);
    REQUIRE(found != std::string::npos);
    pos = found + line.size();
  }
}

TEST_CASE("absent statistics serialize as null") {
  const std::vector<double> two{1.0, 2.0};
  const auto j = to_json(features::descriptive_stats(two));
  CHECK(j["skewness"].is_null());
  CHECK(j["excess_kurtosis"].is_null());
  CHECK(j["skewness_absent_reason"].is_string());

  ingest::CommentLog empty;
  const auto summary = to_json(ingest::corpus_summary(empty, ingest::categorize(empty)));
  CHECK(summary["replies_per_ice_breaker"]["mean"].is_null());
  CHECK(summary["total"] == 0);
}

TEST_CASE("plot data files have a commented header") {
  const auto& report = sample_report();
  const auto elbow = elbow_plot_data(report.elbow);
  CHECK(elbow.rfind("# k\twcss\n", 0) == 0);
  CHECK(std::count(elbow.begin(), elbow.end(), '\n') == 1 + static_cast<long>(report.elbow.points.size()));
  if (report.profiles) {
    const auto cmp = cluster_comparison_plot_data(report);
    CHECK(cmp.rfind("# cluster\tlabel\tvariable\tmean\tmedian\n", 0) == 0);
    CHECK(std::count(cmp.begin(), cmp.end(), '\n') == 1 + static_cast<long>(3 * report.profiles->clusters.size()));
  }
}

TEST_CASE("report files are written") {
  const auto dir = std::filesystem::temp_directory_path() / "socl_report_test";
  std::filesystem::remove_all(dir);
  write_report_files(sample_report(), dir);
  CHECK(slurp(dir / "report.json") == render_report(sample_report(), Format::Json));
  CHECK(slurp(dir / "report.txt") == render_report(sample_report(), Format::Text));
  CHECK(std::filesystem::exists(dir / "elbow.tsv"));
  CHECK(std::filesystem::exists(dir / "cluster_comparison.tsv") == sample_report().profiles.has_value());
  std::filesystem::remove_all(dir);
}

TEST_CASE("summary and feature renderings") {
  ingest::CommentLog log;
  ingest::Comment a;
  a.comment_id = "a";
  a.author_id = "s1";
  ingest::Comment b = a;
  b.comment_id = "b";
  b.author_id = "s2";
  b.parent_id = "a";
  log.comments = {a, b};
  const auto summary = ingest::corpus_summary(log, ingest::categorize(log));
  const auto j = nlohmann::json::parse(render_summary(summary, Format::Json));
  CHECK(j["ice_breaking"]["count"] == 1);
  CHECK(render_summary(summary, Format::Text).find("ice-breaking") != std::string::npos);

  const auto fs = features::summarize_features(sample_table(), features::DenominatorPolicy::PostersOfTypeOnly);
  const auto fj = nlohmann::json::parse(render_feature_summary(fs, Format::Json));
  CHECK(fj["denominator"] == "posters-of-type-only");
  CHECK(render_feature_summary(fs, Format::Text).find("posters-of-type-only") != std::string::npos);
}
