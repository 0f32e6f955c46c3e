#include <cstdio>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include <CLI11.hpp>

#include "socl/socl.h"

namespace {

// sysexits EX_USAGE, outside the range of socl_status values.
constexpr int kUsageExit = 64;

// Thrown after the diagnostic has already been printed.
struct Failure {
  int code;
};

void check(socl_status status, const std::string& context) {
  if (status == SOCL_OK) return;
  std::cerr << "socl: " << context << ": " << socl_last_error() << " (" << socl_status_name(status) << ")\n";
  throw Failure{static_cast<int>(status) == 0 ? 1 : static_cast<int>(status)};
}

struct StringDeleter {
  void operator()(char* s) const { socl_string_free(s); }
};
using OwnedString = std::unique_ptr<char, StringDeleter>;

struct LogDeleter {
  void operator()(socl_log* p) const { socl_log_free(p); }
};
struct FeaturesDeleter {
  void operator()(socl_features* p) const { socl_features_free(p); }
};
struct ReportDeleter {
  void operator()(socl_report* p) const { socl_report_free(p); }
};
struct SpecDeleter {
  void operator()(socl_cohort_spec* p) const { socl_cohort_spec_free(p); }
};
using Log = std::unique_ptr<socl_log, LogDeleter>;
using Features = std::unique_ptr<socl_features, FeaturesDeleter>;
using Report = std::unique_ptr<socl_report, ReportDeleter>;
using Spec = std::unique_ptr<socl_cohort_spec, SpecDeleter>;

void write_file(const std::string& path, const char* content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    std::cerr << "socl: cannot open '" << path << "' for writing\n";
    throw Failure{SOCL_ERR_IO};
  }
  out << content;
  if (!out) {
    std::cerr << "socl: failed writing '" << path << "'\n";
    throw Failure{SOCL_ERR_IO};
  }
}

void print_stdout(const char* content) {
  std::fputs(content, stdout);
  std::fflush(stdout);
}

void report_warnings(const socl_log* log) {
  for (std::size_t i = 0; i < socl_log_warning_count(log); ++i) std::cerr << "socl: warning: " << socl_log_warning(log, i) << '\n';
}

enum class InputKind { Auto, Log, Features };

// A feature table starts with the student_id header; anything else is read as a comment log.
bool looks_like_feature_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    return line.rfind("student_id,", 0) == 0;
  }
  return false;
}

Features load_features(const std::string& path, InputKind kind, bool strict) {
  if (kind == InputKind::Auto) kind = looks_like_feature_table(path) ? InputKind::Features : InputKind::Log;
  socl_features* raw = nullptr;
  if (kind == InputKind::Features) {
    check(socl_features_read_file(path.c_str(), &raw), "reading feature table '" + path + "'");
    return Features(raw);
  }
  socl_log* log_raw = nullptr;
  check(socl_log_read_file(path.c_str(), strict ? 1 : 0, &log_raw), "reading comment log '" + path + "'");
  Log log(log_raw);
  report_warnings(log.get());
  check(socl_features_from_log(log.get(), &raw), "aggregating features");
  return Features(raw);
}

struct Options {
  std::string input;
  std::string output;
  std::string output_dir;
  std::string truth;
  std::string rebalancing;
  InputKind input_kind = InputKind::Auto;
  std::size_t k_min = 2;
  std::size_t k_max = 0;
  std::size_t max_iter = 30;
  double min_share = 0.005;
  double alpha = 0.05;
  socl_correction correction = SOCL_CORRECTION_NONE;
  std::optional<std::uint64_t> seed;
  std::size_t restarts = 10;
  socl_init init = SOCL_INIT_KMEANSPP;
  socl_denominator denominator = SOCL_DENOMINATOR_ALL;
  socl_format format = SOCL_FORMAT_JSON;
  std::size_t threads = 1;
  bool strict = false;
  bool stats = false;
};

const std::map<std::string, socl_format> kFormats{{"json", SOCL_FORMAT_JSON}, {"text", SOCL_FORMAT_TEXT}};
const std::map<std::string, socl_correction> kCorrections{{"none", SOCL_CORRECTION_NONE}, {"holm", SOCL_CORRECTION_HOLM}};
const std::map<std::string, socl_denominator> kDenominators{{"all", SOCL_DENOMINATOR_ALL},
                                                            {"posters", SOCL_DENOMINATOR_POSTERS}};
const std::map<std::string, socl_init> kInits{{"kmeans++", SOCL_INIT_KMEANSPP},
                                              {"first-k-distinct", SOCL_INIT_FIRST_K_DISTINCT}};
const std::map<std::string, InputKind> kInputKinds{
    {"auto", InputKind::Auto}, {"log", InputKind::Log}, {"features", InputKind::Features}};

void add_input(CLI::App* app, Options& o, const std::string& what) {
  app->add_option("--input,-i", o.input, what)->required();
}

void add_format(CLI::App* app, Options& o) {
  app->add_option("--format", o.format, "Output format: json or text")
      ->transform(CLI::CheckedTransformer(kFormats, CLI::ignore_case))
      ->capture_default_str();
}

void add_input_kind(CLI::App* app, Options& o) {
  app->add_option("--input-kind", o.input_kind, "auto, log or features (auto inspects the header)")
      ->transform(CLI::CheckedTransformer(kInputKinds, CLI::ignore_case));
}

void add_protocol_flags(CLI::App* app, Options& o) {
  app->add_option("--k-min", o.k_min, "Smallest k in the sweep")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--k-max", o.k_max, "Largest k in the sweep (default 2^3 = 8)")->check(CLI::PositiveNumber);
  app->add_option("--max-iter", o.max_iter, "Lloyd iteration cap")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--min-share", o.min_share, "Minimum cluster share")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  app->add_option("--alpha", o.alpha, "Significance level")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  app->add_option("--correction", o.correction, "Multiple-comparison correction: none or holm")
      ->transform(CLI::CheckedTransformer(kCorrections, CLI::ignore_case));
  app->add_option("--seed", o.seed, "Base RNG seed (default 0)");
  app->add_option("--restarts", o.restarts, "k-means restarts per k")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--init", o.init, "k-means++ or first-k-distinct")
      ->transform(CLI::CheckedTransformer(kInits, CLI::ignore_case));
  app->add_option("--denominator", o.denominator, "Descriptive-statistics denominator: all or posters")
      ->transform(CLI::CheckedTransformer(kDenominators, CLI::ignore_case));
  app->add_option("--threads", o.threads, "Worker threads; results do not depend on it")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--output-dir,-o", o.output_dir, "Directory for report.json, report.txt and plot data");
  app->add_flag("--strict", o.strict, "Reject comment logs with dangling parent references");
  add_input_kind(app, o);
  add_format(app, o);
}

void validate_k_range(const Options& o) {
  if (o.k_max != 0 && o.k_max < o.k_min) {
    throw CLI::ValidationError("--k-max", "must be >= --k-min");
  }
}

int cmd_summarize(const Options& o) {
  socl_log* raw = nullptr;
  check(socl_log_read_file(o.input.c_str(), o.strict ? 1 : 0, &raw), "reading comment log '" + o.input + "'");
  Log log(raw);
  report_warnings(log.get());
  char* text = nullptr;
  check(socl_log_summary(log.get(), o.format, &text), "summarizing");
  OwnedString owned(text);
  print_stdout(owned.get());
  return 0;
}

int cmd_features(const Options& o) {
  Features features = load_features(o.input, o.input_kind, o.strict);
  char* text = nullptr;
  if (o.stats) {
    check(socl_features_stats(features.get(), o.denominator, o.format, &text), "descriptive statistics");
  } else {
    check(socl_features_to_csv(features.get(), &text), "writing feature table");
  }
  OwnedString owned(text);
  if (o.output.empty()) {
    print_stdout(owned.get());
  } else {
    write_file(o.output, owned.get());
  }
  return 0;
}

int cmd_cluster(const Options& o, bool profile) {
  validate_k_range(o);
  Features features = load_features(o.input, o.input_kind, o.strict);
  socl_protocol_config config;
  socl_protocol_config_init(&config);
  config.k_min = o.k_min;
  config.k_max = o.k_max;
  config.max_iterations = o.max_iter;
  config.min_cluster_share = o.min_share;
  config.alpha = o.alpha;
  config.correction = o.correction;
  config.seed = o.seed.value_or(0);
  config.restarts = o.restarts;
  config.init = o.init;
  config.threads = o.threads;
  config.profile = profile ? 1 : 0;
  config.denominator = o.denominator;
  socl_report* raw = nullptr;
  check(socl_run_protocol(features.get(), &config, &raw), "running the k-selection protocol");
  Report report(raw);
  if (!o.output_dir.empty()) check(socl_report_write_files(report.get(), o.output_dir.c_str()), "writing report files");
  char* text = nullptr;
  check(socl_report_render(report.get(), o.format, &text), "rendering report");
  OwnedString owned(text);
  print_stdout(owned.get());
  return 0;
}

int cmd_elbow(const Options& o) {
  validate_k_range(o);
  Features features = load_features(o.input, o.input_kind, o.strict);
  const std::size_t k_max = o.k_max == 0 ? 8 : o.k_max;
  char* text = nullptr;
  char* plot = nullptr;
  check(socl_elbow(features.get(), o.k_min, k_max, o.restarts, o.seed.value_or(0), o.threads, o.format, &text, &plot),
        "elbow curve");
  OwnedString owned_text(text);
  OwnedString owned_plot(plot);
  if (!o.output_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(o.output_dir, ec);
    if (ec) {
      std::cerr << "socl: cannot create '" << o.output_dir << "': " << ec.message() << '\n';
      throw Failure{SOCL_ERR_IO};
    }
    write_file((std::filesystem::path(o.output_dir) / "elbow.tsv").string(), owned_plot.get());
  }
  print_stdout(owned_text.get());
  return 0;
}

int cmd_synth(const Options& o) {
  socl_cohort_spec* raw = nullptr;
  check(socl_cohort_spec_read_file(o.input.c_str(), &raw), "reading cohort spec '" + o.input + "'");
  Spec spec(raw);
  if (o.seed) socl_cohort_spec_set_seed(spec.get(), *o.seed);
  char* truth = nullptr;
  if (socl_cohort_spec_emits_log(spec.get())) {
    socl_log* log_raw = nullptr;
    char* rebalancing = nullptr;
    check(socl_synth_log(spec.get(), &log_raw, &truth, &rebalancing), "generating comment log");
    Log log(log_raw);
    OwnedString owned_rebalancing(rebalancing);
    OwnedString owned_truth(truth);
    check(socl_log_write_file(log.get(), o.output.c_str()), "writing '" + o.output + "'");
    if (!o.rebalancing.empty()) write_file(o.rebalancing, owned_rebalancing.get());
    if (!o.truth.empty()) write_file(o.truth, owned_truth.get());
    return 0;
  }
  if (!o.rebalancing.empty()) std::cerr << "socl: warning: feature-table output has no rebalancing record\n";
  socl_features* features_raw = nullptr;
  check(socl_synth_features(spec.get(), &features_raw, &truth), "generating feature table");
  Features features(features_raw);
  OwnedString owned_truth(truth);
  char* csv = nullptr;
  check(socl_features_to_csv(features.get(), &csv), "writing feature table");
  OwnedString owned_csv(csv);
  write_file(o.output, owned_csv.get());
  if (!o.truth.empty()) write_file(o.truth, owned_truth.get());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cluster course-forum participants by comment type"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(socl_version()));
  Options o;

  auto* summarize = app.add_subcommand("summarize", "Corpus statistics of a comment log");
  add_input(summarize, o, "Comment log CSV");
  add_format(summarize, o);
  summarize->add_flag("--strict", o.strict, "Reject comment logs with dangling parent references");

  auto* features = app.add_subcommand("features", "Per-student comment-type counts, or their statistics");
  add_input(features, o, "Comment log or feature table CSV");
  add_input_kind(features, o);
  features->add_option("--output", o.output, "Write here instead of standard output");
  features->add_flag("--stats", o.stats, "Print descriptive statistics and Spearman correlations");
  features->add_option("--denominator", o.denominator, "Statistics denominator: all or posters")
      ->transform(CLI::CheckedTransformer(kDenominators, CLI::ignore_case));
  add_format(features, o);
  features->add_flag("--strict", o.strict, "Reject comment logs with dangling parent references");

  auto* cluster = app.add_subcommand("cluster", "Sweep k, validate, select and profile");
  add_input(cluster, o, "Comment log or feature table CSV");
  add_protocol_flags(cluster, o);

  auto* select_k = app.add_subcommand("select-k", "As cluster, without persona profiles");
  add_input(select_k, o, "Comment log or feature table CSV");
  add_protocol_flags(select_k, o);

  auto* elbow = app.add_subcommand("elbow", "Best-of-restarts WCSS against k");
  add_input(elbow, o, "Comment log or feature table CSV");
  add_input_kind(elbow, o);
  elbow->add_option("--k-min", o.k_min, "Smallest k")->check(CLI::PositiveNumber)->capture_default_str();
  elbow->add_option("--k-max", o.k_max, "Largest k (default 8)")->check(CLI::PositiveNumber);
  elbow->add_option("--restarts", o.restarts, "k-means restarts per k")->check(CLI::PositiveNumber)->capture_default_str();
  elbow->add_option("--seed", o.seed, "Base RNG seed (default 0)");
  elbow->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  elbow->add_option("--output-dir,-o", o.output_dir, "Directory for elbow.tsv");
  elbow->add_flag("--strict", o.strict, "Reject comment logs with dangling parent references");
  add_format(elbow, o);

  auto* synth = app.add_subcommand("synth", "Generate a synthetic cohort from a spec file");
  add_input(synth, o, "Cohort spec file");
  synth->add_option("--output", o.output, "Comment log or feature table to write")->required();
  synth->add_option("--seed", o.seed, "Overrides the spec's seed");
  synth->add_option("--truth", o.truth, "Write planted persona per student (TSV)");
  synth->add_option("--rebalancing", o.rebalancing, "Write reply-budget adjustments (JSON)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Help and version exit 0; every usage error maps to one code.
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageExit;
  }

  try {
    if (*summarize) return cmd_summarize(o);
    if (*features) return cmd_features(o);
    if (*cluster) return cmd_cluster(o, true);
    if (*select_k) return cmd_cluster(o, false);
    if (*elbow) return cmd_elbow(o);
    if (*synth) return cmd_synth(o);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "socl: " << e.what() << '\n';
    return SOCL_ERR_INVALID_ARGUMENT;
  } catch (const Failure& f) {
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "socl: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
