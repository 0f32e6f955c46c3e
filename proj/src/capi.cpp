#include "socl/socl.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include "socl/cluster.hpp"
#include "socl/errors.hpp"
#include "socl/features.hpp"
#include "socl/ingest.hpp"
#include "socl/protocol.hpp"
#include "socl/report.hpp"
#include "socl/synth.hpp"

struct socl_log {
  socl::ingest::CommentLog log;
};

struct socl_features {
  socl::features::StudentFeatureTable table;
};

struct socl_report {
  socl::protocol::KSelectionReport report;
};

struct socl_cohort_spec {
  socl::synth::CohortSpec spec;
};

namespace {

thread_local std::string g_last_error;

socl_status status_for(socl::ErrorKind kind) {
  switch (kind) {
    case socl::ErrorKind::InvalidArgument:
      return SOCL_ERR_INVALID_ARGUMENT;
    case socl::ErrorKind::Io:
      return SOCL_ERR_IO;
    case socl::ErrorKind::Parse:
      return SOCL_ERR_PARSE;
    case socl::ErrorKind::DataIntegrity:
      return SOCL_ERR_DATA_INTEGRITY;
    case socl::ErrorKind::Standardization:
      return SOCL_ERR_STANDARDIZATION;
    case socl::ErrorKind::Infeasible:
      return SOCL_ERR_INFEASIBLE;
  }
  return SOCL_ERR_INTERNAL;
}

template <class Fn>
socl_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return SOCL_OK;
  } catch (const socl::Error& e) {
    g_last_error = e.what();
    return status_for(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return SOCL_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SOCL_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return SOCL_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) throw socl::invalid_argument(std::string(what) + " must not be NULL");
}

char* to_c_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

socl::report::Format format_of(socl_format f) {
  switch (f) {
    case SOCL_FORMAT_JSON:
      return socl::report::Format::Json;
    case SOCL_FORMAT_TEXT:
      return socl::report::Format::Text;
  }
  throw socl::invalid_argument("unknown output format");
}

socl::features::DenominatorPolicy denominator_of(socl_denominator d) {
  switch (d) {
    case SOCL_DENOMINATOR_ALL:
      return socl::features::DenominatorPolicy::AllSocialStudents;
    case SOCL_DENOMINATOR_POSTERS:
      return socl::features::DenominatorPolicy::PostersOfTypeOnly;
  }
  throw socl::invalid_argument("unknown denominator policy");
}

std::string truth_table(const socl::synth::CohortSpec& spec, const socl::synth::SyntheticCohort& cohort) {
  std::ostringstream out;
  out << "# student_id\tpersona\n";
  for (std::size_t i = 0; i < cohort.table.rows.size(); ++i) {
    out << cohort.table.rows[i].student_id << '\t' << spec.personas[cohort.persona[i]].name << '\n';
  }
  return out.str();
}

}  // namespace

extern "C" {

const char* socl_version(void) { return "0.1.0"; }

const char* socl_status_name(socl_status status) {
  switch (status) {
    case SOCL_OK:
      return "ok";
    case SOCL_ERR_INVALID_ARGUMENT:
      return "invalid argument";
    case SOCL_ERR_IO:
      return "i/o error";
    case SOCL_ERR_PARSE:
      return "parse error";
    case SOCL_ERR_DATA_INTEGRITY:
      return "data integrity error";
    case SOCL_ERR_STANDARDIZATION:
      return "standardization error";
    case SOCL_ERR_INFEASIBLE:
      return "infeasible request";
    case SOCL_ERR_INTERNAL:
      return "internal error";
  }
  return "unknown status";
}

const char* socl_last_error(void) { return g_last_error.c_str(); }

void socl_string_free(char* s) { std::free(s); }

socl_status socl_log_read_file(const char* path, int strict, socl_log** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    socl::ingest::ParseOptions options;
    options.strict = strict != 0;
    *out = new socl_log{socl::ingest::read_comment_log(path, options)};
  });
}

socl_status socl_log_read_buffer(const char* data, size_t size, int strict, socl_log** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    if (size) require(data, "data");
    std::istringstream in(std::string(data ? data : "", size));
    socl::ingest::ParseOptions options;
    options.strict = strict != 0;
    *out = new socl_log{socl::ingest::parse_comment_log(in, options)};
  });
}

socl_status socl_log_write_file(const socl_log* log, const char* path) {
  return guarded([&] {
    require(log, "log");
    require(path, "path");
    std::ostringstream out;
    socl::ingest::write_comment_log(out, log->log);
    socl::report::write_text_file(path, out.str());
  });
}

size_t socl_log_comment_count(const socl_log* log) { return log ? log->log.comments.size() : 0; }

size_t socl_log_warning_count(const socl_log* log) { return log ? log->log.warnings.size() : 0; }

const char* socl_log_warning(const socl_log* log, size_t index) {
  if (!log || index >= log->log.warnings.size()) return nullptr;
  return log->log.warnings[index].c_str();
}

socl_status socl_log_summary(const socl_log* log, socl_format format, char** out) {
  return guarded([&] {
    require(log, "log");
    require(out, "out");
    *out = nullptr;
    const auto summary = socl::ingest::corpus_summary(log->log, socl::ingest::categorize(log->log));
    *out = to_c_string(socl::report::render_summary(summary, format_of(format)));
  });
}

void socl_log_free(socl_log* log) { delete log; }

socl_status socl_features_from_log(const socl_log* log, socl_features** out) {
  return guarded([&] {
    require(log, "log");
    require(out, "out");
    *out = nullptr;
    *out = new socl_features{socl::features::aggregate_students(log->log, socl::ingest::categorize(log->log))};
  });
}

socl_status socl_features_read_file(const char* path, socl_features** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    std::ifstream in(path);
    if (!in) throw socl::Error(socl::ErrorKind::Io, std::string("cannot open feature table '") + path + "'");
    *out = new socl_features{socl::features::parse_feature_table(in)};
  });
}

size_t socl_features_row_count(const socl_features* features) { return features ? features->table.rows.size() : 0; }

socl_status socl_features_to_csv(const socl_features* features, char** out) {
  return guarded([&] {
    require(features, "features");
    require(out, "out");
    *out = nullptr;
    std::ostringstream csv;
    socl::features::write_feature_table(csv, features->table);
    *out = to_c_string(csv.str());
  });
}

socl_status socl_features_stats(const socl_features* features, socl_denominator denominator, socl_format format,
                                char** out) {
  return guarded([&] {
    require(features, "features");
    require(out, "out");
    *out = nullptr;
    const auto summary = socl::features::summarize_features(features->table, denominator_of(denominator));
    *out = to_c_string(socl::report::render_feature_summary(summary, format_of(format)));
  });
}

void socl_features_free(socl_features* features) { delete features; }

void socl_protocol_config_init(socl_protocol_config* config) {
  if (!config) return;
  const socl::protocol::ProtocolConfig defaults;
  config->k_min = defaults.k_min;
  config->k_max = 0;
  config->max_iterations = defaults.max_iterations;
  config->min_cluster_share = defaults.min_cluster_share;
  config->alpha = defaults.alpha;
  config->correction = SOCL_CORRECTION_NONE;
  config->seed = defaults.seed;
  config->restarts = defaults.restarts;
  config->init = SOCL_INIT_KMEANSPP;
  config->threads = defaults.threads;
  config->profile = 1;
  config->denominator = SOCL_DENOMINATOR_ALL;
}

socl_status socl_run_protocol(const socl_features* features, const socl_protocol_config* config, socl_report** out) {
  return guarded([&] {
    require(features, "features");
    require(config, "config");
    require(out, "out");
    *out = nullptr;
    socl::protocol::ProtocolConfig cfg;
    cfg.k_min = config->k_min;
    if (config->k_max != 0) cfg.k_max = config->k_max;
    cfg.max_iterations = config->max_iterations;
    cfg.min_cluster_share = config->min_cluster_share;
    cfg.alpha = config->alpha;
    switch (config->correction) {
      case SOCL_CORRECTION_NONE:
        cfg.correction = socl::protocol::Correction::None;
        break;
      case SOCL_CORRECTION_HOLM:
        cfg.correction = socl::protocol::Correction::Holm;
        break;
      default:
        throw socl::invalid_argument("unknown correction");
    }
    cfg.seed = config->seed;
    cfg.restarts = config->restarts;
    switch (config->init) {
      case SOCL_INIT_KMEANSPP:
        cfg.init = socl::cluster::InitMethod::KMeansPlusPlus;
        break;
      case SOCL_INIT_FIRST_K_DISTINCT:
        cfg.init = socl::cluster::InitMethod::FirstKDistinct;
        break;
      default:
        throw socl::invalid_argument("unknown init method");
    }
    cfg.threads = config->threads == 0 ? 1 : config->threads;
    cfg.profile = config->profile != 0;
    cfg.denominator = denominator_of(config->denominator);
    *out = new socl_report{socl::protocol::run_protocol(features->table, cfg)};
  });
}

size_t socl_report_chosen_k(const socl_report* report) {
  return report && report->report.chosen_k ? *report->report.chosen_k : 0;
}

socl_status socl_report_render(const socl_report* report, socl_format format, char** out) {
  return guarded([&] {
    require(report, "report");
    require(out, "out");
    *out = nullptr;
    *out = to_c_string(socl::report::render_report(report->report, format_of(format)));
  });
}

socl_status socl_report_write_files(const socl_report* report, const char* directory) {
  return guarded([&] {
    require(report, "report");
    require(directory, "directory");
    socl::report::write_report_files(report->report, directory);
  });
}

void socl_report_free(socl_report* report) { delete report; }

socl_status socl_elbow(const socl_features* features, size_t k_min, size_t k_max, size_t restarts, uint64_t seed,
                       size_t threads, socl_format format, char** out, char** plot_tsv) {
  return guarded([&] {
    require(features, "features");
    require(out, "out");
    *out = nullptr;
    if (plot_tsv) *plot_tsv = nullptr;
    if (k_min < 1 || k_max < k_min) throw socl::invalid_argument("elbow: need 1 <= k_min <= k_max");
    const auto matrix = socl::features::standardize(features->table);
    std::vector<std::size_t> ks;
    for (std::size_t k = k_min; k <= k_max; ++k) ks.push_back(k);
    const auto curve = socl::cluster::elbow_curve(matrix.values, ks, restarts, seed, threads == 0 ? 1 : threads);
    std::string rendered = socl::report::render_elbow(curve, format_of(format));
    std::string plot = socl::report::elbow_plot_data(curve);
    *out = to_c_string(rendered);
    if (plot_tsv) *plot_tsv = to_c_string(plot);
  });
}

socl_status socl_cohort_spec_read_file(const char* path, socl_cohort_spec** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    *out = new socl_cohort_spec{socl::synth::read_cohort_spec(path)};
  });
}

socl_status socl_cohort_spec_read_buffer(const char* data, size_t size, socl_cohort_spec** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    if (size) require(data, "data");
    std::istringstream in(std::string(data ? data : "", size));
    *out = new socl_cohort_spec{socl::synth::parse_cohort_spec(in)};
  });
}

void socl_cohort_spec_set_seed(socl_cohort_spec* spec, uint64_t seed) {
  if (spec) spec->spec.seed = seed;
}

int socl_cohort_spec_emits_log(const socl_cohort_spec* spec) {
  return spec && spec->spec.emit == socl::synth::EmitKind::CommentLog ? 1 : 0;
}

void socl_cohort_spec_free(socl_cohort_spec* spec) { delete spec; }

socl_status socl_synth_log(const socl_cohort_spec* spec, socl_log** out, char** truth_tsv, char** rebalancing_json) {
  return guarded([&] {
    require(spec, "spec");
    require(out, "out");
    *out = nullptr;
    if (truth_tsv) *truth_tsv = nullptr;
    if (rebalancing_json) *rebalancing_json = nullptr;
    auto generated = socl::synth::generate_comment_log(spec->spec);
    std::string truth = truth_table(spec->spec, generated.planted);
    std::string rebalancing = socl::report::dump(nlohmann::json(generated.rebalancing));
    auto handle = std::make_unique<socl_log>(socl_log{std::move(generated.log)});
    if (truth_tsv) *truth_tsv = to_c_string(truth);
    if (rebalancing_json) *rebalancing_json = to_c_string(rebalancing);
    *out = handle.release();
  });
}

socl_status socl_synth_features(const socl_cohort_spec* spec, socl_features** out, char** truth_tsv) {
  return guarded([&] {
    require(spec, "spec");
    require(out, "out");
    *out = nullptr;
    if (truth_tsv) *truth_tsv = nullptr;
    auto cohort = socl::synth::generate_features(spec->spec);
    std::string truth = truth_table(spec->spec, cohort);
    auto handle = std::make_unique<socl_features>(socl_features{std::move(cohort.table)});
    if (truth_tsv) *truth_tsv = to_c_string(truth);
    *out = handle.release();
  });
}

}  // extern "C"
