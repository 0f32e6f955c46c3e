#include "socl/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "socl/errors.hpp"

namespace socl::report {
namespace {

using nlohmann::json;
using features::Variable;

template <class T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string opt_fixed(const std::optional<double>& v, int digits, std::string_view absent = "n/a") {
  return v ? fixed(*v, digits) : std::string(absent);
}

std::string percent(const std::optional<double>& share) { return share ? fixed(100.0 * *share, 2) + "%" : "n/a"; }

std::string p_text(double p) { return p < 0.001 ? "<.001" : fixed(p, 3); }

json category_json(const ingest::CategoryCount& c) { return {{"count", c.count}, {"share", opt(c.share)}}; }

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) rows.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
  return rows;
}

std::string name(Variable v) { return std::string(features::variable_name(v)); }

}  // namespace

Format parse_format(std::string_view name) {
  if (name == "json") return Format::Json;
  if (name == "text") return Format::Text;
  throw invalid_argument("unknown format '" + std::string(name) + "' (expected json or text)");
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json to_json(const ingest::CorpusSummary& s) {
  return {
      {"total", s.total},
      {"responding", category_json(s.responding)},
      {"initializing", category_json(s.initializing)},
      {"ice_breaking",
       {{"count", s.ice_breaking.count},
        {"share", opt(s.ice_breaking.share)},
        {"share_of_initializing", opt(s.ice_breaking_share_of_initializing)}}},
      {"solo", category_json(s.solo)},
      {"replies_per_ice_breaker", {{"mean", opt(s.replies_per_ice_breaker_mean)}, {"sd", opt(s.replies_per_ice_breaker_sd)}}},
      {"social_student_count", s.social_student_count},
      {"comments_per_student", {{"mean", opt(s.comments_per_student_mean)}, {"sd", opt(s.comments_per_student_sd)}}},
  };
}

json to_json(const features::DescriptiveStats& s) {
  json j = {{"n", s.n},
            {"mean", s.mean},
            {"sd", s.sd},
            {"skewness", opt(s.skewness)},
            {"excess_kurtosis", opt(s.excess_kurtosis)}};
  if (!s.skewness) j["skewness_absent_reason"] = s.skewness_absent_reason;
  if (!s.excess_kurtosis) j["excess_kurtosis_absent_reason"] = s.kurtosis_absent_reason;
  return j;
}

json to_json(const features::FeatureSummary& s) {
  json stats = json::object();
  json spearman = json::array();
  for (auto a : features::kVariables) {
    stats[name(a)] = to_json(s.per_variable[static_cast<std::size_t>(a)]);
    json row = json::array();
    for (auto b : features::kVariables) row.push_back(opt(s.spearman[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)]));
    spearman.push_back(row);
  }
  return {{"denominator", std::string(features::to_string(s.policy))},
          {"variables", {name(Variable::Ice), name(Variable::Resp), name(Variable::Solo)}},
          {"descriptive", stats},
          {"spearman", spearman}};
}

json to_json(const stattests::TestResult& r) {
  json j = {{"statistic_name", std::string(stattests::to_string(r.statistic_name))},
            {"statistic", r.statistic},
            {"df", opt(r.df)},
            {"z", opt(r.z)},
            {"p_value", r.p_value},
            {"method", std::string(stattests::to_string(r.method))},
            {"tie_corrected", r.tie_corrected},
            {"feasible", r.feasible},
            {"degenerate", r.degenerate}};
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

json to_json(const cluster::ClusteringResult& r) {
  return {{"k", r.k()},
          {"sizes", r.sizes},
          {"centers", matrix_json(r.centers)},
          {"iterations_run", r.iterations_run},
          {"converged", r.converged},
          {"wcss", r.wcss},
          {"wcss_trace", r.wcss_trace}};
}

json to_json(const cluster::ElbowCurve& c) {
  json points = json::array();
  for (const auto& p : c.points) points.push_back({{"k", p.k}, {"wcss", p.wcss}});
  return {{"points", points}, {"suggested_k", opt(c.suggested_k)}, {"ambiguous", c.ambiguous}};
}

json to_json(const protocol::ValidationReport& v) {
  json omnibus = json::array();
  for (const auto& t : v.omnibus) {
    json j = to_json(t.result);
    j["variable"] = name(t.variable);
    j["adjusted_p"] = t.adjusted_p;
    omnibus.push_back(std::move(j));
  }
  json pairwise = json::array();
  for (const auto& t : v.pairwise) {
    json j = to_json(t.result);
    j["variable"] = name(t.variable);
    j["cluster_a"] = t.cluster_a;
    j["cluster_b"] = t.cluster_b;
    j["adjusted_p"] = t.adjusted_p;
    pairwise.push_back(std::move(j));
  }
  return {{"omnibus", omnibus}, {"pairwise", pairwise}, {"fully_separated", v.fully_separated}};
}

json to_json(const protocol::ClusterProfiles& p) {
  json clusters = json::array();
  for (const auto& c : p.clusters) {
    json mean = json::object(), median = json::object();
    for (auto v : features::kVariables) {
      mean[name(v)] = c.mean[static_cast<std::size_t>(v)];
      median[name(v)] = c.median[static_cast<std::size_t>(v)];
    }
    clusters.push_back({{"cluster", c.cluster},
                        {"size", c.size},
                        {"share", c.share},
                        {"mean", mean},
                        {"median", median},
                        {"center", c.center},
                        {"persona", c.persona ? json(std::string(protocol::to_string(*c.persona))) : json(nullptr)},
                        {"label", c.label}});
  }
  return {{"clusters", clusters}, {"warnings", p.warnings}};
}

json to_json(const protocol::KSelectionReport& r) {
  const auto& cfg = r.config;
  json config = {{"k_min", cfg.k_min},
                 {"k_max", cfg.resolved_k_max(features::kVariableCount)},
                 {"max_iterations", cfg.max_iterations},
                 {"min_cluster_share", cfg.min_cluster_share},
                 {"alpha", cfg.alpha},
                 {"correction", std::string(protocol::to_string(cfg.correction))},
                 {"seed", cfg.seed},
                 {"restarts", cfg.restarts},
                 {"init", std::string(cluster::to_string(cfg.init))},
                 {"denominator", std::string(features::to_string(cfg.denominator))},
                 {"profile", cfg.profile}};
  json candidates = json::array();
  for (const auto& c : r.candidates) {
    candidates.push_back(
        {{"k", c.k},
         {"clustering", c.clustering ? to_json(*c.clustering) : json(nullptr)},
         {"discarded_reason",
          c.discarded_reason ? json(std::string(protocol::to_string(*c.discarded_reason))) : json(nullptr)},
         {"discard_detail", c.discard_detail},
         {"validation", c.validation ? to_json(*c.validation) : json(nullptr)}});
  }
  json assignments = nullptr;
  if (r.chosen_k) {
    for (const auto& c : r.candidates) {
      if (c.k == *r.chosen_k && c.clustering) {
        assignments = {{"student_ids", r.student_ids}, {"clusters", c.clustering->assignments}};
      }
    }
  }
  return {{"schema", "socl.report/1"},
          {"student_count", r.student_count},
          {"config", config},
          {"features", r.feature_summary ? to_json(*r.feature_summary) : json(nullptr)},
          {"elbow", to_json(r.elbow)},
          {"candidates", candidates},
          {"chosen_k", opt(r.chosen_k)},
          {"assignments", assignments},
          {"decision_trace", r.decision_trace},
          {"profiles", r.profiles ? to_json(*r.profiles) : json(nullptr)}};
}

std::string render_summary(const ingest::CorpusSummary& s, Format format) {
  if (format == Format::Json) return dump(to_json(s));
  std::ostringstream out;
  out << "comments           " << s.total << '\n'
      << "  ice-breaking     " << s.ice_breaking.count << " (" << percent(s.ice_breaking.share) << ")\n"
      << "  responding       " << s.responding.count << " (" << percent(s.responding.share) << ")\n"
      << "  solo             " << s.solo.count << " (" << percent(s.solo.share) << ")\n"
      << "initializing       " << s.initializing.count << " (" << percent(s.initializing.share) << ")\n"
      << "  ice-breaking of initializing " << percent(s.ice_breaking_share_of_initializing) << '\n'
      << "replies per ice-breaker  mean " << opt_fixed(s.replies_per_ice_breaker_mean, 2) << ", sd "
      << opt_fixed(s.replies_per_ice_breaker_sd, 2) << '\n'
      << "social students    " << s.social_student_count << '\n'
      << "comments per student     mean " << opt_fixed(s.comments_per_student_mean, 2) << ", sd "
      << opt_fixed(s.comments_per_student_sd, 2) << '\n';
  return out.str();
}

std::string render_feature_summary(const features::FeatureSummary& s, Format format) {
  if (format == Format::Json) return dump(to_json(s));
  std::ostringstream out;
  out << "denominator: " << features::to_string(s.policy) << "\n";
  out << "variable      n        mean        sd  skewness  excess_kurtosis\n";
  for (auto v : features::kVariables) {
    const auto& d = s.per_variable[static_cast<std::size_t>(v)];
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-8s %6zu %11.4f %9.4f %9s %16s\n", name(v).c_str(), d.n, d.mean, d.sd,
                  opt_fixed(d.skewness, 4).c_str(), opt_fixed(d.excess_kurtosis, 4).c_str());
    out << buf;
  }
  out << "spearman rho\n";
  for (auto a : features::kVariables) {
    out << "  " << name(a);
    for (auto b : features::kVariables) {
      out << "  " << opt_fixed(s.spearman[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)], 4);
    }
    out << '\n';
  }
  return out.str();
}

std::string render_elbow(const cluster::ElbowCurve& c, Format format) {
  if (format == Format::Json) return dump(to_json(c));
  std::ostringstream out;
  for (const auto& p : c.points) out << "k=" << p.k << "  wcss=" << fixed(p.wcss, 4) << '\n';
  out << "suggested k: " << (c.suggested_k ? std::to_string(*c.suggested_k) : "none")
      << (c.ambiguous ? " (ambiguous)" : "") << '\n';
  return out.str();
}

std::string render_report(const protocol::KSelectionReport& r, Format format) {
  if (format == Format::Json) return dump(to_json(r));
  std::ostringstream out;
  out << "students: " << r.student_count << '\n';
  out << "k range: " << r.config.k_min << ".." << r.config.resolved_k_max(features::kVariableCount)
      << "  max iterations: " << r.config.max_iterations << "  restarts: " << r.config.restarts
      << "  seed: " << r.config.seed << '\n';
  out << "alpha: " << r.config.alpha << "  correction: " << protocol::to_string(r.config.correction)
      << "  min cluster share: " << r.config.min_cluster_share << "\n\n";

  out << "candidates\n";
  for (const auto& c : r.candidates) {
    out << "  k=" << c.k;
    if (c.clustering) {
      out << "  iterations=" << c.clustering->iterations_run << (c.clustering->converged ? "" : " (not converged)")
          << "  wcss=" << fixed(c.clustering->wcss, 3) << "  sizes=";
      for (std::size_t i = 0; i < c.clustering->sizes.size(); ++i) out << (i ? "/" : "") << c.clustering->sizes[i];
    }
    if (c.discarded_reason) out << "  [" << protocol::to_string(*c.discarded_reason) << "]";
    if (c.validation) out << (c.validation->fully_separated ? "  [fully separated]" : "  [not fully separated]");
    out << '\n';
  }

  out << "\ndecision trace\n";
  for (const auto& line : r.decision_trace) out << "  " << line << '\n';
  out << "\nchosen k: " << (r.chosen_k ? std::to_string(*r.chosen_k) : "none") << '\n';

  if (r.chosen_k) {
    for (const auto& c : r.candidates) {
      if (c.k != *r.chosen_k || !c.validation) continue;
      out << "\nKruskal-Wallis (raw counts)\n";
      for (const auto& t : c.validation->omnibus) {
        out << "  " << name(t.variable) << "  H(" << t.result.df.value_or(0) << ")=" << fixed(t.result.statistic, 2)
            << "  p=" << p_text(t.result.p_value) << '\n';
      }
      out << "Mann-Whitney U (raw counts)\n";
      for (const auto& t : c.validation->pairwise) {
        out << "  cluster " << t.cluster_a << " vs " << t.cluster_b << "  " << name(t.variable)
            << "  U=" << fixed(t.result.statistic, 1) << "  p=" << p_text(t.result.p_value) << '\n';
      }
    }
  }
  if (r.profiles) {
    out << "\nprofiles\n";
    for (const auto& p : r.profiles->clusters) {
      out << "  cluster " << p.cluster << "  " << p.label << "  size=" << p.size << " (" << fixed(100.0 * p.share, 2)
          << "%)  mean ice/resp/solo=" << fixed(p.mean[0], 2) << "/" << fixed(p.mean[1], 2) << "/"
          << fixed(p.mean[2], 2) << "  median=" << fixed(p.median[0], 1) << "/" << fixed(p.median[1], 1) << "/"
          << fixed(p.median[2], 1) << '\n';
    }
    for (const auto& w : r.profiles->warnings) out << "  warning: " << w << '\n';
  }
  out << "\nelbow: suggested k "
      << (r.elbow.suggested_k ? std::to_string(*r.elbow.suggested_k) : std::string("none"))
      << (r.elbow.ambiguous ? " (ambiguous)" : "") << '\n';
  return out.str();
}

std::string elbow_plot_data(const cluster::ElbowCurve& curve) {
  std::ostringstream out;
  out << "# k\twcss\n";
  for (const auto& p : curve.points) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", p.wcss);
    out << p.k << '\t' << buf << '\n';
  }
  return out.str();
}

std::string cluster_comparison_plot_data(const protocol::KSelectionReport& r) {
  std::ostringstream out;
  out << "# cluster\tlabel\tvariable\tmean\tmedian\n";
  if (!r.profiles) return out.str();
  for (const auto& p : r.profiles->clusters) {
    for (auto v : features::kVariables) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "%.17g\t%.17g", p.mean[static_cast<std::size_t>(v)],
                    p.median[static_cast<std::size_t>(v)]);
      out << p.cluster << '\t' << p.label << '\t' << name(v) << '\t' << buf << '\n';
    }
  }
  return out.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw Error(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

void write_report_files(const protocol::KSelectionReport& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create directory '" + dir.string() + "': " + ec.message());
  write_text_file(dir / "report.json", render_report(r, Format::Json));
  write_text_file(dir / "report.txt", render_report(r, Format::Text));
  write_text_file(dir / "elbow.tsv", elbow_plot_data(r.elbow));
  if (r.profiles) write_text_file(dir / "cluster_comparison.tsv", cluster_comparison_plot_data(r));
}

}  // namespace socl::report
