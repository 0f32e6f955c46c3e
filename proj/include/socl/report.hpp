#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "socl/cluster.hpp"
#include "socl/features.hpp"
#include "socl/ingest.hpp"
#include "socl/protocol.hpp"
#include "socl/stattests.hpp"
#include "socl/synth.hpp"

namespace socl::report {

enum class Format { Json, Text };

// Accepts "json" or "text".
Format parse_format(std::string_view name);

nlohmann::json to_json(const ingest::CorpusSummary& summary);
nlohmann::json to_json(const features::DescriptiveStats& stats);
nlohmann::json to_json(const features::FeatureSummary& summary);
nlohmann::json to_json(const stattests::TestResult& result);
nlohmann::json to_json(const cluster::ClusteringResult& result);
nlohmann::json to_json(const cluster::ElbowCurve& curve);
nlohmann::json to_json(const protocol::ValidationReport& validation);
nlohmann::json to_json(const protocol::ClusterProfiles& profiles);
nlohmann::json to_json(const protocol::KSelectionReport& report);

// Two-space indented JSON with sorted keys and a trailing newline.
std::string dump(const nlohmann::json& j);

std::string render_summary(const ingest::CorpusSummary& summary, Format format);
std::string render_feature_summary(const features::FeatureSummary& summary, Format format);
std::string render_elbow(const cluster::ElbowCurve& curve, Format format);
std::string render_report(const protocol::KSelectionReport& report, Format format);

// Tab-separated plot data, first line a '#' header naming the columns.
std::string elbow_plot_data(const cluster::ElbowCurve& curve);
// Per-cluster mean and median of each raw variable for the chosen k.
std::string cluster_comparison_plot_data(const protocol::KSelectionReport& report);

// report.json, report.txt, elbow.tsv and (with profiles) cluster_comparison.tsv.
void write_report_files(const protocol::KSelectionReport& report, const std::filesystem::path& dir);

void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace socl::report
