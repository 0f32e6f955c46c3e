#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "socl/cluster.hpp"
#include "socl/features.hpp"
#include "socl/stattests.hpp"

namespace socl::protocol {

enum class Correction { None, Holm };

std::string_view to_string(Correction c);

struct ProtocolConfig {
  std::size_t k_min = 2;
  // Absent: 2^d for d clustering variables (8 for the three comment types).
  std::optional<std::size_t> k_max;
  std::size_t max_iterations = 30;
  double min_cluster_share = 0.005;
  double alpha = 0.05;
  Correction correction = Correction::None;
  std::uint64_t seed = 0;
  std::size_t restarts = 10;
  cluster::InitMethod init = cluster::InitMethod::KMeansPlusPlus;
  std::size_t threads = 1;
  // select-k runs skip the persona profiles.
  bool profile = true;
  features::DenominatorPolicy denominator = features::DenominatorPolicy::AllSocialStudents;

  std::size_t resolved_k_max(std::size_t variable_count) const;
  void validate() const;
};

enum class DiscardReason { NotConverged, UnderrepresentedCluster, InfeasibleK };

std::string_view to_string(DiscardReason r);

struct OmnibusTest {
  features::Variable variable = features::Variable::Ice;
  stattests::TestResult result;
  double adjusted_p = 1.0;  // equals result.p_value without correction
};

struct PairwiseTest {
  std::size_t cluster_a = 0;
  std::size_t cluster_b = 0;
  features::Variable variable = features::Variable::Ice;
  stattests::TestResult result;
  double adjusted_p = 1.0;
};

struct ValidationReport {
  std::vector<OmnibusTest> omnibus;    // one per variable
  std::vector<PairwiseTest> pairwise;  // k(k-1)/2 pairs x 3 variables
  bool fully_separated = false;
};

struct CandidateResult {
  std::size_t k = 0;
  std::optional<cluster::ClusteringResult> clustering;  // absent when k could not be run
  std::optional<DiscardReason> discarded_reason;
  std::string discard_detail;
  std::optional<ValidationReport> validation;
};

enum class Persona { Extrovert, Attempter, Introvert };

std::string_view to_string(Persona p);

struct ClusterProfile {
  std::size_t cluster = 0;
  std::size_t size = 0;
  double share = 0.0;
  std::array<double, features::kVariableCount> mean{};
  std::array<double, features::kVariableCount> median{};
  std::vector<double> center;  // standardized scale
  std::optional<Persona> persona;
  std::string label;  // persona name, or "engagement-rank-i" (1 = most engaged)
};

struct ClusterProfiles {
  std::vector<ClusterProfile> clusters;  // by cluster index
  std::vector<std::string> warnings;
};

struct Selection {
  std::optional<std::size_t> chosen_k;
  std::vector<std::string> decision_trace;
};

struct KSelectionReport {
  ProtocolConfig config;
  std::size_t student_count = 0;
  std::vector<std::string> student_ids;  // row order of every clustering
  std::vector<CandidateResult> candidates;
  std::optional<std::size_t> chosen_k;
  std::vector<std::string> decision_trace;
  std::optional<ClusterProfiles> profiles;
  cluster::ElbowCurve elbow;  // from the sweep's best-of-restarts WCSS
  std::optional<features::FeatureSummary> feature_summary;
};

// One best-of-restarts k-means per k in [k_min, k_max]. A k that cannot be run
// (more clusters than rows or distinct rows) is kept, marked InfeasibleK.
std::vector<CandidateResult> sweep_k(const features::FeatureMatrix& matrix, const ProtocolConfig& config);

// Marks NotConverged, then UnderrepresentedCluster (any share < min_cluster_share).
std::vector<CandidateResult> filter_candidates(std::vector<CandidateResult> candidates, const ProtocolConfig& config);

// Kruskal-Wallis per variable across clusters and Mann-Whitney per pair and
// variable, on the raw counts. `raw` rows must align with clustering rows.
ValidationReport validate_candidate(const features::StudentFeatureTable& raw, const cluster::ClusteringResult& clustering,
                                    const ProtocolConfig& config);

// Largest k that survived filtering and is fully separated.
Selection select_k(std::span<const CandidateResult> candidates, const ProtocolConfig& config);

ClusterProfiles profile_clusters(const features::StudentFeatureTable& raw, const cluster::ClusteringResult& clustering);

// Standardize, sweep, filter, validate, select and profile.
KSelectionReport run_protocol(const features::StudentFeatureTable& raw, const ProtocolConfig& config);

}  // namespace socl::protocol
