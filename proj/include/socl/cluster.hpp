#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "socl/matrix.hpp"

namespace socl::cluster {

enum class InitMethod {
  KMeansPlusPlus,  // D^2-weighted seeding from the config seed
  FirstKDistinct,  // the first k distinct rows, in row order
};

std::string_view to_string(InitMethod init);

struct KMeansConfig {
  std::size_t k = 2;
  std::size_t max_iterations = 30;
  std::uint64_t seed = 0;
  InitMethod init = InitMethod::KMeansPlusPlus;
  // 0: converge only when assignments stop changing. Otherwise also stop once
  // no center moves farther than this.
  double tolerance = 0.0;
  // Workers for the assignment step. Results do not depend on it.
  std::size_t threads = 1;
};

struct ClusteringResult {
  std::vector<std::size_t> assignments;  // row -> cluster in [0, k)
  Matrix centers;                        // k x d
  std::vector<std::size_t> sizes;
  std::size_t iterations_run = 0;
  bool converged = false;
  double wcss = 0.0;
  std::vector<double> wcss_trace;  // objective after each center update

  std::size_t k() const noexcept { return sizes.size(); }
  bool operator==(const ClusteringResult&) const = default;
};

// Lloyd iteration. Ties in distance go to the lowest cluster index; a cluster
// that empties is re-seeded with the point farthest from its assigned center.
ClusteringResult kmeans(const Matrix& data, const KMeansConfig& config);

// Runs `restarts` seeded k-means and keeps the lowest WCSS (earliest on ties).
// Restart r uses derive_seed(config.seed, config.k, r).
ClusteringResult kmeans_best_of(const Matrix& data, const KMeansConfig& config, std::size_t restarts);

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t k, std::uint64_t restart);

double wcss(const Matrix& data, std::span<const std::size_t> assignments, const Matrix& centers);

std::size_t count_distinct_rows(const Matrix& data);

struct ElbowPoint {
  std::size_t k = 0;
  double wcss = 0.0;
};

struct ElbowCurve {
  std::vector<ElbowPoint> points;
  std::optional<std::size_t> suggested_k;
  bool ambiguous = false;
};

// Relative gap below which the two largest second differences count as a tie.
inline constexpr double kElbowAmbiguityRatio = 0.10;

// Heuristic elbow over consecutive k: argmax of W(k-1) - 2 W(k) + W(k+1).
ElbowCurve elbow_from_points(std::vector<ElbowPoint> points);

ElbowCurve elbow_curve(const Matrix& data, std::span<const std::size_t> k_range, std::size_t restarts,
                       std::uint64_t seed, std::size_t threads = 1);

// Adjusted Rand Index between two labelings of the same rows.
double adjusted_rand_index(std::span<const std::size_t> a, std::span<const std::size_t> b);

}  // namespace socl::cluster
