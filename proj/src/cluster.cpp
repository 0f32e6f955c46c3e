#include "socl/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <string>

#include "socl/errors.hpp"
#include "socl/parallel.hpp"

namespace socl::cluster {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Uniform double in [0, 1) from the top 53 bits of one engine draw.
double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

bool same_row(std::span<const double> a, std::span<const double> b) { return std::equal(a.begin(), a.end(), b.begin()); }

std::size_t nearest_center(std::span<const double> point, const Matrix& centers) {
  std::size_t best = 0;
  double best_d = squared_distance(point, centers.row(0));
  for (std::size_t c = 1; c < centers.rows(); ++c) {
    const double d = squared_distance(point, centers.row(c));
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

void assign_all(const Matrix& data, const Matrix& centers, std::vector<std::size_t>& out, std::size_t threads) {
  const std::size_t n = data.rows();
  const std::size_t blocks = std::max<std::size_t>(1, std::min(threads, n));
  parallel_for(blocks, blocks, [&](std::size_t b) {
    const std::size_t begin = n * b / blocks;
    const std::size_t end = n * (b + 1) / blocks;
    for (std::size_t i = begin; i < end; ++i) out[i] = nearest_center(data.row(i), centers);
  });
}

Matrix init_plus_plus(const Matrix& data, std::size_t k, std::uint64_t seed) {
  const std::size_t n = data.rows();
  std::mt19937_64 rng(seed);
  Matrix centers(k, data.cols());
  std::size_t first = static_cast<std::size_t>(rng() % n);
  std::copy(data.row(first).begin(), data.row(first).end(), centers.row(0).begin());

  std::vector<double> nearest(n);
  for (std::size_t i = 0; i < n; ++i) nearest[i] = squared_distance(data.row(i), centers.row(0));
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double d : nearest) total += d;
    if (!(total > 0.0)) throw Error(ErrorKind::Infeasible, "k-means++ ran out of distinct points");
    const double target = unit_draw(rng) * total;
    double cumulative = 0.0;
    std::size_t pick = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (nearest[i] <= 0.0) continue;
      cumulative += nearest[i];
      pick = i;
      if (cumulative > target) break;
    }
    std::copy(data.row(pick).begin(), data.row(pick).end(), centers.row(c).begin());
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(data.row(i), centers.row(c)));
    }
  }
  return centers;
}

Matrix init_first_distinct(const Matrix& data, std::size_t k) {
  Matrix centers(k, data.cols());
  std::size_t found = 0;
  for (std::size_t i = 0; i < data.rows() && found < k; ++i) {
    bool seen = false;
    for (std::size_t c = 0; c < found && !seen; ++c) seen = same_row(data.row(i), centers.row(c));
    if (seen) continue;
    std::copy(data.row(i).begin(), data.row(i).end(), centers.row(found).begin());
    ++found;
  }
  if (found < k) throw Error(ErrorKind::Infeasible, "fewer than k distinct rows");
  return centers;
}

// Recomputes centers as cluster means, moving far points into any cluster
// left empty. May change `assignments`.
void update_centers(const Matrix& data, std::vector<std::size_t>& assignments, Matrix& centers,
                    std::vector<std::size_t>& sizes) {
  const std::size_t k = centers.rows(), d = data.cols();
  Matrix sums(k, d);
  sizes.assign(k, 0);
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const auto c = assignments[i];
    ++sizes[c];
    for (std::size_t j = 0; j < d; ++j) sums(c, j) += data(i, j);
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (sizes[c] == 0) continue;
    for (std::size_t j = 0; j < d; ++j) centers(c, j) = sums(c, j) / static_cast<double>(sizes[c]);
  }
  for (std::size_t empty = 0; empty < k; ++empty) {
    if (sizes[empty] != 0) continue;
    std::size_t far = data.rows();
    double far_d = -1.0;
    for (std::size_t i = 0; i < data.rows(); ++i) {
      const auto c = assignments[i];
      if (sizes[c] < 2) continue;
      const double dist = squared_distance(data.row(i), centers.row(c));
      if (dist > far_d) {
        far_d = dist;
        far = i;
      }
    }
    if (far == data.rows()) throw Error(ErrorKind::Infeasible, "cannot repair empty cluster");
    const auto donor = assignments[far];
    assignments[far] = empty;
    --sizes[donor];
    sizes[empty] = 1;
    for (std::size_t j = 0; j < d; ++j) {
      sums(donor, j) -= data(far, j);
      sums(empty, j) = data(far, j);
      centers(donor, j) = sums(donor, j) / static_cast<double>(sizes[donor]);
      centers(empty, j) = data(far, j);
    }
  }
}

double max_displacement(const Matrix& a, const Matrix& b) {
  double m = 0.0;
  for (std::size_t c = 0; c < a.rows(); ++c) m = std::max(m, std::sqrt(squared_distance(a.row(c), b.row(c))));
  return m;
}

}  // namespace

std::string_view to_string(InitMethod init) {
  return init == InitMethod::KMeansPlusPlus ? "kmeans++" : "first-k-distinct";
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t k, std::uint64_t restart) {
  return splitmix64(splitmix64(base ^ splitmix64(k)) + restart);
}

std::size_t count_distinct_rows(const Matrix& data) {
  std::set<std::vector<double>> rows;
  for (std::size_t i = 0; i < data.rows(); ++i) rows.emplace(data.row(i).begin(), data.row(i).end());
  return rows.size();
}

double wcss(const Matrix& data, std::span<const std::size_t> assignments, const Matrix& centers) {
  if (assignments.size() != data.rows()) {
    throw invalid_argument("wcss: " + std::to_string(assignments.size()) + " assignments for " +
                           std::to_string(data.rows()) + " rows");
  }
  if (centers.cols() != data.cols()) throw invalid_argument("wcss: center dimension does not match data");
  double total = 0.0;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    if (assignments[i] >= centers.rows()) throw invalid_argument("wcss: assignment out of range");
    total += squared_distance(data.row(i), centers.row(assignments[i]));
  }
  return total;
}

ClusteringResult kmeans(const Matrix& data, const KMeansConfig& config) {
  if (data.rows() == 0 || data.cols() == 0) throw invalid_argument("kmeans: empty matrix");
  if (config.k < 1) throw invalid_argument("kmeans: k must be at least 1");
  if (config.max_iterations < 1) throw invalid_argument("kmeans: max_iterations must be at least 1");
  if (!(config.tolerance >= 0.0)) throw invalid_argument("kmeans: tolerance must be non-negative");
  if (config.k > data.rows()) {
    throw invalid_argument("kmeans: k=" + std::to_string(config.k) + " exceeds the number of rows (" +
                           std::to_string(data.rows()) + ")");
  }
  if (count_distinct_rows(data) < config.k) {
    throw Error(ErrorKind::Infeasible,
                "kmeans: fewer than k=" + std::to_string(config.k) + " distinct rows to initialize from");
  }

  ClusteringResult result;
  result.centers = config.init == InitMethod::KMeansPlusPlus ? init_plus_plus(data, config.k, config.seed)
                                                             : init_first_distinct(data, config.k);
  const std::size_t threads = std::max<std::size_t>(1, config.threads);
  std::vector<std::size_t> assignments(data.rows());
  assign_all(data, result.centers, assignments, threads);

  std::vector<std::size_t> next(data.rows());
  Matrix previous_centers;
  for (std::size_t it = 1; it <= config.max_iterations; ++it) {
    previous_centers = result.centers;
    update_centers(data, assignments, result.centers, result.sizes);
    result.wcss_trace.push_back(wcss(data, assignments, result.centers));
    result.iterations_run = it;

    if (config.tolerance > 0.0 && it > 1 && max_displacement(previous_centers, result.centers) <= config.tolerance) {
      result.converged = true;
      break;
    }
    assign_all(data, result.centers, next, threads);
    if (next == assignments) {
      result.converged = true;
      break;
    }
    assignments.swap(next);
  }
  result.assignments = std::move(assignments);
  result.wcss = result.wcss_trace.back();
  return result;
}

ClusteringResult kmeans_best_of(const Matrix& data, const KMeansConfig& config, std::size_t restarts) {
  if (restarts < 1) throw invalid_argument("kmeans: restarts must be at least 1");
  std::optional<ClusteringResult> best;
  for (std::size_t r = 0; r < restarts; ++r) {
    KMeansConfig cfg = config;
    cfg.seed = derive_seed(config.seed, config.k, r);
    auto candidate = kmeans(data, cfg);
    if (!best || candidate.wcss < best->wcss) best = std::move(candidate);
  }
  return std::move(*best);
}

ElbowCurve elbow_from_points(std::vector<ElbowPoint> points) {
  std::sort(points.begin(), points.end(), [](const ElbowPoint& a, const ElbowPoint& b) { return a.k < b.k; });
  ElbowCurve curve;
  curve.points = std::move(points);
  const auto& p = curve.points;

  std::vector<std::pair<double, std::size_t>> bends;  // (second difference, k)
  for (std::size_t i = 1; i + 1 < p.size(); ++i) {
    if (p[i].k != p[i - 1].k + 1 || p[i + 1].k != p[i].k + 1) continue;
    bends.emplace_back(p[i - 1].wcss - 2.0 * p[i].wcss + p[i + 1].wcss, p[i].k);
  }
  if (bends.empty()) return curve;
  std::stable_sort(bends.begin(), bends.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  if (!(bends[0].first > 0.0)) {
    curve.ambiguous = true;
    return curve;
  }
  curve.suggested_k = bends[0].second;
  if (bends.size() > 1 && bends[0].first - bends[1].first <= kElbowAmbiguityRatio * bends[0].first) {
    curve.ambiguous = true;
  }
  return curve;
}

ElbowCurve elbow_curve(const Matrix& data, std::span<const std::size_t> k_range, std::size_t restarts,
                       std::uint64_t seed, std::size_t threads) {
  if (k_range.empty()) throw invalid_argument("elbow_curve: empty k range");
  std::vector<ElbowPoint> points(k_range.size());
  parallel_for(k_range.size(), std::max<std::size_t>(1, threads), [&](std::size_t i) {
    KMeansConfig cfg;
    cfg.k = k_range[i];
    cfg.seed = seed;
    points[i] = {k_range[i], kmeans_best_of(data, cfg, restarts).wcss};
  });
  return elbow_from_points(std::move(points));
}

double adjusted_rand_index(std::span<const std::size_t> a, std::span<const std::size_t> b) {
  if (a.size() != b.size()) throw invalid_argument("adjusted_rand_index: labelings differ in length");
  const std::size_t n = a.size();
  if (n < 2) return 1.0;
  std::map<std::pair<std::size_t, std::size_t>, double> joint;
  std::map<std::size_t, double> rows, cols;
  for (std::size_t i = 0; i < n; ++i) {
    joint[{a[i], b[i]}] += 1.0;
    rows[a[i]] += 1.0;
    cols[b[i]] += 1.0;
  }
  auto pairs = [](double m) { return m * (m - 1.0) / 2.0; };
  double index = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (const auto& [key, m] : joint) index += pairs(m);
  for (const auto& [key, m] : rows) sum_a += pairs(m);
  for (const auto& [key, m] : cols) sum_b += pairs(m);
  const double expected = sum_a * sum_b / pairs(static_cast<double>(n));
  const double max_index = (sum_a + sum_b) / 2.0;
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

}  // namespace socl::cluster
