#include "socl/stattests.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "socl/errors.hpp"

namespace socl::stattests {

std::string_view to_string(StatisticName name) { return name == StatisticName::H ? "H" : "U"; }

std::string_view to_string(TestMethod method) {
  switch (method) {
    case TestMethod::NormalApprox:
      return "normal-approx";
    case TestMethod::ExactEnumeration:
      return "exact-enumeration";
    case TestMethod::ChiSquareApprox:
      return "chi-square-approx";
  }
  return "?";
}

double RankedSample::tie_term() const {
  double s = 0.0;
  for (auto t : tie_groups) {
    const double td = static_cast<double>(t);
    s += td * td * td - td;
  }
  return s;
}

RankedSample midrank(std::span<const double> values) {
  RankedSample out;
  const std::size_t n = values.size();
  out.ranks.assign(n, 0.0);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // positions i..j-1 (0-based) share rank ((i+1) + j) / 2
    const double r = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t m = i; m < j; ++m) out.ranks[order[m]] = r;
    if (j - i > 1) out.tie_groups.push_back(j - i);
    i = j;
  }
  return out;
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

double regularized_gamma_q(double a, double x) {
  if (!(a > 0.0)) throw invalid_argument("regularized_gamma_q: a must be positive");
  if (!(x >= 0.0)) throw invalid_argument("regularized_gamma_q: x must be non-negative");
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;

  constexpr double kEps = 1e-17;
  constexpr int kMaxIter = 100000;
  if (x < a + 1.0) {
    // Series for P(a, x).
    double ap = a;
    double term = 1.0 / a;
    double sum = term;
    for (int n = 0; n < kMaxIter; ++n) {
      ap += 1.0;
      term *= x / ap;
      sum += term;
      if (std::fabs(term) < std::fabs(sum) * kEps) break;
    }
    const double p = sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
    return std::clamp(1.0 - p, 0.0, 1.0);
  }
  // Modified Lentz continued fraction for Q(a, x).
  constexpr double kTiny = std::numeric_limits<double>::min() / kEps;
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEps) break;
  }
  return std::clamp(std::exp(-x + a * std::log(x) - std::lgamma(a)) * h, 0.0, 1.0);
}

double chi_square_sf(double x, int df) {
  if (df <= 0) throw invalid_argument("chi_square_sf: df must be positive");
  if (!(x >= 0.0)) throw invalid_argument("chi_square_sf: x must be non-negative");
  return regularized_gamma_q(df / 2.0, x / 2.0);
}

std::vector<double> holm_adjust(std::span<const double> p) {
  const std::size_t m = p.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
  std::vector<double> adjusted(m);
  double running = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    running = std::max(running, std::min(1.0, static_cast<double>(m - i) * p[order[i]]));
    adjusted[order[i]] = running;
  }
  return adjusted;
}

namespace {

double log_multinomial(std::size_t total, std::span<const std::size_t> parts) {
  double v = std::lgamma(static_cast<double>(total) + 1.0);
  for (auto n : parts) v -= std::lgamma(static_cast<double>(n) + 1.0);
  return v;
}

struct KwEnumeration {
  const std::vector<double>& ranks;
  std::vector<std::size_t> capacity;
  std::vector<double> rank_sums;
  const std::vector<std::size_t>& sizes;
  double threshold;
  double extreme = 0.0;
  double total = 0.0;

  void run(std::size_t item) {
    if (item == ranks.size()) {
      double s = 0.0;
      for (std::size_t g = 0; g < sizes.size(); ++g) s += rank_sums[g] * rank_sums[g] / sizes[g];
      total += 1.0;
      if (s >= threshold) extreme += 1.0;
      return;
    }
    for (std::size_t g = 0; g < capacity.size(); ++g) {
      if (capacity[g] == 0) continue;
      --capacity[g];
      rank_sums[g] += ranks[item];
      run(item + 1);
      rank_sums[g] -= ranks[item];
      ++capacity[g];
    }
  }
};

}  // namespace

TestResult kruskal_wallis(std::span<const std::vector<double>> groups, KruskalWallisMethod method) {
  if (groups.size() < 2) throw invalid_argument("kruskal_wallis needs at least two groups");
  std::vector<double> pooled;
  std::vector<std::size_t> sizes;
  for (const auto& g : groups) {
    if (g.empty()) throw invalid_argument("kruskal_wallis: every group must be nonempty");
    sizes.push_back(g.size());
    pooled.insert(pooled.end(), g.begin(), g.end());
  }
  const std::size_t n_total = pooled.size();
  if (n_total < 3) throw invalid_argument("kruskal_wallis needs at least three observations");

  const auto ranked = midrank(pooled);
  std::vector<double> rank_sums(groups.size(), 0.0);
  {
    std::size_t pos = 0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      for (std::size_t i = 0; i < sizes[g]; ++i) rank_sums[g] += ranked.ranks[pos++];
    }
  }
  const double n = static_cast<double>(n_total);
  double sum_sq = 0.0;
  for (std::size_t g = 0; g < groups.size(); ++g) sum_sq += rank_sums[g] * rank_sums[g] / sizes[g];

  TestResult r;
  r.statistic_name = StatisticName::H;
  r.df = static_cast<int>(groups.size()) - 1;
  const double tie_term = ranked.tie_term();
  r.tie_corrected = tie_term > 0.0;
  const double correction = 1.0 - tie_term / (n * n * n - n);
  if (correction <= 0.0) {
    r.statistic = 0.0;
    r.p_value = 1.0;
    r.method = TestMethod::ChiSquareApprox;
    r.degenerate = true;
    r.note = "all observations tied";
    return r;
  }
  const double h_raw = 12.0 / (n * (n + 1.0)) * sum_sq - 3.0 * (n + 1.0);
  r.statistic = std::max(0.0, h_raw / correction);

  const double arrangements = std::exp(log_multinomial(n_total, sizes));
  bool exact = method == KruskalWallisMethod::Exact;
  if (method == KruskalWallisMethod::Auto) exact = arrangements <= kExactArrangementLimit;
  if (exact && arrangements > kEnumerationStateLimit) {
    throw invalid_argument("kruskal_wallis: exact enumeration would visit " + std::to_string(arrangements) +
                           " arrangements (limit " + std::to_string(kEnumerationStateLimit) + ")");
  }

  if (!exact) {
    r.method = TestMethod::ChiSquareApprox;
    r.p_value = chi_square_sf(r.statistic, *r.df);
    return r;
  }
  // H is monotone in sum(R_g^2 / n_g) for fixed group sizes and ties.
  KwEnumeration e{ranked.ranks, sizes, std::vector<double>(groups.size(), 0.0), sizes,
                  sum_sq - 1e-9 * std::fabs(sum_sq)};
  e.run(0);
  r.method = TestMethod::ExactEnumeration;
  r.p_value = std::clamp(e.extreme / e.total, 0.0, 1.0);
  return r;
}

std::vector<double> exact_u_distribution(std::size_t n1, std::size_t n2) {
  // The distribution is symmetric in the two sample sizes; enumerate over the smaller.
  if (n2 < n1) std::swap(n1, n2);
  const std::size_t n = n1 + n2;
  const std::size_t max_u = n1 * n2;
  if (static_cast<double>(n1 + 1) * static_cast<double>(max_u + 1) > kEnumerationStateLimit) {
    throw invalid_argument("mann_whitney_u: exact distribution for n1=" + std::to_string(n1) +
                           ", n2=" + std::to_string(n2) + " exceeds the enumeration state limit");
  }
  // ways[j][u]: j-element subsets of {1..t} whose rank sum minus j(j+1)/2 equals u.
  // Adding rank t to a (j-1)-subset shifts u by t - j.
  std::vector<std::vector<double>> ways(n1 + 1, std::vector<double>(max_u + 1, 0.0));
  ways[0][0] = 1.0;
  for (std::size_t t = 1; t <= n; ++t) {
    const std::size_t jmax = std::min(n1, t);
    for (std::size_t j = jmax; j >= 1; --j) {
      if (t < j) continue;
      const std::size_t shift = t - j;
      auto& dst = ways[j];
      const auto& src = ways[j - 1];
      for (std::size_t u = max_u + 1; u-- > shift;) dst[u] += src[u - shift];
    }
  }
  return ways[n1];
}

TestResult mann_whitney_u(std::span<const double> x, std::span<const double> y, const MannWhitneyOptions& options) {
  if (x.empty() || y.empty()) throw invalid_argument("mann_whitney_u: both samples must be nonempty");
  const std::size_t n1 = x.size(), n2 = y.size();
  std::vector<double> pooled(x.begin(), x.end());
  pooled.insert(pooled.end(), y.begin(), y.end());
  const auto ranked = midrank(pooled);
  double rank_sum_x = 0.0;
  for (std::size_t i = 0; i < n1; ++i) rank_sum_x += ranked.ranks[i];

  const double d1 = static_cast<double>(n1), d2 = static_cast<double>(n2);
  const double u1 = rank_sum_x - d1 * (d1 + 1.0) / 2.0;
  const double u2 = d1 * d2 - u1;

  TestResult r;
  r.statistic_name = StatisticName::U;
  r.statistic = std::min(u1, u2);
  const double tie_term = ranked.tie_term();
  const bool ties = !ranked.tie_groups.empty();
  r.tie_corrected = ties;

  bool exact = false;
  switch (options.mode) {
    case MannWhitneyMode::Exact:
      if (ties) throw invalid_argument("mann_whitney_u: exact mode requires tie-free data; use normal mode");
      exact = true;
      break;
    case MannWhitneyMode::Auto:
      exact = !ties && std::min(n1, n2) <= 8;
      break;
    case MannWhitneyMode::Normal:
      break;
  }

  if (exact) {
    const auto counts = exact_u_distribution(n1, n2);
    const double u = r.statistic;
    double le = 0.0, ge = 0.0, total = 0.0;
    for (std::size_t v = 0; v < counts.size(); ++v) {
      total += counts[v];
      if (static_cast<double>(v) <= u) le += counts[v];
      if (static_cast<double>(v) >= u) ge += counts[v];
    }
    r.method = TestMethod::ExactEnumeration;
    r.tie_corrected = false;
    r.p_value = std::min(1.0, 2.0 * std::min(le, ge) / total);
    return r;
  }

  const double n = d1 + d2;
  const double mean = d1 * d2 / 2.0;
  const double variance = d1 * d2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
  r.method = TestMethod::NormalApprox;
  if (!(variance > 0.0)) {
    r.z = 0.0;
    r.p_value = 1.0;
    r.degenerate = true;
    r.note = "all observations tied";
    return r;
  }
  const double cc = options.continuity_correction ? 0.5 : 0.0;
  const double deviation = std::max(0.0, std::fabs(r.statistic - mean) - cc);
  r.z = -deviation / std::sqrt(variance);
  r.p_value = std::min(1.0, 2.0 * normal_sf(deviation / std::sqrt(variance)));
  return r;
}

}  // namespace socl::stattests
