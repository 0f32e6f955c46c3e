#pragma once

// Reference implementations used only by tests. They share no code with the
// library: ranks, moments and special functions are recomputed from their
// textbook definitions, in extended precision where rounding matters.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

namespace oracle {

using Big = boost::multiprecision::cpp_bin_float_50;

struct Moments {
  double skewness;
  double excess_kurtosis;
};

// G1 and G2 evaluated literally in 50-digit arithmetic, z = (x - mean) / sd.
inline Moments sample_moments(std::span<const double> xs) {
  const std::size_t count = xs.size();
  const Big n = count;
  Big sum = 0;
  for (double x : xs) sum += Big(x);
  const Big mean = sum / n;
  Big ss = 0;
  for (double x : xs) ss += (Big(x) - mean) * (Big(x) - mean);
  const Big sd = boost::multiprecision::sqrt(ss / (n - 1));
  Big z3 = 0;
  Big z4 = 0;
  for (double x : xs) {
    const Big z = (Big(x) - mean) / sd;
    z3 += z * z * z;
    z4 += z * z * z * z;
  }
  const Big g1 = n / ((n - 1) * (n - 2)) * z3;
  const Big g2 = n * (n + 1) / ((n - 1) * (n - 2) * (n - 3)) * z4 - 3 * (n - 1) * (n - 1) / ((n - 2) * (n - 3));
  return {static_cast<double>(g1), static_cast<double>(g2)};
}

// Gamma(df/2 + 1) by the recurrence from Gamma(1) or Gamma(1/2).
inline Big gamma_half_plus_one(int df) {
  Big g = (df % 2 == 0) ? Big(1) : boost::multiprecision::sqrt(boost::math::constants::pi<Big>());
  for (int twice = (df % 2 == 0) ? 2 : 1; twice <= df; twice += 2) g *= Big(twice) / 2;
  return g;
}

// Q(df/2, x/2) = 1 - P, with P from its power series. Absolute error is far
// below 1e-30 for x <= 1000.
inline double chi_square_sf_series(double x, int df) {
  if (x == 0.0) return 1.0;
  const Big a = Big(df) / 2;
  const Big h = Big(x) / 2;
  // P(a, h) = h^a e^-h / Gamma(a+1) * sum_n h^n / ((a+1)...(a+n))
  Big sum = 1;
  Big term = 1;
  for (int k = 1; k < 100000; ++k) {
    term *= h / (a + k);
    sum += term;
    if (term < sum * Big("1e-45")) break;
  }
  const Big p = boost::multiprecision::exp(a * boost::multiprecision::log(h) - h) / gamma_half_plus_one(df) * sum;
  return static_cast<double>(1 - p);
}

// Q(a, x) from the Legendre continued fraction, evaluated bottom-up with a
// fixed depth. Only meaningful for x > a + 1.
inline double chi_square_sf_continued_fraction(double x, int df) {
  const Big a = Big(df) / 2;
  const Big h = Big(x) / 2;
  // Q = e^-h h^a / Gamma(a) * 1 / (h + 1 - a - 1(1-a)/(h + 3 - a - 2(2-a)/(h + 5 - a - ...)))
  const int depth = 4000;
  Big tail = 0;
  for (int i = depth; i >= 1; --i) {
    const Big b = h + 2 * i + 1 - a;
    tail = Big(i) * (Big(i) - a) / (b - tail);
  }
  const Big cf = 1 / (h + 1 - a - tail);
  const Big gamma_a = gamma_half_plus_one(df) / a;
  return static_cast<double>(boost::multiprecision::exp(a * boost::multiprecision::log(h) - h) / gamma_a * cf);
}

// Two-sided exact p for U1 = u over every choice of n1 ranks from 1..n1+n2.
struct UEnumeration {
  std::vector<std::uint64_t> frequency;  // frequency[u] = subsets with U1 = u
  std::vector<std::vector<int>> witness; // one rank subset per reachable u
  std::uint64_t total = 0;
};

inline UEnumeration enumerate_u(int n1, int n2) {
  const int n = n1 + n2;
  UEnumeration e;
  e.frequency.assign(static_cast<std::size_t>(n1 * n2 + 1), 0);
  e.witness.assign(e.frequency.size(), {});
  std::vector<int> pick(static_cast<std::size_t>(n), 0);
  std::fill(pick.begin(), pick.begin() + n1, 1);
  // prev_permutation over a sorted-descending mask visits every subset once.
  do {
    int rank_sum = 0;
    std::vector<int> ranks;
    for (int i = 0; i < n; ++i) {
      if (pick[static_cast<std::size_t>(i)]) {
        rank_sum += i + 1;
        ranks.push_back(i + 1);
      }
    }
    const int u = rank_sum - n1 * (n1 + 1) / 2;
    auto& f = e.frequency[static_cast<std::size_t>(u)];
    if (f == 0) e.witness[static_cast<std::size_t>(u)] = ranks;
    ++f;
    ++e.total;
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return e;
}

inline double exact_two_sided_p(const UEnumeration& e, int u) {
  std::uint64_t le = 0;
  std::uint64_t ge = 0;
  for (std::size_t i = 0; i < e.frequency.size(); ++i) {
    if (static_cast<int>(i) <= u) le += e.frequency[i];
    if (static_cast<int>(i) >= u) ge += e.frequency[i];
  }
  return std::min(1.0, 2.0 * static_cast<double>(std::min(le, ge)) / static_cast<double>(e.total));
}

// Textbook tie-corrected H from explicit midranks.
inline double kruskal_h(const std::vector<std::vector<double>>& groups) {
  std::vector<std::pair<double, std::size_t>> pooled;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (double v : groups[g]) pooled.emplace_back(v, g);
  }
  std::sort(pooled.begin(), pooled.end());
  const double n = static_cast<double>(pooled.size());
  std::vector<double> rank_sum(groups.size(), 0.0);
  double ties = 0.0;
  for (std::size_t i = 0; i < pooled.size();) {
    std::size_t j = i;
    while (j < pooled.size() && pooled[j].first == pooled[i].first) ++j;
    const double mid = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t t = i; t < j; ++t) rank_sum[pooled[t].second] += mid;
    const double t = static_cast<double>(j - i);
    ties += t * t * t - t;
    i = j;
  }
  double s = 0.0;
  for (std::size_t g = 0; g < groups.size(); ++g) s += rank_sum[g] * rank_sum[g] / static_cast<double>(groups[g].size());
  const double h = 12.0 / (n * (n + 1.0)) * s - 3.0 * (n + 1.0);
  return h / (1.0 - ties / (n * n * n - n));
}

// Monte Carlo permutation p-value: share of random relabellings with H at
// least the observed value.
inline double kruskal_permutation_p(const std::vector<std::vector<double>>& groups, int draws, std::uint64_t seed) {
  const double observed = kruskal_h(groups);
  std::vector<double> pooled;
  for (const auto& g : groups) pooled.insert(pooled.end(), g.begin(), g.end());
  std::mt19937_64 rng(seed);
  std::vector<std::vector<double>> shuffled(groups.size());
  int extreme = 0;
  for (int d = 0; d < draws; ++d) {
    std::shuffle(pooled.begin(), pooled.end(), rng);
    std::size_t pos = 0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      shuffled[g].assign(pooled.begin() + static_cast<std::ptrdiff_t>(pos),
                         pooled.begin() + static_cast<std::ptrdiff_t>(pos + groups[g].size()));
      pos += groups[g].size();
    }
    if (kruskal_h(shuffled) >= observed - 1e-9) ++extreme;
  }
  return static_cast<double>(extreme) / draws;
}

// Minimum WCSS over every assignment of rows to k labels (each label used).
inline double exhaustive_min_wcss(const std::vector<std::vector<double>>& rows, std::size_t k) {
  const std::size_t n = rows.size();
  const std::size_t d = rows.front().size();
  std::vector<std::size_t> label(n, 0);
  double best = INFINITY;
  while (true) {
    std::vector<std::size_t> size(k, 0);
    std::vector<std::vector<double>> sum(k, std::vector<double>(d, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      ++size[label[i]];
      for (std::size_t j = 0; j < d; ++j) sum[label[i]][j] += rows[i][j];
    }
    if (std::all_of(size.begin(), size.end(), [](auto s) { return s > 0; })) {
      double w = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
          const double c = sum[label[i]][j] / static_cast<double>(size[label[i]]);
          w += (rows[i][j] - c) * (rows[i][j] - c);
        }
      }
      best = std::min(best, w);
    }
    std::size_t pos = 0;
    while (pos < n && ++label[pos] == k) label[pos++] = 0;
    if (pos == n) break;
  }
  return best;
}

// Pearson correlation of explicit midranks.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      double less = 0.0;
      double equal = 0.0;
      for (double w : v) {
        if (w < v[i]) less += 1.0;
        if (w == v[i]) equal += 1.0;
      }
      r[i] = less + (equal + 1.0) / 2.0;
    }
    return r;
  };
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace oracle
