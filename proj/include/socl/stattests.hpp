#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace socl::stattests {

struct RankedSample {
  std::vector<double> ranks;           // midranks, aligned with the input
  std::vector<std::size_t> tie_groups;  // multiplicity t of every group with t >= 2

  // Sum of t^3 - t over tie groups.
  double tie_term() const;
};

RankedSample midrank(std::span<const double> values);

enum class StatisticName { H, U };
enum class TestMethod { NormalApprox, ExactEnumeration, ChiSquareApprox };

std::string_view to_string(StatisticName name);
std::string_view to_string(TestMethod method);

struct TestResult {
  StatisticName statistic_name = StatisticName::U;
  double statistic = 0.0;
  std::optional<int> df;  // H only
  std::optional<double> z;
  double p_value = 1.0;
  TestMethod method = TestMethod::NormalApprox;
  bool tie_corrected = false;
  // H=0/p=1 because every observation is tied, or sigma=0 for U.
  bool degenerate = false;
  // False when a sample was too small to test; p_value is then 1.
  bool feasible = true;
  std::string note;
};

enum class KruskalWallisMethod {
  ChiSquare,  // H against chi-square(groups - 1)
  Exact,      // enumerate every assignment of the pooled values to groups
  Auto,       // Exact when the arrangement count is <= kExactArrangementLimit
};

inline constexpr double kExactArrangementLimit = 2.0e5;
// Hard bound on enumerated states for forced exact modes.
inline constexpr double kEnumerationStateLimit = 1.0e7;

TestResult kruskal_wallis(std::span<const std::vector<double>> groups,
                          KruskalWallisMethod method = KruskalWallisMethod::ChiSquare);

enum class MannWhitneyMode { Auto, Exact, Normal };

struct MannWhitneyOptions {
  MannWhitneyMode mode = MannWhitneyMode::Auto;
  bool continuity_correction = true;
};

// Reported U is min(U1, U2); p is two-sided. Auto picks exact enumeration when
// there are no ties and min(n1, n2) <= 8.
TestResult mann_whitney_u(std::span<const double> x, std::span<const double> y,
                          const MannWhitneyOptions& options = {});

// Null frequency of U for tie-free samples of sizes n1, n2: element u counts
// the rank assignments with U1 = u.
std::vector<double> exact_u_distribution(std::size_t n1, std::size_t n2);

// Upper tail of chi-square(df): Q(df/2, x/2).
double chi_square_sf(double x, int df);
// Regularized upper incomplete gamma Q(a, x), a > 0, x >= 0.
double regularized_gamma_q(double a, double x);
// 1 - Phi(z). Underflows to 0 beyond z ~ 38.5.
double normal_sf(double z);

// Holm step-down adjusted p-values, same order as the input.
std::vector<double> holm_adjust(std::span<const double> p_values);

}  // namespace socl::stattests
