#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "socl/ingest.hpp"
#include "socl/matrix.hpp"

namespace socl::features {

// The three clustering variables, in column order.
enum class Variable : std::size_t { Ice = 0, Resp = 1, Solo = 2 };
inline constexpr std::array<Variable, 3> kVariables{Variable::Ice, Variable::Resp, Variable::Solo};
inline constexpr std::size_t kVariableCount = kVariables.size();

std::string_view variable_name(Variable v);  // "n_ice", "n_resp", "n_solo"

struct StudentCounts {
  std::string student_id;
  std::int64_t n_ice = 0;
  std::int64_t n_resp = 0;
  std::int64_t n_solo = 0;

  std::int64_t get(Variable v) const;
  std::int64_t total() const { return n_ice + n_resp + n_solo; }
  bool operator==(const StudentCounts&) const = default;
};

// One row per social student, ascending by student_id.
struct StudentFeatureTable {
  std::vector<StudentCounts> rows;

  std::vector<double> column(Variable v) const;
  std::int64_t column_sum(Variable v) const;
  bool operator==(const StudentFeatureTable&) const = default;
};

StudentFeatureTable aggregate_students(const ingest::CommentLog& log, const ingest::Categorization& categories);

inline constexpr std::string_view kFeatureHeader = "student_id,n_ice,n_resp,n_solo";
void write_feature_table(std::ostream& out, const StudentFeatureTable& table);
StudentFeatureTable parse_feature_table(std::istream& in);

struct DescriptiveStats {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;  // sample (n - 1); 0 for a single observation
  std::optional<double> skewness;         // sample-adjusted G1
  std::optional<double> excess_kurtosis;  // sample-adjusted G2
  std::string skewness_absent_reason;
  std::string kurtosis_absent_reason;
};

DescriptiveStats descriptive_stats(std::span<const double> values);

// Midrank-then-Pearson. Absent when either sequence is constant.
std::optional<double> spearman_rho(std::span<const double> x, std::span<const double> y);

enum class DenominatorPolicy {
  AllSocialStudents,  // zeros included
  PostersOfTypeOnly,  // only rows with count >= 1 for that variable
};

std::string_view to_string(DenominatorPolicy policy);

struct FeatureSummary {
  DenominatorPolicy policy = DenominatorPolicy::AllSocialStudents;
  std::array<DescriptiveStats, kVariableCount> per_variable;
  // Spearman correlation over all rows, indexed by Variable.
  std::array<std::array<std::optional<double>, kVariableCount>, kVariableCount> spearman;
};

FeatureSummary summarize_features(const StudentFeatureTable& table, DenominatorPolicy policy);

struct FeatureMatrix {
  std::vector<std::string> student_ids;
  Matrix values;  // z-scores, rows aligned with student_ids
  std::array<double, kVariableCount> column_means{};
  std::array<double, kVariableCount> column_sds{};

  // Maps z-scores back onto the raw count scale.
  Matrix unstandardize() const;
};

// Rows are sorted ascending by student_id before standardizing.
FeatureMatrix standardize(const StudentFeatureTable& table);

// The table with rows in the order standardize() uses.
StudentFeatureTable canonical_order(StudentFeatureTable table);

}  // namespace socl::features
