#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "socl/features.hpp"
#include "socl/ingest.hpp"

namespace socl::synth {

// Failures before the r-th success with success probability p; drawn as a
// gamma-Poisson mixture so r may be fractional. Mean r (1 - p) / p.
struct NegativeBinomial {
  double r = 1.0;
  double p = 0.5;
};

// round(exp(X)) with X ~ N(mu, sigma^2).
struct LognormalRounded {
  double mu = 0.0;
  double sigma = 1.0;
};

struct Constant {
  std::int64_t value = 0;
};

using CountDistribution = std::variant<NegativeBinomial, LognormalRounded, Constant>;

std::string describe(const CountDistribution& d);

struct PersonaSpec {
  std::string name;
  double proportion = 1.0;
  // Indexed by features::Variable: n_ice, n_resp, n_solo.
  std::array<CountDistribution, features::kVariableCount> counts{Constant{1}, Constant{0}, Constant{0}};
};

enum class EmitKind { FeatureTable, CommentLog };

struct CohortSpec {
  std::size_t n_students = 0;
  std::vector<PersonaSpec> personas;
  std::uint64_t seed = 0;
  EmitKind emit = EmitKind::CommentLog;
  // Reject infeasible reply budgets instead of rebalancing them.
  bool strict = false;
  std::string course_id = "synthetic";

  void validate() const;
};

// Plain-text key = value format; '#' starts a comment. See data/forum_mimic.spec.
CohortSpec parse_cohort_spec(std::istream& in);
CohortSpec read_cohort_spec(const std::filesystem::path& path);
void write_cohort_spec(std::ostream& out, const CohortSpec& spec);

struct SyntheticCohort {
  features::StudentFeatureTable table;  // ascending by student_id
  std::vector<std::size_t> persona;     // index into spec.personas, aligned with table rows
};

SyntheticCohort generate_features(const CohortSpec& spec);

struct SyntheticLog {
  ingest::CommentLog log;
  // Counts the log reproduces; differs from the drawn table only after rebalancing.
  SyntheticCohort planted;
  std::vector<std::string> rebalancing;
};

SyntheticLog generate_comment_log(const CohortSpec& spec);

struct LogBuildOptions {
  bool strict = false;
  std::string course_id = "synthetic";
};

// Builds a comment log that re-categorizes to `table`. Every ice-breaking
// comment gets at least one reply; replies are handed out round-robin over
// students with responding budget left. Without strict mode an infeasible
// table is rebalanced in place and each change is appended to `rebalancing`.
ingest::CommentLog build_comment_log(features::StudentFeatureTable& table, const LogBuildOptions& options,
                                     std::vector<std::string>& rebalancing);

}  // namespace socl::synth
