#include "socl/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <unordered_set>

#include "socl/errors.hpp"
#include "socl/stattests.hpp"

namespace socl::features {

std::string_view variable_name(Variable v) {
  switch (v) {
    case Variable::Ice:
      return "n_ice";
    case Variable::Resp:
      return "n_resp";
    case Variable::Solo:
      return "n_solo";
  }
  return "?";
}

std::string_view to_string(DenominatorPolicy policy) {
  return policy == DenominatorPolicy::AllSocialStudents ? "all-social-students" : "posters-of-type-only";
}

std::int64_t StudentCounts::get(Variable v) const {
  switch (v) {
    case Variable::Ice:
      return n_ice;
    case Variable::Resp:
      return n_resp;
    case Variable::Solo:
      return n_solo;
  }
  return 0;
}

std::vector<double> StudentFeatureTable::column(Variable v) const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(static_cast<double>(r.get(v)));
  return out;
}

std::int64_t StudentFeatureTable::column_sum(Variable v) const {
  std::int64_t s = 0;
  for (const auto& r : rows) s += r.get(v);
  return s;
}

StudentFeatureTable aggregate_students(const ingest::CommentLog& log, const ingest::Categorization& categories) {
  std::map<std::string, StudentCounts> by_author;
  for (const auto& c : log.comments) {
    auto it = categories.find(c.comment_id);
    if (it == categories.end()) {
      throw invalid_argument("categorization does not cover comment '" + c.comment_id + "'");
    }
    auto& row = by_author[c.author_id];
    row.student_id = c.author_id;
    switch (it->second) {
      case ingest::CommentCategory::IceBreaking:
        ++row.n_ice;
        break;
      case ingest::CommentCategory::Responding:
        ++row.n_resp;
        break;
      case ingest::CommentCategory::Solo:
        ++row.n_solo;
        break;
    }
  }
  StudentFeatureTable table;
  table.rows.reserve(by_author.size());
  for (auto& [id, row] : by_author) table.rows.push_back(std::move(row));
  return table;
}

void write_feature_table(std::ostream& out, const StudentFeatureTable& table) {
  out << kFeatureHeader << '\n';
  for (const auto& r : table.rows) {
    out << r.student_id << ',' << r.n_ice << ',' << r.n_resp << ',' << r.n_solo << '\n';
  }
}

StudentFeatureTable parse_feature_table(std::istream& in) {
  StudentFeatureTable table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::unordered_set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!have_header) {
      if (line != kFeatureHeader) throw ParseError(line_no, "expected header '" + std::string(kFeatureHeader) + "'");
      have_header = true;
      continue;
    }
    std::vector<std::string_view> fields;
    std::string_view rest = line;
    for (;;) {
      auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (fields.size() != 4) throw ParseError(line_no, "expected 4 columns, found " + std::to_string(fields.size()));
    StudentCounts row;
    row.student_id = std::string(fields[0]);
    if (row.student_id.empty()) throw ParseError(line_no, "empty student_id");
    std::int64_t* targets[] = {&row.n_ice, &row.n_resp, &row.n_solo};
    for (std::size_t i = 0; i < 3; ++i) {
      const auto f = fields[i + 1];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), *targets[i]);
      if (f.empty() || ec != std::errc() || ptr != f.data() + f.size() || *targets[i] < 0) {
        throw ParseError(line_no, "not a non-negative count: '" + std::string(f) + "'");
      }
    }
    if (row.total() < 1) throw ParseError(line_no, "student '" + row.student_id + "' has no comments");
    if (!seen.insert(row.student_id).second) {
      throw Error(ErrorKind::DataIntegrity, "line " + std::to_string(line_no) + ": duplicate student_id '" +
                                                row.student_id + "'");
    }
    table.rows.push_back(std::move(row));
  }
  if (!have_header) throw ParseError(1, "missing header row");
  return canonical_order(std::move(table));
}

DescriptiveStats descriptive_stats(std::span<const double> values) {
  if (values.empty()) throw invalid_argument("descriptive_stats needs at least one value");
  DescriptiveStats s;
  s.n = values.size();
  const long double n = static_cast<long double>(s.n);

  long double sum = 0;
  for (double x : values) sum += x;
  long double mean = sum / n;
  // Second pass removes the rounding residue of the first.
  long double resid = 0;
  for (double x : values) resid += x - mean;
  mean += resid / n;
  s.mean = static_cast<double>(mean);

  long double m2 = 0, m3 = 0, m4 = 0;
  for (double x : values) {
    const long double d = x - mean;
    const long double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  const long double sd = s.n > 1 ? std::sqrt(m2 / (n - 1)) : 0.0L;
  s.sd = static_cast<double>(sd);

  if (s.n < 3) {
    s.skewness_absent_reason = "needs n >= 3";
  } else if (sd == 0) {
    s.skewness_absent_reason = "zero standard deviation";
  } else {
    const long double z3 = m3 / (sd * sd * sd);
    s.skewness = static_cast<double>(n / ((n - 1) * (n - 2)) * z3);
  }
  if (s.n < 4) {
    s.kurtosis_absent_reason = "needs n >= 4";
  } else if (sd == 0) {
    s.kurtosis_absent_reason = "zero standard deviation";
  } else {
    const long double z4 = m4 / (sd * sd * sd * sd);
    s.excess_kurtosis = static_cast<double>(n * (n + 1) / ((n - 1) * (n - 2) * (n - 3)) * z4 -
                                            3 * (n - 1) * (n - 1) / ((n - 2) * (n - 3)));
  }
  return s;
}

std::optional<double> spearman_rho(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw invalid_argument("spearman_rho: length mismatch (" + std::to_string(x.size()) + " vs " +
                           std::to_string(y.size()) + ")");
  }
  if (x.size() < 2) throw invalid_argument("spearman_rho needs at least two pairs");
  const auto rx = stattests::midrank(x).ranks;
  const auto ry = stattests::midrank(y).ranks;
  const long double n = static_cast<long double>(rx.size());
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const long double dx = rx[i] - mx, dy = ry[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0 || syy == 0) return std::nullopt;
  const double r = static_cast<double>(sxy / std::sqrt(sxx * syy));
  return std::clamp(r, -1.0, 1.0);
}

FeatureSummary summarize_features(const StudentFeatureTable& table, DenominatorPolicy policy) {
  if (table.rows.empty()) throw invalid_argument("feature summary needs at least one student");
  FeatureSummary summary;
  summary.policy = policy;
  std::array<std::vector<double>, kVariableCount> columns;
  for (auto v : kVariables) columns[static_cast<std::size_t>(v)] = table.column(v);

  for (auto v : kVariables) {
    const auto& col = columns[static_cast<std::size_t>(v)];
    if (policy == DenominatorPolicy::AllSocialStudents) {
      summary.per_variable[static_cast<std::size_t>(v)] = descriptive_stats(col);
    } else {
      std::vector<double> posters;
      std::copy_if(col.begin(), col.end(), std::back_inserter(posters), [](double x) { return x >= 1.0; });
      if (posters.empty()) {
        DescriptiveStats empty;
        empty.skewness_absent_reason = empty.kurtosis_absent_reason = "no posters of this type";
        summary.per_variable[static_cast<std::size_t>(v)] = empty;
      } else {
        summary.per_variable[static_cast<std::size_t>(v)] = descriptive_stats(posters);
      }
    }
  }
  for (std::size_t a = 0; a < kVariableCount; ++a) {
    for (std::size_t b = 0; b < kVariableCount; ++b) {
      summary.spearman[a][b] = columns[a].size() >= 2 ? spearman_rho(columns[a], columns[b]) : std::nullopt;
    }
  }
  return summary;
}

StudentFeatureTable canonical_order(StudentFeatureTable table) {
  std::sort(table.rows.begin(), table.rows.end(),
            [](const StudentCounts& a, const StudentCounts& b) { return a.student_id < b.student_id; });
  return table;
}

FeatureMatrix standardize(const StudentFeatureTable& input) {
  if (input.rows.size() < 2) throw Error(ErrorKind::Standardization, "standardization needs at least two students");
  const auto table = canonical_order(input);
  const std::size_t n = table.rows.size();

  FeatureMatrix fm;
  fm.student_ids.reserve(n);
  for (const auto& r : table.rows) fm.student_ids.push_back(r.student_id);
  fm.values = Matrix(n, kVariableCount);

  for (auto v : kVariables) {
    const std::size_t j = static_cast<std::size_t>(v);
    const auto col = table.column(v);
    long double sum = 0;
    for (double x : col) sum += x;
    const long double mean = sum / n;
    long double ss = 0;
    for (double x : col) ss += (x - mean) * (x - mean);
    const long double sd = std::sqrt(ss / (n - 1));
    if (sd == 0) {
      throw Error(ErrorKind::Standardization, "constant column " + std::string(variable_name(v)));
    }
    fm.column_means[j] = static_cast<double>(mean);
    fm.column_sds[j] = static_cast<double>(sd);
    for (std::size_t i = 0; i < n; ++i) fm.values(i, j) = static_cast<double>((col[i] - mean) / sd);
  }
  return fm;
}

Matrix FeatureMatrix::unstandardize() const {
  Matrix raw(values.rows(), values.cols());
  for (std::size_t i = 0; i < values.rows(); ++i) {
    for (std::size_t j = 0; j < values.cols(); ++j) raw(i, j) = values(i, j) * column_sds[j] + column_means[j];
  }
  return raw;
}

}  // namespace socl::features
