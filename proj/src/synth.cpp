#include "socl/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include "socl/errors.hpp"

namespace socl::synth {
namespace {

using features::Variable;

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& text, std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError(line, "not a number: '" + text + "'");
  }
  return v;
}

template <class Int>
Int parse_integer(const std::string& text, std::size_t line) {
  Int v{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError(line, "not an integer: '" + text + "'");
  }
  return v;
}

// "negbin(r, p)", "lognormal(mu, sigma)", "constant(c)"
CountDistribution parse_distribution(const std::string& text, std::size_t line) {
  const auto open = text.find('(');
  const auto close = text.rfind(')');
  if (open == std::string::npos || close == std::string::npos || close < open || trim(text.substr(close + 1)) != "") {
    throw ParseError(line, "expected distribution like negbin(r, p): '" + text + "'");
  }
  const std::string name = trim(text.substr(0, open));
  std::vector<std::string> args;
  std::stringstream ss(text.substr(open + 1, close - open - 1));
  for (std::string a; std::getline(ss, a, ',');) args.push_back(trim(a));
  auto want = [&](std::size_t n) {
    if (args.size() != n) throw ParseError(line, name + " takes " + std::to_string(n) + " argument(s)");
  };
  if (name == "negbin") {
    want(2);
    return NegativeBinomial{parse_double(args[0], line), parse_double(args[1], line)};
  }
  if (name == "lognormal") {
    want(2);
    return LognormalRounded{parse_double(args[0], line), parse_double(args[1], line)};
  }
  if (name == "constant") {
    want(1);
    return Constant{parse_integer<std::int64_t>(args[0], line)};
  }
  throw ParseError(line, "unknown distribution '" + name + "'");
}

void validate_distribution(const CountDistribution& d, const std::string& where) {
  if (const auto* nb = std::get_if<NegativeBinomial>(&d)) {
    if (!(nb->r > 0.0) || !(nb->p > 0.0 && nb->p <= 1.0)) {
      throw invalid_argument(where + ": negbin needs r > 0 and 0 < p <= 1");
    }
  } else if (const auto* ln = std::get_if<LognormalRounded>(&d)) {
    if (!std::isfinite(ln->mu) || !(ln->sigma >= 0.0) || !std::isfinite(ln->sigma)) {
      throw invalid_argument(where + ": lognormal needs finite mu and sigma >= 0");
    }
  } else if (std::get<Constant>(d).value < 0) {
    throw invalid_argument(where + ": constant must be non-negative");
  }
}

bool always_zero(const CountDistribution& d) {
  if (const auto* c = std::get_if<Constant>(&d)) return c->value == 0;
  if (const auto* nb = std::get_if<NegativeBinomial>(&d)) return nb->p == 1.0;
  return false;
}

std::int64_t draw(const CountDistribution& d, std::mt19937_64& rng) {
  if (const auto* nb = std::get_if<NegativeBinomial>(&d)) {
    if (nb->p == 1.0) return 0;
    std::gamma_distribution<double> gamma(nb->r, (1.0 - nb->p) / nb->p);
    const double lambda = gamma(rng);
    if (!(lambda > 0.0)) return 0;
    std::poisson_distribution<std::int64_t> poisson(lambda);
    return poisson(rng);
  }
  if (const auto* ln = std::get_if<LognormalRounded>(&d)) {
    std::normal_distribution<double> normal(ln->mu, ln->sigma);
    return static_cast<std::int64_t>(std::llround(std::exp(normal(rng))));
  }
  return std::get<Constant>(d).value;
}

std::string student_id(std::size_t i, std::size_t n) {
  const int width = static_cast<int>(std::to_string(n).size());
  char buf[32];
  std::snprintf(buf, sizeof buf, "s%0*zu", width, i + 1);
  return buf;
}

}  // namespace

std::string describe(const CountDistribution& d) {
  if (const auto* nb = std::get_if<NegativeBinomial>(&d)) {
    return "negbin(" + format_number(nb->r) + ", " + format_number(nb->p) + ")";
  }
  if (const auto* ln = std::get_if<LognormalRounded>(&d)) {
    return "lognormal(" + format_number(ln->mu) + ", " + format_number(ln->sigma) + ")";
  }
  return "constant(" + std::to_string(std::get<Constant>(d).value) + ")";
}

void CohortSpec::validate() const {
  if (personas.empty()) throw invalid_argument("cohort spec: no personas");
  if (n_students < personas.size()) throw invalid_argument("cohort spec: n_students is below the persona count");
  double total = 0.0;
  for (const auto& p : personas) {
    if (!(p.proportion > 0.0 && p.proportion <= 1.0)) {
      throw invalid_argument("cohort spec: persona '" + p.name + "' proportion must be in (0, 1]");
    }
    total += p.proportion;
    bool all_zero = true;
    for (auto v : features::kVariables) {
      const auto& d = p.counts[static_cast<std::size_t>(v)];
      validate_distribution(d, "persona '" + p.name + "' " + std::string(features::variable_name(v)));
      all_zero = all_zero && always_zero(d);
    }
    if (all_zero) throw invalid_argument("cohort spec: persona '" + p.name + "' can never post a comment");
  }
  if (std::fabs(total - 1.0) > 1e-9) {
    throw invalid_argument("cohort spec: persona proportions sum to " + format_number(total) + ", not 1");
  }
}

CohortSpec parse_cohort_spec(std::istream& in) {
  CohortSpec spec;
  std::map<std::string, std::size_t> persona_index;
  bool have_n = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (key == "n_students") {
      spec.n_students = parse_integer<std::size_t>(value, line_no);
      have_n = true;
    } else if (key == "seed") {
      spec.seed = parse_integer<std::uint64_t>(value, line_no);
    } else if (key == "emit") {
      if (value == "comment-log") {
        spec.emit = EmitKind::CommentLog;
      } else if (value == "feature-table") {
        spec.emit = EmitKind::FeatureTable;
      } else {
        throw ParseError(line_no, "emit must be comment-log or feature-table");
      }
    } else if (key == "strict") {
      if (value != "true" && value != "false") throw ParseError(line_no, "strict must be true or false");
      spec.strict = value == "true";
    } else if (key == "course_id") {
      spec.course_id = value;
    } else if (key.rfind("persona.", 0) == 0) {
      const auto rest = key.substr(8);
      const auto dot = rest.rfind('.');
      if (dot == std::string::npos || dot == 0) throw ParseError(line_no, "expected persona.<name>.<field>");
      const std::string name = rest.substr(0, dot);
      const std::string field = rest.substr(dot + 1);
      auto [it, inserted] = persona_index.emplace(name, spec.personas.size());
      if (inserted) {
        spec.personas.emplace_back();
        spec.personas.back().name = name;
      }
      auto& persona = spec.personas[it->second];
      if (field == "proportion") {
        persona.proportion = parse_double(value, line_no);
      } else if (field == "n_ice") {
        persona.counts[static_cast<std::size_t>(Variable::Ice)] = parse_distribution(value, line_no);
      } else if (field == "n_resp") {
        persona.counts[static_cast<std::size_t>(Variable::Resp)] = parse_distribution(value, line_no);
      } else if (field == "n_solo") {
        persona.counts[static_cast<std::size_t>(Variable::Solo)] = parse_distribution(value, line_no);
      } else {
        throw ParseError(line_no, "unknown persona field '" + field + "'");
      }
    } else {
      throw ParseError(line_no, "unknown key '" + key + "'");
    }
  }
  if (!have_n) throw ParseError(line_no, "missing n_students");
  spec.validate();
  return spec;
}

CohortSpec read_cohort_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open cohort spec '" + path.string() + "'");
  return parse_cohort_spec(in);
}

void write_cohort_spec(std::ostream& out, const CohortSpec& spec) {
  out << "n_students = " << spec.n_students << '\n'
      << "seed = " << spec.seed << '\n'
      << "emit = " << (spec.emit == EmitKind::CommentLog ? "comment-log" : "feature-table") << '\n'
      << "strict = " << (spec.strict ? "true" : "false") << '\n'
      << "course_id = " << spec.course_id << '\n';
  for (const auto& p : spec.personas) {
    out << "persona." << p.name << ".proportion = " << format_number(p.proportion) << '\n';
    for (auto v : features::kVariables) {
      out << "persona." << p.name << '.' << features::variable_name(v) << " = "
          << describe(p.counts[static_cast<std::size_t>(v)]) << '\n';
    }
  }
}

SyntheticCohort generate_features(const CohortSpec& spec) {
  spec.validate();
  const std::size_t n = spec.n_students;
  const std::size_t m = spec.personas.size();

  // Largest-remainder apportionment of students to personas.
  std::vector<std::size_t> quota(m);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t p = 0; p < m; ++p) {
    const double exact = spec.personas[p].proportion * static_cast<double>(n);
    quota[p] = static_cast<std::size_t>(std::floor(exact));
    assigned += quota[p];
    remainders.emplace_back(exact - std::floor(exact), p);
  }
  std::stable_sort(remainders.begin(), remainders.end(), [](auto& a, auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++quota[remainders[i % m].second];

  std::mt19937_64 rng(spec.seed);
  std::vector<std::size_t> persona_of;
  persona_of.reserve(n);
  for (std::size_t p = 0; p < m; ++p) persona_of.insert(persona_of.end(), quota[p], p);
  for (std::size_t i = n; i-- > 1;) std::swap(persona_of[i], persona_of[static_cast<std::size_t>(rng() % (i + 1))]);

  SyntheticCohort cohort;
  cohort.table.rows.reserve(n);
  cohort.persona = persona_of;
  constexpr int kMaxRedraws = 10000;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& persona = spec.personas[persona_of[i]];
    features::StudentCounts row;
    row.student_id = student_id(i, n);
    for (int attempt = 0;; ++attempt) {
      if (attempt == kMaxRedraws) {
        throw Error(ErrorKind::Infeasible, "persona '" + persona.name + "' keeps drawing students with no comments");
      }
      row.n_ice = draw(persona.counts[0], rng);
      row.n_resp = draw(persona.counts[1], rng);
      row.n_solo = draw(persona.counts[2], rng);
      if (row.total() >= 1) break;
    }
    cohort.table.rows.push_back(std::move(row));
  }
  return cohort;
}

ingest::CommentLog build_comment_log(features::StudentFeatureTable& table, const LogBuildOptions& options,
                                     std::vector<std::string>& rebalancing) {
  auto& rows = table.rows;
  std::int64_t ice = table.column_sum(Variable::Ice);
  std::int64_t resp = table.column_sum(Variable::Resp);
  const bool feasible = (ice == 0 && resp == 0) || (ice >= 1 && resp >= ice);
  if (!feasible) {
    if (options.strict) {
      throw Error(ErrorKind::Infeasible, "infeasible reply budget: " + std::to_string(ice) +
                                             " ice-breaking comments need at least " + std::to_string(ice) +
                                             " replies, responding budget is " + std::to_string(resp));
    }
    auto busiest = [&](auto member) {
      return std::max_element(rows.begin(), rows.end(), [&](const auto& a, const auto& b) { return a.*member < b.*member; });
    };
    while (ice > resp) {
      auto it = busiest(&features::StudentCounts::n_ice);
      const std::int64_t moved = std::min(it->n_ice, ice - resp);
      it->n_ice -= moved;
      it->n_solo += moved;
      ice -= moved;
      rebalancing.push_back("student " + it->student_id + ": " + std::to_string(moved) +
                            " ice-breaking comment(s) recast as solo (too few replies to go round)");
    }
    if (ice == 0 && resp > 0) {
      auto it = busiest(&features::StudentCounts::n_solo);
      if (it->n_solo > 0) {
        --it->n_solo;
        ++it->n_ice;
        ice = 1;
        rebalancing.push_back("student " + it->student_id + ": 1 solo comment recast as ice-breaking (replies need a thread)");
      } else {
        it = busiest(&features::StudentCounts::n_resp);
        --it->n_resp;
        --resp;
        if (resp > 0) {
          ++it->n_ice;
          ice = 1;
          rebalancing.push_back("student " + it->student_id +
                                ": 1 responding comment recast as ice-breaking (replies need a thread)");
        } else {
          ++it->n_solo;
          rebalancing.push_back("student " + it->student_id + ": lone responding comment recast as solo");
        }
      }
    }
  }

  ingest::CommentLog log;
  log.course_id = options.course_id;
  const std::size_t total_comments = static_cast<std::size_t>(ice + resp + table.column_sum(Variable::Solo));
  log.comments.reserve(total_comments);
  const int id_width = static_cast<int>(std::to_string(std::max<std::size_t>(total_comments, 1)).size());
  const auto base = ingest::Timestamp{std::chrono::sys_days{std::chrono::year{2019} / 1 / 7}};

  auto add = [&](const std::string& author, std::optional<std::string> parent, int week, int step) -> std::string {
    const std::size_t i = log.comments.size();
    char buf[32];
    std::snprintf(buf, sizeof buf, "c%0*zu", id_width, i + 1);
    ingest::Comment c;
    c.comment_id = buf;
    c.author_id = author;
    c.parent_id = std::move(parent);
    c.week = week;
    c.step = step;
    c.timestamp = base + std::chrono::minutes{static_cast<long long>(i)};
    log.comments.push_back(std::move(c));
    return log.comments.back().comment_id;
  };

  std::vector<std::size_t> ice_comments;  // indices into log.comments
  for (const auto& row : rows) {
    for (std::int64_t j = 0; j < row.n_ice + row.n_solo; ++j) {
      const std::size_t i = log.comments.size();
      if (j < row.n_ice) ice_comments.push_back(i);
      add(row.student_id, std::nullopt, static_cast<int>(1 + i % 10), static_cast<int>(1 + i % 13));
    }
  }

  std::vector<std::int64_t> budget;
  budget.reserve(rows.size());
  for (const auto& row : rows) budget.push_back(row.n_resp);
  std::size_t cursor = 0;
  auto next_replier = [&]() -> std::size_t {
    while (budget[cursor % rows.size()] == 0) ++cursor;
    const std::size_t s = cursor % rows.size();
    --budget[s];
    ++cursor;
    return s;
  };
  for (std::int64_t r = 0; r < resp; ++r) {
    const std::size_t target = ice_comments[static_cast<std::size_t>(r) % ice_comments.size()];
    const std::string parent = log.comments[target].comment_id;
    const int week = log.comments[target].week, step = log.comments[target].step;
    add(rows[next_replier()].student_id, parent, week, step);
  }
  return log;
}

SyntheticLog generate_comment_log(const CohortSpec& spec) {
  SyntheticLog out;
  out.planted = generate_features(spec);
  out.log = build_comment_log(out.planted.table, {spec.strict, spec.course_id}, out.rebalancing);
  return out;
}

}  // namespace socl::synth
